#include "qtherm/io.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "qtherm/errors.hpp"

namespace qtherm {

namespace fs = std::filesystem;

void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    static std::atomic<unsigned> counter{0};
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot open " + tmp.string() + " for writing");
        body(out);
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw ConfigError("failed writing " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

void write_atomic(const fs::path& path, const std::string& contents) {
    write_atomic(path, [&](std::ostream& out) { out.write(contents.data(), static_cast<std::streamsize>(contents.size())); });
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

std::string hex64(std::uint64_t x) {
    char buf[17];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x, 16);
    std::string s(buf, end);
    return std::string(16 - s.size(), '0') + s;
}

CsvTable::CsvTable(std::vector<std::string> header) : n_cols_(header.size()) {
    row(header);
    n_rows_ = 0;
}

CsvTable& CsvTable::row(std::initializer_list<double> values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v));
    return row(cells);
}

CsvTable& CsvTable::row(const std::vector<std::string>& cells) {
    if (cells.size() != n_cols_) throw ConfigError("CSV row has the wrong number of columns");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) text_ += ',';
        text_ += cells[i];
    }
    text_ += '\n';
    ++n_rows_;
    return *this;
}

std::string CsvTable::str() const { return text_; }

}  // namespace qtherm
