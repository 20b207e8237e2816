#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <vector>

namespace qtherm {

/// Writes through a temporary file in the same directory, then renames it
/// over `path`, so readers never observe a partial file.
void write_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);
void write_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_text(const std::filesystem::path& path);

/// Shortest round-trip decimal form; identical across runs and platforms.
std::string format_number(double x);
std::string hex64(std::uint64_t x);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);
    CsvTable& row(std::initializer_list<double> values);
    CsvTable& row(const std::vector<std::string>& cells);
    std::string str() const;
    std::size_t rows() const { return n_rows_; }

private:
    std::size_t n_cols_;
    std::size_t n_rows_ = 0;
    std::string text_;
};

}  // namespace qtherm
