// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "qtherm/verify.hpp"

int main(int argc, char** argv) {
    qtherm::VerifyOptions opt;
    if (const char* s = std::getenv("QTHERM_VERIFY_SEED")) opt.seed = std::strtoull(s, nullptr, 10);
    opt.on_result = [](const qtherm::CriterionResult& r) {
        std::printf("criterion %d [%s] %s: %s (%.1fs)\n", r.id, r.pass ? "PASS" : "FAIL", r.name.c_str(),
                    r.summary.c_str(), r.seconds);
        std::fflush(stdout);
    };
    const auto report = qtherm::verify(opt);
    if (argc > 1) std::ofstream(argv[1]) << report.to_json().dump(2) << "\n";
    std::printf("%zu criteria, overall %s\n", report.criteria.size(), report.pass ? "PASS" : "FAIL");
    return report.pass ? 0 : 1;
}
