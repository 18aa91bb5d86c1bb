#pragma once
// Command-line drivers: one JSON report per run, and the acceptance battery.

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "isolab/spectra.hpp"

namespace isolab::cli {

inline constexpr const char* kReportSchema = "isolab.report.v1";

enum Exit { ok = 0, usage = 1, assertion = 2, timeout = 3 };

// "a" or "a+b*s" in the field's own notation
F2 parse_j(const Fp2& K, const std::string& s);
std::vector<int> parse_digits(const std::string& s);

// args excludes the program name; the report goes to --out when given,
// otherwise to out as a single JSON document
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct Criterion {
    int id = 0;
    std::string title;
    bool pass = false, skipped = false;
    std::string detail;
    double seconds = 0, budget = 0;
    nlohmann::json data;
};

struct AcceptanceOptions {
    std::string level = "fast";  // fast: p <= 101, full: up to 1009
    std::string cache_dir = "cache";
    std::set<int> only, skip;
};

// prints one line per criterion to live when given
std::vector<Criterion> acceptance_suite(const AcceptanceOptions& opt, std::ostream* live = nullptr);

}  // namespace isolab::cli
