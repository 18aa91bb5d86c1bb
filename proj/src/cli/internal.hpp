#pragma once
// Shared by the subcommands and the acceptance battery.

#include <chrono>
#include <memory>

#include "isolab/cli.hpp"

namespace isolab::cli {

class Stopwatch {
public:
    Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }
    double ms() const { return 1000 * seconds(); }

private:
    std::chrono::steady_clock::time_point t0_;
};

// one prime: atlas, endomorphism lab and (lazily) the ground-truth table
struct Lab {
    Atlas G;
    EndoLab L;
    explicit Lab(u64 p) : G(p), L(G) {}
    const CurveTable& table(const std::string& cache_dir);

private:
    std::unique_ptr<CurveTable> T_;
};

std::string rat(const mpq_class& q);
std::vector<int> parse_ints(const std::string& s);  // "2,3"
Mat2 parse_mat2(const std::string& s, u64 N);       // "a,b,c,d"
int vertex_of(const Atlas& G, const std::string& j); // empty string: vertex 0

// discriminant p^2 and closure under composition, recomputed from the maps
struct TableCheck {
    bool ok = true;
    int curves = 0;
    nlohmann::json failures = nlohmann::json::array();
};
TableCheck check_table(const CurveTable& T);

// answers the first table basis element whose action does not commute with g:
// the law of Rich_0 is then visibly not conjugation invariant
OneEnd asymmetric_oracle(const CurveTable& T, const Mat2& g, u64 N);

ReductionParams desk_params(u64 seed, std::optional<int> k1, std::optional<int> k2);
inline constexpr int kDeskWalk = 40;

// exit code for an exception escaping a command
int exit_code_for(const Error& e);

}  // namespace isolab::cli
