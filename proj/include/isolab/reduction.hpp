#pragma once
// EndRing from OneEnd: oracle enrichment by random 2-walks, the main loop over
// a cube-free factorisation of the index, OneEnd from an isogeny oracle and
// the meet-in-the-middle path finder that serves as that oracle.

#include <functional>
#include <memory>
#include <optional>

#include "isolab/collision.hpp"
#include "isolab/quat.hpp"

namespace isolab {

// a non-scalar endomorphism of the given vertex
using OneEnd = std::function<EndoRep(int)>;

// phi^ o O(E') o phi for a uniform 2-walk phi : E -> E' of length k
struct RichSample {
    EndoRep alpha;
    RWalk phi;
    EndoRep inner;  // the oracle answer at E'
};
RichSample rich_sample(const EndoLab& L, int v, int k, const OneEnd& O, Rng& rng);
inline EndoRep rich(const EndoLab& L, int v, int k, const OneEnd& O, Rng& rng) {
    return rich_sample(L, v, k, O, rng).alpha;
}

struct ReductionParams {
    std::optional<int> k1_override, k2_override;
    u64 small_prime_bound = 50;
    long max_iterations = 4000;  // oracle-driven iterations over both loops
    u64 seed = 1;
    bool first_loop_only = false;
};

int default_k1(u64 p);
int default_k2(u64 p, const mpz_class& N);

// prod N_i^{e_i} with no N_i a perfect cube
class FactorList {
public:
    FactorList() = default;
    explicit FactorList(const mpz_class& n);  // n = N_1^{3^m}
    const std::vector<std::pair<mpz_class, int>>& factors() const { return f_; }
    mpz_class value() const;
    bool empty() const { return f_.empty(); }
    // splits every N_i with 1 < gcd(N_i, d) < N_i; true when something changed
    bool refine(const mpz_class& d);
    // rewrite over the current bases for a new value dividing the old one
    void rebase(const mpz_class& n);
    std::string str() const;

private:
    std::vector<std::pair<mpz_class, int>> f_;
    void normalize();
};
FactorList cube_free_factor(const mpz_class& n);

struct ReductionLog {
    long first_loop = 0, second_loop = 0;  // iterations
    long successes = 0, refinements = 0, growths = 0;
    long oracle_queries = 0, frame_queries = 0;
    mpz_class index_first_loop = 0, index_saturated = 0;
    int sat2_successes = 0;
    std::vector<std::string> index_trajectory;
    std::vector<std::string> factor_history;
    nlohmann::json iterations = nlohmann::json::array();
    nlohmann::json to_json() const;
};

struct ReductionResult {
    std::unique_ptr<Frame> frame;
    GramLattice order;
    mpz_class index;  // [End(E) : order]; 1 unless first_loop_only
    ReductionLog log;
    std::vector<EndoRep> basis() const { return realize_basis(order); }
};

ReductionResult one_end_to_endring(const EndoLab& L, int v, const OneEnd& O, const ReductionParams& P = {});

// ---------------------------------------------------------------- isogeny oracles

struct MitmResult {
    IsogenyPath path;
    int table_size = 0;
    long table_walks = 0, probe_walks = 0;
    long walks() const { return table_walks + probe_walks; }
};
// default n: ceil(log_ell p) + 2
int default_mitm_len(u64 p, int ell);
// ell-path v0 -> v1 of length 2n; table of ceil(sqrt p) endpoints (capped by
// the vertex count) from v0, probes from v1
MitmResult isogeny_path_mitm(const Atlas& G, int v0, int v1, int ell, int n, u64 seed,
                             long max_walks = 1l << 24);

// an isogeny from -> to
using IsogenyOracle = std::function<IsogenyPath(int from, int to)>;
IsogenyOracle mitm_oracle(const Atlas& G, int ell, u64 seed);

struct Alg6Result {
    EndoRep alpha;
    RWalk walk;  // alpha as a reduced walk with scalar +-1
    int iterations = 0;
    int n = 0;   // 3-walk length
};
Alg6Result one_end_from_isogeny_oracle(const EndoLab& L, int v, const IsogenyOracle& iso, double eps, u64 seed,
                                       std::optional<int> n_override = std::nullopt, int max_iterations = 1000);

// phi_m^ o phi_m' for two messages with the same CGL hash
EndoRep cgl_collision_to_endo(const EndoLab& L, int v, int ell, const std::vector<int>& m,
                              const std::vector<int>& m2);

// path finding -> OneEnd -> EndRing
ReductionResult endring_unconditional(const EndoLab& L, int v, u64 seed, const ReductionParams& P = {});

}  // namespace isolab
