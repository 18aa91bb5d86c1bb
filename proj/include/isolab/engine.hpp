#pragma once
// Ground truth End(E) for small p and the OneEnd oracles built on it.

#include <memory>

#include "isolab/collision.hpp"
#include "isolab/quat.hpp"

namespace isolab {

struct EndEntry {
    int vertex = 0;
    std::string j;
    int aut = 2;
    std::vector<EndoRep> basis;              // basis[0] = [1]
    ZMat gram;                               // Tr(b_i b_j)
    std::vector<std::vector<ZVec>> mult;     // b_i b_j = sum_k mult[i][j][k] b_k
    bool denominator_free = true;            // basis made of sums of closed walks
};

struct EngineLog {
    long atoms = 0, samples = 0, kept = 0;
    std::vector<std::string> index_trajectory;  // [End : span] while the span grows
};

struct EngineOptions {
    u64 seed = 1;
    int walk_len = 0;  // 0: ceil(log2 p) + 2
    long max_atoms = 5000;
    std::string cache_dir = "cache";
    bool use_cache = true;
};

EndEntry compute_endring_bruteforce(const EndoLab& L, int v, const EngineOptions& opt = {}, EngineLog* log = nullptr);

class CurveTable {
public:
    CurveTable(const EndoLab& L, std::vector<EndEntry> entries);
    const EndoLab& lab() const { return *L_; }
    u64 p() const { return L_->p(); }
    int size() const { return (int)entries_.size(); }
    const EndEntry& entry(int v) const;
    // frame (1, b1, b2, b3): End(E) is Z^4 in it
    Frame& frame(int v) const;
    nlohmann::json to_json() const;
    static CurveTable from_json(const EndoLab& L, const nlohmann::json& j);

private:
    const EndoLab* L_;
    std::vector<EndEntry> entries_;
    mutable std::map<int, std::unique_ptr<Frame>> frames_;
};

inline constexpr const char* kTableVersion = "endring.v1";

// every curve; read from / written to <cache_dir>/endring_p<p>.json
CurveTable build_table(const EndoLab& L, const EngineOptions& opt = {});

// coordinates of a lattice given in frame `from` inside frame `to` (same curve)
Lat change_frame(const Frame& from, const Lat& x, const Frame& to);
bool engine_equal(const CurveTable& T, int v, const std::vector<EndoRep>& basis);
bool engine_equal(const CurveTable& T, const GramLattice& R);
// [End(E) : R] through the table, R of full rank
mpz_class engine_index(const CurveTable& T, const GramLattice& R);

Mat2 endo_matrix_modN(const CurveTable& T, int v, const EndoRep& x, u64 N);
// the four basis matrices span M_2(Z/N)
bool basis_spans_mod(const CurveTable& T, int v, u64 N);

class OneEndOracle {
public:
    enum class Kind { honest, stuck, leveled };
    static OneEndOracle honest(const CurveTable& T, u64 seed, int height = 3);
    static OneEndOracle stuck(const CurveTable& T, long M, u64 seed, int height = 3);
    static OneEndOracle leveled(const CurveTable& T, int n, u64 seed, int height = 3);
    // "honest", "stuck:M", "leveled:n"
    static OneEndOracle parse(const CurveTable& T, const std::string& spec, u64 seed);

    EndoRep query(int v);
    Kind kind() const { return kind_; }
    std::string name() const;
    long queries() const { return queries_; }
    int last_level() const { return last_e_; }
    // coefficients of the last answer in the table basis
    const ZVec& last_coords() const { return last_; }

private:
    OneEndOracle(const CurveTable& T, Kind k, long param, u64 seed, int height);
    const CurveTable* T_;
    Kind kind_;
    long param_;
    Rng rng_;
    int H_;
    long queries_ = 0;
    int last_e_ = 0;
    ZVec last_;
    ZVec nonscalar(bool two_reduced);
};

}  // namespace isolab
