#pragma once
// Lattices of endomorphisms of one curve. Elements are written in a frame
// (1, f1, f2, f3) of independent endomorphisms; coordinates come from exact
// traces, products from a multiplication table built once per frame.

#include <array>
#include <optional>
#include <vector>

#include "isolab/endo.hpp"

namespace isolab {

using ZVec = std::vector<mpz_class>;
using ZMat = std::vector<ZVec>;
using QVec = std::array<mpq_class, 4>;
using QMat = std::vector<std::vector<mpq_class>>;

namespace zla {
// Row Hermite form of the span of the rows: nonzero rows only, positive pivots,
// entries above a pivot reduced into [0, pivot). U (if given) satisfies U A = [H; 0].
ZMat hnf(const ZMat& A, ZMat* U = nullptr);
mpq_class det(QMat A);
std::optional<QMat> inverse(QMat A);
// x with A x = b (A square, invertible)
std::optional<std::vector<mpq_class>> solve(QMat A, std::vector<mpq_class> b);
// LLL (delta = 3/4) for the positive definite form G on the rows of B.
ZMat lll(ZMat B, const QMat& G);
}  // namespace zla

// Z-lattice in Q^4 spanned by rows / den, rows in Hermite form and den minimal,
// so equal lattices compare equal.
struct Lat {
    mpz_class den = 1;
    ZMat rows;
    int rank() const { return (int)rows.size(); }
    QVec row(int i) const;
    bool operator==(const Lat& o) const { return den == o.den && rows == o.rows; }
};

Lat lat_span(const std::vector<QVec>& gens);
Lat lat_sum(const Lat& a, const Lat& b);
bool lat_contains(const Lat& L, const QVec& x);
bool lat_subset(const Lat& a, const Lat& b);
std::vector<QVec> lat_basis(const Lat& L);
// [b : a] for a subset of b of the same rank
mpz_class lat_index(const Lat& a, const Lat& b);
// {x : <x, y> in Z for all y in L} for full rank L (standard dot product)
Lat lat_dual(const Lat& L);

class Frame {
public:
    Frame(const EndoLab& L, int v);
    const EndoLab& lab() const { return *L_; }
    int vertex() const { return v_; }
    int rank() const { return (int)f_.size(); }
    const EndoRep& elem(int i) const { return f_[i]; }
    const std::vector<EndoRep>& elems() const { return f_; }

    // Coordinates of y; y joins the frame when it leaves the current span.
    QVec coords(const EndoRep& y);
    std::optional<QVec> coords_in_span(const EndoRep& y) const;
    QVec one() const;

    mpq_class trd(const QVec& x) const;
    mpq_class nrd(const QVec& x) const;
    mpq_class pair(const QVec& x, const QVec& y) const;  // trd(x conj(y))
    mpq_class trd_mul(const QVec& x, const QVec& y) const;
    QVec conj(const QVec& x) const;
    QVec mul(const QVec& x, const QVec& y) const;  // rank 4 only
    const QMat& gram() const { return B_; }        // pair on the frame

    // action on E[M] of sum x_i f_i
    Mat2 action(const ZVec& x, u64 M) const;
    EndoRep numerator(const ZVec& x) const;
    EndoRep realize(const QVec& x) const;  // numerator / common denominator

    nlohmann::json to_json() const;

private:
    const EndoLab* L_;
    int v_;
    std::vector<EndoRep> f_;
    std::vector<mpz_class> t_;  // traces
    QMat B_, Binv_;
    // f_i f_j in frame coordinates
    std::array<std::array<QVec, 4>, 4> table_;
    mutable std::map<u64, std::vector<Mat2>> act_;

    std::vector<mpq_class> pairings(const EndoRep& y, mpz_class& tr, mpz_class& dg) const;
    void add(const EndoRep& y);
    void build_table();
};

// Trace-pairing lattice: elements generating it, their coordinates and the
// lattice they span in the frame.
struct GramLattice {
    Frame* frame = nullptr;
    Lat lat;
    int rank() const { return lat.rank(); }
    ZMat traces() const;  // Tr(b_i b_j) on the Hermite basis (integral for orders)
    mpq_class disc() const;
};

GramLattice lattice_from(Frame& F, const std::vector<EndoRep>& elems);
GramLattice lattice_of(Frame& F, const Lat& L);

struct SaturationLog {
    int lines_tested = 0, successes = 0;
};

// Orders are GramLattices containing 1 and closed under multiplication.
GramLattice ring_closure(const GramLattice& L);
bool is_closed(const GramLattice& L);
// v_ell(disc) = 0 afterwards; divisibility tested on E[ell^{a+1}], a = v_ell(den)
GramLattice saturate_at(const GramLattice& R, u64 ell, SaturationLog* log = nullptr);
// radical idealiser iteration; new elements are checked by p-adic divisibility
GramLattice saturate_at_p(const GramLattice& R);
mpz_class index_in_maximal(const GramLattice& R);
// y/ell in End(E) for y in R (y given in frame coordinates)
bool divisible_in_end(const GramLattice& R, const QVec& y, u64 ell);
// Hermite basis as endomorphisms
std::vector<EndoRep> realize_basis(const GramLattice& R);

// ---------------------------------------------------------------- local analysis

struct IMat {
    long a, b, c, d;  // [[a, b], [c, d]]
    bool operator==(const IMat&) const = default;
    auto operator<=>(const IMat&) const = default;
};

// largest a < e with A in Z + ell^a M_2 mod ell^e, or e for scalars mod ell^e
int level_at(const IMat& A, long ell, int e);
int level_at(const EndoLab& L, const EndoRep& x, u64 ell, int e);
bool is_N_reduced(const EndoLab& L, const EndoRep& x, u64 N);

struct ConjClass {
    std::string kind;     // homothety, split, nonsplit, nonsemisimple
    long tr = 0, det = 0;  // characteristic polynomial x^2 - tr x + det
    long eps = 0;         // nonsemisimple: 1 or a fixed non-square (SL_2 refinement)
    std::string gl_label() const;
    std::string label() const;
    bool operator==(const ConjClass&) const = default;
};
ConjClass conj_class(const IMat& A, long ell);

struct SubspaceReport {
    long ell = 0;
    long orbits = 0, subspaces = 0;
    mpq_class max_ratio;
};
SubspaceReport verify_subspace_lemma(long ell);

struct BasisReport {
    long ell = 0;
    bool exhaustive = false;
    long trials = 0;
    double probability = 0, sigma = 0;
    mpq_class exact_min;  // exhaustive: minimum over orbit triples
};
// exhaustive for ell = 3 (minimum over triples of SL_2 orbits), Monte Carlo otherwise
BasisReport verify_basis_probability(long ell, long trials, u64 seed);
// probability for one fixed orbit used three times (degenerate invariant law)
mpq_class basis_probability_single_orbit(long ell, const IMat& rep);

struct NakayamaReport {
    long ell = 0;
    int e = 0;
    long triples = 0, generating = 0, mismatches = 0;
};
NakayamaReport verify_nakayama(long ell, int e, int a);

}  // namespace isolab
