#pragma once
// Short Weierstrass curves y^2 = x^3 + Ax + B over F_{p^2} with points over
// extension fields.

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "isolab/field.hpp"

namespace isolab {

struct Pt {
    Fq x, y;
    bool inf = true;
    static Pt infinity() { return Pt{}; }
};

// Group law on a fixed curve over one extension field. Jacobian coordinates are
// used internally for scalar multiplication.
class Ec {
public:
    Ec(const FieldCtx* F, F2 A, F2 B);
    const FieldCtx* field() const { return F_; }
    const Fq& a() const { return a_; }
    const Fq& b() const { return b_; }

    bool on_curve(const Pt& P) const;
    Fq rhs(const Fq& x) const;  // x^3 + a x + b
    Pt neg(const Pt& P) const;
    Pt add(const Pt& P, const Pt& Q) const;
    Pt dbl(const Pt& P) const;
    Pt sub(const Pt& P, const Pt& Q) const { return add(P, neg(Q)); }
    Pt mul(const mpz_class& n, const Pt& P) const;
    Pt mul(i64 n, const Pt& P) const { return mul(mpz_class((long)n), P); }
    bool eq(const Pt& P, const Pt& Q) const;
    std::optional<Pt> lift_x(const Fq& x) const;  // lexicographically smaller y
    Pt random_point(Rng& rng) const;
    // order of P given that n*P = O (prime factorisation of n supplied)
    mpz_class order(const Pt& P, const mpz_class& n, const std::vector<std::pair<mpz_class, int>>& fac) const;

private:
    const FieldCtx* F_;
    Fq a_, b_;
};

Fq random_elem(const FieldCtx* F, Rng& rng);

F2 j_invariant(const Fp2& K, F2 A, F2 B);

class Curve {
public:
    Curve() = default;
    Curve(FieldPtr F, F2 A, F2 B);
    const FieldPtr& field() const { return F_; }
    const Fp2& K() const { return F_->f2(); }
    u64 p() const { return F_->p(); }
    F2 A() const { return A_; }
    F2 B() const { return B_; }
    F2 j() const { return j_; }
    int frobenius_sign() const { return frob_; }  // -1 means pi_{p^2} = [-p]
    void set_frobenius_sign(int s) { frob_ = s; }
    Ec over(const FieldCtx* G) const { return Ec(G, A_, B_); }
    Ec base() const { return Ec(F_.get(), A_, B_); }

private:
    FieldPtr F_;
    F2 A_{}, B_{}, j_{};
    int frob_ = 0;
};

int aut_order(const Fp2& K, F2 j);
// sum of 1/#Aut(E); equals (p - 1)/24 over all supersingular j
mpq_class eichler_mass(const Fp2& K, const std::vector<F2>& js);

// Model with pi_{p^2} = [-p], i.e. #E(F_{p^2}) = (p+1)^2. Throws NotSupersingular.
Curve canonical_model(const FieldPtr& F, F2 j);

// Monte Carlo check that [p+1] kills sampled points (20 by default).
bool frobenius_is_minus_p(const Curve& E, int trials = 20);

// j-invariants of the three 2-isogenous curves (with multiplicity).
std::vector<F2> two_isogenous_j(const Curve& E);

struct EnumConfig {
    u64 bound = u64(1) << 20;
};

// Sorted supersingular j-invariants, found by exploring the connected
// 2-isogeny graph from a known supersingular j. Throws BoundExceeded.
std::vector<F2> enumerate_supersingular(const FieldPtr& F, const EnumConfig& cfg = {});
F2 starting_supersingular_j(const Fp2& K);

// ---------------------------------------------------------------- torsion

struct TorsionBasis {
    u64 m = 0;
    int k = 0;
    FieldPtr F;
    Pt P, Q;
    Fq zeta;  // e_m(P,Q), normalised to canonical_root(F, m)
};

// Smallest k with (-p)^k = 1 mod m; 0 when m shares a factor with p.
int torsion_degree(u64 p, u64 m);

// Deterministic primitive m-th root of unity of F (first hit in a fixed scan).
Fq canonical_root(const FieldCtx* F, u64 m);

// Throws ExtensionTooLarge (or Unsupported for p | m).
TorsionBasis torsion_basis(const Curve& E, u64 m, const FieldPtr& F);

Fq weil_pairing(const Ec& E, const Pt& P, const Pt& Q, u64 m);

// Discrete log of h to base zeta in mu_m (zeta of exact order m).
u64 dlog_mu(const Fq& zeta, const Fq& h, u64 m);

// (a, b) with R = aP + bQ.
std::pair<u64, u64> basis_coords(const Ec& E, const TorsionBasis& T, const Pt& R);

// Shared extension contexts for one p, built on demand.
class FieldTower {
public:
    explicit FieldTower(u64 p, FieldConfig cfg = {});
    u64 p() const { return p_; }
    const FieldPtr& base() const { return at(1); }
    const FieldPtr& at(int k) const;
    const FieldConfig& config() const { return cfg_; }

private:
    u64 p_;
    FieldConfig cfg_;
    mutable std::map<int, FieldPtr> fields_;
};

}  // namespace isolab
