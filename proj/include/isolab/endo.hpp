#pragma once
// Morphisms between atlas curves as evaluable expression DAGs: scalars,
// reduced walks, compositions, integer combinations and exact divisions.
// Traces and degrees are recovered from action matrices on torsion by CRT.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "isolab/isogeny.hpp"

namespace isolab {

// [[a, b], [c, d]] over Z/M. Column j holds the coordinates of the image of
// the j-th basis point, so composition is the matrix product.
struct Mat2 {
    u64 a = 0, b = 0, c = 0, d = 0;
    bool operator==(const Mat2&) const = default;
};

namespace mat2 {
Mat2 scalar(const mpz_class& n, u64 M);
Mat2 mul(const Mat2& x, const Mat2& y, u64 M);
Mat2 add(const Mat2& x, const Mat2& y, u64 M);
Mat2 scale(const Mat2& x, const mpz_class& s, u64 M);
Mat2 reduce(const Mat2& x, u64 M);
u64 det(const Mat2& x, u64 M);
u64 trace(const Mat2& x, u64 M);
bool is_zero(const Mat2& x);
bool is_scalar(const Mat2& x, u64 M);
std::optional<Mat2> inverse(const Mat2& x, u64 M);
}  // namespace mat2

// c * g_end^aut o chi_n o ... o chi_1 with no backtracking pair and the
// automorphism pushed to the end. aut lies in [0, #Aut/2); the sign of
// g^{#Aut/2} = [-1] is folded into the scalar.
struct RWalk {
    int start = 0, end = 0;
    std::vector<StepRef> steps;
    int aut = 0;
    mpz_class scalar = 1;
    mpz_class core_degree(const Atlas& G) const;
};

class WalkBuilder {
public:
    WalkBuilder(const Atlas& G, int start);
    WalkBuilder(const Atlas& G, RWalk w);
    void step(StepRef s);
    void aut(int e);
    void scale(const mpz_class& c) { w_.scalar *= c; }
    RWalk walk() const;

private:
    const Atlas* G_;
    RWalk w_;
    std::vector<int> verts_;
    int pending_ = 0;  // full exponent in [0, #Aut) at the current end
};

RWalk reduce_walk(const Atlas& G, const IsogenyPath& w);
RWalk concat(const Atlas& G, const RWalk& first, const RWalk& then);
RWalk dual_walk(const Atlas& G, const RWalk& w);

// Bases of E[M] for prime powers M and the matrices of edges and automorphisms.
class TorsionCache {
public:
    explicit TorsionCache(const Atlas& G) : G_(&G) {}
    const Atlas& atlas() const { return *G_; }
    const TorsionBasis& basis(int v, u64 M) const;
    const Mat2& step(int v, StepRef s, u64 M) const;
    const Mat2& aut(int v, int e, u64 M) const;
    // g^aut o chi_n ... chi_1, ignoring w.scalar
    Mat2 walk(const RWalk& w, u64 M) const;

private:
    const Atlas* G_;
    mutable std::map<std::pair<int, u64>, TorsionBasis> bases_;
    mutable std::map<std::tuple<int, int, int, u64>, Mat2> steps_;
    mutable std::map<std::tuple<int, int, u64>, Mat2> auts_;
};

struct EndoNode;
class EndoLab;

// Immutable handle. Endomorphisms have domain == codomain.
class EndoRep {
public:
    enum class Kind { Scalar, Walk, Compose, Sum, Div };
    EndoRep() = default;
    explicit EndoRep(std::shared_ptr<const EndoNode> n) : n_(std::move(n)) {}
    Kind kind() const;
    int domain() const;
    int codomain() const;
    bool is_endo() const { return domain() == codomain(); }
    const mpz_class& degree_bound() const;
    std::optional<mpz_class> known_trace() const;
    std::optional<mpz_class> known_degree() const;
    const EndoNode& node() const { return *n_; }
    const EndoNode* id() const { return n_.get(); }
    explicit operator bool() const { return (bool)n_; }

private:
    std::shared_ptr<const EndoNode> n_;
};

struct EndoNode {
    EndoRep::Kind kind = EndoRep::Kind::Scalar;
    int dom = 0, cod = 0;
    mpz_class n;                    // Scalar value, Div divisor
    RWalk walk;                     // Walk, scalar always 1
    std::vector<EndoRep> kids;      // Compose: kids[0] o kids[1] o ...; Sum terms
    std::vector<mpz_class> coef;    // Sum
    mpz_class deg_bound;
    std::map<u64, int> depth;       // q -> nested q-adic denominator depth (q != p)
    mutable std::optional<mpz_class> tr, dg;
    mutable std::map<std::tuple<u64, int, int>, Mat2> memo;  // (q, top, v)
};

struct EndoConfig {
    int crt_k_max = 24;               // extension cap for CRT moduli
    u64 crt_modulus_max = u64(1) << 20;
};

struct Modulus {
    u64 M, q;
    int k;
};

struct Reduced {
    EndoRep beta;
    mpz_class t;  // beta = (alpha - t) / N^e
    int e = 0;
};

// Constructors and the operations that need torsion data.
class EndoLab {
public:
    explicit EndoLab(const Atlas& G, EndoConfig cfg = {});
    EndoLab(const EndoLab&) = delete;
    EndoLab& operator=(const EndoLab&) = delete;
    const Atlas& atlas() const { return *G_; }
    const TorsionCache& torsion() const { return tc_; }
    u64 p() const { return G_->p(); }

    EndoRep scalar(int v, const mpz_class& n) const;
    EndoRep walk(const RWalk& w) const;
    EndoRep path(const IsogenyPath& w) const { return walk(reduce_walk(*G_, w)); }
    EndoRep compose(const EndoRep& f, const EndoRep& g) const;  // f o g
    EndoRep lincomb(const std::vector<mpz_class>& c, const std::vector<EndoRep>& xs) const;
    EndoRep add(const EndoRep& x, const EndoRep& y) const { return lincomb({1, 1}, {x, y}); }
    EndoRep sub(const EndoRep& x, const EndoRep& y) const { return lincomb({1, -1}, {x, y}); }
    EndoRep affine(const EndoRep& x, const mpz_class& c, const mpz_class& s) const;  // c x + [s]
    // x / d without any check; the caller guarantees divisibility
    EndoRep div_exact(const EndoRep& x, const mpz_class& d) const;

    // Matrix on E[M] for any M coprime to p. For prime powers the basis is the
    // stored one whenever x carries no M-adic denominator.
    Mat2 action(const EndoRep& x, u64 M) const;
    u64 trace_mod(const EndoRep& x, u64 M) const;

    mpz_class trace(const EndoRep& x) const;
    mpz_class degree(const EndoRep& x) const;
    mpz_class disc(const EndoRep& x) const;  // Tr^2 - 4 deg  (<= 0)
    // CRT without caches over moduli whose primes avoid `avoid`
    mpz_class trace_avoiding(const EndoRep& x, const std::set<u64>& avoid) const;
    mpz_class degree_avoiding(const EndoRep& x, const std::set<u64>& avoid) const;

    bool is_divisible(const EndoRep& x, const mpz_class& N) const;
    std::optional<EndoRep> divide(const EndoRep& x, const mpz_class& N) const;
    Reduced reduce_at(const EndoRep& x, const mpz_class& N) const;
    bool is_scalar(const EndoRep& x) const { return disc(x) == 0; }
    EndoRep dual(const EndoRep& x) const;

    // x(P) for P on the domain over F. Throws DenominatorOrderClash.
    Pt evaluate(const EndoRep& x, const FieldPtr& F, const Pt& P) const;
    // order of a point on curve v over F
    mpz_class point_order(int v, const FieldPtr& F, const Pt& P) const;

    const std::vector<Modulus>& moduli() const;
    int crt_levels_used() const { return crt_used_; }

    nlohmann::json to_json(const EndoRep& x) const;
    EndoRep from_json(const nlohmann::json& j) const;

private:
    const Atlas* G_;
    EndoConfig cfg_;
    TorsionCache tc_;
    mutable std::vector<Modulus> moduli_;
    mutable std::map<int, std::pair<mpz_class, std::vector<std::pair<mpz_class, int>>>> group_;
    mutable int crt_used_ = 0;

    Mat2 act(const EndoRep& x, u64 q, int top, int v) const;
    Mat2 action_pp(const EndoRep& x, u64 q, int v) const;
    mpz_class crt(const EndoRep& x, bool want_trace, const mpz_class& bound,
                  const std::set<u64>& avoid) const;
    Pt eval_rec(const EndoRep& x, const FieldPtr& F, const Pt& P, const mpz_class& ord) const;
};

}  // namespace isolab
