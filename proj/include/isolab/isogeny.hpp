#pragma once
// Prime-degree isogenies between canonical models, the isogeny graph on
// supersingular j-invariants, walks and the CGL hash.

#include <map>
#include <tuple>
#include <memory>
#include <string>
#include <vector>

#include "isolab/curve.hpp"
#include "isolab/poly.hpp"

namespace isolab {

// Separable isogeny of prime degree with Kohel-style evaluation, followed by the
// isomorphism (x, y) -> (u^2 x, u^3 y) onto the codomain model.
struct IsogenyStep {
    int ell = 0;
    F2 A{}, B{};    // domain
    F2 A2{}, B2{};  // codomain after scaling by u
    Poly h;         // monic kernel polynomial
    Poly h1, h2, h3;
    F2 sigma1{};  // sum of the roots of h
    F2 v{};       // ell = 2: 3 x0^2 + A
    F2 u{1, 0};

    // P lives on the domain over some extension G; the image lives on the codomain over G.
    Pt eval(const FieldCtx* G, const Pt& P) const;
    mpz_class degree() const { return mpz_class(ell); }
};

// Raw Velu step (u = 1). Throws InvalidKernel.
IsogenyStep velu(const Fp2& K, F2 A, F2 B, int ell, const Poly& h);

// Rescale the codomain of s onto the model (A', B') with the same j.
void normalize_codomain(const Fp2& K, IsogenyStep& s, F2 A2, F2 B2);

// Kernel polynomials of the ell+1 cyclic subgroups, in lexicographic order.
std::vector<Poly> kernel_subgroups(const Curve& E, int ell, const FieldTower& T);

// Odd-index division polynomial (in x only), used to validate kernels.
Poly division_poly_odd(const Fp2& K, F2 A, F2 B, int n);

// Automorphism g^e acts as (x, y) -> (u^{2e} x, u^{3e} y), u of order #Aut.
struct AutGroup {
    int order = 2;
    F2 u{};  // primitive order-th root of unity
};

struct Edge {
    int ell = 0;
    int from = 0, to = 0;
    IsogenyStep step;
    // dual: kernel index at `to` and aut exponent d at `from` with
    // dual(step) = g_from^d o step(to, dual_idx)
    int dual_idx = -1, dual_aut = 0;
};

// A single step of a walk: edge `idx` of degree `ell` out of the current vertex.
struct StepRef {
    int ell = 0, idx = 0;
    bool operator==(const StepRef& o) const { return ell == o.ell && idx == o.idx; }
};

// Supersingular vertices with canonical models and lazily built edge tables.
class Atlas {
public:
    explicit Atlas(u64 p, FieldConfig cfg = {});
    u64 p() const { return tower_.p(); }
    const FieldTower& tower() const { return tower_; }
    const FieldPtr& base() const { return tower_.base(); }
    const Fp2& K() const { return tower_.base()->f2(); }
    int size() const { return (int)curves_.size(); }
    const Curve& curve(int v) const { return curves_[v]; }
    F2 j(int v) const { return curves_[v].j(); }
    int index_of(F2 j) const;  // throws UnknownCurve
    const AutGroup& aut(int v) const { return auts_[v]; }
    int aut_order(int v) const { return auts_[v].order; }

    const std::vector<Edge>& edges(int v, int ell) const;
    const Edge& edge(int v, StepRef s) const { return edges(v, s.ell)[s.idx]; }
    // completes dual information on demand
    const Edge& edge_with_dual(int v, StepRef s) const;
    // step o g^e = g'^{e'} o step', returns (idx', e')
    std::pair<int, int> push_aut(int v, StepRef s, int e) const;

    Pt apply_aut(int v, int e, const FieldCtx* G, const Pt& P) const;
    // e with g^e(P) = Q; throws if not unique
    int match_aut(int v, const FieldCtx* G, const Pt& P, const Pt& Q) const;
    // deterministic point of order p+1 on curve v
    const Pt& test_point(int v) const;

private:
    FieldTower tower_;
    std::vector<Curve> curves_;
    std::vector<AutGroup> auts_;
    std::map<std::pair<u64, u64>, int> index_;
    mutable std::map<std::pair<int, int>, std::vector<Edge>> edges_;
    mutable std::map<std::tuple<int, int, int, int>, std::pair<int, int>> push_;
    mutable std::map<int, Pt> test_points_;
};

// Walk as a sequence of steps from `start`; the endpoint is tracked.
struct IsogenyPath {
    int start = 0, end = 0;
    std::vector<StepRef> steps;
    int length() const { return (int)steps.size(); }
    mpz_class degree(const Atlas& G) const;
};

IsogenyPath make_path(const Atlas& G, int start, const std::vector<StepRef>& steps);
// next undoes prev, where prev leaves vertex `from`
bool backtracks(const Atlas& G, int from, StepRef prev, StepRef next);
Pt eval_path(const Atlas& G, const IsogenyPath& w, const FieldCtx* F, const Pt& P);

enum class WalkMode { uniform, non_backtracking };
IsogenyPath random_walk(const Atlas& G, int start, int ell, int len, Rng& rng, WalkMode mode);

// Non-backtracking walk labelled by base-ell digits. The virtual incoming edge
// is the dual of kernel 0 at the start vertex, so kernel 0 is excluded first.
IsogenyPath cgl_path(const Atlas& G, int start, int ell, const std::vector<int>& digits);
F2 cgl_hash(const Atlas& G, int start, int ell, const std::vector<int>& digits);

// Edge multiset of the ell-isogeny graph on j-invariants.
struct GraphEdge {
    int from, to, multiplicity;
};
std::vector<GraphEdge> isogeny_graph(const Atlas& G, int ell);

}  // namespace isolab
