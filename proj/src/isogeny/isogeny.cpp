#include "isolab/isogeny.hpp"

#include <algorithm>
#include <functional>

namespace isolab {

namespace {

Fq eval_poly(const FieldCtx* G, const Poly& f, const Fq& x) {
    Fq r = G->zero();
    for (size_t i = f.size(); i-- > 0;) r = r * x + G->embed(f[i]);
    return r;
}

bool same_poly(const Poly& a, const Poly& b) {
    Poly x = a, y = b;
    poly::trim(x);
    poly::trim(y);
    return x == y;
}

// Monic polynomial with the given roots in an extension field, projected to F_{p^2}.
Poly poly_from_ext_roots(const FieldCtx* F, const std::vector<Fq>& roots) {
    std::vector<Fq> c{F->one()};
    for (const Fq& r : roots) {
        std::vector<Fq> n(c.size() + 1, F->zero());
        for (size_t i = 0; i < c.size(); ++i) {
            n[i + 1] += c[i];
            n[i] -= c[i] * r;
        }
        c = std::move(n);
    }
    Poly out;
    for (const Fq& x : c) {
        if (!x.in_base()) throw Error("InvalidKernel", "kernel polynomial not defined over F_p^2");
        out.push_back(x.base());
    }
    return out;
}

}  // namespace

Pt IsogenyStep::eval(const FieldCtx* G, const Pt& P) const {
    if (P.inf) return P;
    const Fq& x = P.x;
    Fq X, dX;
    if (ell == 2) {
        Fq d = x + G->embed(h[0]);  // x - x0
        if (d.is_zero()) return Pt::infinity();
        Fq di = inv(d), vv = G->embed(v);
        X = x + vv * di;
        dX = G->one() - vv * di * di;
    } else {
        Fq hv = eval_poly(G, h, x);
        if (hv.is_zero()) return Pt::infinity();
        Fq hi = inv(hv);
        Fq r1 = eval_poly(G, h1, x) * hi, r2 = eval_poly(G, h2, x) * hi, r3 = eval_poly(G, h3, x) * hi;
        Fq a = G->embed(A), b = G->embed(B);
        Fq fx = (x * x + a) * x + b;
        Fq f1 = x * x * G->f2().from_int(3) + a;
        Fq S1 = r1, S2 = r1 * r1 - r2;
        Fq dS2 = -(S1 * S2).scale(2) - r3 + S1 * r2;
        X = x.scale(ell) - G->embed(sigma1).scale(2) - (f1 * S1).scale(2) + (fx * S2).scale(4);
        dX = G->from_int(ell) - (x * S1).scale(12) + (f1 * S2).scale(6) + (fx * dS2).scale(4);
    }
    Fq Y = P.y * dX;
    Fq u2 = G->embed(G->f2().sqr(u));
    Fq u3 = u2 * G->embed(u);
    return Pt{X * u2, Y * u3, false};
}

Poly division_poly_odd(const Fp2& K, F2 A, F2 B, int n) {
    if (n < 1 || n % 2 == 0) throw Error("InvalidArgument", "odd index expected");
    // psi_n = f_n for odd n, psi_n = y g_n for even n, y^2 = F
    Poly F{B, A, K.zero(), K.one()};
    std::map<int, Poly> memo;
    std::function<const Poly&(int)> psi = [&](int m) -> const Poly& {
        auto it = memo.find(m);
        if (it != memo.end()) return it->second;
        Poly r;
        if (m == 0)
            r = {};
        else if (m == 1)
            r = {K.one()};
        else if (m == 2)
            r = {K.from_int(2)};
        else if (m == 3)
            r = {K.neg(K.sqr(A)), K.scale(B, 12), K.scale(A, 6), K.zero(), K.from_int(3)};
        else if (m == 4)
            r = poly::scale(K,
                            Poly{K.neg(K.add(K.scale(K.sqr(B), 8), K.mul(K.sqr(A), A))), K.neg(K.scale(K.mul(A, B), 4)),
                                 K.neg(K.scale(K.sqr(A), 5)), K.scale(B, 20), K.scale(A, 5), K.zero(), K.one()},
                            K.from_int(4));
        else if (m % 2 == 1) {
            int k = (m - 1) / 2;
            Poly a = poly::mul(K, psi(k + 2), poly::mul(K, psi(k), poly::mul(K, psi(k), psi(k))));
            Poly b = poly::mul(K, psi(k - 1), poly::mul(K, psi(k + 1), poly::mul(K, psi(k + 1), psi(k + 1))));
            Poly F2p = poly::mul(K, F, F);
            if (k % 2 == 0)
                a = poly::mul(K, a, F2p);
            else
                b = poly::mul(K, b, F2p);
            r = poly::sub(K, a, b);
        } else {
            int k = m / 2;
            Poly a = poly::mul(K, psi(k + 2), poly::mul(K, psi(k - 1), psi(k - 1)));
            Poly b = poly::mul(K, psi(k - 2), poly::mul(K, psi(k + 1), psi(k + 1)));
            r = poly::mul(K, psi(k), poly::sub(K, a, b));
            r = poly::scale(K, r, K.inv(K.from_int(2)));
        }
        return memo[m] = r;
    };
    return psi(n);
}

IsogenyStep velu(const Fp2& K, F2 A, F2 B, int ell, const Poly& h0) {
    IsogenyStep s;
    s.ell = ell;
    s.A = A;
    s.B = B;
    s.h = poly::monic(K, h0);
    if (ell == 2) {
        if (poly::deg(s.h) != 1) throw Error("InvalidKernel", "2-isogeny kernel must be linear");
        F2 x0 = K.neg(s.h[0]);
        F2 fx = K.add(K.mul(K.add(K.sqr(x0), A), x0), B);
        if (!K.is_zero(fx)) throw Error("InvalidKernel", "x0 is not a 2-torsion abscissa");
        s.v = K.add(K.scale(K.sqr(x0), 3), A);
        s.sigma1 = x0;
        s.A2 = K.sub(A, K.scale(s.v, 5));
        s.B2 = K.sub(B, K.scale(K.mul(x0, s.v), 7));
    } else {
        if (ell < 3 || ell % 2 == 0 || !is_prime_u64(ell)) throw Error("InvalidKernel", "degree must be prime");
        int d = (ell - 1) / 2;
        if (poly::deg(s.h) != d) throw Error("InvalidKernel", "kernel polynomial has the wrong degree");
        Poly r = poly::mod(K, division_poly_odd(K, A, B, ell), s.h);
        if (!r.empty()) throw Error("InvalidKernel", "kernel polynomial does not divide the division polynomial");
        // power sums of the roots via Newton's identities
        auto e = [&](int i) -> F2 {
            if (i > d) return K.zero();
            F2 c = s.h[d - i];
            return (i % 2) ? K.neg(c) : c;
        };
        F2 p1 = e(1);
        F2 p2 = K.sub(K.mul(e(1), p1), K.scale(e(2), 2));
        F2 p3 = K.add(K.sub(K.mul(e(1), p2), K.mul(e(2), p1)), K.scale(e(3), 3));
        F2 t = K.add(K.scale(p2, 6), K.scale(A, 2 * d));
        F2 w = K.add(K.add(K.scale(p3, 10), K.scale(K.mul(A, p1), 6)), K.scale(B, 4 * d));
        s.sigma1 = p1;
        s.A2 = K.sub(A, K.scale(t, 5));
        s.B2 = K.sub(B, K.scale(w, 7));
        s.h1 = poly::deriv(K, s.h);
        s.h2 = poly::deriv(K, s.h1);
        s.h3 = poly::deriv(K, s.h2);
    }
    F2 disc = K.add(K.scale(K.mul(K.sqr(s.A2), s.A2), 4), K.scale(K.sqr(s.B2), 27));
    if (K.is_zero(disc)) throw Error("InvalidKernel", "singular codomain");
    return s;
}

void normalize_codomain(const Fp2& K, IsogenyStep& s, F2 A2, F2 B2) {
    if (j_invariant(K, A2, B2) != j_invariant(K, s.A2, s.B2)) throw Error("InvalidArgument", "codomain j mismatch");
    Poly f;
    if (K.is_zero(s.B2)) {  // j = 1728: u^4 = A2 / A'
        f = {K.neg(K.mul(A2, K.inv(s.A2))), K.zero(), K.zero(), K.zero(), K.one()};
    } else if (K.is_zero(s.A2)) {  // j = 0: u^6 = B2 / B'
        f = Poly(7, K.zero());
        f[0] = K.neg(K.mul(B2, K.inv(s.B2)));
        f[6] = K.one();
    } else {
        F2 r = K.mul(K.mul(B2, s.A2), K.inv(K.mul(A2, s.B2)));
        f = {K.neg(r), K.zero(), K.one()};
    }
    for (F2 u : poly::roots(K, f)) {
        F2 u2 = K.sqr(u), u4 = K.sqr(u2), u6 = K.mul(u4, u2);
        if (K.mul(u4, s.A2) == A2 && K.mul(u6, s.B2) == B2) {
            s.u = K.mul(s.u, u);
            s.A2 = A2;
            s.B2 = B2;
            return;
        }
    }
    throw Error("NotIsomorphic", "codomain is a nontrivial twist of the target model");
}

std::vector<Poly> kernel_subgroups(const Curve& E, int ell, const FieldTower& T) {
    const Fp2& K = E.K();
    std::vector<Poly> out;
    if (ell == 2) {
        for (F2 x0 : poly::roots(K, Poly{E.B(), E.A(), K.zero(), K.one()})) out.push_back(Poly{K.neg(x0), K.one()});
        if (out.size() != 3) throw Error("ExtensionTooLarge", "2-torsion not rational over F_p^2");
    } else {
        int k = torsion_degree(E.p(), ell);
        if (k == 0) throw Error("Unsupported", "ell = p");
        const FieldPtr& F = T.at(k);
        TorsionBasis tb = torsion_basis(E, ell, F);
        Ec C = E.over(F.get());
        std::vector<Pt> gens{tb.Q};
        for (int i = 0; i < ell; ++i) gens.push_back(C.add(tb.P, C.mul((i64)i, tb.Q)));
        for (const Pt& G : gens) {
            std::vector<Fq> xs;
            Pt R = G;
            for (int i = 0; i < (ell - 1) / 2; ++i) {
                xs.push_back(R.x);
                R = C.add(R, G);
            }
            out.push_back(poly_from_ext_roots(F.get(), xs));
        }
    }
    std::sort(out.begin(), out.end(), poly::lex_less);
    return out;
}

// ---------------------------------------------------------------- atlas

Atlas::Atlas(u64 p, FieldConfig cfg) : tower_(p, cfg) {
    const FieldPtr& F = tower_.base();
    const Fp2& K = F->f2();
    for (F2 j : enumerate_supersingular(F)) {
        index_[{j.a, j.b}] = (int)curves_.size();
        curves_.push_back(canonical_model(F, j));
        AutGroup g;
        g.order = isolab::aut_order(K, j);
        Poly f(g.order + 1, K.zero());
        f[0] = K.neg(K.one());
        f[g.order] = K.one();
        for (F2 u : poly::roots(K, f)) {
            bool prim = true;
            for (int d = 1; d < g.order; ++d)
                if (g.order % d == 0 && K.pow(u, (u64)d) == K.one()) prim = false;
            if (prim) {
                g.u = u;
                break;
            }
        }
        auts_.push_back(g);
    }
}

int Atlas::index_of(F2 j) const {
    auto it = index_.find({j.a, j.b});
    if (it == index_.end()) throw Error("UnknownCurve", "j = " + K().str(j));
    return it->second;
}

const std::vector<Edge>& Atlas::edges(int v, int ell) const {
    auto key = std::make_pair(v, ell);
    auto it = edges_.find(key);
    if (it != edges_.end()) return it->second;
    const Curve& E = curves_[v];
    std::vector<Edge> out;
    for (const Poly& h : kernel_subgroups(E, ell, tower_)) {
        Edge e;
        e.ell = ell;
        e.from = v;
        e.step = velu(K(), E.A(), E.B(), ell, h);
        e.to = index_of(j_invariant(K(), e.step.A2, e.step.B2));
        normalize_codomain(K(), e.step, curves_[e.to].A(), curves_[e.to].B());
        out.push_back(std::move(e));
    }
    return edges_[key] = std::move(out);
}

Pt Atlas::apply_aut(int v, int e, const FieldCtx* G, const Pt& P) const {
    if (P.inf) return P;
    const Fp2& k = K();
    int n = auts_[v].order;
    e = ((e % n) + n) % n;
    F2 w = k.pow(auts_[v].u, (u64)e);
    F2 w2 = k.sqr(w);
    return Pt{P.x * w2, P.y * k.mul(w2, w), false};
}

int Atlas::match_aut(int v, const FieldCtx* G, const Pt& P, const Pt& Q) const {
    Ec C = curves_[v].over(G);
    int found = -1;
    for (int e = 0; e < auts_[v].order; ++e) {
        if (C.eq(apply_aut(v, e, G, P), Q)) {
            if (found >= 0) throw Error("AmbiguousAutomorphism", "test point too small to separate automorphisms");
            found = e;
        }
    }
    if (found < 0) throw Error("InternalError", "no automorphism relates the two points");
    return found;
}

const Pt& Atlas::test_point(int v) const {
    auto it = test_points_.find(v);
    if (it != test_points_.end()) return it->second;
    Ec C = curves_[v].base();
    F2 j = curves_[v].j();
    Rng rng(0x7e57 ^ j.a ^ (j.b << 21));
    u64 n = p() + 1;
    auto primes = factor_u64(n);
    for (;;) {
        Pt P = C.random_point(rng);
        bool full = true;
        for (auto [q, e] : primes)
            if (C.mul((i64)(n / q), P).inf) full = false;
        if (full) return test_points_[v] = P;
    }
}

const Edge& Atlas::edge_with_dual(int v, StepRef s) const {
    const Edge& e0 = edges(v, s.ell)[s.idx];
    if (e0.dual_idx >= 0) return e0;
    const FieldCtx* B = base().get();
    const std::vector<Edge>& back = edges(e0.to, s.ell);
    Poly target;
    if (s.ell == 2) {
        F2 x0 = K().neg(e0.step.h[0]);
        for (F2 x1 : poly::roots(K(), Poly{curves_[v].B(), curves_[v].A(), K().zero(), K().one()})) {
            if (x1 == x0) continue;
            Pt T = e0.step.eval(B, Pt{B->embed(x1), B->zero(), false});
            target = Poly{K().neg(T.x.base()), K().one()};
            break;
        }
    } else {
        int k = torsion_degree(p(), s.ell);
        const FieldPtr& F = tower_.at(k);
        TorsionBasis tb = torsion_basis(curves_[v], s.ell, F);
        Pt G = e0.step.eval(F.get(), tb.P);
        if (G.inf) G = e0.step.eval(F.get(), tb.Q);
        Ec C = curves_[e0.to].over(F.get());
        std::vector<Fq> xs;
        Pt R = G;
        for (int i = 0; i < (s.ell - 1) / 2; ++i) {
            xs.push_back(R.x);
            R = C.add(R, G);
        }
        target = poly_from_ext_roots(F.get(), xs);
    }
    int di = -1;
    for (size_t i = 0; i < back.size(); ++i)
        if (same_poly(back[i].step.h, target)) di = (int)i;
    if (di < 0) throw Error("InternalError", "dual kernel not found");
    // chi_dual o phi = g^{-d} o [ell]
    const Pt& R = test_point(v);
    Pt img = back[di].step.eval(B, e0.step.eval(B, R));
    Pt lR = curves_[v].base().mul((i64)s.ell, R);
    int e = match_aut(v, B, lR, img);
    Edge& mut = edges_[{v, s.ell}][s.idx];
    mut.dual_idx = di;
    mut.dual_aut = (auts_[v].order - e) % auts_[v].order;
    return mut;
}

std::pair<int, int> Atlas::push_aut(int v, StepRef s, int e) const {
    int n = auts_[v].order;
    e = ((e % n) + n) % n;
    if (e == 0) return {s.idx, 0};
    auto key = std::make_tuple(v, s.ell, s.idx, e);
    auto it = push_.find(key);
    if (it != push_.end()) return it->second;
    const Fp2& k = K();
    const std::vector<Edge>& es = edges(v, s.ell);
    const Edge& e0 = es[s.idx];
    // kernel of step o g^e is g^{-e}(ker step): abscissas scale by w = u^{-2e}
    F2 w = k.inv(k.pow(auts_[v].u, (u64)(2 * e)));
    Poly h2 = e0.step.h;
    int d = poly::deg(h2);
    for (int i = 0; i <= d; ++i) h2[i] = k.mul(h2[i], k.pow(w, (u64)(d - i)));
    int i2 = -1;
    for (size_t i = 0; i < es.size(); ++i)
        if (same_poly(es[i].step.h, h2)) i2 = (int)i;
    if (i2 < 0) throw Error("InternalError", "automorphism image of a kernel not found");
    const FieldCtx* B = base().get();
    const Pt& R = test_point(v);
    Pt lhs = e0.step.eval(B, apply_aut(v, e, B, R));
    Pt rhs = es[i2].step.eval(B, R);
    int e2 = match_aut(e0.to, B, rhs, lhs);
    return push_[key] = {i2, e2};
}

// ---------------------------------------------------------------- paths

mpz_class IsogenyPath::degree(const Atlas&) const {
    mpz_class d = 1;
    for (const StepRef& s : steps) d *= s.ell;
    return d;
}

IsogenyPath make_path(const Atlas& G, int start, const std::vector<StepRef>& steps) {
    IsogenyPath w;
    w.start = w.end = start;
    for (const StepRef& s : steps) {
        if (s.idx < 0 || s.idx > s.ell) throw Error("InvalidArgument", "kernel index out of range");
        w.end = G.edge(w.end, s).to;
        w.steps.push_back(s);
    }
    return w;
}

bool backtracks(const Atlas& G, int from, StepRef prev, StepRef next) {
    if (prev.ell != next.ell) return false;
    return G.edge_with_dual(from, prev).dual_idx == next.idx;
}

Pt eval_path(const Atlas& G, const IsogenyPath& w, const FieldCtx* F, const Pt& P) {
    Pt R = P;
    int v = w.start;
    for (const StepRef& s : w.steps) {
        const Edge& e = G.edge(v, s);
        R = e.step.eval(F, R);
        v = e.to;
    }
    return R;
}

IsogenyPath random_walk(const Atlas& G, int start, int ell, int len, Rng& rng, WalkMode mode) {
    IsogenyPath w;
    w.start = w.end = start;
    int prev_from = -1;
    for (int t = 0; t < len; ++t) {
        StepRef s{ell, 0};
        if (mode == WalkMode::uniform || w.steps.empty()) {
            s.idx = (int)rng.below(ell + 1);
        } else {
            int banned = G.edge_with_dual(prev_from, w.steps.back()).dual_idx;
            int r = (int)rng.below(ell);
            s.idx = r < banned ? r : r + 1;
        }
        prev_from = w.end;
        w.end = G.edge(w.end, s).to;
        w.steps.push_back(s);
    }
    return w;
}

IsogenyPath cgl_path(const Atlas& G, int start, int ell, const std::vector<int>& digits) {
    IsogenyPath w;
    w.start = w.end = start;
    int banned = 0;
    for (int d : digits) {
        if (d < 0 || d >= ell) throw Error("InvalidArgument", "digit out of range");
        StepRef s{ell, d < banned ? d : d + 1};
        const Edge& e = G.edge_with_dual(w.end, s);
        banned = e.dual_idx;
        w.end = e.to;
        w.steps.push_back(s);
    }
    return w;
}

F2 cgl_hash(const Atlas& G, int start, int ell, const std::vector<int>& digits) {
    return G.j(cgl_path(G, start, ell, digits).end);
}

std::vector<GraphEdge> isogeny_graph(const Atlas& G, int ell) {
    std::vector<GraphEdge> out;
    for (int v = 0; v < G.size(); ++v) {
        std::map<int, int> mult;
        for (const Edge& e : G.edges(v, ell)) ++mult[e.to];
        for (auto [to, m] : mult) out.push_back({v, to, m});
    }
    return out;
}

}  // namespace isolab
