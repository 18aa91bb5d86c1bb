#include "isolab/endo.hpp"

namespace isolab {

namespace mat2 {

static u64 mm(u64 x, u64 y, u64 M) { return (u64)((u128)x * y % M); }
static u64 ma(u64 x, u64 y, u64 M) { return (u64)(((u128)x + y) % M); }

static u64 from_mpz(const mpz_class& n, u64 M) { return mpz_fdiv_ui(n.get_mpz_t(), M); }

Mat2 scalar(const mpz_class& n, u64 M) {
    u64 s = from_mpz(n, M);
    return {s, 0, 0, s};
}

Mat2 mul(const Mat2& x, const Mat2& y, u64 M) {
    return {ma(mm(x.a, y.a, M), mm(x.b, y.c, M), M), ma(mm(x.a, y.b, M), mm(x.b, y.d, M), M),
            ma(mm(x.c, y.a, M), mm(x.d, y.c, M), M), ma(mm(x.c, y.b, M), mm(x.d, y.d, M), M)};
}

Mat2 add(const Mat2& x, const Mat2& y, u64 M) {
    return {ma(x.a, y.a, M), ma(x.b, y.b, M), ma(x.c, y.c, M), ma(x.d, y.d, M)};
}

Mat2 scale(const Mat2& x, const mpz_class& s, u64 M) {
    u64 t = from_mpz(s, M);
    return {mm(x.a, t, M), mm(x.b, t, M), mm(x.c, t, M), mm(x.d, t, M)};
}

Mat2 reduce(const Mat2& x, u64 M) { return {x.a % M, x.b % M, x.c % M, x.d % M}; }

u64 det(const Mat2& x, u64 M) {
    u64 l = mm(x.a, x.d, M), r = mm(x.b, x.c, M);
    return l >= r ? l - r : l + (M - r);
}

u64 trace(const Mat2& x, u64 M) { return ma(x.a, x.d, M); }

bool is_zero(const Mat2& x) { return !x.a && !x.b && !x.c && !x.d; }

bool is_scalar(const Mat2& x, u64 M) { return x.b % M == 0 && x.c % M == 0 && (x.a % M) == (x.d % M); }

std::optional<Mat2> inverse(const Mat2& x, u64 M) {
    u64 dt = det(x, M);
    if (gcd_u64(dt, M) != 1) return std::nullopt;
    u64 di = invmod_u64(dt, M);
    auto neg = [M](u64 v) { return v % M ? M - v % M : 0; };
    return Mat2{mm(x.d, di, M), mm(neg(x.b), di, M), mm(neg(x.c), di, M), mm(x.a, di, M)};
}

}  // namespace mat2

// ---------------------------------------------------------------- walks

mpz_class RWalk::core_degree(const Atlas&) const {
    mpz_class d = 1;
    for (auto s : steps) d *= s.ell;
    return d;
}

WalkBuilder::WalkBuilder(const Atlas& G, int start) : G_(&G) {
    w_.start = w_.end = start;
    verts_.push_back(start);
}

WalkBuilder::WalkBuilder(const Atlas& G, RWalk w) : G_(&G), w_(std::move(w)) {
    verts_.push_back(w_.start);
    for (auto s : w_.steps) verts_.push_back(G.edge(verts_.back(), s).to);
    pending_ = w_.aut;
}

void WalkBuilder::aut(int e) {
    int n = G_->aut_order(w_.end);
    pending_ = (((pending_ + e) % n) + n) % n;
}

void WalkBuilder::step(StepRef s) {
    int v = w_.end;
    auto [idx, e2] = G_->push_aut(v, s, pending_);
    StepRef s2{s.ell, idx};
    if (!w_.steps.empty() && w_.steps.back().ell == s.ell) {
        int u = verts_[verts_.size() - 2];
        const Edge& prev = G_->edge_with_dual(u, w_.steps.back());
        if (prev.dual_idx == idx) {
            // chi_dual o chi_prev = g_u^{-d} [ell]
            w_.steps.pop_back();
            verts_.pop_back();
            w_.end = u;
            w_.scalar *= s.ell;
            int n = G_->aut_order(u);
            pending_ = (((e2 - prev.dual_aut) % n) + n) % n;
            return;
        }
    }
    w_.steps.push_back(s2);
    w_.end = G_->edge(v, s2).to;
    verts_.push_back(w_.end);
    pending_ = e2;
}

RWalk WalkBuilder::walk() const {
    RWalk r = w_;
    int n = G_->aut_order(r.end);
    r.aut = pending_;
    if (r.aut >= n / 2) {
        r.aut -= n / 2;
        r.scalar = -r.scalar;
    }
    return r;
}

RWalk reduce_walk(const Atlas& G, const IsogenyPath& w) {
    WalkBuilder b(G, w.start);
    for (auto s : w.steps) b.step(s);
    return b.walk();
}

RWalk concat(const Atlas& G, const RWalk& first, const RWalk& then) {
    if (first.end != then.start) throw Error("InvalidArgument", "walks do not compose");
    WalkBuilder b(G, first);
    for (auto s : then.steps) b.step(s);
    b.aut(then.aut);
    b.scale(then.scalar);
    return b.walk();
}

RWalk dual_walk(const Atlas& G, const RWalk& w) {
    std::vector<int> verts{w.start};
    for (auto s : w.steps) verts.push_back(G.edge(verts.back(), s).to);
    WalkBuilder b(G, w.end);
    b.aut(-w.aut);
    b.scale(w.scalar);
    for (int i = (int)w.steps.size() - 1; i >= 0; --i) {
        const Edge& e = G.edge_with_dual(verts[i], w.steps[i]);
        b.step({e.ell, e.dual_idx});
        b.aut(e.dual_aut);
    }
    return b.walk();
}

// ---------------------------------------------------------------- torsion cache

const TorsionBasis& TorsionCache::basis(int v, u64 M) const {
    auto key = std::make_pair(v, M);
    auto it = bases_.find(key);
    if (it != bases_.end()) return it->second;
    int k = torsion_degree(G_->p(), M);
    if (k == 0) throw Error("Unsupported", "torsion level shares a factor with p");
    if (k > G_->tower().config().k_max)
        throw Error("ExtensionTooLarge", "level " + std::to_string(M) + " needs k = " + std::to_string(k));
    return bases_[key] = torsion_basis(G_->curve(v), M, G_->tower().at(k));
}

const Mat2& TorsionCache::step(int v, StepRef s, u64 M) const {
    auto key = std::make_tuple(v, s.ell, s.idx, M);
    auto it = steps_.find(key);
    if (it != steps_.end()) return it->second;
    const Edge& e = G_->edge(v, s);
    const TorsionBasis& B1 = basis(v, M);
    const TorsionBasis& B2 = basis(e.to, M);
    const FieldCtx* F = B1.F.get();
    Ec C = G_->curve(e.to).over(F);
    auto [a, c] = basis_coords(C, B2, e.step.eval(F, B1.P));
    auto [b, d] = basis_coords(C, B2, e.step.eval(F, B1.Q));
    return steps_[key] = Mat2{a, b, c, d};
}

const Mat2& TorsionCache::aut(int v, int e, u64 M) const {
    int n = G_->aut_order(v);
    e = ((e % n) + n) % n;
    auto key = std::make_tuple(v, e, M);
    auto it = auts_.find(key);
    if (it != auts_.end()) return it->second;
    const TorsionBasis& B = basis(v, M);
    const FieldCtx* F = B.F.get();
    Ec C = G_->curve(v).over(F);
    auto [a, c] = basis_coords(C, B, G_->apply_aut(v, e, F, B.P));
    auto [b, d] = basis_coords(C, B, G_->apply_aut(v, e, F, B.Q));
    return auts_[key] = Mat2{a, b, c, d};
}

Mat2 TorsionCache::walk(const RWalk& w, u64 M) const {
    Mat2 r = mat2::scalar(1, M);
    int v = w.start;
    for (auto s : w.steps) {
        r = mat2::mul(step(v, s, M), r, M);
        v = G_->edge(v, s).to;
    }
    if (w.aut) r = mat2::mul(aut(v, w.aut, M), r, M);
    return r;
}

}  // namespace isolab
