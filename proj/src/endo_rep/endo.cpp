#include <algorithm>
#include <functional>
#include <numeric>

#include "isolab/endo.hpp"

namespace isolab {

using Kind = EndoRep::Kind;

EndoRep::Kind EndoRep::kind() const { return n_->kind; }
int EndoRep::domain() const { return n_->dom; }
int EndoRep::codomain() const { return n_->cod; }
const mpz_class& EndoRep::degree_bound() const { return n_->dg ? *n_->dg : n_->deg_bound; }
std::optional<mpz_class> EndoRep::known_trace() const { return n_->tr; }
std::optional<mpz_class> EndoRep::known_degree() const { return n_->dg; }

namespace {

mpz_class isqrt_ceil(const mpz_class& n) {
    if (n <= 0) return 0;
    mpz_class r;
    mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
    if (r * r < n) ++r;
    return r;
}

u64 to_u64(const mpz_class& x) {
    if (x < 0 || mpz_sizeinbase(x.get_mpz_t(), 2) > 63) throw Error("Overflow", "value exceeds 63 bits");
    return (u64)mpz_get_ui(x.get_mpz_t());
}

u64 ipow(u64 q, int e) {
    u64 r = 1;
    for (int i = 0; i < e; ++i) {
        if (r > (u64(1) << 62) / q) throw Error("ExtensionTooLarge", "torsion level overflows 62 bits");
        r *= q;
    }
    return r;
}

std::shared_ptr<EndoNode> fresh(Kind k, int dom, int cod) {
    auto n = std::make_shared<EndoNode>();
    n->kind = k;
    n->dom = dom;
    n->cod = cod;
    return n;
}

void merge_depth(std::map<u64, int>& into, const std::map<u64, int>& from) {
    for (auto [q, a] : from) into[q] = std::max(into[q], a);
}

// x = r1 mod m1, x = r2 mod m2 (coprime)
u64 crt2(u64 r1, u64 m1, u64 r2, u64 m2) {
    mpz_class M1((unsigned long)m1), M2((unsigned long)m2), inv;
    mpz_invert(inv.get_mpz_t(), M1.get_mpz_t(), M2.get_mpz_t());
    mpz_class t = (mpz_class((unsigned long)r2) - mpz_class((unsigned long)r1)) * inv % M2;
    if (t < 0) t += M2;
    return to_u64(mpz_class((unsigned long)r1) + M1 * t);
}

}  // namespace

EndoLab::EndoLab(const Atlas& G, EndoConfig cfg) : G_(&G), cfg_(cfg), tc_(G) {}

// ---------------------------------------------------------------- constructors

EndoRep EndoLab::scalar(int v, const mpz_class& n) const {
    auto x = fresh(Kind::Scalar, v, v);
    x->n = n;
    x->deg_bound = n * n;
    x->tr = 2 * n;
    x->dg = n * n;
    return EndoRep(x);
}

EndoRep EndoLab::walk(const RWalk& w) const {
    if (w.steps.empty() && w.aut == 0) return scalar(w.start, w.scalar);
    auto x = fresh(Kind::Walk, w.start, w.end);
    x->walk = w;
    x->walk.scalar = 1;
    x->deg_bound = w.core_degree(*G_);
    x->dg = x->deg_bound;
    EndoRep core(x);
    if (w.scalar == 1) return core;
    return lincomb({w.scalar}, {core});
}

EndoRep EndoLab::compose(const EndoRep& f, const EndoRep& g) const {
    if (g.codomain() != f.domain()) throw Error("InvalidArgument", "morphisms do not compose");
    if (f.kind() == Kind::Scalar) return lincomb({f.node().n}, {g});
    if (g.kind() == Kind::Scalar) return lincomb({g.node().n}, {f});
    std::vector<EndoRep> ks;
    for (const EndoRep* h : {&f, &g}) {
        if (h->kind() == Kind::Compose)
            ks.insert(ks.end(), h->node().kids.begin(), h->node().kids.end());
        else
            ks.push_back(*h);
    }
    // fuse neighbouring walks so that backtracking cancels
    std::vector<EndoRep> fused;
    mpz_class c = 1;
    for (int i = (int)ks.size() - 1; i >= 0; --i) {
        EndoRep h = ks[i];
        if (!fused.empty() && h.kind() == Kind::Walk && fused.back().kind() == Kind::Walk) {
            RWalk w = concat(*G_, fused.back().node().walk, h.node().walk);
            c *= w.scalar;
            w.scalar = 1;
            fused.pop_back();
            if (w.steps.empty() && w.aut == 0) continue;
            auto x = fresh(Kind::Walk, w.start, w.end);
            x->walk = w;
            x->deg_bound = w.core_degree(*G_);
            x->dg = x->deg_bound;
            fused.push_back(EndoRep(x));
        } else {
            fused.push_back(h);
        }
    }
    std::reverse(fused.begin(), fused.end());
    EndoRep out;
    if (fused.empty()) {
        out = scalar(g.domain(), 1);
    } else if (fused.size() == 1) {
        out = fused[0];
    } else {
        auto x = fresh(Kind::Compose, fused.back().domain(), fused.front().codomain());
        x->deg_bound = 1;
        bool exact = true;
        mpz_class d = 1;
        for (auto& h : fused) {
            x->deg_bound *= h.degree_bound();
            merge_depth(x->depth, h.node().depth);
            if (h.known_degree()) d *= *h.known_degree();
            else exact = false;
        }
        if (exact) x->dg = d;
        x->kids = std::move(fused);
        out = EndoRep(x);
    }
    return c == 1 ? out : lincomb({c}, {out});
}

EndoRep EndoLab::lincomb(const std::vector<mpz_class>& c, const std::vector<EndoRep>& xs) const {
    if (c.size() != xs.size() || xs.empty()) throw Error("InvalidArgument", "lincomb size mismatch");
    int dom = xs[0].domain(), cod = xs[0].codomain();
    mpz_class s = 0;
    std::vector<std::pair<EndoRep, mpz_class>> terms;
    auto push = [&](const EndoRep& h, const mpz_class& a) {
        if (a == 0) return;
        for (auto& t : terms)
            if (t.first.id() == h.id()) {
                t.second += a;
                return;
            }
        terms.push_back({h, a});
    };
    for (size_t i = 0; i < xs.size(); ++i) {
        const EndoRep& h = xs[i];
        if (h.domain() != dom || h.codomain() != cod) throw Error("InvalidArgument", "lincomb of unrelated morphisms");
        if (h.kind() == Kind::Scalar) {
            s += c[i] * h.node().n;
        } else if (h.kind() == Kind::Sum) {
            for (size_t j = 0; j < h.node().kids.size(); ++j) {
                const EndoRep& k = h.node().kids[j];
                if (k.kind() == Kind::Scalar) s += c[i] * h.node().coef[j] * k.node().n;
                else push(k, c[i] * h.node().coef[j]);
            }
        } else {
            push(h, c[i]);
        }
    }
    terms.erase(std::remove_if(terms.begin(), terms.end(), [](auto& t) { return t.second == 0; }), terms.end());
    if (s != 0 && dom != cod) throw Error("InvalidArgument", "scalar added to a non-endomorphism");
    if (terms.empty()) return scalar(dom, s);
    if (terms.size() == 1 && s == 0 && terms[0].second == 1) return terms[0].first;

    auto x = fresh(Kind::Sum, dom, cod);
    mpz_class root = 0;
    for (auto& [h, a] : terms) {
        x->kids.push_back(h);
        x->coef.push_back(a);
        root += abs(a) * isqrt_ceil(h.degree_bound());
        merge_depth(x->depth, h.node().depth);
    }
    if (s != 0) {
        x->kids.push_back(scalar(dom, 1));
        x->coef.push_back(s);
        root += abs(s);
    }
    x->deg_bound = root * root;
    if (terms.size() == 1) {
        const EndoRep& h = terms[0].first;
        const mpz_class& a = terms[0].second;
        if (h.known_degree() && (s == 0 || h.known_trace())) {
            mpz_class t = h.known_trace() ? *h.known_trace() : 0;
            x->dg = a * a * *h.known_degree() + a * s * t;
            *x->dg += s * s;
            if (h.known_trace()) x->tr = a * t + 2 * s;
        }
    }
    return EndoRep(x);
}

EndoRep EndoLab::affine(const EndoRep& x, const mpz_class& c, const mpz_class& s) const {
    return lincomb({c, s}, {x, scalar(x.domain(), 1)});
}

EndoRep EndoLab::div_exact(const EndoRep& x, const mpz_class& d) const {
    if (d <= 0) throw Error("InvalidArgument", "divisor must be positive");
    if (d == 1) return x;
    if (x.kind() == Kind::Scalar && x.node().n % d == 0) return scalar(x.domain(), x.node().n / d);
    if (x.kind() == Kind::Div) return div_exact(x.node().kids[0], x.node().n * d);
    auto n = fresh(Kind::Div, x.domain(), x.codomain());
    n->n = d;
    n->kids = {x};
    n->depth = x.node().depth;
    for (auto& [q, e] : factor_mpz(d)) {
        if (q == p()) continue;
        n->depth[to_u64(q)] += e;
    }
    mpz_class d2 = d * d;
    n->deg_bound = (x.degree_bound() + d2 - 1) / d2;
    if (x.known_degree()) {
        if (*x.known_degree() % d2 != 0) throw Error("NotDivisible", "degree not divisible by d^2");
        n->dg = *x.known_degree() / d2;
    }
    if (x.known_trace()) {
        if (*x.known_trace() % d != 0) throw Error("NotDivisible", "trace not divisible by d");
        n->tr = *x.known_trace() / d;
    }
    return EndoRep(n);
}

// ---------------------------------------------------------------- actions

Mat2 EndoLab::act(const EndoRep& x, u64 q, int top, int v) const {
    const EndoNode& n = x.node();
    auto key = std::make_tuple(q, top, v);
    auto it = n.memo.find(key);
    if (it != n.memo.end()) return it->second;
    u64 M = ipow(q, v);
    Mat2 r;
    switch (n.kind) {
    case Kind::Scalar:
        r = mat2::scalar(n.n, M);
        break;
    case Kind::Walk:
        r = mat2::reduce(tc_.walk(n.walk, ipow(q, top)), M);
        break;
    case Kind::Compose:
        r = act(n.kids.back(), q, top, v);
        for (int i = (int)n.kids.size() - 2; i >= 0; --i) r = mat2::mul(act(n.kids[i], q, top, v), r, M);
        break;
    case Kind::Sum:
        r = Mat2{};
        for (size_t i = 0; i < n.kids.size(); ++i)
            r = mat2::add(r, mat2::scale(act(n.kids[i], q, top, v), n.coef[i], M), M);
        break;
    case Kind::Div: {
        int a = valuation(n.n, mpz_class((unsigned long)q));
        mpz_class rest = n.n;
        for (int i = 0; i < a; ++i) rest /= (unsigned long)q;
        Mat2 X = act(n.kids[0], q, top, v + a);
        u64 qa = ipow(q, a);
        for (u64 e : {X.a, X.b, X.c, X.d})
            if (e % qa) throw Error("NotDivisible", "numerator is not divisible on torsion");
        r = Mat2{X.a / qa % M, X.b / qa % M, X.c / qa % M, X.d / qa % M};
        u64 rm = mpz_fdiv_ui(rest.get_mpz_t(), M);
        r = mat2::scale(r, mpz_class((unsigned long)invmod_u64(rm, M)), M);
        break;
    }
    }
    n.memo[key] = r;
    return r;
}

Mat2 EndoLab::action_pp(const EndoRep& x, u64 q, int v) const {
    if (q == p()) throw Error("Unsupported", "no p-torsion on supersingular curves");
    auto it = x.node().depth.find(q);
    int top = v + (it == x.node().depth.end() ? 0 : it->second);
    return act(x, q, top, v);
}

Mat2 EndoLab::action(const EndoRep& x, u64 M) const {
    if (M == 0) throw Error("InvalidArgument", "level 0");
    if (M == 1) return Mat2{};
    Mat2 r{};
    u64 acc = 1;
    for (auto [q, e] : factor_u64(M)) {
        u64 m = ipow(q, e);
        Mat2 A = action_pp(x, q, e);
        if (acc == 1) {
            r = A;
        } else {
            r = Mat2{crt2(r.a, acc, A.a, m), crt2(r.b, acc, A.b, m), crt2(r.c, acc, A.c, m), crt2(r.d, acc, A.d, m)};
        }
        acc *= m;
    }
    return r;
}

u64 EndoLab::trace_mod(const EndoRep& x, u64 M) const { return mat2::trace(action(x, M), M); }

// ---------------------------------------------------------------- CRT

const std::vector<Modulus>& EndoLab::moduli() const {
    if (!moduli_.empty()) return moduli_;
    u64 lim = cfg_.crt_modulus_max;
    std::vector<char> comp(lim + 1, 0);
    for (u64 q = 3; q <= lim; q += 2) {
        if (comp[q]) continue;
        for (u64 r = q * q; r <= lim; r += 2 * q) comp[r] = 1;
        if (q == p()) continue;
        for (u64 M = q; M <= lim; M *= q) {
            u64 a = (M - p() % M) % M;
            u64 k = mult_order(a, M, (u64)cfg_.crt_k_max);
            if (k == 0) break;
            moduli_.push_back({M, q, (int)k});
            if (M > lim / q) break;
        }
    }
    std::sort(moduli_.begin(), moduli_.end(),
              [](const Modulus& a, const Modulus& b) { return a.k != b.k ? a.k < b.k : a.M < b.M; });
    return moduli_;
}

mpz_class EndoLab::crt(const EndoRep& x, bool want_trace, const mpz_class& bound,
                       const std::set<u64>& avoid) const {
    mpz_class target = want_trace ? 2 * bound : bound;
    std::map<u64, std::pair<u64, u64>> res;  // q -> (M, residue)
    mpz_class prod = 1;
    int used = 0;
    for (const Modulus& m : moduli()) {
        if (prod > target) break;
        if (avoid.count(m.q) || x.node().depth.count(m.q)) continue;
        auto it = res.find(m.q);
        if (it != res.end() && it->second.first >= m.M) continue;
        int e = 0;
        for (u64 t = m.M; t > 1; t /= m.q) ++e;
        Mat2 A = action_pp(x, m.q, e);
        u64 r = want_trace ? mat2::trace(A, m.M) : mat2::det(A, m.M);
        if (it != res.end()) prod /= (unsigned long)it->second.first;
        prod *= (unsigned long)m.M;
        res[m.q] = {m.M, r};
        ++used;
    }
    if (prod <= target) throw Error("ExtensionTooLarge", "CRT moduli exhausted before the bound");
    crt_used_ = std::max(crt_used_, used);
    mpz_class R = 0, P = 1;
    for (auto& [q, mr] : res) {
        mpz_class m((unsigned long)mr.first), r((unsigned long)mr.second);
        mpz_class inv;
        mpz_invert(inv.get_mpz_t(), P.get_mpz_t(), m.get_mpz_t());
        mpz_class t = (r - R) * inv % m;
        if (t < 0) t += m;
        R += P * t;
        P *= m;
    }
    return want_trace ? centered(R, P) : R;
}

mpz_class EndoLab::trace(const EndoRep& x) const {
    if (x.known_trace()) return *x.known_trace();
    if (!x.is_endo()) throw Error("NotEndomorphism", "trace of a morphism between distinct curves");
    mpz_class t = crt(x, true, 2 * isqrt_ceil(x.degree_bound()), {});
    x.node().tr = t;
    return t;
}

mpz_class EndoLab::degree(const EndoRep& x) const {
    if (x.known_degree()) return *x.known_degree();
    mpz_class d = crt(x, false, x.degree_bound(), {});
    x.node().dg = d;
    return d;
}

mpz_class EndoLab::trace_avoiding(const EndoRep& x, const std::set<u64>& avoid) const {
    return crt(x, true, 2 * isqrt_ceil(x.node().deg_bound), avoid);
}

mpz_class EndoLab::degree_avoiding(const EndoRep& x, const std::set<u64>& avoid) const {
    return crt(x, false, x.node().deg_bound, avoid);
}

mpz_class EndoLab::disc(const EndoRep& x) const {
    mpz_class t = trace(x);
    return t * t - 4 * degree(x);
}

// ---------------------------------------------------------------- division

bool EndoLab::is_divisible(const EndoRep& x, const mpz_class& N) const {
    if (N <= 0) throw Error("InvalidArgument", "N must be positive");
    if (N == 1) return true;
    // necessary conditions first: N | Tr and N^2 | deg settle most cases
    // without torsion over large extensions
    if (x.is_endo() && (trace(x) % N != 0 || degree(x) % (N * N) != 0)) return false;
    for (auto& [q, e] : factor_mpz(N)) {
        if (q == p()) {
            // End(E) (x) Z_p is the maximal order of the ramified algebra:
            // x in p^e End  iff  v_p(deg x) >= 2e
            if (valuation(degree(x), q) < 2 * e) return false;
        } else if (!mat2::is_zero(action_pp(x, to_u64(q), e))) {
            return false;
        }
    }
    return true;
}

std::optional<EndoRep> EndoLab::divide(const EndoRep& x, const mpz_class& N) const {
    if (!is_divisible(x, N)) return std::nullopt;
    return div_exact(x, N);
}

Reduced EndoLab::reduce_at(const EndoRep& x, const mpz_class& N) const {
    if (N < 3 || N % 2 == 0) throw Error("InvalidArgument", "reduce_at needs an odd N >= 3");
    if (!x.is_endo()) throw Error("NotEndomorphism", "reduce_at needs an endomorphism");
    if (is_scalar(x)) throw Error("ScalarInput", "reduce_at of a scalar");
    mpz_class t = trace(x);
    EndoRep gamma = affine(x, 2, -t);
    mpz_class Nj = 1;
    int j = 0;
    while (is_divisible(div_exact(gamma, Nj), N)) {
        Nj *= N;
        ++j;
    }
    // beta = gamma / N^j has trace 0; halve beta or beta + 1 according to the
    // parity of Tr(x), which is what makes the halving exact
    mpz_class t_out = (t % 2 == 0) ? mpz_class(t / 2) : mpz_class((t - Nj) / 2);
    EndoRep beta = div_exact(gamma, Nj);
    if (!is_divisible(t % 2 == 0 ? beta : affine(beta, 1, 1), 2))
        throw Error("InternalError", "halving step of reduce_at failed");
    return {div_exact(affine(x, 1, -t_out), Nj), t_out, j};
}

EndoRep EndoLab::dual(const EndoRep& x) const {
    const EndoNode& n = x.node();
    if (x.is_endo()) return affine(x, -1, trace(x));
    switch (n.kind) {
    case Kind::Walk:
        return walk(dual_walk(*G_, n.walk));
    case Kind::Compose: {
        EndoRep r = dual(n.kids[0]);
        for (size_t i = 1; i < n.kids.size(); ++i) r = compose(dual(n.kids[i]), r);
        return r;
    }
    case Kind::Sum: {
        std::vector<EndoRep> ks;
        for (auto& k : n.kids) ks.push_back(dual(k));
        return lincomb(n.coef, ks);
    }
    case Kind::Div:
        return div_exact(dual(n.kids[0]), n.n);
    case Kind::Scalar:
        break;
    }
    return x;
}

// ---------------------------------------------------------------- points

mpz_class EndoLab::point_order(int v, const FieldPtr& F, const Pt& P) const {
    int k = F->k();
    auto it = group_.find(k);
    if (it == group_.end()) {
        mpz_class pk;
        mpz_ui_pow_ui(pk.get_mpz_t(), p(), (unsigned long)k);
        mpz_class n = (k % 2) ? mpz_class(pk + 1) : mpz_class(pk - 1);
        it = group_.emplace(k, std::make_pair(n, factor_mpz(n))).first;
    }
    return G_->curve(v).over(F.get()).order(P, it->second.first, it->second.second);
}

Pt EndoLab::evaluate(const EndoRep& x, const FieldPtr& F, const Pt& P) const {
    return eval_rec(x, F, P, point_order(x.domain(), F, P));
}

Pt EndoLab::eval_rec(const EndoRep& x, const FieldPtr& F, const Pt& P, const mpz_class& ann) const {
    if (P.inf) return P;
    const EndoNode& n = x.node();
    const FieldCtx* G = F.get();
    switch (n.kind) {
    case Kind::Scalar:
        return G_->curve(n.dom).over(G).mul(n.n, P);
    case Kind::Walk: {
        Pt R = P;
        int v = n.dom;
        for (auto s : n.walk.steps) {
            const Edge& e = G_->edge(v, s);
            R = e.step.eval(G, R);
            v = e.to;
        }
        return n.walk.aut ? G_->apply_aut(v, n.walk.aut, G, R) : R;
    }
    case Kind::Compose: {
        Pt R = P;
        for (int i = (int)n.kids.size() - 1; i >= 0; --i) R = eval_rec(n.kids[i], F, R, ann);
        return R;
    }
    case Kind::Sum: {
        Ec C = G_->curve(n.cod).over(G);
        Pt R = Pt::infinity();
        for (size_t i = 0; i < n.kids.size(); ++i) R = C.add(R, C.mul(n.coef[i], eval_rec(n.kids[i], F, P, ann)));
        return R;
    }
    case Kind::Div:
        break;
    }
    // split ann = o_d * o' with o_d supported on the primes of d
    const EndoRep& y = n.kids[0];
    Ec C = G_->curve(n.dom).over(G);
    mpz_class od = 1, d1 = 1;
    for (auto& [q, e] : factor_mpz(ann)) {
        if (n.n % q != 0) continue;
        mpz_class qe;
        mpz_pow_ui(qe.get_mpz_t(), q.get_mpz_t(), (unsigned long)e);
        od *= qe;
        mpz_pow_ui(qe.get_mpz_t(), q.get_mpz_t(), (unsigned long)valuation(n.n, q));
        d1 *= qe;
    }
    mpz_class o2 = ann / od;
    mpz_class d2 = n.n / d1;
    Pt img = Pt::infinity();
    Pt Pd = P;
    Ec D = G_->curve(n.cod).over(G);
    if (o2 > 1) {
        mpz_class e2, dinv;
        mpz_invert(e2.get_mpz_t(), od.get_mpz_t(), o2.get_mpz_t());
        Pt P2 = C.mul(mpz_class(od * e2), P);
        Pd = C.sub(P, P2);
        mpz_invert(dinv.get_mpz_t(), mpz_class(n.n % o2).get_mpz_t(), o2.get_mpz_t());
        img = eval_rec(y, F, C.mul(dinv, P2), o2);
    }
    if (od > 1 && !Pd.inf) {
        mpz_class mz = od * d1;
        if (mpz_sizeinbase(mz.get_mpz_t(), 2) > 62) throw Error("DenominatorOrderClash", "lifting level too large");
        u64 m = to_u64(mz);
        int k = torsion_degree(p(), m);
        if (k == 0 || G->k() % k != 0)
            throw Error("DenominatorOrderClash", "preimage under the denominator is not rational over the point field");
        TorsionBasis tb = torsion_basis(G_->curve(n.dom), m, F);
        auto [a, b] = basis_coords(C, tb, Pd);
        u64 dd = to_u64(d1);
        if (a % dd || b % dd) throw Error("InternalError", "torsion coordinates not divisible");
        Pt Q0 = C.add(C.mul((i64)(a / dd), tb.P), C.mul((i64)(b / dd), tb.Q));
        mpz_class d2inv;
        mpz_invert(d2inv.get_mpz_t(), mpz_class(d2 % mz).get_mpz_t(), mz.get_mpz_t());
        img = D.add(img, eval_rec(y, F, C.mul(d2inv, Q0), mz));
    }
    return img;
}

// ---------------------------------------------------------------- serialisation

nlohmann::json EndoLab::to_json(const EndoRep& x) const {
    using nlohmann::json;
    json nodes = json::array();
    std::map<const EndoNode*, int> ids;
    std::function<int(const EndoRep&)> go = [&](const EndoRep& h) -> int {
        auto it = ids.find(h.id());
        if (it != ids.end()) return it->second;
        const EndoNode& n = h.node();
        json j;
        switch (n.kind) {
        case Kind::Scalar:
            j = {{"k", "scalar"}, {"v", n.dom}, {"n", n.n.get_str()}};
            break;
        case Kind::Walk: {
            json st = json::array();
            for (auto s : n.walk.steps) st.push_back({s.ell, s.idx});
            j = {{"k", "walk"}, {"start", n.walk.start}, {"steps", st}, {"aut", n.walk.aut}};
            break;
        }
        case Kind::Compose:
        case Kind::Sum: {
            json ks = json::array(), cs = json::array();
            for (auto& k : n.kids) ks.push_back(go(k));
            for (auto& c : n.coef) cs.push_back(c.get_str());
            j = {{"k", n.kind == Kind::Sum ? "sum" : "compose"}, {"kids", ks}};
            if (n.kind == Kind::Sum) j["coef"] = cs;
            break;
        }
        case Kind::Div:
            j = {{"k", "div"}, {"kid", go(n.kids[0])}, {"d", n.n.get_str()}};
            break;
        }
        if (n.tr) j["tr"] = n.tr->get_str();
        if (n.dg) j["dg"] = n.dg->get_str();
        nodes.push_back(j);
        return ids[h.id()] = (int)nodes.size() - 1;
    };
    int root = go(x);
    return {{"nodes", nodes}, {"root", root}};
}

EndoRep EndoLab::from_json(const nlohmann::json& j) const {
    std::vector<EndoRep> built;
    for (const auto& n : j.at("nodes")) {
        std::string k = n.at("k");
        EndoRep r;
        if (k == "scalar") {
            r = scalar(n.at("v").get<int>(), mpz_class(n.at("n").get<std::string>()));
        } else if (k == "walk") {
            std::vector<StepRef> st;
            for (auto& s : n.at("steps")) st.push_back({s[0].get<int>(), s[1].get<int>()});
            RWalk w;
            w.start = n.at("start").get<int>();
            WalkBuilder b(*G_, w.start);
            for (auto s : st) b.step(s);
            b.aut(n.at("aut").get<int>());
            r = walk(b.walk());
        } else if (k == "compose") {
            auto& ks = n.at("kids");
            r = built.at(ks.back().get<int>());
            for (int i = (int)ks.size() - 2; i >= 0; --i) r = compose(built.at(ks[i].get<int>()), r);
        } else if (k == "sum") {
            std::vector<mpz_class> cs;
            std::vector<EndoRep> xs;
            for (auto& c : n.at("coef")) cs.emplace_back(c.get<std::string>());
            for (auto& i : n.at("kids")) xs.push_back(built.at(i.get<int>()));
            r = lincomb(cs, xs);
        } else if (k == "div") {
            r = div_exact(built.at(n.at("kid").get<int>()), mpz_class(n.at("d").get<std::string>()));
        } else {
            throw Error("ParseError", "unknown node kind " + k);
        }
        if (n.contains("tr") && !r.node().tr) r.node().tr = mpz_class(n["tr"].get<std::string>());
        if (n.contains("dg") && !r.node().dg) r.node().dg = mpz_class(n["dg"].get<std::string>());
        built.push_back(r);
    }
    return built.at(j.at("root").get<int>());
}

}  // namespace isolab
