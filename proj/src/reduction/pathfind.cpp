#include <cmath>

#include "isolab/reduction.hpp"

namespace isolab {

int default_mitm_len(u64 p, int ell) {
    int n = 0;
    for (mpz_class x = 1; x < (unsigned long)p; x *= ell) ++n;
    return n + 2;
}

// the same isogenies read backwards, automorphisms dropped
static std::vector<StepRef> reversed_steps(const Atlas& G, const IsogenyPath& w) {
    std::vector<int> verts{w.start};
    for (auto& s : w.steps) verts.push_back(G.edge(verts.back(), s).to);
    std::vector<StepRef> out;
    for (size_t i = w.steps.size(); i-- > 0;) {
        const Edge& e = G.edge_with_dual(verts[i], w.steps[i]);
        out.push_back(StepRef{e.ell, e.dual_idx});
    }
    return out;
}

MitmResult isogeny_path_mitm(const Atlas& G, int v0, int v1, int ell, int n, u64 seed, long max_walks) {
    if (n < 0) throw Error("InvalidArgument", "walk length must be >= 0");
    MitmResult r;
    Rng rng(seed);
    // the graph may have fewer than sqrt(p) vertices at small p
    r.table_size = std::min<int>((int)std::ceil(std::sqrt((double)G.p())), G.size());
    std::map<int, IsogenyPath> table;
    while ((int)table.size() < r.table_size) {
        if (r.walks() >= max_walks) throw Error("Timeout", "table phase exceeded the walk budget");
        IsogenyPath w = random_walk(G, v0, ell, n, rng, WalkMode::uniform);
        ++r.table_walks;
        table.emplace(w.end, std::move(w));
    }
    for (;;) {
        if (r.walks() >= max_walks) throw Error("Timeout", "probe phase exceeded the walk budget");
        IsogenyPath w = random_walk(G, v1, ell, n, rng, WalkMode::uniform);
        ++r.probe_walks;
        auto it = table.find(w.end);
        if (it == table.end()) continue;
        std::vector<StepRef> steps = it->second.steps;
        for (auto& s : reversed_steps(G, w)) steps.push_back(s);
        r.path = make_path(G, v0, steps);
        if (r.path.end != v1 || G.j(r.path.end) != G.j(v1)) throw Error("InternalError", "path misses its target");
        return r;
    }
}

IsogenyOracle mitm_oracle(const Atlas& G, int ell, u64 seed) {
    auto calls = std::make_shared<u64>(0);
    int n = default_mitm_len(G.p(), ell);
    return [&G, ell, seed, calls, n](int from, int to) {
        return isogeny_path_mitm(G, from, to, ell, n, seed * 0x100000001b3ull + (*calls)++).path;
    };
}

Alg6Result one_end_from_isogeny_oracle(const EndoLab& L, int v, const IsogenyOracle& iso, double eps, u64 seed,
                                       std::optional<int> n_override, int max_iterations) {
    const Atlas& G = L.atlas();
    const TorsionCache& tc = L.torsion();
    if (!n_override && !(eps > 0 && eps < 1.0 / 3)) throw Error("InvalidArgument", "eps must lie in (0, 1/3)");
    Alg6Result r;
    r.n = n_override ? *n_override
                     : (int)std::ceil(2 * std::log((double)G.p()) / std::log(3.0) - 4 * std::log(eps) / std::log(3.0));
    Rng rng(seed);
    // P: first point of the stored basis of E[2]
    for (r.iterations = 1; r.iterations <= max_iterations; ++r.iterations) {
        IsogenyPath phi = random_walk(G, v, 3, r.n, rng, WalkMode::non_backtracking);
        Mat2 F = tc.walk(reduce_walk(G, phi), 2);
        u64 x = F.a, y = F.c;  // phi(P)
        int w = phi.end, nu = -1;
        for (int idx = 0; idx < (int)G.edges(w, 2).size(); ++idx) {
            const Mat2& S = tc.step(w, StepRef{2, idx}, 2);
            if ((S.a * x + S.b * y) % 2 == 0 && (S.c * x + S.d * y) % 2 == 0) {
                nu = idx;
                break;
            }
        }
        if (nu < 0) throw Error("InternalError", "no 2-isogeny kills phi(P)");
        int u = G.edge(w, StepRef{2, nu}).to;
        IsogenyPath psi = iso(u, v);
        if (psi.start != u || psi.end != v) throw Error("OracleFailure", "isogeny oracle returned a wrong path");
        std::vector<StepRef> steps = phi.steps;
        steps.push_back(StepRef{2, nu});
        for (auto& s : psi.steps) steps.push_back(s);
        // backtracking pairs of 2-steps are the factors of 2 in psi o nu o phi
        RWalk a = reduce_walk(G, make_path(G, v, steps));
        a.scalar = sgn(a.scalar) < 0 ? -1 : 1;
        bool even = false;
        for (auto& s : a.steps) even |= s.ell == 2;
        if (!even) continue;
        r.walk = a;
        r.alpha = L.walk(a);
        return r;
    }
    throw Error("Timeout", "no endomorphism of even degree");
}

EndoRep cgl_collision_to_endo(const EndoLab& L, int v, int ell, const std::vector<int>& m,
                              const std::vector<int>& m2) {
    const Atlas& G = L.atlas();
    if (m == m2) throw Error("NotACollision", "identical messages");
    if (cgl_hash(G, v, ell, m) != cgl_hash(G, v, ell, m2)) throw Error("NotACollision", "hashes differ");
    RWalk a = reduce_walk(G, cgl_path(G, v, ell, m));
    RWalk b = reduce_walk(G, cgl_path(G, v, ell, m2));
    RWalk c = concat(G, b, dual_walk(G, a));
    if (is_scalar_walk(c)) throw Error("InternalError", "collision gave a scalar");
    return L.walk(c);
}

ReductionResult endring_unconditional(const EndoLab& L, int v, u64 seed, const ReductionParams& P) {
    IsogenyOracle iso = mitm_oracle(L.atlas(), 2, seed);
    auto calls = std::make_shared<u64>(0);
    OneEnd O = [&L, iso, seed, calls](int w) {
        return one_end_from_isogeny_oracle(L, w, iso, 0.25, seed * 7919 + (*calls)++).alpha;
    };
    ReductionParams Q = P;
    Q.seed = seed;
    return one_end_to_endring(L, v, O, Q);
}

}  // namespace isolab
