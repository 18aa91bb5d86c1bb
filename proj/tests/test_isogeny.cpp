#include "doctest.h"
#include "isolab/isogeny.hpp"

using namespace isolab;

namespace {

// points of E over the smallest field carrying E[ell], plus random points there
struct Probe {
    FieldPtr F;
    std::vector<Pt> pts;
};

Probe probe(const Atlas& G, int v, int k, int n, u64 seed) {
    Probe pr{G.tower().at(k), {}};
    Ec C = G.curve(v).over(pr.F.get());
    Rng rng(seed);
    for (int i = 0; i < n; ++i) pr.pts.push_back(C.random_point(rng));
    return pr;
}

}  // namespace

TEST_CASE("kernel subgroups") {
    Atlas G(101);
    for (int ell : {2, 3, 5, 7}) {
        for (int v = 0; v < G.size(); ++v) {
            auto ks = kernel_subgroups(G.curve(v), ell, G.tower());
            CHECK(ks.size() == (size_t)ell + 1);
            for (size_t i = 0; i + 1 < ks.size(); ++i) CHECK(poly::lex_less(ks[i], ks[i + 1]));
            if (ell > 2) {
                Poly psi = division_poly_odd(G.K(), G.curve(v).A(), G.curve(v).B(), ell);
                CHECK(poly::deg(psi) == (ell * ell - 1) / 2);
                for (auto& h : ks) CHECK(poly::mod(G.K(), psi, h).empty());
                // subgroups are disjoint: product of kernel polynomials is the division polynomial up to scaling
                Poly prod{G.K().one()};
                for (auto& h : ks) prod = poly::mul(G.K(), prod, h);
                CHECK(prod == poly::monic(G.K(), psi));
            }
        }
    }
    auto bad = Poly{G.K().one(), G.K().one()};
    CHECK_THROWS_WITH_AS(velu(G.K(), G.curve(0).A(), G.curve(0).B(), 3, bad), doctest::Contains("InvalidKernel"),
                         Error);
}

TEST_CASE("Velu steps are homomorphisms with the right kernel") {
    Atlas G(101);
    for (int ell : {2, 3, 5}) {
        int k = torsion_degree(101, ell);
        for (int v : {0, G.size() - 1, G.index_of(G.K().zero())}) {
            TorsionBasis tb = torsion_basis(G.curve(v), ell, G.tower().at(k));
            const FieldCtx* F = tb.F.get();
            Probe pr = probe(G, v, k, 6, 100 + ell);
            Ec C = G.curve(v).over(F);
            for (size_t i = 0; i < G.edges(v, ell).size(); ++i) {
                const Edge& e = G.edge_with_dual(v, {ell, (int)i});
                Ec D = G.curve(e.to).over(F);
                // the kernel: exactly ell points of E[ell] die
                int dead = 0;
                for (int a = 0; a < ell; ++a)
                    for (int b = 0; b < ell; ++b)
                        if (e.step.eval(F, C.add(C.mul(a, tb.P), C.mul(b, tb.Q))).inf) ++dead;
                CHECK(dead == ell);
                CHECK(e.step.eval(F, Pt::infinity()).inf);
                for (size_t t = 0; t + 1 < pr.pts.size(); ++t) {
                    Pt P = pr.pts[t], Q = pr.pts[t + 1];
                    Pt fP = e.step.eval(F, P), fQ = e.step.eval(F, Q);
                    CHECK(D.on_curve(fP));
                    CHECK(D.eq(e.step.eval(F, C.add(P, Q)), D.add(fP, fQ)));
                    // dual o step = [ell]
                    const Edge& back = G.edge(e.to, {ell, e.dual_idx});
                    Pt r = G.apply_aut(v, e.dual_aut, F, back.step.eval(F, fP));
                    CHECK(C.eq(r, C.mul(ell, P)));
                }
                // dual of the dual has the original kernel, moved by the automorphism g^-d
                int ii = G.push_aut(v, {ell, (int)i}, e.dual_aut).first;
                CHECK(G.edge_with_dual(e.to, {ell, e.dual_idx}).dual_idx == ii);
                if (G.aut_order(v) == 2) CHECK(ii == (int)i);
            }
        }
    }
}

TEST_CASE("degree from the action on 3-torsion") {
    Atlas G(31);
    int k = torsion_degree(31, 3);
    const FieldPtr& F = G.tower().at(k);
    for (int ell : {2, 5, 7}) {
        for (int v = 0; v < G.size(); ++v) {
            TorsionBasis tb = torsion_basis(G.curve(v), 3, F);
            for (const Edge& e : G.edges(v, ell)) {
                TorsionBasis tb2 = torsion_basis(G.curve(e.to), 3, F);
                Ec D = G.curve(e.to).over(F.get());
                auto [a, c] = basis_coords(D, tb2, e.step.eval(F.get(), tb.P));
                auto [b, d] = basis_coords(D, tb2, e.step.eval(F.get(), tb.Q));
                CHECK((a * d + 9 - (b * c) % 3) % 3 == (u64)ell % 3);
            }
        }
    }
}

TEST_CASE("automorphisms commute past steps") {
    for (u64 p : {31ull, 101ull}) {
        Atlas G(p);
        F2 special = p % 4 == 3 ? G.K().from_int(1728) : G.K().zero();
        int v = G.index_of(special);
        CHECK(G.aut_order(v) == (p % 4 == 3 ? 4 : 6));
        const FieldCtx* B = G.base().get();
        Ec C = G.curve(v).base();
        Rng rng(5);
        for (int ell : {2, 3}) {
            for (int i = 0; i <= ell; ++i) {
                for (int e = 0; e < G.aut_order(v); ++e) {
                    auto [i2, e2] = G.push_aut(v, {ell, i}, e);
                    const Edge& a = G.edge(v, {ell, i});
                    const Edge& b = G.edge(v, {ell, i2});
                    CHECK(a.to == b.to);
                    for (int t = 0; t < 3; ++t) {
                        Pt P = C.random_point(rng);
                        Pt lhs = a.step.eval(B, G.apply_aut(v, e, B, P));
                        Pt rhs = G.apply_aut(a.to, e2, B, b.step.eval(B, P));
                        CHECK(G.curve(a.to).base().eq(lhs, rhs));
                    }
                }
            }
        }
    }
}

TEST_CASE("graph structure") {
    for (u64 p : {31ull, 101ull, 179ull}) {
        Atlas G(p);
        for (int ell : {2, 3}) {
            auto es = isogeny_graph(G, ell);
            std::vector<int> out(G.size(), 0);
            std::map<std::pair<int, int>, int> m;
            for (auto& e : es) {
                out[e.from] += e.multiplicity;
                m[{e.from, e.to}] = e.multiplicity;
            }
            for (int v = 0; v < G.size(); ++v) CHECK(out[v] == ell + 1);
            // Brandt symmetry: m(v,w) / #Aut(v) = m(w,v) / #Aut(w)
            for (auto [k, c] : m) {
                auto [v, w] = k;
                int back = m.count({w, v}) ? m[{w, v}] : 0;
                CHECK(c * G.aut_order(w) == back * G.aut_order(v));
            }
        }
    }
}

TEST_CASE("walks and the CGL hash") {
    Atlas G(101);
    Rng r1(42), r2(42);
    auto w1 = random_walk(G, 0, 2, 30, r1, WalkMode::non_backtracking);
    auto w2 = random_walk(G, 0, 2, 30, r2, WalkMode::non_backtracking);
    CHECK(w1.steps == w2.steps);
    CHECK(w1.end == w2.end);
    CHECK(w1.degree(G) == mpz_class(1) << 30);
    int v = w1.start;
    for (size_t i = 0; i + 1 < w1.steps.size(); ++i) {
        CHECK_FALSE(backtracks(G, v, w1.steps[i], w1.steps[i + 1]));
        v = G.edge(v, w1.steps[i]).to;
    }
    Rng r3(1);
    auto w0 = random_walk(G, 3, 2, 0, r3, WalkMode::uniform);
    CHECK(w0.end == 3);
    CHECK(cgl_hash(G, 2, 2, {}) == G.j(2));
    std::vector<int> msg{1, 0, 0, 1, 1, 0, 1};
    CHECK(cgl_hash(G, 2, 2, msg) == cgl_hash(G, 2, 2, msg));
    // walk evaluation composes the steps
    auto path = cgl_path(G, 2, 2, msg);
    CHECK(path.length() == 7);
    CHECK(path.steps[0].idx != 0);
    const FieldCtx* B = G.base().get();
    Ec C = G.curve(2).base();
    Rng rng(8);
    Pt P = C.random_point(rng), Q = C.random_point(rng);
    Ec D = G.curve(path.end).base();
    CHECK(D.eq(eval_path(G, path, B, C.add(P, Q)), D.add(eval_path(G, path, B, P), eval_path(G, path, B, Q))));
}
