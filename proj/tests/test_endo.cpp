#include "doctest.h"
#include <deque>

#include "isolab/endo.hpp"

using namespace isolab;

namespace {

std::vector<Pt> points(const Atlas& G, int v, const FieldPtr& F, int n, u64 seed) {
    Ec C = G.curve(v).over(F.get());
    Rng rng(seed);
    std::vector<Pt> out;
    for (int i = 0; i < n; ++i) out.push_back(C.random_point(rng));
    return out;
}

// compares on random points times `cofactor`
bool same_map(const EndoLab& L, const EndoRep& a, const EndoRep& b, const FieldPtr& F, int n, u64 seed,
              long cofactor = 1) {
    const Atlas& G = L.atlas();
    Ec C = G.curve(a.domain()).over(F.get()), D = G.curve(a.codomain()).over(F.get());
    for (const Pt& P0 : points(G, a.domain(), F, n, seed)) {
        Pt P = C.mul(cofactor, P0);
        if (!D.eq(L.evaluate(a, F, P), L.evaluate(b, F, P))) return false;
    }
    return true;
}

// shortest ell-walk from u to v (breadth first)
std::vector<StepRef> route(const Atlas& G, int u, int v, int ell) {
    std::map<int, std::pair<int, StepRef>> from{{u, {-1, {}}}};
    std::deque<int> todo{u};
    while (!from.count(v)) {
        int x = todo.front();
        todo.pop_front();
        for (int i = 0; i <= ell; ++i) {
            int y = G.edge(x, {ell, i}).to;
            if (!from.count(y)) from[y] = {x, {ell, i}}, todo.push_back(y);
        }
    }
    std::vector<StepRef> out;
    for (int x = v; x != u; x = from[x].first) out.push_back(from[x].second);
    return {out.rbegin(), out.rend()};
}

// a reduced closed walk at v with at least one step, i.e. a non-scalar endomorphism
EndoRep closed_walk(const EndoLab& L, int v, int ell, int len, Rng& rng) {
    const Atlas& G = L.atlas();
    for (;;) {
        IsogenyPath w = random_walk(G, v, ell, len, rng, WalkMode::non_backtracking);
        for (StepRef s : route(G, w.end, v, ell)) w.steps.push_back(s);
        w.end = v;
        RWalk r = reduce_walk(G, w);
        if (!r.steps.empty()) return L.walk(r);
    }
}

// Frobenius x -> x^{p^2} on E[M] in the cached basis, computed coordinate-wise
Mat2 frobenius_matrix(const EndoLab& L, int v, u64 M) {
    const TorsionBasis& tb = L.torsion().basis(v, M);
    Ec C = L.atlas().curve(v).over(tb.F.get());
    mpz_class q = mpz_class((unsigned long)L.p()) * L.p();
    auto fr = [&](const Pt& P) { return Pt{pow(P.x, q), pow(P.y, q), false}; };
    auto [a, c] = basis_coords(C, tb, fr(tb.P));
    auto [b, d] = basis_coords(C, tb, fr(tb.Q));
    return {a, b, c, d};
}

}  // namespace

TEST_CASE("walk reduction preserves the map") {
    for (u64 p : {31ul, 101ul}) {
        Atlas G(p);
        EndoLab L(G);
        Rng rng(7 + p);
        const FieldPtr& F = G.base();
        for (int ell : {2, 3}) {
            for (int v = 0; v < G.size(); ++v) {
                IsogenyPath w = random_walk(G, v, ell, 14, rng, WalkMode::uniform);
                RWalk r = reduce_walk(G, w);
                CHECK(r.end == w.end);
                EndoRep x = L.walk(r);
                Ec D = G.curve(w.end).over(F.get());
                for (const Pt& P : points(G, v, F, 4, 11 + v)) CHECK(D.eq(eval_path(G, w, F.get(), P), L.evaluate(x, F, P)));
                // scalar factor accounts for every cancelled pair
                mpz_class full = w.degree(G);
                CHECK(full == r.core_degree(G) * r.scalar * r.scalar);
                for (size_t i = 0; i + 1 < r.steps.size(); ++i) {
                    int u = make_path(G, v, std::vector<StepRef>(r.steps.begin(), r.steps.begin() + i + 1)).end;
                    int prev_from = make_path(G, v, std::vector<StepRef>(r.steps.begin(), r.steps.begin() + i)).end;
                    (void)u;
                    CHECK_FALSE(backtracks(G, prev_from, r.steps[i], r.steps[i + 1]));
                }
            }
        }
    }
}

TEST_CASE("dual walks cancel completely") {
    for (u64 p : {31ul, 101ul}) {
        Atlas G(p);
        EndoLab L(G);
        Rng rng(3);
        for (int v = 0; v < G.size(); ++v) {
            RWalk r = reduce_walk(G, random_walk(G, v, 2, 9, rng, WalkMode::non_backtracking));
            RWalk d = dual_walk(G, r);
            RWalk c = concat(G, r, d);
            CHECK(c.steps.empty());
            CHECK(c.aut == 0);
            CHECK(c.scalar == r.core_degree(G) * r.scalar * r.scalar);
            // evaluation agrees with [deg]
            EndoRep phi = L.walk(r), phid = L.walk(d);
            CHECK(same_map(L, L.compose(phid, phi), L.scalar(v, r.core_degree(G)), G.base(), 3, 5));
        }
    }
}

TEST_CASE("action matrices") {
    Atlas G(101);
    EndoLab L(G);
    Rng rng(1);
    int v = G.index_of(G.K().zero());
    EndoRep a = closed_walk(L, v, 2, 6, rng), b = closed_walk(L, v, 3, 4, rng);
    for (u64 M : {3ul, 5ul, 7ul, 9ul, 25ul, 17ul, 8ul, 15ul}) {
        CHECK(L.action(L.scalar(v, 7), M) == mat2::scalar(7, M));
        Mat2 A = L.action(a, M), B = L.action(b, M);
        CHECK(L.action(L.compose(a, b), M) == mat2::mul(A, B, M));
        CHECK(L.action(L.add(a, b), M) == mat2::add(A, B, M));
        CHECK(mat2::det(A, M) == mpz_fdiv_ui(L.degree(a).get_mpz_t(), M));
        CHECK(mat2::trace(A, M) == mpz_fdiv_ui(L.trace(a).get_mpz_t(), M));
        // phi-hat o phi on E[M]
        const Edge& e = G.edge_with_dual(v, {5 == M ? 2 : 3, 1});
        if (M % e.ell == 0) continue;
        RWalk s;
        s.start = v;
        s.end = e.to;
        s.steps = {{e.ell, 1}};
        EndoRep phi = L.walk(s), phid = L.walk(dual_walk(G, s));
        auto Ms = L.torsion().step(v, {e.ell, 1}, M);
        CHECK(mat2::det(Ms, M) == e.ell % M);
        CHECK(mat2::det(L.action(L.compose(phid, phi), M), M) == (u64)(e.ell * e.ell) % M);
        CHECK(L.action(L.compose(phid, phi), M) == mat2::scalar(e.ell, M));
    }
}

TEST_CASE("trace and degree by CRT") {
    for (u64 p : {31ul, 101ul}) {
        Atlas G(p);
        EndoLab L(G);
        Rng rng(p);
        CHECK(L.trace(L.scalar(0, 5)) == 10);
        CHECK(L.degree(L.scalar(0, -5)) == 25);
        for (int v = 0; v < G.size(); ++v) {
            // Frobenius acts as [-p] on canonical models: trace -2p
            mpz_class r = 0, P = 1;
            for (const Modulus& m : L.moduli()) {
                if (P > 4 * p) break;
                if (P % m.q == 0) continue;
                Mat2 F = frobenius_matrix(L, v, m.M);
                CHECK(F == mat2::scalar(-(long)p, m.M));
                mpz_class mm((unsigned long)m.M), t((unsigned long)mat2::trace(F, m.M)), inv;
                mpz_invert(inv.get_mpz_t(), P.get_mpz_t(), mm.get_mpz_t());
                mpz_class s = (t - r) * inv % mm;
                if (s < 0) s += mm;
                r += P * s;
                P *= mm;
            }
            CHECK(centered(r, P) == -2 * (long)p);

            EndoRep a = closed_walk(L, v, 2, 7, rng);
            mpz_class t = L.trace(a), d = L.degree(a);
            CHECK(mpz_popcount(d.get_mpz_t()) == 1);
            CHECK(t * t < 4 * d);
            CHECK_FALSE(L.is_scalar(a));
            // disjoint moduli agree
            std::set<u64> first;
            for (size_t i = 0; i < 6; ++i) first.insert(L.moduli()[i].q);
            CHECK(L.trace_avoiding(a, first) == t);
            CHECK(L.degree_avoiding(a, first) == d);
            // polarisation of the degree form
            for (auto [x, y] : {std::pair<long, long>{3, -2}, {-5, 7}, {2, 0}}) {
                EndoRep s = L.affine(a, x, y);
                CHECK(L.degree_avoiding(s, {}) == x * x * d + x * y * t + y * y);
                CHECK(L.trace_avoiding(s, {}) == x * t + 2 * y);
                CHECK(L.disc(s) == x * x * L.disc(a));
            }
        }
    }
}

TEST_CASE("divisibility") {
    Atlas G(101);
    EndoLab L(G);
    Rng rng(2);
    int v = 3;
    CHECK(L.is_divisible(L.scalar(v, 6), 3));
    CHECK_FALSE(L.is_divisible(L.scalar(v, 2), 4));
    CHECK(L.is_divisible(L.scalar(v, -101), 101));  // the Frobenius
    EndoRep pi_over_p = *L.divide(L.scalar(v, -101), 101);
    CHECK(same_map(L, pi_over_p, L.scalar(v, -1), G.base(), 4, 1));
    auto two = L.divide(L.scalar(v, 6), 3);
    REQUIRE(two);
    CHECK(two->kind() == EndoRep::Kind::Scalar);
    CHECK(two->node().n == 2);

    EndoRep b = closed_walk(L, v, 2, 5, rng);
    CHECK(L.divide(b, 1)->id() == b.id());
    CHECK_FALSE(L.is_divisible(b, 2));
    CHECK_FALSE(L.is_divisible(b, 3));
    CHECK_FALSE(L.is_divisible(b, 101));
    EndoRep x = L.affine(b, 3, 3);
    auto y = L.divide(x, 3);
    REQUIRE(y);
    CHECK(L.trace(*y) == L.trace(b) + 2);
    CHECK(L.degree(*y) == L.degree(L.affine(b, 1, 1)));
    // points of order prime to 3 go through the inverse of 3
    Ec C = G.curve(v).base();
    for (const Pt& P0 : points(G, v, G.base(), 6, 9)) {
        Pt P = C.mul(3, P0);  // p + 1 = 102 = 2 * 3 * 17
        CHECK(C.eq(L.evaluate(*y, G.base(), P), L.evaluate(L.affine(b, 1, 1), G.base(), P)));
    }
    // points with 3-torsion need a preimage: over F_{p^2} E[9] is not rational
    Pt P3;
    for (const Pt& P0 : points(G, v, G.base(), 20, 10))
        if (L.point_order(v, G.base(), P0) % 3 == 0) P3 = P0;
    REQUIRE_FALSE(P3.inf);
    CHECK_THROWS_WITH_AS(L.evaluate(*y, G.base(), P3), doctest::Contains("DenominatorOrderClash"), Error);
    // E[9] is rational over F_{p^6}, E[27] is not: points of 3-order at most 3 lift
    const FieldPtr& F3 = G.tower().at(3);
    CHECK(same_map(L, *y, L.affine(b, 1, 1), F3, 5, 12, 3));
    Pt P9;
    Ec C3 = G.curve(v).over(F3.get());
    for (const Pt& P0 : points(G, v, F3, 20, 14))
        if (L.point_order(v, F3, P0) % 9 == 0) P9 = P0;
    REQUIRE_FALSE(P9.inf);
    CHECK_THROWS_WITH_AS(L.evaluate(*y, F3, P9), doctest::Contains("DenominatorOrderClash"), Error);
    // d = 3 on a point of order 5: the numerator applied to [2]P
    const FieldPtr& F2 = G.tower().at(2);
    Ec C2 = G.curve(v).over(F2.get());
    mpz_class n2 = mpz_class(101 * 101 - 1);
    int tested = 0;
    for (const Pt& P0 : points(G, v, F2, 10, 13)) {
        Pt P = C2.mul(mpz_class(n2 / 5), P0);
        if (P.inf) continue;
        ++tested;
        CHECK(C2.eq(L.evaluate(*y, F2, P), L.evaluate(x, F2, C2.mul(2, P))));
    }
    CHECK(tested > 0);
}

TEST_CASE("divide by N times alpha") {
    Atlas G(31);
    EndoLab L(G);
    Rng rng(4);
    for (int v = 0; v < G.size(); ++v) {
        EndoRep a = closed_walk(L, v, 3, 3, rng);
        for (long N : {2, 3, 5, 4, 9, 31, 62}) {
            EndoRep na = L.lincomb({N}, {a});
            auto back = L.divide(na, N);
            REQUIRE(back);
            CHECK(L.trace(*back) == L.trace(a));
            CHECK(L.degree(*back) == L.degree(a));
            CHECK(L.action(*back, 7) == L.action(a, 7));
            CHECK_FALSE(L.is_divisible(L.affine(na, 1, 1), N));
        }
    }
}

TEST_CASE("reduce at N") {
    Atlas G(101);
    EndoLab L(G);
    Rng rng(8);
    const FieldPtr& F = G.tower().at(3);
    for (int v : {0, 4}) {
        EndoRep a = closed_walk(L, v, 2, 6, rng);
        Reduced r = L.reduce_at(a, 3);
        EndoRep g = r.beta;
        CHECK(!mat2::is_scalar(L.action(g, 3), 3));
        // 2g - Tr(g) has trace 0 and stays 3-reduced
        EndoRep g0 = L.affine(g, 2, -L.trace(g));
        CHECK(L.trace(g0) == 0);
        Reduced r0 = L.reduce_at(g0, 3);
        CHECK(r0.e == 0);
        CHECK(r0.t == 0);
        CHECK(same_map(L, r0.beta, g0, F, 3, 1));

        Reduced r2 = L.reduce_at(L.affine(g0, 1, 1), 3);
        CHECK(r2.t == 1);
        CHECK(same_map(L, r2.beta, g0, F, 3, 2));

        // odd trace: 1 + 9 g0 has trace 2, 9 g0 + 5 has trace 10
        Reduced r9 = L.reduce_at(L.affine(g0, 9, 1), 3);
        CHECK(r9.e == 2);
        CHECK(same_map(L, r9.beta, g0, F, 3, 3, 9));
        CHECK(!mat2::is_scalar(L.action(r9.beta, 3), 3));
        EndoRep h = L.affine(g, 9, 0);
        Reduced rh = L.reduce_at(h, 3);
        CHECK(rh.e == 2);
        CHECK(L.trace(rh.beta) * 9 + 2 * rh.t == L.trace(h));
    }
    CHECK_THROWS_WITH_AS(L.reduce_at(L.scalar(0, 4), 3), doctest::Contains("ScalarInput"), Error);
}

TEST_CASE("dual and homomorphism") {
    Atlas G(101);
    EndoLab L(G);
    Rng rng(9);
    const FieldPtr& F = G.base();
    int v = G.index_of(G.K().zero());
    EndoRep a = L.add(closed_walk(L, v, 2, 5, rng), closed_walk(L, v, 3, 3, rng));
    EndoRep d = L.dual(a);
    CHECK(same_map(L, L.compose(a, d), L.scalar(v, L.degree(a)), F, 5, 1));
    CHECK(same_map(L, L.compose(d, a), L.scalar(v, L.degree(a)), F, 5, 2));
    CHECK(same_map(L, L.dual(d), a, F, 5, 3));
    CHECK(L.dual(L.scalar(v, 4)).node().n == 4);
    Ec C = G.curve(v).base();
    auto ps = points(G, v, F, 6, 4);
    for (size_t i = 0; i + 1 < ps.size(); ++i)
        CHECK(C.eq(L.evaluate(a, F, C.add(ps[i], ps[i + 1])), C.add(L.evaluate(a, F, ps[i]), L.evaluate(a, F, ps[i + 1]))));
    // structural dual of a morphism between different curves
    RWalk w = reduce_walk(G, random_walk(G, v, 2, 4, rng, WalkMode::non_backtracking));
    if (w.end != v) {
        EndoRep phi = L.walk(w);
        EndoRep x = L.compose(phi, L.compose(a, L.dual(phi)));
        CHECK(L.degree(x) == L.degree(a) * L.degree(phi) * L.degree(phi));
        CHECK(L.trace(x) == L.trace(a) * L.degree(phi));
    }
}

TEST_CASE("serialisation round trip") {
    Atlas G(101);
    EndoLab L(G);
    Rng rng(10);
    EndoRep a = closed_walk(L, 2, 2, 4, rng);
    EndoRep x = L.div_exact(L.affine(L.compose(a, a), 3, 3), 3);
    auto j = L.to_json(x);
    EndoRep y = L.from_json(j);
    CHECK(L.trace(y) == L.trace(x));
    CHECK(L.degree(y) == L.degree(x));
    CHECK(same_map(L, x, y, G.tower().at(3), 3, 1, 3));
}
