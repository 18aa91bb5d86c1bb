#include "doctest.h"
#include <cmath>
#include <filesystem>

#include "isolab/engine.hpp"

using namespace isolab;

namespace {

EngineOptions no_cache(u64 seed = 1) {
    EngineOptions o;
    o.seed = seed;
    o.use_cache = false;
    return o;
}

void check_entry(const CurveTable& T, int v) {
    const EndoLab& L = T.lab();
    const EndEntry& e = T.entry(v);
    mpz_class p((unsigned long)T.p());
    REQUIRE(e.basis.size() == 4);
    CHECK(L.trace(e.basis[0]) == 2);
    CHECK(L.degree(e.basis[0]) == 1);
    QMat G(4, std::vector<mpq_class>(4));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) G[i][j] = e.gram[i][j];
    CHECK(abs(zla::det(G)) == p * p);
    for (int i = 0; i < 4; ++i) {
        mpz_class t = L.trace(e.basis[i]), n = L.degree(e.basis[i]);
        CHECK(t * t <= 4 * n);
        CHECK(e.gram[i][i] == t * t - 2 * n);
    }
    // table is associative and has 1 as identity
    auto mul = [&](const ZVec& x, const ZVec& y) {
        ZVec r(4, 0);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k) r[k] += x[i] * y[j] * e.mult[i][j][k];
        return r;
    };
    for (int i = 0; i < 4; ++i) {
        ZVec u(4, 0);
        u[i] = 1;
        ZVec one{1, 0, 0, 0};
        CHECK(mul(one, u) == u);
        CHECK(mul(u, one) == u);
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k) {
                ZVec a(4, 0), b(4, 0);
                a[j] = 1;
                b[k] = 1;
                CHECK(mul(mul(u, a), b) == mul(u, mul(a, b)));
            }
    }
}

}  // namespace

TEST_CASE("collision endomorphisms") {
    Atlas G(101);
    EndoLab L(G);
    for (u64 seed = 1; seed <= 6; ++seed) {
        int k = 5;
        Collision c = collision_walks(G, 0, 2, k, seed);
        CHECK(c.first.end == c.second.end);
        CHECK_FALSE(is_scalar_walk(c.closed));
        EndoRep x = L.walk(c.closed);
        CHECK(L.degree(x) == mpz_class(1) << (2 * k));
        CHECK_FALSE(L.is_scalar(x));
    }
}

TEST_CASE("ground truth at p = 31") {
    Atlas G(31);
    EndoLab L(G);
    CurveTable T = build_table(L, no_cache());
    CHECK(T.size() == 3);
    mpq_class mass = 0;
    for (int v = 0; v < T.size(); ++v) {
        check_entry(T, v);
        mass += mpq_class(1, T.entry(v).aut);
        CHECK(T.entry(v).denominator_free);
    }
    CHECK(mass == mpq_class(5, 4));
    // a second seed finds the same lattice
    for (int v = 0; v < T.size(); ++v) {
        EndEntry e = compute_endring_bruteforce(L, v, no_cache(99));
        CHECK(engine_equal(T, v, e.basis));
    }
    // JSON round trip
    CurveTable U = CurveTable::from_json(L, nlohmann::json::parse(T.to_json().dump()));
    for (int v = 0; v < U.size(); ++v) CHECK(engine_equal(T, v, U.entry(v).basis));
}

TEST_CASE("ground truth at p = 101 and the cache") {
    Atlas G(101);
    EndoLab L(G);
    auto dir = std::filesystem::temp_directory_path() / "isolab_engine_cache";
    std::filesystem::remove_all(dir);
    EngineOptions o;
    o.cache_dir = dir.string();
    CurveTable T = build_table(L, o);
    CHECK(T.size() == 9);
    CHECK(std::filesystem::exists(dir / "endring_p101.json"));
    mpq_class mass = 0;
    for (int v = 0; v < T.size(); ++v) {
        check_entry(T, v);
        mass += mpq_class(1, T.entry(v).aut);
    }
    CHECK(mass == mpq_class(25, 6));
    CurveTable C = build_table(L, o);
    for (int v = 0; v < T.size(); ++v) CHECK(engine_equal(T, v, C.entry(v).basis));
    // j = 0: a short element exists
    int v0 = G.index_of(F2{0, 0});
    mpz_class best = -1;
    for (int i = 1; i < 4; ++i) {
        mpz_class n = L.degree(T.entry(v0).basis[i]);
        if (best < 0 || n < best) best = n;
    }
    CHECK(best <= 2 * 101);
    std::filesystem::remove_all(dir);
}

TEST_CASE("matrices mod N") {
    Atlas G(101);
    EndoLab L(G);
    CurveTable T = build_table(L, no_cache(3));
    for (int v = 0; v < T.size(); ++v)
        for (u64 N : {3ul, 5ul, 7ul}) CHECK(basis_spans_mod(T, v, N));
    CHECK(endo_matrix_modN(T, 0, L.scalar(0, 4), 7) == Mat2{4, 0, 0, 4});
    // phi alpha phi^ = M_phi A (deg phi M_phi^{-1})
    Rng rng(8);
    for (int t = 0; t < 6; ++t) {
        int v = (int)rng.below(G.size());
        StepRef s{2, (int)rng.below(3)};
        int w = G.edge(v, s).to;
        RWalk r{v, w, {s}, 0, 1};
        EndoRep phi = L.walk(r), phid = L.walk(dual_walk(G, r));
        OneEndOracle o = OneEndOracle::honest(T, 5 + t);
        EndoRep a = o.query(v);
        const u64 N = 5;
        Mat2 A = endo_matrix_modN(T, v, a, N);
        Mat2 Mp = L.torsion().step(v, s, N);
        Mat2 lhs = endo_matrix_modN(T, w, L.compose(phi, L.compose(a, phid)), N);
        Mat2 rhs = mat2::mul(mat2::mul(Mp, A, N), mat2::scale(*mat2::inverse(Mp, N), 2, N), N);
        CHECK(lhs == rhs);
    }
}

TEST_CASE("oracles") {
    Atlas G(101);
    EndoLab L(G);
    CurveTable T = build_table(L, no_cache(3));
    OneEndOracle h = OneEndOracle::honest(T, 1);
    for (int i = 0; i < 10; ++i) CHECK_FALSE(L.is_scalar(h.query(i % T.size())));
    OneEndOracle s = OneEndOracle::stuck(T, 3, 2);
    for (int i = 0; i < 6; ++i) {
        EndoRep a = s.query(i % T.size());
        CHECK_FALSE(L.is_scalar(a));
        bool some = false;
        for (int t = 0; t < 3; ++t) some |= L.is_divisible(L.affine(a, 1, -t), 3);
        CHECK(some);
        CHECK_FALSE(is_N_reduced(L, a, 3));
    }
    // levels: the law 2^(e-n), plus 2^-n extra mass at 0
    const int n = 4;
    OneEndOracle lv = OneEndOracle::leveled(T, n, 3);
    std::vector<long> hist(n, 0);
    const long Q = 10000;
    for (long q = 0; q < Q; ++q) {
        EndoRep a = lv.query(0);
        ++hist[lv.last_level()];
        if (q < 12) CHECK(level_at(L, a, 2, n + 1) == lv.last_level());
    }
    for (int e = 0; e < n; ++e) {
        double pr = std::ldexp(1.0, e - n) + (e == 0 ? std::ldexp(1.0, -n) : 0.0);
        double sigma = std::sqrt(Q * pr * (1 - pr));
        CHECK(std::abs(hist[e] - Q * pr) <= 3 * sigma);
    }
    CHECK(OneEndOracle::parse(T, "stuck:5", 1).name() == "stuck:5");
    CHECK_THROWS(OneEndOracle::parse(T, "greedy", 1));
}
