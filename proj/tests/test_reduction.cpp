#include "doctest.h"
#include <cmath>
#include <filesystem>

#include "isolab/engine.hpp"
#include "isolab/reduction.hpp"

using namespace isolab;

namespace {

struct Lab {
    Atlas G;
    EndoLab L;
    CurveTable T;
    explicit Lab(u64 p) : G(p), L(G), T(build_table(L, opts())) {}
    static EngineOptions opts() {
        EngineOptions o;
        o.cache_dir = (std::filesystem::temp_directory_path() / "isolab_test_cache").string();
        return o;
    }
};

Lab& lab(u64 p) {
    static std::map<u64, std::unique_ptr<Lab>> labs;
    auto& x = labs[p];
    if (!x) x = std::make_unique<Lab>(p);
    return *x;
}

ReductionParams params40(u64 seed) {
    ReductionParams P;
    P.k1_override = 40;
    P.k2_override = 40;
    P.seed = seed;
    return P;
}

// every step of the trajectory divides the previous index
void check_progress(const ReductionLog& log) {
    for (size_t i = 1; i < log.index_trajectory.size(); ++i) {
        mpz_class a(log.index_trajectory[i - 1]), b(log.index_trajectory[i]);
        CHECK(a % b == 0);
        if (i >= 2) CHECK(b < a);
    }
}

}  // namespace

TEST_CASE("factor lists") {
    auto f = cube_free_factor(8);
    REQUIRE(f.factors().size() == 1);
    CHECK(f.factors()[0] == std::make_pair(mpz_class(2), 3));
    f = cube_free_factor(27);
    CHECK(f.factors()[0] == std::make_pair(mpz_class(3), 3));
    f = cube_free_factor(512);
    CHECK(f.factors()[0] == std::make_pair(mpz_class(2), 9));
    f = cube_free_factor(64);
    CHECK(f.factors()[0] == std::make_pair(mpz_class(4), 3));
    CHECK(cube_free_factor(1).empty());
    CHECK(cube_free_factor(12).str() == "12^1");

    f = cube_free_factor(1000);
    CHECK(f.str() == "10^3");
    CHECK(f.refine(8));
    CHECK(f.str() == "2^3 * 5^3");
    CHECK(f.value() == 1000);
    CHECK(!f.refine(7));

    // a refined factor that is a cube is re-split
    f = cube_free_factor(mpz_class(8 * 7));
    CHECK(f.refine(8));
    CHECK(f.str() == "2^3 * 7^1");

    // growth of the order: the new index divides the old one
    f = cube_free_factor(144);
    f.rebase(24);
    CHECK(f.value() == 24);
    CHECK(f.str() == "24^1");
    f = cube_free_factor(mpz_class(105) * 105);
    f.rebase(105);
    CHECK(f.str() == "105^1");
    f.rebase(1);
    CHECK(f.empty());
}

TEST_CASE("default walk lengths") {
    CHECK(default_k1(31) == 129);
    CHECK(default_k1(101) == 137);
    CHECK(default_k1(1009) == 156);
    CHECK(default_k2(101, 3) == 252);
    CHECK(default_k2(101, 105) == 545);
}

TEST_CASE("rich") {
    Lab& X = lab(101);
    auto O = OneEndOracle::honest(X.T, 5);
    OneEnd f = [&](int w) { return O.query(w); };
    Rng rng(3);
    auto s0 = rich_sample(X.L, 2, 0, f, rng);
    CHECK(s0.alpha.id() == s0.inner.id());
    for (int k : {1, 5, 12}) {
        auto s = rich_sample(X.L, 2, k, f, rng);
        mpz_class d = X.L.degree(s.alpha);
        mpz_class want;
        mpz_ui_pow_ui(want.get_mpz_t(), 4, (unsigned long)k);
        CHECK(d == want * X.L.degree(s.inner));
        CHECK(!X.L.is_scalar(s.alpha));
        CHECK(s.phi.start == 2);
    }
    // the Reduce_N wrapped oracle answers N-reduced elements
    for (u64 N : {3ull, 5ull}) {
        for (int t = 0; t < 5; ++t) {
            auto red = X.L.reduce_at(O.query(4), mpz_class((unsigned long)N));
            CHECK(is_N_reduced(X.L, red.beta, N));
        }
    }
}

TEST_CASE("main reduction against the table") {
    SUBCASE("honest, p = 31") {
        Lab& X = lab(31);
        for (int v = 0; v < X.G.size(); ++v) {
            auto O = OneEndOracle::honest(X.T, 10 + v);
            auto r = one_end_to_endring(X.L, v, [&](int w) { return O.query(w); }, params40(v + 1));
            CHECK(r.index == 1);
            CHECK(engine_equal(X.T, r.order));
            CHECK(engine_equal(X.T, v, r.basis()));
            check_progress(r.log);
        }
    }
    SUBCASE("stuck at 3, p = 101") {
        Lab& X = lab(101);
        for (int v : {0, 4, 8}) {
            auto O = OneEndOracle::stuck(X.T, 3, 20 + v);
            auto P = params40(v + 7);
            P.first_loop_only = true;
            auto r1 = one_end_to_endring(X.L, v, [&](int w) { return O.query(w); }, P);
            CHECK(r1.index % 27 == 0);
            CHECK(engine_index(X.T, r1.order) == r1.index);
            P.first_loop_only = false;
            auto r = one_end_to_endring(X.L, v, [&](int w) { return O.query(w); }, P);
            CHECK(engine_equal(X.T, r.order));
            check_progress(r.log);
            CHECK(r.log.to_json()["factor_history"].size() >= 2);
        }
    }
    SUBCASE("leveled 4, p = 101") {
        Lab& X = lab(101);
        for (int v : {1, 6}) {
            auto O = OneEndOracle::leveled(X.T, 4, 30 + v);
            auto r = one_end_to_endring(X.L, v, [&](int w) { return O.query(w); }, params40(v + 3));
            CHECK(engine_equal(X.T, r.order));
            CHECK(r.log.successes <= 50);
        }
    }
    SUBCASE("budget") {
        Lab& X = lab(31);
        auto O = OneEndOracle::honest(X.T, 1);
        auto P = params40(1);
        P.max_iterations = 1;
        CHECK_THROWS_WITH_AS(one_end_to_endring(X.L, 0, [&](int w) { return O.query(w); }, P),
                             doctest::Contains("Timeout"), Error);
    }
}

TEST_CASE("meet in the middle") {
    Lab& X = lab(101);
    int n = default_mitm_len(101, 2);
    CHECK(n == 9);
    for (u64 s = 1; s <= 5; ++s) {
        auto r = isogeny_path_mitm(X.G, 0, 7, 2, n, s);
        CHECK(r.path.start == 0);
        CHECK(r.path.end == 7);
        CHECK(r.path.length() == 2 * n);
        CHECK(r.path.degree(X.G) == mpz_class(1) << (2 * n));
        CHECK(r.table_size == 9);  // ceil(sqrt 101) = 11 > 9 vertices
        // the path composes: its endomorphism-free evaluation lands on the target
        CHECK(make_path(X.G, 0, r.path.steps).end == 7);
    }
    auto same = isogeny_path_mitm(X.G, 3, 3, 2, n, 9);
    CHECK(same.path.end == 3);
    auto o = mitm_oracle(X.G, 3, 4);
    auto w = o(1, 5);
    CHECK(w.start == 1);
    CHECK(w.end == 5);
    CHECK(w.steps.front().ell == 3);
}

TEST_CASE("one endomorphism from an isogeny oracle") {
    Lab& X = lab(101);
    auto iso = mitm_oracle(X.G, 2, 11);
    long total = 0;
    for (u64 s = 1; s <= 10; ++s) {
        int v = (int)(s % X.G.size());
        auto r = one_end_from_isogeny_oracle(X.L, v, iso, 0.25, s);
        CHECK(r.n == 14);
        mpz_class d = X.L.degree(r.alpha);
        CHECK(d % 2 == 0);
        CHECK(!X.L.is_divisible(r.alpha, 2));
        CHECK(!X.L.is_scalar(r.alpha));
        CHECK(r.alpha.domain() == v);
        total += r.iterations;
    }
    CHECK(total <= 40);
    // no 3-walk at all: still correct
    auto r0 = one_end_from_isogeny_oracle(X.L, 0, iso, 0.25, 99, 0);
    CHECK(r0.n == 0);
    CHECK(!X.L.is_divisible(r0.alpha, 2));
    CHECK(X.L.degree(r0.alpha) % 2 == 0);
    CHECK_THROWS_AS(one_end_from_isogeny_oracle(X.L, 0, iso, 0.5, 1), Error);
}

TEST_CASE("CGL collisions") {
    Lab& X = lab(31);
    // exhaustive search over 2-digit strings of length <= 4 at vertex 0
    std::map<std::pair<u64, u64>, std::vector<int>> seen;
    std::vector<std::pair<std::vector<int>, std::vector<int>>> pairs;
    for (int len = 1; len <= 4; ++len)
        for (int code = 0; code < (1 << len); ++code) {
            std::vector<int> m;
            for (int i = 0; i < len; ++i) m.push_back((code >> i) & 1);
            F2 h = cgl_hash(X.G, 0, 2, m);
            auto key = std::make_pair(h.a, h.b);
            auto it = seen.find(key);
            if (it == seen.end())
                seen.emplace(key, m);
            else
                pairs.push_back({it->second, m});
        }
    REQUIRE(!pairs.empty());
    for (auto& [a, b] : pairs) {
        EndoRep x = cgl_collision_to_endo(X.L, 0, 2, a, b);
        CHECK(x.domain() == 0);
        CHECK(!X.L.is_scalar(x));
        // integral in the table basis
        auto c = X.T.frame(0).coords_in_span(x);
        REQUIRE(c);
        for (auto& t : *c) CHECK(t.get_den() == 1);
    }
    CHECK_THROWS_WITH_AS(cgl_collision_to_endo(X.L, 0, 2, pairs[0].first, pairs[0].first),
                         doctest::Contains("NotACollision"), Error);
    std::vector<int> m1{0}, m2{1};
    if (cgl_hash(X.G, 0, 2, m1) != cgl_hash(X.G, 0, 2, m2))
        CHECK_THROWS_WITH_AS(cgl_collision_to_endo(X.L, 0, 2, m1, m2), doctest::Contains("NotACollision"), Error);
}

TEST_CASE("unconditional pipeline") {
    Lab& X = lab(31);
    for (int v = 0; v < X.G.size(); ++v) {
        auto r = endring_unconditional(X.L, v, 3 + v, params40(1));
        CHECK(engine_equal(X.T, r.order));
    }
}
