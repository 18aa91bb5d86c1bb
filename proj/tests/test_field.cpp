#include "doctest.h"
#include "isolab/field.hpp"
#include "isolab/poly.hpp"

using namespace isolab;

TEST_CASE("field contexts") {
    auto F31 = FieldCtx::build(31, 1);
    CHECK(F31->f2().c() == 30);  // x^2 + 1
    auto F101 = FieldCtx::build(101, 1);
    CHECK(F101->f2().c() == 2);
    CHECK(powmod_u64(2, 50, 101) == 100);  // 2 is a non-residue mod 101
    CHECK_NOTHROW(FieldCtx::build(5, 1));
    FieldConfig tiny;
    tiny.max_prime_bits = 2;
    CHECK_THROWS_WITH_AS(FieldCtx::build(5, 1, tiny), doctest::Contains("UnsupportedSize"), Error);
    CHECK_THROWS_WITH_AS(FieldCtx::build(91, 1), doctest::Contains("CompositeModulus"), Error);
    CHECK_THROWS_WITH_AS(FieldCtx::build(31, 65), doctest::Contains("ExtensionTooLarge"), Error);
    // same inputs, same moduli
    CHECK(FieldCtx::build(101, 7)->modulus() == FieldCtx::build(101, 7)->modulus());
}

TEST_CASE("element operations") {
    auto F = FieldCtx::build(31, 1);
    Fq two = F->from_int(2);
    CHECK(inv(two) == F->from_int(16));
    Fq i = F->gen();
    CHECK(i * i == F->from_int(-1));
    CHECK(frobenius(i) == -i);
    CHECK_THROWS_WITH_AS(inv(F->zero()), doctest::Contains("DivisionByZero"), Error);
    Rng rng(7);
    for (int t = 0; t < 20; ++t) {
        Fq g = F->from_index(rng.below(961));
        if (g.is_zero()) continue;
        CHECK(pow(g, mpz_class(960)).is_one());
    }
    auto G = FieldCtx::build(101, 2);
    CHECK_THROWS_WITH_AS(F->one() + G->one(), doctest::Contains("ContextMismatch"), Error);
}

TEST_CASE("square roots") {
    auto F = FieldCtx::build(31, 1);
    CHECK(F->f2().sqrt_fp(4).value() == 2);
    auto r = sqrt(F->from_int(-1));
    REQUIRE(r);
    CHECK(*r == F->gen());  // (0,1) precedes (0,30)
    CHECK_FALSE(F->f2().sqrt_fp(F->f2().c()).has_value());
    auto F101 = FieldCtx::build(101, 1);
    CHECK_FALSE(F101->f2().sqrt_fp(2).has_value());
    CHECK(sqrt(F->from_int(4)).value() == F->from_int(2));
}

TEST_CASE("towers") {
    Rng rng(11);
    for (auto [p, k] : std::vector<std::pair<u64, int>>{{31, 2}, {31, 3}, {101, 5}, {101, 7}, {101, 4}, {1009, 6}}) {
        auto F = FieldCtx::build(p, k);
        Poly g(F->modulus().begin(), F->modulus().end());
        g.push_back(F->f2().one());
        CHECK(poly::irreducible(F->f2(), g));
        for (int t = 0; t < 5; ++t) {
            Fq a = F->from_index(mpz_class((unsigned long)rng.next()));
            Fq b = F->from_index(mpz_class((unsigned long)rng.next()));
            Fq s = a + b;
            if (!s.is_zero()) CHECK((s * inv(s)).is_one());
            Fq x = a;
            for (int j = 0; j < 2 * k; ++j) x = frobenius(x);
            CHECK(x == a);
            // embedding commutes with the ring operations
            F2 u{rng.below(p), rng.below(p)}, v{rng.below(p), rng.below(p)};
            CHECK(F->embed(u) * F->embed(v) == F->embed(F->f2().mul(u, v)));
            CHECK(F->embed(u) + F->embed(v) == F->embed(F->f2().add(u, v)));
            Fq sq = a * a;
            auto r = sqrt(sq);
            REQUIRE(r);
            CHECK(*r * *r == sq);
        }
    }
}

TEST_CASE("polynomial roots") {
    Fp2 K(101, 2);
    std::vector<F2> want = {K.from_int(3), K.from_int(7), F2{5, 9}};
    Poly f = poly::from_roots(K, want);
    f = poly::mul(K, f, Poly{F2{1, 1}, K.zero(), K.one()});  // extra quadratic factor
    auto r = poly::roots(K, f);
    std::vector<F2> sorted = want;
    std::sort(sorted.begin(), sorted.end(), Fp2::lex_less);
    auto rq = poly::roots(K, Poly{F2{1, 1}, K.zero(), K.one()});
    CHECK(r.size() == 3 + rq.size());
}
