#include "doctest.h"
#include <cmath>
#include <filesystem>
#include <array>
#include <set>

#include "isolab/spectra.hpp"

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

// orbits of M_2(F_3) under A -> det(g)^s g A g^-1 by plain loops
long twisted_orbits(int s) {
    auto md = [](long x) { return ((x % 3) + 3) % 3; };
    std::set<std::array<long, 4>> seen;
    long orbits = 0;
    for (long i = 0; i < 81; ++i) {
        std::array<long, 4> A{i / 27, i / 9 % 3, i / 3 % 3, i % 3};
        if (seen.count(A)) continue;
        ++orbits;
        for (long j = 0; j < 81; ++j) {
            long a = j / 27, b = j / 9 % 3, c = j / 3 % 3, d = j % 3;
            long det = md(a * d - b * c);
            if (!det) continue;
            long ia = d * det, ib = -b * det, ic = -c * det, id = a * det;  // inverse: det^-1 = det mod 3
            long x0 = a * A[0] + b * A[2], x1 = a * A[1] + b * A[3], x2 = c * A[0] + d * A[2], x3 = c * A[1] + d * A[3];
            long t = s ? det : 1;
            seen.insert({md(t * (x0 * ia + x1 * ic)), md(t * (x0 * ib + x1 * id)), md(t * (x2 * ia + x3 * ic)),
                         md(t * (x2 * ib + x3 * id))});
        }
    }
    return orbits;
}

}  // namespace

TEST_CASE("trivial functor: Ramanujan bound and the stationary law") {
    for (u64 p : {101ull, 179ull, 499ull}) {
        Atlas G(p);
        EndoLab L(G);
        auto X = build_graph(L, nullptr, 1, FunctorKind::trivial, {2, 3});
        CHECK(X.size() == G.size());
        for (int ell : {2, 3}) {
            auto c = check_operator(X, ell);
            CHECK(c.constant_defect == 0);
            CHECK(c.normality_defect < 1e-9);
            CHECK(c.incoming_defect < 1e-9);
            auto r = deg_decomposition(X, ell);
            CHECK(r.components == 1);
            CHECK(r.components1 == 1);
            CHECK(r.ramanujan_ok());
            CHECK(r.max_abs_zero > 0);
            CHECK(r.deg_ok());
            CHECK(r.max_imag < 1e-9);
            CHECK(stationary_exact(X, ell));
        }
        CHECK(commutator_norm(X, 2, 3) < 1e-9);
    }
}

TEST_CASE("cyclic subgroups of order 3") {
    Lab& X = lab(101);
    auto C = build_graph(X.L, &X.T, 3, FunctorKind::cyc, {2});
    CHECK(C.raw_data == 9 * 4);
    // at j = 0 the order-3 automorphism is a transvection on E[3]: it fixes one
    // line and permutes the other three, so 4 subgroups give 2 vertices
    int j0 = -1;
    for (int v = 0; v < X.G.size(); ++v)
        if (X.G.aut_order(v) == 6) j0 = v;
    REQUIRE(j0 >= 0);
    CHECK(C.size() == 8 * 4 + 2);
    double mass = 0;
    for (auto& v : C.verts) mass += 1.0 / v.aut;
    CHECK(std::abs(mass - 4 * (101.0 - 1) / 24) < 1e-12);
    auto r = deg_decomposition(C, 2);
    CHECK(r.components1 == 1);
    CHECK(r.predicted_dim_deg == 1);
    CHECK(r.ramanujan_ok());
    CHECK(r.deg_ok());
}

TEST_CASE("End/3 graphs") {
    Lab& X = lab(101);
    SUBCASE("phi a phi^") {
        auto E = build_graph(X.L, &X.T, 3, FunctorKind::endmod, {2});
        CHECK(E.raw_data == 9 * 81);
        auto c = check_operator(E, 2);
        CHECK(c.constant_defect == 0);
        CHECK(c.normality_defect < 1e-9);
        CHECK(c.incoming_defect < 1e-9);
        auto r = deg_decomposition(E, 2);
        CHECK(r.components == twisted_orbits(1));
        CHECK(r.components == 10);
        CHECK(r.predicted_components == 10);
        CHECK(predicted_orbits(3, FunctorKind::endmod).size() == 10);
        CHECK(r.components1 == r.predicted_dim_deg);
        CHECK(r.ramanujan_ok());
        CHECK(r.deg_ok());
        // 3 on every orbit, -3 where deg(H) is trivial
        int minus = 0;
        for (auto x : r.eig_deg) minus += x.real() < 0;
        CHECK(minus == 5);
        CHECK(r.projector_idempotence < 1e-12);
        CHECK(r.projector_self_adjoint < 1e-12);
    }
    SUBCASE("ring maps") {
        auto E = build_graph(X.L, &X.T, 3, FunctorKind::endmod1, {2});
        auto r = deg_decomposition(E, 2);
        CHECK(r.components == twisted_orbits(0));
        CHECK(r.components == 12);  // GL_2(F_3) classes in M_2(F_3)
        CHECK(classified_component_count(3, FunctorKind::endmod1) == 12);
        // three nonsemisimple classes split in two under SL_2
        CHECK(r.components1 == 15);
        CHECK(r.deg_ok());
        CHECK(r.ramanujan_ok());
    }
}

TEST_CASE("functor action matches the endomorphisms") {
    Lab& X = lab(101);
    const EndoLab& L = X.L;
    Rng rng(17);
    auto O = OneEndOracle::honest(X.T, 3);
    for (int t = 0; t < 20; ++t) {
        int v = (int)rng.below(X.G.size());
        IsogenyPath w = random_walk(X.G, v, 2, 1 + (int)rng.below(4), rng, WalkMode::uniform);
        EndoRep phi = L.path(w);
        // psi = phi o (1 + 3 beta) is congruent to phi mod 3
        EndoRep psi = L.compose(phi, L.affine(O.query(v), 3, 1));
        Mat2 Mphi = L.action(phi, 3), Mpsi = L.action(psi, 3);
        CHECK(Mphi == Mpsi);
        Mat2 dual = L.action(L.dual(psi), 3);
        mpz_class dg = L.degree(psi);
        CHECK(dual == mat2::scale(*mat2::inverse(Mpsi, 3), dg, 3));
        // F(phi)(alpha) is the action of phi alpha phi^
        EndoRep a = O.query(v);
        Mat2 pushed = mat2::mul(mat2::mul(Mphi, L.action(a, 3), 3), dual, 3);
        CHECK(pushed == L.action(L.compose(phi, L.compose(a, L.dual(phi))), 3));
    }
}

TEST_CASE("averaging over primes") {
    Lab& X = lab(101);
    auto E = build_graph(X.L, &X.T, 3, FunctorKind::endmod, {2, 5, 7, 11});
    CHECK(commutator_norm(E, 2, 5) < 1e-9);
    CHECK(commutator_norm(E, 7, 11) < 1e-9);
    auto comp = components(E);
    auto c1 = components1(E);
    // a component whose Deg image has two vertices: single primes do not mix it
    std::map<int, std::set<int>> pieces;
    for (int i = 0; i < E.size(); ++i) pieces[comp[i]].insert(c1[i]);
    int label = -1;
    for (auto& [c, s] : pieces)
        if (s.size() == 2) label = c;
    REQUIRE(label >= 0);
    auto d = delta_operator(E, 12, comp, label);
    CHECK(d.primes == std::vector<int>{2, 5, 7, 11});
    CHECK(d.constant_defect < 1e-12);
    for (auto& [l, s] : d.second_single) CHECK(d.second < s);

    // the trivial graph: joint eigenvectors, Delta eigenvalue = mean of the others
    Atlas G(101);
    EndoLab L(G);
    auto T = build_graph(L, nullptr, 1, FunctorKind::trivial, {2, 3, 5, 7, 11});
    auto dt = delta_operator(T, 12);
    int ones = 0;
    for (auto x : dt.eig) ones += std::abs(x - 1.0) < 1e-9;
    CHECK(ones == 1);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(T.size(), T.size());
    Eigen::VectorXd s = weights(T).cwiseSqrt();
    std::vector<Eigen::MatrixXd> Ss;
    double coef = 1;
    for (int l : dt.primes) {
        Ss.push_back(s.asDiagonal() * adjacency_op(T, l) * s.cwiseInverse().asDiagonal() / double(l + 1));
        S += coef * Ss.back();
        coef *= 1.7;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    std::vector<double> from_mean;
    for (int i = 0; i < T.size(); ++i) {
        Eigen::VectorXd v = es.eigenvectors().col(i);
        double mean = 0;
        for (auto& Sl : Ss) {
            double lam = v.dot(Sl * v);
            CHECK((Sl * v - lam * v).norm() < 1e-9);
            mean += lam / (double)Ss.size();
        }
        from_mean.push_back(mean);
    }
    std::sort(from_mean.begin(), from_mean.end());
    std::vector<double> direct;
    for (auto x : dt.eig) direct.push_back(x.real());
    std::sort(direct.begin(), direct.end());
    for (size_t i = 0; i < direct.size(); ++i) CHECK(std::abs(direct[i] - from_mean[i]) < 1e-9);
}

TEST_CASE("conjugation distance of enriched answers") {
    Lab& X = lab(101);
    auto O = OneEndOracle::honest(X.T, 5);
    OneEnd f = [&](int w) { return O.query(w); };
    Mat2 g{1, 1, 0, 1};
    CHECK(lift_matrix(X.T, 0, g, 3).has_value());
    auto id = stat_distance_rich(X.T, 0, 3, 10, 500, f, Mat2{1, 0, 0, 1}, 1, 10);
    CHECK(id.estimate == 0);
    auto r = stat_distance_rich(X.T, 0, 3, 60, 3000, f, g, 2, 50);
    CHECK(r.estimate <= std::max(r.bound, 3 * r.sigma));
    CHECK(std::abs(r.bound - 1.9166730747) < 1e-6);
    // an oracle that always answers the same element, which g does not fix
    const EndEntry& e = X.T.entry(0);
    int pick = -1;
    for (int i = 1; i < 4 && pick < 0; ++i) {
        Mat2 m = endo_matrix_modN(X.T, 0, e.basis[i], 3);
        if (!(mat2::mul(m, g, 3) == mat2::mul(g, m, 3))) pick = i;
    }
    REQUIRE(pick > 0);
    OneEnd asym = [&](int w) { return X.T.entry(w).basis[pick]; };
    auto a = stat_distance_rich(X.T, 0, 3, 0, 1000, asym, g, 3, 50);
    CHECK(a.estimate > 0.99);
    CHECK(a.estimate > 5 * a.sigma);
    // g of degree 2 mod 3 is refused
    CHECK_THROWS_AS(stat_distance_rich(X.T, 0, 3, 1, 10, f, Mat2{2, 0, 0, 1}, 1), Error);
}

TEST_CASE("isogenies from walks mod N") {
    Lab& X = lab(101);
    auto w0 = stat_distance_walk(X.L, 0, 3, 2, 0, 200, 1, 10);
    CHECK(w0.support == 100);  // sum over curves of 24 / #Aut(E)
    CHECK(std::abs(w0.estimate - 0.99) < 1e-9);
    auto w = stat_distance_walk(X.L, 0, 3, 2, 100, 4000, 2, 50);
    CHECK(w.estimate <= std::max(w.bound, 0.1));
    CHECK(w.conditional < 0.15);
}

TEST_CASE("errors") {
    Lab& X = lab(101);
    CHECK_THROWS_AS(build_graph(X.L, &X.T, 101, FunctorKind::cyc, {2}), Error);
    CHECK_THROWS_AS(build_graph(X.L, &X.T, 3, FunctorKind::cyc, {3}), Error);
    CHECK_THROWS_AS(build_graph(X.L, nullptr, 3, FunctorKind::endmod, {2}), Error);
    GraphOptions small;
    small.max_vertices = 10;
    CHECK_THROWS_WITH_AS(build_graph(X.L, &X.T, 3, FunctorKind::endmod, {2}, small), doctest::Contains("BoundExceeded"),
                         Error);
    auto E = build_graph(X.L, &X.T, 3, FunctorKind::cyc, {2});
    CHECK_THROWS_AS(adjacency_op(E, 5), Error);
    CHECK_THROWS_AS(delta_operator(E, 12), Error);
    CHECK(parse_kind("endmod") == FunctorKind::endmod);
    CHECK_THROWS_AS(parse_kind("nope"), Error);
}
