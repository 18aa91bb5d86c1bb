#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "isolab/spectra.hpp"

namespace isolab {

namespace {

using cd = std::complex<double>;

std::vector<cd> eigenvalues(const Eigen::MatrixXd& S) {
    std::vector<cd> out;
    if (S.rows() == 0) return out;
    if ((S - S.transpose()).cwiseAbs().maxCoeff() < 1e-12) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
        for (int i = 0; i < S.rows(); ++i) out.push_back(es.eigenvalues()[i]);
    } else {
        Eigen::EigenSolver<Eigen::MatrixXd> es(S, false);
        for (int i = 0; i < S.rows(); ++i) out.push_back(es.eigenvalues()[i]);
    }
    std::sort(out.begin(), out.end(), [](cd a, cd b) { return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag(); });
    return out;
}

// D^1/2 A D^-1/2
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& A, const Eigen::VectorXd& mu) {
    Eigen::VectorXd s = mu.cwiseSqrt();
    return s.asDiagonal() * A * s.cwiseInverse().asDiagonal();
}

// greedy nearest matching; inf when the sizes differ
double match_error(std::vector<cd> a, std::vector<cd> b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    double worst = 0;
    std::vector<char> used(b.size(), 0);
    for (cd x : a) {
        int best = -1;
        for (size_t j = 0; j < b.size(); ++j)
            if (!used[j] && (best < 0 || std::abs(b[j] - x) < std::abs(b[best] - x))) best = (int)j;
        used[best] = 1;
        worst = std::max(worst, std::abs(b[best] - x));
    }
    return worst;
}

nlohmann::json cplx(const std::vector<cd>& v) {
    nlohmann::json j = nlohmann::json::array();
    for (cd x : v) j.push_back(std::abs(x.imag()) < 1e-12 ? nlohmann::json(x.real()) : nlohmann::json{x.real(), x.imag()});
    return j;
}

}  // namespace

nlohmann::json SpectralReport::to_json() const {
    nlohmann::json j;
    j["ell"] = ell;
    j["vertices"] = vertices;
    j["components"] = components;
    j["predicted_components"] = predicted_components;
    j["dim_l2_deg"] = components1;
    j["predicted_dim_l2_deg"] = predicted_dim_deg;
    j["eigenvalues_deg"] = cplx(eig_deg);
    j["eigenvalues_deg_predicted"] = cplx(eig_deg_predicted);
    j["eigenvalues_zero"] = cplx(eig_zero);
    j["max_abs_zero"] = max_abs_zero;
    j["bound"] = bound;
    j["max_imag"] = max_imag;
    j["deg_match_error"] = std::isinf(deg_match_error) ? nlohmann::json("size mismatch") : nlohmann::json(deg_match_error);
    j["projector_idempotence"] = projector_idempotence;
    j["projector_self_adjoint"] = projector_self_adjoint;
    j["component_labels"] = component_of;
    j["deg_labels"] = deg_label;
    j["ramanujan_ok"] = ramanujan_ok();
    j["deg_ok"] = deg_ok();
    return j;
}

SpectralReport deg_decomposition(const ExtraDataGraph& G, int ell) {
    SpectralReport r;
    r.ell = ell;
    r.vertices = G.size();
    r.bound = 2 * std::sqrt((double)ell);
    r.component_of = components(G, &r.components);
    r.deg_label = components1(G, &r.components1);

    Eigen::VectorXd mu = weights(G);
    Eigen::MatrixXd P = deg_projector(G, r.deg_label);
    r.projector_idempotence = (P * P - P).cwiseAbs().maxCoeff();
    Eigen::MatrixXd MP = mu.asDiagonal() * P;
    r.projector_self_adjoint = (MP - MP.transpose()).cwiseAbs().maxCoeff();

    // orthonormal bases of the two pieces after symmetrization
    const int n = G.size(), k = r.components1;
    Eigen::MatrixXd Qd = Eigen::MatrixXd::Zero(n, k);
    for (int i = 0; i < n; ++i) Qd(i, r.deg_label[i]) = std::sqrt(mu[i]);
    for (int c = 0; c < k; ++c) Qd.col(c).normalize();
    Eigen::MatrixXd Pc = Eigen::MatrixXd::Identity(n, n) - Qd * Qd.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Pc);
    Eigen::MatrixXd Q0(n, n - k);
    for (int i = 0, c = 0; i < n; ++i)
        if (es.eigenvalues()[i] > 0.5) Q0.col(c++) = es.eigenvectors().col(i);

    Eigen::MatrixXd S = symmetrize(adjacency_op(G, ell), mu);
    r.eig_deg = eigenvalues(Qd.transpose() * S * Qd);
    r.eig_zero = eigenvalues(Q0.transpose() * S * Q0);
    for (cd x : r.eig_zero) r.max_abs_zero = std::max(r.max_abs_zero, std::abs(x));
    for (auto* v : {&r.eig_deg, &r.eig_zero})
        for (cd x : *v) r.max_imag = std::max(r.max_imag, std::abs(x.imag()));

    // prediction: on each G-orbit, ell acts on (Z/N)^x / deg(H) by translation;
    // a cycle of length m contributes (ell + 1) times the m-th roots of unity
    auto orbits = predicted_orbits(G.N, G.kind);
    r.predicted_components = (G.kind == FunctorKind::endmod || G.kind == FunctorKind::endmod1) && is_prime_u64(G.N)
                                 ? classified_component_count(G.N, G.kind)
                                 : (long)orbits.size();
    long phiN = 0;
    for (u64 d = 1; d <= std::max<u64>(G.N, 1); ++d)
        if (gcd_u64(d, G.N) == 1) ++phiN;
    for (auto& o : orbits) {
        std::set<u64> H(o.deg_subgroup.begin(), o.deg_subgroup.end());
        long idx = phiN / (long)H.size();
        r.predicted_dim_deg += idx;
        long m = 1;
        for (u64 x = (u64)ell % std::max<u64>(G.N, 1); G.N > 1 && !H.count(x); x = x * (u64)ell % G.N) ++m;
        for (long c = 0; c < idx / m; ++c)
            for (long t = 0; t < m; ++t)
                r.eig_deg_predicted.push_back((double)(ell + 1) * std::polar(1.0, 2 * std::numbers::pi * t / m));
    }
    r.deg_match_error = match_error(r.eig_deg_predicted, r.eig_deg);
    return r;
}

nlohmann::json DeltaReport::to_json() const {
    nlohmann::json j;
    j["X"] = X;
    j["primes"] = primes;
    j["eigenvalues"] = cplx(eig);
    j["second_largest"] = second;
    nlohmann::json s;
    for (auto& [l, v] : second_single) s[std::to_string(l)] = v;
    j["second_largest_single"] = s;
    j["constant_defect"] = constant_defect;
    return j;
}

DeltaReport delta_operator(const ExtraDataGraph& G, int X, const std::vector<int>& comp, int label) {
    DeltaReport r;
    r.X = X;
    for (int l = 2; l < X; ++l)
        if (is_prime_u64((u64)l) && G.N % (u64)l != 0 && G.p % (u64)l != 0) r.primes.push_back(l);
    if (r.primes.empty()) throw Error("InvalidArgument", "no prime below X");
    for (int l : r.primes)
        if (!G.out.count(l)) throw Error("InvalidArgument", "graph lacks ell = " + std::to_string(l));
    std::vector<int> keep;
    for (int i = 0; i < G.size(); ++i)
        if (label < 0 || comp.at(i) == label) keep.push_back(i);
    if (keep.empty()) throw Error("InvalidArgument", "empty component");
    const int n = (int)keep.size();
    Eigen::VectorXd mu = weights(G), m(n);
    for (int i = 0; i < n; ++i) m[i] = mu[keep[i]];
    auto restrict = [&](const Eigen::MatrixXd& A) {
        Eigen::MatrixXd B(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) B(i, j) = A(keep[i], keep[j]);
        return B;
    };
    auto second = [](std::vector<cd> ev) {
        std::vector<double> a;
        for (cd x : ev) a.push_back(std::abs(x));
        std::sort(a.rbegin(), a.rend());
        return a.size() > 1 ? a[1] : 0.0;
    };
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    for (int l : r.primes) {
        Eigen::MatrixXd A = restrict(adjacency_op(G, l)) / (double)(l + 1);
        r.second_single[l] = second(eigenvalues(symmetrize(A, m)));
        D += A;
    }
    D /= (double)r.primes.size();
    r.constant_defect = (D * Eigen::VectorXd::Ones(n) - Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff();
    r.eig = eigenvalues(symmetrize(D, m));
    r.second = second(r.eig);
    return r;
}

}  // namespace isolab
