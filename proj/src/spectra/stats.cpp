#include <cmath>
#include <algorithm>
#include <queue>
#include <set>

#include "isolab/spectra.hpp"

namespace isolab {

nlohmann::json StatEstimate::to_json() const {
    nlohmann::json j{{"estimate", estimate}, {"sigma", sigma}, {"bound", bound}, {"samples", samples}, {"support", support}};
    if (conditional >= 0) j["conditional"] = conditional;
    return j;
}

namespace {

u64 mkey(const Mat2& x, u64 N) { return ((x.a * N + x.b) * N + x.c) * N + x.d; }
Mat2 unkey(u64 k, u64 N) { return Mat2{k / (N * N * N), k / (N * N) % N, k / N % N, k % N}; }

double stddev(const std::vector<double>& xs) {
    double m = 0, s = 0;
    for (double x : xs) m += x;
    m /= (double)xs.size();
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / (double)std::max<size_t>(1, xs.size() - 1));
}

// bootstrap over resampled index multisets
template <class F>
double bootstrap(const std::vector<u64>& keys, int boot, u64 seed, F tv) {
    if (boot <= 0 || keys.empty()) return 0;
    Rng rng(seed ^ 0xB0075742ull);
    std::vector<double> est;
    std::vector<u64> re(keys.size());
    for (int b = 0; b < boot; ++b) {
        for (auto& k : re) k = keys[rng.below(keys.size())];
        est.push_back(tv(re));
    }
    return stddev(est);
}

}  // namespace

std::optional<EndoRep> lift_matrix(const CurveTable& T, int v, const Mat2& g, u64 N) {
    if (N * N * N * N > 2000000) throw Error("BoundExceeded", "lift search is for small N");
    const EndEntry& e = T.entry(v);
    Mat2 B[4];
    for (int i = 0; i < 4; ++i) B[i] = endo_matrix_modN(T, v, e.basis[i], N);
    for (u64 i = 0; i < N * N * N * N; ++i) {
        u64 c[4] = {i / (N * N * N), i / (N * N) % N, i / N % N, i % N};
        Mat2 s{};
        for (int t = 0; t < 4; ++t) s = mat2::add(s, mat2::scale(B[t], mpz_class((unsigned long)c[t]), N), N);
        if (!(s == g)) continue;
        std::vector<mpz_class> cs;
        for (u64 x : c) cs.push_back(mpz_class((unsigned long)x));
        return T.lab().lincomb(cs, {e.basis[0], e.basis[1], e.basis[2], e.basis[3]});
    }
    return std::nullopt;
}

StatEstimate stat_distance_rich(const CurveTable& T, int v, u64 N, int k, long samples, const OneEnd& O,
                                const Mat2& g, u64 seed, int boot) {
    const EndoLab& L = T.lab();
    if (N < 3 || N % 2 == 0) throw Error("InvalidArgument", "N must be odd");
    auto lift = lift_matrix(T, v, g, N);
    if (!lift) throw Error("InvalidArgument", "g is not the image of an endomorphism");
    if (mpz_class(L.degree(*lift) % (unsigned long)N) != 1) throw Error("InvalidArgument", "g must have degree 1 mod N");
    Mat2 gi = *mat2::inverse(g, N);
    StatEstimate r;
    r.samples = samples;
    Rng rng(seed);
    std::vector<u64> keys;
    keys.reserve(samples);
    for (long s = 0; s < samples; ++s) keys.push_back(mkey(L.action(rich(L, v, k, O, rng), N), N));
    // 1/2 sum_b |P(b) - P(g b g^-1)|
    auto tv = [&](const std::vector<u64>& ks) {
        std::map<u64, double> P;
        for (u64 x : ks) P[x] += 1.0 / (double)ks.size();
        std::set<u64> S;
        for (auto& [x, w] : P) {
            S.insert(x);
            S.insert(mkey(mat2::mul(mat2::mul(gi, unkey(x, N), N), g, N), N));
        }
        double d = 0;
        for (u64 b : S) {
            auto f = [&](u64 y) { auto it = P.find(y); return it == P.end() ? 0.0 : it->second; };
            d += std::abs(f(b) - f(mkey(mat2::mul(mat2::mul(g, unkey(b, N), N), gi, N), N)));
        }
        return d / 2;
    };
    r.estimate = tv(keys);
    std::set<u64> sup(keys.begin(), keys.end());
    r.support = (long)sup.size();
    r.sigma = bootstrap(keys, boot, seed, tv);
    const double lambda = 2 * std::sqrt(2.0) / 3;
    r.bound = (1 + std::sqrt(3.0)) / 4 * std::pow(lambda, k) * double(N * N) * std::sqrt((double)T.p() + 13);
    return r;
}

StatEstimate stat_distance_walk(const EndoLab& L, int v0, u64 N, int ell, int k, long samples, u64 seed, int boot) {
    const Atlas& G = L.atlas();
    const TorsionCache& tc = L.torsion();
    if (N < 2 || gcd_u64(N, (u64)ell * G.p()) != 1) throw Error("InvalidArgument", "N must be prime to ell p");
    if (N > 7) throw Error("BoundExceeded", "walk law enumeration is for N <= 7");
    // c_E: det M_phi = deg(phi) c_E for every phi : E_0 -> E (Weil pairing ratio)
    std::vector<u64> c(G.size(), 0);
    std::vector<char> seen(G.size(), 0);
    std::queue<std::pair<int, std::pair<Mat2, u64>>> q;
    q.push({v0, {mat2::scalar(1, N), 1}});
    seen[v0] = 1;
    while (!q.empty()) {
        auto [v, md] = q.front();
        q.pop();
        c[v] = mat2::det(md.first, N) * invmod_u64(md.second, N) % N;
        const auto& es = G.edges(v, ell);
        for (int i = 0; i < (int)es.size(); ++i) {
            int w = es[i].to;
            if (seen[w]) continue;
            seen[w] = 1;
            q.push({w, {mat2::mul(step_matrix(tc, v, StepRef{ell, i}, N), md.first, N), md.second * (u64)ell % N}});
        }
    }
    for (int v = 0; v < G.size(); ++v)
        if (!seen[v]) throw Error("InternalError", "ell-graph not connected");
    // classes of matrices up to post-composition with Aut(E)
    auto canon = [&](int v, const Mat2& M) {
        u64 best = ~u64(0);
        for (int e = 0; e < G.aut_order(v); ++e) best = std::min(best, mkey(mat2::mul(aut_matrix(tc, v, e, N), M, N), N));
        return best;
    };
    u64 target = powmod_u64((u64)ell % N, (u64)k, N);
    // nu: classes of degree ell^k, mass proportional to 1 / #Aut(E, psi)
    std::map<std::pair<int, u64>, double> nu;
    double Z = 0;
    for (int v = 0; v < G.size(); ++v)
        for (u64 i = 0; i < N * N * N * N; ++i) {
            Mat2 M = unkey(i, N);
            if (mat2::det(M, N) != target * c[v] % N) continue;
            u64 key = canon(v, M);
            if (key != i) continue;
            int stab = 0;
            for (int e = 0; e < G.aut_order(v); ++e) stab += mat2::mul(aut_matrix(tc, v, e, N), M, N) == M;
            nu[{v, key}] = 1.0 / stab;
            Z += 1.0 / stab;
        }
    for (auto& [x, w] : nu) w /= Z;

    StatEstimate r;
    r.samples = samples;
    r.support = (long)nu.size();
    Rng rng(seed);
    std::vector<u64> keys;  // curve * N^4 + class key
    const u64 span = N * N * N * N;
    for (long s = 0; s < samples; ++s) {
        IsogenyPath w = random_walk(G, v0, ell, k, rng, WalkMode::uniform);
        Mat2 M = mat2::scalar(1, N);
        int v = v0;
        for (auto st : w.steps) {
            M = mat2::mul(step_matrix(tc, v, st, N), M, N);
            v = G.edge(v, st).to;
        }
        keys.push_back((u64)v * span + canon(v, M));
    }
    auto tv = [&](const std::vector<u64>& ks) {
        std::map<u64, double> P;
        for (u64 x : ks) P[x] += 1.0 / (double)ks.size();
        double d = 0;
        for (auto& [x, w] : nu) {
            auto it = P.find((u64)x.first * span + x.second);
            d += std::abs((it == P.end() ? 0.0 : it->second) - w);
        }
        for (auto& [x, w] : P)
            if (!nu.count({(int)(x / span), x % span})) d += w;
        return d / 2;
    };
    r.estimate = tv(keys);
    r.sigma = bootstrap(keys, boot, seed, tv);
    r.bound = 1 / (2 * std::sqrt(6.0)) * std::pow(2 * std::sqrt((double)ell) / (ell + 1), k) * double(N * N) *
              std::sqrt((double)G.p());
    // conditional law at the most visited endpoint against nu restricted there
    std::map<int, long> hits;
    for (u64 x : keys) ++hits[(int)(x / span)];
    int top = std::max_element(hits.begin(), hits.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
    std::map<u64, double> P, Q;
    double mass = 0;
    for (auto& [x, w] : nu)
        if (x.first == top) Q[x.second] = w, mass += w;
    for (auto& [x, w] : Q) w /= mass;
    for (u64 x : keys)
        if ((int)(x / span) == top) P[x % span] += 1.0 / (double)hits[top];
    double d = 0;
    for (auto& [x, w] : Q) d += std::abs((P.count(x) ? P[x] : 0.0) - w);
    for (auto& [x, w] : P)
        if (!Q.count(x)) d += w;
    r.conditional = d / 2;
    return r;
}

}  // namespace isolab
