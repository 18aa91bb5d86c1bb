#include <cmath>

#include "isolab/reduction.hpp"

namespace isolab {

RichSample rich_sample(const EndoLab& L, int v, int k, const OneEnd& O, Rng& rng) {
    if (k < 0) throw Error("InvalidArgument", "walk length must be >= 0");
    const Atlas& G = L.atlas();
    RichSample s;
    if (k == 0) {
        s.phi = RWalk{v, v, {}, 0, 1};
        s.inner = s.alpha = O(v);
        return s;
    }
    IsogenyPath w = random_walk(G, v, 2, k, rng, WalkMode::uniform);
    s.phi = reduce_walk(G, w);
    s.inner = O(w.end);
    if (s.inner.domain() != w.end || !s.inner.is_endo()) throw Error("OracleFailure", "oracle answered for another curve");
    EndoRep phi = L.walk(s.phi);
    EndoRep back = L.walk(dual_walk(G, s.phi));
    s.alpha = L.compose(back, L.compose(s.inner, phi));
    return s;
}

static double log_mpz(const mpz_class& n) {
    long e;
    double m = mpz_get_d_2exp(&e, n.get_mpz_t());
    return std::log(m) + (double)e * std::log(2.0);
}

int default_k1(u64 p) {
    double num = std::log(12.0 * 9.0 * (1 + std::sqrt(3.0)) * std::sqrt((double)p + 13));
    return (int)std::ceil(num / std::log(3.0 / (2 * std::sqrt(2.0))));
}

int default_k2(u64 p, const mpz_class& N) {
    double lN = log_mpz(N);
    double x = std::log(4100000.0) + 12 * std::log(lN) + 2 * lN + 0.5 * std::log((double)p + 13);
    return (int)std::ceil(12 * x);
}

// ---------------------------------------------------------------- factor lists

static bool cube_root(const mpz_class& n, mpz_class& r) {
    if (n <= 1) return false;
    return mpz_root(r.get_mpz_t(), n.get_mpz_t(), 3) != 0;
}

FactorList::FactorList(const mpz_class& n) {
    if (n < 1) throw Error("InvalidArgument", "index must be >= 1");
    if (n == 1) return;
    mpz_class N = n, r;
    int e = 1;
    while (cube_root(N, r)) N = r, e *= 3;
    f_.push_back({N, e});
}

FactorList cube_free_factor(const mpz_class& n) { return FactorList(n); }

mpz_class FactorList::value() const {
    mpz_class v = 1, t;
    for (auto& [N, e] : f_) {
        mpz_pow_ui(t.get_mpz_t(), N.get_mpz_t(), (unsigned long)e);
        v *= t;
    }
    return v;
}

void FactorList::normalize() {
    for (bool changed = true; changed;) {
        changed = false;
        std::erase_if(f_, [](auto& x) { return x.first == 1 || x.second == 0; });
        for (size_t i = 0; i < f_.size() && !changed; ++i)
            for (size_t j = i + 1; j < f_.size() && !changed; ++j) {
                mpz_class g = gcd(f_[i].first, f_[j].first);
                if (g == 1) continue;
                auto [a, ea] = f_[i];
                auto [b, eb] = f_[j];
                f_.erase(f_.begin() + j);
                f_.erase(f_.begin() + i);
                // a^ea b^eb = g^(ea+eb) (a/g)^ea (b/g)^eb
                f_.push_back({g, ea + eb});
                f_.push_back({a / g, ea});
                f_.push_back({b / g, eb});
                changed = true;
            }
        for (auto& [N, e] : f_) {
            mpz_class r;
            while (cube_root(N, r)) N = r, e *= 3;
        }
    }
    std::sort(f_.begin(), f_.end(), [](auto& x, auto& y) { return x.first < y.first; });
}

bool FactorList::refine(const mpz_class& d) {
    bool changed = false;
    std::vector<std::pair<mpz_class, int>> out;
    for (auto& [N, e] : f_) {
        mpz_class g = gcd(N, d);
        if (g != 1 && g != N) {
            out.push_back({g, e});
            out.push_back({N / g, e});
            changed = true;
        } else {
            out.push_back({N, e});
        }
    }
    f_ = std::move(out);
    normalize();
    return changed;
}

void FactorList::rebase(const mpz_class& n) {
    mpz_class r = n;
    for (auto& [N, e] : f_) {
        e = 0;
        while (r % N == 0) r /= N, ++e;
    }
    if (r > 1) f_.push_back({r, 1});
    normalize();
    if (value() != n) throw Error("InternalError", "factor list lost the index");
}

std::string FactorList::str() const {
    if (f_.empty()) return "1";
    std::string s;
    for (auto& [N, e] : f_) {
        if (!s.empty()) s += " * ";
        s += N.get_str() + "^" + std::to_string(e);
    }
    return s;
}

}  // namespace isolab
