#include "isolab/poly.hpp"

#include <algorithm>

namespace isolab::poly {

void trim(Poly& f) {
    while (!f.empty() && f.back().a == 0 && f.back().b == 0) f.pop_back();
}

int deg(const Poly& f) {
    int d = (int)f.size() - 1;
    while (d >= 0 && f[d].a == 0 && f[d].b == 0) --d;
    return d;
}

Poly add(const Fp2& K, const Poly& f, const Poly& g) {
    Poly r(std::max(f.size(), g.size()));
    for (size_t i = 0; i < r.size(); ++i) {
        F2 x = i < f.size() ? f[i] : F2{}, y = i < g.size() ? g[i] : F2{};
        r[i] = K.add(x, y);
    }
    trim(r);
    return r;
}

Poly sub(const Fp2& K, const Poly& f, const Poly& g) {
    Poly r(std::max(f.size(), g.size()));
    for (size_t i = 0; i < r.size(); ++i) {
        F2 x = i < f.size() ? f[i] : F2{}, y = i < g.size() ? g[i] : F2{};
        r[i] = K.sub(x, y);
    }
    trim(r);
    return r;
}

Poly mul(const Fp2& K, const Poly& f, const Poly& g) {
    if (f.empty() || g.empty()) return {};
    Poly r(f.size() + g.size() - 1);
    for (size_t i = 0; i < f.size(); ++i) {
        if (K.is_zero(f[i])) continue;
        for (size_t j = 0; j < g.size(); ++j) r[i + j] = K.add(r[i + j], K.mul(f[i], g[j]));
    }
    trim(r);
    return r;
}

Poly scale(const Fp2& K, const Poly& f, F2 c) {
    Poly r(f.size());
    for (size_t i = 0; i < f.size(); ++i) r[i] = K.mul(f[i], c);
    trim(r);
    return r;
}

void divmod(const Fp2& K, const Poly& f, const Poly& g, Poly& q, Poly& r) {
    int dg = deg(g);
    if (dg < 0) throw Error("DivisionByZero", "polynomial division by zero");
    r = f;
    trim(r);
    int dr = deg(r);
    q.assign(dr >= dg ? dr - dg + 1 : 0, F2{});
    F2 li = K.inv(g[dg]);
    while (dr >= dg) {
        F2 c = K.mul(r[dr], li);
        q[dr - dg] = c;
        for (int i = 0; i <= dg; ++i) r[dr - dg + i] = K.sub(r[dr - dg + i], K.mul(c, g[i]));
        r.resize(dr);
        trim(r);
        dr = deg(r);
    }
    trim(q);
}

Poly mod(const Fp2& K, const Poly& f, const Poly& g) {
    Poly q, r;
    divmod(K, f, g, q, r);
    return r;
}

Poly monic(const Fp2& K, const Poly& f) {
    int d = deg(f);
    if (d < 0) return {};
    return scale(K, Poly(f.begin(), f.begin() + d + 1), K.inv(f[d]));
}

Poly gcd(const Fp2& K, Poly f, Poly g) {
    trim(f);
    trim(g);
    while (!g.empty()) {
        Poly r = mod(K, f, g);
        f = std::move(g);
        g = std::move(r);
    }
    return monic(K, f);
}

Poly inv_mod(const Fp2& K, const Poly& f, const Poly& m) {
    Poly r0 = m, r1 = mod(K, f, m), s0, s1 = {K.one()};
    while (!r1.empty()) {
        Poly q, r;
        divmod(K, r0, r1, q, r);
        Poly s = sub(K, s0, mul(K, q, s1));
        r0 = std::move(r1);
        r1 = std::move(r);
        s0 = std::move(s1);
        s1 = std::move(s);
    }
    if (deg(r0) != 0) throw Error("DivisionByZero", "polynomial not invertible modulo m");
    return mod(K, scale(K, s0, K.inv(r0[0])), m);
}

Poly mulmod(const Fp2& K, const Poly& f, const Poly& g, const Poly& m) { return mod(K, mul(K, f, g), m); }

Poly powmod(const Fp2& K, const Poly& f, const mpz_class& e, const Poly& m) {
    Poly r = mod(K, Poly{K.one()}, m), b = mod(K, f, m);
    size_t n = mpz_sizeinbase(e.get_mpz_t(), 2);
    for (size_t i = n; i-- > 0;) {
        r = mulmod(K, r, r, m);
        if (mpz_tstbit(e.get_mpz_t(), i)) r = mulmod(K, r, b, m);
    }
    return r;
}

Poly deriv(const Fp2& K, const Poly& f) {
    Poly r(f.size() > 1 ? f.size() - 1 : 0);
    for (size_t i = 1; i < f.size(); ++i) r[i - 1] = K.scale(f[i], i % K.p());
    trim(r);
    return r;
}

F2 eval(const Fp2& K, const Poly& f, F2 x) {
    F2 r{};
    for (size_t i = f.size(); i-- > 0;) r = K.add(K.mul(r, x), f[i]);
    return r;
}

Poly from_roots(const Fp2& K, const std::vector<F2>& roots) {
    Poly r{K.one()};
    for (F2 x : roots) r = mul(K, r, Poly{K.neg(x), K.one()});
    return r;
}

static void split(const Fp2& K, const Poly& f, const mpz_class& half, std::vector<F2>& out) {
    int d = deg(f);
    if (d <= 0) return;
    if (d == 1) {
        out.push_back(K.neg(K.mul(f[0], K.inv(f[1]))));
        return;
    }
    // f is monic, squarefree, and splits into distinct linear factors
    for (u64 a = 0;; ++a) {
        Poly base{K.from_index(a), K.one()};
        Poly h = powmod(K, base, half, f);
        h = sub(K, h, Poly{K.one()});
        Poly g = gcd(K, f, h);
        int dg = deg(g);
        if (dg > 0 && dg < d) {
            Poly q, r;
            divmod(K, f, g, q, r);
            split(K, g, half, out);
            split(K, monic(K, q), half, out);
            return;
        }
    }
}

std::vector<F2> roots(const Fp2& K, const Poly& f0) {
    Poly f = monic(K, f0);
    if (deg(f) <= 0) return {};
    mpz_class q = mpz_class((unsigned long)K.p()) * (unsigned long)K.p();
    // product of the distinct linear factors: gcd(f, x^q - x)
    Poly xq = powmod(K, Poly{F2{}, K.one()}, q, f);
    Poly g = gcd(K, f, sub(K, xq, Poly{F2{}, K.one()}));
    std::vector<F2> out;
    split(K, g, (q - 1) / 2, out);
    std::sort(out.begin(), out.end(), Fp2::lex_less);
    return out;
}

bool irreducible(const Fp2& K, const Poly& f0) {
    Poly f = monic(K, f0);
    int d = deg(f);
    if (d <= 0) return false;
    if (d == 1) return true;
    mpz_class q = mpz_class((unsigned long)K.p()) * (unsigned long)K.p();
    Poly x{F2{}, K.one()}, h = x;
    for (int i = 1; i <= d / 2; ++i) {
        h = powmod(K, h, q, f);
        if (deg(gcd(K, f, sub(K, h, x))) > 0) return false;
    }
    return true;
}

bool lex_less(const Poly& f, const Poly& g) {
    size_t n = std::max(f.size(), g.size());
    for (size_t i = 0; i < n; ++i) {
        F2 x = i < f.size() ? f[i] : F2{}, y = i < g.size() ? g[i] : F2{};
        if (x != y) return Fp2::lex_less(x, y);
    }
    return false;
}

}  // namespace isolab::poly
