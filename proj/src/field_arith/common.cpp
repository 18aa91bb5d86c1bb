#include "isolab/common.hpp"

#include <algorithm>

namespace isolab {

u64 gcd_u64(u64 a, u64 b) {
    while (b) {
        u64 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

u64 powmod_u64(u64 b, u64 e, u64 m) {
    u128 r = 1 % m, x = b % m;
    while (e) {
        if (e & 1) r = r * x % m;
        x = x * x % m;
        e >>= 1;
    }
    return (u64)r;
}

u64 invmod_u64(u64 a, u64 m) {
    i64 t = 0, nt = 1;
    u64 r = m, nr = a % m;
    // signed Bezout coefficients stay below m in magnitude
    while (nr) {
        u64 q = r / nr;
        i64 tt = t - (i64)q * nt;
        t = nt;
        nt = tt;
        u64 rr = r - q * nr;
        r = nr;
        nr = rr;
    }
    if (r != 1) throw Error("DivisionByZero", "no inverse of " + std::to_string(a) + " mod " + std::to_string(m));
    return t < 0 ? (u64)(t + (i64)m) : (u64)t;
}

bool is_prime_u64(u64 n) {
    if (n < 2) return false;
    for (u64 q : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % q == 0) return n == q;
    }
    u64 d = n - 1;
    int s = 0;
    while (!(d & 1)) d >>= 1, ++s;
    // deterministic Miller-Rabin base set for 64-bit n
    for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        u64 x = powmod_u64(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool comp = true;
        for (int i = 1; i < s; ++i) {
            x = (u64)((u128)x * x % n);
            if (x == n - 1) {
                comp = false;
                break;
            }
        }
        if (comp) return false;
    }
    return true;
}

std::vector<std::pair<u64, int>> factor_u64(u64 n) {
    std::vector<std::pair<u64, int>> out;
    for (u64 q = 2; q * q <= n; q += (q == 2 ? 1 : 2)) {
        if (n % q) continue;
        int e = 0;
        while (n % q == 0) n /= q, ++e;
        out.push_back({q, e});
    }
    if (n > 1) out.push_back({n, 1});
    return out;
}

u64 mult_order(u64 a, u64 m, u64 cap) {
    if (m == 1) return 1;
    a %= m;
    u128 x = a;
    for (u64 k = 1; k <= cap; ++k) {
        if (x == 1) return k;
        x = x * a % m;
        if (k > m) break;
    }
    return 0;
}

mpz_class mpz_from_u128(u128 v) {
    mpz_class hi((unsigned long)(u64)(v >> 64)), lo((unsigned long)(u64)v);
    return (hi << 64) + lo;
}

std::string to_string(u128 v) { return mpz_from_u128(v).get_str(); }

// xoshiro256** seeded through splitmix64; fixed algorithm, so streams are
// reproducible everywhere.
static u64 splitmix(u64& x) {
    u64 z = (x += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

Rng::Rng(u64 seed) {
    u64 x = seed;
    for (auto& s : s_) s = splitmix(x);
}

static inline u64 rotl(u64 x, int k) { return (x << k) | (x >> (64 - k)); }

u64 Rng::next() {
    u64 r = rotl(s_[1] * 5, 7) * 9;
    u64 t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return r;
}

u64 Rng::below(u64 n) {
    if (n <= 1) return 0;
    u64 lim = ~u64(0) - (~u64(0) % n);
    for (;;) {
        u64 r = next();
        if (r < lim) return r % n;
    }
}

double Rng::uniform01() { return (double)(next() >> 11) * 0x1.0p-53; }

Rng Rng::split(u64 stream) {
    u64 x = next() ^ (stream * 0xd1b54a32d192ed03ull);
    return Rng(splitmix(x));
}

}  // namespace isolab

namespace isolab {
namespace {

mpz_class brent(const mpz_class& n, unsigned long c) {
    mpz_class y = 2, x, g = 1, q = 1, ys;
    const unsigned long m = 64;
    unsigned long r = 1;
    auto f = [&](const mpz_class& v) { mpz_class t = v * v + c; return mpz_class(t % n); };
    do {
        x = y;
        for (unsigned long i = 0; i < r; ++i) y = f(y);
        unsigned long k = 0;
        do {
            ys = y;
            for (unsigned long i = 0; i < std::min(m, r - k); ++i) {
                y = f(y);
                q = q * abs(x - y) % n;
            }
            g = gcd(q, n);
            k += m;
        } while (k < r && g == 1);
        r *= 2;
    } while (g == 1);
    if (g == n) {
        do {
            ys = f(ys);
            g = gcd(mpz_class(abs(x - ys)), n);
        } while (g == 1);
    }
    return g;
}

void split(const mpz_class& n, std::vector<mpz_class>& out) {
    if (n == 1) return;
    if (mpz_probab_prime_p(n.get_mpz_t(), 30)) {
        out.push_back(n);
        return;
    }
    for (unsigned long c = 1;; ++c) {
        mpz_class d = brent(n, c);
        if (d != n) {
            split(d, out);
            split(mpz_class(n / d), out);
            return;
        }
    }
}

}  // namespace

std::vector<std::pair<mpz_class, int>> factor_mpz(const mpz_class& n0) {
    if (n0 <= 0) throw Error("InvalidArgument", "factor_mpz needs n >= 1");
    mpz_class n = n0;
    std::vector<mpz_class> ps;
    for (unsigned long q = 2; q < 4096; ++q) {
        if (n == 1) break;
        while (mpz_divisible_ui_p(n.get_mpz_t(), q)) {
            ps.push_back(mpz_class(q));
            n /= q;
        }
    }
    split(n, ps);
    std::sort(ps.begin(), ps.end());
    std::vector<std::pair<mpz_class, int>> out;
    for (auto& q : ps) {
        if (!out.empty() && out.back().first == q) ++out.back().second;
        else out.push_back({q, 1});
    }
    return out;
}

int valuation(mpz_class n, const mpz_class& q) {
    if (n == 0) return 1 << 30;
    int v = 0;
    while (mpz_divisible_p(n.get_mpz_t(), q.get_mpz_t())) n /= q, ++v;
    return v;
}

mpz_class centered(const mpz_class& r, const mpz_class& M) {
    mpz_class x = r % M;
    if (x < 0) x += M;
    if (2 * x > M) x -= M;
    return x;
}

}  // namespace isolab
