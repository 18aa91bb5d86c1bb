#pragma once
// F_p, F_{p^2} = F_p[s]/(s^2 - c) and F_{p^{2k}} = F_{p^2}[y]/(g(y)).

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "isolab/common.hpp"

namespace isolab {

struct F2 {
    u64 a = 0, b = 0;  // a + b*s
    bool operator==(const F2& o) const { return a == o.a && b == o.b; }
    bool operator!=(const F2& o) const { return !(*this == o); }
};

// Arithmetic in F_{p^2}. Plain value type; copying it is cheap.
class Fp2 {
public:
    Fp2() = default;
    Fp2(u64 p, u64 c) : p_(p), c_(c) {}
    u64 p() const { return p_; }
    u64 c() const { return c_; }

    u64 addp(u64 x, u64 y) const { u64 s = x + y; return s >= p_ ? s - p_ : s; }
    u64 subp(u64 x, u64 y) const { return x >= y ? x - y : x + p_ - y; }
    u64 mulp(u64 x, u64 y) const { return (u64)((u128)x * y % p_); }
    u64 negp(u64 x) const { return x ? p_ - x : 0; }

    F2 zero() const { return {}; }
    F2 one() const { return {1 % p_, 0}; }
    F2 from_int(i64 v) const;
    F2 from_mpz(const mpz_class& v) const;
    F2 gen() const { return {0, 1}; }  // s

    F2 add(F2 x, F2 y) const { return {addp(x.a, y.a), addp(x.b, y.b)}; }
    F2 sub(F2 x, F2 y) const { return {subp(x.a, y.a), subp(x.b, y.b)}; }
    F2 neg(F2 x) const { return {negp(x.a), negp(x.b)}; }
    F2 mul(F2 x, F2 y) const {
        u128 r0 = (u128)x.a * y.a + (u128)mulp(x.b, y.b) * c_;
        u128 r1 = (u128)x.a * y.b + (u128)x.b * y.a;
        return {(u64)(r0 % p_), (u64)(r1 % p_)};
    }
    F2 sqr(F2 x) const { return mul(x, x); }
    F2 scale(F2 x, u64 k) const { return {mulp(x.a, k), mulp(x.b, k)}; }
    F2 conj(F2 x) const { return {x.a, negp(x.b)}; }  // x^p
    u64 norm(F2 x) const { return subp(mulp(x.a, x.a), mulp(c_, mulp(x.b, x.b))); }
    F2 inv(F2 x) const;
    F2 pow(F2 x, const mpz_class& e) const;
    F2 pow(F2 x, u64 e) const;
    bool is_zero(F2 x) const { return x.a == 0 && x.b == 0; }
    bool is_square(F2 x) const;  // via the norm to F_p
    std::optional<F2> sqrt(F2 x) const;  // lexicographically smaller root
    std::optional<u64> sqrt_fp(u64 x) const;  // square root inside F_p
    bool in_fp(F2 x) const { return x.b == 0; }
    static bool lex_less(F2 x, F2 y) { return x.a != y.a ? x.a < y.a : x.b < y.b; }
    // enumeration index a + b*p, used for deterministic scans
    F2 from_index(u64 i) const { return {i % p_, (i / p_) % p_}; }
    std::string str(F2 x) const;

private:
    u64 p_ = 0, c_ = 0;
};

class Fq;

struct FieldConfig {
    int k_max = 64;        // extension half-degree cap
    int max_prime_bits = 40;
};

// Immutable context for F_{p^{2k}}. Two contexts built for the same (p, k)
// hold identical moduli.
class FieldCtx {
public:
    static std::shared_ptr<const FieldCtx> build(u64 p, int k, const FieldConfig& cfg = {});
    static u64 choose_nonresidue(u64 p);

    u64 p() const { return f2_.p(); }
    int k() const { return k_; }
    const Fp2& f2() const { return f2_; }
    // monic modulus g(y) = y^k + sum g_i y^i, coefficients g_0..g_{k-1}
    const std::vector<F2>& modulus() const { return g_; }
    const mpz_class& order() const { return q_; }  // p^{2k}

    Fq zero() const;
    Fq one() const;
    Fq embed(F2 x) const;
    Fq from_int(i64 v) const;
    Fq gen() const;                       // y (or s when k = 1)
    Fq from_index(const mpz_class& i) const;  // deterministic enumeration
    const Fq& nonresidue() const;

    // internal
    void mul_into(const F2* x, const F2* y, F2* out) const;
    bool operator==(const FieldCtx& o) const = delete;

private:
    FieldCtx() = default;
    Fp2 f2_;
    int k_ = 1;
    std::vector<F2> g_;
    std::vector<std::pair<int, F2>> gsparse_;  // nonzero (i, -g_i)
    mpz_class q_, t_;                          // q - 1 = 2^s t
    int s_ = 0;
    std::shared_ptr<Fq> nonres_;
    friend class Fq;
    friend std::optional<Fq> sqrt(const Fq&);
};

using FieldPtr = std::shared_ptr<const FieldCtx>;

class Fq {
public:
    Fq() = default;
    Fq(const FieldCtx* F, std::vector<F2> c) : F_(F), c_(std::move(c)) {}
    const FieldCtx* ctx() const { return F_; }
    const std::vector<F2>& coeffs() const { return c_; }
    std::vector<F2>& coeffs() { return c_; }

    bool is_zero() const;
    bool is_one() const;
    bool in_base() const;  // lies in F_{p^2}
    F2 base() const;       // projection, requires in_base()

    Fq operator+(const Fq& o) const;
    Fq operator-(const Fq& o) const;
    Fq operator-() const;
    Fq operator*(const Fq& o) const;
    Fq& operator+=(const Fq& o) { return *this = *this + o; }
    Fq& operator-=(const Fq& o) { return *this = *this - o; }
    Fq& operator*=(const Fq& o) { return *this = *this * o; }
    Fq operator*(F2 s) const;
    Fq scale(i64 v) const;
    bool operator==(const Fq& o) const;
    bool operator!=(const Fq& o) const { return !(*this == o); }
    bool lex_less(const Fq& o) const;
    std::vector<u64> flat() const;
    std::string str() const;

private:
    void check(const Fq& o) const;
    const FieldCtx* F_ = nullptr;
    std::vector<F2> c_;
};

Fq inv(const Fq& x);
Fq pow(const Fq& x, const mpz_class& e);
Fq frobenius(const Fq& x);  // x -> x^p
bool is_square(const Fq& x);
std::optional<Fq> sqrt(const Fq& x);

}  // namespace isolab
