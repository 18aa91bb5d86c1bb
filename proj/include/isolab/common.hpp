#pragma once
// Shared plumbing: error type, integer helpers, portable RNG.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace isolab {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

// Every failure carries a short machine-readable kind ("NoRoot", "ExtensionTooLarge", ...).
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

bool is_prime_u64(u64 n);
u64 powmod_u64(u64 b, u64 e, u64 m);
u64 invmod_u64(u64 a, u64 m);  // throws DivisionByZero when not invertible
u64 gcd_u64(u64 a, u64 b);

// Prime factorisation by trial division (desk-scale inputs only).
std::vector<std::pair<u64, int>> factor_u64(u64 n);

// Prime factorisation of arbitrary integers: trial division, then Pollard-Brent.
std::vector<std::pair<mpz_class, int>> factor_mpz(const mpz_class& n);
int valuation(mpz_class n, const mpz_class& q);
// centred lift of r mod M into (-M/2, M/2]
mpz_class centered(const mpz_class& r, const mpz_class& M);

// Multiplicative order of a modulo m (gcd(a,m)=1). Returns 0 when it exceeds cap.
u64 mult_order(u64 a, u64 m, u64 cap = ~u64(0));

mpz_class mpz_from_u128(u128 v);
std::string to_string(u128 v);

// xoshiro256** with a splitmix64 seeder; the bounded draw is plain rejection
// sampling so results match across compilers and standard libraries.
class Rng {
public:
    explicit Rng(u64 seed);
    u64 next();
    u64 below(u64 n);       // uniform in [0, n)
    double uniform01();     // 53-bit resolution
    Rng split(u64 stream);  // derived independent stream

private:
    u64 s_[4];
};

}  // namespace isolab
