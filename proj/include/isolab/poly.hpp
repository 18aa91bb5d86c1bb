#pragma once
// Dense univariate polynomials over F_{p^2}, little-endian coefficient order.

#include <vector>

#include "isolab/field.hpp"

namespace isolab {

using Poly = std::vector<F2>;

namespace poly {

void trim(Poly& f);
int deg(const Poly& f);  // -1 for zero
Poly add(const Fp2& K, const Poly& f, const Poly& g);
Poly sub(const Fp2& K, const Poly& f, const Poly& g);
Poly mul(const Fp2& K, const Poly& f, const Poly& g);
Poly scale(const Fp2& K, const Poly& f, F2 c);
void divmod(const Fp2& K, const Poly& f, const Poly& g, Poly& q, Poly& r);
Poly mod(const Fp2& K, const Poly& f, const Poly& g);
Poly monic(const Fp2& K, const Poly& f);
Poly gcd(const Fp2& K, Poly f, Poly g);  // monic
// s with s*f == gcd mod g; throws DivisionByZero if gcd != 1
Poly inv_mod(const Fp2& K, const Poly& f, const Poly& g);
Poly mulmod(const Fp2& K, const Poly& f, const Poly& g, const Poly& m);
Poly powmod(const Fp2& K, const Poly& f, const mpz_class& e, const Poly& m);
Poly deriv(const Fp2& K, const Poly& f);
F2 eval(const Fp2& K, const Poly& f, F2 x);
Poly from_roots(const Fp2& K, const std::vector<F2>& roots);

// Distinct roots in F_{p^2}, sorted lexicographically. Deterministic
// equal-degree splitting with (x + a)^((q-1)/2) for a = 0, 1, 2, ...
std::vector<F2> roots(const Fp2& K, const Poly& f);

// Ben-Or irreducibility test over F_{p^2}.
bool irreducible(const Fp2& K, const Poly& f);

bool lex_less(const Poly& f, const Poly& g);

}  // namespace poly
}  // namespace isolab
