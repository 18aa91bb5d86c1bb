#include "isolab/curve.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "isolab/poly.hpp"

namespace isolab {

// ---------------------------------------------------------------- group law

Ec::Ec(const FieldCtx* F, F2 A, F2 B) : F_(F), a_(F->embed(A)), b_(F->embed(B)) {}

Fq Ec::rhs(const Fq& x) const { return (x * x + a_) * x + b_; }

bool Ec::on_curve(const Pt& P) const { return P.inf || P.y * P.y == rhs(P.x); }

Pt Ec::neg(const Pt& P) const {
    if (P.inf) return P;
    return Pt{P.x, -P.y, false};
}

bool Ec::eq(const Pt& P, const Pt& Q) const {
    if (P.inf || Q.inf) return P.inf == Q.inf;
    return P.x == Q.x && P.y == Q.y;
}

Pt Ec::dbl(const Pt& P) const {
    if (P.inf || P.y.is_zero()) return Pt::infinity();
    Fq l = (P.x * P.x * F_->f2().from_int(3) + a_) * inv(P.y + P.y);
    Fq x3 = l * l - P.x - P.x;
    return Pt{x3, l * (P.x - x3) - P.y, false};
}

Pt Ec::add(const Pt& P, const Pt& Q) const {
    if (P.inf) return Q;
    if (Q.inf) return P;
    if (P.x == Q.x) {
        if (P.y == Q.y) return dbl(P);
        return Pt::infinity();
    }
    Fq l = (Q.y - P.y) * inv(Q.x - P.x);
    Fq x3 = l * l - P.x - Q.x;
    return Pt{x3, l * (P.x - x3) - P.y, false};
}

namespace {

struct Jac {
    Fq X, Y, Z;
    bool inf() const { return Z.is_zero(); }
};

Jac jdbl(const Jac& P, const Fq& a) {
    if (P.inf()) return P;
    Fq XX = P.X * P.X, YY = P.Y * P.Y, YYYY = YY * YY, ZZ = P.Z * P.Z;
    Fq t = P.X + YY;
    Fq S = (t * t - XX - YYYY).scale(2);
    Fq M = XX.scale(3) + a * ZZ * ZZ;
    Fq T = M * M - S - S;
    Fq yz = P.Y + P.Z;
    return Jac{T, M * (S - T) - YYYY.scale(8), yz * yz - YY - ZZ};
}

Jac jadd(const Jac& P, const Jac& Q, const Fq& a) {
    if (P.inf()) return Q;
    if (Q.inf()) return P;
    Fq Z1Z1 = P.Z * P.Z, Z2Z2 = Q.Z * Q.Z;
    Fq U1 = P.X * Z2Z2, U2 = Q.X * Z1Z1;
    Fq S1 = P.Y * Q.Z * Z2Z2, S2 = Q.Y * P.Z * Z1Z1;
    Fq H = U2 - U1, r = (S2 - S1).scale(2);
    if (H.is_zero()) {
        if (r.is_zero()) return jdbl(P, a);
        Fq z = P.Z.ctx()->zero();
        return Jac{z, z, z};
    }
    Fq I = H.scale(2);
    I = I * I;
    Fq J = H * I, V = U1 * I;
    Fq X3 = r * r - J - V - V;
    Fq Y3 = r * (V - X3) - (S1 * J).scale(2);
    Fq zz = P.Z + Q.Z;
    return Jac{X3, Y3, (zz * zz - Z1Z1 - Z2Z2) * H};
}

}  // namespace

Pt Ec::mul(const mpz_class& n0, const Pt& P) const {
    if (P.inf || n0 == 0) return Pt::infinity();
    mpz_class n = abs(n0);
    Pt base = n0 < 0 ? neg(P) : P;
    Jac B{base.x, base.y, F_->one()};
    Jac R{F_->one(), F_->one(), F_->zero()};
    size_t nb = mpz_sizeinbase(n.get_mpz_t(), 2);
    for (size_t i = nb; i-- > 0;) {
        R = jdbl(R, a_);
        if (mpz_tstbit(n.get_mpz_t(), i)) R = jadd(R, B, a_);
    }
    if (R.inf()) return Pt::infinity();
    Fq zi = inv(R.Z), zi2 = zi * zi;
    return Pt{R.X * zi2, R.Y * zi2 * zi, false};
}

std::optional<Pt> Ec::lift_x(const Fq& x) const {
    auto y = sqrt(rhs(x));
    if (!y) return std::nullopt;
    return Pt{x, *y, false};
}

Fq random_elem(const FieldCtx* F, Rng& rng) {
    std::vector<F2> c(F->k());
    for (auto& v : c) v = F2{rng.below(F->p()), rng.below(F->p())};
    return Fq(F, std::move(c));
}

Pt Ec::random_point(Rng& rng) const {
    for (;;) {
        auto P = lift_x(random_elem(F_, rng));
        if (!P) continue;
        if (rng.below(2)) P->y = -P->y;
        return *P;
    }
}

mpz_class Ec::order(const Pt& P, const mpz_class& n, const std::vector<std::pair<mpz_class, int>>& fac) const {
    mpz_class ord = n;
    for (auto& [l, e] : fac) {
        for (int i = 0; i < e; ++i) {
            if (ord % l != 0) break;
            if (!mul(mpz_class(ord / l), P).inf) break;
            ord /= l;
        }
    }
    return ord;
}

// ---------------------------------------------------------------- curves

F2 j_invariant(const Fp2& K, F2 A, F2 B) {
    F2 a3 = K.scale(K.mul(K.sqr(A), A), 4);
    F2 den = K.add(a3, K.scale(K.sqr(B), 27));
    if (K.is_zero(den)) throw Error("SingularCurve", "4A^3 + 27B^2 = 0");
    return K.mul(K.scale(a3, 1728 % K.p()), K.inv(den));
}

Curve::Curve(FieldPtr F, F2 A, F2 B) : F_(std::move(F)), A_(A), B_(B) { j_ = j_invariant(F_->f2(), A, B); }

mpq_class eichler_mass(const Fp2& K, const std::vector<F2>& js) {
    mpq_class s = 0;
    for (F2 j : js) s += mpq_class(1, aut_order(K, j));
    s.canonicalize();
    return s;
}

int aut_order(const Fp2& K, F2 j) {
    if (K.is_zero(j)) return 6;
    if (j == K.from_int(1728)) return 4;
    return 2;
}

bool frobenius_is_minus_p(const Curve& E, int trials) {
    Ec G = E.base();
    Rng rng(0xc0ffee ^ E.A().a ^ (E.B().a << 20));
    mpz_class n((unsigned long)(E.p() + 1));
    for (int t = 0; t < trials; ++t)
        if (!G.mul(n, G.random_point(rng)).inf) return false;
    return true;
}

Curve canonical_model(const FieldPtr& F, F2 j) {
    const Fp2& K = F->f2();
    auto accept = [&](F2 A, F2 B) -> std::optional<Curve> {
        F2 disc = K.add(K.scale(K.mul(K.sqr(A), A), 4), K.scale(K.sqr(B), 27));
        if (K.is_zero(disc)) return std::nullopt;
        Curve E(F, A, B);
        if (!frobenius_is_minus_p(E)) return std::nullopt;
        E.set_frobenius_sign(-1);
        return E;
    };
    if (K.is_zero(j)) {
        for (u64 i = 1; i < K.p() * K.p(); ++i)
            if (auto E = accept(K.zero(), K.from_index(i))) return *E;
    } else if (j == K.from_int(1728)) {
        for (u64 i = 1; i < K.p() * K.p(); ++i)
            if (auto E = accept(K.from_index(i), K.zero())) return *E;
    } else {
        F2 t = K.sub(K.from_int(1728), j);
        F2 A = K.scale(K.mul(j, t), 3), B = K.scale(K.mul(j, K.sqr(t)), 2);
        if (auto E = accept(A, B)) return *E;
        F2 d{};
        for (u64 i = 2;; ++i) {
            d = K.from_index(i);
            if (!K.is_square(d)) break;
        }
        if (auto E = accept(K.mul(A, K.sqr(d)), K.mul(B, K.mul(d, K.sqr(d))))) return *E;
    }
    throw Error("NotSupersingular", "j = " + K.str(j));
}

std::vector<F2> two_isogenous_j(const Curve& E) {
    const Fp2& K = E.K();
    Poly cubic{E.B(), E.A(), K.zero(), K.one()};
    std::vector<F2> out;
    for (F2 x0 : poly::roots(K, cubic)) {
        F2 v = K.add(K.scale(K.sqr(x0), 3), E.A());
        F2 A2 = K.sub(E.A(), K.scale(v, 5)), B2 = K.sub(E.B(), K.scale(K.mul(x0, v), 7));
        out.push_back(j_invariant(K, A2, B2));
    }
    return out;
}

F2 starting_supersingular_j(const Fp2& K) {
    u64 p = K.p();
    if (p % 4 == 3) return K.from_int(1728);
    if (p % 3 == 2) return K.zero();
    // class number one CM invariants; supersingular when p is inert
    static const std::pair<i64, i64> cm[] = {{7, -3375},
                                             {8, 8000},
                                             {11, -32768},
                                             {19, -884736},
                                             {43, -884736000},
                                             {67, -147197952000},
                                             {163, -262537412640768000}};
    for (auto [D, j] : cm) {
        if ((u64)D % p == 0) continue;
        u64 r = (p - (u64)D % p) % p;
        if (powmod_u64(r, (p - 1) / 2, p) == p - 1) return K.from_int(j);
    }
    FieldPtr F = FieldCtx::build(p, 1);
    for (u64 j = 0; j < p; ++j) {
        try {
            canonical_model(F, K.from_int((i64)j));
            return K.from_int((i64)j);
        } catch (const Error&) {
        }
    }
    throw Error("NotSupersingular", "no supersingular j found in F_p");
}

std::vector<F2> enumerate_supersingular(const FieldPtr& F, const EnumConfig& cfg) {
    const Fp2& K = F->f2();
    if (K.p() > cfg.bound) throw Error("BoundExceeded", "p above the enumeration bound");
    auto key = [](F2 x) { return std::make_pair(x.a, x.b); };
    std::set<std::pair<u64, u64>> seen;
    std::deque<F2> todo;
    F2 j0 = starting_supersingular_j(K);
    todo.push_back(j0);
    seen.insert(key(j0));
    while (!todo.empty()) {
        F2 j = todo.front();
        todo.pop_front();
        Curve E = canonical_model(F, j);
        for (F2 j2 : two_isogenous_j(E))
            if (seen.insert(key(j2)).second) todo.push_back(j2);
    }
    std::vector<F2> out;
    for (auto [a, b] : seen) out.push_back(F2{a, b});
    std::sort(out.begin(), out.end(), Fp2::lex_less);
    return out;
}

// ---------------------------------------------------------------- torsion

int torsion_degree(u64 p, u64 m) {
    if (m == 1) return 1;
    if (gcd_u64(p, m) != 1) return 0;
    u64 a = (m - p % m) % m;
    u64 k = mult_order(a, m, 1u << 20);
    return (int)k;
}

static std::vector<u64> prime_divisors(u64 m) {
    std::vector<u64> out;
    for (auto [l, e] : factor_u64(m)) out.push_back(l);
    return out;
}

Fq canonical_root(const FieldCtx* F, u64 m) {
    mpz_class q1 = F->order() - 1;
    if (q1 % (unsigned long)m != 0) throw Error("ExtensionTooLarge", "mu_m not contained in the field");
    mpz_class e = q1 / (unsigned long)m;
    auto primes = prime_divisors(m);
    Rng rng(0x5eed0000 + m);
    for (;;) {
        Fq x = random_elem(F, rng);
        if (x.is_zero()) continue;
        Fq h = pow(x, e);
        bool prim = true;
        for (u64 l : primes)
            if (pow(h, mpz_class((unsigned long)(m / l))).is_one()) prim = false;
        if (prim) return h;
    }
}

namespace {

struct Line {
    Fq num, den;
    Pt next;
};

// Miller step evaluated at R: returns l(R), v(R) and T+U.
Line line_eval(const Ec& E, const Pt& T, const Pt& U, const Pt& R) {
    const FieldCtx* F = E.field();
    if (T.inf || U.inf) return Line{F->one(), F->one(), T.inf ? U : T};
    if (T.x == U.x && (T.y + U.y).is_zero()) return Line{R.x - T.x, F->one(), Pt::infinity()};
    Fq l;
    if (T.x == U.x)
        l = (T.x * T.x * F->f2().from_int(3) + E.a()) * inv(T.y + T.y);
    else
        l = (U.y - T.y) * inv(U.x - T.x);
    Fq x3 = l * l - T.x - U.x;
    Pt S{x3, l * (T.x - x3) - T.y, false};
    return Line{R.y - T.y - l * (R.x - T.x), R.x - x3, S};
}

std::optional<Fq> miller(const Ec& E, const Pt& P, const Pt& R, u64 m) {
    const FieldCtx* F = E.field();
    Fq fn = F->one(), fd = F->one();
    Pt T = P;
    int nb = 64 - __builtin_clzll(m);
    for (int i = nb - 2; i >= 0; --i) {
        Line L = line_eval(E, T, T, R);
        fn = fn * fn * L.num;
        fd = fd * fd * L.den;
        T = L.next;
        if ((m >> i) & 1) {
            Line M = line_eval(E, T, P, R);
            fn = fn * M.num;
            fd = fd * M.den;
            T = M.next;
        }
    }
    if (fn.is_zero() || fd.is_zero()) return std::nullopt;
    return fn * inv(fd);
}

}  // namespace

Fq weil_pairing(const Ec& E, const Pt& P, const Pt& Q, u64 m) {
    const FieldCtx* F = E.field();
    if (P.inf || Q.inf || m == 1) return F->one();
    if (!E.mul((i64)m, P).inf || !E.mul((i64)m, Q).inf) throw Error("NotTorsion", "point not killed by m");
    if (E.eq(P, Q)) return F->one();
    auto a = miller(E, P, Q, m), b = miller(E, Q, P, m);
    if (a && b) {
        Fq r = *a * inv(*b);
        return (m & 1) ? -r : r;
    }
    Rng rng(0xabcdef ^ m);
    for (int t = 0; t < 50; ++t) {
        Pt S = E.random_point(rng);
        auto f1 = miller(E, P, E.add(Q, S), m), f2 = miller(E, P, S, m);
        auto g1 = miller(E, Q, E.sub(P, S), m), g2 = miller(E, Q, E.neg(S), m);
        if (f1 && f2 && g1 && g2) return *f1 * *g2 * inv(*f2 * *g1);
    }
    throw Error("PairingFailed", "no usable shift found");
}

u64 dlog_mu(const Fq& zeta, const Fq& h, u64 m) {
    // Pohlig-Hellman with baby-step giant-step in each prime-order layer
    u64 x = 0, mod = 1;
    for (auto [l, e] : factor_u64(m)) {
        u64 le = 1;
        for (int i = 0; i < e; ++i) le *= l;
        mpz_class cof((unsigned long)(m / le));
        Fq z = pow(zeta, cof), y = pow(h, cof);  // order l^e
        Fq g = pow(z, mpz_class((unsigned long)(le / l)));  // order l
        u64 s = 1;
        while (s * s < l) ++s;
        std::map<std::vector<u64>, u64> baby;
        Fq c = z.ctx()->one();
        for (u64 j = 0; j < s; ++j) {
            baby.emplace(c.flat(), j);
            c = c * g;
        }
        Fq giant = inv(c);
        u64 xi = 0, lp = 1;
        for (int i = 0; i < e; ++i) {
            Fq t = pow(y * pow(z, mpz_class(-(long)xi)), mpz_class((unsigned long)(le / lp / l)));
            u64 d = ~u64(0);
            Fq cur = t;
            for (u64 i2 = 0; i2 <= s && d == ~u64(0); ++i2) {
                auto it = baby.find(cur.flat());
                if (it != baby.end()) d = (i2 * s + it->second) % l;
                cur = cur * giant;
            }
            if (d == ~u64(0)) throw Error("NotInSubgroup", "element is not a power of zeta");
            xi += d * lp;
            lp *= l;
        }
        // combine x (mod mod) with xi (mod le)
        u64 inv = invmod_u64(mod % le, le);
        u64 k = (u64)(((u128)((xi + le - x % le) % le) * inv) % le);
        x += k * mod;
        mod *= le;
    }
    return x % m;
}

std::pair<u64, u64> basis_coords(const Ec& E, const TorsionBasis& T, const Pt& R) {
    if (R.inf) return {0, 0};
    u64 a = dlog_mu(T.zeta, weil_pairing(E, R, T.Q, T.m), T.m);
    u64 b = dlog_mu(T.zeta, weil_pairing(E, T.P, R, T.m), T.m);
    return {a, b};
}

TorsionBasis torsion_basis(const Curve& C, u64 m, const FieldPtr& F) {
    u64 p = C.p();
    if (m % p == 0) throw Error("Unsupported", "p-torsion is trivial on supersingular curves");
    int k = F->k();
    int need = torsion_degree(p, m);
    if (need == 0 || k % need != 0) throw Error("ExtensionTooLarge", "E[m] not rational over this field");
    TorsionBasis T;
    T.m = m;
    T.k = k;
    T.F = F;
    Ec E = C.over(F.get());
    if (m == 1) {
        T.P = T.Q = Pt::infinity();
        T.zeta = F->one();
        return T;
    }
    // #E(F_{p^{2k}}) = n^2 with n = p^k - (-1)^k
    mpz_class n;
    mpz_ui_pow_ui(n.get_mpz_t(), p, k);
    n -= (k % 2) ? -1 : 1;
    if (n % (unsigned long)m != 0) throw Error("ExtensionTooLarge", "m does not divide the group exponent");
    mpz_class h = n / (unsigned long)m;
    auto primes = prime_divisors(m);
    Rng rng(0x7051 ^ (m << 8) ^ (u64)k);
    auto full_order = [&](const Pt& X) {
        for (u64 l : primes)
            if (E.mul(mpz_class((unsigned long)(m / l)), X).inf) return false;
        return true;
    };
    Pt P;
    do P = E.mul(h, E.random_point(rng));
    while (!full_order(P));
    Pt Q;
    Fq z;
    for (;;) {
        Q = E.mul(h, E.random_point(rng));
        z = weil_pairing(E, P, Q, m);
        bool prim = true;
        for (u64 l : primes)
            if (pow(z, mpz_class((unsigned long)(m / l))).is_one()) prim = false;
        if (prim) break;
    }
    Fq zc = canonical_root(F.get(), m);
    u64 t = dlog_mu(z, zc, m);
    T.P = P;
    T.Q = E.mul(mpz_class((unsigned long)t), Q);
    T.zeta = zc;
    return T;
}

FieldTower::FieldTower(u64 p, FieldConfig cfg) : p_(p), cfg_(cfg) {}

const FieldPtr& FieldTower::at(int k) const {
    auto it = fields_.find(k);
    if (it != fields_.end()) return it->second;
    return fields_[k] = FieldCtx::build(p_, k, cfg_);
}

}  // namespace isolab
