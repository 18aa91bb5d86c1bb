#include "isolab/field.hpp"

#include <sstream>

#include "isolab/poly.hpp"

namespace isolab {

// ---------------------------------------------------------------- F_{p^2}

F2 Fp2::from_int(i64 v) const {
    i64 r = v % (i64)p_;
    if (r < 0) r += (i64)p_;
    return {(u64)r, 0};
}

F2 Fp2::from_mpz(const mpz_class& v) const {
    mpz_class r = v % mpz_class((unsigned long)p_);
    if (r < 0) r += (unsigned long)p_;
    return {r.get_ui(), 0};
}

F2 Fp2::inv(F2 x) const {
    u64 n = norm(x);
    if (n == 0) throw Error("DivisionByZero", "inverse of zero in F_p^2");
    u64 ni = invmod_u64(n, p_);
    return scale(conj(x), ni);
}

F2 Fp2::pow(F2 x, const mpz_class& e) const {
    if (e < 0) return pow(inv(x), mpz_class(-e));
    F2 r = one();
    size_t n = mpz_sizeinbase(e.get_mpz_t(), 2);
    for (size_t i = n; i-- > 0;) {
        r = sqr(r);
        if (mpz_tstbit(e.get_mpz_t(), i)) r = mul(r, x);
    }
    return r;
}

F2 Fp2::pow(F2 x, u64 e) const {
    F2 r = one();
    while (e) {
        if (e & 1) r = mul(r, x);
        x = sqr(x);
        e >>= 1;
    }
    return r;
}

bool Fp2::is_square(F2 x) const {
    u64 n = norm(x);
    return n == 0 || powmod_u64(n, (p_ - 1) / 2, p_) == 1;
}

std::string Fp2::str(F2 x) const {
    if (x.b == 0) return std::to_string(x.a);
    return std::to_string(x.a) + "+" + std::to_string(x.b) + "*s";
}

namespace {

// Tonelli-Shanks over any field wrapper exposing mul/one/eq/pow.
template <class T, class Ops>
std::optional<T> tonelli(const Ops& ops, const T& a, const mpz_class& q, const T& z) {
    if (ops.is_zero(a)) return a;
    mpz_class t = q - 1;
    int s = 0;
    while (mpz_even_p(t.get_mpz_t())) t >>= 1, ++s;
    T c = ops.pow(z, t), x = ops.pow(a, mpz_class((t + 1) / 2)), b = ops.pow(a, t);
    int m = s;
    while (!ops.is_one(b)) {
        int i = 0;
        T b2 = b;
        while (!ops.is_one(b2)) {
            b2 = ops.mul(b2, b2);
            if (++i == m) return std::nullopt;
        }
        T w = c;
        for (int j = 0; j < m - i - 1; ++j) w = ops.mul(w, w);
        x = ops.mul(x, w);
        c = ops.mul(w, w);
        b = ops.mul(b, c);
        m = i;
    }
    return x;
}

struct Fp2Ops {
    const Fp2& K;
    F2 mul(F2 x, F2 y) const { return K.mul(x, y); }
    F2 pow(F2 x, const mpz_class& e) const { return K.pow(x, e); }
    bool is_one(F2 x) const { return x == K.one(); }
    bool is_zero(F2 x) const { return K.is_zero(x); }
};

struct FqOps {
    Fq mul(const Fq& x, const Fq& y) const { return x * y; }
    Fq pow(const Fq& x, const mpz_class& e) const { return isolab::pow(x, e); }
    bool is_one(const Fq& x) const { return x.is_one(); }
    bool is_zero(const Fq& x) const { return x.is_zero(); }
};

}  // namespace

std::optional<F2> Fp2::sqrt(F2 x) const {
    if (!is_square(x)) return std::nullopt;
    mpz_class q = mpz_class((unsigned long)p_) * (unsigned long)p_;
    F2 z{};
    for (u64 i = 2;; ++i) {
        z = from_index(i);
        if (!is_square(z)) break;
    }
    auto r = tonelli(Fp2Ops{*this}, x, q, z);
    if (!r) return r;
    F2 m = neg(*r);
    return lex_less(m, *r) ? m : *r;
}

std::optional<u64> Fp2::sqrt_fp(u64 x) const {
    x %= p_;
    if (x == 0) return 0;
    if (powmod_u64(x, (p_ - 1) / 2, p_) != 1) return std::nullopt;
    // brute force is fine for desk-scale p; otherwise go through F_{p^2}
    if (p_ < 100000) {
        for (u64 r = 1; r <= p_ / 2; ++r)
            if (mulp(r, r) == x) return r;
    }
    auto r = sqrt(F2{x, 0});
    u64 v = r->a;
    return std::min(v, negp(v));
}

// ---------------------------------------------------------------- context

u64 FieldCtx::choose_nonresidue(u64 p) {
    if (p % 4 == 3) return p - 1;
    for (u64 c = 2;; ++c)
        if (powmod_u64(c, (p - 1) / 2, p) == p - 1) return c;
}

std::shared_ptr<const FieldCtx> FieldCtx::build(u64 p, int k, const FieldConfig& cfg) {
    if (p <= 3 || !is_prime_u64(p)) throw Error("CompositeModulus", std::to_string(p) + " is not a prime > 3");
    int bits = 0;
    for (u64 t = p; t; t >>= 1) ++bits;
    if (bits > cfg.max_prime_bits) throw Error("UnsupportedSize", "p exceeds the word budget");
    if (k < 1) throw Error("UnsupportedSize", "extension degree must be positive");
    if (k > cfg.k_max) throw Error("ExtensionTooLarge", "k = " + std::to_string(k) + " exceeds k_max");

    std::shared_ptr<FieldCtx> F(new FieldCtx());
    F->f2_ = Fp2(p, choose_nonresidue(p));
    F->k_ = k;
    const Fp2& K = F->f2_;
    mpz_class q2 = mpz_class((unsigned long)p) * (unsigned long)p;
    mpz_pow_ui(F->q_.get_mpz_t(), q2.get_mpz_t(), k);

    if (k > 1) {
        // binomial y^k - beta exists iff every prime factor of k divides q2 - 1
        auto fk = factor_u64((u64)k);
        bool binom = true;
        for (auto [r, e] : fk)
            if (mpz_class(q2 - 1) % (unsigned long)r != 0) binom = false;
        Poly g;
        if (binom) {
            for (u64 i = 1;; ++i) {
                F2 beta = K.from_index(i);
                if (K.is_zero(beta)) continue;
                bool ok = true;
                for (auto [r, e] : fk)
                    if (K.pow(beta, mpz_class((q2 - 1) / (unsigned long)r)) == K.one()) ok = false;
                if (ok) {
                    g.assign(k + 1, F2{});
                    g[0] = K.neg(beta);
                    g[k] = K.one();
                    break;
                }
            }
        } else {
            for (u64 bi = 1; g.empty(); ++bi)
                for (u64 ai = 1; ai <= bi; ++ai) {
                    Poly t(k + 1, F2{});
                    t[0] = K.from_index(bi);
                    t[1] = K.from_index(ai);
                    t[k] = K.one();
                    if (poly::irreducible(K, t)) {
                        g = t;
                        break;
                    }
                }
        }
        F->g_.assign(g.begin(), g.begin() + k);
        for (int i = 0; i < k; ++i)
            if (!K.is_zero(F->g_[i])) F->gsparse_.push_back({i, K.neg(F->g_[i])});
    }

    F->t_ = F->q_ - 1;
    F->s_ = 0;
    while (mpz_even_p(F->t_.get_mpz_t())) F->t_ >>= 1, ++F->s_;
    mpz_class half = (F->q_ - 1) / 2;
    for (mpz_class i = 2;; ++i) {
        Fq z = F->from_index(i);
        if (z.is_zero()) continue;
        if (!pow(z, half).is_one()) {
            F->nonres_ = std::make_shared<Fq>(z);
            break;
        }
    }
    return F;
}

Fq FieldCtx::zero() const { return Fq(this, std::vector<F2>(k_)); }
Fq FieldCtx::one() const { return embed(f2_.one()); }
Fq FieldCtx::embed(F2 x) const {
    std::vector<F2> c(k_);
    c[0] = x;
    return Fq(this, std::move(c));
}
Fq FieldCtx::from_int(i64 v) const { return embed(f2_.from_int(v)); }
Fq FieldCtx::gen() const {
    if (k_ == 1) return embed(f2_.gen());
    std::vector<F2> c(k_);
    c[1] = f2_.one();
    return Fq(this, std::move(c));
}

Fq FieldCtx::from_index(const mpz_class& i0) const {
    mpz_class i = i0;
    std::vector<F2> c(k_);
    unsigned long p = (unsigned long)f2_.p();
    for (int j = 0; j < k_; ++j) {
        c[j].a = mpz_class(i % p).get_ui();
        i /= p;
        c[j].b = mpz_class(i % p).get_ui();
        i /= p;
    }
    return Fq(this, std::move(c));
}

const Fq& FieldCtx::nonresidue() const { return *nonres_; }

void FieldCtx::mul_into(const F2* x, const F2* y, F2* out) const {
    const u64 p = f2_.p(), c = f2_.c();
    const int k = k_;
    if (k == 1) {
        out[0] = f2_.mul(x[0], y[0]);
        return;
    }
    // lazy reduction: accumulate raw 80-bit products in 128-bit registers
    u128 a0[128], a1[128], a2[128];
    const int n = 2 * k - 1;
    for (int t = 0; t < n; ++t) a0[t] = a1[t] = a2[t] = 0;
    for (int i = 0; i < k; ++i) {
        const F2 xi = x[i];
        if (xi.a == 0 && xi.b == 0) continue;
        for (int j = 0; j < k; ++j) {
            const F2 yj = y[j];
            a0[i + j] += (u128)xi.a * yj.a;
            a1[i + j] += (u128)xi.b * yj.b;
            a2[i + j] += (u128)xi.a * yj.b + (u128)xi.b * yj.a;
        }
    }
    F2 r[128];
    for (int t = 0; t < n; ++t) {
        u64 s0 = (u64)(a0[t] % p), s1 = (u64)(a1[t] % p);
        r[t].a = (u64)(((u128)s1 * c + s0) % p);
        r[t].b = (u64)(a2[t] % p);
    }
    for (int t = n - 1; t >= k; --t) {
        F2 top = r[t];
        if (top.a == 0 && top.b == 0) continue;
        for (auto& [i, gi] : gsparse_) r[t - k + i] = f2_.add(r[t - k + i], f2_.mul(top, gi));
    }
    for (int t = 0; t < k; ++t) out[t] = r[t];
}

// ---------------------------------------------------------------- elements

void Fq::check(const Fq& o) const {
    if (F_ != o.F_) {
        if (!F_ || !o.F_ || F_->p() != o.F_->p() || F_->k() != o.F_->k() || F_->modulus() != o.F_->modulus())
            throw Error("ContextMismatch", "operands live in different fields");
    }
}

bool Fq::is_zero() const {
    for (auto& x : c_)
        if (x.a || x.b) return false;
    return true;
}

bool Fq::is_one() const {
    if (c_.empty() || c_[0].a != 1 || c_[0].b != 0) return false;
    for (size_t i = 1; i < c_.size(); ++i)
        if (c_[i].a || c_[i].b) return false;
    return true;
}

bool Fq::in_base() const {
    for (size_t i = 1; i < c_.size(); ++i)
        if (c_[i].a || c_[i].b) return false;
    return true;
}

F2 Fq::base() const {
    if (!in_base()) throw Error("NotInSubfield", "element does not lie in F_p^2");
    return c_[0];
}

Fq Fq::operator+(const Fq& o) const {
    check(o);
    Fq r(F_, c_);
    const Fp2& K = F_->f2();
    for (size_t i = 0; i < c_.size(); ++i) r.c_[i] = K.add(c_[i], o.c_[i]);
    return r;
}

Fq Fq::operator-(const Fq& o) const {
    check(o);
    Fq r(F_, c_);
    const Fp2& K = F_->f2();
    for (size_t i = 0; i < c_.size(); ++i) r.c_[i] = K.sub(c_[i], o.c_[i]);
    return r;
}

Fq Fq::operator-() const {
    Fq r(F_, c_);
    const Fp2& K = F_->f2();
    for (auto& x : r.c_) x = K.neg(x);
    return r;
}

Fq Fq::operator*(const Fq& o) const {
    check(o);
    Fq r(F_, std::vector<F2>(c_.size()));
    F_->mul_into(c_.data(), o.c_.data(), r.c_.data());
    return r;
}

Fq Fq::operator*(F2 s) const {
    Fq r(F_, c_);
    const Fp2& K = F_->f2();
    for (auto& x : r.c_) x = K.mul(x, s);
    return r;
}

Fq Fq::scale(i64 v) const { return *this * F_->f2().from_int(v); }

bool Fq::operator==(const Fq& o) const {
    check(o);
    return c_ == o.c_;
}

std::vector<u64> Fq::flat() const {
    std::vector<u64> v;
    v.reserve(2 * c_.size());
    for (auto& x : c_) v.push_back(x.a), v.push_back(x.b);
    return v;
}

bool Fq::lex_less(const Fq& o) const { return flat() < o.flat(); }

std::string Fq::str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < c_.size(); ++i) os << (i ? "," : "") << F_->f2().str(c_[i]);
    os << "]";
    return os.str();
}

Fq inv(const Fq& x) {
    const FieldCtx* F = x.ctx();
    const Fp2& K = F->f2();
    if (x.is_zero()) throw Error("DivisionByZero", "inverse of zero");
    if (F->k() == 1) return F->embed(K.inv(x.coeffs()[0]));
    Poly m(F->modulus().begin(), F->modulus().end());
    m.push_back(K.one());
    Poly f = x.coeffs();
    poly::trim(f);
    Poly r = poly::inv_mod(K, f, m);
    r.resize(F->k());
    return Fq(F, r);
}

Fq pow(const Fq& x, const mpz_class& e) {
    if (e < 0) return pow(inv(x), mpz_class(-e));
    Fq r = x.ctx()->one();
    size_t n = mpz_sizeinbase(e.get_mpz_t(), 2);
    for (size_t i = n; i-- > 0;) {
        r = r * r;
        if (mpz_tstbit(e.get_mpz_t(), i)) r = r * x;
    }
    return r;
}

Fq frobenius(const Fq& x) { return pow(x, mpz_class((unsigned long)x.ctx()->p())); }

bool is_square(const Fq& x) {
    if (x.is_zero()) return true;
    return pow(x, mpz_class((x.ctx()->order() - 1) / 2)).is_one();
}

std::optional<Fq> sqrt(const Fq& x) {
    const FieldCtx* F = x.ctx();
    if (!is_square(x)) return std::nullopt;
    auto r = tonelli(FqOps{}, x, F->order(), F->nonresidue());
    if (!r) return r;
    Fq m = -*r;
    return m.lex_less(*r) ? m : *r;
}

}  // namespace isolab
