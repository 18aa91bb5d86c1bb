#include "isolab/quat.hpp"

namespace isolab {

static mpz_class den_of(const QVec& x) {
    mpz_class d = 1;
    for (auto& c : x) mpz_lcm(d.get_mpz_t(), d.get_mpz_t(), c.get_den_mpz_t());
    return d;
}

static ZVec scaled(const QVec& x, const mpz_class& d) {
    ZVec z(4);
    for (int i = 0; i < 4; ++i) {
        mpq_class v = x[i] * d;
        if (v.get_den() != 1) throw Error("InternalError", "scaling left a denominator");
        z[i] = v.get_num();
    }
    return z;
}

static mpz_class upow(u64 b, int e) {
    mpz_class r;
    mpz_ui_pow_ui(r.get_mpz_t(), b, (unsigned long)e);
    return r;
}

// product through the table, or geometrically while the frame is partial
static QVec product(Frame& F, const QVec& x, const QVec& y) {
    if (F.rank() == 4) return F.mul(x, y);
    const EndoLab& L = F.lab();
    return F.coords(L.compose(F.realize(x), F.realize(y)));
}

ZMat GramLattice::traces() const {
    auto b = lat_basis(lat);
    ZMat T(b.size(), ZVec(b.size()));
    for (size_t i = 0; i < b.size(); ++i)
        for (size_t j = i; j < b.size(); ++j) {
            mpq_class t = frame->trd_mul(b[i], b[j]);
            if (t.get_den() != 1) throw Error("NonIntegral", "trace pairing is not integral");
            T[i][j] = T[j][i] = t.get_num();
        }
    return T;
}

mpq_class GramLattice::disc() const {
    auto b = lat_basis(lat);
    QMat T(b.size(), std::vector<mpq_class>(b.size()));
    for (size_t i = 0; i < b.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) T[i][j] = frame->trd_mul(b[i], b[j]);
    return abs(zla::det(T));
}

GramLattice lattice_from(Frame& F, const std::vector<EndoRep>& elems) {
    std::vector<QVec> g;
    for (auto& e : elems) g.push_back(F.coords(e));
    return {&F, lat_span(g)};
}

GramLattice lattice_of(Frame& F, const Lat& L) { return {&F, L}; }

GramLattice ring_closure(const GramLattice& L0) {
    Frame& F = *L0.frame;
    Lat cur = lat_sum(L0.lat, lat_span({F.one()}));
    for (int it = 0;; ++it) {
        if (it > 200) throw Error("NonIntegral", "ring closure does not stabilise");
        auto b = lat_basis(cur);
        std::vector<QVec> g = b;
        for (size_t i = 0; i < b.size(); ++i)
            for (size_t j = 0; j < b.size(); ++j) g.push_back(product(F, b[i], b[j]));
        Lat nxt = lat_span(g);
        if (nxt == cur) break;
        if (nxt.rank() == 4 && nxt.rank() == cur.rank()) {
            // index growth must stay inside an order: traces of the new lattice are integers
            GramLattice t{&F, nxt};
            t.traces();
        }
        cur = nxt;
    }
    return {&F, cur};
}

bool is_closed(const GramLattice& L) {
    Frame& F = *L.frame;
    if (!lat_contains(L.lat, F.one())) return false;
    auto b = lat_basis(L.lat);
    for (auto& x : b)
        for (auto& y : b)
            if (!lat_contains(L.lat, product(F, x, y))) return false;
    return true;
}

bool divisible_in_end(const GramLattice& R, const QVec& y, u64 ell) {
    Frame& F = *R.frame;
    const EndoLab& L = F.lab();
    mpz_class D = den_of(y);
    int a = valuation(D, mpz_class((unsigned long)ell));
    ZVec z = scaled(y, D);
    if (ell == L.p()) return L.is_divisible(F.numerator(z), upow(ell, a + 1));
    mpz_class M = upow(ell, a + 1);
    if (mpz_sizeinbase(M.get_mpz_t(), 2) > 40) throw Error("ExtensionTooLarge", "saturation level too high");
    return mat2::is_zero(F.action(z, M.get_ui()));
}

GramLattice saturate_at(const GramLattice& R0, u64 ell, SaturationLog* log) {
    if (ell == R0.frame->lab().p()) return saturate_at_p(R0);
    if (ell > 50) throw Error("InvalidArgument", "saturation prime above the small-prime bound");
    if (R0.rank() != 4) throw Error("NotRankFour", "saturation needs a rank 4 order");
    GramLattice R = R0;
    mpz_class l((unsigned long)ell);
    for (;;) {
        mpq_class d = R.disc();
        if (valuation(d.get_num(), l) == 0) break;
        auto b = lat_basis(R.lat);
        bool found = false;
        // lines of R / ell R: leading coordinate 1
        for (int lead = 0; lead < 4 && !found; ++lead) {
            u64 count = 1;
            for (int i = lead + 1; i < 4; ++i) count *= ell;
            for (u64 idx = 0; idx < count && !found; ++idx) {
                long c[4] = {0, 0, 0, 0};
                c[lead] = 1;
                u64 t = idx;
                for (int i = lead + 1; i < 4; ++i) {
                    c[i] = (long)(t % ell);
                    t /= ell;
                }
                QVec y{0, 0, 0, 0};
                for (int i = 0; i < 4; ++i)
                    if (c[i])
                        for (int k = 0; k < 4; ++k) y[k] += c[i] * b[i][k];
                if (log) ++log->lines_tested;
                if (!divisible_in_end(R, y, ell)) continue;
                QVec q;
                for (int k = 0; k < 4; ++k) q[k] = y[k] / (long)ell;
                R = ring_closure({R.frame, lat_sum(R.lat, lat_span({q}))});
                if (log) ++log->successes;
                found = true;
            }
        }
        if (!found) throw Error("InternalError", "no index-ell superlattice divides");
    }
    return R;
}

// kernel of T mod p
static std::vector<std::vector<mpz_class>> kernel_mod(ZMat T, const mpz_class& p) {
    size_t n = T.size();
    for (auto& r : T)
        for (auto& x : r) x = ((x % p) + p) % p;
    std::vector<int> pivcol;
    size_t row = 0;
    for (size_t c = 0; c < n && row < n; ++c) {
        size_t piv = row;
        while (piv < n && T[piv][c] == 0) ++piv;
        if (piv == n) continue;
        std::swap(T[piv], T[row]);
        mpz_class inv;
        mpz_invert(inv.get_mpz_t(), T[row][c].get_mpz_t(), p.get_mpz_t());
        for (auto& x : T[row]) x = x * inv % p;
        for (size_t i = 0; i < n; ++i) {
            if (i == row || T[i][c] == 0) continue;
            mpz_class f = T[i][c];
            for (size_t j = 0; j < n; ++j) T[i][j] = (((T[i][j] - f * T[row][j]) % p) + p) % p;
        }
        pivcol.push_back((int)c);
        ++row;
    }
    std::vector<std::vector<mpz_class>> ker;
    for (size_t fc = 0; fc < n; ++fc) {
        if (std::find(pivcol.begin(), pivcol.end(), (int)fc) != pivcol.end()) continue;
        std::vector<mpz_class> v(n, 0);
        v[fc] = 1;
        for (size_t r = 0; r < pivcol.size(); ++r) v[pivcol[r]] = ((-T[r][fc]) % p + p) % p;
        ker.push_back(v);
    }
    return ker;
}

GramLattice saturate_at_p(const GramLattice& R0) {
    if (R0.rank() != 4) throw Error("NotRankFour", "saturation needs a rank 4 order");
    Frame& F = *R0.frame;
    const EndoLab& L = F.lab();
    mpz_class p((unsigned long)L.p());
    GramLattice R = R0;
    for (;;) {
        auto b = lat_basis(R.lat);
        // p-radical: trace-form kernel mod p (p > 4), plus pR
        std::vector<QVec> gens;
        for (auto& x : b) {
            QVec y;
            for (int k = 0; k < 4; ++k) y[k] = x[k] * p;
            gens.push_back(y);
        }
        for (auto& c : kernel_mod(R.traces(), p)) {
            QVec y{0, 0, 0, 0};
            for (int i = 0; i < 4; ++i)
                for (int k = 0; k < 4; ++k) y[k] += c[i] * b[i][k];
            gens.push_back(y);
        }
        Lat I = lat_span(gens);
        auto g = lat_basis(I);
        QMat G(4, std::vector<mpq_class>(4));
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) G[i][j] = g[i][j];
        auto Ginv = zla::inverse(G);
        // x g_k in I for all k  <=>  x . (column j of P_k G^{-1}) in Z
        std::vector<QVec> cols;
        for (int k = 0; k < 4; ++k) {
            QMat P(4, std::vector<mpq_class>(4));
            for (int m = 0; m < 4; ++m) {
                QVec e{0, 0, 0, 0};
                e[m] = 1;
                QVec pr = F.mul(e, g[k]);
                for (int c = 0; c < 4; ++c) P[m][c] = pr[c];
            }
            for (int j = 0; j < 4; ++j) {
                QVec col;
                for (int m = 0; m < 4; ++m) {
                    col[m] = 0;
                    for (int c = 0; c < 4; ++c) col[m] += P[m][c] * (*Ginv)[c][j];
                }
                cols.push_back(col);
            }
        }
        Lat Rn = lat_dual(lat_span(cols));
        if (!lat_subset(R.lat, Rn)) throw Error("InternalError", "idealiser lost the order");
        if (Rn == R.lat) break;
        R = {&F, Rn};
    }
    // geometric check of the new p-denominators
    for (auto& x : lat_basis(R.lat)) {
        mpz_class D = den_of(x);
        int a = valuation(D, p);
        if (a == 0) continue;
        if (!L.is_divisible(F.numerator(scaled(x, D)), upow(L.p(), a)))
            throw Error("DivisionFailed", "p-maximal element is not an endomorphism");
    }
    return R;
}

mpz_class index_in_maximal(const GramLattice& R) {
    if (R.rank() != 4) throw Error("NotRankFour", "index needs rank 4");
    mpq_class d = R.disc();
    if (d.get_den() != 1) throw Error("NonIntegral", "discriminant is not an integer");
    mpz_class s;
    if (!mpz_perfect_square_p(d.get_num_mpz_t())) throw Error("NonIntegral", "discriminant is not a square");
    mpz_sqrt(s.get_mpz_t(), d.get_num_mpz_t());
    mpz_class p((unsigned long)R.frame->lab().p());
    if (s % p != 0) throw Error("NonIntegral", "discriminant not divisible by p^2");
    return s / p;
}

std::vector<EndoRep> realize_basis(const GramLattice& R) {
    std::vector<EndoRep> out;
    for (auto& x : lat_basis(R.lat)) out.push_back(R.frame->realize(x));
    return out;
}

}  // namespace isolab
