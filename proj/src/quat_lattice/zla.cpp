#include "isolab/quat.hpp"

namespace isolab {
namespace zla {

ZMat hnf(const ZMat& A0, ZMat* U) {
    ZMat A = A0;
    size_t m = A.size();
    size_t n = m ? A[0].size() : 0;
    ZMat T;
    if (U) {
        T.assign(m, ZVec(m, 0));
        for (size_t i = 0; i < m; ++i) T[i][i] = 1;
    }
    auto comb = [&](ZMat& X, size_t r, size_t i, const mpz_class& s, const mpz_class& t, const mpz_class& u,
                    const mpz_class& w) {
        for (size_t c = 0; c < X[r].size(); ++c) {
            mpz_class x = s * X[r][c] + t * X[i][c];
            mpz_class y = u * X[i][c] - w * X[r][c];
            X[r][c] = x;
            X[i][c] = y;
        }
    };
    size_t r = 0;
    for (size_t col = 0; col < n && r < m; ++col) {
        for (size_t i = r + 1; i < m; ++i) {
            if (A[i][col] == 0) continue;
            mpz_class g, s, t;
            mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), A[r][col].get_mpz_t(), A[i][col].get_mpz_t());
            mpz_class u = A[r][col] / g, w = A[i][col] / g;
            comb(A, r, i, s, t, u, w);
            if (U) comb(T, r, i, s, t, u, w);
        }
        if (A[r][col] == 0) continue;
        if (A[r][col] < 0) {
            for (auto& x : A[r]) x = -x;
            if (U)
                for (auto& x : T[r]) x = -x;
        }
        for (size_t i = 0; i < r; ++i) {
            mpz_class q;
            mpz_fdiv_q(q.get_mpz_t(), A[i][col].get_mpz_t(), A[r][col].get_mpz_t());
            if (q == 0) continue;
            for (size_t c = 0; c < n; ++c) A[i][c] -= q * A[r][c];
            if (U)
                for (size_t c = 0; c < m; ++c) T[i][c] -= q * T[r][c];
        }
        ++r;
    }
    A.resize(r);
    if (U) *U = T;
    return A;
}

mpq_class det(QMat A) {
    size_t n = A.size();
    mpq_class d = 1;
    for (size_t c = 0; c < n; ++c) {
        size_t piv = c;
        while (piv < n && A[piv][c] == 0) ++piv;
        if (piv == n) return 0;
        if (piv != c) {
            std::swap(A[piv], A[c]);
            d = -d;
        }
        d *= A[c][c];
        for (size_t i = c + 1; i < n; ++i) {
            if (A[i][c] == 0) continue;
            mpq_class f = A[i][c] / A[c][c];
            for (size_t j = c; j < n; ++j) A[i][j] -= f * A[c][j];
        }
    }
    return d;
}

std::optional<QMat> inverse(QMat A) {
    size_t n = A.size();
    QMat I(n, std::vector<mpq_class>(n, 0));
    for (size_t i = 0; i < n; ++i) I[i][i] = 1;
    for (size_t c = 0; c < n; ++c) {
        size_t piv = c;
        while (piv < n && A[piv][c] == 0) ++piv;
        if (piv == n) return std::nullopt;
        std::swap(A[piv], A[c]);
        std::swap(I[piv], I[c]);
        mpq_class inv = 1 / A[c][c];
        for (size_t j = 0; j < n; ++j) {
            A[c][j] *= inv;
            I[c][j] *= inv;
        }
        for (size_t i = 0; i < n; ++i) {
            if (i == c || A[i][c] == 0) continue;
            mpq_class f = A[i][c];
            for (size_t j = 0; j < n; ++j) {
                A[i][j] -= f * A[c][j];
                I[i][j] -= f * I[c][j];
            }
        }
    }
    return I;
}

std::optional<std::vector<mpq_class>> solve(QMat A, std::vector<mpq_class> b) {
    auto inv = inverse(std::move(A));
    if (!inv) return std::nullopt;
    std::vector<mpq_class> x(b.size(), 0);
    for (size_t i = 0; i < b.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) x[i] += (*inv)[i][j] * b[j];
    return x;
}

ZMat lll(ZMat B, const QMat& G) {
    size_t m = B.size();
    if (m < 2) return B;
    size_t n = B[0].size();
    auto ip = [&](const ZVec& x, const ZVec& y) {
        mpq_class s = 0;
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j)
                if (x[i] != 0 && y[j] != 0) s += G[i][j] * x[i] * y[j];
        return s;
    };
    QMat mu;
    std::vector<mpq_class> Bn;
    auto gs = [&] {
        mu.assign(m, std::vector<mpq_class>(m, 0));
        Bn.assign(m, 0);
        for (size_t i = 0; i < m; ++i) {
            Bn[i] = ip(B[i], B[i]);
            for (size_t j = 0; j < i; ++j) {
                mpq_class s = ip(B[i], B[j]);
                for (size_t k = 0; k < j; ++k) s -= mu[j][k] * mu[i][k] * Bn[k];
                mu[i][j] = s / Bn[j];
                Bn[i] -= mu[i][j] * mu[i][j] * Bn[j];
            }
        }
    };
    gs();
    const mpq_class delta(3, 4), half(1, 2);
    size_t k = 1;
    while (k < m) {
        for (size_t jj = k; jj-- > 0;) {
            if (abs(mu[k][jj]) > half) {
                mpz_class q;
                mpq_class x = mu[k][jj] + half;
                mpz_fdiv_q(q.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
                for (size_t c = 0; c < n; ++c) B[k][c] -= q * B[jj][c];
                gs();
            }
        }
        if (Bn[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * Bn[k - 1]) {
            ++k;
        } else {
            std::swap(B[k], B[k - 1]);
            gs();
            k = std::max<size_t>(k - 1, 1);
        }
    }
    return B;
}

}  // namespace zla

// ---------------------------------------------------------------- lattices

static mpz_class den_of(const QVec& x) {
    mpz_class d = 1;
    for (auto& c : x) mpz_lcm(d.get_mpz_t(), d.get_mpz_t(), c.get_den_mpz_t());
    return d;
}

QVec Lat::row(int i) const {
    QVec x;
    for (int c = 0; c < 4; ++c) {
        x[c] = mpq_class(rows[i][c], den);
        x[c].canonicalize();
    }
    return x;
}

Lat lat_span(const std::vector<QVec>& gens) {
    mpz_class d = 1;
    for (auto& g : gens) mpz_lcm(d.get_mpz_t(), d.get_mpz_t(), den_of(g).get_mpz_t());
    ZMat A;
    for (auto& g : gens) {
        ZVec r(4);
        bool nz = false;
        for (int c = 0; c < 4; ++c) {
            mpq_class v = g[c] * d;
            r[c] = v.get_num();
            nz |= r[c] != 0;
        }
        if (nz) A.push_back(r);
    }
    Lat L;
    L.rows = zla::hnf(A);
    mpz_class g = d;
    for (auto& r : L.rows)
        for (auto& x : r) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_mpz_t());
    L.den = d / g;
    for (auto& r : L.rows)
        for (auto& x : r) x /= g;
    return L;
}

std::vector<QVec> lat_basis(const Lat& L) {
    std::vector<QVec> out;
    for (int i = 0; i < L.rank(); ++i) out.push_back(L.row(i));
    return out;
}

Lat lat_sum(const Lat& a, const Lat& b) {
    auto g = lat_basis(a);
    for (auto& x : lat_basis(b)) g.push_back(x);
    return lat_span(g);
}

bool lat_contains(const Lat& L, const QVec& x) {
    ZVec r(4);
    for (int c = 0; c < 4; ++c) {
        mpq_class v = x[c] * L.den;
        if (v.get_den() != 1) return false;
        r[c] = v.get_num();
    }
    for (auto& row : L.rows) {
        int pc = 0;
        while (row[pc] == 0) ++pc;
        if (r[pc] % row[pc] != 0) return false;
        mpz_class q = r[pc] / row[pc];
        for (int c = 0; c < 4; ++c) r[c] -= q * row[c];
    }
    for (auto& v : r)
        if (v != 0) return false;
    return true;
}

bool lat_subset(const Lat& a, const Lat& b) {
    for (int i = 0; i < a.rank(); ++i)
        if (!lat_contains(b, a.row(i))) return false;
    return true;
}

mpz_class lat_index(const Lat& a, const Lat& b) {
    if (a.rank() != b.rank()) throw Error("InvalidArgument", "index needs equal ranks");
    mpq_class r = 1;
    for (int i = 0; i < a.rank(); ++i) {
        int pa = 0, pb = 0;
        while (a.rows[i][pa] == 0) ++pa;
        while (b.rows[i][pb] == 0) ++pb;
        r *= mpq_class(a.rows[i][pa], a.den) / mpq_class(b.rows[i][pb], b.den);
    }
    r.canonicalize();
    if (r.get_den() != 1) throw Error("InvalidArgument", "not a sublattice");
    return r.get_num();
}

Lat lat_dual(const Lat& L) {
    if (L.rank() != 4) throw Error("NotRankFour", "dual of a degenerate lattice");
    QMat H(4, std::vector<mpq_class>(4));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) H[i][j] = mpq_class(L.rows[i][j], L.den);
    auto inv = zla::inverse(H);
    std::vector<QVec> g(4);
    // rows of H^{-T} are the columns of H^{-1}
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            g[i][j] = (*inv)[j][i];
            g[i][j].canonicalize();
        }
    return lat_span(g);
}

}  // namespace isolab
