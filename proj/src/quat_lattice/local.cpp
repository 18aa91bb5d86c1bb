#include <numeric>
#include <set>

#include "isolab/quat.hpp"

namespace isolab {

namespace {

long md(long x, long m) {
    x %= m;
    return x < 0 ? x + m : x;
}

long vl(long x, long ell, int e) {
    if (x == 0) return e;
    int v = 0;
    while (x % ell == 0 && v < e) {
        x /= ell;
        ++v;
    }
    return v;
}

long ipow(long b, int e) {
    long r = 1;
    while (e-- > 0) r *= b;
    return r;
}

long inv_mod(long a, long m) {
    long g = m, x = 0, x1 = 1, a1 = md(a, m);
    while (a1) {
        long q = g / a1;
        std::tie(g, a1) = std::make_tuple(a1, g - q * a1);
        std::tie(x, x1) = std::make_tuple(x1, x - q * x1);
    }
    return md(x, m);
}

bool is_square(long x, long ell) {
    x = md(x, ell);
    if (x == 0) return true;
    long r = 1, b = x, e = (ell - 1) / 2;
    while (e) {
        if (e & 1) r = r * b % ell;
        b = b * b % ell;
        e >>= 1;
    }
    return r == 1;
}

long non_residue(long ell) {
    for (long x = 2;; ++x)
        if (!is_square(x, ell)) return x;
}

IMat mul(const IMat& x, const IMat& y, long m) {
    return {md(x.a * y.a + x.b * y.c, m), md(x.a * y.b + x.b * y.d, m), md(x.c * y.a + x.d * y.c, m),
            md(x.c * y.b + x.d * y.d, m)};
}

IMat conjugate(const IMat& g, const IMat& A, long m) {
    long di = inv_mod(g.a * g.d - g.b * g.c, m);
    IMat gi{md(g.d * di, m), md(-g.b * di, m), md(-g.c * di, m), md(g.a * di, m)};
    return mul(mul(g, A, m), gi, m);
}

// M_2 / scalars, ell odd: A -> (b, c, a - d)
using Q3 = std::array<long, 3>;

Q3 quot(const IMat& A, long m) { return {md(A.b, m), md(A.c, m), md(A.a - A.d, m)}; }
IMat lift(const Q3& x) { return {x[2], x[0], x[1], 0}; }

long q_index(const Q3& x, long m) { return (x[0] * m + x[1]) * m + x[2]; }
Q3 q_of(long i, long m) { return {i / (m * m), (i / m) % m, i % m}; }

std::vector<IMat> group(long m, bool special) {
    std::vector<IMat> g;
    for (long a = 0; a < m; ++a)
        for (long b = 0; b < m; ++b)
            for (long c = 0; c < m; ++c)
                for (long d = 0; d < m; ++d) {
                    long det = md(a * d - b * c, m);
                    if (special ? det == 1 : std::gcd(det, m) == 1) g.push_back({a, b, c, d});
                }
    return g;
}

// orbits of nonzero points of the quotient under conjugation
std::vector<std::vector<long>> quotient_orbits(long m, const std::vector<IMat>& G, bool level0_only, long ell) {
    long n = m * m * m;
    std::vector<int> seen(n, 0);
    std::vector<std::vector<long>> out;
    for (long i = 1; i < n; ++i) {
        if (seen[i]) continue;
        Q3 x = q_of(i, m);
        if (level0_only && x[0] % ell == 0 && x[1] % ell == 0 && x[2] % ell == 0) continue;
        std::set<long> orb;
        IMat A = lift(x);
        for (auto& g : G) orb.insert(q_index(quot(conjugate(g, A, m), m), m));
        for (long j : orb) seen[j] = 1;
        out.emplace_back(orb.begin(), orb.end());
    }
    return out;
}

long det3(const Q3& x, const Q3& y, const Q3& z, long ell) {
    long d = x[0] * (y[1] * z[2] - y[2] * z[1]) - x[1] * (y[0] * z[2] - y[2] * z[0]) + x[2] * (y[0] * z[1] - y[1] * z[0]);
    return md(d, ell);
}

bool independent2(const Q3& x, const Q3& y, long ell) {
    return md(x[0] * y[1] - x[1] * y[0], ell) || md(x[0] * y[2] - x[2] * y[0], ell) ||
           md(x[1] * y[2] - x[2] * y[1], ell);
}

// size exponent (base ell) of the Z/ell^e-module spanned by the rows
int module_log_size(std::vector<Q3> rows, long ell, int e) {
    long m = ipow(ell, e);
    int total = 0;
    std::array<bool, 3> used_col{false, false, false};
    std::vector<bool> used_row(rows.size(), false);
    for (;;) {
        int br = -1, bc = -1;
        long bv = e;
        for (size_t r = 0; r < rows.size(); ++r) {
            if (used_row[r]) continue;
            for (int c = 0; c < 3; ++c) {
                if (used_col[c]) continue;
                long v = vl(md(rows[r][c], m), ell, e);
                if (v < bv) {
                    bv = v;
                    br = (int)r;
                    bc = c;
                }
            }
        }
        if (br < 0) break;
        total += e - (int)bv;
        used_row[br] = true;
        used_col[bc] = true;
        long pv = ipow(ell, (int)bv);
        long unit_inv = inv_mod(md(rows[br][bc], m) / pv, m);
        for (size_t r = 0; r < rows.size(); ++r) {
            if (used_row[r]) continue;
            long f = md(rows[r][bc], m) / pv * unit_inv % m;
            for (int c = 0; c < 3; ++c) rows[r][c] = md(rows[r][c] - f * rows[br][c], m);
        }
    }
    return total;
}

}  // namespace

int level_at(const IMat& A, long ell, int e) {
    long m = ipow(ell, e);
    long v = e;
    v = std::min(v, vl(md(A.b, m), ell, e));
    v = std::min(v, vl(md(A.c, m), ell, e));
    v = std::min(v, vl(md(A.a - A.d, m), ell, e));
    return (int)v;
}

int level_at(const EndoLab& L, const EndoRep& x, u64 ell, int e) {
    if (ell == L.p()) throw Error("InvalidArgument", "level is defined away from p");
    long m = ipow((long)ell, e);
    Mat2 A = L.action(x, (u64)m);
    return level_at(IMat{(long)A.a, (long)A.b, (long)A.c, (long)A.d}, (long)ell, e);
}

bool is_N_reduced(const EndoLab& L, const EndoRep& x, u64 N) {
    if (N % L.p() == 0) throw Error("InvalidArgument", "N must be prime to p");
    Mat2 A = L.action(x, N);
    return !(A.b == 0 && A.c == 0 && A.a == A.d);
}

std::string ConjClass::gl_label() const {
    return kind + "(" + std::to_string(tr) + "," + std::to_string(det) + ")";
}

std::string ConjClass::label() const {
    if (kind != "nonsemisimple") return gl_label();
    return gl_label() + "/" + std::to_string(eps);
}

ConjClass conj_class(const IMat& A0, long ell) {
    IMat A{md(A0.a, ell), md(A0.b, ell), md(A0.c, ell), md(A0.d, ell)};
    ConjClass k;
    k.tr = md(A.a + A.d, ell);
    k.det = md(A.a * A.d - A.b * A.c, ell);
    if (A.b == 0 && A.c == 0 && A.a == A.d) {
        k.kind = "homothety";
        return k;
    }
    long disc = md(k.tr * k.tr - 4 * k.det, ell);
    if (disc != 0) {
        k.kind = is_square(disc, ell) ? "split" : "nonsplit";
        return k;
    }
    k.kind = "nonsemisimple";
    long lam = k.tr * inv_mod(2, ell) % ell;
    IMat Nm{md(A.a - lam, ell), A.b, A.c, md(A.d - lam, ell)};
    // v outside ker N; eps = det[Nv | v] up to squares
    long v0 = 1, v1 = 0;
    if (Nm.a == 0 && Nm.c == 0) v0 = 0, v1 = 1;
    long n0 = md(Nm.a * v0 + Nm.b * v1, ell), n1 = md(Nm.c * v0 + Nm.d * v1, ell);
    long d = md(n0 * v1 - n1 * v0, ell);
    k.eps = is_square(d, ell) ? 1 : non_residue(ell);
    return k;
}

SubspaceReport verify_subspace_lemma(long ell) {
    if (ell < 3 || ell % 2 == 0 || ell > 13) throw Error("InvalidArgument", "odd ell up to 13");
    auto G = group(ell, true);
    auto orbits = quotient_orbits(ell, G, false, ell);
    // proper nonzero subspaces: lines through a point, planes as kernels of a functional
    std::vector<std::vector<char>> subs;
    long n = ell * ell * ell;
    for (long i = 1; i < n; ++i) {
        Q3 x = q_of(i, ell);
        long lead = x[0] ? x[0] : (x[1] ? x[1] : x[2]);
        if (lead != 1) continue;
        std::vector<char> line(n, 0), plane(n, 0);
        for (long t = 0; t < ell; ++t) line[q_index({x[0] * t % ell, x[1] * t % ell, x[2] * t % ell}, ell)] = 1;
        for (long j = 0; j < n; ++j) {
            Q3 y = q_of(j, ell);
            if (md(x[0] * y[0] + x[1] * y[1] + x[2] * y[2], ell) == 0) plane[j] = 1;
        }
        subs.push_back(std::move(line));
        subs.push_back(std::move(plane));
    }
    SubspaceReport r;
    r.ell = ell;
    r.orbits = (long)orbits.size();
    r.subspaces = (long)subs.size();
    r.max_ratio = 0;
    for (auto& o : orbits)
        for (auto& V : subs) {
            long hit = 0;
            for (long j : o) hit += V[j];
            mpq_class q(hit, (long)o.size());
            q.canonicalize();
            if (q > r.max_ratio) r.max_ratio = q;
        }
    return r;
}

namespace {

// probability that one uniform draw from each orbit gives a basis
mpq_class triple_probability(const std::vector<long>& A, const std::vector<long>& B, const std::vector<long>& C,
                             long ell) {
    mpz_class good = 0;
    for (long i : A) {
        Q3 x = q_of(i, ell);
        for (long j : B) {
            Q3 y = q_of(j, ell);
            if (!independent2(x, y, ell)) continue;
            long c = 0;
            for (long k : C)
                if (det3(x, y, q_of(k, ell), ell)) ++c;
            good += c;
        }
    }
    mpq_class r(good, mpz_class((unsigned long)(A.size() * B.size() * C.size())));
    r.canonicalize();
    return r;
}

}  // namespace

mpq_class basis_probability_single_orbit(long ell, const IMat& rep) {
    auto G = group(ell, true);
    std::set<long> orb;
    Q3 x = quot(rep, ell);
    if (x == Q3{0, 0, 0}) throw Error("InvalidArgument", "scalar representative");
    for (auto& g : G) orb.insert(q_index(quot(conjugate(g, lift(x), ell), ell), ell));
    std::vector<long> o(orb.begin(), orb.end());
    return triple_probability(o, o, o, ell);
}

BasisReport verify_basis_probability(long ell, long trials, u64 seed) {
    if (ell < 3 || ell % 2 == 0 || ell > 13) throw Error("InvalidArgument", "odd ell up to 13");
    auto G = group(ell, true);
    auto orbits = quotient_orbits(ell, G, false, ell);
    BasisReport r;
    r.ell = ell;
    if (trials == 0) {
        // any invariant law is a mixture of orbit laws; the triple probability
        // is multilinear in the weights, so its minimum sits on an orbit triple
        r.exhaustive = true;
        r.exact_min = 1;
        for (size_t a = 0; a < orbits.size(); ++a)
            for (size_t b = 0; b < orbits.size(); ++b)
                for (size_t c = 0; c < orbits.size(); ++c) {
                    auto q = triple_probability(orbits[a], orbits[b], orbits[c], ell);
                    if (q < r.exact_min) r.exact_min = q;
                }
        r.probability = r.exact_min.get_d();
        return r;
    }
    // random mixture of orbits: weights drawn once, then triples sampled
    Rng rng(seed);
    std::vector<double> w(orbits.size());
    double tot = 0;
    for (auto& x : w) tot += (x = (double)(rng.below(1000) + 1) * (rng.below(4) == 0 ? 0 : 1));
    if (tot == 0) w[0] = tot = 1;
    auto draw = [&]() {
        double u = (double)rng.below(1u << 30) / (double)(1u << 30) * tot;
        size_t i = 0;
        while (i + 1 < w.size() && u >= w[i]) u -= w[i++];
        while (w[i] == 0) i = (i + 1) % w.size();
        auto& o = orbits[i];
        return q_of(o[rng.below(o.size())], ell);
    };
    long good = 0;
    for (long t = 0; t < trials; ++t) {
        Q3 x = draw(), y = draw(), z = draw();
        if (det3(x, y, z, ell)) ++good;
    }
    r.trials = trials;
    r.probability = (double)good / (double)trials;
    r.sigma = std::sqrt(r.probability * (1 - r.probability) / (double)trials);
    return r;
}

NakayamaReport verify_nakayama(long ell, int e, int a) {
    if (a < 0 || a >= e) throw Error("InvalidArgument", "need 0 <= a < e");
    long m = ipow(ell, e);
    long ma = ipow(ell, e - a);  // beta only matters modulo ell^(e-a)
    NakayamaReport r;
    r.ell = ell;
    r.e = e;
    // alpha_i = t_i + ell^a beta_i with beta_i non-scalar mod ell; the module
    // <1, alpha_1, alpha_2, alpha_3> modulo scalars is ell^a <beta_i>
    std::vector<long> betas;
    for (long i = 0; i < ma * ma * ma; ++i) {
        Q3 x = q_of(i, ma);
        if (x[0] % ell || x[1] % ell || x[2] % ell) betas.push_back(i);
    }
    // conjugation preserves both sides, so the first element runs over orbit representatives
    std::vector<long> firsts;
    if (ma > ell) {
        auto orbits = quotient_orbits(ma, group(ma, false), true, ell);
        for (auto& o : orbits) firsts.push_back(o.front());
    } else {
        firsts = betas;
    }
    long pa = ipow(ell, a);
    int full = 3 * (e - a);
    for (long f : firsts) {
        Q3 x = q_of(f, ma);
        for (long j : betas) {
            Q3 y = q_of(j, ma);
            for (long k : betas) {
                Q3 z = q_of(k, ma);
                std::vector<Q3> rows;
                for (auto& v : {x, y, z}) rows.push_back({v[0] * pa % m, v[1] * pa % m, v[2] * pa % m});
                bool gen = module_log_size(rows, ell, e) == full;
                bool basis = det3(x, y, z, ell) != 0;
                ++r.triples;
                if (gen) ++r.generating;
                if (gen != basis) ++r.mismatches;
            }
        }
    }
    return r;
}

}  // namespace isolab
