#include <numeric>
#include <set>

#include "isolab/spectra.hpp"

namespace isolab {

FunctorKind parse_kind(const std::string& s) {
    if (s == "trivial") return FunctorKind::trivial;
    if (s == "cyc") return FunctorKind::cyc;
    if (s == "endmod") return FunctorKind::endmod;
    if (s == "endmod1") return FunctorKind::endmod1;
    throw Error("InvalidArgument", "unknown functor kind " + s);
}

std::string kind_name(FunctorKind k) {
    switch (k) {
        case FunctorKind::trivial: return "trivial";
        case FunctorKind::cyc: return "cyc";
        case FunctorKind::endmod: return "endmod";
        case FunctorKind::endmod1: return "endmod1";
    }
    return "?";
}

namespace {

u64 crt2(u64 r1, u64 m1, u64 r2, u64 m2) {
    // x = r1 + m1 t, m1 t = r2 - r1 mod m2
    u64 t = (r2 + m2 - r1 % m2) % m2 * invmod_u64(m1 % m2, m2) % m2;
    return r1 + m1 * t;
}

template <class F>
Mat2 by_prime_powers(u64 N, F get) {
    Mat2 r{0, 0, 0, 0};
    u64 m = 1;
    for (auto [q, e] : factor_u64(N)) {
        u64 Q = 1;
        for (int i = 0; i < e; ++i) Q *= q;
        Mat2 x = get(Q);
        r = Mat2{crt2(r.a, m, x.a, Q), crt2(r.b, m, x.b, Q), crt2(r.c, m, x.c, Q), crt2(r.d, m, x.d, Q)};
        m *= Q;
    }
    return r;
}

}  // namespace

Mat2 step_matrix(const TorsionCache& tc, int v, StepRef s, u64 N) {
    if (N == 1) return Mat2{};
    return by_prime_powers(N, [&](u64 Q) { return tc.step(v, s, Q); });
}

Mat2 aut_matrix(const TorsionCache& tc, int v, int e, u64 N) {
    if (N == 1) return Mat2{};
    return by_prime_powers(N, [&](u64 Q) { return tc.aut(v, e, Q); });
}

// ---------------------------------------------------------------- data

namespace {

struct DataOps {
    u64 N;
    FunctorKind kind;

    u64 key(const Mat2& x) const {
        if (kind == FunctorKind::cyc) return x.a * N + x.c;
        if (kind == FunctorKind::trivial) return 0;
        return ((x.a * N + x.b) * N + x.c) * N + x.d;
    }
    // generator of a cyclic subgroup: smallest unit multiple
    Mat2 line(u64 x, u64 y) const {
        Mat2 best{x, 0, y, 0};
        for (u64 u = 1; u < N; ++u) {
            if (gcd_u64(u, N) != 1) continue;
            Mat2 c{x * u % N, 0, y * u % N, 0};
            if (key(c) < key(best)) best = c;
        }
        return best;
    }
    std::vector<Mat2> all() const {
        std::vector<Mat2> out;
        if (kind == FunctorKind::trivial) return {Mat2{}};
        if (kind == FunctorKind::cyc) {
            std::set<u64> seen;
            for (u64 x = 0; x < N; ++x)
                for (u64 y = 0; y < N; ++y) {
                    if (gcd_u64(gcd_u64(x, y), N) != 1) continue;
                    Mat2 l = line(x, y);
                    if (seen.insert(key(l)).second) out.push_back(l);
                }
            return out;
        }
        for (u64 i = 0; i < N * N * N * N; ++i)
            out.push_back(Mat2{i / (N * N * N), i / (N * N) % N, i / N % N, i % N});
        return out;
    }
    // F(phi)(x) for phi with matrix M and degree deg
    Mat2 push(const Mat2& M, u64 deg, const Mat2& x) const {
        switch (kind) {
            case FunctorKind::trivial: return x;
            case FunctorKind::cyc: return line((M.a * x.a + M.b * x.c) % N, (M.c * x.a + M.d * x.c) % N);
            case FunctorKind::endmod: {
                auto inv = mat2::inverse(M, N);
                if (!inv) throw Error("InternalError", "isogeny matrix not invertible mod N");
                return mat2::mul(mat2::mul(M, x, N), mat2::scale(*inv, mpz_class((unsigned long)deg), N), N);
            }
            case FunctorKind::endmod1: {
                auto inv = mat2::inverse(M, N);
                if (!inv) throw Error("InternalError", "isogeny matrix not invertible mod N");
                return mat2::mul(mat2::mul(M, x, N), *inv, N);
            }
        }
        return x;
    }
};

}  // namespace

int ExtraDataGraph::find(int curve, const Mat2& datum) const {
    DataOps ops{N, kind};
    auto it = index.find({curve, ops.key(datum)});
    return it == index.end() ? -1 : it->second;
}

ExtraDataGraph build_graph(const EndoLab& L, const CurveTable* T, u64 N, FunctorKind kind,
                           const std::vector<int>& ells, const GraphOptions& opt) {
    const Atlas& A = L.atlas();
    const TorsionCache& tc = L.torsion();
    const u64 p = A.p();
    if (N == 0 || gcd_u64(N, p) != 1) throw Error("InvalidArgument", "N must be prime to p");
    if (kind == FunctorKind::trivial && N != 1) throw Error("InvalidArgument", "the trivial functor takes N = 1");
    if (kind != FunctorKind::trivial && N < 2) throw Error("InvalidArgument", "N must be >= 2");
    for (int l : ells)
        if (!is_prime_u64((u64)l) || N % (u64)l == 0 || p % (u64)l == 0)
            throw Error("InvalidArgument", "ell must be a prime not dividing Np");
    ExtraDataGraph G;
    G.p = p;
    G.N = N;
    G.kind = kind;
    G.ells = ells;
    DataOps ops{N, kind};
    const bool endmod = kind == FunctorKind::endmod || kind == FunctorKind::endmod1;
    if (endmod) {
        if (!T) throw Error("InvalidArgument", "endmod graphs need the endomorphism table");
        for (int v = 0; v < A.size(); ++v)
            if (!basis_spans_mod(*T, v, N)) throw Error("InternalError", "table basis does not span mod N");
    }
    auto raw = ops.all();
    // orbit representative and stabiliser order under Aut(E)
    auto canon = [&](int v, const Mat2& x) -> std::pair<Mat2, int> {
        int n = A.aut_order(v);
        Mat2 best = x;
        int stab = 0;
        for (int e = 0; e < n; ++e) {
            Mat2 y = x;
            if (kind != FunctorKind::trivial) y = ops.push(aut_matrix(tc, v, e, N), 1, x);
            if (y == x) ++stab;
            if (ops.key(y) < ops.key(best)) best = y;
        }
        return {best, stab};
    };
    for (int v = 0; v < A.size(); ++v) {
        G.raw_data += (int)raw.size();
        for (auto& x : raw) {
            auto [c, stab] = canon(v, x);
            if (!(c == x)) continue;
            if ((long)G.verts.size() >= opt.max_vertices) throw Error("BoundExceeded", "too many vertices");
            G.index[{v, ops.key(x)}] = (int)G.verts.size();
            G.verts.push_back(GraphVertex{v, x, stab});
        }
    }
    for (int l : ells) {
        auto& out = G.out[l];
        out.resize(G.verts.size());
        for (int i = 0; i < G.size(); ++i) {
            const GraphVertex& x = G.verts[i];
            const auto& es = A.edges(x.curve, l);
            for (int idx = 0; idx < (int)es.size(); ++idx) {
                int w = es[idx].to;
                Mat2 y = x.datum;
                if (kind != FunctorKind::trivial) y = ops.push(step_matrix(tc, x.curve, StepRef{l, idx}, N), (u64)l % N, y);
                int j = G.find(w, canon(w, y).first);
                if (j < 0) throw Error("InternalError", "edge target missing");
                out[i].push_back(j);
            }
            if ((int)out[i].size() != l + 1) throw Error("InternalError", "vertex without ell + 1 edges");
        }
    }
    return G;
}

// ---------------------------------------------------------------- operators

Eigen::VectorXd weights(const ExtraDataGraph& G) {
    Eigen::VectorXd mu(G.size());
    for (int i = 0; i < G.size(); ++i) mu[i] = 1.0 / G.verts[i].aut;
    return mu;
}

Eigen::MatrixXd adjacency_op(const ExtraDataGraph& G, int ell) {
    auto it = G.out.find(ell);
    if (it == G.out.end()) throw Error("InvalidArgument", "ell not in the graph");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(G.size(), G.size());
    for (int i = 0; i < G.size(); ++i)
        for (int j : it->second[i]) A(i, j) += 1;
    return A;
}

Eigen::MatrixXd weighted_adjoint(const ExtraDataGraph& G, const Eigen::MatrixXd& A) {
    Eigen::VectorXd mu = weights(G);
    return mu.cwiseInverse().asDiagonal() * A.transpose() * mu.asDiagonal();
}

Eigen::MatrixXd incoming_op(const ExtraDataGraph& G, int ell) { return adjacency_op(G, ell).transpose(); }

OperatorChecks check_operator(const ExtraDataGraph& G, int ell) {
    Eigen::MatrixXd A = adjacency_op(G, ell);
    Eigen::MatrixXd As = weighted_adjoint(G, A);
    Eigen::VectorXd mu = weights(G);
    Eigen::MatrixXd M = mu.asDiagonal();
    OperatorChecks c;
    Eigen::VectorXd one = Eigen::VectorXd::Ones(G.size());
    c.constant_defect = (A * one - (ell + 1) * one).cwiseAbs().maxCoeff();
    c.normality_defect = (A * As - As * A).cwiseAbs().maxCoeff();
    c.incoming_defect = (incoming_op(G, ell) - M * As * M.inverse()).cwiseAbs().maxCoeff();
    c.self_adjoint_defect = (A - As).cwiseAbs().maxCoeff();
    return c;
}

double commutator_norm(const ExtraDataGraph& G, int l1, int l2) {
    Eigen::MatrixXd A = adjacency_op(G, l1), B = adjacency_op(G, l2);
    return (A * B - B * A).norm();
}

bool stationary_exact(const ExtraDataGraph& G, int ell) {
    if (G.kind != FunctorKind::trivial) throw Error("InvalidArgument", "stationary law is stated for curves");
    const auto& out = G.out.at(ell);
    std::vector<mpq_class> f(G.size()), Bf(G.size(), 0);
    mpq_class total = 0;
    for (int i = 0; i < G.size(); ++i) {
        f[i] = mpq_class(24, (unsigned long)((G.p - 1) * (u64)G.verts[i].aut));
        f[i].canonicalize();
        total += f[i];
    }
    if (total != 1) return false;
    // one step of the walk moves mass along outgoing edges: B f = (ell + 1) f
    for (int i = 0; i < G.size(); ++i)
        for (int j : out[i]) Bf[j] += f[i];
    for (int i = 0; i < G.size(); ++i)
        if (Bf[i] != (ell + 1) * f[i]) return false;
    return true;
}

// ---------------------------------------------------------------- components

namespace {

struct Dsu {
    std::vector<int> p;
    explicit Dsu(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
    int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
    void unite(int a, int b) { p[find(a)] = find(b); }
};

std::vector<int> relabel(Dsu& d, int n, int* count) {
    std::map<int, int> ids;
    std::vector<int> out(n);
    for (int i = 0; i < n; ++i) out[i] = ids.emplace(d.find(i), (int)ids.size()).first->second;
    if (count) *count = (int)ids.size();
    return out;
}

std::vector<u64> units(u64 N) {
    if (N == 1) return {0};
    std::vector<u64> u;
    for (u64 d = 1; d < N; ++d)
        if (gcd_u64(d, N) == 1) u.push_back(d);
    return u;
}

}  // namespace

std::vector<int> components(const ExtraDataGraph& G, int* count) {
    Dsu d(G.size());
    for (auto& [l, out] : G.out)
        for (int i = 0; i < G.size(); ++i)
            for (int j : out[i]) d.unite(i, j);
    return relabel(d, G.size(), count);
}

std::vector<int> components1(const ExtraDataGraph& G, int* count) {
    auto U = units(G.N);
    std::map<u64, int> ui;
    for (size_t i = 0; i < U.size(); ++i) ui[U[i]] = (int)i;
    const int k = (int)U.size(), n = G.size();
    Dsu d(n * k);
    for (auto& [l, out] : G.out)
        for (int i = 0; i < n; ++i)
            for (int j : out[i])
                for (int a = 0; a < k; ++a) d.unite(i * k + a, j * k + ui.at(G.N == 1 ? 0 : U[a] * (u64)l % G.N));
    // label x by the cover component of (x, 1)
    Dsu e(n);
    std::map<int, int> first;
    for (int i = 0; i < n; ++i) {
        auto [it, fresh] = first.emplace(d.find(i * k), i);
        if (!fresh) e.unite(i, it->second);
    }
    return relabel(e, n, count);
}

Eigen::MatrixXd deg_projector(const ExtraDataGraph& G, const std::vector<int>& comp1) {
    Eigen::VectorXd mu = weights(G);
    std::map<int, double> W;
    for (int i = 0; i < G.size(); ++i) W[comp1[i]] += mu[i];
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(G.size(), G.size());
    for (int i = 0; i < G.size(); ++i)
        for (int j = 0; j < G.size(); ++j)
            if (comp1[i] == comp1[j]) P(i, j) = mu[j] / W[comp1[i]];
    return P;
}

// ---------------------------------------------------------------- predictions

std::vector<OrbitInfo> predicted_orbits(u64 N, FunctorKind kind) {
    if (N > 7) throw Error("BoundExceeded", "orbit enumeration is for N <= 7");
    DataOps ops{N, kind};
    auto data = ops.all();
    std::vector<Mat2> group;
    if (N == 1) {
        group.push_back(Mat2{});
    } else {
        for (u64 i = 0; i < N * N * N * N; ++i) {
            Mat2 g{i / (N * N * N), i / (N * N) % N, i / N % N, i % N};
            if (gcd_u64(mat2::det(g, N), N) == 1) group.push_back(g);
        }
    }
    // a matrix acts on data with its own determinant as degree
    auto act = [&](const Mat2& g, const Mat2& x) {
        return N == 1 ? x : ops.push(g, mat2::det(g, N), x);
    };
    std::map<u64, int> pos;
    for (size_t i = 0; i < data.size(); ++i) pos[ops.key(data[i])] = (int)i;
    std::vector<int> orbit(data.size(), -1);
    std::vector<OrbitInfo> out;
    for (size_t i = 0; i < data.size(); ++i) {
        if (orbit[i] >= 0) continue;
        OrbitInfo o;
        std::set<u64> dets;
        for (auto& g : group) {
            Mat2 y = act(g, data[i]);
            int j = pos.at(ops.key(y));
            if (orbit[j] < 0) orbit[j] = (int)out.size(), ++o.size;
            if (y == data[i]) dets.insert(N == 1 ? 0 : mat2::det(g, N));
        }
        o.deg_subgroup.assign(dets.begin(), dets.end());
        if ((kind == FunctorKind::endmod || kind == FunctorKind::endmod1) && is_prime_u64(N)) {
            const Mat2& x = data[i];
            o.label = conj_class(IMat{(long)x.a, (long)x.b, (long)x.c, (long)x.d}, (long)N).label();
        } else {
            o.label = "orbit " + std::to_string(out.size());
        }
        out.push_back(o);
    }
    return out;
}

long classified_component_count(u64 N, FunctorKind kind) {
    if (kind == FunctorKind::trivial || kind == FunctorKind::cyc) return 1;
    if (N < 3 || !is_prime_u64(N)) throw Error("InvalidArgument", "class list needs an odd prime N");
    const long l = (long)N;
    // class invariants; scaling by d maps (tr, det, eps) to (d tr, d^2 det, eps):
    // conjugating by det d moves eps by d and the scaling moves it back by d
    std::set<std::tuple<std::string, long, long, long>> labels;
    for (long a = 0; a < l; ++a)
        for (long b = 0; b < l; ++b)
            for (long c = 0; c < l; ++c)
                for (long d = 0; d < l; ++d) {
                    ConjClass k = conj_class(IMat{a, b, c, d}, l);
                    if (kind == FunctorKind::endmod1) {
                        labels.insert({k.kind, k.tr, k.det, 0});
                        continue;
                    }
                    std::tuple<std::string, long, long, long> best{k.kind, k.tr, k.det, k.eps};
                    for (long s = 1; s < l; ++s) {
                        std::tuple<std::string, long, long, long> t{k.kind, k.tr * s % l, k.det * s % l * s % l, k.eps};
                        best = std::min(best, t);
                    }
                    labels.insert(best);
                }
    return (long)labels.size();
}

}  // namespace isolab
