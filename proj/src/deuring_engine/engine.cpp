#include <filesystem>
#include <fstream>

#include "isolab/engine.hpp"

namespace isolab {

namespace {

mpz_class den_of(const QVec& x) {
    mpz_class d = 1;
    for (auto& c : x) mpz_lcm(d.get_mpz_t(), d.get_mpz_t(), c.get_den_mpz_t());
    return d;
}

int default_len(u64 p) {
    int k = 0;
    while ((u64(1) << k) < p) ++k;
    return k + 2;
}

QVec lincomb_q(const std::vector<mpz_class>& c, const std::vector<QVec>& b) {
    QVec r{0, 0, 0, 0};
    for (size_t i = 0; i < c.size(); ++i)
        if (c[i] != 0)
            for (int k = 0; k < 4; ++k) r[k] += c[i] * b[i][k];
    return r;
}

mpz_class floor_div(const mpq_class& x) {
    mpz_class q;
    mpz_fdiv_q(q.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    return q;
}

// Basis of the lattice O with 1 first and the rest LLL-reduced for the
// norm form on O/Z, traces shifted into {0, 1}.
std::vector<QVec> nice_basis(const Frame& F, const Lat& O) {
    auto e = lat_basis(O);
    QMat B(4, std::vector<mpq_class>(4));
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) B[i][k] = e[i][k];
    auto Bi = zla::inverse(B);
    QVec one = F.one();
    ZMat c(4, ZVec(1));
    for (int i = 0; i < 4; ++i) {
        mpq_class s = 0;
        for (int k = 0; k < 4; ++k) s += one[k] * (*Bi)[k][i];
        if (s.get_den() != 1) throw Error("InternalError", "1 is not in the order");
        c[i][0] = s.get_num();
    }
    ZMat U;
    zla::hnf(c, &U);
    QMat Uq(4, std::vector<mpq_class>(4));
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) Uq[i][k] = U[i][k];
    auto Ui = zla::inverse(Uq);
    // rows of (U^{-1})^T: the first one is the coordinate vector of 1
    std::vector<QVec> nb(4);
    for (int r = 0; r < 4; ++r) {
        std::vector<mpz_class> coef(4);
        for (int i = 0; i < 4; ++i) coef[i] = (*Ui)[i][r].get_num();
        nb[r] = lincomb_q(coef, e);
    }
    if (nb[0] != one) {
        for (auto& x : nb[0]) x = -x;
        if (nb[0] != one) throw Error("InternalError", "unimodular completion failed");
    }
    // norm form on the complement of 1: pair(x, y) - trd(x) trd(y) / 2
    QMat G(3, std::vector<mpq_class>(3));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            G[i][j] = F.pair(nb[i + 1], nb[j + 1]) - F.trd(nb[i + 1]) * F.trd(nb[j + 1]) / 2;
    ZMat I3{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    ZMat T = zla::lll(I3, G);
    std::vector<QVec> out{one};
    for (int i = 0; i < 3; ++i) {
        QVec x = lincomb_q(T[i], {nb[1], nb[2], nb[3]});
        mpz_class s = floor_div(F.trd(x) / 2);
        for (int k = 0; k < 4; ++k) x[k] -= s * one[k];
        out.push_back(x);
    }
    return out;
}

// nearest-plane reduction of c against the relation lattice K under the form W
void babai(std::vector<mpz_class>& c, const ZMat& K, const QMat& W) {
    size_t m = K.size(), n = c.size();
    if (m == 0) return;
    auto ip = [&](const std::vector<mpq_class>& x, const std::vector<mpq_class>& y) {
        mpq_class s = 0;
        for (size_t i = 0; i < n; ++i)
            if (x[i] != 0 && y[i] != 0) s += W[i][i] * x[i] * y[i];
        return s;
    };
    std::vector<std::vector<mpq_class>> gs(m, std::vector<mpq_class>(n));
    for (size_t i = 0; i < m; ++i) {
        for (size_t k = 0; k < n; ++k) gs[i][k] = K[i][k];
        for (size_t j = 0; j < i; ++j) {
            mpq_class mu = ip(gs[i], gs[j]) / ip(gs[j], gs[j]);
            for (size_t k = 0; k < n; ++k) gs[i][k] -= mu * gs[j][k];
        }
    }
    for (size_t j = m; j-- > 0;) {
        std::vector<mpq_class> cq(n);
        for (size_t k = 0; k < n; ++k) cq[k] = c[k];
        mpq_class t = ip(cq, gs[j]) / ip(gs[j], gs[j]) + mpq_class(1, 2);
        mpz_class r = floor_div(t);
        if (r != 0)
            for (size_t k = 0; k < n; ++k) c[k] -= r * K[j][k];
    }
}

// b as integer combinations of the kept atoms (coordinates `a`, degrees `deg`),
// kept short for the degree form
std::vector<std::vector<mpz_class>> express(const std::vector<QVec>& a, const std::vector<mpz_class>& deg,
                                            const std::vector<QVec>& b) {
    mpz_class D = 1;
    for (auto& x : a) mpz_lcm(D.get_mpz_t(), D.get_mpz_t(), den_of(x).get_mpz_t());
    ZMat A;
    for (auto& x : a) {
        ZVec r(4);
        for (int k = 0; k < 4; ++k) r[k] = mpq_class(x[k] * D).get_num();
        A.push_back(r);
    }
    ZMat U;
    ZMat H = zla::hnf(A, &U);
    if (H.size() != 4) throw Error("InternalError", "atoms do not have full rank");
    QMat Hq(4, std::vector<mpq_class>(4));
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) Hq[i][k] = H[i][k];
    auto Hi = zla::inverse(Hq);
    std::vector<std::vector<mpz_class>> out;
    for (auto& t : b) {
        std::vector<mpz_class> c(a.size(), 0);
        for (int i = 0; i < 4; ++i) {
            mpq_class y = 0;
            for (int k = 0; k < 4; ++k) y += t[k] * D * (*Hi)[k][i];
            if (y.get_den() != 1) throw Error("InternalError", "basis element outside the atom span");
            for (size_t m = 0; m < a.size(); ++m) c[m] += y.get_num() * U[i][m];
        }
        out.push_back(c);
    }
    // relations among the atoms, LLL-reduced, then nearest plane
    size_t n = a.size();
    QMat W(n, std::vector<mpq_class>(n, 0));
    for (size_t i = 0; i < n; ++i) W[i][i] = deg[i];
    ZMat K(U.begin() + 4, U.end());
    if (!K.empty()) K = zla::lll(K, W);
    for (auto& c : out) babai(c, K, W);
    return out;
}

}  // namespace

EndEntry compute_endring_bruteforce(const EndoLab& L, int v, const EngineOptions& opt, EngineLog* log) {
    const Atlas& G = L.atlas();
    u64 p = L.p();
    EngineLog local;
    if (!log) log = &local;
    int k = opt.walk_len > 0 ? opt.walk_len : default_len(p);
    CollisionHarvester H(G, v, 2, k, opt.seed * 1000003 + (u64)v);
    Frame F(L, v);

    std::vector<RWalk> atoms;
    std::vector<QVec> ac;
    Rng rng(opt.seed + 77 * (u64)v);
    auto harvest = [&]() {
        if ((long)atoms.size() >= opt.max_atoms) throw Error("Timeout", "atom budget exhausted");
        RWalk w;
        if (atoms.size() >= 4 && rng.below(2) == 0) {
            // product of two earlier atoms: still a closed walk
            w = concat(G, atoms[rng.below(atoms.size())], atoms[rng.below(atoms.size())]);
            if (is_scalar_walk(w)) w = H.next().closed;
        } else {
            w = H.next().closed;
        }
        atoms.push_back(w);
        ac.push_back(F.coords(L.walk(w)));
        ++log->atoms;
        log->samples = H.samples();
        return ac.back();
    };

    // Z-span of closed walks and their products; a full-rank sublattice S of
    // End(E) has disc p^2 [End : S]^2, so disc = p^2 certifies S = End(E)
    mpq_class target = mpq_class(mpz_class((unsigned long)p) * p);
    std::vector<RWalk> kept{RWalk{v, v, {}, 0, 1}};
    std::vector<QVec> kc{F.one()};
    Lat S = lat_span({F.one()});
    for (;;) {
        QVec x = harvest();
        if (lat_contains(S, x)) continue;
        S = lat_sum(S, lat_span({x}));
        kept.push_back(atoms.back());
        kc.push_back(x);
        if (S.rank() < 4) continue;
        mpq_class d = GramLattice{&F, S}.disc();
        if (d.get_den() != 1) throw Error("NonIntegral", "walk span has a fractional discriminant");
        mpz_class r;
        mpz_sqrt(r.get_mpz_t(), d.get_num_mpz_t());
        log->index_trajectory.push_back(mpq_class(r, mpz_class((unsigned long)p)).get_str());
        if (d == target) break;
    }
    GramLattice R{&F, S};
    log->kept = (long)kept.size();

    EndEntry e;
    e.vertex = v;
    e.j = G.K().str(G.j(v));
    e.aut = G.aut_order(v);
    auto b = nice_basis(F, R.lat);
    std::vector<EndoRep> kx;
    std::vector<mpz_class> kd;
    for (auto& w : kept) {
        kx.push_back(L.walk(w));
        kd.push_back(w.core_degree(G) * w.scalar * w.scalar);
    }
    auto combos = express(kc, kd, b);
    for (size_t i = 0; i < b.size(); ++i) {
        if (i == 0) {
            e.basis.push_back(L.scalar(v, 1));
            continue;
        }
        std::vector<mpz_class> c;
        std::vector<EndoRep> xs;
        for (size_t m = 0; m < kx.size(); ++m)
            if (combos[i][m] != 0) c.push_back(combos[i][m]), xs.push_back(kx[m]);
        EndoRep y = L.lincomb(c, xs);
        if (L.trace(y) != F.trd(b[i]) || L.degree(y) != F.nrd(b[i]))
            throw Error("InternalError", "basis element disagrees with its coordinates");
        e.basis.push_back(y);
    }
    GramLattice O{&F, lat_span(b)};
    QMat Bm(4, std::vector<mpq_class>(4));
    for (int i = 0; i < 4; ++i)
        for (int c = 0; c < 4; ++c) Bm[i][c] = b[i][c];
    auto Bi = zla::inverse(Bm);
    e.gram.assign(4, ZVec(4));
    e.mult.assign(4, std::vector<ZVec>(4, ZVec(4)));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            mpq_class t = F.trd_mul(b[i], b[j]);
            e.gram[i][j] = t.get_num();
            QVec z = F.mul(b[i], b[j]);
            for (int c = 0; c < 4; ++c) {
                mpq_class s = 0;
                for (int m = 0; m < 4; ++m) s += z[m] * (*Bi)[m][c];
                if (s.get_den() != 1) throw Error("InternalError", "multiplication table is not integral");
                e.mult[i][j][c] = s.get_num();
            }
        }
    return e;
}

// ---------------------------------------------------------------- table

CurveTable::CurveTable(const EndoLab& L, std::vector<EndEntry> entries) : L_(&L), entries_(std::move(entries)) {}

const EndEntry& CurveTable::entry(int v) const {
    if (v < 0 || v >= size()) throw Error("UnknownCurve", "vertex " + std::to_string(v));
    return entries_[v];
}

Frame& CurveTable::frame(int v) const {
    auto it = frames_.find(v);
    if (it != frames_.end()) return *it->second;
    auto F = std::make_unique<Frame>(*L_, v);
    const EndEntry& e = entry(v);
    for (int i = 1; i < 4; ++i) {
        QVec x = F->coords(e.basis[i]);
        if (F->rank() != i + 1) throw Error("InternalError", "table basis is dependent");
        (void)x;
    }
    return *frames_.emplace(v, std::move(F)).first->second;
}

nlohmann::json CurveTable::to_json() const {
    const Atlas& G = L_->atlas();
    nlohmann::json j;
    j["p"] = p();
    j["version"] = kTableVersion;
    j["entries"] = nlohmann::json::array();
    auto mat = [](const ZMat& m) {
        nlohmann::json a = nlohmann::json::array();
        for (auto& r : m) {
            nlohmann::json row = nlohmann::json::array();
            for (auto& x : r) row.push_back(x.get_str());
            a.push_back(row);
        }
        return a;
    };
    for (auto& e : entries_) {
        nlohmann::json x;
        x["vertex"] = e.vertex;
        x["j"] = e.j;
        x["A"] = G.K().str(G.curve(e.vertex).A());
        x["B"] = G.K().str(G.curve(e.vertex).B());
        x["aut"] = e.aut;
        x["denominator_free"] = e.denominator_free;
        x["basis"] = nlohmann::json::array();
        for (auto& b : e.basis) x["basis"].push_back(L_->to_json(b));
        x["gram"] = mat(e.gram);
        nlohmann::json mt = nlohmann::json::array();
        for (auto& row : e.mult) mt.push_back(mat(row));
        x["mult_table"] = mt;
        j["entries"].push_back(x);
    }
    return j;
}

CurveTable CurveTable::from_json(const EndoLab& L, const nlohmann::json& j) {
    const Atlas& G = L.atlas();
    if (j.at("version") != kTableVersion) throw Error("ParseError", "table version mismatch");
    if (j.at("p").get<u64>() != L.p()) throw Error("ParseError", "table for another p");
    auto mat = [](const nlohmann::json& a) {
        ZMat m;
        for (auto& r : a) {
            ZVec row;
            for (auto& x : r) row.push_back(mpz_class(x.get<std::string>()));
            m.push_back(row);
        }
        return m;
    };
    std::vector<EndEntry> es;
    for (auto& x : j.at("entries")) {
        EndEntry e;
        e.vertex = x.at("vertex");
        e.j = x.at("j");
        if (e.vertex >= G.size() || G.K().str(G.j(e.vertex)) != e.j) throw Error("ParseError", "vertex numbering changed");
        e.aut = x.at("aut");
        e.denominator_free = x.at("denominator_free");
        for (auto& b : x.at("basis")) e.basis.push_back(L.from_json(b));
        e.gram = mat(x.at("gram"));
        for (auto& row : x.at("mult_table")) e.mult.push_back(mat(row));
        es.push_back(std::move(e));
    }
    if ((int)es.size() != G.size()) throw Error("ParseError", "table size mismatch");
    return CurveTable(L, std::move(es));
}

CurveTable build_table(const EndoLab& L, const EngineOptions& opt) {
    if (L.p() > 5000) throw Error("BoundExceeded", "ground truth tables are for p <= 5000");
    namespace fs = std::filesystem;
    fs::path path = fs::path(opt.cache_dir) / ("endring_p" + std::to_string(L.p()) + ".json");
    if (opt.use_cache && fs::exists(path)) {
        try {
            std::ifstream in(path);
            return CurveTable::from_json(L, nlohmann::json::parse(in));
        } catch (const std::exception&) {
            // stale or foreign cache: rebuild
        }
    }
    std::vector<EndEntry> es;
    for (int v = 0; v < L.atlas().size(); ++v) es.push_back(compute_endring_bruteforce(L, v, opt));
    CurveTable T(L, std::move(es));
    if (opt.use_cache) {
        std::error_code ec;
        fs::create_directories(opt.cache_dir, ec);
        std::ofstream out(path);
        if (out) out << T.to_json().dump() << "\n";
    }
    return T;
}

// ---------------------------------------------------------------- comparisons

Lat change_frame(const Frame& from, const Lat& x, const Frame& to) {
    if (from.vertex() != to.vertex()) throw Error("InvalidArgument", "frames of different curves");
    std::vector<QVec> img;
    for (int i = 0; i < from.rank(); ++i) {
        auto c = to.coords_in_span(from.elem(i));
        if (!c) throw Error("InvalidArgument", "target frame does not contain the source");
        img.push_back(*c);
    }
    std::vector<QVec> g;
    for (auto& r : lat_basis(x)) {
        QVec y{0, 0, 0, 0};
        for (int i = 0; i < from.rank(); ++i)
            for (int k = 0; k < 4; ++k) y[k] += r[i] * img[i][k];
        g.push_back(y);
    }
    return lat_span(g);
}

static Lat unit_lattice() {
    return lat_span({QVec{1, 0, 0, 0}, QVec{0, 1, 0, 0}, QVec{0, 0, 1, 0}, QVec{0, 0, 0, 1}});
}

bool engine_equal(const CurveTable& T, int v, const std::vector<EndoRep>& basis) {
    Frame& F = T.frame(v);
    std::vector<QVec> g;
    for (auto& b : basis) {
        if (b.domain() != v) return false;
        auto c = F.coords_in_span(b);
        if (!c) return false;
        g.push_back(*c);
    }
    return lat_span(g) == unit_lattice();
}

bool engine_equal(const CurveTable& T, const GramLattice& R) {
    if (R.rank() != 4) return false;
    return change_frame(*R.frame, R.lat, T.frame(R.frame->vertex())) == unit_lattice();
}

mpz_class engine_index(const CurveTable& T, const GramLattice& R) {
    Lat x = change_frame(*R.frame, R.lat, T.frame(R.frame->vertex()));
    return lat_index(x, unit_lattice());
}

Mat2 endo_matrix_modN(const CurveTable& T, int v, const EndoRep& x, u64 N) {
    if (x.domain() != v) throw Error("InvalidArgument", "element of another curve");
    if (N % T.p() == 0) throw Error("InvalidArgument", "N must be prime to p");
    return T.lab().action(x, N);
}

bool basis_spans_mod(const CurveTable& T, int v, u64 N) {
    const EndEntry& e = T.entry(v);
    QMat A(4, std::vector<mpq_class>(4));
    for (int i = 0; i < 4; ++i) {
        Mat2 m = endo_matrix_modN(T, v, e.basis[i], N);
        A[i] = {mpq_class(mpz_class((unsigned long)m.a)), mpq_class(mpz_class((unsigned long)m.b)),
                mpq_class(mpz_class((unsigned long)m.c)), mpq_class(mpz_class((unsigned long)m.d))};
    }
    mpq_class d = zla::det(A);
    mpz_class g, n = d.get_num();
    mpz_class NN((unsigned long)N);
    mpz_gcd(g.get_mpz_t(), n.get_mpz_t(), NN.get_mpz_t());
    return g == 1;
}

// ---------------------------------------------------------------- oracles

OneEndOracle::OneEndOracle(const CurveTable& T, Kind k, long param, u64 seed, int height)
    : T_(&T), kind_(k), param_(param), rng_(seed), H_(height) {}

OneEndOracle OneEndOracle::honest(const CurveTable& T, u64 seed, int height) {
    return OneEndOracle(T, Kind::honest, 0, seed, height);
}

OneEndOracle OneEndOracle::stuck(const CurveTable& T, long M, u64 seed, int height) {
    if (M < 2) throw Error("InvalidArgument", "stuck oracle needs M >= 2");
    return OneEndOracle(T, Kind::stuck, M, seed, height);
}

OneEndOracle OneEndOracle::leveled(const CurveTable& T, int n, u64 seed, int height) {
    if (n < 1 || n > 30) throw Error("InvalidArgument", "leveled oracle needs 1 <= n <= 30");
    return OneEndOracle(T, Kind::leveled, n, seed, height);
}

OneEndOracle OneEndOracle::parse(const CurveTable& T, const std::string& s, u64 seed) {
    if (s == "honest") return honest(T, seed);
    auto colon = s.find(':');
    if (colon != std::string::npos) {
        std::string kind = s.substr(0, colon);
        long x = std::stol(s.substr(colon + 1));
        if (kind == "stuck") return stuck(T, x, seed);
        if (kind == "leveled") return leveled(T, (int)x, seed);
    }
    throw Error("InvalidArgument", "unknown oracle '" + s + "'");
}

std::string OneEndOracle::name() const {
    switch (kind_) {
        case Kind::honest: return "honest";
        case Kind::stuck: return "stuck:" + std::to_string(param_);
        default: return "leveled:" + std::to_string(param_);
    }
}

ZVec OneEndOracle::nonscalar(bool two_reduced) {
    for (;;) {
        ZVec c(4);
        for (auto& x : c) x = (long)rng_.below(2 * H_ + 1) - H_;
        if (c[1] == 0 && c[2] == 0 && c[3] == 0) continue;
        if (two_reduced && c[1] % 2 == 0 && c[2] % 2 == 0 && c[3] % 2 == 0) continue;
        return c;
    }
}

EndoRep OneEndOracle::query(int v) {
    const EndEntry& e = T_->entry(v);
    ++queries_;
    ZVec c;
    switch (kind_) {
        case Kind::honest:
            c = nonscalar(false);
            last_e_ = 0;
            break;
        case Kind::stuck: {
            ZVec b = nonscalar(false);
            c = b;
            for (int i = 0; i < 4; ++i) c[i] = b[i] * param_;
            c[0] += (long)rng_.below(2 * H_ + 1) - H_;
            last_e_ = 0;
            break;
        }
        case Kind::leveled: {
            int n = (int)param_;
            u64 r = rng_.below(u64(1) << n);
            int lev = 0;
            for (int x = n - 1; x >= 1; --x) {
                if (r < (u64(1) << x)) {
                    lev = x;
                    break;
                }
                r -= u64(1) << x;
            }
            ZVec b = nonscalar(true);
            c = b;
            for (int i = 0; i < 4; ++i) c[i] = b[i] << lev;
            c[0] += (long)rng_.below(2 * H_ + 1) - H_;
            last_e_ = lev;
            break;
        }
    }
    last_ = c;
    std::vector<mpz_class> cs;
    std::vector<EndoRep> xs;
    for (int i = 0; i < 4; ++i)
        if (c[i] != 0) cs.push_back(c[i]), xs.push_back(e.basis[i]);
    return T_->lab().lincomb(cs, xs);
}

}  // namespace isolab
