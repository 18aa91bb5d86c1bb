#include <sstream>

#include "internal.hpp"

namespace isolab::cli {

const CurveTable& Lab::table(const std::string& cache_dir) {
    if (!T_) {
        EngineOptions o;
        o.cache_dir = cache_dir;
        T_ = std::make_unique<CurveTable>(build_table(L, o));
    }
    return *T_;
}

std::string rat(const mpq_class& q) {
    mpq_class c = q;
    c.canonicalize();
    return c.get_str();
}

namespace {

u64 parse_u64(const std::string& s) {
    size_t used = 0;
    u64 v = 0;
    try {
        v = std::stoull(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() || s[0] == '-') throw Error("ParseError", "not a non-negative integer: '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream in(s);
    for (std::string t; std::getline(in, t, sep);) out.push_back(t);
    return out;
}

}  // namespace

F2 parse_j(const Fp2& K, const std::string& s) {
    std::string t;
    for (char ch : s)
        if (ch != ' ') t += ch;
    auto plus = t.find('+');
    if (plus == std::string::npos) {
        if (!t.empty() && t.back() == 's') throw Error("ParseError", "write j as a+b*s");
        return K.from_mpz(mpz_class((unsigned long)parse_u64(t)));
    }
    std::string a = t.substr(0, plus), b = t.substr(plus + 1);
    if (b.size() < 2 || b.substr(b.size() - 2) != "*s") throw Error("ParseError", "write j as a+b*s: '" + s + "'");
    b.resize(b.size() - 2);
    return K.add(K.from_mpz(mpz_class((unsigned long)parse_u64(a))),
                 K.mul(K.from_mpz(mpz_class((unsigned long)parse_u64(b))), K.gen()));
}

std::vector<int> parse_digits(const std::string& s) {
    std::vector<int> out;
    for (char ch : s) {
        if (ch < '0' || ch > '9') throw Error("ParseError", "message must be decimal digits");
        out.push_back(ch - '0');
    }
    return out;
}

std::vector<int> parse_ints(const std::string& s) {
    std::vector<int> out;
    for (auto& t : split(s, ',')) out.push_back((int)parse_u64(t));
    if (out.empty()) throw Error("ParseError", "empty list");
    return out;
}

Mat2 parse_mat2(const std::string& s, u64 N) {
    auto v = split(s, ',');
    if (v.size() != 4) throw Error("ParseError", "matrix as a,b,c,d");
    u64 x[4];
    for (int i = 0; i < 4; ++i) x[i] = parse_u64(v[i]) % N;
    return {x[0], x[1], x[2], x[3]};
}

int vertex_of(const Atlas& G, const std::string& j) {
    if (j.empty()) return 0;
    return G.index_of(parse_j(G.K(), j));
}

TableCheck check_table(const CurveTable& T) {
    const EndoLab& L = T.lab();
    mpz_class p2 = mpz_class((unsigned long)T.p()) * T.p();
    TableCheck r;
    for (int v = 0; v < T.size(); ++v) {
        ++r.curves;
        const EndEntry& e = T.entry(v);
        auto fail = [&](const std::string& what) {
            r.ok = false;
            r.failures.push_back({{"vertex", v}, {"j", e.j}, {"check", what}});
        };
        if (e.basis.size() != 4) {
            fail("basis size");
            continue;
        }
        // traces of products straight from the maps, not from the stored table
        QMat G(4, std::vector<mpq_class>(4));
        Frame& F = T.frame(v);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                EndoRep x = L.compose(e.basis[i], e.basis[j]);
                G[i][j] = L.trace(x);
                if (G[i][j] != e.gram[i][j]) fail("gram entry");
                auto c = F.coords_in_span(x);
                if (!c) {
                    fail("product outside the span");
                    continue;
                }
                for (int k = 0; k < 4; ++k)
                    if ((*c)[k].get_den() != 1 || (*c)[k] != e.mult[i][j][k]) fail("product not in the lattice");
            }
        if (abs(zla::det(G)) != p2) fail("discriminant");
    }
    return r;
}

OneEnd asymmetric_oracle(const CurveTable& T, const Mat2& g, u64 N) {
    auto pick = std::make_shared<std::map<int, int>>();
    const CurveTable* t = &T;
    return [t, g, N, pick](int w) {
        auto it = pick->find(w);
        if (it == pick->end()) {
            int k = -1;
            for (int i = 1; i < 4 && k < 0; ++i) {
                Mat2 m = endo_matrix_modN(*t, w, t->entry(w).basis[i], N);
                if (!(mat2::mul(m, g, N) == mat2::mul(g, m, N))) k = i;
            }
            if (k < 0) throw Error("InvalidArgument", "g is central on this curve");
            it = pick->emplace(w, k).first;
        }
        return t->entry(w).basis[it->second];
    };
}

ReductionParams desk_params(u64 seed, std::optional<int> k1, std::optional<int> k2) {
    ReductionParams P;
    P.seed = seed;
    P.k1_override = k1.value_or(kDeskWalk);
    P.k2_override = k2.value_or(kDeskWalk);
    return P;
}

int exit_code_for(const Error& e) {
    static const std::set<std::string> usage_kinds{"InvalidArgument", "ParseError", "UnknownCurve",
                                                    "NotSupersingular", "Unsupported", "UnsupportedSize",
                                                    "CompositeModulus", "BoundExceeded"};
    if (e.kind() == "Timeout") return Exit::timeout;
    if (usage_kinds.count(e.kind())) return Exit::usage;
    return Exit::assertion;
}

}  // namespace isolab::cli
