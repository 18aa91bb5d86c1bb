#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <thread>

#include "internal.hpp"

namespace isolab::cli {

namespace {

struct Opts {
    u64 p = 0, N = 0, seed = 1;
    std::string j, j0, j1, kind = "trivial", ells = "2", oracle = "honest", msg, g = "1,1,0,1";
    int ell = 2, k = 60, k1 = 0, k2 = 0, n = 0, delta = 0, e = 1, a = 0, reps = 3, boot = 200;
    long samples = 10000, trials = 0, max_iterations = 4000, max_vertices = 20000;
    double eps = 0.25, timeout = 0;
    bool first_loop_only = false;
    std::string out, cache_dir = "cache";
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
};

struct Ctx {
    const Opts& o;
    nlohmann::json results = nlohmann::json::object();
    nlohmann::json timings = nlohmann::json::object();
    nlohmann::json failures = nlohmann::json::array();
    void check(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    // times f and records it under name
    template <class F>
    decltype(auto) timed(const std::string& name, F f) {
        Stopwatch w;
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            timings[name] = w.ms();
        } else {
            decltype(auto) r = f();
            timings[name] = w.ms();
            return r;
        }
    }
};

using Runner = std::function<void(Ctx&)>;

void need_prime(u64 p) {
    if (p < 5 || !is_prime_u64(p)) throw Error("InvalidArgument", "--p must be a prime >= 5");
}

std::optional<int> opt_k(int k) { return k > 0 ? std::optional<int>(k) : std::nullopt; }

nlohmann::json path_json(const Atlas& G, const IsogenyPath& w) {
    nlohmann::json steps = nlohmann::json::array(), js = nlohmann::json::array();
    int v = w.start;
    js.push_back(G.K().str(G.j(v)));
    for (StepRef s : w.steps) {
        steps.push_back({s.ell, s.idx});
        v = G.edge(v, s).to;
        js.push_back(G.K().str(G.j(v)));
    }
    return {{"steps", steps}, {"j", js}, {"length", w.length()}};
}

// the order as coordinates in its frame plus the trace form Tr(b_i b_j)
nlohmann::json order_json(const GramLattice& R) {
    nlohmann::json basis = nlohmann::json::array(), gram = nlohmann::json::array();
    for (const QVec& x : lat_basis(R.lat)) {
        nlohmann::json row = nlohmann::json::array();
        for (auto& q : x) row.push_back(rat(q));
        basis.push_back(row);
    }
    for (auto& row : R.traces()) {
        nlohmann::json r = nlohmann::json::array();
        for (auto& x : row) r.push_back(x.get_str());
        gram.push_back(r);
    }
    return {{"basis_in_frame", basis}, {"trace_form", gram}, {"disc", rat(R.disc())}};
}

// ---------------------------------------------------------------- commands

void cmd_enumerate(Ctx& c) {
    need_prime(c.o.p);
    auto F = FieldCtx::build(c.o.p, 1);
    auto js = c.timed("enumerate_ms", [&] { return enumerate_supersingular(F); });
    const Fp2& K = F->f2();
    nlohmann::json list = nlohmann::json::array();
    for (F2 j : js) list.push_back({{"j", K.str(j)}, {"aut", aut_order(K, j)}});
    mpq_class mass = eichler_mass(K, js), want((long)c.o.p - 1, 24);
    want.canonicalize();
    c.results["count"] = js.size();
    c.results["curves"] = list;
    c.results["mass"] = rat(mass);
    c.results["mass_expected"] = rat(want);
    c.check(mass == want, "sum of 1/#Aut differs from (p - 1)/24");
}

void cmd_cgl(Ctx& c) {
    need_prime(c.o.p);
    Atlas G(c.o.p);
    int v = vertex_of(G, c.o.j0);
    auto digits = parse_digits(c.o.msg);
    auto w = c.timed("walk_ms", [&] { return cgl_path(G, v, c.o.ell, digits); });
    c.results["hash"] = G.K().str(G.j(w.end));
    c.results["path"] = path_json(G, w);
    c.check(G.j(w.end) == cgl_hash(G, v, c.o.ell, digits), "hash disagrees with the path endpoint");
}

void cmd_graph(Ctx& c) {
    need_prime(c.o.p);
    Atlas G(c.o.p);
    auto edges = c.timed("edges_ms", [&] { return isogeny_graph(G, c.o.ell); });
    nlohmann::json vs = nlohmann::json::array(), ws = nlohmann::json::array(), es = nlohmann::json::array();
    for (int v = 0; v < G.size(); ++v) {
        vs.push_back(G.K().str(G.j(v)));
        ws.push_back(rat(mpq_class(1, G.aut_order(v))));
    }
    std::vector<long> deg(G.size(), 0);
    for (auto& e : edges) {
        es.push_back({{"from", e.from}, {"to", e.to}, {"multiplicity", e.multiplicity}});
        deg[e.from] += e.multiplicity;
    }
    c.results["p"] = c.o.p;
    c.results["ell"] = c.o.ell;
    c.results["vertices"] = vs;
    c.results["edges"] = es;
    c.results["weights"] = ws;
    for (int v = 0; v < G.size(); ++v) c.check(deg[v] == c.o.ell + 1, "out-degree differs from ell + 1");
}

void cmd_spectra_report(Ctx& c) {
    need_prime(c.o.p);
    FunctorKind kind = parse_kind(c.o.kind);
    u64 N = c.o.N ? c.o.N : (kind == FunctorKind::trivial ? 1 : 3);
    std::vector<int> ells = parse_ints(c.o.ells);
    std::vector<int> graph_ells = ells;
    if (c.o.delta > 0)
        for (int l = 2; l < c.o.delta; ++l)
            if (is_prime_u64((u64)l) && N % (u64)l && c.o.p % (u64)l &&
                std::find(graph_ells.begin(), graph_ells.end(), l) == graph_ells.end())
                graph_ells.push_back(l);
    Lab X(c.o.p);
    const CurveTable* T = kind == FunctorKind::trivial ? nullptr : &X.table(c.o.cache_dir);
    GraphOptions go;
    go.max_vertices = c.o.max_vertices;
    auto G = c.timed("graph_ms", [&] { return build_graph(X.L, T, N, kind, graph_ells, go); });

    nlohmann::json verts = nlohmann::json::array(), edges;
    for (auto& x : G.verts)
        verts.push_back({{"curve", x.curve},
                         {"j", X.G.K().str(X.G.j(x.curve))},
                         {"datum", {x.datum.a, x.datum.b, x.datum.c, x.datum.d}},
                         {"weight", rat(mpq_class(1, x.aut))}});
    for (auto& [l, o] : G.out) edges[std::to_string(l)] = o;
    c.results["p"] = c.o.p;
    c.results["N"] = N;
    c.results["kind"] = kind_name(kind);
    c.results["vertices"] = verts;
    c.results["edges"] = edges;
    c.results["raw_data"] = G.raw_data;

    bool predicted = N <= 7;
    nlohmann::json per = nlohmann::json::array();
    for (int l : ells) {
        auto r = c.timed("decomposition_ms_" + std::to_string(l), [&] { return deg_decomposition(G, l); });
        auto chk = check_operator(G, l);
        nlohmann::json j = r.to_json();
        j["constant_defect"] = chk.constant_defect;
        j["normality_defect"] = chk.normality_defect;
        j["incoming_defect"] = chk.incoming_defect;
        const std::string tag = " (ell = " + std::to_string(l) + ")";
        c.check(r.ramanujan_ok(), "eigenvalue on L^2_0 above 2 sqrt(ell)" + tag);
        c.check(chk.constant_defect < 1e-9, "constants are not eigenvectors" + tag);
        c.check(chk.normality_defect < 1e-9, "operator is not normal" + tag);
        if (predicted) {
            c.check(r.components == r.predicted_components, "component count differs from the orbit count" + tag);
            c.check(r.components1 == r.predicted_dim_deg, "dim L^2_deg differs from the prediction" + tag);
            c.check(r.deg_ok(), "L^2_deg eigenvalues differ from the prediction" + tag);
        }
        if (kind == FunctorKind::trivial) {
            bool st = stationary_exact(G, l);
            j["stationary_exact"] = st;
            c.check(st, "stationary law is not 24 / ((p - 1) #Aut)" + tag);
        }
        per.push_back(j);
    }
    c.results["spectra"] = per;
    c.results["predictions_checked"] = predicted;
    if (c.o.delta > 0) c.results["delta"] = c.timed("delta_ms", [&] { return delta_operator(G, c.o.delta).to_json(); });
}

void cmd_spectra_rich(Ctx& c) {
    need_prime(c.o.p);
    u64 N = c.o.N ? c.o.N : 3;
    Lab X(c.o.p);
    const CurveTable& T = X.table(c.o.cache_dir);
    int v = vertex_of(X.G, c.o.j);
    Mat2 g = parse_mat2(c.o.g, N);
    std::optional<OneEndOracle> O;
    OneEnd f;
    if (c.o.oracle == "asymmetric") {
        f = asymmetric_oracle(T, g, N);
    } else {
        O.emplace(OneEndOracle::parse(T, c.o.oracle, c.o.seed));
        f = [&](int w) { return O->query(w); };
    }
    auto r = c.timed("sampling_ms",
                     [&] { return stat_distance_rich(T, v, N, c.o.k, c.o.samples, f, g, c.o.seed, c.o.boot); });
    c.results = r.to_json();
    c.results["within_bound_or_noise"] = r.estimate <= std::max(r.bound, 3 * r.sigma);
}

void cmd_spectra_walk(Ctx& c) {
    need_prime(c.o.p);
    u64 N = c.o.N ? c.o.N : 3;
    Lab X(c.o.p);
    int v = vertex_of(X.G, c.o.j);
    auto r = c.timed("sampling_ms", [&] {
        return stat_distance_walk(X.L, v, N, c.o.ell, c.o.k, c.o.samples, c.o.seed, c.o.boot);
    });
    c.results = r.to_json();
    c.results["within_bound_or_noise"] = r.estimate <= std::max(r.bound, 3 * r.sigma);
}

void cmd_reduce(Ctx& c) {
    need_prime(c.o.p);
    Lab X(c.o.p);
    const CurveTable& T = c.timed("table_ms", [&]() -> const CurveTable& { return X.table(c.o.cache_dir); });
    int v = vertex_of(X.G, c.o.j);
    auto O = OneEndOracle::parse(T, c.o.oracle, c.o.seed);
    ReductionParams P = desk_params(c.o.seed, opt_k(c.o.k1), opt_k(c.o.k2));
    P.first_loop_only = c.o.first_loop_only;
    P.max_iterations = c.o.max_iterations;
    auto r = c.timed("reduction_ms", [&] { return one_end_to_endring(X.L, v, [&](int w) { return O.query(w); }, P); });
    c.results["vertex"] = v;
    c.results["j"] = X.G.K().str(X.G.j(v));
    c.results["oracle"] = O.name();
    c.results["k1"] = *P.k1_override;
    c.results["k2"] = *P.k2_override;
    c.results["index"] = r.index.get_str();
    c.results["log"] = r.log.to_json();
    c.results["order"] = c.timed("order_ms", [&] { return order_json(r.order); });
    mpz_class idx = c.timed("engine_check_ms", [&] { return engine_index(T, r.order); });
    c.results["engine_index"] = idx.get_str();
    c.check(idx == r.index, "reported index differs from the table index");
    if (!c.o.first_loop_only) {
        bool eq = engine_equal(T, r.order);
        c.results["engine_equal"] = eq;
        c.check(eq, "result differs from the table End(E)");
    }
}

void cmd_isogpath(Ctx& c) {
    need_prime(c.o.p);
    Atlas G(c.o.p);
    int v0 = vertex_of(G, c.o.j0), v1 = vertex_of(G, c.o.j1);
    int n = c.o.n > 0 ? c.o.n : default_mitm_len(c.o.p, c.o.ell);
    auto r = c.timed("search_ms", [&] { return isogeny_path_mitm(G, v0, v1, c.o.ell, n, c.o.seed); });
    c.results["path"] = path_json(G, r.path);
    c.results["n"] = n;
    c.results["walks"] = r.walks();
    c.results["table_size"] = r.table_size;
    IsogenyPath again = make_path(G, v0, r.path.steps);
    c.check(again.end == v1 && r.path.end == v1, "path does not end at j1");
    mpz_class want;
    mpz_ui_pow_ui(want.get_mpz_t(), (unsigned long)c.o.ell, (unsigned long)(2 * n));
    c.check(r.path.degree(G) == want, "path degree is not ell^(2n)");
}

void cmd_unconditional(Ctx& c) {
    need_prime(c.o.p);
    Lab X(c.o.p);
    int v = vertex_of(X.G, c.o.j);
    ReductionParams P = desk_params(c.o.seed, opt_k(c.o.k1), opt_k(c.o.k2));
    P.max_iterations = c.o.max_iterations;
    auto r = c.timed("pipeline_ms", [&] { return endring_unconditional(X.L, v, c.o.seed, P); });
    c.results["vertex"] = v;
    c.results["index"] = r.index.get_str();
    c.results["log"] = r.log.to_json();
    c.results["order"] = c.timed("order_ms", [&] { return order_json(r.order); });
    const CurveTable& T = c.timed("table_ms", [&]() -> const CurveTable& { return X.table(c.o.cache_dir); });
    bool eq = engine_equal(T, r.order);
    c.results["engine_equal"] = eq;
    c.check(eq, "result differs from the table End(E)");
}

void cmd_oneend(Ctx& c) {
    need_prime(c.o.p);
    Lab X(c.o.p);
    int v = vertex_of(X.G, c.o.j);
    auto iso = mitm_oracle(X.G, 2, c.o.seed);
    auto r = c.timed("search_ms", [&] { return one_end_from_isogeny_oracle(X.L, v, iso, c.o.eps, c.o.seed); });
    mpz_class d = X.L.degree(r.alpha);
    c.results["iterations"] = r.iterations;
    c.results["n"] = r.n;
    c.results["degree"] = d.get_str();
    c.results["trace"] = X.L.trace(r.alpha).get_str();
    c.check(d % 2 == 0, "degree is odd");
    c.check(!X.L.is_divisible(r.alpha, 2), "answer is divisible by 2");
    c.check(!X.L.is_scalar(r.alpha), "answer is scalar");
}

void cmd_lemma_subspace(Ctx& c) {
    auto r = c.timed("enumeration_ms", [&] { return verify_subspace_lemma(c.o.ell); });
    c.results = {{"ell", r.ell}, {"orbits", r.orbits}, {"subspaces", r.subspaces},
                 {"max_ratio", rat(r.max_ratio)}, {"max_ratio_value", r.max_ratio.get_d()}, {"claimed_bound", "1/2"}};
    c.check(r.max_ratio <= mpq_class(1, 2), "max ratio " + rat(r.max_ratio) + " exceeds 1/2");
}

void cmd_basis_probability(Ctx& c) {
    auto r = c.timed("enumeration_ms", [&] { return verify_basis_probability(c.o.ell, c.o.trials, c.o.seed); });
    c.results = {{"ell", r.ell}, {"exhaustive", r.exhaustive}, {"trials", r.trials},
                 {"probability", r.probability}, {"sigma", r.sigma}};
    if (r.exhaustive) {
        c.results["exact_min"] = rat(r.exact_min);
        c.check(r.exact_min >= mpq_class(1, 8), "exact minimum below 1/8");
    } else {
        c.check(r.probability + 3 * r.sigma >= 0.125, "estimate more than 3 sigma below 1/8");
    }
}

void cmd_nakayama(Ctx& c) {
    auto r = c.timed("enumeration_ms", [&] { return verify_nakayama(c.o.ell, c.o.e, c.o.a); });
    c.results = {{"ell", r.ell}, {"e", r.e}, {"triples", r.triples}, {"generating", r.generating},
                 {"mismatches", r.mismatches}};
    c.check(r.mismatches == 0, "generation and basis tests disagree");
}

void cmd_table(Ctx& c) {
    need_prime(c.o.p);
    Lab X(c.o.p);
    const CurveTable& T = c.timed("table_ms", [&]() -> const CurveTable& { return X.table(c.o.cache_dir); });
    auto r = c.timed("check_ms", [&] { return check_table(T); });
    c.results = {{"p", c.o.p}, {"curves", r.curves}, {"failures", r.failures}};
    c.check(r.ok, "table check failed");
}

void cmd_bench(Ctx& c) {
    need_prime(c.o.p);
    auto F = FieldCtx::build(c.o.p, 1);
    c.timed("enumerate_ms", [&] { return enumerate_supersingular(F).size(); });
    Lab X(c.o.p);
    c.timed("graph_ell2_ms", [&] { return isogeny_graph(X.G, 2).size(); });
    const CurveTable& T = c.timed("table_ms", [&]() -> const CurveTable& { return X.table(c.o.cache_dir); });
    Rng rng(c.o.seed);
    int n = default_mitm_len(c.o.p, 2);
    long walks = 0;
    c.timed("mitm_ms", [&] {
        for (int i = 0; i < c.o.reps; ++i)
            walks += isogeny_path_mitm(X.G, (int)rng.below(X.G.size()), (int)rng.below(X.G.size()), 2, n,
                                       c.o.seed + i).walks();
    });
    c.timed("trace_degree_ms", [&] {
        for (int v = 0; v < T.size(); ++v)
            for (auto& b : T.entry(v).basis) X.L.degree(X.L.compose(b, b));
    });
    c.timed("reduction_ms", [&] {
        for (int i = 0; i < c.o.reps; ++i) {
            auto O = OneEndOracle::honest(T, c.o.seed + i);
            one_end_to_endring(X.L, i % T.size(), [&](int w) { return O.query(w); }, desk_params(c.o.seed + i, {}, {}));
        }
    });
    c.results = {{"p", c.o.p}, {"curves", X.G.size()}, {"reps", c.o.reps}, {"mitm_walks", walks}};
}

// ---------------------------------------------------------------- plumbing

struct Leaf {
    std::string path;
    CLI::App* app;
    Runner run;
};

void common(CLI::App* s, Opts& o) {
    s->add_option("--seed", o.seed, "random seed");
    s->add_option("--out", o.out, "report file (default: stdout)");
    s->add_option("--cache-dir", o.cache_dir, "endomorphism table cache");
    s->add_option("--threads", o.threads, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    s->add_option("--timeout", o.timeout, "wall-clock limit in seconds, 0 for none")->check(CLI::NonNegativeNumber);
}

nlohmann::json echo(const CLI::App* app, const std::vector<std::string>& args) {
    nlohmann::json opts = nlohmann::json::object();
    for (const CLI::Option* op : app->get_options()) {
        std::string name = op->get_single_name();
        if (name == "help" || name.empty()) continue;
        if (op->count() > 0) {
            auto res = op->results();
            opts[name] = res.size() == 1 ? res[0] : CLI::detail::join(res, ",");
        } else {
            opts[name] = op->get_default_str();
        }
    }
    return {{"args", args}, {"options", opts}};
}

std::string status_name(int code) {
    switch (code) {
        case Exit::ok: return "ok";
        case Exit::usage: return "usage_error";
        case Exit::assertion: return "assertion_failed";
        default: return "timeout";
    }
}

void emit(const nlohmann::json& rep, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << rep.dump(2) << "\n";
        return;
    }
    std::filesystem::path f(path);
    if (f.has_parent_path()) std::filesystem::create_directories(f.parent_path());
    std::ofstream os(f);
    os << rep.dump(2) << "\n";
    if (!os) throw Error("InvalidArgument", "cannot write " + path);
    out << rep["subcommand"].get<std::string>() << ": " << rep["status"].get<std::string>() << " -> " << path << "\n";
}

int run_parsed(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Opts o;
    CLI::App app{"isolab: supersingular isogeny experiments"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::vector<Leaf> leaves;
    auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& desc, Runner r) {
        CLI::App* s = parent->add_subcommand(name, desc);
        common(s, o);
        std::string path = parent == &app ? name : parent->get_name() + " " + name;
        leaves.push_back({path, s, std::move(r)});
        return s;
    };
    auto group = [&](const std::string& name, const std::string& desc) {
        CLI::App* s = app.add_subcommand(name, desc);
        s->require_subcommand(1);
        return s;
    };

    auto* en = leaf(&app, "enumerate", "supersingular j-invariants and the mass", cmd_enumerate);
    en->add_option("--p", o.p)->required();

    auto* cg = leaf(&app, "cgl", "CGL hash of a digit string", cmd_cgl);
    cg->add_option("--p", o.p)->required();
    cg->add_option("--ell", o.ell);
    cg->add_option("--j0", o.j0, "start j (default: first enumerated)");
    cg->add_option("--msg", o.msg, "digits in [0, ell)")->required();

    auto* gr = leaf(&app, "graph", "ell-isogeny graph as an edge list", cmd_graph);
    gr->add_option("--p", o.p)->required();
    gr->add_option("--ell", o.ell);

    auto* sp = group("spectra", "graphs with extra data and mixing statistics");
    auto* sr = leaf(sp, "report", "spectrum, components and Deg decomposition", cmd_spectra_report);
    sr->add_option("--p", o.p)->required();
    sr->add_option("--N", o.N, "level (default 1 for trivial, 3 otherwise)");
    sr->add_option("--kind", o.kind)->check(CLI::IsMember({"trivial", "cyc", "endmod", "endmod1"}));
    sr->add_option("--ell", o.ells, "comma separated primes");
    sr->add_option("--delta", o.delta, "also average over primes below X");
    sr->add_option("--max-vertices", o.max_vertices);
    auto* ri = leaf(sp, "rich", "conjugation distance of enriched oracle answers mod N", cmd_spectra_rich);
    ri->add_option("--p", o.p)->required();
    ri->add_option("--N", o.N);
    ri->add_option("--j", o.j);
    ri->add_option("--k", o.k);
    ri->add_option("--samples", o.samples);
    ri->add_option("--oracle", o.oracle, "honest | stuck:M | leveled:n | asymmetric");
    ri->add_option("--g", o.g, "conjugating matrix a,b,c,d");
    ri->add_option("--boot", o.boot);
    auto* wk = leaf(sp, "walk", "distance of (E_phi, phi mod N) from its limit law", cmd_spectra_walk);
    wk->add_option("--p", o.p)->required();
    wk->add_option("--N", o.N);
    wk->add_option("--ell", o.ell);
    wk->add_option("--j", o.j);
    wk->add_option("--k", o.k);
    wk->add_option("--samples", o.samples);
    wk->add_option("--boot", o.boot);

    auto* rd = group("reduce", "EndRing from a OneEnd oracle");
    auto* re = leaf(rd, "endring", "main reduction against a table oracle", cmd_reduce);
    re->add_option("--p", o.p)->required();
    re->add_option("--j", o.j);
    re->add_option("--oracle", o.oracle, "honest | stuck:M | leveled:n");
    re->add_option("--k1", o.k1, "first-loop walk length (0: 40)");
    re->add_option("--k2", o.k2, "second-loop walk length (0: 40)");
    re->add_flag("--first-loop-only", o.first_loop_only);
    re->add_option("--max-iterations", o.max_iterations);

    auto* so = group("solve", "path finding and the unconditional pipeline");
    auto* ip = leaf(so, "isogpath", "meet-in-the-middle ell-isogeny path", cmd_isogpath);
    ip->add_option("--p", o.p)->required();
    ip->add_option("--j0", o.j0);
    ip->add_option("--j1", o.j1)->required();
    ip->add_option("--ell", o.ell);
    ip->add_option("--n", o.n, "half length (0: ceil(log_ell p) + 2)");
    auto* eu = leaf(so, "endring-unconditional", "path finder -> OneEnd -> EndRing", cmd_unconditional);
    eu->add_option("--p", o.p)->required();
    eu->add_option("--j", o.j);
    eu->add_option("--k1", o.k1);
    eu->add_option("--k2", o.k2);
    eu->add_option("--max-iterations", o.max_iterations);
    auto* oe = leaf(so, "oneend", "one endomorphism from the path finder", cmd_oneend);
    oe->add_option("--p", o.p)->required();
    oe->add_option("--j", o.j);
    oe->add_option("--eps", o.eps);

    auto* ve = group("verify", "finite checks by enumeration");
    leaf(ve, "lemma-subspace", "symmetric share of conjugation orbits", cmd_lemma_subspace)
        ->add_option("--ell", o.ell)->required();
    auto* bp = leaf(ve, "basis-probability", "three invariant draws span M_2", cmd_basis_probability);
    bp->add_option("--ell", o.ell)->required();
    bp->add_option("--trials", o.trials, "Monte Carlo draws, 0 for the exhaustive orbit minimum");
    auto* nk = leaf(ve, "nakayama", "generation mod ell against generation mod ell^e", cmd_nakayama);
    nk->add_option("--ell", o.ell)->required();
    nk->add_option("--e", o.e);
    nk->add_option("--a", o.a);
    leaf(ve, "table", "discriminant and closure of the End(E) table", cmd_table)->add_option("--p", o.p)->required();

    auto* be = leaf(&app, "bench", "timings of the main operations", cmd_bench);
    be->add_option("--p", o.p)->required();
    be->add_option("--reps", o.reps);

    std::vector<const char*> argv{"isolab"};
    for (auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse((int)argv.size(), argv.data());
    } catch (const CLI::Success&) {
        out << app.help();
        return Exit::ok;
    } catch (const CLI::CallForHelp&) {
        // help of the innermost subcommand that was named
        const CLI::App* h = &app;
        for (const CLI::App* s = &app; s;) {
            auto subs = s->get_subcommands();
            s = subs.empty() ? nullptr : subs[0];
            if (s) h = s;
        }
        out << h->help();
        return Exit::ok;
    } catch (const CLI::ParseError& e) {
        err << "usage: " << e.what() << "\n";
        return Exit::usage;
    }

    const Leaf* chosen = nullptr;
    for (auto& l : leaves)
        if (l.app->parsed()) chosen = &l;
    if (!chosen) {
        err << "usage: no subcommand\n";
        return Exit::usage;
    }

    nlohmann::json rep;
    rep["schema"] = kReportSchema;
    rep["subcommand"] = chosen->path;
    rep["config"] = echo(chosen->app, args);
    rep["seed"] = o.seed;
    Ctx c{o};
    Stopwatch total;
    int code = Exit::ok;
    auto work = [&] {
        try {
            chosen->run(c);
            if (!c.failures.empty()) code = Exit::assertion;
        } catch (const Error& e) {
            code = exit_code_for(e);
            rep["error"] = {{"kind", e.kind()}, {"message", e.what()}};
        } catch (const std::exception& e) {
            code = Exit::assertion;
            rep["error"] = {{"kind", "Exception"}, {"message", e.what()}};
        }
    };
    if (o.timeout > 0) {
        // the computations cannot be interrupted: on expiry the timeout report
        // is written and the process ends with exit code 3
        std::packaged_task<void()> task(work);
        auto done = task.get_future();
        std::thread th(std::move(task));
        if (done.wait_for(std::chrono::duration<double>(o.timeout)) == std::future_status::timeout) {
            nlohmann::json t = {{"schema", kReportSchema}, {"subcommand", chosen->path}, {"config", rep["config"]},
                                {"seed", o.seed}, {"status", status_name(Exit::timeout)}, {"exit_code", Exit::timeout},
                                {"failures", nlohmann::json::array()}, {"results", nlohmann::json::object()},
                                {"timings", {{"total_ms", total.ms()}}},
                                {"error", {{"kind", "Timeout"}, {"message", "wall-clock limit reached"}}}};
            emit(t, o.out, out);
            out.flush();
            err << "timeout after " << o.timeout << " s\n";
            err.flush();
            std::_Exit(Exit::timeout);
        }
        th.join();
    } else {
        work();
    }
    c.timings["total_ms"] = total.ms();
    rep["status"] = status_name(code);
    rep["exit_code"] = code;
    rep["failures"] = c.failures;
    rep["results"] = c.results;
    rep["timings"] = c.timings;
    if (rep.contains("error")) err << rep["error"]["message"].get<std::string>() << "\n";
    for (auto& f : c.failures) err << "assertion failed: " << f.get<std::string>() << "\n";
    emit(rep, o.out, out);
    return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    // --replay FILE re-runs the argument list embedded in a report
    if (args.size() >= 2 && args[0] == "--replay") {
        std::ifstream in(args[1]);
        if (!in) {
            err << "usage: cannot read " << args[1] << "\n";
            return Exit::usage;
        }
        std::vector<std::string> again;
        try {
            auto rep = nlohmann::json::parse(in);
            again = rep.at("config").at("args").get<std::vector<std::string>>();
        } catch (const std::exception& e) {
            err << "usage: not a report: " << e.what() << "\n";
            return Exit::usage;
        }
        // later flags win in CLI11, so a new --out overrides the recorded one
        again.insert(again.end(), args.begin() + 2, args.end());
        return run(again, out, err);
    }
    try {
        return run_parsed(args, out, err);
    } catch (const Error& e) {
        err << e.what() << "\n";
        return exit_code_for(e);
    }
}

}  // namespace isolab::cli
