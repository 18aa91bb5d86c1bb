#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "internal.hpp"

namespace isolab::cli {

namespace {

// Tolerances and budgets are fixed here, not taken from the command line.
constexpr double kEigTol = 1e-9;
constexpr double kBudgetMass = 60, kBudgetMassFull = 1200;
constexpr double kBudgetTable = 120, kBudgetTableFull = 1800;
constexpr double kBudgetRamanujan = 60;
constexpr double kBudgetSpectra = 300;
constexpr double kBudgetLemma = 120;
constexpr double kBudgetHonest = 600;
constexpr double kBudgetStuck = 900;
constexpr double kBudgetLeveled = 900;
constexpr double kBudgetStats = 1800;
constexpr double kBudgetMitm = 300;
constexpr double kBudgetUncond = 1800;
constexpr double kBudgetAlg6 = 600;
constexpr double kBudgetBattery = 600;
constexpr int kSeeds = 10;
constexpr long kLeveledSuccessCap = 50;
constexpr long kRichSamples = 10000;
constexpr int kBatteryCases = 1000;

class Labs {
public:
    explicit Labs(std::string dir) : dir_(std::move(dir)) {}
    Lab& at(u64 p) {
        auto& x = labs_[p];
        if (!x) x = std::make_unique<Lab>(p);
        return *x;
    }
    const CurveTable& table(u64 p) { return at(p).table(dir_); }

private:
    std::string dir_;
    std::map<u64, std::unique_ptr<Lab>> labs_;
};

std::string join(const std::vector<u64>& xs) {
    std::string s;
    for (u64 x : xs) s += (s.empty() ? "" : ",") + std::to_string(x);
    return s;
}

// ---------------------------------------------------------------- 1, 2

void mass(Criterion& c, bool full, Labs&) {
    std::vector<u64> ps = full ? std::vector<u64>{31, 101, 179, 1009} : std::vector<u64>{31, 101};
    c.budget = full ? kBudgetMassFull : kBudgetMass;
    c.pass = true;
    for (u64 p : ps) {
        auto F = FieldCtx::build(p, 1);
        auto js = enumerate_supersingular(F);
        mpq_class m = eichler_mass(F->f2(), js), want((long)p - 1, 24);
        want.canonicalize();
        c.data[std::to_string(p)] = {{"curves", js.size()}, {"mass", rat(m)}, {"expected", rat(want)}};
        if (m != want) c.pass = false;
    }
    c.detail = "p = " + join(ps);
}

void tables(Criterion& c, bool full, Labs& labs) {
    std::vector<u64> ps = full ? std::vector<u64>{31, 101, 179, 1009} : std::vector<u64>{31, 101};
    c.budget = full ? kBudgetTableFull : kBudgetTable;
    c.pass = true;
    long curves = 0;
    for (u64 p : ps) {
        auto r = check_table(labs.table(p));
        curves += r.curves;
        c.data[std::to_string(p)] = {{"curves", r.curves}, {"failures", r.failures}};
        if (!r.ok) c.pass = false;
    }
    c.detail = std::to_string(curves) + " curves, p = " + join(ps);
}

// ---------------------------------------------------------------- 3, 4

void ramanujan(Criterion& c, bool full, Labs& labs) {
    std::vector<u64> ps = full ? std::vector<u64>{101, 179, 499} : std::vector<u64>{101};
    c.budget = kBudgetRamanujan;
    c.pass = true;
    double worst = 0;
    for (u64 p : ps) {
        auto G = build_graph(labs.at(p).L, nullptr, 1, FunctorKind::trivial, {2, 3});
        for (int l : {2, 3}) {
            auto r = deg_decomposition(G, l);
            double ratio = r.max_abs_zero / r.bound;
            worst = std::max(worst, ratio);
            c.data[std::to_string(p) + "/" + std::to_string(l)] = {{"max_abs", r.max_abs_zero}, {"bound", r.bound}};
            if (r.max_abs_zero > r.bound + kEigTol) c.pass = false;
        }
    }
    std::ostringstream s;
    s << "p = " << join(ps) << ", ell = 2,3, max |lambda| / 2 sqrt(ell) = " << std::setprecision(4) << worst;
    c.detail = s.str();
}

void extra_data(Criterion& c, bool, Labs& labs) {
    c.budget = kBudgetSpectra;
    Lab& X = labs.at(101);
    auto G = build_graph(X.L, &labs.table(101), 3, FunctorKind::endmod, {2});
    auto r = deg_decomposition(G, 2);
    long classes = classified_component_count(3, FunctorKind::endmod);
    bool a = r.components == classes;
    bool b = r.max_abs_zero <= 2 * std::sqrt(2.0) + kEigTol;
    bool cc = r.components1 == r.predicted_dim_deg && r.deg_match_error <= kEigTol;
    c.pass = a && b && cc;
    c.data = {{"vertices", r.vertices},           {"components", r.components},
              {"class_count", classes},           {"max_abs_zero", r.max_abs_zero},
              {"dim_l2_deg", r.components1},      {"predicted_dim_l2_deg", r.predicted_dim_deg},
              {"deg_match_error", r.deg_match_error}};
    std::ostringstream s;
    s << "components " << r.components << " vs classes " << classes << ", max |lambda| on L2_0 " << std::setprecision(5)
      << r.max_abs_zero << ", L2_deg error " << std::setprecision(2) << r.deg_match_error;
    c.detail = s.str();
}

// ---------------------------------------------------------------- 5

void lemma(Criterion& c, bool, Labs&) {
    c.budget = kBudgetLemma;
    c.pass = true;
    std::string d;
    for (long ell : {3l, 5l, 7l}) {
        auto r = verify_subspace_lemma(ell);
        bool ok = r.max_ratio <= mpq_class(1, 2);
        c.data["ratio_" + std::to_string(ell)] = rat(r.max_ratio);
        if (!ok) c.pass = false;
        d += "ell " + std::to_string(ell) + ": " + rat(r.max_ratio) + (ok ? "" : " > 1/2") + "; ";
    }
    auto b = verify_basis_probability(3, 0, 1);
    bool ok = b.exhaustive && b.exact_min >= mpq_class(1, 8);
    c.data["basis_probability_min"] = rat(b.exact_min);
    if (!ok) c.pass = false;
    c.detail = d + "basis probability min " + rat(b.exact_min);
}

// ---------------------------------------------------------------- 6 - 8

OneEnd wrap(OneEndOracle& O) {
    return [&O](int w) { return O.query(w); };
}

void honest(Criterion& c, bool, Labs& labs) {
    c.budget = kBudgetHonest;
    int good = 0;
    for (int s = 1; s <= kSeeds; ++s) {
        bool all = true;
        for (u64 p : {31ull, 101ull}) {
            Lab& X = labs.at(p);
            const CurveTable& T = labs.table(p);
            for (int v = 0; v < X.G.size(); ++v) {
                auto O = OneEndOracle::honest(T, 1000 * s + v);
                auto r = one_end_to_endring(X.L, v, wrap(O), desk_params(s, kDeskWalk, kDeskWalk));
                all = all && r.index == 1 && engine_equal(T, r.order);
            }
        }
        good += all;
    }
    c.pass = good == kSeeds;
    c.data = {{"seeds_ok", good}, {"seeds", kSeeds}};
    c.detail = std::to_string(good) + "/" + std::to_string(kSeeds) + " seeds, every curve at p = 31,101, k1 = k2 = 40";
}

void stuck(Criterion& c, bool, Labs& labs) {
    c.budget = kBudgetStuck;
    Lab& X = labs.at(101);
    const CurveTable& T = labs.table(101);
    int stalled = 0, recovered = 0;
    nlohmann::json idx = nlohmann::json::array();
    for (int s = 1; s <= kSeeds; ++s) {
        int v = s % X.G.size();
        auto O = OneEndOracle::stuck(T, 3, 2000 + s);
        auto P = desk_params(s, kDeskWalk, kDeskWalk);
        P.first_loop_only = true;
        auto r1 = one_end_to_endring(X.L, v, wrap(O), P);
        stalled += r1.index % 27 == 0 && engine_index(T, r1.order) == r1.index;
        idx.push_back(r1.index.get_str());
        P.first_loop_only = false;
        auto r = one_end_to_endring(X.L, v, wrap(O), P);
        recovered += engine_equal(T, r.order);
    }
    c.pass = stalled == kSeeds && recovered == kSeeds;
    c.data = {{"first_loop_indices", idx}, {"stalled", stalled}, {"recovered", recovered}};
    c.detail = "first loop index divisible by 27: " + std::to_string(stalled) + "/" + std::to_string(kSeeds) +
               ", full run equal: " + std::to_string(recovered) + "/" + std::to_string(kSeeds);
}

void leveled(Criterion& c, bool, Labs& labs) {
    c.budget = kBudgetLeveled;
    Lab& X = labs.at(101);
    const CurveTable& T = labs.table(101);
    long successes = 0;
    int good = 0;
    for (int s = 1; s <= kSeeds; ++s) {
        auto O = OneEndOracle::leveled(T, 4, 3000 + s);
        auto r = one_end_to_endring(X.L, s % X.G.size(), wrap(O), desk_params(s, kDeskWalk, kDeskWalk));
        successes += r.log.successes;
        good += engine_equal(T, r.order);
    }
    c.pass = good == kSeeds && successes <= kLeveledSuccessCap;
    c.data = {{"successes_total", successes}, {"runs_ok", good}};
    c.detail = std::to_string(good) + "/" + std::to_string(kSeeds) + " equal, success iterations summed over runs " +
               std::to_string(successes) + " <= " + std::to_string(kLeveledSuccessCap);
}

// ---------------------------------------------------------------- 9

void stats(Criterion& c, bool, Labs& labs) {
    c.budget = kBudgetStats;
    const CurveTable& T = labs.table(101);
    Mat2 g{1, 1, 0, 1};
    auto O = OneEndOracle::honest(T, 9);
    auto r = stat_distance_rich(T, 0, 3, 60, kRichSamples, wrap(O), g, 60);
    auto a = stat_distance_rich(T, 0, 3, 0, kRichSamples, asymmetric_oracle(T, g, 3), g, 61);
    bool ok60 = r.estimate <= std::max(r.bound, 3 * r.sigma);
    bool ok0 = a.estimate > 5 * a.sigma;
    c.pass = ok60 && ok0;
    c.data = {{"k60", r.to_json()}, {"k0_asymmetric", a.to_json()}};
    std::ostringstream s;
    s << std::setprecision(4) << "k = 60: " << r.estimate << " <= max(bound " << r.bound << ", 3 sigma " << 3 * r.sigma
      << "); k = 0 asymmetric: " << a.estimate << " > 5 sigma " << 5 * a.sigma;
    c.detail = s.str();
}

// ---------------------------------------------------------------- 10 - 12

void mitm(Criterion& c, bool full, Labs& labs) {
    c.budget = kBudgetMitm;
    u64 p = full ? 1009 : 101;
    Atlas& G = labs.at(p).G;
    int n = default_mitm_len(p, 2);
    Rng rng(10);
    int valid = 0;
    long walks = 0;
    mpz_class deg;
    mpz_ui_pow_ui(deg.get_mpz_t(), 2, (unsigned long)(2 * n));
    for (u64 s = 1; s <= 20; ++s) {
        int a = (int)rng.below(G.size()), b = (int)rng.below(G.size());
        auto r = isogeny_path_mitm(G, a, b, 2, n, s);
        walks += r.walks();
        IsogenyPath again = make_path(G, a, r.path.steps);
        valid += r.path.start == a && r.path.end == b && again.end == b && r.path.degree(G) == deg;
    }
    double mean = walks / 20.0, cap = 10 * std::sqrt((double)p);
    c.pass = valid == 20 && mean <= cap;
    c.data = {{"p", p}, {"valid", valid}, {"mean_walks", mean}, {"cap", cap}};
    std::ostringstream s;
    s << "p = " << p << ", " << valid << "/20 valid, mean walks " << mean << " <= " << std::setprecision(4) << cap;
    c.detail = s.str();
}

void unconditional(Criterion& c, bool, Labs& labs) {
    c.budget = kBudgetUncond;
    int good = 0;
    for (u64 s = 1; s <= 5; ++s) {
        bool all = true;
        for (u64 p : {31ull, 101ull}) {
            Lab& X = labs.at(p);
            for (int v = 0; v < X.G.size(); ++v) {
                auto r = endring_unconditional(X.L, v, 100 * s + v, desk_params(s, kDeskWalk, kDeskWalk));
                all = all && engine_equal(labs.table(p), r.order);
            }
        }
        good += all;
    }
    c.pass = good == 5;
    c.data = {{"seeds_ok", good}};
    c.detail = std::to_string(good) + "/5 seeds, every curve at p = 31,101";
}

void alg6(Criterion& c, bool, Labs& labs) {
    c.budget = kBudgetAlg6;
    Lab& X = labs.at(101);
    auto iso = mitm_oracle(X.G, 2, 12);
    long iters = 0;
    int good = 0;
    for (u64 s = 1; s <= 100; ++s) {
        int v = (int)(s % X.G.size());
        auto r = one_end_from_isogeny_oracle(X.L, v, iso, 0.25, s);
        iters += r.iterations;
        good += r.alpha.domain() == v && X.L.degree(r.alpha) % 2 == 0 && !X.L.is_divisible(r.alpha, 2) &&
                !X.L.is_scalar(r.alpha);
    }
    double mean = iters / 100.0;
    c.pass = good == 100 && mean <= 4;
    c.data = {{"contract_ok", good}, {"mean_iterations", mean}};
    std::ostringstream s;
    s << good << "/100 satisfy the contract, mean iterations " << mean << " <= 4";
    c.detail = s.str();
}

// ---------------------------------------------------------------- 13

// Elements are built from integer coordinates w in the table basis (b0 = 1),
// so divisibility and the reduced form are known without calling divide.
struct Battery {
    const CurveTable& T;
    const EndoLab& L;
    Rng rng;
    long failures = 0;
    std::map<std::string, long> cases;
    nlohmann::json first_failures = nlohmann::json::array();

    EndoRep make(int v, const ZVec& w) const {
        const auto& b = T.entry(v).basis;
        return L.lincomb({w[0], w[1], w[2], w[3]}, {b[0], b[1], b[2], b[3]});
    }
    mpz_class small() { return mpz_class((long)rng.below(9)) - 4; }
    ZVec nonscalar() {
        ZVec w{small(), small(), small(), small()};
        while (w[1] == 0 && w[2] == 0 && w[3] == 0) w[1 + rng.below(3)] = small();
        return w;
    }
    // exact coordinates of x in the table basis must be w, and x acts like w on E[M]
    bool matches(int v, const EndoRep& x, const ZVec& w, u64 M) const {
        auto c = T.frame(v).coords_in_span(x);
        if (!c) return false;
        for (int i = 0; i < 4; ++i)
            if ((*c)[i] != w[i]) return false;
        return L.action(x, M) == T.frame(v).action(w, M);
    }
    void record(const std::string& kind, bool ok, int v, const std::string& what) {
        ++cases[kind];
        if (ok) return;
        ++failures;
        if (first_failures.size() < 10) first_failures.push_back({{"kind", kind}, {"vertex", v}, {"case", what}});
    }
};

u64 probe_modulus(const mpz_class& N, u64 p) {
    for (u64 M : {7ull, 11ull, 13ull, 17ull})
        if (N % M != 0 && p % M != 0) return M;
    return 19;
}

void battery(Criterion& c, bool, Labs& labs) {
    c.budget = kBudgetBattery;
    const u64 p = 101;
    const CurveTable& T = labs.table(p);
    Battery B{T, labs.at(p).L, Rng(13)};
    const mpz_class P((unsigned long)p);
    const std::vector<mpz_class> divisors{2, 3, 4, 5, 6, 9, 12, 25, P, 2 * P, 3 * P, 5 * P};
    // (N, largest e): reduce_at reads N^(e+1)-torsion, which must fit the extension cap at p = 101
    const std::vector<std::pair<long, int>> odd{{3, 3}, {5, 3}, {7, 1}, {9, 1}, {15, 1}};
    for (int i = 0; i < kBatteryCases; ++i) {
        int v = (int)B.rng.below(T.size());
        ZVec a = B.nonscalar();
        std::string tag = "case " + std::to_string(i);
        switch (i % 4) {
        case 0: {  // N alpha, optionally shifted by a multiple of N
            mpz_class N = divisors[B.rng.below(divisors.size())], s = B.small();
            ZVec w = a;
            for (auto& x : w) x *= N;
            w[0] += s * N;
            auto y = B.L.divide(B.make(v, w), N);
            ZVec want = a;
            want[0] += s;
            B.record("divide", y && B.matches(v, *y, want, probe_modulus(N, p)), v, tag);
            break;
        }
        case 1: {  // N alpha plus a residue that breaks divisibility (scalar shifts at k = 0)
            mpz_class N = divisors[B.rng.below(divisors.size())];
            ZVec w = a;
            for (auto& x : w) x *= N;
            int k = (int)B.rng.below(4);
            w[k] += 1 + mpz_class((unsigned long)B.rng.below(std::min<u64>(N.get_ui() - 1, 1000)));
            EndoRep x = B.make(v, w);
            B.record("not divisible", !B.L.is_divisible(x, N) && !B.L.divide(x, N), v, tag);
            break;
        }
        case 2: {  // reduce_at: t + N^e beta with beta N-reduced
            auto [n, emax] = odd[B.rng.below(odd.size())];
            mpz_class N = n, Ne = 1;
            int e = (int)B.rng.below(emax + 1);
            for (int t = 0; t < e; ++t) Ne *= N;
            ZVec w = a;
            bool reduced = false;
            for (int t = 1; t < 4; ++t) reduced = reduced || w[t] % N != 0;
            if (!reduced) w[1] += 1;
            for (int t = 1; t < 4; ++t) w[t] *= Ne;
            w[0] = B.small() * 7;
            Reduced r = B.L.reduce_at(B.make(v, w), N);
            bool ok = r.e == e && (w[0] - r.t) % Ne == 0;
            if (ok) {
                ZVec want{(w[0] - r.t) / Ne, w[1] / Ne, w[2] / Ne, w[3] / Ne};
                ok = B.matches(v, r.beta, want, probe_modulus(N, p)) && is_N_reduced(B.L, r.beta, N.get_ui());
            }
            B.record("reduce", ok, v, tag);
            break;
        }
        default: {  // random coordinates against a mixed modulus p^a m
            mpz_class N = (B.rng.below(2) ? P : mpz_class(1)) * (1 + (long)B.rng.below(6));
            if (N == 1) N = 2;
            ZVec w = a;
            bool divisible = B.rng.below(2);
            for (auto& x : w) x *= divisible ? N : mpz_class(1);
            bool want = true;
            for (auto& x : w) want = want && x % N == 0;
            EndoRep x = B.make(v, w);
            bool got = B.L.is_divisible(x, N);
            bool ok = got == want;
            if (ok && want) {
                ZVec q = w;
                for (auto& t : q) t /= N;
                auto y = B.L.divide(x, N);
                ok = y && B.matches(v, *y, q, probe_modulus(N, p));
            }
            B.record("mixed", ok, v, tag);
        }
        }
    }
    c.pass = B.failures == 0;
    c.data = {{"cases", B.cases}, {"failures", B.failures}, {"first_failures", B.first_failures}};
    c.detail = std::to_string(kBatteryCases) + " cases at p = 101, " + std::to_string(B.failures) + " failures";
}

struct Entry {
    int id;
    const char* title;
    void (*fn)(Criterion&, bool, Labs&);
};

const Entry kCriteria[] = {
    {1, "mass formula", mass},
    {2, "table discriminant and closure", tables},
    {3, "Ramanujan bound, trivial functor", ramanujan},
    {4, "End/3 spectra at p = 101", extra_data},
    {5, "subspace lemma and basis probability", lemma},
    {6, "main reduction, honest oracle", honest},
    {7, "main reduction, stuck(3) oracle", stuck},
    {8, "main reduction, leveled(4) oracle", leveled},
    {9, "conjugation statistics", stats},
    {10, "meet-in-the-middle paths", mitm},
    {11, "unconditional pipeline", unconditional},
    {12, "OneEnd from an isogeny oracle", alg6},
    {13, "divide / reduce battery", battery},
};

}  // namespace

std::vector<Criterion> acceptance_suite(const AcceptanceOptions& opt, std::ostream* live) {
    if (opt.level != "fast" && opt.level != "full") throw Error("InvalidArgument", "level is fast or full");
    const bool full = opt.level == "full";
    Labs labs(opt.cache_dir);
    std::vector<Criterion> out;
    for (const Entry& e : kCriteria) {
        Criterion c;
        c.id = e.id;
        c.title = e.title;
        if ((!opt.only.empty() && !opt.only.count(e.id)) || opt.skip.count(e.id)) {
            c.skipped = true;
            c.detail = "not selected";
        } else {
            Stopwatch w;
            try {
                e.fn(c, full, labs);
            } catch (const std::exception& ex) {
                c.pass = false;
                c.detail = std::string("exception: ") + ex.what();
            }
            c.seconds = w.seconds();
            if (c.pass && c.budget > 0 && c.seconds > c.budget) {
                c.pass = false;
                c.detail += " (over the time budget)";
            }
        }
        if (live) {
            std::ostringstream t;
            t << std::fixed << std::setprecision(1) << c.seconds << " s";
            *live << "criterion " << std::setw(2) << c.id << "  " << (c.skipped ? "SKIP" : c.pass ? "PASS" : "FAIL")
                  << "  " << c.title << ": " << c.detail;
            if (!c.skipped) *live << "  [" << t.str() << ", budget " << c.budget << " s]";
            *live << std::endl;
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace isolab::cli
