#include "isolab/reduction.hpp"

namespace isolab {

nlohmann::json ReductionLog::to_json() const {
    nlohmann::json j;
    j["first_loop_iterations"] = first_loop;
    j["second_loop_iterations"] = second_loop;
    j["successes"] = successes;
    j["refinements"] = refinements;
    j["growths"] = growths;
    j["oracle_queries"] = oracle_queries;
    j["frame_queries"] = frame_queries;
    j["index_after_first_loop"] = index_first_loop.get_str();
    j["index_after_saturation"] = index_saturated.get_str();
    j["saturate2_successes"] = sat2_successes;
    j["index_trajectory"] = index_trajectory;
    j["factor_history"] = factor_history;
    j["iterations"] = iterations;
    return j;
}

namespace {

mpz_class unit_index(Frame& F) {
    QVec e[4];
    for (int i = 0; i < 4; ++i) {
        e[i] = QVec{0, 0, 0, 0};
        e[i][i] = 1;
    }
    return index_in_maximal({&F, lat_span({e[0], e[1], e[2], e[3]})});
}

// Coordinates for the whole run: 1, a, b, ab from direct answers at E, preferring
// a span of odd index in End(E) so that every element of End(E) has 2-integral
// coordinates and 2-saturation never needs more than E[2].
std::unique_ptr<Frame> choose_frame(const EndoLab& L, int v, const OneEnd& O, int tries, ReductionLog& log) {
    std::unique_ptr<Frame> best;
    int best_v2 = 1 << 30;
    std::vector<EndoRep> seen;
    for (int t = 0; t < tries && best_v2 > 0; ++t) {
        seen.push_back(O(v));
        ++log.frame_queries;
        for (size_t i = 0; i + 1 < seen.size() && best_v2 > 0; ++i) {
            auto F = std::make_unique<Frame>(L, v);
            F->coords(seen[i]);
            F->coords(seen.back());
            if (F->rank() < 3) continue;
            F->coords(L.compose(seen[i], seen.back()));
            if (F->rank() < 4) continue;
            int v2 = valuation(unit_index(*F), mpz_class(2));
            if (v2 < best_v2) best_v2 = v2, best = std::move(F);
        }
    }
    if (!best) throw Error("OracleFailure", "oracle answers do not generate a rank 4 frame");
    return best;
}

}  // namespace

ReductionResult one_end_to_endring(const EndoLab& L, int v, const OneEnd& O, const ReductionParams& P) {
    const u64 p = L.p();
    ReductionResult res;
    ReductionLog& log = res.log;
    Rng rng(P.seed * 0x9E3779B97F4A7C15ull + (u64)v);
    OneEnd Oc = [&](int w) {
        ++log.oracle_queries;
        return O(w);
    };
    res.frame = choose_frame(L, v, Oc, 12, log);
    Frame& F = *res.frame;
    long budget = P.max_iterations;
    GramLattice R{&F, lat_span({F.one()})};
    FactorList fl;
    auto tick = [&]() {
        if (--budget >= 0) return;
        std::string diag = R.rank() < 4 ? "rank " + std::to_string(R.rank())
                                        : "index " + index_in_maximal(R).get_str() + ", factors " + fl.str();
        throw Error("Timeout", "reduction budget exhausted at " + diag);
    };

    // first loop: a full-rank subring from enriched oracle answers
    int k1 = P.k1_override.value_or(default_k1(p));
    while (R.rank() < 4) {
        tick();
        ++log.first_loop;
        QVec x = F.coords(rich(L, v, k1, Oc, rng));
        R = ring_closure({&F, lat_sum(R.lat, lat_span({x}))});
    }
    log.index_first_loop = index_in_maximal(R);
    log.index_trajectory.push_back(log.index_first_loop.get_str());
    if (P.first_loop_only) {
        res.index = log.index_first_loop;
        res.order = R;
        return res;
    }

    SaturationLog sl;
    R = saturate_at(R, 2, &sl);
    log.sat2_successes = sl.successes;
    R = saturate_at_p(R);
    mpz_class index = index_in_maximal(R);
    log.index_saturated = index;
    log.index_trajectory.push_back(index.get_str());
    fl = cube_free_factor(index);
    log.factor_history.push_back(fl.str());

    // second loop: triples from Reduce_N o O either expose a factor of N or
    // leave R
    while (index != 1) {
        const mpz_class N = fl.factors().back().first;
        if (N % 2 == 0) throw Error("InternalError", "even factor after 2-saturation");
        int k2 = P.k2_override.value_or(default_k2(p, N));
        OneEnd ON = [&](int w) { return L.reduce_at(Oc(w), N).beta; };
        tick();
        ++log.second_loop;
        std::vector<QVec> g{F.one()};
        for (int i = 0; i < 3; ++i) {
            auto c = F.coords_in_span(rich(L, v, k2, ON, rng));
            if (!c) throw Error("InternalError", "element outside the rank 4 frame");
            g.push_back(*c);
        }
        Lat lam = lat_span(g);
        nlohmann::json it;
        it["N"] = N.get_str();
        it["k2"] = k2;
        it["rank"] = lam.rank();
        bool success = false;
        if (lam.rank() == 4) {
            mpz_class li = index_in_maximal({&F, lam});
            mpz_class rest = li;
            int n = 0;
            while (rest % N == 0) rest /= N, ++n;
            mpz_class d = gcd(rest, N);
            it["lattice_index"] = li.get_str();
            it["n"] = n;
            it["d"] = d.get_str();
            if (d != 1 && fl.refine(d)) {
                ++log.refinements;
                success = true;
                it["refined"] = true;
            }
            if (!lat_subset(lam, R.lat)) {
                R = ring_closure({&F, lat_sum(R.lat, lam)});
                mpz_class ni = index_in_maximal(R);
                if (ni >= index || index % ni != 0) throw Error("InternalError", "ring growth did not lower the index");
                index = ni;
                fl.rebase(index);
                ++log.growths;
                success = true;
                it["grown"] = true;
                log.index_trajectory.push_back(index.get_str());
            }
        }
        it["success"] = success;
        log.iterations.push_back(it);
        if (success) {
            ++log.successes;
            log.factor_history.push_back(fl.str());
        }
    }
    res.order = R;
    res.index = index;
    return res;
}

}  // namespace isolab
