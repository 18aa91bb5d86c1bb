#include "isolab/collision.hpp"

namespace isolab {

bool is_scalar_walk(const RWalk& w) { return w.steps.empty() && w.aut == 0; }

CollisionHarvester::CollisionHarvester(const Atlas& G, int v, int ell, int k, u64 seed)
    : G_(&G), v_(v), ell_(ell), k_(k), rng_(seed) {
    if (k < 1) throw Error("InvalidArgument", "walk length must be positive");
}

Collision CollisionHarvester::next(long max_samples) {
    while (samples_ < max_samples) {
        ++samples_;
        RWalk psi = reduce_walk(*G_, random_walk(*G_, v_, ell_, k_, rng_, WalkMode::non_backtracking));
        auto& seen = by_end_[psi.end];
        bool fresh = true;
        for (auto& w : seen)
            if (w.steps == psi.steps && w.aut == psi.aut) fresh = false;
        if (!fresh) continue;
        // pair with the most recent distinct walk at this endpoint
        for (auto it = seen.rbegin(); it != seen.rend(); ++it) {
            RWalk closed = concat(*G_, psi, dual_walk(*G_, *it));
            if (is_scalar_walk(closed)) continue;
            Collision c{*it, psi, closed, samples_};
            seen.push_back(psi);
            return c;
        }
        seen.push_back(psi);
    }
    throw Error("Timeout", "no collision within the sample budget");
}

Collision collision_walks(const Atlas& G, int v, int ell, int k, u64 seed) {
    CollisionHarvester h(G, v, ell, k, seed);
    return h.next();
}

EndoRep collision_endomorphism(const EndoLab& L, int v, int ell, int k, u64 seed) {
    return L.walk(collision_walks(L.atlas(), v, ell, k, seed).closed);
}

}  // namespace isolab
