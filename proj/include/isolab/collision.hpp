#pragma once
// Endomorphisms from colliding walks: two distinct ell-walks of the same length
// from E with the same endpoint give the closed walk phi^ o psi.

#include "isolab/endo.hpp"

namespace isolab {

struct Collision {
    RWalk first, second;  // stored walk phi, new walk psi
    RWalk closed;         // phi^ o psi, scalar part included
    long samples = 0;     // walks drawn so far
};

bool is_scalar_walk(const RWalk& w);

// Keeps every sampled walk by endpoint; each call draws walks until one lands
// on a used endpoint through a different walk and returns the closed walk.
class CollisionHarvester {
public:
    CollisionHarvester(const Atlas& G, int v, int ell, int k, u64 seed);
    // non-scalar closed walk; throws Timeout after max_samples draws in total
    Collision next(long max_samples = 1l << 22);
    long samples() const { return samples_; }

private:
    const Atlas* G_;
    int v_, ell_, k_;
    Rng rng_;
    std::map<int, std::vector<RWalk>> by_end_;
    long samples_ = 0;
};

// Alg. 8 at one curve: degree ell^(2k), never scalar.
EndoRep collision_endomorphism(const EndoLab& L, int v, int ell, int k, u64 seed);
Collision collision_walks(const Atlas& G, int v, int ell, int k, u64 seed);

}  // namespace isolab
