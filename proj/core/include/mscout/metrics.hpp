#pragma once

#include <cstdint>
#include <span>

#include "mscout/sketch.hpp"
#include "mscout/types.hpp"

namespace mscout {

// Natural-log KL divergence. +infinity when q has a zero bin where p has mass.
// smoothing > 0 mixes both inputs with an additive floor before comparing, which
// keeps the result finite at the cost of a small bias; 0 disables it.
double kl_divergence(const ProbabilityVector& p, const ProbabilityVector& q,
                     double smoothing = 0.0);

// Jensen-Shannon divergence in nats. Always finite, in [0, ln 2].
double js_divergence(const ProbabilityVector& p, const ProbabilityVector& q);

constexpr double kMaxJsDivergence = 0.6931471805599453;  // ln 2

// Squared Hellinger distance, 1 - sum(sqrt(p*q)), in [0, 1].
double hellinger_squared(const ProbabilityVector& p, const ProbabilityVector& q);

// Euclidean distance between two equal-dimension vectors.
double l2_distance(std::span<const double> p, std::span<const double> q);
double l2_distance(const ProbabilityVector& p, const ProbabilityVector& q);

// Jaccard similarity over distinct tokens; multiplicities are ignored.
// Two empty multisets have no evidence either way: value 0 with degenerate set.
struct Jaccard {
    double value = 0.0;
    bool degenerate = false;
};
Jaccard jaccard_distinct(const TokenMultiset& a, const TokenMultiset& b);

// distinct_target scores the fraction of target partitions with at least one
// source partition within t_js; pair_count scores matched pairs over all pairs.
enum class AdaptivityMode { distinct_target, pair_count };

struct AdaptivityResult {
    double score = 0.0;
    std::uint64_t matches = 0;            // matched target partitions, or matched pairs
    std::uint64_t source_partitions = 0;  // partitions with mass on the shared features
    std::uint64_t target_partitions = 0;  // denominator basis, counts empty partitions too
};

// Exact adaptivity of source for target over the shared feature subspace:
// every (source, target) partition pair is compared with exact JS divergence.
AdaptivityResult exact_adaptivity(const DatasetSketch& source, const DatasetSketch& target,
                                  std::span<const std::uint64_t> shared_features, double t_js,
                                  AdaptivityMode mode = AdaptivityMode::distinct_target);

} // namespace mscout
