#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mscout/hash.hpp"
#include "mscout/sketch.hpp"
#include "mscout/types.hpp"

namespace mscout {

// Seeds are part of the persisted signature format; changing them invalidates
// every saved registry.
constexpr std::uint64_t kDefaultMinHashSeed = 0x6d696e686173682bULL;
constexpr std::uint64_t kDefaultJsLshSeed = 0x6a736c73682b3031ULL;

struct MinHashParams {
    std::uint32_t k_per_band = 4;
    std::uint32_t num_bands = 32;
    std::uint64_t master_seed = kDefaultMinHashSeed;

    void validate() const;
    std::uint64_t digest() const;
};

struct JsLshParams {
    std::uint32_t k = 8;
    std::uint32_t num_bands = 24;
    double bucket_width = 1.0;
    std::uint64_t master_seed = kDefaultJsLshSeed;

    void validate() const;
    std::uint64_t digest() const;
};

struct MinHashBand {
    std::uint32_t band = 0;
    std::vector<std::uint64_t> values;

    std::uint64_t digest() const;
    bool operator==(const MinHashBand&) const = default;
};

struct JsLshBand {
    std::uint32_t band = 0;
    std::vector<std::int64_t> values;

    std::uint64_t digest() const;
    bool operator==(const JsLshBand&) const = default;
};

// One band signature per band; band b holds k_per_band independent min-hashes
// over the distinct tokens. Multiplicities are ignored.
std::vector<MinHashBand> minhash_signature(const TokenMultiset& tokens,
                                           const MinHashParams& params);

// Estimated Jaccard similarity from two full signatures: matching slots / total.
double minhash_estimate(std::span<const MinHashBand> a, std::span<const MinHashBand> b);

// One p-stable hash: ceil((a.v + b) / r).
std::int64_t lsh_bucket(std::span<const double> a, double b, double r,
                        std::span<const double> v);

// The projection rows for one subspace. Component (band, slot, label[i]) is a
// unit normal keyed by label, not by position, so datasets sharing bin labels
// share projection components and signatures stay comparable across schemas.
class SubspaceProjection {
public:
    SubspaceProjection(const JsLshParams& params, std::span<const std::uint64_t> labels);

    const JsLshParams& params() const { return params_; }
    std::size_t dimension() const { return dim_; }
    std::uint64_t labels_digest() const { return labels_digest_; }

    // Signature of a distribution: hashes elementwise sqrt of the entries.
    std::vector<JsLshBand> hash_distribution(const ProbabilityVector& p) const;
    // Signature of a raw vector, no transform.
    std::vector<JsLshBand> hash_vector(std::span<const double> v) const;

private:
    JsLshParams params_;
    std::uint64_t labels_digest_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> rows_;     // (num_bands * k) x dim, row-major
    std::vector<double> offsets_;  // num_bands * k
};

std::uint64_t labels_digest(std::span<const std::uint64_t> labels);

// Convenience wrappers that build a throwaway projection.
std::vector<JsLshBand> jslsh_signature(const ProbabilityVector& p,
                                       std::span<const std::uint64_t> labels,
                                       const JsLshParams& params);
std::vector<JsLshBand> l2lsh_signature(std::span<const double> v,
                                       std::span<const std::uint64_t> labels,
                                       const JsLshParams& params);

// True when at least one band has all slots equal.
bool any_band_collision(std::span<const JsLshBand> a, std::span<const JsLshBand> b);

// Fraction of bands with all slots equal.
double band_collision_rate(std::span<const JsLshBand> a, std::span<const JsLshBand> b);

// Collision probability of a single p-stable hash at L2 distance c, with
// bucket width r. Used to invert observed collision rates into a distance
// estimate when exact rescoring is off.
double l2_hash_collision_probability(double c, double r);

// Inverts the per-band all-k collision rate into an estimated L2 distance
// between the hashed vectors (sqrt-space for distributions). Returns 0 when
// every band collides and a large upper bound when none do.
double estimate_l2_from_collisions(double band_rate, const JsLshParams& params);

} // namespace mscout
