#include "mscout/lsh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace mscout {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;

std::uint64_t values_digest(std::uint32_t band, const void* data, std::size_t bytes) {
    std::uint64_t h = hash_combine(kFnvOffset, band);
    return hash_combine(h, fnv1a64(data, bytes));
}

} // namespace

void MinHashParams::validate() const {
    if (k_per_band == 0) throw ParamsError("k_per_band must be >= 1");
    if (num_bands == 0) throw ParamsError("num_bands must be >= 1");
}

std::uint64_t MinHashParams::digest() const {
    std::uint64_t h = hash_combine(kFnvOffset, k_per_band);
    h = hash_combine(h, num_bands);
    return hash_combine(h, master_seed);
}

void JsLshParams::validate() const {
    if (k == 0) throw ParamsError("k must be >= 1");
    if (num_bands == 0) throw ParamsError("num_bands must be >= 1");
    if (!(bucket_width > 0.0) || !std::isfinite(bucket_width)) {
        throw ParamsError("bucket_width must be positive and finite");
    }
}

std::uint64_t JsLshParams::digest() const {
    std::uint64_t h = hash_combine(kFnvOffset, k);
    h = hash_combine(h, num_bands);
    h = hash_combine(h, std::bit_cast<std::uint64_t>(bucket_width));
    return hash_combine(h, master_seed);
}

std::uint64_t MinHashBand::digest() const {
    return values_digest(band, values.data(), values.size() * sizeof(std::uint64_t));
}

std::uint64_t JsLshBand::digest() const {
    return values_digest(band, values.data(), values.size() * sizeof(std::int64_t));
}

std::vector<MinHashBand> minhash_signature(const TokenMultiset& tokens,
                                           const MinHashParams& params) {
    params.validate();
    if (tokens.empty()) throw SignatureError("cannot min-hash an empty token set");
    std::vector<MinHashBand> signature(params.num_bands);
    for (std::uint32_t band = 0; band < params.num_bands; ++band) {
        signature[band].band = band;
        signature[band].values.assign(params.k_per_band,
                                      std::numeric_limits<std::uint64_t>::max());
    }
    for (const auto& [token, count] : tokens.items) {
        (void)count;  // set semantics
        for (std::uint32_t band = 0; band < params.num_bands; ++band) {
            auto& values = signature[band].values;
            for (std::uint32_t slot = 0; slot < params.k_per_band; ++slot) {
                const std::uint64_t h =
                    mix64(token ^ key3(params.master_seed, band, slot));
                values[slot] = std::min(values[slot], h);
            }
        }
    }
    return signature;
}

double minhash_estimate(std::span<const MinHashBand> a, std::span<const MinHashBand> b) {
    if (a.size() != b.size() || a.empty()) {
        throw SignatureError("signature shapes differ");
    }
    std::size_t matches = 0, total = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].band != b[i].band || a[i].values.size() != b[i].values.size()) {
            throw SignatureError("signature shapes differ");
        }
        for (std::size_t s = 0; s < a[i].values.size(); ++s) {
            matches += a[i].values[s] == b[i].values[s] ? 1 : 0;
            ++total;
        }
    }
    return static_cast<double>(matches) / static_cast<double>(total);
}

std::int64_t lsh_bucket(std::span<const double> a, double b, double r,
                        std::span<const double> v) {
    if (a.size() != v.size()) throw DimensionError("projection/vector dimension mismatch");
    if (!(r > 0.0)) throw ParamsError("bucket width must be positive");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * v[i];
    return static_cast<std::int64_t>(std::ceil((dot + b) / r));
}

std::uint64_t labels_digest(std::span<const std::uint64_t> labels) {
    std::uint64_t h = hash_combine(kFnvOffset, labels.size());
    for (std::uint64_t label : labels) h = hash_combine(h, label);
    return h;
}

SubspaceProjection::SubspaceProjection(const JsLshParams& params,
                                       std::span<const std::uint64_t> labels)
    : params_(params) {
    params_.validate();
    if (labels.empty()) throw ProjectionError("subspace has no bin labels");
    dim_ = labels.size();
    labels_digest_ = mscout::labels_digest(labels);
    const std::size_t rows = static_cast<std::size_t>(params_.num_bands) * params_.k;
    rows_.resize(rows * dim_);
    offsets_.resize(rows);
    for (std::uint32_t band = 0; band < params_.num_bands; ++band) {
        for (std::uint32_t slot = 0; slot < params_.k; ++slot) {
            const std::size_t row = static_cast<std::size_t>(band) * params_.k + slot;
            double* dst = rows_.data() + row * dim_;
            for (std::size_t i = 0; i < dim_; ++i) {
                dst[i] = standard_normal_at(key4(params_.master_seed, band, slot, labels[i]));
            }
            offsets_[row] =
                params_.bucket_width * uniform_at(key3(params_.master_seed, band, slot));
        }
    }
}

std::vector<JsLshBand> SubspaceProjection::hash_vector(std::span<const double> v) const {
    if (v.size() != dim_) throw DimensionError("vector does not match the projection dimension");
    std::vector<JsLshBand> signature(params_.num_bands);
    for (std::uint32_t band = 0; band < params_.num_bands; ++band) {
        signature[band].band = band;
        signature[band].values.resize(params_.k);
        for (std::uint32_t slot = 0; slot < params_.k; ++slot) {
            const std::size_t row = static_cast<std::size_t>(band) * params_.k + slot;
            const double* a = rows_.data() + row * dim_;
            double dot = 0.0;
            for (std::size_t i = 0; i < dim_; ++i) dot += a[i] * v[i];
            signature[band].values[slot] = static_cast<std::int64_t>(
                std::ceil((dot + offsets_[row]) / params_.bucket_width));
        }
    }
    return signature;
}

std::vector<JsLshBand> SubspaceProjection::hash_distribution(const ProbabilityVector& p) const {
    if (p.dimension() != dim_) {
        throw DimensionError("distribution does not match the projection dimension");
    }
    std::vector<double> sqrt_entries(p.dimension());
    for (std::size_t i = 0; i < sqrt_entries.size(); ++i) {
        sqrt_entries[i] = std::sqrt(p.entries()[i]);
    }
    return hash_vector(sqrt_entries);
}

std::vector<JsLshBand> jslsh_signature(const ProbabilityVector& p,
                                       std::span<const std::uint64_t> labels,
                                       const JsLshParams& params) {
    return SubspaceProjection(params, labels).hash_distribution(p);
}

std::vector<JsLshBand> l2lsh_signature(std::span<const double> v,
                                       std::span<const std::uint64_t> labels,
                                       const JsLshParams& params) {
    return SubspaceProjection(params, labels).hash_vector(v);
}

bool any_band_collision(std::span<const JsLshBand> a, std::span<const JsLshBand> b) {
    if (a.size() != b.size()) throw SignatureError("signature shapes differ");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].band == b[i].band && a[i].values == b[i].values) return true;
    }
    return false;
}

double band_collision_rate(std::span<const JsLshBand> a, std::span<const JsLshBand> b) {
    if (a.size() != b.size() || a.empty()) throw SignatureError("signature shapes differ");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].band == b[i].band && a[i].values == b[i].values) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(a.size());
}

double l2_hash_collision_probability(double c, double r) {
    if (!(r > 0.0)) throw ParamsError("bucket width must be positive");
    if (c <= 0.0) return 1.0;
    const double s = r / c;
    const double phi_neg = 0.5 * std::erfc(s / std::sqrt(2.0));
    const double p = 1.0 - 2.0 * phi_neg - (2.0 / (kSqrt2Pi * s)) * (1.0 - std::exp(-0.5 * s * s));
    return std::clamp(p, 0.0, 1.0);
}

double estimate_l2_from_collisions(double band_rate, const JsLshParams& params) {
    params.validate();
    if (band_rate >= 1.0) return 0.0;
    const double target = std::clamp(band_rate, 0.0, 1.0);
    const auto band_prob = [&](double c) {
        return std::pow(l2_hash_collision_probability(c, params.bucket_width),
                        static_cast<double>(params.k));
    };
    double hi = params.bucket_width;
    while (band_prob(hi) > std::max(target, 1e-9) && hi < 1e6) hi *= 2.0;
    if (target <= 1e-9) return hi;
    double lo = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (band_prob(mid) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace mscout
