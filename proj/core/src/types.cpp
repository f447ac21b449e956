#include "mscout/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mscout {

namespace {

constexpr std::uint64_t kNumericBinTag = 0x6e756d65ULL;      // "nume"
constexpr std::uint64_t kCategoricalBinTag = 0x63617465ULL;  // "cate"

} // namespace

const char* to_string(FeatureKind kind) {
    return kind == FeatureKind::numeric ? "numeric" : "categorical";
}

FeatureKind feature_kind_from_string(std::string_view s) {
    if (s == "numeric") return FeatureKind::numeric;
    if (s == "categorical") return FeatureKind::categorical;
    throw FormatError("unknown feature kind: " + std::string(s));
}

std::size_t FeatureDescriptor::bin_count() const {
    if (kind == FeatureKind::numeric) {
        return edges.size() < 2 ? 0 : edges.size() - 1;
    }
    return categories.size();
}

std::optional<std::uint32_t> FeatureDescriptor::bin_for_number(double value) const {
    if (!std::isfinite(value)) return std::nullopt;
    const std::size_t bins = bin_count();
    if (bins == 0) return std::nullopt;
    const double lo = edges.front();
    const double hi = edges.back();
    if (value <= lo) return 0;
    if (value >= hi) return static_cast<std::uint32_t>(bins - 1);
    const double pos = (value - lo) / (hi - lo) * static_cast<double>(bins);
    auto idx = static_cast<std::int64_t>(pos);
    idx = std::clamp<std::int64_t>(idx, 0, static_cast<std::int64_t>(bins) - 1);
    return static_cast<std::uint32_t>(idx);
}

std::optional<std::uint32_t> FeatureDescriptor::bin_for_category(const std::string& token) const {
    auto it = categories.find(token);
    if (it == categories.end()) return std::nullopt;
    return it->second;
}

std::vector<std::uint64_t> FeatureDescriptor::bin_tokens() const {
    const std::uint64_t name_hash = fnv1a64(canonical_feature_name(name));
    std::vector<std::uint64_t> tokens(bin_count());
    if (kind == FeatureKind::numeric) {
        const std::uint64_t bins = tokens.size();
        for (std::uint64_t b = 0; b < bins; ++b) {
            tokens[b] = key4(name_hash, kNumericBinTag, b, bins);
        }
    } else {
        for (const auto& [category, bin] : categories) {
            tokens[bin] = key3(name_hash, kCategoricalBinTag, fnv1a64(category));
        }
    }
    return tokens;
}

void FeatureDescriptor::validate() const {
    if (name.empty()) throw InvariantError("feature name is empty");
    if (feature_id != feature_id_for(name)) {
        throw InvariantError("feature_id does not match canonicalized name: " + name);
    }
    if (kind == FeatureKind::numeric) {
        if (!categories.empty()) throw InvariantError("numeric feature carries categories: " + name);
        if (edges.size() < 2) throw InvariantError("numeric feature needs at least one bin: " + name);
        for (std::size_t i = 1; i < edges.size(); ++i) {
            if (!(edges[i] > edges[i - 1])) {
                throw InvariantError("bin edges not strictly increasing: " + name);
            }
        }
    } else {
        if (!edges.empty()) throw InvariantError("categorical feature carries edges: " + name);
        if (categories.empty()) throw InvariantError("categorical feature has no categories: " + name);
        std::vector<bool> seen(categories.size(), false);
        for (const auto& [category, bin] : categories) {
            if (bin >= categories.size() || seen[bin]) {
                throw InvariantError("categorical bins not dense: " + name);
            }
            seen[bin] = true;
        }
    }
}

void BinnedFeature::validate(std::size_t expected_bins, std::uint64_t partition_rows) const {
    if (counts.size() != expected_bins) {
        throw InvariantError("bin count mismatch for feature " + std::to_string(feature_id));
    }
    const std::uint64_t sum = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
    if (sum != total) {
        throw InvariantError("counts do not sum to total for feature " + std::to_string(feature_id));
    }
    // total < rows is allowed: missing values are dropped from counts.
    if (total > partition_rows) {
        throw InvariantError("feature total exceeds partition rows for feature " +
                             std::to_string(feature_id));
    }
}

const BinnedFeature* PartitionSketch::find(std::uint64_t id) const {
    auto it = std::lower_bound(features.begin(), features.end(), id,
                               [](const BinnedFeature& f, std::uint64_t v) { return f.feature_id < v; });
    if (it == features.end() || it->feature_id != id) return nullptr;
    return &*it;
}

void PartitionSketch::validate() const {
    for (std::size_t i = 1; i < features.size(); ++i) {
        if (!(features[i - 1].feature_id < features[i].feature_id)) {
            throw InvariantError("partition features not sorted by feature_id");
        }
    }
}

const FeatureDescriptor* DatasetSketch::descriptor(std::uint64_t id) const {
    auto it = std::lower_bound(descriptors.begin(), descriptors.end(), id,
                               [](const FeatureDescriptor& d, std::uint64_t v) { return d.feature_id < v; });
    if (it == descriptors.end() || it->feature_id != id) return nullptr;
    return &*it;
}

std::vector<std::uint64_t> DatasetSketch::feature_ids() const {
    std::vector<std::uint64_t> ids;
    ids.reserve(descriptors.size());
    for (const auto& d : descriptors) ids.push_back(d.feature_id);
    return ids;
}

BinnedFeature DatasetSketch::aggregate_feature(std::uint64_t id) const {
    const FeatureDescriptor* desc = descriptor(id);
    if (desc == nullptr) {
        throw ProjectionError("unknown feature_id " + std::to_string(id) + " in dataset " + dataset_id);
    }
    BinnedFeature agg;
    agg.feature_id = id;
    agg.counts.assign(desc->bin_count(), 0);
    for (const auto& partition : partitions) {
        const BinnedFeature* f = partition.find(id);
        if (f == nullptr) continue;
        for (std::size_t b = 0; b < f->counts.size(); ++b) agg.counts[b] += f->counts[b];
        agg.total += f->total;
    }
    return agg;
}

void DatasetSketch::validate() const {
    if (dataset_id.empty()) throw InvariantError("dataset_id is empty");
    if (partition_size_m == 0) throw InvariantError("partition_size_m must be >= 1");
    if (partitions.empty()) throw InvariantError("dataset has no partitions");
    for (std::size_t i = 1; i < descriptors.size(); ++i) {
        if (!(descriptors[i - 1].feature_id < descriptors[i].feature_id)) {
            throw InvariantError("descriptors not sorted by feature_id");
        }
    }
    for (const auto& d : descriptors) d.validate();

    std::uint64_t row_sum = 0;
    for (std::size_t p = 0; p < partitions.size(); ++p) {
        const auto& partition = partitions[p];
        partition.validate();
        if (p + 1 < partitions.size() && partition.rows != partition_size_m) {
            throw InvariantError("non-final partition has rows != m");
        }
        if (p + 1 == partitions.size() &&
            (partition.rows == 0 || partition.rows > partition_size_m)) {
            throw InvariantError("final partition rows out of range");
        }
        row_sum += partition.rows;
        for (const auto& f : partition.features) {
            const FeatureDescriptor* desc = descriptor(f.feature_id);
            if (desc == nullptr) {
                throw InvariantError("partition references unknown feature_id " +
                                     std::to_string(f.feature_id));
            }
            f.validate(desc->bin_count(), partition.rows);
        }
    }
    if (row_sum != total_rows) throw InvariantError("partition rows do not sum to total_rows");
}

ProbabilityVector ProbabilityVector::from_weights(std::vector<double> weights) {
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw NormalizationError("probability weights must be finite and non-negative");
        }
        sum += w;
    }
    if (sum <= 0.0) throw EmptyDistributionError("all probability weights are zero");
    for (double& w : weights) w /= sum;
    return ProbabilityVector(std::move(weights));
}

ProbabilityVector ProbabilityVector::from_normalized(std::vector<double> entries) {
    double sum = 0.0;
    for (double e : entries) {
        if (!(e >= 0.0) || !std::isfinite(e)) {
            throw NormalizationError("probability entries must be finite and non-negative");
        }
        sum += e;
    }
    if (std::abs(sum - 1.0) > kNormalizationTolerance) {
        throw NormalizationError("probability entries sum to " + std::to_string(sum));
    }
    return ProbabilityVector(std::move(entries));
}

} // namespace mscout
