#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mscout/errors.hpp"
#include "mscout/hash.hpp"

namespace mscout {

enum class FeatureKind { numeric, categorical };

const char* to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(std::string_view s);

// Per-feature bin structure. Numeric features carry B+1 strictly increasing
// edges over the observed range; categorical features carry a dense
// category -> bin map. Immutable once built.
struct FeatureDescriptor {
    std::uint64_t feature_id = 0;
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::vector<double> edges;                        // numeric only, size B+1
    std::map<std::string, std::uint32_t> categories;  // categorical only

    std::size_t bin_count() const;

    // Bin index for a raw value; numeric maxima land in the last bin.
    std::optional<std::uint32_t> bin_for_number(double value) const;
    std::optional<std::uint32_t> bin_for_category(const std::string& token) const;

    // Canonical cross-dataset bin labels. Two datasets that sketch the same
    // feature name with the same bin count produce identical labels, which
    // is what keeps MinHash tokens and JS-LSH projection components aligned
    // across registries. Categorical labels key on the category string
    // itself so vocabularies built over different data still align.
    std::vector<std::uint64_t> bin_tokens() const;

    void validate() const;
};

// Occurrence counts for one feature inside one partition. total may be
// below the partition row count when the source column had missing values.
struct BinnedFeature {
    std::uint64_t feature_id = 0;
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;

    void validate(std::size_t expected_bins, std::uint64_t partition_rows) const;
};

struct PartitionSketch {
    std::uint32_t partition_index = 0;
    std::uint64_t rows = 0;
    std::vector<BinnedFeature> features;  // sorted by feature_id, unique

    const BinnedFeature* find(std::uint64_t feature_id) const;
    void validate() const;
};

// The succinct dataset representation: per-partition, per-feature bin
// occurrence counts plus the shared descriptors. No raw rows are retained.
struct DatasetSketch {
    std::string dataset_id;
    std::vector<FeatureDescriptor> descriptors;  // sorted by feature_id
    std::vector<PartitionSketch> partitions;
    std::uint64_t partition_size_m = 0;
    std::uint64_t total_rows = 0;

    const FeatureDescriptor* descriptor(std::uint64_t feature_id) const;
    std::vector<std::uint64_t> feature_ids() const;

    // Whole-dataset counts for one feature (partition counts summed).
    BinnedFeature aggregate_feature(std::uint64_t feature_id) const;

    void validate() const;
};

// A normalized discrete distribution over the flattened bin space.
class ProbabilityVector {
public:
    ProbabilityVector() = default;

    // Normalizes raw non-negative weights; their sum must be positive.
    static ProbabilityVector from_weights(std::vector<double> weights);

    // Accepts entries that already sum to 1 within 1e-9.
    static ProbabilityVector from_normalized(std::vector<double> entries);

    const std::vector<double>& entries() const { return entries_; }
    std::size_t dimension() const { return entries_.size(); }
    double operator[](std::size_t i) const { return entries_[i]; }

    bool operator==(const ProbabilityVector& other) const = default;

private:
    explicit ProbabilityVector(std::vector<double> entries)
        : entries_(std::move(entries)) {}
    std::vector<double> entries_;
};

inline constexpr double kNormalizationTolerance = 1e-9;

// Raw table cell: missing, a number, or a category token.
using Cell = std::optional<std::variant<double, std::string>>;
using Row = std::vector<Cell>;

struct SchemaField {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
};

} // namespace mscout
