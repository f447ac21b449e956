#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mscout/types.hpp"

namespace mscout {

struct IngestOptions {
    std::uint64_t partition_size_m = 500;
    std::uint32_t bins_per_numeric_feature = 32;
    bool drop_residue = false;  // drop the final short partition instead of keeping it
    std::string dataset_id;
};

// In-memory table: one Cell per schema field per row.
struct TableData {
    std::vector<SchemaField> schema;
    std::vector<Row> rows;
};

// Builds the partitioned sketch: numeric bin edges and categorical
// vocabularies are fit over the whole dataset, then counts are taken per
// consecutive partition of partition_size_m rows. Missing values are
// dropped from counts.
DatasetSketch ingest_table(const TableData& table, const IngestOptions& options);

// B equal-width bins over [min,max] of the finite values; min==max yields a
// single bin covering the point.
std::vector<double> quantize_numeric(std::span<const double> values, std::uint32_t bins);

// Occupied bin tokens with multiplicities, sorted by token. Tokens are the
// descriptor's canonical bin labels, so equal bins in two datasets expand
// to equal tokens.
struct TokenMultiset {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> items;  // (token, count)

    std::vector<std::uint64_t> distinct() const;
    std::uint64_t total_multiplicity() const;
    bool empty() const { return items.empty(); }
};

TokenMultiset expand_feature(const BinnedFeature& feature, const FeatureDescriptor& descriptor);

// Concatenates the requested features' counts in ascending feature_id order
// and normalizes by their grand total. The subset may arrive in any order;
// duplicates are ignored.
ProbabilityVector flatten(const DatasetSketch& sketch, const PartitionSketch& partition,
                          std::span<const std::uint64_t> feature_subset);

// Same flattening, but returns an empty optional instead of throwing when
// the concatenated counts are all zero.
std::optional<ProbabilityVector> try_flatten(const DatasetSketch& sketch,
                                             const PartitionSketch& partition,
                                             std::span<const std::uint64_t> feature_subset);

// Dimension labels of the flattened space: each entry is the bin token of
// the corresponding vector slot, in the same canonical order flatten uses.
std::vector<std::uint64_t> subspace_labels(const DatasetSketch& sketch,
                                           std::span<const std::uint64_t> feature_subset);

// Whole-dataset distribution over a feature subset (partition counts summed,
// then flattened).
ProbabilityVector flatten_whole(const DatasetSketch& sketch,
                                std::span<const std::uint64_t> feature_subset);

// Row-weighted mean of the per-partition flattened distributions. Partitions
// with no mass over the subset contribute nothing.
ProbabilityVector center_vector(const DatasetSketch& sketch,
                                std::span<const std::uint64_t> feature_subset);

namespace detail {
std::vector<std::uint64_t> sorted_unique_ids(std::span<const std::uint64_t> ids);
}

} // namespace mscout
