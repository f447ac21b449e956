#include "mscout/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace mscout {

namespace detail {

std::vector<std::uint64_t> sorted_unique_ids(std::span<const std::uint64_t> ids) {
    std::vector<std::uint64_t> out(ids.begin(), ids.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace detail

std::vector<double> quantize_numeric(std::span<const double> values, std::uint32_t bins) {
    if (bins == 0) throw IngestError("bin count must be >= 1");
    double lo = 0.0, hi = 0.0;
    bool seen = false;
    for (double v : values) {
        if (!std::isfinite(v)) continue;
        if (!seen) {
            lo = hi = v;
            seen = true;
        } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!seen) throw IngestError("numeric feature has no finite values");
    if (lo == hi) return {lo, lo + 1.0};  // all-identical values: one degenerate bin
    std::vector<double> edges(bins + 1);
    const double width = hi - lo;
    for (std::uint32_t i = 0; i <= bins; ++i) {
        edges[i] = lo + width * static_cast<double>(i) / static_cast<double>(bins);
    }
    edges.front() = lo;
    edges.back() = hi;
    for (std::uint32_t i = 1; i <= bins; ++i) {
        if (!(edges[i] > edges[i - 1])) return {lo, hi};  // range too narrow for the bin count
    }
    return edges;
}

namespace {

FeatureDescriptor build_descriptor(const SchemaField& field, const std::vector<Row>& rows,
                                   std::size_t column, std::uint32_t bins) {
    FeatureDescriptor desc;
    desc.name = field.name;
    desc.feature_id = feature_id_for(field.name);
    desc.kind = field.kind;
    if (field.kind == FeatureKind::numeric) {
        std::vector<double> values;
        values.reserve(rows.size());
        for (const auto& row : rows) {
            const Cell& cell = row[column];
            if (!cell.has_value()) continue;
            const double* v = std::get_if<double>(&*cell);
            if (v == nullptr) {
                throw IngestError("non-numeric value in numeric feature: " + field.name);
            }
            if (std::isfinite(*v)) values.push_back(*v);
        }
        if (values.empty()) throw IngestError("feature has no values: " + field.name);
        desc.edges = quantize_numeric(values, bins);
    } else {
        std::set<std::string> vocabulary;
        for (const auto& row : rows) {
            const Cell& cell = row[column];
            if (!cell.has_value()) continue;
            const std::string* s = std::get_if<std::string>(&*cell);
            if (s == nullptr) {
                throw IngestError("non-categorical value in categorical feature: " + field.name);
            }
            vocabulary.insert(*s);
        }
        if (vocabulary.empty()) throw IngestError("feature has no values: " + field.name);
        std::uint32_t next = 0;
        for (const auto& token : vocabulary) desc.categories.emplace(token, next++);
    }
    return desc;
}

} // namespace

DatasetSketch ingest_table(const TableData& table, const IngestOptions& options) {
    if (options.dataset_id.empty()) throw IngestError("dataset_id is required");
    if (options.partition_size_m == 0) throw IngestError("partition size must be >= 1");
    if (options.bins_per_numeric_feature == 0) throw IngestError("bin count must be >= 1");
    if (table.schema.empty()) throw IngestError("schema has no fields");
    if (table.rows.empty()) throw IngestError("table has no rows");

    std::set<std::string> canonical_names;
    for (const auto& field : table.schema) {
        const std::string canonical = canonical_feature_name(field.name);
        if (canonical.empty()) throw IngestError("feature name is empty");
        if (!canonical_names.insert(canonical).second) {
            throw IngestError("duplicate feature name after canonicalization: " + field.name);
        }
    }
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (table.rows[r].size() != table.schema.size()) {
            throw IngestError("row " + std::to_string(r + 1) + " has " +
                              std::to_string(table.rows[r].size()) + " cells, expected " +
                              std::to_string(table.schema.size()));
        }
    }

    const std::uint64_t m = options.partition_size_m;
    const std::uint64_t n = table.rows.size();
    std::uint64_t kept_rows = options.drop_residue ? (n / m) * m : n;
    if (kept_rows == 0) {
        throw IngestError("dropping the residue leaves no full partition (rows=" +
                          std::to_string(n) + ", m=" + std::to_string(m) + ")");
    }

    struct ColumnBinding {
        std::size_t column;
        FeatureDescriptor descriptor;
    };
    std::vector<ColumnBinding> bindings;
    bindings.reserve(table.schema.size());
    for (std::size_t c = 0; c < table.schema.size(); ++c) {
        bindings.push_back(ColumnBinding{c, build_descriptor(table.schema[c], table.rows, c,
                                                             options.bins_per_numeric_feature)});
    }
    std::sort(bindings.begin(), bindings.end(), [](const ColumnBinding& a, const ColumnBinding& b) {
        return a.descriptor.feature_id < b.descriptor.feature_id;
    });

    DatasetSketch sketch;
    sketch.dataset_id = options.dataset_id;
    sketch.partition_size_m = m;
    sketch.total_rows = kept_rows;
    sketch.descriptors.reserve(bindings.size());
    for (const auto& binding : bindings) sketch.descriptors.push_back(binding.descriptor);

    const std::uint64_t partition_count = (kept_rows + m - 1) / m;
    sketch.partitions.reserve(partition_count);
    for (std::uint64_t p = 0; p < partition_count; ++p) {
        const std::uint64_t begin = p * m;
        const std::uint64_t end = std::min(begin + m, kept_rows);
        PartitionSketch partition;
        partition.partition_index = static_cast<std::uint32_t>(p);
        partition.rows = end - begin;
        partition.features.reserve(bindings.size());
        for (const auto& binding : bindings) {
            BinnedFeature feature;
            feature.feature_id = binding.descriptor.feature_id;
            feature.counts.assign(binding.descriptor.bin_count(), 0);
            for (std::uint64_t r = begin; r < end; ++r) {
                const Cell& cell = table.rows[r][binding.column];
                if (!cell.has_value()) continue;
                std::optional<std::uint32_t> bin;
                if (binding.descriptor.kind == FeatureKind::numeric) {
                    bin = binding.descriptor.bin_for_number(std::get<double>(*cell));
                } else {
                    bin = binding.descriptor.bin_for_category(std::get<std::string>(*cell));
                }
                if (!bin.has_value()) continue;
                ++feature.counts[*bin];
                ++feature.total;
            }
            partition.features.push_back(std::move(feature));
        }
        sketch.partitions.push_back(std::move(partition));
    }

    sketch.validate();
    return sketch;
}

TokenMultiset expand_feature(const BinnedFeature& feature, const FeatureDescriptor& descriptor) {
    if (feature.feature_id != descriptor.feature_id) {
        throw ProjectionError("feature/descriptor id mismatch");
    }
    const std::vector<std::uint64_t> tokens = descriptor.bin_tokens();
    if (feature.counts.size() != tokens.size()) {
        throw ProjectionError("bin count mismatch for feature " + descriptor.name);
    }
    TokenMultiset out;
    out.items.reserve(tokens.size());
    for (std::size_t b = 0; b < tokens.size(); ++b) {
        if (feature.counts[b] == 0) continue;
        out.items.emplace_back(tokens[b], feature.counts[b]);
    }
    std::sort(out.items.begin(), out.items.end());
    return out;
}

std::vector<std::uint64_t> TokenMultiset::distinct() const {
    std::vector<std::uint64_t> out;
    out.reserve(items.size());
    for (const auto& [token, count] : items) out.push_back(token);
    return out;
}

std::uint64_t TokenMultiset::total_multiplicity() const {
    std::uint64_t total = 0;
    for (const auto& [token, count] : items) total += count;
    return total;
}

namespace {

std::vector<double> subspace_weights(const DatasetSketch& sketch, const PartitionSketch& partition,
                                     const std::vector<std::uint64_t>& ids) {
    std::vector<double> weights;
    for (std::uint64_t id : ids) {
        const FeatureDescriptor* desc = sketch.descriptor(id);
        if (desc == nullptr) {
            throw ProjectionError("unknown feature_id " + std::to_string(id) + " in dataset " +
                                  sketch.dataset_id);
        }
        const BinnedFeature* feature = partition.find(id);
        if (feature == nullptr) {
            weights.insert(weights.end(), desc->bin_count(), 0.0);
            continue;
        }
        if (feature->counts.size() != desc->bin_count()) {
            throw ProjectionError("bin count mismatch for feature " + desc->name);
        }
        for (std::uint64_t c : feature->counts) weights.push_back(static_cast<double>(c));
    }
    return weights;
}

} // namespace

ProbabilityVector flatten(const DatasetSketch& sketch, const PartitionSketch& partition,
                          std::span<const std::uint64_t> feature_subset) {
    const auto ids = detail::sorted_unique_ids(feature_subset);
    if (ids.empty()) throw ProjectionError("feature subset is empty");
    return ProbabilityVector::from_weights(subspace_weights(sketch, partition, ids));
}

std::optional<ProbabilityVector> try_flatten(const DatasetSketch& sketch,
                                             const PartitionSketch& partition,
                                             std::span<const std::uint64_t> feature_subset) {
    const auto ids = detail::sorted_unique_ids(feature_subset);
    if (ids.empty()) throw ProjectionError("feature subset is empty");
    std::vector<double> weights = subspace_weights(sketch, partition, ids);
    double sum = 0.0;
    for (double w : weights) sum += w;
    if (sum <= 0.0) return std::nullopt;
    return ProbabilityVector::from_weights(std::move(weights));
}

std::vector<std::uint64_t> subspace_labels(const DatasetSketch& sketch,
                                           std::span<const std::uint64_t> feature_subset) {
    const auto ids = detail::sorted_unique_ids(feature_subset);
    if (ids.empty()) throw ProjectionError("feature subset is empty");
    std::vector<std::uint64_t> labels;
    for (std::uint64_t id : ids) {
        const FeatureDescriptor* desc = sketch.descriptor(id);
        if (desc == nullptr) {
            throw ProjectionError("unknown feature_id " + std::to_string(id) + " in dataset " +
                                  sketch.dataset_id);
        }
        const auto tokens = desc->bin_tokens();
        labels.insert(labels.end(), tokens.begin(), tokens.end());
    }
    return labels;
}

ProbabilityVector flatten_whole(const DatasetSketch& sketch,
                                std::span<const std::uint64_t> feature_subset) {
    const auto ids = detail::sorted_unique_ids(feature_subset);
    if (ids.empty()) throw ProjectionError("feature subset is empty");
    std::vector<double> weights;
    for (std::uint64_t id : ids) {
        const BinnedFeature agg = sketch.aggregate_feature(id);
        for (std::uint64_t c : agg.counts) weights.push_back(static_cast<double>(c));
    }
    return ProbabilityVector::from_weights(std::move(weights));
}

ProbabilityVector center_vector(const DatasetSketch& sketch,
                                std::span<const std::uint64_t> feature_subset) {
    const auto ids = detail::sorted_unique_ids(feature_subset);
    if (ids.empty()) throw ProjectionError("feature subset is empty");
    std::vector<double> center;
    double weight_sum = 0.0;
    for (const auto& partition : sketch.partitions) {
        auto flat = try_flatten(sketch, partition, ids);
        if (!flat.has_value()) continue;
        const double w = static_cast<double>(partition.rows);
        if (center.empty()) center.assign(flat->dimension(), 0.0);
        for (std::size_t i = 0; i < flat->dimension(); ++i) center[i] += w * flat->entries()[i];
        weight_sum += w;
    }
    if (center.empty() || weight_sum <= 0.0) {
        throw EmptyDistributionError("no partition has mass on the requested features");
    }
    for (double& c : center) c /= weight_sum;
    return ProbabilityVector::from_weights(std::move(center));
}

} // namespace mscout
