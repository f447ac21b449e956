#include "mscout/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mscout/hash.hpp"
#include "mscout/metrics.hpp"

namespace mscout {

namespace {

constexpr std::uint64_t kGlobalTag = 1;
constexpr std::uint64_t kFamilyTag = 2;
constexpr std::uint64_t kDatasetTag = 3;
constexpr std::uint64_t kRowTag = 4;

std::vector<double> softmax(const std::vector<double>& logits) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - peak);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

std::string format_id(const char* fmt, std::uint32_t a, std::uint32_t b) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, a, b);
    return buf;
}

} // namespace

std::vector<GeneratedDataset> generate_workload(const WorkloadSpec& spec) {
    if (spec.families == 0 || spec.datasets_per_family == 0) {
        throw ParamsError("workload needs at least one family and one dataset");
    }
    if (spec.features == 0) throw ParamsError("workload needs at least one feature");
    if (spec.bins < 2) throw ParamsError("workload needs at least two bins");
    if (spec.rows < 2) throw ParamsError("workload needs at least two rows");
    if (spec.family_shift < 0.0 || spec.dataset_jitter < 0.0) {
        throw ParamsError("logit scales must be >= 0");
    }

    const std::uint32_t F = spec.features;
    const std::uint32_t B = spec.bins;

    std::vector<SchemaField> schema(F);
    for (std::uint32_t f = 0; f < F; ++f) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "f%02u", f);
        schema[f] = {buf, FeatureKind::numeric};
    }

    std::vector<GeneratedDataset> datasets;
    datasets.reserve(static_cast<std::size_t>(spec.families) * spec.datasets_per_family);
    for (std::uint32_t family = 0; family < spec.families; ++family) {
        for (std::uint32_t d = 0; d < spec.datasets_per_family; ++d) {
            const std::uint32_t ds_index = family * spec.datasets_per_family + d;
            GeneratedDataset dataset;
            dataset.dataset_id = format_id("fam%02u-ds%02u", family, d);
            dataset.family = family;
            dataset.table.schema = schema;

            dataset.generating.resize(F);
            std::vector<std::vector<double>> cdf(F);
            for (std::uint32_t f = 0; f < F; ++f) {
                std::vector<double> logits(B);
                for (std::uint32_t b = 0; b < B; ++b) {
                    const std::uint64_t cell = static_cast<std::uint64_t>(f) * B + b;
                    double logit = standard_normal_at(key3(spec.seed, kGlobalTag, cell));
                    logit += spec.family_shift *
                             standard_normal_at(key4(spec.seed, kFamilyTag, family, cell));
                    logit += spec.dataset_jitter *
                             standard_normal_at(key4(spec.seed, kDatasetTag, ds_index, cell));
                    logits[b] = logit;
                }
                dataset.generating[f] = softmax(logits);
                cdf[f].resize(B);
                double run = 0.0;
                for (std::uint32_t b = 0; b < B; ++b) {
                    run += dataset.generating[f][b];
                    cdf[f][b] = run;
                }
                cdf[f].back() = 1.0;
            }

            dataset.table.rows.reserve(spec.rows);
            // Anchor rows pin the observed range to [0.5, B - 0.5].
            Row low(F), high(F);
            for (std::uint32_t f = 0; f < F; ++f) {
                low[f] = 0.5;
                high[f] = static_cast<double>(B) - 0.5;
            }
            dataset.table.rows.push_back(std::move(low));
            dataset.table.rows.push_back(std::move(high));
            for (std::uint64_t r = 2; r < spec.rows; ++r) {
                Row row(F);
                for (std::uint32_t f = 0; f < F; ++f) {
                    const double u =
                        uniform_at(key4(spec.seed, kRowTag, ds_index, r * F + f));
                    const auto it = std::upper_bound(cdf[f].begin(), cdf[f].end(), u);
                    const auto bin = static_cast<std::uint32_t>(
                        std::min<std::ptrdiff_t>(it - cdf[f].begin(), B - 1));
                    row[f] = static_cast<double>(bin) + 0.5;
                }
                dataset.table.rows.push_back(std::move(row));
            }
            datasets.push_back(std::move(dataset));
        }
    }
    return datasets;
}

double generating_js(const GeneratedDataset& a, const GeneratedDataset& b) {
    if (a.generating.size() != b.generating.size()) {
        throw DimensionError("datasets have different feature counts");
    }
    double sum = 0.0;
    for (std::size_t f = 0; f < a.generating.size(); ++f) {
        sum += js_divergence(ProbabilityVector::from_weights(a.generating[f]),
                             ProbabilityVector::from_weights(b.generating[f]));
    }
    return sum / static_cast<double>(a.generating.size());
}

double true_affinity(const GeneratedDataset& a, const GeneratedDataset& b) {
    return 1.0 - generating_js(a, b) / kMaxJsDivergence;
}

AccuracyTable make_truth_table(const std::vector<GeneratedDataset>& datasets,
                               const std::string& model_prefix) {
    AccuracyTable table;
    for (const auto& source : datasets) {
        for (const auto& target : datasets) {
            table.set(model_prefix + source.dataset_id, target.dataset_id,
                      true_affinity(source, target));
        }
    }
    return table;
}

} // namespace mscout
