#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mscout/eval.hpp"
#include "mscout/sketch.hpp"

namespace mscout {

// Families of synthetic tabular datasets: each family perturbs shared global
// bin logits, each dataset jitters its family's logits, and rows sample the
// resulting per-feature distributions. Feature values land at bin + 0.5 and
// the first two rows pin the observed min and max, so re-binning with the
// same bin count reproduces the generating bins exactly.
struct WorkloadSpec {
    std::uint32_t families = 8;
    std::uint32_t datasets_per_family = 4;
    std::uint32_t features = 8;
    std::uint32_t bins = 8;
    std::uint64_t rows = 5000;
    double family_shift = 2.0;    // scale of the per-family logit offsets
    double dataset_jitter = 0.1;  // scale of the per-dataset logit offsets
    std::uint64_t seed = 0x776f726b6c6f6164ULL;
};

struct GeneratedDataset {
    std::string dataset_id;  // fam<F>-ds<D>
    std::uint32_t family = 0;
    TableData table;
    // Generating distribution per feature over the bins; the ground truth
    // the sampled rows approximate.
    std::vector<std::vector<double>> generating;
};

std::vector<GeneratedDataset> generate_workload(const WorkloadSpec& spec);

// JS divergence between two generating distributions over the flattened
// feature space (equals the mean per-feature JS).
double generating_js(const GeneratedDataset& a, const GeneratedDataset& b);

// Truth proxy for transfer accuracy, linear in generating JS: 1 - js/ln2.
double true_affinity(const GeneratedDataset& a, const GeneratedDataset& b);

// Affinity for every ordered (source, target) pair. Model ids default to the
// source dataset_id; a prefix distinguishes model ids from dataset ids.
AccuracyTable make_truth_table(const std::vector<GeneratedDataset>& datasets,
                               const std::string& model_prefix = "");

} // namespace mscout
