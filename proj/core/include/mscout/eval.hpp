#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mscout/search.hpp"

namespace mscout {

// Pearson correlation. DegenerateInputError when fewer than two points or
// either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

// Spearman rank correlation: pearson over average ranks (ties averaged).
double spearman(std::span<const double> x, std::span<const double> y);

// True transfer accuracy per (source model's dataset, target dataset) pair.
class AccuracyTable {
public:
    void set(const std::string& source_model, const std::string& target_dataset, double accuracy);
    double at(const std::string& source_model, const std::string& target_dataset) const;
    std::optional<double> find(const std::string& source_model,
                               const std::string& target_dataset) const;
    std::size_t size() const { return values_.size(); }
    std::vector<std::string> source_models() const;

    // header: source_model_id,target_dataset_id,target_accuracy
    static AccuracyTable from_csv_file(const std::string& path);
    static AccuracyTable from_csv_text(const std::string& text);
    void to_csv_file(const std::string& path) const;

private:
    std::map<std::pair<std::string, std::string>, double> values_;
};

// One query's outcome: the model the ranking chose (absent when the search
// returned nothing).
struct Selection {
    std::string target_dataset;
    std::optional<std::string> chosen_model;
};

// Fraction of queries whose chosen model's true accuracy falls below the
// k-th best true accuracy for that query. Ties with the k-th value count as
// correct; an empty selection counts as an error.
double topk_error(const AccuracyTable& truth, std::span<const Selection> selections,
                  std::size_t k);

struct MetricComparison {
    std::string metric;
    double mean_pearson = 0.0;  // mean per-query pearson of metric value vs true accuracy
    double top1_error = 0.0;
    double top2_error = 0.0;
    std::size_t queries = 0;         // queries contributing to the error rates
    std::size_t pearson_queries = 0; // queries contributing to mean_pearson
};

struct QueryMetricRow {
    std::string query_id;
    std::string metric;
    std::size_t hits = 0;                     // models the search scored
    std::optional<double> pearson;            // needs >= 2 hits with truth rows
    std::optional<std::string> chosen_model;  // rank-1 model
};

// One row per (query, metric) plus one aggregate row per metric.
struct CompareReport {
    std::vector<QueryMetricRow> query_rows;
    std::vector<MetricComparison> aggregates;
    std::string to_tsv() const;
};

// Runs every metric over every query against the registry and compares the
// raw metric values and the induced rankings with the truth table. Acceptance
// thresholds are relaxed internally (t_adaptivity, and t_js for the js
// metric's own filter) so every overlap candidate is scored rather than
// filtered away; base_config supplies the overlap gate, the adaptivity match
// radius t_js, and the rescoring mode.
CompareReport compare_metrics(const SearchEngine& engine,
                              const std::vector<DatasetSketch>& queries,
                              const AccuracyTable& truth, const SearchConfig& base_config,
                              std::span<const SearchMetric> metrics);

// The query-independent baseline: overlap candidates ranked by their
// registered source accuracy (missing accuracy ranks last).
MetricComparison source_accuracy_baseline(const SearchEngine& engine,
                                          const std::vector<DatasetSketch>& queries,
                                          const AccuracyTable& truth,
                                          const SearchConfig& base_config);

} // namespace mscout
