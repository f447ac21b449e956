#include "mscout/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mscout/csv.hpp"

namespace mscout {

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionError("series lengths differ");
    const std::size_t n = x.size();
    if (n < 2) throw DegenerateInputError("need at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateInputError("zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

} // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionError("series lengths differ");
    const std::vector<double> rx = average_ranks(x);
    const std::vector<double> ry = average_ranks(y);
    return pearson(rx, ry);
}

void AccuracyTable::set(const std::string& source_model, const std::string& target_dataset,
                        double accuracy) {
    values_[{source_model, target_dataset}] = accuracy;
}

std::optional<double> AccuracyTable::find(const std::string& source_model,
                                          const std::string& target_dataset) const {
    auto it = values_.find({source_model, target_dataset});
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

double AccuracyTable::at(const std::string& source_model,
                         const std::string& target_dataset) const {
    auto value = find(source_model, target_dataset);
    if (!value.has_value()) {
        throw NotFoundError("no accuracy for (" + source_model + ", " + target_dataset + ")");
    }
    return *value;
}

std::vector<std::string> AccuracyTable::source_models() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_) {
        if (out.empty() || out.back() != key.first) out.push_back(key.first);
    }
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

AccuracyTable accuracy_from_csv(const CsvTable& csv) {
    const std::vector<std::string> expected{"source_model_id", "target_dataset_id",
                                            "target_accuracy"};
    if (csv.header != expected) {
        throw FormatError("accuracy table header must be "
                          "source_model_id,target_dataset_id,target_accuracy");
    }
    AccuracyTable table;
    for (std::size_t r = 0; r < csv.records.size(); ++r) {
        const auto& record = csv.records[r];
        if (!record[0].has_value() || !record[1].has_value() || !record[2].has_value()) {
            throw FormatError("accuracy row " + std::to_string(r + 1) + " has missing fields");
        }
        auto accuracy = parse_numeric_cell(*record[2]);
        if (!accuracy.has_value()) {
            throw FormatError("accuracy row " + std::to_string(r + 1) + " is not numeric");
        }
        table.set(*record[0], *record[1], *accuracy);
    }
    return table;
}

} // namespace

AccuracyTable AccuracyTable::from_csv_file(const std::string& path) {
    return accuracy_from_csv(parse_csv_file(path));
}

AccuracyTable AccuracyTable::from_csv_text(const std::string& text) {
    return accuracy_from_csv(parse_csv_text(text));
}

void AccuracyTable::to_csv_file(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + path);
    out << "source_model_id,target_dataset_id,target_accuracy\n";
    out.precision(17);
    for (const auto& [key, value] : values_) {
        out << key.first << "," << key.second << "," << value << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

double topk_error(const AccuracyTable& truth, std::span<const Selection> selections,
                  std::size_t k) {
    if (k == 0) throw ParamsError("k must be >= 1");
    if (selections.empty()) throw DegenerateInputError("no selections");
    const std::vector<std::string> models = truth.source_models();
    std::size_t errors = 0;
    for (const auto& selection : selections) {
        std::vector<double> accuracies;
        for (const auto& model : models) {
            auto accuracy = truth.find(model, selection.target_dataset);
            if (accuracy.has_value()) accuracies.push_back(*accuracy);
        }
        if (accuracies.empty()) {
            throw DataError("no truth rows for target " + selection.target_dataset);
        }
        if (!selection.chosen_model.has_value()) {
            ++errors;
            continue;
        }
        auto chosen = truth.find(*selection.chosen_model, selection.target_dataset);
        if (!chosen.has_value()) {
            throw DataError("no truth row for (" + *selection.chosen_model + ", " +
                            selection.target_dataset + ")");
        }
        std::sort(accuracies.begin(), accuracies.end(), std::greater<double>());
        const double kth = accuracies[std::min(k, accuracies.size()) - 1];
        if (*chosen < kth) ++errors;
    }
    return static_cast<double>(errors) / static_cast<double>(selections.size());
}

std::string CompareReport::to_tsv() const {
    std::ostringstream out;
    out.precision(6);
    out << "#mscout compare v1\n";
    out << "#query\tmetric\tquery_id\thits\tpearson\tchosen_model\n";
    out << "#aggregate\tmetric\tmean_pearson\ttop1_error\ttop2_error\tqueries\tpearson_queries\n";
    for (const auto& row : query_rows) {
        out << "query\t" << row.metric << "\t" << row.query_id << "\t" << row.hits << "\t";
        if (row.pearson.has_value()) {
            out << *row.pearson;
        } else {
            out << "-";
        }
        out << "\t" << row.chosen_model.value_or("-") << "\n";
    }
    for (const auto& row : aggregates) {
        out << "aggregate\t" << row.metric << "\t" << row.mean_pearson << "\t" << row.top1_error
            << "\t" << row.top2_error << "\t" << row.queries << "\t" << row.pearson_queries
            << "\n";
    }
    return out.str();
}

namespace {

struct ScoredQuery {
    Selection selection;
    std::vector<double> values;      // metric values with a truth row
    std::vector<double> accuracies;  // matching truth accuracies
    std::size_t hits = 0;
};

MetricComparison aggregate_rows(const std::string& metric, const AccuracyTable& truth,
                                const std::vector<ScoredQuery>& scored,
                                std::vector<QueryMetricRow>* query_rows) {
    MetricComparison row;
    row.metric = metric;
    std::vector<Selection> selections;
    std::vector<double> per_query_pearson;
    for (const auto& q : scored) {
        selections.push_back(q.selection);
        QueryMetricRow qrow;
        qrow.query_id = q.selection.target_dataset;
        qrow.metric = metric;
        qrow.hits = q.hits;
        qrow.chosen_model = q.selection.chosen_model;
        if (q.values.size() >= 2) {
            try {
                qrow.pearson = pearson(q.values, q.accuracies);
                per_query_pearson.push_back(*qrow.pearson);
            } catch (const DegenerateInputError&) {
            }
        }
        if (query_rows != nullptr) query_rows->push_back(std::move(qrow));
    }
    row.queries = scored.size();
    row.top1_error = topk_error(truth, selections, 1);
    row.top2_error = topk_error(truth, selections, 2);
    row.pearson_queries = per_query_pearson.size();
    if (!per_query_pearson.empty()) {
        double sum = 0.0;
        for (double p : per_query_pearson) sum += p;
        row.mean_pearson = sum / static_cast<double>(per_query_pearson.size());
    }
    return row;
}

} // namespace

CompareReport compare_metrics(const SearchEngine& engine,
                              const std::vector<DatasetSketch>& queries,
                              const AccuracyTable& truth, const SearchConfig& base_config,
                              std::span<const SearchMetric> metrics) {
    if (queries.empty()) throw DegenerateInputError("no queries");
    CompareReport report;
    for (const SearchMetric metric : metrics) {
        SearchConfig config = base_config;
        config.metric = metric;
        config.top = 0;
        config.t_adaptivity = 0.0;  // rank every candidate, never filter
        if (metric == SearchMetric::js) {
            config.t_js = kMaxJsDivergence;  // keep base t_js only as the adaptivity radius
        }

        std::vector<ScoredQuery> scored;
        scored.reserve(queries.size());
        for (const auto& query : queries) {
            const std::vector<SearchHit> hits = engine.search(query, config);
            ScoredQuery q;
            q.selection = {query.dataset_id, std::nullopt};
            if (!hits.empty()) q.selection.chosen_model = hits.front().model_id;
            q.hits = hits.size();
            for (const auto& hit : hits) {
                auto accuracy = truth.find(hit.model_id, query.dataset_id);
                if (!accuracy.has_value()) continue;
                q.values.push_back(hit.value);
                q.accuracies.push_back(*accuracy);
            }
            scored.push_back(std::move(q));
        }
        report.aggregates.push_back(
            aggregate_rows(to_string(metric), truth, scored, &report.query_rows));
    }
    return report;
}

MetricComparison source_accuracy_baseline(const SearchEngine& engine,
                                          const std::vector<DatasetSketch>& queries,
                                          const AccuracyTable& truth,
                                          const SearchConfig& base_config) {
    if (queries.empty()) throw DegenerateInputError("no queries");
    SearchConfig config = base_config;
    config.metric = SearchMetric::overlap;
    config.top = 0;

    std::vector<ScoredQuery> scored;
    scored.reserve(queries.size());
    for (const auto& query : queries) {
        std::vector<SearchHit> hits = engine.search(query, config);
        struct Ranked {
            std::string model_id;
            double accuracy = -1.0;  // below any real accuracy: unranked last
        };
        std::vector<Ranked> ranked;
        ranked.reserve(hits.size());
        for (const auto& hit : hits) {
            auto model = engine.registry().find(hit.model_id);
            const double acc =
                model != nullptr ? model->record.source_accuracy.value_or(-1.0) : -1.0;
            ranked.push_back({hit.model_id, acc});
        }
        std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
            if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
            return a.model_id < b.model_id;
        });

        ScoredQuery q;
        q.selection = {query.dataset_id, std::nullopt};
        if (!ranked.empty()) q.selection.chosen_model = ranked.front().model_id;
        q.hits = ranked.size();
        for (const auto& r : ranked) {
            if (r.accuracy < 0.0) continue;
            auto accuracy = truth.find(r.model_id, query.dataset_id);
            if (!accuracy.has_value()) continue;
            q.values.push_back(r.accuracy);
            q.accuracies.push_back(*accuracy);
        }
        scored.push_back(std::move(q));
    }
    return aggregate_rows("source_accuracy", truth, scored, nullptr);
}

} // namespace mscout
