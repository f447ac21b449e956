#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mscout/csv.hpp"
#include "mscout/errors.hpp"
#include "mscout/eval.hpp"
#include "mscout/hash.hpp"
#include "mscout/lsh.hpp"
#include "mscout/metrics.hpp"
#include "mscout/registry.hpp"
#include "mscout/search.hpp"
#include "mscout/service.hpp"
#include "mscout/sketch.hpp"
#include "mscout/sketch_json.hpp"
#include "mscout/workload.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitConflict = 3;
constexpr int kExitCorruption = 4;

std::string iso_now() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string stem_of(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

struct SketchArgs {
    std::string csv_path;
    std::string out_path;
    std::string schema_path;
    std::string dataset_id;
    std::vector<std::string> exclude;
    std::uint32_t bins = 32;
    std::uint64_t partition_size = 500;
    bool drop_residue = false;
};

int cmd_sketch(const SketchArgs& args) {
    mscout::TypedTableOptions typed;
    if (!args.schema_path.empty()) {
        typed.declared = mscout::load_schema_file(args.schema_path);
    }
    typed.exclude = args.exclude;
    const mscout::TableData table =
        mscout::typed_table(mscout::parse_csv_file(args.csv_path), typed);

    mscout::IngestOptions options;
    options.partition_size_m = args.partition_size;
    options.bins_per_numeric_feature = args.bins;
    options.drop_residue = args.drop_residue;
    options.dataset_id = args.dataset_id.empty() ? stem_of(args.csv_path) : args.dataset_id;
    const mscout::DatasetSketch sketch = mscout::ingest_table(table, options);
    mscout::save_sketch_file(sketch, args.out_path);

    std::cout << "sketched " << sketch.total_rows << " rows into "
              << sketch.partitions.size() << " partitions ("
              << sketch.descriptors.size() << " features) -> " << args.out_path << "\n";
    return kExitOk;
}

struct RegisterArgs {
    std::string registry_path;
    std::string sketch_path;
    std::string model_id;
    std::string name;
    std::string task;
    std::string notes;
    std::optional<double> source_accuracy;
    bool create = false;
};

// New registries take their partition size and bin count from the first
// sketch so the pair always validates.
mscout::RegistryParams params_for_sketch(const mscout::DatasetSketch& sketch) {
    mscout::RegistryParams params;
    params.partition_size_m = sketch.partition_size_m;
    for (const auto& d : sketch.descriptors) {
        if (d.kind == mscout::FeatureKind::numeric && d.bin_count() > 1) {
            params.bins_per_numeric_feature = static_cast<std::uint32_t>(d.bin_count());
            break;
        }
    }
    return params;
}

int cmd_register(const RegisterArgs& args) {
    if (args.source_accuracy.has_value() &&
        (*args.source_accuracy < 0.0 || *args.source_accuracy > 1.0 ||
         !std::isfinite(*args.source_accuracy))) {
        throw mscout::ParamsError("--source-accuracy must be within [0, 1]");
    }
    const mscout::DatasetSketch sketch = mscout::load_sketch_file(args.sketch_path);
    mscout::Registry registry =
        args.create && !std::filesystem::exists(args.registry_path)
            ? mscout::Registry(params_for_sketch(sketch))
            : mscout::Registry::load(args.registry_path);

    mscout::ModelRecord record;
    record.model_id = args.model_id;
    record.display_name = args.name;
    record.task_tag = args.task;
    record.notes = args.notes;
    record.source_accuracy = args.source_accuracy;
    record.created_at = iso_now();
    registry.register_model(std::move(record), sketch);
    registry.save(args.registry_path);

    std::cout << "registered " << args.model_id << " (" << sketch.partitions.size()
              << " partitions, " << sketch.total_rows << " rows) in "
              << args.registry_path << "\n";
    return kExitOk;
}

struct QueryArgs {
    std::string registry_path;
    std::string sketch_path;
    std::string metric = "adaptivity";
    std::string mode = "distinct_target";
    std::string rescoring = "auto";  // on | off | auto
    std::string out_path;
    double t1 = 0.5;
    double t2 = 0.5;
    double t_adaptivity = 0.5;
    double t_js = 0.1;
    std::size_t top = 10;
    bool as_json = false;
};

mscout::SearchConfig config_from_args(const QueryArgs& args) {
    mscout::SearchConfig config;
    config.metric = mscout::search_metric_from_string(args.metric);
    config.t1 = args.t1;
    config.t2 = args.t2;
    config.t_adaptivity = args.t_adaptivity;
    config.t_js = args.t_js;
    config.top = args.top;
    if (args.mode == "distinct_target") {
        config.adaptivity_mode = mscout::AdaptivityMode::distinct_target;
    } else if (args.mode == "pair_count") {
        config.adaptivity_mode = mscout::AdaptivityMode::pair_count;
    } else {
        throw mscout::ParamsError("unknown adaptivity mode: " + args.mode);
    }
    if (args.rescoring == "on") {
        config.exact_rescoring = true;
    } else if (args.rescoring == "off") {
        config.exact_rescoring = false;
    } else if (args.rescoring != "auto") {
        throw mscout::ParamsError("--exact-rescoring must be on, off, or auto");
    }
    config.validate();
    return config;
}

void write_query_report(std::ostream& out, const std::vector<mscout::SearchHit>& hits,
                        bool as_json) {
    if (as_json) {
        json arr = json::array();
        for (const auto& hit : hits) arr.push_back(mscout::hit_to_json(hit));
        out << json{{"hits", std::move(arr)}}.dump() << "\n";
        return;
    }
    out << "#mscout query v1\n";
    out << "#model_id\tscore\tvalue\texact\toverlap\tmatches\n";
    out.precision(6);
    for (const auto& hit : hits) {
        out << hit.model_id << "\t" << hit.score << "\t" << hit.value << "\t"
            << (hit.exact ? "exact" : "approx") << "\t" << hit.overlap_ratio << "\t"
            << hit.num_matches << "\n";
    }
}

int cmd_query(const QueryArgs& args) {
    const mscout::Registry registry = mscout::Registry::load(args.registry_path);
    const mscout::DatasetSketch query = mscout::load_sketch_file(args.sketch_path);
    const mscout::SearchConfig config = config_from_args(args);
    mscout::SearchEngine engine(registry);
    const std::vector<mscout::SearchHit> hits = engine.search(query, config);

    if (!args.out_path.empty()) {
        std::ofstream out(args.out_path, std::ios::trunc);
        if (!out) throw mscout::DataError("cannot write file: " + args.out_path);
        write_query_report(out, hits, args.as_json);
    }
    write_query_report(std::cout, hits, args.as_json);
    return kExitOk;
}

struct EvalArgs {
    std::string registry_path;
    std::string queries_dir;
    std::string truth_path;
    std::string metrics = "adaptivity,js";
    std::string out_path;
    double t1 = 0.5;
    double t2 = 0.5;
    double t_js = 0.1;
    bool baseline = false;
};

int cmd_eval(const EvalArgs& args) {
    const mscout::Registry registry = mscout::Registry::load(args.registry_path);
    const mscout::AccuracyTable truth = mscout::AccuracyTable::from_csv_file(args.truth_path);

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(args.queries_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw mscout::DataError("no .json sketches under " + args.queries_dir);
    }
    std::vector<mscout::DatasetSketch> queries;
    queries.reserve(files.size());
    for (const auto& file : files) {
        queries.push_back(mscout::load_sketch_file(file.string()));
    }

    std::vector<mscout::SearchMetric> metrics;
    std::stringstream names(args.metrics);
    std::string name;
    while (std::getline(names, name, ',')) {
        if (!name.empty()) metrics.push_back(mscout::search_metric_from_string(name));
    }
    if (metrics.empty()) throw mscout::ParamsError("--metrics lists no metric");

    mscout::SearchConfig config;
    config.t1 = args.t1;
    config.t2 = args.t2;
    config.t_js = args.t_js;
    config.validate();

    mscout::SearchEngine engine(registry);
    const mscout::CompareReport report =
        mscout::compare_metrics(engine, queries, truth, config, metrics);
    std::ostringstream body;
    body << report.to_tsv();
    if (args.baseline) {
        const mscout::MetricComparison base =
            mscout::source_accuracy_baseline(engine, queries, truth, config);
        body.precision(6);
        body << "aggregate\t" << base.metric << "\t" << base.mean_pearson << "\t"
             << base.top1_error << "\t" << base.top2_error << "\t" << base.queries
             << "\t" << base.pearson_queries << "\n";
    }

    if (!args.out_path.empty()) {
        std::ofstream out(args.out_path, std::ios::trunc);
        if (!out) throw mscout::DataError("cannot write file: " + args.out_path);
        out << body.str();
    } else {
        std::cout << body.str();
    }
    return kExitOk;
}

struct BenchArgs {
    std::uint32_t families = 8;
    std::uint32_t datasets_per_family = 2;
    std::uint32_t features = 8;
    std::uint32_t bins = 8;
    std::uint64_t rows = 2000;
    std::uint64_t partition_size = 500;
    std::optional<std::uint64_t> seed;
    std::string sweep;  // r | K | L | bins
    std::string out_path;
    double t_js = 0.1;
};

struct BenchCorpus {
    std::vector<mscout::DatasetSketch> sketches;
    // Flattened whole-feature-space distribution per partition, plus the
    // exact pairwise divergences the sweep scores against.
    std::vector<mscout::ProbabilityVector> partitions;
    std::vector<std::uint64_t> labels;
};

BenchCorpus build_corpus(const BenchArgs& args, std::uint32_t bins) {
    mscout::WorkloadSpec spec;
    spec.families = args.families;
    spec.datasets_per_family = args.datasets_per_family;
    spec.features = args.features;
    spec.bins = bins;
    spec.rows = args.rows;
    if (args.seed.has_value()) spec.seed = *args.seed;

    BenchCorpus corpus;
    for (const auto& dataset : mscout::generate_workload(spec)) {
        mscout::IngestOptions options;
        options.dataset_id = dataset.dataset_id;
        options.partition_size_m = args.partition_size;
        options.bins_per_numeric_feature = bins;
        corpus.sketches.push_back(mscout::ingest_table(dataset.table, options));
    }

    // One shared label space: (feature index, bin) scattered per sketch via
    // sorted feature ids, identical across sketches by construction.
    const auto& first = corpus.sketches.front();
    const std::vector<std::uint64_t> fids = first.feature_ids();
    for (std::size_t f = 0; f < fids.size(); ++f) {
        const auto& desc = *first.descriptor(fids[f]);
        for (std::uint64_t b = 0; b < desc.bin_count(); ++b) {
            corpus.labels.push_back(mscout::key2(fids[f], b));
        }
    }
    for (const auto& sketch : corpus.sketches) {
        for (const auto& partition : sketch.partitions) {
            std::vector<double> weights;
            weights.reserve(corpus.labels.size());
            for (const std::uint64_t fid : sketch.feature_ids()) {
                const mscout::BinnedFeature* feature = partition.find(fid);
                for (std::uint64_t b = 0; b < sketch.descriptor(fid)->bin_count(); ++b) {
                    weights.push_back(
                        feature == nullptr ? 0.0 : static_cast<double>(feature->counts[b]));
                }
            }
            corpus.partitions.push_back(mscout::ProbabilityVector::from_weights(weights));
        }
    }
    return corpus;
}

struct SweepPoint {
    double recall = 0.0;
    double precision = 0.0;
    std::int64_t latency_ns = 0;
};

SweepPoint score_params(const BenchCorpus& corpus, const mscout::JsLshParams& params,
                        double t_js) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::vector<mscout::JsLshBand>> signatures;
    signatures.reserve(corpus.partitions.size());
    for (const auto& partition : corpus.partitions) {
        signatures.push_back(mscout::jslsh_signature(partition, corpus.labels, params));
    }
    std::uint64_t true_near = 0, declared = 0, correct = 0;
    for (std::size_t i = 0; i < corpus.partitions.size(); ++i) {
        for (std::size_t j = i + 1; j < corpus.partitions.size(); ++j) {
            const bool near =
                mscout::js_divergence(corpus.partitions[i], corpus.partitions[j]) <= t_js;
            const bool hit = mscout::any_band_collision(signatures[i], signatures[j]);
            true_near += near ? 1 : 0;
            declared += hit ? 1 : 0;
            correct += (near && hit) ? 1 : 0;
        }
    }
    const auto elapsed = std::chrono::steady_clock::now() - start;
    SweepPoint point;
    point.recall = true_near == 0
                       ? 0.0
                       : static_cast<double>(correct) / static_cast<double>(true_near);
    point.precision =
        declared == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(declared);
    point.latency_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed).count();
    return point;
}

int cmd_bench(const BenchArgs& args) {
    std::ostringstream out;
    out << "#mscout bench v1\n";
    out.precision(6);

    if (args.sweep.empty()) {
        // Head-to-head: engine search with LSH scoring vs brute-force exact
        // divergence over every table pair.
        const BenchCorpus corpus = build_corpus(args, args.bins);
        mscout::RegistryParams params;
        params.partition_size_m = args.partition_size;
        params.bins_per_numeric_feature = args.bins;
        mscout::Registry registry(params);
        const auto lsh_start = std::chrono::steady_clock::now();
        for (const auto& sketch : corpus.sketches) {
            mscout::ModelRecord record;
            record.model_id = "m-" + sketch.dataset_id;
            registry.register_model(std::move(record), sketch);
        }
        mscout::SearchEngine engine(registry);
        mscout::SearchConfig config;
        config.metric = mscout::SearchMetric::js;
        config.t1 = -1.0;
        config.t2 = 0.0;
        config.t_js = mscout::kMaxJsDivergence;
        config.exact_rescoring = false;
        config.top = 0;
        std::size_t lsh_hits = 0;
        for (const auto& sketch : corpus.sketches) {
            lsh_hits += engine.search(sketch, config).size();
        }
        const auto lsh_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                                std::chrono::steady_clock::now() - lsh_start)
                                .count();

        const auto exact_start = std::chrono::steady_clock::now();
        double checksum = 0.0;
        for (const auto& a : corpus.sketches) {
            for (const auto& b : corpus.sketches) {
                std::map<std::uint64_t, double> pa, pb;
                for (const std::uint64_t fid : a.feature_ids()) {
                    const auto agg = a.aggregate_feature(fid);
                    for (std::size_t bin = 0; bin < agg.counts.size(); ++bin) {
                        pa[mscout::key2(fid, bin)] += static_cast<double>(agg.counts[bin]);
                    }
                }
                for (const std::uint64_t fid : b.feature_ids()) {
                    const auto agg = b.aggregate_feature(fid);
                    for (std::size_t bin = 0; bin < agg.counts.size(); ++bin) {
                        pb[mscout::key2(fid, bin)] += static_cast<double>(agg.counts[bin]);
                    }
                }
                std::vector<std::uint64_t> keys;
                for (const auto& [k, v] : pa) keys.push_back(k);
                for (const auto& [k, v] : pb) {
                    if (pa.find(k) == pa.end()) keys.push_back(k);
                }
                std::sort(keys.begin(), keys.end());
                std::vector<double> wa, wb;
                for (const std::uint64_t k : keys) {
                    const auto ia = pa.find(k);
                    const auto ib = pb.find(k);
                    wa.push_back(ia == pa.end() ? 0.0 : ia->second);
                    wb.push_back(ib == pb.end() ? 0.0 : ib->second);
                }
                checksum += mscout::js_divergence(
                    mscout::ProbabilityVector::from_weights(wa),
                    mscout::ProbabilityVector::from_weights(wb));
            }
        }
        const auto exact_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                                  std::chrono::steady_clock::now() - exact_start)
                                  .count();
        out << "timing\ttables\t" << corpus.sketches.size() << "\tlsh_ns\t" << lsh_ns
            << "\texact_ns\t" << exact_ns << "\tspeedup\t"
            << (lsh_ns > 0 ? static_cast<double>(exact_ns) / static_cast<double>(lsh_ns)
                           : 0.0)
            << "\tlsh_hits\t" << lsh_hits << "\texact_checksum\t" << checksum << "\n";
    } else if (args.sweep == "r") {
        const BenchCorpus corpus = build_corpus(args, args.bins);
        for (const double r : {0.25, 0.5, 1.0, 2.0, 4.0}) {
            mscout::JsLshParams params;
            params.bucket_width = r;
            const SweepPoint point = score_params(corpus, params, args.t_js);
            out << "sweep\tr\t" << r << "\trecall\t" << point.recall << "\tprecision\t"
                << point.precision << "\tlatency_ns\t" << point.latency_ns << "\n";
        }
    } else if (args.sweep == "K") {
        const BenchCorpus corpus = build_corpus(args, args.bins);
        for (const std::uint32_t k : {2u, 4u, 8u, 16u}) {
            mscout::JsLshParams params;
            params.k = k;
            const SweepPoint point = score_params(corpus, params, args.t_js);
            out << "sweep\tK\t" << k << "\trecall\t" << point.recall << "\tprecision\t"
                << point.precision << "\tlatency_ns\t" << point.latency_ns << "\n";
        }
    } else if (args.sweep == "L") {
        const BenchCorpus corpus = build_corpus(args, args.bins);
        for (const std::uint32_t bands : {4u, 8u, 16u, 32u, 64u}) {
            mscout::JsLshParams params;
            params.num_bands = bands;
            const SweepPoint point = score_params(corpus, params, args.t_js);
            out << "sweep\tL\t" << bands << "\trecall\t" << point.recall
                << "\tprecision\t" << point.precision << "\tlatency_ns\t"
                << point.latency_ns << "\n";
        }
    } else if (args.sweep == "bins") {
        for (const std::uint32_t bins : {8u, 16u, 32u, 64u}) {
            const BenchCorpus corpus = build_corpus(args, bins);
            const mscout::JsLshParams params;
            const SweepPoint point = score_params(corpus, params, args.t_js);
            out << "sweep\tbins\t" << bins << "\trecall\t" << point.recall
                << "\tprecision\t" << point.precision << "\tlatency_ns\t"
                << point.latency_ns << "\n";
        }
    } else {
        throw mscout::ParamsError("--sweep must be one of r, K, L, bins");
    }

    if (!args.out_path.empty()) {
        std::ofstream file(args.out_path, std::ios::trunc);
        if (!file) throw mscout::DataError("cannot write file: " + args.out_path);
        file << out.str();
    }
    std::cout << out.str();
    return kExitOk;
}

struct InspectArgs {
    std::string registry_path;
    std::string model_id;
    bool as_json = false;
};

int cmd_inspect(const InspectArgs& args) {
    const mscout::Registry registry = mscout::Registry::load(args.registry_path);
    std::vector<std::string> ids;
    if (args.model_id.empty()) {
        ids = registry.model_ids();
    } else {
        ids.push_back(registry.get(args.model_id)->record.model_id);
    }

    if (args.as_json) {
        json models = json::array();
        for (const auto& id : ids) {
            const auto model = registry.get(id);
            json entry = mscout::record_to_json(model->record);
            entry["partitions"] = model->sketch.partitions.size();
            entry["total_rows"] = model->sketch.total_rows;
            entry["features"] = model->sketch.descriptors.size();
            models.push_back(std::move(entry));
        }
        std::cout << json{{"models", std::move(models)}}.dump() << "\n";
        return kExitOk;
    }

    std::cout << "#mscout inspect v1\n";
    std::cout << "#registry\t" << args.registry_path << "\tmodels\t" << registry.size()
              << "\tm\t" << registry.params().partition_size_m << "\tbins\t"
              << registry.params().bins_per_numeric_feature << "\n";
    std::cout.precision(6);
    for (const auto& id : ids) {
        const auto model = registry.get(id);
        std::cout << "model\t" << model->record.model_id << "\tdataset\t"
                  << model->record.dataset_id << "\tpartitions\t"
                  << model->sketch.partitions.size() << "\trows\t"
                  << model->sketch.total_rows << "\tfeatures\t"
                  << model->sketch.descriptors.size() << "\taccuracy\t";
        if (model->record.source_accuracy.has_value()) {
            std::cout << *model->record.source_accuracy;
        } else {
            std::cout << "-";
        }
        std::cout << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"model scout: sketch datasets, register models, search by fit"};
    app.require_subcommand(1);

    SketchArgs sketch_args;
    auto* sketch = app.add_subcommand("sketch", "sketch a CSV into a partitioned summary");
    sketch->add_option("csv", sketch_args.csv_path, "input CSV file")->required();
    sketch->add_option("--out", sketch_args.out_path, "output sketch file")->required();
    sketch->add_option("--schema", sketch_args.schema_path, "JSON schema with column kinds");
    sketch->add_option("--dataset-id", sketch_args.dataset_id,
                       "dataset id (default: CSV name)");
    sketch->add_option("--exclude", sketch_args.exclude, "columns to drop before sketching");
    sketch->add_option("--bins", sketch_args.bins, "bins per numeric feature");
    sketch->add_option("--partition-size", sketch_args.partition_size, "rows per partition");
    sketch->add_flag("--drop-residue", sketch_args.drop_residue,
                     "drop the final short partition");

    RegisterArgs register_args;
    auto* reg = app.add_subcommand("register", "add a model and its sketch to a registry");
    reg->add_option("registry", register_args.registry_path, "registry file")->required();
    reg->add_option("sketch", register_args.sketch_path, "sketch file")->required();
    reg->add_option("--model-id", register_args.model_id, "unique model id")->required();
    reg->add_option("--name", register_args.name, "display name");
    reg->add_option("--task", register_args.task, "task tag");
    reg->add_option("--notes", register_args.notes, "free-form notes");
    double accuracy_flag = -1.0;
    auto* accuracy_opt = reg->add_option("--source-accuracy", accuracy_flag,
                                         "accuracy on the training dataset, within [0, 1]");
    reg->add_flag("--create", register_args.create, "create the registry if absent");

    QueryArgs query_args;
    auto* query = app.add_subcommand("query", "rank registered models against a sketch");
    query->add_option("registry", query_args.registry_path, "registry file")->required();
    query->add_option("sketch", query_args.sketch_path, "query sketch file")->required();
    query->add_option("--metric", query_args.metric, "overlap|adaptivity|js|l2");
    query->add_option("--mode", query_args.mode, "distinct_target|pair_count");
    query->add_option("--t1", query_args.t1, "overlap ratio threshold");
    query->add_option("--t2", query_args.t2, "per-feature similarity threshold");
    query->add_option("--t-adaptivity", query_args.t_adaptivity, "adaptivity cutoff");
    query->add_option("--t-js", query_args.t_js, "divergence radius");
    query->add_option("--top", query_args.top, "result count, 0 keeps all");
    query->add_option("--exact-rescoring", query_args.rescoring, "on|off|auto");
    query->add_option("--out", query_args.out_path, "also write the report here");
    query->add_flag("--json", query_args.as_json, "machine-readable output");

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "compare metrics against an accuracy table");
    eval->add_option("registry", eval_args.registry_path, "registry file")->required();
    eval->add_option("--queries", eval_args.queries_dir, "directory of sketch files")
        ->required();
    eval->add_option("--truth", eval_args.truth_path, "accuracy CSV")->required();
    eval->add_option("--metrics", eval_args.metrics, "comma-separated metric list");
    eval->add_option("--t1", eval_args.t1, "overlap ratio threshold");
    eval->add_option("--t2", eval_args.t2, "per-feature similarity threshold");
    eval->add_option("--t-js", eval_args.t_js, "divergence radius");
    eval->add_option("--out", eval_args.out_path, "write the TSV report here");
    eval->add_flag("--baseline", eval_args.baseline,
                   "append the source-accuracy baseline row");

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "synthetic-workload timing and sweeps");
    bench->add_option("--families", bench_args.families, "workload families");
    bench->add_option("--datasets-per-family", bench_args.datasets_per_family,
                      "datasets per family");
    bench->add_option("--features", bench_args.features, "features per dataset");
    bench->add_option("--bins", bench_args.bins, "bins per feature");
    bench->add_option("--rows", bench_args.rows, "rows per dataset");
    bench->add_option("--partition-size", bench_args.partition_size, "rows per partition");
    std::uint64_t seed_flag = 0;
    auto* seed_opt =
        bench->add_option("--seed", seed_flag, "workload seed for benchmarking only");
    bench->add_option("--sweep", bench_args.sweep, "sweep r, K, L, or bins");
    bench->add_option("--t-js", bench_args.t_js, "divergence radius being tuned for");
    bench->add_option("--out", bench_args.out_path, "write the report here");

    InspectArgs inspect_args;
    auto* inspect = app.add_subcommand("inspect", "list registered models");
    inspect->add_option("registry", inspect_args.registry_path, "registry file")->required();
    inspect->add_option("--model", inspect_args.model_id, "show one model");
    inspect->add_flag("--json", inspect_args.as_json, "machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (accuracy_opt->count() > 0) register_args.source_accuracy = accuracy_flag;
        if (seed_opt->count() > 0) bench_args.seed = seed_flag;
        if (sketch->parsed()) return cmd_sketch(sketch_args);
        if (reg->parsed()) return cmd_register(register_args);
        if (query->parsed()) return cmd_query(query_args);
        if (eval->parsed()) return cmd_eval(eval_args);
        if (bench->parsed()) return cmd_bench(bench_args);
        if (inspect->parsed()) return cmd_inspect(inspect_args);
        std::cerr << "error: no subcommand\n";
        return kExitInput;
    } catch (const mscout::ConflictError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConflict;
    } catch (const mscout::CorruptionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorruption;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
}
