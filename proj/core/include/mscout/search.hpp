#pragma once

#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mscout/metrics.hpp"
#include "mscout/registry.hpp"

namespace mscout {

enum class SearchMetric { overlap, adaptivity, js, l2 };
const char* to_string(SearchMetric metric);
SearchMetric search_metric_from_string(std::string_view s);

struct SearchConfig {
    SearchMetric metric = SearchMetric::adaptivity;
    // Candidate gate: a model passes when (matched features / query features) > t1,
    // where two features match when their estimated bin-token jaccard > t2.
    double t1 = 0.5;
    double t2 = 0.5;
    // Adaptivity keeps models with score >= t_adaptivity; partition pairs (and
    // whole datasets under the js metric) match when JS divergence <= t_js.
    double t_adaptivity = 0.5;
    double t_js = 0.1;
    AdaptivityMode adaptivity_mode = AdaptivityMode::distinct_target;
    // Unset: rescore exactly when the candidate set is small enough that the
    // exact pass costs less than its precision is worth.
    std::optional<bool> exact_rescoring;
    std::optional<JsLshParams> jslsh;  // unset: the registry's pinned params
    std::size_t top = 10;              // 0 keeps every hit

    bool rescoring_effective(std::size_t candidate_count) const;
    void validate() const;
};

inline constexpr std::size_t kDefaultRescoreCandidateLimit = 64;

struct FeatureMatch {
    std::uint64_t query_feature_id = 0;
    std::uint64_t model_feature_id = 0;
    double estimated_jaccard = 0.0;
};

struct SearchHit {
    std::string model_id;
    double score = 0.0;  // ranking key, higher = better fit
    double value = 0.0;  // the metric's own value (adaptivity fraction, JS, L2, overlap)
    bool exact = false;  // true when value came from exact rescoring
    double overlap_ratio = 0.0;
    std::vector<FeatureMatch> matched_features;
    std::uint64_t num_matches = 0;
    std::uint64_t source_partitions = 0;
    std::uint64_t target_partitions = 0;
};

// Stateless with respect to results; holds only memoized projections and
// model-side signatures, keyed by content digests, so concurrent searches
// are safe and repeat searches over the same schema amortize the hashing.
class SearchEngine {
public:
    explicit SearchEngine(const Registry& registry);

    std::vector<SearchHit> search(const DatasetSketch& query, const SearchConfig& config) const;

    const Registry& registry() const { return registry_; }
    std::size_t projection_cache_entries() const;
    std::size_t signature_cache_entries() const;
    void clear_caches() const;

    // Shared-subspace projection, memoized across searches.
    std::shared_ptr<const SubspaceProjection> projection_for(
        const JsLshParams& params, const std::vector<std::uint64_t>& labels) const;

private:
    struct Candidate {
        std::uint32_t model = 0;
        double overlap_ratio = 0.0;
        std::vector<FeatureMatch> matches;
    };

    std::vector<Candidate> overlap_stage(const Registry::State& state,
                                         const DatasetSketch& query,
                                         const SearchConfig& config) const;

    std::shared_ptr<const std::vector<std::vector<JsLshBand>>> model_signatures(
        const RegisteredModel& model, const JsLshParams& params,
        const std::vector<std::uint64_t>& model_fids,
        const std::vector<std::uint64_t>& labels, bool whole_dataset) const;

    const Registry& registry_;
    mutable std::shared_mutex cache_mu_;
    mutable std::unordered_map<std::string, std::shared_ptr<const SubspaceProjection>>
        projections_;
    mutable std::unordered_map<std::string,
                               std::shared_ptr<const std::vector<std::vector<JsLshBand>>>>
        signatures_;
};

} // namespace mscout
