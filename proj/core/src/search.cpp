#include "mscout/search.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mscout {

namespace {

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

// One candidate's comparison space. Each side flattens over its own matched
// features; exact comparisons scatter both into the union of bin labels so
// slots line up, while LSH comparisons need no alignment at all because
// projection components are keyed by label.
struct AlignedSubspace {
    std::vector<std::uint64_t> model_fids;
    std::vector<std::uint64_t> query_fids;
    std::vector<std::uint64_t> model_labels;
    std::vector<std::uint64_t> query_labels;
    std::vector<std::uint64_t> union_labels;
    std::vector<std::size_t> model_scatter;
    std::vector<std::size_t> query_scatter;
};

std::vector<std::size_t> scatter_indices(const std::vector<std::uint64_t>& labels,
                                         const std::vector<std::uint64_t>& union_labels) {
    std::vector<std::size_t> scatter(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto it = std::lower_bound(union_labels.begin(), union_labels.end(), labels[i]);
        scatter[i] = static_cast<std::size_t>(it - union_labels.begin());
    }
    return scatter;
}

AlignedSubspace make_subspace(const DatasetSketch& model_sketch, const DatasetSketch& query,
                              const std::vector<FeatureMatch>& matches) {
    AlignedSubspace s;
    s.model_fids.reserve(matches.size());
    s.query_fids.reserve(matches.size());
    for (const auto& m : matches) {
        s.model_fids.push_back(m.model_feature_id);
        s.query_fids.push_back(m.query_feature_id);
    }
    s.model_fids = detail::sorted_unique_ids(s.model_fids);
    s.query_fids = detail::sorted_unique_ids(s.query_fids);
    s.model_labels = subspace_labels(model_sketch, s.model_fids);
    s.query_labels = subspace_labels(query, s.query_fids);
    s.union_labels = s.model_labels;
    s.union_labels.insert(s.union_labels.end(), s.query_labels.begin(), s.query_labels.end());
    std::sort(s.union_labels.begin(), s.union_labels.end());
    s.union_labels.erase(std::unique(s.union_labels.begin(), s.union_labels.end()),
                         s.union_labels.end());
    s.model_scatter = scatter_indices(s.model_labels, s.union_labels);
    s.query_scatter = scatter_indices(s.query_labels, s.union_labels);
    return s;
}

std::optional<ProbabilityVector> scatter_vector(const std::optional<ProbabilityVector>& flat,
                                                const std::vector<std::size_t>& scatter,
                                                std::size_t dim) {
    if (!flat.has_value()) return std::nullopt;
    std::vector<double> out(dim, 0.0);
    for (std::size_t i = 0; i < flat->dimension(); ++i) {
        out[scatter[i]] += flat->entries()[i];
    }
    return ProbabilityVector::from_weights(std::move(out));
}

std::optional<ProbabilityVector> scattered_whole(const DatasetSketch& sketch,
                                                 const std::vector<std::uint64_t>& fids,
                                                 const std::vector<std::size_t>& scatter,
                                                 std::size_t dim) {
    try {
        return scatter_vector(flatten_whole(sketch, fids), scatter, dim);
    } catch (const EmptyDistributionError&) {
        return std::nullopt;
    }
}

using SignatureList = std::vector<std::vector<JsLshBand>>;  // empty inner = no mass

SignatureList hash_partitions(const DatasetSketch& sketch,
                              const std::vector<std::uint64_t>& fids,
                              const SubspaceProjection& projection) {
    SignatureList sigs;
    sigs.reserve(sketch.partitions.size());
    for (const auto& partition : sketch.partitions) {
        auto flat = try_flatten(sketch, partition, fids);
        if (flat.has_value()) {
            sigs.push_back(projection.hash_distribution(*flat));
        } else {
            sigs.emplace_back();
        }
    }
    return sigs;
}

SignatureList hash_whole(const DatasetSketch& sketch, const std::vector<std::uint64_t>& fids,
                         const SubspaceProjection& projection) {
    SignatureList sigs;
    try {
        sigs.push_back(projection.hash_distribution(flatten_whole(sketch, fids)));
    } catch (const EmptyDistributionError&) {
        sigs.emplace_back();
    }
    return sigs;
}

struct PartitionMatchStats {
    std::uint64_t matched_targets = 0;
    std::uint64_t matched_pairs = 0;
};

// Banded nearest-partition matching. The side with more usable partitions is
// indexed into per-band hash tables and the other side probes, so the table
// is built once over the larger collection.
PartitionMatchStats match_partitions(const SignatureList& source, const SignatureList& target) {
    std::vector<std::uint32_t> src_usable, tgt_usable;
    for (std::uint32_t i = 0; i < source.size(); ++i) {
        if (!source[i].empty()) src_usable.push_back(i);
    }
    for (std::uint32_t i = 0; i < target.size(); ++i) {
        if (!target[i].empty()) tgt_usable.push_back(i);
    }
    PartitionMatchStats stats;
    if (src_usable.empty() || tgt_usable.empty()) return stats;

    const bool index_source = src_usable.size() >= tgt_usable.size();
    const SignatureList& indexed = index_source ? source : target;
    const std::vector<std::uint32_t>& indexed_ids = index_source ? src_usable : tgt_usable;
    const SignatureList& probes = index_source ? target : source;
    const std::vector<std::uint32_t>& probe_ids = index_source ? tgt_usable : src_usable;

    const std::size_t num_bands = indexed[indexed_ids.front()].size();
    std::vector<std::unordered_map<std::uint64_t, std::vector<std::uint32_t>>> tables(num_bands);
    for (std::uint32_t id : indexed_ids) {
        for (std::size_t b = 0; b < num_bands; ++b) {
            tables[b][indexed[id][b].digest()].push_back(id);
        }
    }

    std::vector<char> target_hit(target.size(), 0);
    for (std::uint32_t probe : probe_ids) {
        std::set<std::uint32_t> collided;
        for (std::size_t b = 0; b < num_bands; ++b) {
            auto it = tables[b].find(probes[probe][b].digest());
            if (it == tables[b].end()) continue;
            for (std::uint32_t id : it->second) {
                if (indexed[id][b].values == probes[probe][b].values) collided.insert(id);
            }
        }
        stats.matched_pairs += collided.size();
        if (index_source) {
            if (!collided.empty()) target_hit[probe] = 1;
        } else {
            for (std::uint32_t id : collided) target_hit[id] = 1;
        }
    }
    for (char hit : target_hit) stats.matched_targets += hit;
    return stats;
}

PartitionMatchStats match_partitions_exact(const std::vector<ProbabilityVector>& source,
                                           const std::vector<std::optional<ProbabilityVector>>& target,
                                           double t_js) {
    PartitionMatchStats stats;
    for (const auto& tgt : target) {
        if (!tgt.has_value()) continue;
        bool matched = false;
        for (const auto& src : source) {
            if (js_divergence(src, *tgt) <= t_js) {
                matched = true;
                ++stats.matched_pairs;
            }
        }
        if (matched) ++stats.matched_targets;
    }
    return stats;
}

} // namespace

const char* to_string(SearchMetric metric) {
    switch (metric) {
    case SearchMetric::overlap: return "overlap";
    case SearchMetric::adaptivity: return "adaptivity";
    case SearchMetric::js: return "js";
    case SearchMetric::l2: return "l2";
    }
    return "unknown";
}

SearchMetric search_metric_from_string(std::string_view s) {
    if (s == "overlap") return SearchMetric::overlap;
    if (s == "adaptivity") return SearchMetric::adaptivity;
    if (s == "js") return SearchMetric::js;
    if (s == "l2") return SearchMetric::l2;
    throw ParamsError("unknown metric: " + std::string(s));
}

void SearchConfig::validate() const {
    if (!(t1 >= -1.0 && t1 <= 1.0)) throw ParamsError("t1 must be in [-1, 1]");
    if (!(t2 >= 0.0 && t2 <= 1.0)) throw ParamsError("t2 must be in [0, 1]");
    if (!(t_adaptivity >= 0.0 && t_adaptivity <= 1.0)) {
        throw ParamsError("t_adaptivity must be in [0, 1]");
    }
    if (!(t_js >= 0.0)) throw ParamsError("t_js must be >= 0");
    if (jslsh.has_value()) jslsh->validate();
}

bool SearchConfig::rescoring_effective(std::size_t candidate_count) const {
    return exact_rescoring.value_or(candidate_count <= kDefaultRescoreCandidateLimit);
}

SearchEngine::SearchEngine(const Registry& registry) : registry_(registry) {}

std::size_t SearchEngine::projection_cache_entries() const {
    std::shared_lock lock(cache_mu_);
    return projections_.size();
}

std::size_t SearchEngine::signature_cache_entries() const {
    std::shared_lock lock(cache_mu_);
    return signatures_.size();
}

void SearchEngine::clear_caches() const {
    std::unique_lock lock(cache_mu_);
    projections_.clear();
    signatures_.clear();
}

std::shared_ptr<const SubspaceProjection> SearchEngine::projection_for(
    const JsLshParams& params, const std::vector<std::uint64_t>& labels) const {
    const std::string key = hex64(params.digest()) + "|" + hex64(labels_digest(labels));
    {
        std::shared_lock lock(cache_mu_);
        auto it = projections_.find(key);
        if (it != projections_.end()) return it->second;
    }
    auto projection = std::make_shared<const SubspaceProjection>(params, labels);
    std::unique_lock lock(cache_mu_);
    auto [it, inserted] = projections_.emplace(key, std::move(projection));
    return it->second;
}

std::shared_ptr<const std::vector<std::vector<JsLshBand>>> SearchEngine::model_signatures(
    const RegisteredModel& model, const JsLshParams& params,
    const std::vector<std::uint64_t>& model_fids, const std::vector<std::uint64_t>& labels,
    bool whole_dataset) const {
    const std::string key = model.record.model_id + "|" + hex64(params.digest()) + "|" +
                            hex64(labels_digest(labels)) + (whole_dataset ? "|w" : "|p");
    {
        std::shared_lock lock(cache_mu_);
        auto it = signatures_.find(key);
        if (it != signatures_.end()) return it->second;
    }
    auto projection = projection_for(params, labels);
    auto sigs = std::make_shared<SignatureList>(
        whole_dataset ? hash_whole(model.sketch, model_fids, *projection)
                      : hash_partitions(model.sketch, model_fids, *projection));
    std::unique_lock lock(cache_mu_);
    auto [it, inserted] = signatures_.emplace(key, std::move(sigs));
    return it->second;
}

std::vector<SearchEngine::Candidate> SearchEngine::overlap_stage(
    const Registry::State& state, const DatasetSketch& query, const SearchConfig& config) const {
    const MinHashParams& mh = registry_.params().minhash;

    struct QuerySig {
        std::uint64_t fid = 0;
        std::vector<MinHashBand> bands;
    };
    std::vector<QuerySig> qsigs;
    for (const auto& desc : query.descriptors) {
        const BinnedFeature agg = query.aggregate_feature(desc.feature_id);
        const TokenMultiset tokens = expand_feature(agg, desc);
        if (tokens.empty()) continue;
        qsigs.push_back({desc.feature_id, minhash_signature(tokens, mh)});
    }

    std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> pairs;
    for (std::uint32_t qi = 0; qi < qsigs.size(); ++qi) {
        for (const auto& band : qsigs[qi].bands) {
            const auto& table = state.bands[band.band];
            auto it = table.find(band.digest());
            if (it == table.end()) continue;
            for (const Posting& posting : it->second) {
                const auto& mband =
                    state.models[posting.model]->signatures[posting.feature].bands[band.band];
                if (mband.values == band.values) {
                    pairs.insert({posting.model, posting.feature, qi});
                }
            }
        }
    }

    struct ScoredPair {
        std::uint32_t model = 0;
        std::uint64_t model_fid = 0;
        std::uint64_t query_fid = 0;
        double est = 0.0;
    };
    std::vector<ScoredPair> scored;
    for (const auto& [m, mf, qi] : pairs) {
        const double est =
            minhash_estimate(state.models[m]->signatures[mf].bands, qsigs[qi].bands);
        if (est > config.t2) {
            scored.push_back(
                {m, state.models[m]->signatures[mf].feature_id, qsigs[qi].fid, est});
        }
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredPair& a, const ScoredPair& b) {
        if (a.model != b.model) return a.model < b.model;
        if (a.est != b.est) return a.est > b.est;
        if (a.query_fid != b.query_fid) return a.query_fid < b.query_fid;
        return a.model_fid < b.model_fid;
    });

    std::vector<Candidate> candidates;
    const double query_features = static_cast<double>(query.descriptors.size());
    std::size_t i = 0;
    while (i < scored.size()) {
        const std::uint32_t model = scored[i].model;
        std::set<std::uint64_t> used_q, used_m;
        Candidate candidate;
        candidate.model = model;
        for (; i < scored.size() && scored[i].model == model; ++i) {
            const auto& pair = scored[i];
            if (used_q.count(pair.query_fid) != 0 || used_m.count(pair.model_fid) != 0) continue;
            used_q.insert(pair.query_fid);
            used_m.insert(pair.model_fid);
            candidate.matches.push_back({pair.query_fid, pair.model_fid, pair.est});
        }
        candidate.overlap_ratio =
            static_cast<double>(candidate.matches.size()) / query_features;
        if (candidate.overlap_ratio > config.t1) candidates.push_back(std::move(candidate));
    }
    std::sort(candidates.begin(), candidates.end(),
              [&](const Candidate& a, const Candidate& b) {
                  return state.models[a.model]->record.model_id <
                         state.models[b.model]->record.model_id;
              });
    return candidates;
}

std::vector<SearchHit> SearchEngine::search(const DatasetSketch& query,
                                            const SearchConfig& config) const {
    config.validate();
    query.validate();
    auto state = registry_.snapshot();
    std::vector<SearchHit> hits;
    if (state->models.empty()) return hits;

    const std::vector<Candidate> candidates = overlap_stage(*state, query, config);
    if (candidates.empty()) return hits;
    const bool rescore = config.rescoring_effective(candidates.size());
    const JsLshParams jslsh = config.jslsh.value_or(registry_.params().jslsh);

    // Query-side work reused across candidates with the same matched subspace.
    std::unordered_map<std::string, std::shared_ptr<const SignatureList>> query_sigs;
    auto query_signatures = [&](const std::vector<std::uint64_t>& fids,
                                const std::vector<std::uint64_t>& labels,
                                bool whole) -> std::shared_ptr<const SignatureList> {
        const std::string key = hex64(labels_digest(labels)) + (whole ? "|w" : "|p");
        auto it = query_sigs.find(key);
        if (it != query_sigs.end()) return it->second;
        auto projection = projection_for(jslsh, labels);
        auto sigs = std::make_shared<SignatureList>(
            whole ? hash_whole(query, fids, *projection)
                  : hash_partitions(query, fids, *projection));
        query_sigs.emplace(key, sigs);
        return sigs;
    };

    for (const Candidate& candidate : candidates) {
        const RegisteredModel& model = *state->models[candidate.model];
        SearchHit hit;
        hit.model_id = model.record.model_id;
        hit.overlap_ratio = candidate.overlap_ratio;
        hit.matched_features = candidate.matches;

        if (config.metric == SearchMetric::overlap) {
            hit.score = hit.value = candidate.overlap_ratio;
            hit.exact = false;
            hits.push_back(std::move(hit));
            continue;
        }

        const AlignedSubspace subspace = make_subspace(model.sketch, query, candidate.matches);
        const std::size_t dim = subspace.union_labels.size();

        if (config.metric == SearchMetric::adaptivity) {
            hit.target_partitions = query.partitions.size();
            PartitionMatchStats stats;
            if (rescore) {
                std::vector<ProbabilityVector> src;
                for (const auto& partition : model.sketch.partitions) {
                    auto flat = scatter_vector(
                        try_flatten(model.sketch, partition, subspace.model_fids),
                        subspace.model_scatter, dim);
                    if (flat.has_value()) src.push_back(std::move(*flat));
                }
                std::vector<std::optional<ProbabilityVector>> tgt;
                tgt.reserve(query.partitions.size());
                for (const auto& partition : query.partitions) {
                    tgt.push_back(scatter_vector(
                        try_flatten(query, partition, subspace.query_fids),
                        subspace.query_scatter, dim));
                }
                stats = match_partitions_exact(src, tgt, config.t_js);
                hit.exact = true;
                hit.source_partitions = src.size();
            } else {
                auto src = model_signatures(model, jslsh, subspace.model_fids,
                                            subspace.model_labels, false);
                auto tgt = query_signatures(subspace.query_fids, subspace.query_labels, false);
                stats = match_partitions(*src, *tgt);
                hit.exact = false;
                std::uint64_t usable = 0;
                for (const auto& sig : *src) usable += sig.empty() ? 0 : 1;
                hit.source_partitions = usable;
            }
            const auto nt = static_cast<double>(query.partitions.size());
            const auto ns = static_cast<double>(model.sketch.partitions.size());
            if (config.adaptivity_mode == AdaptivityMode::distinct_target) {
                hit.num_matches = stats.matched_targets;
                hit.value = nt == 0 ? 0.0 : static_cast<double>(stats.matched_targets) / nt;
            } else {
                hit.num_matches = stats.matched_pairs;
                hit.value =
                    ns * nt == 0 ? 0.0 : static_cast<double>(stats.matched_pairs) / (ns * nt);
            }
            hit.score = hit.value;
            if (hit.value >= config.t_adaptivity) hits.push_back(std::move(hit));
            continue;
        }

        if (config.metric == SearchMetric::js) {
            hit.source_partitions = 1;
            hit.target_partitions = 1;
            if (rescore) {
                auto p = scattered_whole(model.sketch, subspace.model_fids,
                                         subspace.model_scatter, dim);
                auto q = scattered_whole(query, subspace.query_fids, subspace.query_scatter, dim);
                if (!p.has_value() || !q.has_value()) continue;
                const double js = js_divergence(*p, *q);
                if (js > config.t_js) continue;
                hit.value = js;
                hit.score = -js;
                hit.exact = true;
                hit.num_matches = 1;
            } else {
                auto src = model_signatures(model, jslsh, subspace.model_fids,
                                            subspace.model_labels, true);
                auto tgt = query_signatures(subspace.query_fids, subspace.query_labels, true);
                if (src->front().empty() || tgt->front().empty()) continue;
                const double rate = band_collision_rate(src->front(), tgt->front());
                if (rate == 0.0) continue;
                const double c = estimate_l2_from_collisions(rate, jslsh);
                hit.value = std::min(0.5 * c * c, kMaxJsDivergence);
                hit.score = -hit.value;
                hit.exact = false;
                hit.num_matches =
                    static_cast<std::uint64_t>(std::llround(rate * jslsh.num_bands));
            }
            hits.push_back(std::move(hit));
            continue;
        }

        // SearchMetric::l2, exact center distance
        try {
            auto p = scatter_vector(center_vector(model.sketch, subspace.model_fids),
                                    subspace.model_scatter, dim);
            auto q = scatter_vector(center_vector(query, subspace.query_fids),
                                    subspace.query_scatter, dim);
            hit.value = l2_distance(*p, *q);
        } catch (const EmptyDistributionError&) {
            continue;
        }
        hit.score = -hit.value;
        hit.exact = true;
        hit.source_partitions = model.sketch.partitions.size();
        hit.target_partitions = query.partitions.size();
        hits.push_back(std::move(hit));
    }

    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.model_id < b.model_id;
    });
    if (config.top > 0 && hits.size() > config.top) hits.resize(config.top);
    return hits;
}

} // namespace mscout
