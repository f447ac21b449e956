#include "mscout/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace mscout {

namespace {

void require_same_dimension(std::size_t a, std::size_t b) {
    if (a != b) {
        throw DimensionError("dimension mismatch: " + std::to_string(a) + " vs " +
                             std::to_string(b));
    }
    if (a == 0) throw EmptyDistributionError("zero-dimensional distribution");
}

std::vector<double> smoothed(std::span<const double> v, double smoothing) {
    std::vector<double> out(v.begin(), v.end());
    const double norm = 1.0 + smoothing * static_cast<double>(v.size());
    for (double& x : out) x = (x + smoothing) / norm;
    return out;
}

} // namespace

double kl_divergence(const ProbabilityVector& p, const ProbabilityVector& q, double smoothing) {
    require_same_dimension(p.dimension(), q.dimension());
    if (smoothing < 0.0) throw ParamsError("smoothing must be >= 0");
    std::span<const double> ps = p.entries();
    std::span<const double> qs = q.entries();
    std::vector<double> pbuf, qbuf;
    if (smoothing > 0.0) {
        pbuf = smoothed(ps, smoothing);
        qbuf = smoothed(qs, smoothing);
        ps = pbuf;
        qs = qbuf;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (ps[i] == 0.0) continue;  // 0 * log(0/q) = 0
        if (qs[i] == 0.0) return std::numeric_limits<double>::infinity();
        sum += ps[i] * std::log(ps[i] / qs[i]);
    }
    return std::max(sum, 0.0);
}

double js_divergence(const ProbabilityVector& p, const ProbabilityVector& q) {
    require_same_dimension(p.dimension(), q.dimension());
    const std::span<const double> ps = p.entries();
    const std::span<const double> qs = q.entries();
    double sum = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double m = ps[i] + qs[i];
        if (m == 0.0) continue;
        if (ps[i] > 0.0) sum += ps[i] * std::log(2.0 * ps[i] / m);
        if (qs[i] > 0.0) sum += qs[i] * std::log(2.0 * qs[i] / m);
    }
    return std::clamp(0.5 * sum, 0.0, kMaxJsDivergence);
}

double hellinger_squared(const ProbabilityVector& p, const ProbabilityVector& q) {
    require_same_dimension(p.dimension(), q.dimension());
    const std::span<const double> ps = p.entries();
    const std::span<const double> qs = q.entries();
    double affinity = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) affinity += std::sqrt(ps[i] * qs[i]);
    return std::clamp(1.0 - affinity, 0.0, 1.0);
}

double l2_distance(std::span<const double> p, std::span<const double> q) {
    require_same_dimension(p.size(), q.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - q[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double l2_distance(const ProbabilityVector& p, const ProbabilityVector& q) {
    return l2_distance(p.entries(), q.entries());
}

Jaccard jaccard_distinct(const TokenMultiset& a, const TokenMultiset& b) {
    if (a.empty() && b.empty()) return {0.0, true};
    std::size_t inter = 0;
    std::size_t i = 0, j = 0;
    while (i < a.items.size() && j < b.items.size()) {
        if (a.items[i].first == b.items[j].first) {
            ++inter;
            ++i;
            ++j;
        } else if (a.items[i].first < b.items[j].first) {
            ++i;
        } else {
            ++j;
        }
    }
    const std::size_t uni = a.items.size() + b.items.size() - inter;
    return {static_cast<double>(inter) / static_cast<double>(uni), false};
}

namespace {

// Scatter positions of each label inside the sorted union label list.
std::vector<std::size_t> union_scatter(const std::vector<std::uint64_t>& labels,
                                       const std::vector<std::uint64_t>& union_labels) {
    std::vector<std::size_t> scatter(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto it = std::lower_bound(union_labels.begin(), union_labels.end(), labels[i]);
        scatter[i] = static_cast<std::size_t>(it - union_labels.begin());
    }
    return scatter;
}

std::optional<ProbabilityVector> scatter_flat(std::optional<ProbabilityVector> flat,
                                              const std::vector<std::size_t>& scatter,
                                              std::size_t dim) {
    if (!flat.has_value() || scatter.empty()) return flat;
    std::vector<double> out(dim, 0.0);
    for (std::size_t i = 0; i < flat->dimension(); ++i) out[scatter[i]] += flat->entries()[i];
    return ProbabilityVector::from_weights(std::move(out));
}

} // namespace

AdaptivityResult exact_adaptivity(const DatasetSketch& source, const DatasetSketch& target,
                                  std::span<const std::uint64_t> shared_features, double t_js,
                                  AdaptivityMode mode) {
    if (t_js < 0.0) throw ParamsError("t_js must be >= 0");
    const auto ids = detail::sorted_unique_ids(shared_features);
    if (ids.empty()) throw ProjectionError("shared feature subset is empty");

    // The two sketches may bin a shared feature differently (categorical
    // vocabularies fit on different data); comparisons scatter both sides
    // into the union of bin labels so slots line up. Identical label lists
    // skip the scatter.
    const std::vector<std::uint64_t> source_labels = subspace_labels(source, ids);
    const std::vector<std::uint64_t> target_labels = subspace_labels(target, ids);
    std::vector<std::size_t> source_scatter, target_scatter;
    std::size_t dim = source_labels.size();
    if (source_labels != target_labels) {
        std::vector<std::uint64_t> union_labels = source_labels;
        union_labels.insert(union_labels.end(), target_labels.begin(), target_labels.end());
        std::sort(union_labels.begin(), union_labels.end());
        union_labels.erase(std::unique(union_labels.begin(), union_labels.end()),
                           union_labels.end());
        source_scatter = union_scatter(source_labels, union_labels);
        target_scatter = union_scatter(target_labels, union_labels);
        dim = union_labels.size();
    }

    std::vector<ProbabilityVector> source_flats;
    source_flats.reserve(source.partitions.size());
    for (const auto& partition : source.partitions) {
        auto flat = scatter_flat(try_flatten(source, partition, ids), source_scatter, dim);
        if (flat.has_value()) source_flats.push_back(std::move(*flat));
    }

    AdaptivityResult result;
    result.source_partitions = source_flats.size();
    result.target_partitions = target.partitions.size();

    std::uint64_t matched = 0;
    for (const auto& partition : target.partitions) {
        auto flat = scatter_flat(try_flatten(target, partition, ids), target_scatter, dim);
        if (!flat.has_value()) continue;
        if (mode == AdaptivityMode::distinct_target) {
            for (const auto& src : source_flats) {
                if (js_divergence(src, *flat) <= t_js) {
                    ++matched;
                    break;
                }
            }
        } else {
            for (const auto& src : source_flats) {
                if (js_divergence(src, *flat) <= t_js) ++matched;
            }
        }
    }
    result.matches = matched;

    const std::uint64_t nt = result.target_partitions;
    if (mode == AdaptivityMode::distinct_target) {
        result.score = nt == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(nt);
    } else {
        const std::uint64_t pairs = source.partitions.size() * nt;
        result.score = pairs == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(pairs);
    }
    return result;
}

} // namespace mscout
