#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "rfs/numerics/beta.hpp"
#include "rfs/numerics/gaussian.hpp"

namespace rfs {

struct ReductionConfig {
    double prune_threshold = 1e-5;
    double merge_threshold = 4.0;  // squared Mahalanobis distance
    std::size_t max_components = 100;  // per group
};

/// Prune / merge / cap reduction shared by every mixture in the library.
///
/// `group(c)` partitions components (merging never crosses groups and the
/// cap applies per group). `near(heavy)` returns a predicate telling whether
/// another component lies within the merge threshold of `heavy`;
/// `merge(cluster)` collapses a cluster whose first element is the heaviest.
/// The surviving total weight is rescaled to the input total.
template <class Component, class GroupFn, class NearFn, class MergeFn>
[[nodiscard]] std::vector<Component> reduce_mixture(const std::vector<Component>& input,
                                                    const ReductionConfig& cfg, GroupFn group,
                                                    NearFn near, MergeFn merge) {
    double total_before = 0.0;
    for (const auto& c : input) total_before += c.weight;
    if (input.empty() || !(total_before > 0.0)) return {};

    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < input.size(); ++i) {
        if (input[i].weight >= cfg.prune_threshold) groups[group(input[i])].push_back(i);
    }

    std::vector<Component> output;
    for (auto& [key, members] : groups) {
        std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            return input[a].weight > input[b].weight;
        });
        std::vector<char> used(members.size(), 0);
        std::vector<Component> merged;
        std::vector<Component> cluster;
        for (std::size_t a = 0; a < members.size(); ++a) {
            if (used[a]) continue;
            const Component& heavy = input[members[a]];
            const auto is_near = near(heavy);
            cluster.clear();
            cluster.push_back(heavy);
            used[a] = 1;
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                if (!used[b] && is_near(input[members[b]])) {
                    cluster.push_back(input[members[b]]);
                    used[b] = 1;
                }
            }
            merged.push_back(cluster.size() == 1 ? cluster.front() : merge(std::span<const Component>(cluster)));
        }
        std::stable_sort(merged.begin(), merged.end(),
                         [](const Component& x, const Component& y) { return x.weight > y.weight; });
        if (merged.size() > cfg.max_components) merged.resize(cfg.max_components);
        output.insert(output.end(), merged.begin(), merged.end());
    }

    double total_after = 0.0;
    for (const auto& c : output) total_after += c.weight;
    if (total_after > 0.0) {
        const double scale = total_before / total_after;
        for (auto& c : output) c.weight *= scale;
    }
    return output;
}

/// Moment-matched Gaussian of a weighted set of Gaussians.
template <class Component, class DensityOf>
[[nodiscard]] GaussianDensity merge_gaussians(std::span<const Component> cluster, DensityOf density_of) {
    double total = 0.0;
    for (const auto& c : cluster) total += c.weight;
    const auto& first = density_of(cluster.front());
    Vector mean = Vector::Zero(first.mean.size());
    for (const auto& c : cluster) mean += c.weight * density_of(c).mean;
    mean /= total;
    Matrix cov = Matrix::Zero(first.covariance.rows(), first.covariance.cols());
    for (const auto& c : cluster) {
        const auto& d = density_of(c);
        const Vector diff = d.mean - mean;
        cov += c.weight * (d.covariance + diff * diff.transpose());
    }
    cov /= total;
    return {mean, symmetrized(cov)};
}

/// Moment-matched Beta of a weighted set of Betas.
template <class Component, class BetaOf>
[[nodiscard]] BetaDensity merge_betas(std::span<const Component> cluster, BetaOf beta_of) {
    double total = 0.0, first = 0.0, second = 0.0;
    for (const auto& c : cluster) {
        const BetaDensity& b = beta_of(c);
        const double mu = beta_mean(b);
        total += c.weight;
        first += c.weight * mu;
        second += c.weight * (beta_variance(b) + mu * mu);
    }
    const double mean = first / total;
    const double var = std::max(second / total - mean * mean, 0.0);
    return beta_from_moments(mean, var);
}

/// Predicate: squared Mahalanobis distance between the means below
/// `threshold` under both `heavy`'s and the candidate's covariance. A broad
/// component (e.g. a birth term) thus never swallows a tight one.
class MahalanobisGate {
public:
    MahalanobisGate(const GaussianDensity& heavy, double threshold)
        : mean_(heavy.mean), llt_(heavy.covariance), threshold_(threshold) {}

    [[nodiscard]] bool operator()(const GaussianDensity& other) const {
        const Vector d = other.mean - mean_;
        if (!(d.dot(llt_.solve(d)) < threshold_)) return false;
        return d.dot(Eigen::LLT<Matrix>(other.covariance).solve(d)) < threshold_;
    }

private:
    Vector mean_;
    Eigen::LLT<Matrix> llt_;
    double threshold_;
};

} // namespace rfs
