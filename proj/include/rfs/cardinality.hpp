#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "rfs/numerics/combinatorics.hpp"
#include "rfs/numerics/log_weight.hpp"

namespace rfs {

/// Probability mass over object counts 0..N_max.
class CardinalityDistribution {
public:
    CardinalityDistribution() : probs_{1.0} {}
    explicit CardinalityDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
        if (probs_.empty()) throw std::invalid_argument("cardinality: empty support");
        for (double p : probs_) {
            if (!(p >= 0.0) || !std::isfinite(p)) {
                throw std::invalid_argument("cardinality: entries must be finite and >= 0");
            }
        }
    }

    static CardinalityDistribution delta(std::size_t n, std::size_t n_max) {
        std::vector<double> p(std::max(n, n_max) + 1, 0.0);
        p[n] = 1.0;
        return CardinalityDistribution(std::move(p));
    }

    /// Poisson(mean) truncated to 0..n_max and renormalized.
    static CardinalityDistribution poisson(double mean, std::size_t n_max) {
        std::vector<double> p(n_max + 1);
        for (std::size_t n = 0; n <= n_max; ++n) p[n] = std::exp(log_poisson(n, mean));
        CardinalityDistribution out(std::move(p));
        out.normalize();
        return out;
    }

    [[nodiscard]] std::size_t max_count() const { return probs_.size() - 1; }
    [[nodiscard]] std::size_t size() const { return probs_.size(); }
    [[nodiscard]] double operator[](std::size_t n) const { return n < probs_.size() ? probs_[n] : 0.0; }
    [[nodiscard]] const std::vector<double>& probs() const { return probs_; }

    [[nodiscard]] double sum() const { return std::accumulate(probs_.begin(), probs_.end(), 0.0); }

    [[nodiscard]] double mean() const {
        double m = 0.0;
        for (std::size_t n = 0; n < probs_.size(); ++n) m += static_cast<double>(n) * probs_[n];
        return m;
    }

    /// Posterior mode; ties resolve to the smaller count.
    [[nodiscard]] std::size_t mode() const {
        std::size_t best = 0;
        for (std::size_t n = 1; n < probs_.size(); ++n) {
            if (probs_[n] > probs_[best]) best = n;
        }
        return best;
    }

    void normalize() {
        const double total = sum();
        if (!(total > 0.0)) throw std::domain_error("cardinality: zero total mass");
        for (double& p : probs_) p /= total;
    }

    /// Zero-pads the support up to n_max (never shrinks).
    void extend(std::size_t n_max) {
        if (n_max + 1 > probs_.size()) probs_.resize(n_max + 1, 0.0);
    }

    /// Drops support above n_max and renormalizes. Returns the discarded mass.
    double truncate(std::size_t n_max) {
        if (probs_.size() <= n_max + 1) return 0.0;
        const double dropped =
            std::accumulate(probs_.begin() + static_cast<std::ptrdiff_t>(n_max + 1), probs_.end(), 0.0);
        probs_.resize(n_max + 1);
        normalize();
        return dropped;
    }

private:
    std::vector<double> probs_;
};

/// Independent binomial thinning: each of the l objects survives with
/// probability `keep`. Returns Σ_l C(l,j) ρ(l) keep^j (1-keep)^(l-j).
[[nodiscard]] inline CardinalityDistribution thin(const CardinalityDistribution& rho, double keep) {
    if (!(keep >= 0.0 && keep <= 1.0)) {
        throw std::domain_error("thin: survival fraction outside [0,1]");
    }
    const std::size_t size = rho.size();
    std::vector<double> out(size, 0.0);
    const double log_keep = std::log(keep);
    const double log_drop = std::log1p(-keep);
    std::vector<double> log_fact(size);
    for (std::size_t n = 0; n < size; ++n) log_fact[n] = std::lgamma(static_cast<double>(n) + 1.0);
    for (std::size_t l = 0; l < size; ++l) {
        if (rho[l] <= 0.0) continue;
        const double log_rho = std::log(rho[l]);
        for (std::size_t j = 0; j <= l; ++j) {
            const double lw = log_fact[l] - log_fact[j] - log_fact[l - j] + log_rho +
                              (j == 0 ? 0.0 : static_cast<double>(j) * log_keep) +
                              (l == j ? 0.0 : static_cast<double>(l - j) * log_drop);
            if (lw > kNegInf) out[j] += std::exp(lw);
        }
    }
    return CardinalityDistribution(std::move(out));
}

/// Distribution of the sum of two independent counts, support capped at
/// n_max. `dropped_mass` receives the probability lost to the cap before
/// renormalization.
[[nodiscard]] inline CardinalityDistribution convolve(const CardinalityDistribution& a,
                                                      const CardinalityDistribution& b,
                                                      std::size_t n_max,
                                                      double* dropped_mass = nullptr) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    CardinalityDistribution result(std::move(out));
    const double dropped = result.truncate(n_max);
    if (dropped_mass != nullptr) *dropped_mass = dropped;
    return result;
}

} // namespace rfs
