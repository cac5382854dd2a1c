#pragma once

#include <algorithm>
#include <stdexcept>

namespace rfs {

/// Beta(s, t) over a detection probability.
struct BetaDensity {
    double s = 1.0;
    double t = 1.0;
};

inline constexpr double kMinBetaParameter = 0.1;

[[nodiscard]] inline double beta_mean(const BetaDensity& b) { return b.s / (b.s + b.t); }

[[nodiscard]] inline double beta_variance(const BetaDensity& b) {
    const double sum = b.s + b.t;
    return b.s * b.t / (sum * sum * (sum + 1.0));
}

namespace detail {

// Beta with the given mean and concentration s + t, raised if needed so both
// parameters stay >= kMinBetaParameter. The mean is kept exactly.
inline BetaDensity beta_from_mean_concentration(double mean, double concentration) {
    const double smaller = std::min(mean, 1.0 - mean);
    if (smaller > 0.0) {
        concentration = std::max(concentration, kMinBetaParameter / smaller);
    }
    return {mean * concentration, (1.0 - mean) * concentration};
}

} // namespace detail

/// Beta with the given first two moments; the concentration is clamped so
/// that s, t >= 0.1.
[[nodiscard]] inline BetaDensity beta_from_moments(double mean, double variance) {
    if (!(mean > 0.0 && mean < 1.0)) {
        throw std::domain_error("beta_from_moments: mean must lie in (0, 1)");
    }
    const double max_var = mean * (1.0 - mean);
    const double concentration = variance > 0.0 ? max_var / variance - 1.0 : 1e12;
    return detail::beta_from_mean_concentration(mean, concentration);
}

/// Mean-preserving variance inflation by `k_beta` >= 1. Var(s', t') =
/// k_beta * Var(s, t) unless the 0.1 floor on s', t' intervenes.
[[nodiscard]] inline BetaDensity beta_dilate(const BetaDensity& b, double k_beta) {
    if (!(k_beta >= 1.0)) {
        throw std::domain_error("beta_dilate: k_beta must be >= 1");
    }
    if (k_beta == 1.0) return b;
    const double mean = beta_mean(b);
    const double concentration = (b.s + b.t + 1.0) / k_beta - 1.0;
    return detail::beta_from_mean_concentration(mean, concentration);
}

} // namespace rfs
