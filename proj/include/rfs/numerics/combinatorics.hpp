#pragma once

#include <cmath>
#include <cstddef>

#include "rfs/numerics/log_weight.hpp"

namespace rfs {

/// ln C(l, j). Zero coefficient (j > l) maps to LogWeight::zero().
[[nodiscard]] inline LogWeight log_binomial(std::size_t l, std::size_t j) {
    if (j > l) return LogWeight::zero();
    if (j == 0 || j == l) return LogWeight::one();
    const double dl = static_cast<double>(l);
    const double dj = static_cast<double>(j);
    return LogWeight(std::lgamma(dl + 1.0) - std::lgamma(dj + 1.0) - std::lgamma(dl - dj + 1.0));
}

/// ln P(n, j) = ln n!/(n-j)!. Zero coefficient (j > n) maps to LogWeight::zero().
[[nodiscard]] inline LogWeight log_permutation(std::size_t n, std::size_t j) {
    if (j > n) return LogWeight::zero();
    if (j == 0) return LogWeight::one();
    const double dn = static_cast<double>(n);
    const double dj = static_cast<double>(j);
    return LogWeight(std::lgamma(dn + 1.0) - std::lgamma(dn - dj + 1.0));
}

/// ln Pois(n; mean). mean = 0 gives a point mass at n = 0.
[[nodiscard]] inline double log_poisson(std::size_t n, double mean) {
    const double dn = static_cast<double>(n);
    return xlogy(dn, mean) - mean - std::lgamma(dn + 1.0);
}

} // namespace rfs
