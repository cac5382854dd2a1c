#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "rfs/numerics/log_weight.hpp"

namespace rfs {

namespace detail {

inline void check_esf_input(std::span<const double> values) {
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0) {
            throw std::domain_error("esf: inputs must be finite and nonnegative");
        }
    }
}

// Coefficients of prod_i (1 + x_i t), i.e. e_0..e_n of the inputs.
inline std::vector<double> vieta(std::span<const double> values, double scale) {
    std::vector<double> e(values.size() + 1, 0.0);
    e[0] = 1.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = values[i] / scale;
        for (std::size_t j = i + 1; j >= 1; --j) {
            e[j] += x * e[j - 1];
        }
    }
    return e;
}

} // namespace detail

/// Elementary symmetric functions e_0..e_n of `values` by the O(n^2)
/// polynomial-multiplication recurrence.
[[nodiscard]] inline std::vector<double> esf(std::span<const double> values) {
    detail::check_esf_input(values);
    return detail::vieta(values, 1.0);
}

/// Natural logs of e_0..e_n. Inputs are scaled by their maximum before the
/// recurrence so long inputs (hundreds of measurements) do not overflow.
[[nodiscard]] inline std::vector<double> log_esf(std::span<const double> values) {
    detail::check_esf_input(values);
    const double max_value =
        values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
    std::vector<double> out(values.size() + 1, kNegInf);
    out[0] = 0.0;
    if (max_value <= 0.0) return out;

    const std::vector<double> scaled = detail::vieta(values, max_value);
    const double log_scale = std::log(max_value);
    for (std::size_t j = 1; j < scaled.size(); ++j) {
        out[j] = scaled[j] > 0.0 ? std::log(scaled[j]) + static_cast<double>(j) * log_scale
                                 : kNegInf;
    }
    return out;
}

} // namespace rfs
