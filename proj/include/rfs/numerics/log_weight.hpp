#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

namespace rfs {

/// Weight held on the natural-log scale. Negative infinity encodes an exact
/// zero; NaN is rejected at construction.
class LogWeight {
public:
    constexpr LogWeight() = default;

    explicit LogWeight(double log_value) : value_(log_value) {
        if (std::isnan(log_value)) {
            throw std::domain_error("LogWeight: NaN log value");
        }
    }

    static LogWeight zero() { return LogWeight(-std::numeric_limits<double>::infinity()); }
    static LogWeight one() { return LogWeight(0.0); }
    static LogWeight from_linear(double w) {
        if (!(w >= 0.0)) {
            throw std::domain_error("LogWeight: negative or NaN linear weight");
        }
        return LogWeight(std::log(w));
    }

    [[nodiscard]] double log() const { return value_; }
    [[nodiscard]] double linear() const { return std::exp(value_); }
    [[nodiscard]] bool is_zero() const { return std::isinf(value_) && value_ < 0.0; }

    friend LogWeight operator*(LogWeight a, LogWeight b) {
        if (a.is_zero() || b.is_zero()) return zero();
        return LogWeight(a.value_ + b.value_);
    }
    friend bool operator==(LogWeight a, LogWeight b) { return a.value_ == b.value_; }
    friend bool operator<(LogWeight a, LogWeight b) { return a.value_ < b.value_; }

private:
    double value_ = -std::numeric_limits<double>::infinity();
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow.
[[nodiscard]] inline double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

[[nodiscard]] inline double log_sum_exp(std::span<const double> xs) {
    if (xs.empty()) return kNegInf;
    const double hi = *std::max_element(xs.begin(), xs.end());
    if (hi == kNegInf) return kNegInf;
    if (std::isinf(hi)) return hi;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - hi);
    return hi + std::log(acc);
}

/// k * log(x) with the convention 0 * log(0) = 0 (so that 0^0 = 1).
[[nodiscard]] inline double xlogy(double k, double x) {
    if (k == 0.0) return 0.0;
    if (x <= 0.0) return kNegInf;
    return k * std::log(x);
}

} // namespace rfs
