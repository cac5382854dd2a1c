#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <deque>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rfs/cphd.hpp"
#include "rfs/diagnostics.hpp"
#include "rfs/lambda_cphd.hpp"
#include "rfs/tracks.hpp"

namespace rfs {

/// Anything that turns a frame's measurements into (λ̂, p̂_D).
template <class E>
concept RateSource = requires(E e, std::span<const Vector> z, Diagnostics* d) {
    { e.step(z, d) } -> std::convertible_to<lambda_cphd::RateEstimate>;
};

/// Anything that turns a frame's measurements into a FrameEstimate.
template <class F>
concept FrameFilter = requires(F f, std::span<const Vector> z, Diagnostics* d) {
    { f.step(z, d) } -> std::convertible_to<FrameEstimate>;
};

/// Replays known per-frame rates; frame k (1-based) reads index k-1.
class TrueRateOracle {
public:
    TrueRateOracle(std::vector<double> lambda, std::vector<double> p_detection)
        : lambda_(std::move(lambda)), p_detection_(std::move(p_detection)) {
        if (lambda_.size() != p_detection_.size()) {
            throw std::invalid_argument("TrueRateOracle: schedule lengths differ");
        }
    }

    lambda_cphd::RateEstimate step(std::span<const Vector>, Diagnostics* = nullptr) {
        if (frame_ >= lambda_.size()) throw std::out_of_range("TrueRateOracle: past end of schedule");
        const lambda_cphd::RateEstimate r{lambda_[frame_], p_detection_[frame_]};
        ++frame_;
        return r;
    }

    [[nodiscard]] std::size_t frame() const { return frame_; }

private:
    std::vector<double> lambda_;
    std::vector<double> p_detection_;
    std::size_t frame_ = 0;
};

struct BootstrapConfig {
    cphd::CphdConfig tracker;
    lambda_cphd::EstimatorConfig estimator;
    std::size_t window = 3;
    double lambda_floor = 0.5;
    double p_d_min = 0.05;
    double p_d_max = 0.999;

    void check() const {
        if (window < 1) throw std::invalid_argument("bootstrap: window must be >= 1");
        if (!(lambda_floor >= 0.0)) throw std::invalid_argument("bootstrap: lambda floor must be >= 0");
        if (!(p_d_min > 0.0 && p_d_min <= p_d_max && p_d_max <= 1.0)) {
            throw std::invalid_argument("bootstrap: p_D bounds must satisfy 0 < min <= max <= 1");
        }
    }
};

/// Estimator first, tracker second, within every frame: the estimator's rates
/// (trailing moving average, clamped) drive the tracker's update on the same
/// measurement set.
template <RateSource Estimator = lambda_cphd::LambdaCphdEstimator>
class BootstrapFilter {
public:
    BootstrapFilter(SystemModel system, BootstrapConfig config, Estimator estimator)
        : config_(std::move(config)),
          tracker_(std::move(system), config_.tracker),
          estimator_(std::move(estimator)) {
        config_.check();
    }

    BootstrapFilter(const SystemModel& system, const BootstrapConfig& config)
        requires std::same_as<Estimator, lambda_cphd::LambdaCphdEstimator>
        : BootstrapFilter(system, config, lambda_cphd::LambdaCphdEstimator(system, config.estimator)) {}

    FrameEstimate step(std::span<const Vector> measurements, Diagnostics* diag = nullptr) {
        const lambda_cphd::RateEstimate raw = estimator_.step(measurements, diag);
        lambda_history_.push_back(raw.lambda_hat);
        p_d_history_.push_back(raw.p_d_hat);
        if (lambda_history_.size() > config_.window) {
            lambda_history_.pop_front();
            p_d_history_.pop_front();
        }
        const double lambda = std::max(mean_of(lambda_history_), config_.lambda_floor);
        const double p_d = std::clamp(mean_of(p_d_history_), config_.p_d_min, config_.p_d_max);
        return tracker_.step(measurements, lambda, p_d, diag);
    }

    [[nodiscard]] const cphd::CphdTracker& tracker() const { return tracker_; }
    [[nodiscard]] const Estimator& estimator() const { return estimator_; }

private:
    static double mean_of(const std::deque<double>& xs) {
        return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    }

    BootstrapConfig config_;
    cphd::CphdTracker tracker_;
    Estimator estimator_;
    std::deque<double> lambda_history_;
    std::deque<double> p_d_history_;
};

/// MM-CPHD with rates fixed in advance.
class FixedRateTracker {
public:
    FixedRateTracker(SystemModel system, cphd::CphdConfig config, double clutter_rate, double p_detection)
        : tracker_(std::move(system), config), clutter_rate_(clutter_rate), p_detection_(p_detection) {}

    FrameEstimate step(std::span<const Vector> measurements, Diagnostics* diag = nullptr) {
        return tracker_.step(measurements, clutter_rate_, p_detection_, diag);
    }

private:
    cphd::CphdTracker tracker_;
    double clutter_rate_;
    double p_detection_;
};

/// MM-λ-p_D-CPHD on its own: tracks from its target intensity.
class EstimatorTracker {
public:
    EstimatorTracker(SystemModel system, lambda_cphd::EstimatorConfig config)
        : estimator_(std::move(system), config) {}

    FrameEstimate step(std::span<const Vector> measurements, Diagnostics* diag = nullptr) {
        const auto rates = estimator_.step(measurements, diag);
        FrameEstimate est;
        est.frame = estimator_.frame();
        est.tracks = lambda_cphd::extract_tracks(estimator_.state());
        est.lambda_hat = rates.lambda_hat;
        est.p_d_hat = rates.p_d_hat;
        return est;
    }

private:
    lambda_cphd::LambdaCphdEstimator estimator_;
};

/// A sequence aborted part way; `partial()` holds the frames completed.
class SequenceError : public FilterError {
public:
    SequenceError(std::size_t frame, const std::string& what, std::vector<FrameEstimate> partial)
        : FilterError(frame, what), partial_(std::move(partial)) {}
    [[nodiscard]] const std::vector<FrameEstimate>& partial() const { return partial_; }

private:
    std::vector<FrameEstimate> partial_;
};

/// Folds `filter.step` over the frames (frame indices 1..K).
template <FrameFilter Filter>
[[nodiscard]] std::vector<FrameEstimate> run_sequence(Filter& filter, std::span<const MeasurementSet> frames,
                                                      Diagnostics* diag = nullptr) {
    std::vector<FrameEstimate> out;
    out.reserve(frames.size());
    for (std::size_t k = 0; k < frames.size(); ++k) {
        try {
            out.push_back(filter.step(frames[k], diag));
        } catch (const FilterError& e) {
            throw SequenceError(k + 1, e.what(), std::move(out));
        } catch (const std::exception& e) {
            throw SequenceError(k + 1, e.what(), std::move(out));
        }
    }
    return out;
}

} // namespace rfs
