#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rfs/models.hpp"
#include "rfs/tracks.hpp"

/// Seeded point-measurement scenario generator.
namespace rfs::sim {

/// Per-frame parameter curve over frames 1..K.
struct Schedule {
    enum class Kind { constant, step, linear_ramp, piecewise };

    Kind kind = Kind::constant;
    double value = 0.0;            // constant
    double before = 0.0;           // step: frames < at_frame
    double after = 0.0;            // step: frames >= at_frame
    std::size_t at_frame = 1;
    double start = 0.0;            // ramp: frame 1
    double end = 0.0;              // ramp: frame K
    std::vector<std::pair<double, double>> knots;  // piecewise-linear (frame, value)

    static Schedule constant(double v) {
        Schedule s;
        s.kind = Kind::constant;
        s.value = v;
        return s;
    }
    static Schedule step(double before, double after, std::size_t at_frame) {
        Schedule s;
        s.kind = Kind::step;
        s.before = before;
        s.after = after;
        s.at_frame = at_frame;
        return s;
    }
    static Schedule ramp(double start, double end) {
        Schedule s;
        s.kind = Kind::linear_ramp;
        s.start = start;
        s.end = end;
        return s;
    }
    static Schedule piecewise(std::vector<std::pair<double, double>> knots) {
        if (knots.empty()) throw std::invalid_argument("piecewise schedule needs knots");
        std::sort(knots.begin(), knots.end());
        Schedule s;
        s.kind = Kind::piecewise;
        s.knots = std::move(knots);
        return s;
    }

    /// Value at frame k of a K-frame sequence.
    [[nodiscard]] double at(std::size_t k, std::size_t frames) const {
        switch (kind) {
        case Kind::constant:
            return value;
        case Kind::step:
            return k < at_frame ? before : after;
        case Kind::linear_ramp:
            if (frames <= 1) return start;
            return start + (end - start) * static_cast<double>(k - 1) / static_cast<double>(frames - 1);
        case Kind::piecewise: {
            const double x = static_cast<double>(k);
            if (x <= knots.front().first) return knots.front().second;
            if (x >= knots.back().first) return knots.back().second;
            for (std::size_t i = 1; i < knots.size(); ++i) {
                if (x <= knots[i].first) {
                    const auto& [x0, y0] = knots[i - 1];
                    const auto& [x1, y1] = knots[i];
                    return x1 == x0 ? y1 : y0 + (y1 - y0) * (x - x0) / (x1 - x0);
                }
            }
            return knots.back().second;
        }
        }
        return value;
    }

    [[nodiscard]] double time_average(std::size_t frames) const {
        double acc = 0.0;
        for (std::size_t k = 1; k <= frames; ++k) acc += at(k, frames);
        return acc / static_cast<double>(frames);
    }
};

struct ScenarioConfig {
    std::size_t frames = 60;
    Region region{0.0, 230.0, 0.0, 230.0};
    ModelSet motion = default_model_set();
    MeasurementModel measurement = default_measurement_model();
    std::size_t initial_targets = 20;
    double birth_rate = 0.4;  // expected new targets per frame
    double p_survival = 0.98;
    Schedule detection = Schedule::constant(0.9);
    Schedule clutter = Schedule::constant(10.0);
    std::uint64_t seed = 1;

    /// Invariant violations; empty when valid.
    [[nodiscard]] std::vector<std::string> violations() const {
        std::vector<std::string> out;
        if (frames < 1) out.emplace_back("frames must be >= 1");
        if (!(region.area() > 0.0)) out.emplace_back("region must have positive area");
        if (!(birth_rate >= 0.0)) out.emplace_back("birth rate must be >= 0");
        if (!(p_survival >= 0.0 && p_survival <= 1.0)) out.emplace_back("p_survival outside [0,1]");
        for (std::size_t k = 1; k <= frames; ++k) {
            const double pd = detection.at(k, frames);
            const double lam = clutter.at(k, frames);
            if (!(pd >= 0.0 && pd <= 1.0)) {
                out.push_back("detection schedule outside [0,1] at frame " + std::to_string(k));
                break;
            }
            if (!(lam >= 0.0)) {
                out.push_back("clutter schedule negative at frame " + std::to_string(k));
                break;
            }
        }
        return out;
    }
};

struct TruthTrack {
    std::uint64_t label = 0;
    std::size_t birth_frame = 0;
    std::size_t death_frame = 0;        // last frame alive (inclusive)
    std::vector<Vector> states;         // states[k - birth_frame]
    std::vector<std::size_t> models;    // motion model used at each frame

    [[nodiscard]] bool alive_at(std::size_t k) const { return k >= birth_frame && k <= death_frame; }
};

struct GroundTruth {
    std::vector<TruthTrack> tracks;
};

struct DetectionFrame {
    std::size_t frame = 0;
    MeasurementSet measurements;
};

struct ScenarioOutput {
    GroundTruth truth;
    std::vector<DetectionFrame> detections;
    std::vector<double> lambda_true;
    std::vector<double> p_d_true;

    [[nodiscard]] std::vector<MeasurementSet> measurement_sets() const {
        std::vector<MeasurementSet> out;
        out.reserve(detections.size());
        for (const auto& f : detections) out.push_back(f.measurements);
        return out;
    }
};

/// SplitMix64 step; used to derive independent engine seeds from one seed.
[[nodiscard]] inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Engine for the named sub-stream of `seed`.
[[nodiscard]] inline std::mt19937_64 split_stream(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x5851F42D4C957F2DULL)));
}

namespace detail {

// Square-root factor of a (possibly singular) covariance.
inline Matrix covariance_factor(const Matrix& cov) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(cov));
    const Vector sd = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * sd.asDiagonal();
}

inline Vector gaussian_sample(const Matrix& factor, std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    Vector u(factor.cols());
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = n01(rng);
    return factor * u;
}

inline std::size_t sample_index(const Eigen::RowVectorXd& probs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double u = u01(rng);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        acc += probs(i);
        if (u < acc) return static_cast<std::size_t>(i);
    }
    return static_cast<std::size_t>(probs.size() - 1);
}

} // namespace detail

/// Ground truth, detections and true per-frame rates for `cfg`. Pure in
/// (cfg, cfg.seed).
[[nodiscard]] inline ScenarioOutput simulate(const ScenarioConfig& cfg) {
    if (const auto v = cfg.violations(); !v.empty()) throw std::invalid_argument("scenario: " + v.front());

    enum : std::uint64_t { kBirths = 1, kDynamics, kDetection, kClutter, kShuffle };
    auto birth_rng = split_stream(cfg.seed, kBirths);
    auto dyn_rng = split_stream(cfg.seed, kDynamics);
    auto det_rng = split_stream(cfg.seed, kDetection);
    auto clutter_rng = split_stream(cfg.seed, kClutter);
    auto shuffle_rng = split_stream(cfg.seed, kShuffle);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_real_distribution<double> ux(cfg.region.x_min, cfg.region.x_max);
    std::uniform_real_distribution<double> uy(cfg.region.y_min, cfg.region.y_max);

    std::vector<Matrix> process_factor;
    for (const auto& mm : cfg.motion.models) process_factor.push_back(detail::covariance_factor(mm.process_noise));
    const Matrix meas_factor = detail::covariance_factor(cfg.measurement.noise);
    const Eigen::Index dim = cfg.motion.state_dim();

    ScenarioOutput out;
    std::vector<std::size_t> live;  // indices into out.truth.tracks
    std::uint64_t next_label = 1;

    auto spawn = [&](std::size_t k) {
        TruthTrack t;
        t.label = next_label++;
        t.birth_frame = k;
        t.death_frame = k;
        Vector x = Vector::Zero(dim);
        x(0) = ux(birth_rng);
        x(1) = uy(birth_rng);
        t.states.push_back(x);
        t.models.push_back(detail::sample_index(cfg.motion.birth_probs.transpose(), birth_rng));
        live.push_back(out.truth.tracks.size());
        out.truth.tracks.push_back(std::move(t));
    };

    for (std::size_t k = 1; k <= cfg.frames; ++k) {
        if (k == 1) {
            for (std::size_t i = 0; i < cfg.initial_targets; ++i) spawn(k);
        } else {
            std::vector<std::size_t> still_live;
            for (std::size_t idx : live) {
                TruthTrack& t = out.truth.tracks[idx];
                if (u01(dyn_rng) >= cfg.p_survival) continue;
                const std::size_t r = detail::sample_index(
                    cfg.motion.switching.row(static_cast<Eigen::Index>(t.models.back())), dyn_rng);
                const auto& mm = cfg.motion.models[r];
                const Vector x = mm.transition * t.states.back() + detail::gaussian_sample(process_factor[r], dyn_rng);
                if (!cfg.region.contains(x(0), x(1))) continue;
                t.states.push_back(x);
                t.models.push_back(r);
                t.death_frame = k;
                still_live.push_back(idx);
            }
            live = std::move(still_live);
        }
        std::poisson_distribution<std::size_t> births(cfg.birth_rate);
        const std::size_t n_births = cfg.birth_rate > 0.0 ? births(birth_rng) : 0;
        for (std::size_t i = 0; i < n_births; ++i) spawn(k);

        const double p_d = cfg.detection.at(k, cfg.frames);
        const double lambda = cfg.clutter.at(k, cfg.frames);
        DetectionFrame frame;
        frame.frame = k;
        for (std::size_t idx : live) {
            const TruthTrack& t = out.truth.tracks[idx];
            if (u01(det_rng) >= p_d) continue;
            const Vector z = cfg.measurement.observation * t.states.back() + detail::gaussian_sample(meas_factor, det_rng);
            if (cfg.region.contains(z)) frame.measurements.push_back(z);
        }
        std::poisson_distribution<std::size_t> clutter_count(lambda);
        const std::size_t n_clutter = lambda > 0.0 ? clutter_count(clutter_rng) : 0;
        for (std::size_t i = 0; i < n_clutter; ++i) {
            Vector z(2);
            z(0) = ux(clutter_rng);
            z(1) = uy(clutter_rng);
            frame.measurements.push_back(z);
        }
        std::shuffle(frame.measurements.begin(), frame.measurements.end(), shuffle_rng);
        out.detections.push_back(std::move(frame));
        out.lambda_true.push_back(lambda);
        out.p_d_true.push_back(p_d);
    }
    return out;
}

/// Ground-truth positions per frame, labelled, for the metrics.
[[nodiscard]] inline std::vector<std::vector<std::pair<std::uint64_t, Vector>>> truth_by_frame(
    const GroundTruth& truth, std::size_t frames) {
    std::vector<std::vector<std::pair<std::uint64_t, Vector>>> out(frames);
    for (const auto& t : truth.tracks) {
        for (std::size_t k = t.birth_frame; k <= t.death_frame && k <= frames; ++k) {
            out[k - 1].emplace_back(t.label, t.states[k - t.birth_frame]);
        }
    }
    return out;
}

/// Filter-side model bundle matching a scenario: same kinematics, measurement
/// noise and region, a broad birth Gaussian carrying `birth_rate` targets per
/// frame. Rates are left at their defaults; the filters receive them per frame.
[[nodiscard]] inline SystemModel filter_system(const ScenarioConfig& cfg, double birth_rate, std::size_t n_max) {
    SystemModel sys;
    sys.motion = cfg.motion;
    sys.measurement = cfg.measurement;
    sys.birth = default_birth_model(cfg.region, birth_rate, n_max);
    sys.clutter.region = cfg.region;
    sys.clutter.rate = cfg.clutter.time_average(cfg.frames);
    sys.rates.p_survival = cfg.p_survival;
    sys.rates.p_detection = cfg.detection.time_average(cfg.frames);
    return sys;
}

/// Named desk-scale presets: 230 x 230 px, 60 frames, ~20 targets.
[[nodiscard]] inline std::map<std::string, ScenarioConfig> preset_scenarios() {
    std::map<std::string, ScenarioConfig> presets;
    ScenarioConfig base;

    ScenarioConfig high = base;  // λ̄ = 112, p̄_D = 0.88
    high.clutter = Schedule::ramp(56.0, 168.0);
    high.detection = Schedule::ramp(0.93, 0.83);
    presets["high-clutter"] = high;

    ScenarioConfig low = base;  // λ̄ = 11, p_D declining to an average of 0.7
    low.clutter = Schedule::ramp(6.0, 16.0);
    low.detection = Schedule::ramp(0.85, 0.55);
    presets["low-clutter"] = low;

    ScenarioConfig step = base;
    step.clutter = Schedule::step(20.0, 80.0, 30);
    step.detection = Schedule::constant(0.9);
    presets["step-clutter"] = step;

    ScenarioConfig ramp = base;
    ramp.clutter = Schedule::ramp(10.0, 100.0);
    ramp.detection = Schedule::constant(0.88);
    presets["ramp-clutter"] = ramp;

    ScenarioConfig medium = base;
    medium.clutter = Schedule::constant(60.0);
    medium.detection = Schedule::constant(0.9);
    presets["medium-clutter"] = medium;
    return presets;
}

[[nodiscard]] inline ScenarioConfig preset_scenario(const std::string& name) {
    const auto presets = preset_scenarios();
    const auto it = presets.find(name);
    if (it == presets.end()) throw std::invalid_argument("unknown scenario preset '" + name + "'");
    return it->second;
}

} // namespace rfs::sim
