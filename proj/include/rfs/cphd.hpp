#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "rfs/cardinality.hpp"
#include "rfs/diagnostics.hpp"
#include "rfs/mixture.hpp"
#include "rfs/models.hpp"
#include "rfs/numerics/combinatorics.hpp"
#include "rfs/numerics/esf.hpp"
#include "rfs/tagging.hpp"
#include "rfs/tracks.hpp"

/// Gaussian-mixture multiple-model CPHD filter.
namespace rfs::cphd {

struct GaussianComponent {
    double weight = 0.0;
    GaussianDensity density;
    std::size_t model = 0;
    Tag tag = 0;
    bool newborn = false;
};

struct CphdState {
    std::vector<GaussianComponent> components;
    CardinalityDistribution cardinality;
    std::size_t frame = 0;
    Tag next_tag = 1;

    [[nodiscard]] double total_weight() const {
        double w = 0.0;
        for (const auto& c : components) w += c.weight;
        return w;
    }
};

struct CphdConfig {
    ReductionConfig reduction;
    std::size_t max_cardinality = 40;
    /// Detection-updated components lighter than this are never created.
    double detection_weight_floor = 1e-10;
};

/// Empty filter: no components, certainly zero targets.
[[nodiscard]] inline CphdState initial_state(const CphdConfig& cfg) {
    CphdState s;
    s.cardinality = CardinalityDistribution::delta(0, cfg.max_cardinality);
    return s;
}

namespace detail {

inline std::vector<double> log_factorials(std::size_t n) {
    std::vector<double> out(n + 1);
    for (std::size_t i = 0; i <= n; ++i) out[i] = std::lgamma(static_cast<double>(i) + 1.0);
    return out;
}

// ln Υ^u[v, Z'](n) for n = 0..n_max, up to the common factor <1,v>^{-u}.
// `log_e` holds ln e_j of the normalized set {<v,ψ_z>/<1,v>}, |Z'| = log_e.size()-1.
inline std::vector<double> log_upsilon(std::span<const double> log_e, std::size_t u,
                                       double clutter_rate, double miss_prob, std::size_t n_max,
                                       const std::vector<double>& log_fact) {
    const std::size_t m = log_e.size() - 1;
    std::vector<double> out(n_max + 1, kNegInf);
    std::vector<double> terms;
    terms.reserve(m + 1);
    for (std::size_t n = 0; n <= n_max; ++n) {
        terms.clear();
        for (std::size_t j = 0; j <= std::min(m, n); ++j) {
            if (j + u > n || log_e[j] == kNegInf) continue;
            // (|Z|-j)! Pois(|Z|-j; λ) = λ^{|Z|-j} e^{-λ}
            const double clutter = xlogy(static_cast<double>(m - j), clutter_rate) - clutter_rate;
            const double perm = log_fact[n] - log_fact[n - j - u];
            const double miss = xlogy(static_cast<double>(n - j - u), miss_prob);
            terms.push_back(clutter + perm + miss + log_e[j]);
        }
        out[n] = log_sum_exp(terms);
    }
    return out;
}

inline double log_inner(std::span<const double> log_f, const CardinalityDistribution& rho) {
    std::vector<double> terms;
    terms.reserve(log_f.size());
    for (std::size_t n = 0; n < log_f.size(); ++n) {
        if (rho[n] > 0.0 && log_f[n] > kNegInf) terms.push_back(log_f[n] + std::log(rho[n]));
    }
    return log_sum_exp(terms);
}

} // namespace detail

/// Prediction: survival thinning of the cardinality, birth convolution, and
/// per-model propagation of every component (R children each).
[[nodiscard]] inline CphdState predict(const CphdState& prior, const SystemModel& sys,
                                       const CphdConfig& cfg, Diagnostics* diag = nullptr) {
    CphdState out;
    out.frame = prior.frame + 1;
    out.next_tag = prior.next_tag;

    const double p_s = sys.rates.p_survival;
    // <p_S, v> / <1, v>; p_S is state independent.
    const CardinalityDistribution survivors = thin(prior.cardinality, p_s);
    double dropped = 0.0;
    out.cardinality = convolve(sys.birth.cardinality, survivors, cfg.max_cardinality, &dropped);
    if (dropped > 0.0) {
        std::ostringstream msg;
        msg << "frame " << out.frame << ": predicted cardinality truncated at N_max="
            << cfg.max_cardinality << " (dropped mass " << dropped << ")";
        note(diag, msg.str());
    }

    const std::size_t r_count = sys.motion.size();
    out.components.reserve(prior.components.size() * r_count + sys.birth.intensity.size() * r_count);
    for (const auto& c : prior.components) {
        for (std::size_t r = 0; r < r_count; ++r) {
            const double tau = sys.motion.switching(static_cast<Eigen::Index>(c.model),
                                                    static_cast<Eigen::Index>(r));
            const double w = c.weight * p_s * tau;
            if (!(w > 0.0)) continue;
            const auto& mm = sys.motion.models[r];
            out.components.push_back(
                {w, gaussian_predict(c.density, mm.transition, mm.process_noise), r, c.tag, false});
        }
    }
    for (const auto& b : sys.birth.intensity) {
        const Tag tag = out.next_tag++;
        for (std::size_t r = 0; r < r_count; ++r) {
            const double w = b.weight * sys.motion.birth_probs(static_cast<Eigen::Index>(r));
            if (!(w > 0.0)) continue;
            out.components.push_back({w, b.density, r, tag, true});
        }
    }
    return out;
}

/// Measurement update with known clutter rate and detection probability.
/// Measurements outside the clutter region are ignored (noted in `diag`).
[[nodiscard]] inline CphdState update(const CphdState& pred, std::span<const Vector> measurements,
                                      double clutter_rate, double p_detection,
                                      const SystemModel& sys, const CphdConfig& cfg,
                                      Diagnostics* diag = nullptr) {
    if (!(clutter_rate >= 0.0) || !(p_detection >= 0.0 && p_detection <= 1.0)) {
        throw FilterError(pred.frame, "update: clutter rate must be >= 0 and p_D in [0,1]");
    }
    std::vector<Vector> z_set;
    z_set.reserve(measurements.size());
    for (const auto& z : measurements) {
        if (sys.clutter.region.contains(z)) {
            z_set.push_back(z);
        } else {
            note(diag, "frame " + std::to_string(pred.frame) + ": measurement outside region ignored");
        }
    }

    const std::size_t m = z_set.size();
    const std::size_t j_count = pred.components.size();
    const std::size_t n_max = pred.cardinality.max_count();
    const double total = pred.total_weight();
    const double log_volume = std::log(sys.clutter.region.area());
    const double log_pd = std::log(p_detection);
    const double miss = 1.0 - p_detection;

    // Per-component likelihoods ln g(z | x, r), integrated over the Gaussian.
    std::vector<KalmanCorrector> correctors;
    correctors.reserve(j_count);
    std::vector<double> loglik(j_count * m);
    try {
        for (std::size_t i = 0; i < j_count; ++i) {
            correctors.emplace_back(pred.components[i].density, sys.measurement.observation,
                                    sys.measurement.noise);
            for (std::size_t k = 0; k < m; ++k) loglik[i * m + k] = correctors[i].log_likelihood(z_set[k]);
        }
    } catch (const NumericalError& e) {
        throw FilterError(pred.frame, e.what());
    }

    // Ξ / <1,v>: ψ_z = (<1,κ>/κ(z)) g p_D = V g p_D for uniform clutter.
    std::vector<double> xi(m, 0.0);
    if (total > 0.0 && p_detection > 0.0) {
        const double log_total = std::log(total);
        std::vector<double> terms(j_count);
        for (std::size_t k = 0; k < m; ++k) {
            for (std::size_t i = 0; i < j_count; ++i) {
                terms[i] = std::log(pred.components[i].weight) + loglik[i * m + k];
            }
            xi[k] = std::exp(log_volume + log_pd + log_sum_exp(terms) - log_total);
        }
    }

    const auto log_fact = detail::log_factorials(std::max(n_max, m) + 1);
    const std::vector<double> log_e = log_esf(xi);
    const auto up0 = detail::log_upsilon(log_e, 0, clutter_rate, miss, n_max, log_fact);
    const double log_norm = detail::log_inner(up0, pred.cardinality);
    if (log_norm == kNegInf || std::isnan(log_norm)) {
        throw FilterError(pred.frame, "update: posterior cardinality has zero mass");
    }

    CphdState out;
    out.frame = pred.frame;
    out.next_tag = pred.next_tag;
    {
        std::vector<double> rho(n_max + 1, 0.0);
        for (std::size_t n = 0; n <= n_max; ++n) {
            if (pred.cardinality[n] > 0.0 && up0[n] > kNegInf) {
                rho[n] = std::exp(up0[n] + std::log(pred.cardinality[n]) - log_norm);
            }
        }
        out.cardinality = CardinalityDistribution(std::move(rho));
        out.cardinality.normalize();
    }
    if (j_count == 0) return out;

    const double log_total = std::log(total);
    // Missed detections.
    if (miss > 0.0) {
        const auto up1 = detail::log_upsilon(log_e, 1, clutter_rate, miss, n_max, log_fact);
        const double ratio = std::exp(detail::log_inner(up1, pred.cardinality) - log_total - log_norm);
        for (const auto& c : pred.components) {
            const double w = c.weight * miss * ratio;
            if (w > 0.0) out.components.push_back({w, c.density, c.model, c.tag, false});
        }
    }

    // Detections: one child per (component, measurement).
    if (p_detection > 0.0 && m > 0) {
        std::vector<GaussianComponent> detected;
        std::vector<DetectionLineage> lineage;
        std::vector<double> xi_without(m - 1);
        for (std::size_t k = 0; k < m; ++k) {
            for (std::size_t q = 0, o = 0; q < m; ++q) {
                if (q != k) xi_without[o++] = xi[q];
            }
            const auto up1z =
                detail::log_upsilon(log_esf(xi_without), 1, clutter_rate, miss, n_max, log_fact);
            const double log_ratio = detail::log_inner(up1z, pred.cardinality) - log_total - log_norm;
            if (log_ratio == kNegInf) continue;
            for (std::size_t i = 0; i < j_count; ++i) {
                const auto& c = pred.components[i];
                const double w = std::exp(std::log(c.weight) + log_pd + log_volume +
                                          loglik[i * m + k] + log_ratio);
                if (!(w >= cfg.detection_weight_floor)) continue;
                detected.push_back({w, correctors[i].posterior(z_set[k]), c.model, c.tag, false});
                lineage.push_back({c.tag, k, w});
            }
        }
        const auto tags = assign_child_tags(lineage, out.next_tag);
        for (std::size_t d = 0; d < detected.size(); ++d) {
            detected[d].tag = tags[d];
            out.components.push_back(std::move(detected[d]));
        }
    }

    const double mass = out.total_weight();
    const double card_mean = out.cardinality.mean();
    if (std::abs(mass - card_mean) > 0.25 * std::max(card_mean, 1.0)) {
        std::ostringstream msg;
        msg << "frame " << out.frame << ": intensity mass " << mass
            << " departs from cardinality mean " << card_mean;
        note(diag, msg.str());
    }
    return out;
}

/// Prune, merge same-model neighbours, cap per model, rescale.
[[nodiscard]] inline std::vector<GaussianComponent> reduce(const std::vector<GaussianComponent>& comps,
                                                           const ReductionConfig& cfg) {
    return reduce_mixture(
        comps, cfg, [](const GaussianComponent& c) { return c.model; },
        [&cfg](const GaussianComponent& heavy) {
            return [gate = MahalanobisGate(heavy.density, cfg.merge_threshold)](
                       const GaussianComponent& other) { return gate(other.density); };
        },
        [](std::span<const GaussianComponent> cluster) {
            GaussianComponent merged = cluster.front();
            merged.weight = 0.0;
            for (const auto& c : cluster) merged.weight += c.weight;
            merged.density = merge_gaussians(cluster, [](const GaussianComponent& c) -> const GaussianDensity& {
                return c.density;
            });
            return merged;
        });
}

/// Posterior-mode target count and the states of that many heaviest tracks.
[[nodiscard]] inline FrameEstimate extract(const CphdState& state, Diagnostics* diag = nullptr) {
    FrameEstimate est;
    est.frame = state.frame;
    const std::size_t count = state.cardinality.mode();
    const auto picks = heaviest_tag_groups(state.components, count);
    if (picks.size() < count) {
        note(diag, "frame " + std::to_string(state.frame) + ": fewer tracks than the cardinality mode");
    }
    for (std::size_t i : picks) {
        const auto& c = state.components[i];
        est.tracks.push_back({c.tag, c.density.mean, c.model});
    }
    return est;
}

/// Standalone MM-CPHD tracker: one predict-update-reduce-extract cycle per frame.
class CphdTracker {
public:
    CphdTracker(SystemModel system, CphdConfig config)
        : system_(std::move(system)), config_(config), state_(initial_state(config_)) {}

    FrameEstimate step(std::span<const Vector> measurements, double clutter_rate, double p_detection,
                       Diagnostics* diag = nullptr) {
        CphdState predicted = predict(state_, system_, config_, diag);
        CphdState updated = update(predicted, measurements, clutter_rate, p_detection, system_, config_, diag);
        updated.components = reduce(updated.components, config_.reduction);
        state_ = std::move(updated);
        FrameEstimate est = extract(state_, diag);
        est.lambda_hat = clutter_rate;
        est.p_d_hat = p_detection;
        return est;
    }

    [[nodiscard]] const CphdState& state() const { return state_; }
    [[nodiscard]] const SystemModel& system() const { return system_; }

private:
    SystemModel system_;
    CphdConfig config_;
    CphdState state_;
};

} // namespace rfs::cphd
