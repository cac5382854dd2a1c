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
#include "rfs/numerics/beta.hpp"
#include "rfs/tagging.hpp"
#include "rfs/tracks.hpp"

/// Beta-Gaussian multiple-model CPHD filter over the hybrid space of real
/// targets and clutter generators; estimates clutter rate and detection
/// probability online.
namespace rfs::lambda_cphd {

/// Target term: weight x Beta(a) x N(x) for motion model `model`.
struct BetaGaussianComponent {
    double weight = 0.0;
    BetaDensity beta;
    GaussianDensity density;
    std::size_t model = 0;
    Tag tag = 0;
};

/// Clutter-generator term: weight x Beta(b).
struct ClutterComponent {
    double weight = 0.0;
    BetaDensity beta;
};

struct HybridState {
    std::vector<BetaGaussianComponent> target_components;
    std::vector<ClutterComponent> clutter_components;
    CardinalityDistribution hybrid_cardinality;
    std::size_t frame = 0;
    Tag next_tag = 1;
};

struct EstimatorConfig {
    BetaDensity target_birth_beta{19.0, 1.0};
    std::size_t clutter_birth_components = 5;
    double clutter_birth_rate = 5.0;
    BetaDensity clutter_birth_beta{1.0, 3.0};
    double clutter_survival = 0.9;
    double k_beta = 1.05;
    std::size_t max_cardinality = 500;
    ReductionConfig target_reduction;
    ReductionConfig clutter_reduction{1e-5, 4.0, 20};
    double detection_weight_floor = 1e-10;
};

[[nodiscard]] inline HybridState initial_state(const EstimatorConfig& cfg) {
    HybridState s;
    s.hybrid_cardinality = CardinalityDistribution::delta(0, cfg.max_cardinality);
    return s;
}

[[nodiscard]] inline double target_mass(const HybridState& s) {
    double w = 0.0;
    for (const auto& c : s.target_components) w += c.weight;
    return w;
}

[[nodiscard]] inline double clutter_mass(const HybridState& s) {
    double w = 0.0;
    for (const auto& c : s.clutter_components) w += c.weight;
    return w;
}

/// Hybrid prediction. Target terms move per model with their Beta dilated by
/// k_beta; clutter generators survive with a fixed probability and are
/// replenished by the clutter birth intensity.
[[nodiscard]] inline HybridState predict_hybrid(const HybridState& prior, const SystemModel& sys,
                                                const EstimatorConfig& cfg, Diagnostics* diag = nullptr) {
    HybridState out;
    out.frame = prior.frame + 1;
    out.next_tag = prior.next_tag;

    const double p_s1 = sys.rates.p_survival;
    const double p_s0 = cfg.clutter_survival;
    const double n1 = target_mass(prior);
    const double n0 = clutter_mass(prior);
    const double phi = (n1 + n0) > 0.0 ? (p_s1 * n1 + p_s0 * n0) / (n1 + n0) : p_s1;

    const std::size_t n_max = std::max(cfg.max_cardinality, prior.hybrid_cardinality.max_count());
    double dropped = 0.0;
    const auto clutter_birth = CardinalityDistribution::poisson(cfg.clutter_birth_rate, n_max);
    const auto hybrid_birth = convolve(sys.birth.cardinality, clutter_birth, n_max);
    out.hybrid_cardinality = convolve(hybrid_birth, thin(prior.hybrid_cardinality, phi), n_max, &dropped);
    if (dropped > 0.0) {
        std::ostringstream msg;
        msg << "frame " << out.frame << ": hybrid cardinality truncated at " << n_max
            << " (dropped mass " << dropped << ")";
        note(diag, msg.str());
    }

    const std::size_t r_count = sys.motion.size();
    for (const auto& c : prior.target_components) {
        const BetaDensity dilated = beta_dilate(c.beta, cfg.k_beta);
        for (std::size_t r = 0; r < r_count; ++r) {
            const double tau = sys.motion.switching(static_cast<Eigen::Index>(c.model),
                                                    static_cast<Eigen::Index>(r));
            const double w = c.weight * p_s1 * tau;
            if (!(w > 0.0)) continue;
            const auto& mm = sys.motion.models[r];
            out.target_components.push_back(
                {w, dilated, gaussian_predict(c.density, mm.transition, mm.process_noise), r, c.tag});
        }
    }
    for (const auto& b : sys.birth.intensity) {
        const Tag tag = out.next_tag++;
        for (std::size_t r = 0; r < r_count; ++r) {
            const double w = b.weight * sys.motion.birth_probs(static_cast<Eigen::Index>(r));
            if (w > 0.0) out.target_components.push_back({w, cfg.target_birth_beta, b.density, r, tag});
        }
    }

    if (cfg.clutter_birth_components > 0 && cfg.clutter_birth_rate > 0.0) {
        const double w = cfg.clutter_birth_rate / static_cast<double>(cfg.clutter_birth_components);
        for (std::size_t i = 0; i < cfg.clutter_birth_components; ++i) {
            out.clutter_components.push_back({w, cfg.clutter_birth_beta});
        }
    }
    for (const auto& c : prior.clutter_components) {
        const double w = c.weight * p_s0;
        if (w > 0.0) out.clutter_components.push_back({w, beta_dilate(c.beta, cfg.k_beta)});
    }
    return out;
}

/// Hybrid update. Missed-detection children get t <- t+1, detection children
/// s <- s+1; inner products over Beta factors use closed-form moments.
[[nodiscard]] inline HybridState update_hybrid(const HybridState& pred, std::span<const Vector> measurements,
                                               const SystemModel& sys, const EstimatorConfig& cfg,
                                               Diagnostics* diag = nullptr) {
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
    const std::size_t j_count = pred.target_components.size();

    double n1 = 0.0, d1 = 0.0, n0 = 0.0, d0 = 0.0;
    for (const auto& c : pred.target_components) {
        n1 += c.weight;
        d1 += c.weight * beta_mean(c.beta);
    }
    for (const auto& c : pred.clutter_components) {
        n0 += c.weight;
        d0 += c.weight * beta_mean(c.beta);
    }
    const double n_total = n1 + n0;
    const double big_phi = n_total > 0.0 ? std::clamp(1.0 - (d1 + d0) / n_total, 0.0, 1.0) : 1.0;

    const CardinalityDistribution& prior_card = pred.hybrid_cardinality;
    if (prior_card.max_count() < m) {
        note(diag, "frame " + std::to_string(pred.frame) + ": |Z| exceeds the hybrid cardinality support");
    }
    const std::size_t n_max = prior_card.max_count();

    // ln Ϋ^u(n) = ln P(n, |Z|+u) + (n-|Z|-u) ln Φ for n >= |Z|+u.
    std::vector<double> log_fact(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) log_fact[n] = std::lgamma(static_cast<double>(n) + 1.0);
    auto log_inner_upsilon = [&](std::size_t u) {
        std::vector<double> terms;
        for (std::size_t n = m + u; n <= n_max; ++n) {
            if (prior_card[n] <= 0.0) continue;
            const double v = log_fact[n] - log_fact[n - m - u] +
                             xlogy(static_cast<double>(n - m - u), big_phi) + std::log(prior_card[n]);
            if (v > kNegInf) terms.push_back(v);
        }
        return log_sum_exp(terms);
    };
    const double log_norm = log_inner_upsilon(0);
    if (log_norm == kNegInf || std::isnan(log_norm)) {
        throw FilterError(pred.frame, "update_hybrid: hybrid cardinality has zero mass at or above |Z|");
    }

    HybridState out;
    out.frame = pred.frame;
    out.next_tag = pred.next_tag;
    {
        std::vector<double> rho(n_max + 1, 0.0);
        for (std::size_t n = m; n <= n_max; ++n) {
            if (prior_card[n] <= 0.0) continue;
            const double v = log_fact[n] - log_fact[n - m] + xlogy(static_cast<double>(n - m), big_phi) +
                             std::log(prior_card[n]) - log_norm;
            rho[n] = std::exp(v);
        }
        out.hybrid_cardinality = CardinalityDistribution(std::move(rho));
        out.hybrid_cardinality.normalize();
    }

    const double log_up1 = log_inner_upsilon(1);
    const double miss_ratio =
        (log_up1 == kNegInf || !(n_total > 0.0)) ? 0.0 : std::exp(log_up1 - log_norm) / n_total;

    // Per-component likelihoods and the per-measurement normalizers
    // <v0, b K> + <v1, a g(z|.)>.
    std::vector<KalmanCorrector> correctors;
    correctors.reserve(j_count);
    std::vector<double> loglik(j_count * m);
    try {
        for (std::size_t i = 0; i < j_count; ++i) {
            correctors.emplace_back(pred.target_components[i].density, sys.measurement.observation,
                                    sys.measurement.noise);
            for (std::size_t k = 0; k < m; ++k) loglik[i * m + k] = correctors[i].log_likelihood(z_set[k]);
        }
    } catch (const NumericalError& e) {
        throw FilterError(pred.frame, e.what());
    }
    const double log_k = -std::log(sys.clutter.region.area());
    std::vector<double> log_denom(m);
    {
        std::vector<double> terms;
        for (std::size_t k = 0; k < m; ++k) {
            terms.clear();
            if (d0 > 0.0) terms.push_back(std::log(d0) + log_k);
            for (std::size_t i = 0; i < j_count; ++i) {
                const auto& c = pred.target_components[i];
                terms.push_back(std::log(c.weight * beta_mean(c.beta)) + loglik[i * m + k]);
            }
            log_denom[k] = log_sum_exp(terms);
        }
    }

    for (const auto& c : pred.target_components) {
        const double miss_mass = c.weight * (c.beta.t / (c.beta.s + c.beta.t)) * miss_ratio;
        if (miss_mass > 0.0) {
            out.target_components.push_back({miss_mass, {c.beta.s, c.beta.t + 1.0}, c.density, c.model, c.tag});
        }
    }
    std::vector<BetaGaussianComponent> detected;
    std::vector<DetectionLineage> lineage;
    for (std::size_t k = 0; k < m; ++k) {
        if (log_denom[k] == kNegInf) continue;
        for (std::size_t i = 0; i < j_count; ++i) {
            const auto& c = pred.target_components[i];
            const double w = std::exp(std::log(c.weight * beta_mean(c.beta)) + loglik[i * m + k] - log_denom[k]);
            if (!(w >= cfg.detection_weight_floor)) continue;
            detected.push_back({w, {c.beta.s + 1.0, c.beta.t}, correctors[i].posterior(z_set[k]), c.model, c.tag});
            lineage.push_back({c.tag, k, w});
        }
    }
    const auto tags = assign_child_tags(lineage, out.next_tag);
    for (std::size_t d = 0; d < detected.size(); ++d) {
        detected[d].tag = tags[d];
        out.target_components.push_back(std::move(detected[d]));
    }

    // Uniform K(z): every measurement yields the same Beta(s+1, t), so the
    // detection children of one generator collapse into a single term.
    double clutter_share = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        if (log_denom[k] > kNegInf) clutter_share += std::exp(log_k - log_denom[k]);
    }
    for (const auto& c : pred.clutter_components) {
        const double mean_b = beta_mean(c.beta);
        const double miss_mass = c.weight * (1.0 - mean_b) * miss_ratio;
        if (miss_mass > 0.0) out.clutter_components.push_back({miss_mass, {c.beta.s, c.beta.t + 1.0}});
        const double det_mass = c.weight * mean_b * clutter_share;
        if (det_mass > 0.0) out.clutter_components.push_back({det_mass, {c.beta.s + 1.0, c.beta.t}});
    }
    return out;
}

/// Beta-Gaussian and clutter mixture reduction. Beta factors of merged terms
/// are moment matched.
[[nodiscard]] inline HybridState reduce_hybrid(const HybridState& state, const EstimatorConfig& cfg) {
    HybridState out = state;
    out.target_components = reduce_mixture(
        state.target_components, cfg.target_reduction,
        [](const BetaGaussianComponent& c) { return c.model; },
        [&cfg](const BetaGaussianComponent& heavy) {
            return [gate = MahalanobisGate(heavy.density, cfg.target_reduction.merge_threshold)](
                       const BetaGaussianComponent& other) { return gate(other.density); };
        },
        [](std::span<const BetaGaussianComponent> cluster) {
            BetaGaussianComponent merged = cluster.front();
            merged.weight = 0.0;
            for (const auto& c : cluster) merged.weight += c.weight;
            merged.density = merge_gaussians(
                cluster, [](const BetaGaussianComponent& c) -> const GaussianDensity& { return c.density; });
            merged.beta = merge_betas(cluster, [](const BetaGaussianComponent& c) -> const BetaDensity& { return c.beta; });
            return merged;
        });
    out.clutter_components = reduce_mixture(
        state.clutter_components, cfg.clutter_reduction, [](const ClutterComponent&) { return std::size_t{0}; },
        [&cfg](const ClutterComponent& heavy) {
            const double mu = beta_mean(heavy.beta);
            const double var = beta_variance(heavy.beta);
            const double threshold = cfg.clutter_reduction.merge_threshold;
            return [mu, var, threshold](const ClutterComponent& other) {
                const double d = beta_mean(other.beta) - mu;
                return d * d / var < threshold;
            };
        },
        [](std::span<const ClutterComponent> cluster) {
            ClutterComponent merged{0.0, {}};
            for (const auto& c : cluster) merged.weight += c.weight;
            merged.beta = merge_betas(cluster, [](const ClutterComponent& c) -> const BetaDensity& { return c.beta; });
            return merged;
        });
    return out;
}

struct RateEstimate {
    double lambda_hat = 0.0;
    double p_d_hat = 0.0;
};

inline constexpr double kTargetMassEpsilon = 1e-9;

/// λ̂ = <v0, b>; p̂_D = <v1, a> / max(<1, v1>, ε).
[[nodiscard]] inline RateEstimate estimate_rates(const HybridState& s) {
    RateEstimate r;
    for (const auto& c : s.clutter_components) r.lambda_hat += c.weight * beta_mean(c.beta);
    double detect = 0.0;
    for (const auto& c : s.target_components) detect += c.weight * beta_mean(c.beta);
    r.p_d_hat = detect / std::max(target_mass(s), kTargetMassEpsilon);
    return r;
}

/// Posterior-mean number of real targets, <1, v1>.
[[nodiscard]] inline double estimate_target_count(const HybridState& s) { return target_mass(s); }

/// Tracks from the target intensity: round(<1, v1>) heaviest tag groups.
[[nodiscard]] inline std::vector<TrackEstimate> extract_tracks(const HybridState& s) {
    const auto count = static_cast<std::size_t>(std::llround(estimate_target_count(s)));
    std::vector<TrackEstimate> out;
    for (std::size_t i : heaviest_tag_groups(s.target_components, count)) {
        const auto& c = s.target_components[i];
        out.push_back({c.tag, c.density.mean, c.model});
    }
    return out;
}

/// Predict-update-reduce driver exposing the per-frame rate estimates.
class LambdaCphdEstimator {
public:
    LambdaCphdEstimator(SystemModel system, EstimatorConfig config)
        : system_(std::move(system)), config_(config), state_(initial_state(config_)) {}

    RateEstimate step(std::span<const Vector> measurements, Diagnostics* diag = nullptr) {
        HybridState predicted = predict_hybrid(state_, system_, config_, diag);
        HybridState updated = update_hybrid(predicted, measurements, system_, config_, diag);
        state_ = reduce_hybrid(updated, config_);
        return estimate_rates(state_);
    }

    [[nodiscard]] const HybridState& state() const { return state_; }
    [[nodiscard]] std::size_t frame() const { return state_.frame; }

private:
    SystemModel system_;
    EstimatorConfig config_;
    HybridState state_;
};

} // namespace rfs::lambda_cphd
