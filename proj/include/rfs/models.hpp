#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "rfs/cardinality.hpp"
#include "rfs/numerics/gaussian.hpp"

namespace rfs {

/// Linear-Gaussian motion model x' = F x + w, w ~ N(0, Q), one frame step.
struct MotionModel {
    Matrix transition;
    Matrix process_noise;
};

/// Jump-Markov motion: `switching(i, j)` is the probability of moving from
/// model i to model j, `birth_probs(j)` the model prior of a new target.
/// Model indices are zero-based.
struct ModelSet {
    std::vector<MotionModel> models;
    Matrix switching;
    Vector birth_probs;

    [[nodiscard]] std::size_t size() const { return models.size(); }
    [[nodiscard]] Eigen::Index state_dim() const {
        return models.empty() ? 0 : models.front().transition.rows();
    }
};

/// z = H x + v, v ~ N(0, R), with z the 2-D position.
struct MeasurementModel {
    Matrix observation;
    Matrix noise;
};

struct WeightedGaussian {
    double weight = 0.0;
    GaussianDensity density;
};

struct BirthModel {
    std::vector<WeightedGaussian> intensity;
    CardinalityDistribution cardinality;
};

/// Axis-aligned rectangle in measurement units.
struct Region {
    double x_min = 0.0;
    double x_max = 1.0;
    double y_min = 0.0;
    double y_max = 1.0;

    [[nodiscard]] double width() const { return x_max - x_min; }
    [[nodiscard]] double height() const { return y_max - y_min; }
    [[nodiscard]] double area() const { return width() * height(); }
    [[nodiscard]] bool contains(double x, double y) const {
        return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
    }
    [[nodiscard]] bool contains(const Vector& z) const { return contains(z(0), z(1)); }
};

/// Poisson clutter with uniform spatial density over `region`.
struct ClutterModel {
    Region region;
    double rate = 0.0;
};

[[nodiscard]] inline double clutter_spatial_density(const ClutterModel& model, const Vector& z) {
    return model.region.contains(z) ? 1.0 / model.region.area() : 0.0;
}

struct SurvivalDetectionParams {
    double p_survival = 0.99;
    double p_detection = 0.9;
};

/// Everything the filters and the simulator share about the world.
struct SystemModel {
    ModelSet motion;
    MeasurementModel measurement;
    BirthModel birth;
    ClutterModel clutter;
    SurvivalDetectionParams rates;
};

/// Reports every violated invariant; an empty result means the bundle is valid.
[[nodiscard]] inline std::vector<std::string> validate(const SystemModel& sys) {
    std::vector<std::string> errors;
    auto fail = [&](const std::string& msg) { errors.push_back(msg); };

    const std::size_t r = sys.motion.size();
    const Eigen::Index n = sys.motion.state_dim();
    if (r == 0) fail("motion: no models");
    for (std::size_t i = 0; i < r; ++i) {
        const auto& m = sys.motion.models[i];
        const std::string tag = "motion model " + std::to_string(i);
        if (m.transition.rows() != n || m.transition.cols() != n) fail(tag + ": F not square of state dimension");
        if (m.process_noise.rows() != n || m.process_noise.cols() != n) {
            fail(tag + ": Q dimension mismatch");
        } else if (!is_psd(m.process_noise) ||
                   (m.process_noise - m.process_noise.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
            fail(tag + ": Q is not a valid covariance (asymmetric or negative eigenvalue)");
        }
    }
    if (static_cast<std::size_t>(sys.motion.switching.rows()) != r ||
        static_cast<std::size_t>(sys.motion.switching.cols()) != r) {
        fail("switching matrix must be R x R");
    } else {
        for (std::size_t i = 0; i < r; ++i) {
            const auto row = sys.motion.switching.row(static_cast<Eigen::Index>(i));
            if (row.minCoeff() < 0.0 || std::abs(row.sum() - 1.0) > 1e-12) {
                std::ostringstream msg;
                msg << "switching row " << i << " sums to " << row.sum() << " (must be 1)";
                fail(msg.str());
            }
        }
    }
    if (static_cast<std::size_t>(sys.motion.birth_probs.size()) != r) {
        fail("birth model probabilities must have length R");
    } else if (sys.motion.birth_probs.minCoeff() < 0.0 ||
               std::abs(sys.motion.birth_probs.sum() - 1.0) > 1e-12) {
        fail("birth model probabilities must sum to 1");
    }

    const auto& meas = sys.measurement;
    if (meas.observation.rows() != 2 || meas.observation.cols() != n) fail("measurement: H must be 2 x state dimension");
    if (meas.noise.rows() != 2 || !is_valid_covariance(meas.noise)) fail("measurement: R is not a valid 2x2 covariance");

    for (std::size_t i = 0; i < sys.birth.intensity.size(); ++i) {
        const auto& b = sys.birth.intensity[i];
        if (!(b.weight >= 0.0)) fail("birth component " + std::to_string(i) + ": negative weight");
        if (b.density.mean.size() != n || !is_valid_covariance(b.density.covariance)) {
            fail("birth component " + std::to_string(i) + ": invalid Gaussian");
        }
    }
    if (std::abs(sys.birth.cardinality.sum() - 1.0) > 1e-9) fail("birth cardinality must sum to 1");

    if (!(sys.clutter.region.area() > 0.0)) fail("clutter region must have positive area");
    if (!(sys.clutter.rate >= 0.0)) fail("clutter rate must be >= 0");
    const auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!in_unit(sys.rates.p_survival)) fail("p_S outside [0,1]");
    if (!in_unit(sys.rates.p_detection)) fail("p_D outside [0,1]");
    return errors;
}

// ---- default bundle -------------------------------------------------------

/// Tunables of the default two-model kinematics (pixels, frames).
struct KinematicParams {
    double dt = 1.0;
    double random_walk_sigma = 1.0;     // position diffusion per frame
    double random_walk_vel_sigma = 1.0; // velocity re-draw spread under random walk
    double accel_sigma = 0.1;           // white acceleration of the near-constant-velocity model
    double stay_probability = 0.9;      // diagonal of the switching matrix
    double measurement_sigma = 1.0;
};

/// Random walk (position diffuses, velocity forgotten) and near-constant velocity.
[[nodiscard]] inline ModelSet default_model_set(const KinematicParams& p = {}) {
    ModelSet set;
    Matrix f_rw = Matrix::Zero(4, 4);
    f_rw(0, 0) = f_rw(1, 1) = 1.0;
    Matrix q_rw = Matrix::Zero(4, 4);
    q_rw(0, 0) = q_rw(1, 1) = p.random_walk_sigma * p.random_walk_sigma;
    q_rw(2, 2) = q_rw(3, 3) = p.random_walk_vel_sigma * p.random_walk_vel_sigma;

    Matrix f_cv = Matrix::Identity(4, 4);
    f_cv(0, 2) = f_cv(1, 3) = p.dt;
    const double dt2 = p.dt * p.dt;
    const double var = p.accel_sigma * p.accel_sigma;
    Matrix q_cv = Matrix::Zero(4, 4);
    q_cv(0, 0) = q_cv(1, 1) = var * dt2 * dt2 / 4.0;
    q_cv(0, 2) = q_cv(2, 0) = q_cv(1, 3) = q_cv(3, 1) = var * dt2 * p.dt / 2.0;
    q_cv(2, 2) = q_cv(3, 3) = var * dt2;

    set.models = {{f_rw, q_rw}, {f_cv, q_cv}};
    set.switching.resize(2, 2);
    set.switching << p.stay_probability, 1.0 - p.stay_probability, 1.0 - p.stay_probability,
        p.stay_probability;
    set.birth_probs = Vector::Constant(2, 0.5);
    return set;
}

[[nodiscard]] inline MeasurementModel default_measurement_model(double sigma = 1.0) {
    MeasurementModel m;
    m.observation = Matrix::Zero(2, 4);
    m.observation(0, 0) = m.observation(1, 1) = 1.0;
    m.noise = Matrix::Identity(2, 2) * sigma * sigma;
    return m;
}

/// One broad Gaussian centred on the region, position spread half the region
/// extent, carrying `birth_rate` expected targets per frame.
[[nodiscard]] inline BirthModel default_birth_model(const Region& region, double birth_rate,
                                                    std::size_t n_max, double velocity_sigma = 1.0) {
    BirthModel birth;
    GaussianDensity g;
    g.mean = Vector::Zero(4);
    g.mean(0) = 0.5 * (region.x_min + region.x_max);
    g.mean(1) = 0.5 * (region.y_min + region.y_max);
    g.covariance = Matrix::Zero(4, 4);
    g.covariance(0, 0) = std::pow(0.5 * region.width(), 2);
    g.covariance(1, 1) = std::pow(0.5 * region.height(), 2);
    g.covariance(2, 2) = g.covariance(3, 3) = velocity_sigma * velocity_sigma;
    birth.intensity.push_back({birth_rate, g});
    birth.cardinality = CardinalityDistribution::poisson(birth_rate, n_max);
    return birth;
}

} // namespace rfs
