#pragma once

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "rfs/numerics/log_weight.hpp"

namespace rfs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a covariance or innovation matrix loses positive definiteness.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GaussianDensity {
    Vector mean;
    Matrix covariance;
};

[[nodiscard]] inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// True when `cov` is square, symmetric to 1e-9 relative and positive definite.
[[nodiscard]] inline bool is_valid_covariance(const Matrix& cov) {
    if (cov.rows() != cov.cols() || cov.rows() == 0) return false;
    if (!cov.allFinite()) return false;
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) return false;
    Eigen::LLT<Matrix> llt(symmetrized(cov));
    return llt.info() == Eigen::Success;
}

/// Positive semidefinite check for process-noise matrices, which may be zero.
[[nodiscard]] inline bool is_psd(const Matrix& m, double tol = 1e-12) {
    if (m.rows() != m.cols() || !m.allFinite()) return false;
    if (m.size() == 0) return true;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(m), Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return eig.eigenvalues().minCoeff() >= -tol * scale;
}

[[nodiscard]] inline GaussianDensity gaussian_predict(const GaussianDensity& g,
                                                      const Matrix& transition,
                                                      const Matrix& process_noise) {
    const auto n = g.mean.size();
    if (g.covariance.rows() != n || g.covariance.cols() != n || transition.cols() != n ||
        process_noise.rows() != transition.rows() || process_noise.cols() != transition.rows()) {
        throw std::invalid_argument("gaussian_predict: dimension mismatch");
    }
    GaussianDensity out;
    out.mean = transition * g.mean;
    out.covariance =
        symmetrized(transition * g.covariance * transition.transpose() + process_noise);
    return out;
}

/// Measurement-independent parts of a Kalman update for one prior density.
/// Computing these once per component lets many measurements reuse them.
class KalmanCorrector {
public:
    KalmanCorrector(const GaussianDensity& prior, const Matrix& observation,
                    const Matrix& measurement_noise)
        : prior_mean_(prior.mean) {
        const auto n = prior.mean.size();
        const auto m = observation.rows();
        if (observation.cols() != n || prior.covariance.rows() != n ||
            measurement_noise.rows() != m || measurement_noise.cols() != m) {
            throw std::invalid_argument("gaussian_update: dimension mismatch");
        }
        predicted_measurement_ = observation * prior.mean;
        const Matrix ph = prior.covariance * observation.transpose();
        const Matrix innovation_cov = symmetrized(observation * ph + measurement_noise);
        Eigen::LLT<Matrix> llt(innovation_cov);
        if (llt.info() != Eigen::Success || !innovation_cov.allFinite()) {
            std::ostringstream msg;
            msg << "gaussian_update: innovation covariance not positive definite\n"
                << innovation_cov;
            throw NumericalError(msg.str());
        }
        const Matrix lower = llt.matrixL();
        log_det_ = 2.0 * lower.diagonal().array().log().sum();
        innovation_chol_ = llt;
        gain_ = llt.solve(ph.transpose()).transpose();

        // Joseph form keeps the posterior covariance symmetric positive definite.
        const Matrix ikh = Matrix::Identity(n, n) - gain_ * observation;
        posterior_cov_ = symmetrized(ikh * prior.covariance * ikh.transpose() +
                                     gain_ * measurement_noise * gain_.transpose());
        log_norm_ = -0.5 * (static_cast<double>(m) * std::log(2.0 * std::numbers::pi) + log_det_);
    }

    [[nodiscard]] double squared_mahalanobis(const Vector& z) const {
        const Vector nu = z - predicted_measurement_;
        return nu.dot(innovation_chol_.solve(nu));
    }

    /// ln N(z; H m, S).
    [[nodiscard]] double log_likelihood(const Vector& z) const {
        return log_norm_ - 0.5 * squared_mahalanobis(z);
    }

    [[nodiscard]] GaussianDensity posterior(const Vector& z) const {
        return {prior_mean_ + gain_ * (z - predicted_measurement_), posterior_cov_};
    }

    [[nodiscard]] const Matrix& posterior_covariance() const { return posterior_cov_; }

private:
    Vector prior_mean_;
    Vector predicted_measurement_;
    Eigen::LLT<Matrix> innovation_chol_;
    Matrix gain_;
    Matrix posterior_cov_;
    double log_det_ = 0.0;
    double log_norm_ = 0.0;
};

struct GaussianUpdateResult {
    GaussianDensity posterior;
    LogWeight predictive_loglik;
};

[[nodiscard]] inline GaussianUpdateResult gaussian_update(const GaussianDensity& g,
                                                          const Vector& z,
                                                          const Matrix& observation,
                                                          const Matrix& measurement_noise) {
    const KalmanCorrector corrector(g, observation, measurement_noise);
    return {corrector.posterior(z), LogWeight(corrector.log_likelihood(z))};
}

} // namespace rfs
