#pragma once

// Independent reference computations used only by the tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace rfs::testing {

/// e_j by summing over every subset (2^n terms).
inline std::vector<double> esf_brute_force(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<double> e(n + 1, 0.0);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double prod = 1.0;
        std::size_t bits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (std::size_t{1} << i)) {
                prod *= xs[i];
                ++bits;
            }
        }
        e[bits] += prod;
    }
    return e;
}

/// Minimum over injective row->column maps (rows <= cols) by enumerating
/// column permutations.
inline double assignment_brute_force(const Eigen::MatrixXd& cost) {
    Eigen::MatrixXd a = cost.rows() <= cost.cols() ? cost : Eigen::MatrixXd(cost.transpose());
    const auto rows = static_cast<std::size_t>(a.rows());
    std::vector<std::size_t> cols(static_cast<std::size_t>(a.cols()));
    std::iota(cols.begin(), cols.end(), 0);
    double best = INFINITY;
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < rows; ++i) total += a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols[i]));
        best = std::min(best, total);
    } while (std::next_permutation(cols.begin(), cols.end()));
    return rows == 0 ? 0.0 : best;
}

/// Plain OSPA by enumerating every permutation of the larger set.
inline double ospa_brute_force(const std::vector<Eigen::VectorXd>& x, const std::vector<Eigen::VectorXd>& y,
                               double c, double p) {
    const auto& small = x.size() <= y.size() ? x : y;
    const auto& large = x.size() <= y.size() ? y : x;
    const std::size_t m = small.size(), n = large.size();
    if (n == 0) return 0.0;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += std::pow(std::min(c, (small[i] - large[perm[i]]).norm()), p);
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::pow((best + std::pow(c, p) * static_cast<double>(n - m)) / static_cast<double>(n), 1.0 / p);
}

/// Entry-by-entry A * B.
inline Eigen::MatrixXd naive_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows(), b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j)
            for (Eigen::Index k = 0; k < a.cols(); ++k) out(i, j) += a(i, k) * b(k, j);
    return out;
}

/// Scalar/vector Kalman filter written out directly (no shared code).
struct ReferenceKalman {
    Eigen::VectorXd x;
    Eigen::MatrixXd p;

    void predict(const Eigen::MatrixXd& f, const Eigen::MatrixXd& q) {
        x = f * x;
        p = f * p * f.transpose() + q;
    }
    void update(const Eigen::VectorXd& z, const Eigen::MatrixXd& h, const Eigen::MatrixXd& r) {
        const Eigen::MatrixXd s = h * p * h.transpose() + r;
        const Eigen::MatrixXd k = p * h.transpose() * s.inverse();
        x = x + k * (z - h * x);
        p = (Eigen::MatrixXd::Identity(p.rows(), p.cols()) - k * h) * p;
    }
};

inline double binomial_exact(unsigned n, unsigned k) {
    if (k > n) return 0.0;
    double r = 1.0;
    for (unsigned i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return std::round(r);
}

} // namespace rfs::testing
