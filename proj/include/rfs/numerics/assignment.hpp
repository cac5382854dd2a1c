#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace rfs {

struct Assignment {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col), sorted by row
    double total = 0.0;
};

/// Minimum-cost rectangular assignment. Every row is matched to a distinct
/// column when rows <= cols (the matrix is transposed internally otherwise,
/// so every column gets a distinct row). Shortest augmenting path with dual
/// potentials, O(n^2 m).
[[nodiscard]] inline Assignment assign_min_cost(const Eigen::MatrixXd& cost) {
    Assignment result;
    if (cost.rows() == 0 || cost.cols() == 0) return result;
    if (!cost.allFinite()) {
        throw std::invalid_argument("assign_min_cost: costs must be finite");
    }

    const bool transposed = cost.rows() > cost.cols();
    const Eigen::MatrixXd a = transposed ? Eigen::MatrixXd(cost.transpose()) : cost;
    const std::size_t n = static_cast<std::size_t>(a.rows());
    const std::size_t m = static_cast<std::size_t>(a.cols());
    constexpr double inf = std::numeric_limits<double>::infinity();

    // 1-based arrays; column 0 is a virtual source.
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> row_of_col(m + 1, 0), way(m + 1, 0);

    for (std::size_t i = 1; i <= n; ++i) {
        row_of_col[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = row_of_col[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = a(static_cast<Eigen::Index>(i0 - 1),
                                     static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (row_of_col[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::size_t> col_of_row(n, 0);
    for (std::size_t j = 1; j <= m; ++j) {
        if (row_of_col[j] != 0) col_of_row[row_of_col[j] - 1] = j - 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = col_of_row[i];
        result.total += a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (transposed) {
            result.pairs.emplace_back(j, i);
        } else {
            result.pairs.emplace_back(i, j);
        }
    }
    std::sort(result.pairs.begin(), result.pairs.end());
    return result;
}

} // namespace rfs
