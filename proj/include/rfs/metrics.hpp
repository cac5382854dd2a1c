#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rfs/numerics/assignment.hpp"
#include "rfs/numerics/gaussian.hpp"

/// OSPA and OSPA-T evaluation.
namespace rfs::metrics {

using PointSet = std::vector<Vector>;

struct OspaResult {
    double total = 0.0;
    double location = 0.0;
    double cardinality = 0.0;
};

struct LabeledPoint {
    std::uint64_t label = 0;
    Vector position;
};

/// Index k holds frame k+1.
using LabeledTrackSet = std::vector<std::vector<LabeledPoint>>;

namespace detail {

// OSPA for |X| = m <= n = |Y| given the cut-off base distance d_c(i, j).
template <class Dist>
OspaResult ospa_core(std::size_t m, std::size_t n, double c, double p, Dist dist) {
    if (n == 0) return {};
    const double cp = std::pow(c, p);
    double matched = 0.0;
    if (m > 0) {
        Eigen::MatrixXd cost(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::pow(dist(i, j), p);
            }
        }
        const Assignment a = assign_min_cost(cost);
        std::vector<double> picked;
        picked.reserve(a.pairs.size());
        for (const auto& [i, j] : a.pairs) {
            picked.push_back(cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        std::sort(picked.begin(), picked.end());
        for (double v : picked) matched += v;
    }
    const double dn = static_cast<double>(n);
    const double missing = cp * static_cast<double>(n - m);
    OspaResult r;
    r.location = std::pow(matched / dn, 1.0 / p);
    r.cardinality = std::pow(missing / dn, 1.0 / p);
    r.total = std::min(c, std::pow((matched + missing) / dn, 1.0 / p));
    return r;
}

inline bool lexicographically_less(const PointSet& a, const PointSet& b) {
    auto sorted = [](PointSet s) {
        std::sort(s.begin(), s.end(), [](const Vector& x, const Vector& y) {
            return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
        });
        return s;
    };
    const PointSet sa = sorted(a), sb = sorted(b);
    for (std::size_t i = 0; i < sa.size(); ++i) {
        const auto& x = sa[i];
        const auto& y = sb[i];
        if (std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size())) return true;
        if (std::lexicographical_compare(y.data(), y.data() + y.size(), x.data(), x.data() + x.size())) return false;
    }
    return false;
}

inline void check_params(double c, double p) {
    if (!(c > 0.0)) throw std::invalid_argument("ospa: cut-off c must be > 0");
    if (!(p >= 1.0)) throw std::invalid_argument("ospa: order p must be >= 1");
}

} // namespace detail

/// OSPA distance of order p with cut-off c and Euclidean base distance.
/// Two empty sets are at distance 0.
[[nodiscard]] inline OspaResult ospa(const PointSet& x, const PointSet& y, double c, double p) {
    detail::check_params(c, p);
    // Orient so the smaller set indexes rows; equal sizes use a canonical order
    // so that ospa(X, Y) and ospa(Y, X) run identical arithmetic.
    const bool swap = x.size() > y.size() ||
                      (x.size() == y.size() && detail::lexicographically_less(y, x));
    const PointSet& small = swap ? y : x;
    const PointSet& large = swap ? x : y;
    return detail::ospa_core(small.size(), large.size(), c, p, [&](std::size_t i, std::size_t j) {
        return std::min(c, (small[i] - large[j]).norm());
    });
}

/// GT label -> estimated label pairing minimizing the summed trajectory cost
/// (cut-off distance where both exist, c where only one does).
[[nodiscard]] inline std::map<std::uint64_t, std::uint64_t> global_label_correspondence(
    const LabeledTrackSet& gt, const LabeledTrackSet& est, double c, double p) {
    detail::check_params(c, p);
    std::map<std::uint64_t, std::size_t> gt_index, est_index;
    std::vector<std::size_t> gt_len, est_len;
    auto index_labels = [](const LabeledTrackSet& set, std::map<std::uint64_t, std::size_t>& idx,
                           std::vector<std::size_t>& len) {
        for (const auto& frame : set) {
            for (const auto& pt : frame) {
                auto [it, inserted] = idx.try_emplace(pt.label, idx.size());
                if (inserted) len.push_back(0);
                ++len[it->second];
            }
        }
    };
    index_labels(gt, gt_index, gt_len);
    index_labels(est, est_index, est_len);
    if (gt_index.empty() || est_index.empty()) return {};

    const auto rows = static_cast<Eigen::Index>(gt_index.size());
    const auto cols = static_cast<Eigen::Index>(est_index.size());
    Eigen::MatrixXd overlap_cost = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::MatrixXd overlap_frames = Eigen::MatrixXd::Zero(rows, cols);
    const std::size_t frames = std::min(gt.size(), est.size());
    for (std::size_t k = 0; k < frames; ++k) {
        for (const auto& g : gt[k]) {
            const auto i = static_cast<Eigen::Index>(gt_index.at(g.label));
            for (const auto& e : est[k]) {
                const auto j = static_cast<Eigen::Index>(est_index.at(e.label));
                overlap_cost(i, j) += std::min(c, (g.position - e.position).norm());
                overlap_frames(i, j) += 1.0;
            }
        }
    }
    Eigen::MatrixXd cost(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double only_one = static_cast<double>(gt_len[static_cast<std::size_t>(i)] +
                                                        est_len[static_cast<std::size_t>(j)]) -
                                    2.0 * overlap_frames(i, j);
            cost(i, j) = overlap_cost(i, j) + c * only_one;
        }
    }
    std::vector<std::uint64_t> gt_labels(gt_index.size()), est_labels(est_index.size());
    for (const auto& [label, i] : gt_index) gt_labels[i] = label;
    for (const auto& [label, j] : est_index) est_labels[j] = label;

    std::map<std::uint64_t, std::uint64_t> pairing;
    for (const auto& [i, j] : assign_min_cost(cost).pairs) pairing[gt_labels[i]] = est_labels[j];
    return pairing;
}

/// Arithmetic mean of each field over frames.
[[nodiscard]] inline OspaResult summarize(const std::vector<OspaResult>& per_frame) {
    if (per_frame.empty()) throw std::invalid_argument("summarize: no frames");
    OspaResult mean;
    for (const auto& r : per_frame) {
        mean.total += r.total;
        mean.location += r.location;
        mean.cardinality += r.cardinality;
    }
    const double n = static_cast<double>(per_frame.size());
    mean.total /= n;
    mean.location /= n;
    mean.cardinality /= n;
    return mean;
}

struct OspaTResult {
    std::vector<OspaResult> per_frame;
    OspaResult average;
    std::map<std::uint64_t, std::uint64_t> correspondence;
};

/// OSPA-T: OSPA per frame with base distance
/// min(c, (|x-y|^p + (ell * [labels differ])^p)^(1/p)) after a single global
/// label correspondence.
[[nodiscard]] inline OspaTResult ospa_t(const LabeledTrackSet& gt, const LabeledTrackSet& est, double c,
                                        double p, double ell) {
    detail::check_params(c, p);
    if (!(ell >= 0.0 && ell <= c)) throw std::invalid_argument("ospa_t: ell must lie in [0, c]");
    if (gt.size() != est.size()) throw std::invalid_argument("ospa_t: frame counts differ");

    OspaTResult out;
    out.correspondence = global_label_correspondence(gt, est, c, p);
    const double penalty = std::pow(ell, p);
    for (std::size_t k = 0; k < gt.size(); ++k) {
        const auto& g = gt[k];
        const auto& e = est[k];
        auto base = [&](const LabeledPoint& truth, const LabeledPoint& guess) {
            const auto it = out.correspondence.find(truth.label);
            const bool match = it != out.correspondence.end() && it->second == guess.label;
            const double d = std::pow((truth.position - guess.position).norm(), p) + (match ? 0.0 : penalty);
            return std::min(c, std::pow(d, 1.0 / p));
        };
        if (g.size() <= e.size()) {
            out.per_frame.push_back(detail::ospa_core(g.size(), e.size(), c, p,
                                                      [&](std::size_t i, std::size_t j) { return base(g[i], e[j]); }));
        } else {
            out.per_frame.push_back(detail::ospa_core(e.size(), g.size(), c, p,
                                                      [&](std::size_t i, std::size_t j) { return base(g[j], e[i]); }));
        }
    }
    if (!out.per_frame.empty()) out.average = summarize(out.per_frame);
    return out;
}

} // namespace rfs::metrics
