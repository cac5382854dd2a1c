#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rfs/numerics/gaussian.hpp"

namespace rfs {

using Tag = std::uint64_t;
using MeasurementSet = std::vector<Vector>;

struct TrackEstimate {
    Tag tag = 0;
    Vector state;
    std::size_t model = 0;
};

/// Output of one filtering frame: tracks plus the clutter rate and detection
/// probability that were used (or estimated) for it.
struct FrameEstimate {
    std::size_t frame = 0;
    std::vector<TrackEstimate> tracks;
    double lambda_hat = 0.0;
    double p_d_hat = 0.0;
};

} // namespace rfs
