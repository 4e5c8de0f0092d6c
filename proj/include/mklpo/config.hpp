#pragma once

#include "mklpo/measures.hpp"

#include <cstdint>

namespace mklpo {

/// Training parameters.
struct TrainConfig {
    /// Trade-off between the regularizer and the slack.
    double C = 100.0;
    /// A new constraint must be violated by more than xi + epsilon.
    double epsilon = 1e-3;
    /// Hard cap on cutting-plane iterations.
    int max_outer_iters = 500;
    /// KKT residual at which the alpha QP stops.
    double qp_tolerance = 1e-9;
    /// Projected subgradient steps per tau update.
    int tau_step_iters = 100;
    MeasureKind measure = MeasureKind::error_rate;
    std::uint64_t seed = 0;
    /// Scale every base Gram matrix to unit diagonal.
    bool normalize_kernels = true;

    /// Throws DataError on non-positive parameters.
    void validate() const;

    friend bool operator==(const TrainConfig &, const TrainConfig &) = default;
};

}  // namespace mklpo
