#include "mklpo/config.hpp"

#include "mklpo/error.hpp"

#include <cmath>

namespace mklpo {

void TrainConfig::validate() const {
    const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(C)) throw DataError("C must be positive");
    if (!positive(epsilon)) throw DataError("epsilon must be positive");
    if (max_outer_iters < 1) throw DataError("max iterations must be at least 1");
    if (!positive(qp_tolerance)) throw DataError("QP tolerance must be positive");
    if (tau_step_iters < 1) throw DataError("tau step iterations must be at least 1");
}

}  // namespace mklpo
