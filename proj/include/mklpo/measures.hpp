#pragma once

#include "mklpo/dataset.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <string_view>

namespace mklpo {

enum class MeasureKind { error_rate, f1, prbep, mcc, auc };

inline constexpr std::array<MeasureKind, 5> all_measures{MeasureKind::error_rate, MeasureKind::f1, MeasureKind::prbep,
                                                          MeasureKind::mcc, MeasureKind::auc};

/// CLI spelling: err, f1, prbep, mcc, auc.
[[nodiscard]] std::string_view measure_name(MeasureKind kind) noexcept;
[[nodiscard]] MeasureKind parse_measure(std::string_view name);

struct ContingencyTable {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    [[nodiscard]] std::size_t total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const ContingencyTable &, const ContingencyTable &) = default;
};

[[nodiscard]] ContingencyTable contingency(const Labels &y_true, const Labels &y_pred);

/// Matthews correlation; 0 when the denominator vanishes.
[[nodiscard]] double matthews(const ContingencyTable &ct) noexcept;

/// Loss in [0, 1] of a contingency measure. AUC is pairwise, see delta_auc.
[[nodiscard]] double delta(MeasureKind kind, const ContingencyTable &ct);

/// Fraction of (positive, negative) pairs ranked in the wrong order, ties
/// counting one half.
[[nodiscard]] double delta_auc(const Labels &y_true, const Eigen::VectorXd &scores);

/// Goodness metric reported to users: ACC, F1, MCC from sign(scores) with
/// sign(0) = +1; PR-BEP as precision of the top n_pos scores; AUC.
[[nodiscard]] double evaluate(MeasureKind kind, const Labels &y_true, const Eigen::VectorXd &scores);

/// sign with sign(0) = +1.
[[nodiscard]] Labels decisions(const Eigen::VectorXd &scores);

}  // namespace mklpo
