#pragma once

#include "mklpo/dataset.hpp"
#include "mklpo/measures.hpp"

#include <Eigen/Dense>

#include <set>
#include <vector>

namespace mklpo {

/// Identity of a constraint. For contingency measures this is the label
/// tuple y''; for AUC it is the vector of net pair counts, which fixes both
/// the coefficient vector and the loss.
using LabelingKey = std::vector<int>;
using LabelingSet = std::set<LabelingKey>;

/// Result of a loss-augmented argmax.
struct AugmentedObjective {
    LabelingKey labeling;
    /// Constraint coefficients: y - y'' for contingency measures, the net
    /// pair coefficients for AUC.
    Eigen::VectorXd coeff;
    /// Delta(y, y'').
    double loss = 0.0;
    /// Delta(y, y'') + <scores, y''> (contingency) or
    /// Delta + sum over pairs of 1/2 y_ij (s_i - s_j) (AUC).
    double value = 0.0;

    /// Amount by which the constraint is violated at `scores`: loss - <scores, coeff>.
    [[nodiscard]] double violation(const Eigen::VectorXd &scores) const { return loss - scores.dot(coeff); }
};

/// s_i = sum_l alpha_l sum_j coeff_l[j] K[j, i].
[[nodiscard]] Eigen::VectorXd scores_from_dual(const Eigen::VectorXd &alpha, const std::vector<Eigen::VectorXd> &coeffs,
                                               const Eigen::MatrixXd &K);

/// Exact maximizer for ErrorRate, F1, PRBEP and MCC over the (a, b) grid of
/// contingency cells. Throws OracleExhausted when every cell is excluded.
[[nodiscard]] AugmentedObjective argmax_contingency(MeasureKind kind, const Labels &y, const Eigen::VectorXd &scores,
                                                    const LabelingSet &excluded);

/// Exact maximizer of the pairwise AUC objective; every (pos, neg) pair
/// decides its swap independently. The all-correct ordering is never
/// returned. Throws OracleExhausted when no admissible assignment is left.
[[nodiscard]] AugmentedObjective argmax_auc(const Labels &y, const Eigen::VectorXd &scores, const LabelingSet &excluded);

/// Dispatches on `kind`.
[[nodiscard]] AugmentedObjective loss_augmented_argmax(MeasureKind kind, const Labels &y, const Eigen::VectorXd &scores,
                                                       const LabelingSet &excluded);

/// Exhaustive reference: all 2^n labelings (n <= 20) or all pair
/// assignments (n_pos * n_neg <= 20). y itself and the all-correct pair
/// assignment are always excluded.
[[nodiscard]] AugmentedObjective brute_force_argmax(MeasureKind kind, const Labels &y, const Eigen::VectorXd &scores,
                                                    const LabelingSet &excluded);

/// Objective of an explicit label tuple, used to cross-check oracle output.
[[nodiscard]] double contingency_objective(MeasureKind kind, const Labels &y, const Labels &candidate,
                                           const Eigen::VectorXd &scores);

}  // namespace mklpo
