#pragma once

#include "mklpo/config.hpp"
#include "mklpo/kernels.hpp"
#include "mklpo/measures.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

namespace mklpo {

/// A trained classifier in dual form:
/// score(x) = sum_l alpha_l coeff_l^T K_tau(X_train, x).
struct Model {
    static constexpr int format_version = 1;

    MeasureKind measure = MeasureKind::error_rate;
    std::vector<KernelSpec> kernel_specs;
    Eigen::VectorXd tau;
    Eigen::VectorXd alpha;
    /// |W| x n, row l holds the coefficients of constraint l.
    Eigen::MatrixXd constraint_coeffs;
    /// d x n.
    Eigen::MatrixXd training_features;
    /// One n-vector of sqrt(k_m(x, x)) per kernel.
    std::vector<Eigen::VectorXd> normalization_factors;
    TrainConfig config;

    /// Throws DataError when shapes disagree or tau / alpha leave their domain.
    void validate() const;

    /// Scores of the columns of X_new. Throws DataError on a feature
    /// dimension mismatch.
    [[nodiscard]] Eigen::VectorXd predict_scores(const Eigen::MatrixXd &X_new) const;

    /// sum_l alpha_l coeff_l.
    [[nodiscard]] Eigen::VectorXd expansion() const;
};

/// Writes a JSON document with round-trip precision numbers.
void save(const Model &model, std::ostream &out);
/// Throws DataError on a version mismatch, a missing or mistyped field or a
/// non-finite number.
[[nodiscard]] Model load(std::istream &in);

}  // namespace mklpo
