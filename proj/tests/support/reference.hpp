#pragma once

#include "mklpo/dataset.hpp"
#include "mklpo/measures.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace ref {

/// max -1/2 a'Ga + l'a over {a >= 0, sum a <= C} by enumerating every face
/// (support set, budget on or off) and keeping the best feasible stationary
/// point. Exponential; meant for |W| <= 8.
struct QpSolution {
    Eigen::VectorXd alpha;
    double objective = 0.0;
};
QpSolution qp_by_faces(const Eigen::MatrixXd &G, const Eigen::VectorXd &l, double C);

/// Euclidean projection onto {a >= 0, sum a <= C}.
Eigen::VectorXd project_capped(const Eigen::VectorXd &v, double C);

/// Accelerated projected gradient on the same QP, run until the duality gap
/// against the primal min_w 1/2|w|^2 + C max(0, max_l(l_l - psi_l'w)) drops
/// below `gap`. `Psi` holds one column psi_l per constraint (G = Psi'Psi).
struct CertifiedValue {
    double lower = 0.0;  // dual value
    double upper = 0.0;  // primal value
};
CertifiedValue certified_qp(const Eigen::MatrixXd &Psi, const Eigen::VectorXd &l, double C, double gap,
                            long max_iters = 2'000'000);

/// Contingency loss written out from the counts.
double loss_from_counts(mklpo::MeasureKind kind, long tp, long fp, long tn, long fn);

/// Exhaustive loss-augmented argmax over label tuples (y itself excluded,
/// PR-BEP restricted to the break-even tuples). Returns the best value.
double brute_contingency(mklpo::MeasureKind kind, const mklpo::Labels &y, const Eigen::VectorXd &s);

/// Exhaustive pairwise AUC argmax over all swap patterns except "none".
double brute_auc(const mklpo::Labels &y, const Eigen::VectorXd &s);

/// Labels with both classes present.
mklpo::Labels random_labels(std::mt19937_64 &gen, int n);
Eigen::VectorXd random_vector(std::mt19937_64 &gen, int n, double scale);
/// B'B with B of `rank` rows.
Eigen::MatrixXd random_psd(std::mt19937_64 &gen, int n, int rank, double scale);

}  // namespace ref
