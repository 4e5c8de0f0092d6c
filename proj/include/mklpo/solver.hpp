#pragma once

#include "mklpo/config.hpp"
#include "mklpo/dataset.hpp"
#include "mklpo/inference.hpp"
#include "mklpo/kernels.hpp"
#include "mklpo/model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

namespace mklpo {

struct Constraint {
    Eigen::VectorXd coeff;
    double loss = 0.0;
    LabelingKey labeling;
};

/// The constraints enforced so far, in insertion order, without duplicates.
class WorkingSet {
  public:
    [[nodiscard]] std::size_t size() const noexcept { return constraints_.size(); }
    [[nodiscard]] bool empty() const noexcept { return constraints_.empty(); }
    [[nodiscard]] const Constraint &operator[](std::size_t l) const { return constraints_[l]; }
    [[nodiscard]] const std::vector<Constraint> &constraints() const noexcept { return constraints_; }
    [[nodiscard]] const LabelingSet &labelings() const noexcept { return keys_; }
    [[nodiscard]] bool contains(const LabelingKey &key) const { return keys_.contains(key); }

    /// Throws SolverError on a duplicate labeling.
    void add(Constraint c);

    [[nodiscard]] std::vector<Eigen::VectorXd> coefficients() const;
    [[nodiscard]] Eigen::VectorXd losses() const;

  private:
    std::vector<Constraint> constraints_;
    LabelingSet keys_;
};

/// Per-kernel matrices G_m[l, k] = coeff_l^T K_m coeff_k, grown by one row
/// and column per added constraint. K_m coeff_l is cached for the scores.
class GramProducts {
  public:
    explicit GramProducts(const KernelBank &bank);

    void add(const Eigen::VectorXd &coeff);

    [[nodiscard]] std::size_t size() const noexcept { return count_; }
    [[nodiscard]] const std::vector<Eigen::MatrixXd> &per_kernel() const noexcept { return G_; }
    /// sum_m tau_m^2 G_m.
    [[nodiscard]] Eigen::MatrixXd combined(const Eigen::VectorXd &tau) const;
    /// Scores of the training samples: sum_m tau_m^2 sum_l alpha_l K_m coeff_l.
    [[nodiscard]] Eigen::VectorXd scores(const Eigen::VectorXd &alpha, const Eigen::VectorXd &tau) const;

  private:
    const KernelBank *bank_;
    std::size_t count_ = 0;
    std::vector<Eigen::MatrixXd> G_;
    std::vector<Eigen::MatrixXd> KC_;  // per kernel, n x capacity, column l = K_m coeff_l
};

/// One-shot version of GramProducts for a fixed working set.
[[nodiscard]] std::vector<Eigen::MatrixXd> gram_products(const std::vector<Eigen::VectorXd> &coeffs,
                                                         const KernelBank &bank);

struct DualState {
    Eigen::VectorXd alpha;
    /// max(0, max_l (loss_l - (G alpha)_l)).
    double xi = 0.0;
    /// -1/2 alpha^T G alpha + loss^T alpha.
    double objective = 0.0;
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
};

/// Largest violation max(0, max_l (loss_l - margin_l)) with margin = G alpha.
[[nodiscard]] double slack(const Eigen::MatrixXd &G, const Eigen::VectorXd &alpha, const Eigen::VectorXd &losses);

/// Maximizes -1/2 a^T G a + loss^T a over {a >= 0, sum a <= C} with
/// conditional-gradient steps over the vertices {0, C e_l} and away steps.
/// The KKT residual is the gap between the best vertex gradient value and the
/// worst active one. Throws SolverError when G is indefinite or `max_iters`
/// passes without reaching `tolerance` (0 picks a cap from the size).
[[nodiscard]] DualState solve_alpha_qp(const Eigen::MatrixXd &G, const Eigen::VectorXd &losses, double C,
                                       double tolerance, const Eigen::VectorXd &warm_start = {},
                                       std::size_t max_iters = 0);

/// Working-set primal objective as a function of tau for fixed alpha:
/// F(tau) = 1/2 sum_m tau_m^2 q_m + C max(0, max_l (loss_l - sum_m tau_m^2 r_lm))
/// with q_m = alpha^T G_m alpha and r_lm = (G_m alpha)_l.
class TauObjective {
  public:
    TauObjective(const std::vector<Eigen::MatrixXd> &G_m, const Eigen::VectorXd &alpha, const Eigen::VectorXd &losses,
                 double C);

    [[nodiscard]] double operator()(const Eigen::VectorXd &tau) const;
    /// A subgradient at tau.
    [[nodiscard]] Eigen::VectorXd subgradient(const Eigen::VectorXd &tau) const;

    [[nodiscard]] std::size_t kernels() const noexcept { return static_cast<std::size_t>(q_.size()); }
    [[nodiscard]] const Eigen::VectorXd &q() const noexcept { return q_; }
    [[nodiscard]] const Eigen::MatrixXd &r() const noexcept { return r_; }
    [[nodiscard]] const Eigen::VectorXd &losses() const noexcept { return losses_; }
    [[nodiscard]] double C() const noexcept { return C_; }

  private:
    Eigen::VectorXd q_;
    Eigen::MatrixXd r_;  // |W| x M
    Eigen::VectorXd losses_;
    double C_;
};

/// Euclidean projection onto {tau >= 0, sum tau = 1}.
[[nodiscard]] Eigen::VectorXd project_to_simplex(const Eigen::VectorXd &v);

/// Projected subgradient descent on F with step 1/sqrt(t), followed by
/// exact minimization along the edges tau_m + tau_k = const. Returns the best
/// point seen; never worse than tau_current.
[[nodiscard]] Eigen::VectorXd solve_tau_step(const std::vector<Eigen::MatrixXd> &G_m, const Eigen::VectorXd &alpha,
                                             const Eigen::VectorXd &losses, double C,
                                             const Eigen::VectorXd &tau_current, int tau_step_iters);

enum class StopReason { converged, oracle_exhausted, iteration_cap };
[[nodiscard]] std::string_view stop_reason_name(StopReason reason) noexcept;

/// Progress record of one outer iteration.
struct IterationRecord {
    int iteration = 0;
    std::size_t working_set_size = 0;
    /// Violation of the constraint returned by the oracle before it was added.
    double violation = 0.0;
    /// Slack after the tau update.
    double xi = 0.0;
    /// Working-set primal objective after the alpha step and after the tau step.
    double objective_after_alpha = 0.0;
    double objective = 0.0;
    Eigen::VectorXd tau;
};

struct TrainResult {
    Model model;
    std::vector<IterationRecord> history;
    StopReason stop = StopReason::iteration_cap;
    int iterations = 0;
    /// Violation of the oracle's best new constraint at termination.
    double final_violation = 0.0;
    double xi = 0.0;
    /// Working-set primal objective 1/2 ||w||^2 + C xi at termination.
    double objective = 0.0;
    /// Training scores at termination.
    Eigen::VectorXd train_scores;
};

using ProgressCallback = std::function<void(const IterationRecord &)>;

/// Cutting-plane training with alternating alpha / tau updates. The bank's
/// tau is reset to uniform first.
[[nodiscard]] TrainResult mklpo_train(const Dataset &data, KernelBank bank, const TrainConfig &config,
                                      const ProgressCallback &progress = {});

}  // namespace mklpo
