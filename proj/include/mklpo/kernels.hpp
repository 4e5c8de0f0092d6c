#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mklpo {

enum class KernelKind { linear, polynomial, rbf };

/// One base kernel of the bank. Only the parameters of `kind` are meaningful.
struct KernelSpec {
    KernelKind kind = KernelKind::linear;
    int degree = 2;       // polynomial
    double offset = 1.0;  // polynomial
    double gamma = 1.0;   // rbf

    [[nodiscard]] static KernelSpec linear();
    [[nodiscard]] static KernelSpec polynomial(int degree, double offset);
    [[nodiscard]] static KernelSpec rbf(double gamma);

    /// Throws DataError when a parameter is out of range.
    void validate() const;

    /// Evaluates k(a, b).
    [[nodiscard]] double operator()(const Eigen::Ref<const Eigen::VectorXd> &a,
                                    const Eigen::Ref<const Eigen::VectorXd> &b) const;

    /// Canonical spelling accepted by parse_kernel_specs.
    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const KernelSpec &, const KernelSpec &) = default;
};

/// Parses `linear,poly:degree=2,offset=1,rbf:gamma=0.1`. A `key=value` token
/// without a kind prefix continues the preceding item.
[[nodiscard]] std::vector<KernelSpec> parse_kernel_specs(std::string_view text);
[[nodiscard]] std::string format_kernel_specs(const std::vector<KernelSpec> &specs);

/// linear; poly degree 2 offset 1; rbf with gamma in {0.01, 0.1, 1, 10} / d.
[[nodiscard]] std::vector<KernelSpec> default_kernel_specs(std::size_t feature_dim);

/// n x n Gram matrix of the columns of X. Throws DataError naming the
/// offending pair when an entry is not finite.
[[nodiscard]] Eigen::MatrixXd gram(const KernelSpec &spec, const Eigen::MatrixXd &X);

/// Rectangular kernel matrix between the columns of A and the columns of B.
[[nodiscard]] Eigen::MatrixXd cross_gram(const KernelSpec &spec, const Eigen::MatrixXd &A, const Eigen::MatrixXd &B);

/// K'_ij = K_ij / sqrt(K_ii K_jj). Throws DataError on a non-positive diagonal.
[[nodiscard]] Eigen::MatrixXd normalize_unit_diagonal(const Eigen::MatrixXd &K);

/// Base Gram matrices of the training set together with the kernel weights.
/// The combined kernel is sum_m tau_m^2 K_m.
class KernelBank {
  public:
    KernelBank() = default;

    /// Computes every Gram matrix of X; when `normalize` is set each one is
    /// scaled to unit diagonal. tau starts uniform.
    KernelBank(std::vector<KernelSpec> specs, const Eigen::MatrixXd &X, bool normalize);

    /// Bank over precomputed matrices (tests, duplicated kernels).
    KernelBank(std::vector<KernelSpec> specs, std::vector<Eigen::MatrixXd> grams,
               std::vector<Eigen::VectorXd> normalization_factors, bool normalized);

    [[nodiscard]] std::size_t size() const noexcept { return grams_.size(); }
    [[nodiscard]] std::size_t sample_count() const noexcept;
    [[nodiscard]] const std::vector<KernelSpec> &specs() const noexcept { return specs_; }
    [[nodiscard]] const std::vector<Eigen::MatrixXd> &grams() const noexcept { return grams_; }
    [[nodiscard]] const Eigen::MatrixXd &gram(std::size_t m) const { return grams_.at(m); }
    [[nodiscard]] const Eigen::VectorXd &tau() const noexcept { return tau_; }
    [[nodiscard]] bool normalized() const noexcept { return normalized_; }

    /// sqrt(k_m(x_i, x_i)) of the raw kernel, one vector per kernel; all ones
    /// when the bank is not normalized.
    [[nodiscard]] const std::vector<Eigen::VectorXd> &normalization_factors() const noexcept { return factors_; }

    /// Replaces tau. Throws DataError unless tau is on the simplex.
    void set_tau(Eigen::VectorXd tau);

    /// Restricts the bank to kernel `m` (single-kernel baseline).
    [[nodiscard]] KernelBank single(std::size_t m) const;

  private:
    std::vector<KernelSpec> specs_;
    std::vector<Eigen::MatrixXd> grams_;
    std::vector<Eigen::VectorXd> factors_;
    Eigen::VectorXd tau_;
    bool normalized_ = true;
};

/// Throws DataError unless tau >= 0 and sums to one within 1e-9.
void check_simplex(const Eigen::VectorXd &tau);

/// sum_m tau_m^2 K_m over the training set.
[[nodiscard]] Eigen::MatrixXd combine(const KernelBank &bank);

/// sum_m tau_m^2 K_m(X_train, X_test) with the training normalization
/// factors; result is n_train x n_test.
[[nodiscard]] Eigen::MatrixXd combine_cross(const KernelBank &bank, const Eigen::MatrixXd &X_train,
                                            const Eigen::MatrixXd &X_test);

/// Same computation from the pieces a stored model keeps.
[[nodiscard]] Eigen::MatrixXd combine_cross(const std::vector<KernelSpec> &specs, const Eigen::VectorXd &tau,
                                            const std::vector<Eigen::VectorXd> &train_factors, bool normalized,
                                            const Eigen::MatrixXd &X_train, const Eigen::MatrixXd &X_test);

}  // namespace mklpo
