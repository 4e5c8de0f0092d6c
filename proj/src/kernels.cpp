#include "mklpo/kernels.hpp"

#include "mklpo/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>
#include <utility>

namespace mklpo {

namespace {

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return ec == std::errc{} ? std::string(buf, ptr) : std::to_string(v);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

double parse_real(std::string_view text, std::string_view what) {
    double v = 0.0;
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw DataError("kernel spec: invalid value for " + std::string{what} + ": '" + std::string{text} + "'");
    }
    return v;
}

// Parameters seen so far for the item being assembled.
struct PendingSpec {
    KernelKind kind;
    std::optional<double> degree, offset, gamma;
    std::string name;

    void set(std::string_view key, std::string_view value) {
        auto assign = [&](std::optional<double> &slot, bool allowed) {
            if (!allowed) {
                throw DataError("kernel spec: parameter '" + std::string{key} + "' does not apply to " + name);
            }
            if (slot) throw DataError("kernel spec: duplicate parameter '" + std::string{key} + "' for " + name);
            slot = parse_real(value, key);
        };
        if (key == "degree") assign(degree, kind == KernelKind::polynomial);
        else if (key == "offset") assign(offset, kind == KernelKind::polynomial);
        else if (key == "gamma") assign(gamma, kind == KernelKind::rbf);
        else throw DataError("kernel spec: unknown parameter '" + std::string{key} + "'");
    }

    KernelSpec finish() const {
        KernelSpec spec;
        switch (kind) {
        case KernelKind::linear:
            spec = KernelSpec::linear();
            break;
        case KernelKind::polynomial:
            if (!degree || !offset) throw DataError("kernel spec: poly needs degree and offset");
            if (*degree != std::floor(*degree)) throw DataError("kernel spec: poly degree must be an integer");
            spec = KernelSpec::polynomial(static_cast<int>(*degree), *offset);
            break;
        case KernelKind::rbf:
            if (!gamma) throw DataError("kernel spec: rbf needs gamma");
            spec = KernelSpec::rbf(*gamma);
            break;
        }
        spec.validate();
        return spec;
    }
};

}  // namespace

KernelSpec KernelSpec::linear() { return KernelSpec{KernelKind::linear, 0, 0.0, 0.0}; }

KernelSpec KernelSpec::polynomial(int degree, double offset) {
    return KernelSpec{KernelKind::polynomial, degree, offset, 0.0};
}

KernelSpec KernelSpec::rbf(double gamma) { return KernelSpec{KernelKind::rbf, 0, 0.0, gamma}; }

void KernelSpec::validate() const {
    switch (kind) {
    case KernelKind::linear:
        break;
    case KernelKind::polynomial:
        if (degree < 1) throw DataError("polynomial kernel degree must be >= 1");
        if (!std::isfinite(offset)) throw DataError("polynomial kernel offset must be finite");
        break;
    case KernelKind::rbf:
        if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DataError("rbf kernel gamma must be positive");
        break;
    }
}

double KernelSpec::operator()(const Eigen::Ref<const Eigen::VectorXd> &a, const Eigen::Ref<const Eigen::VectorXd> &b) const {
    switch (kind) {
    case KernelKind::linear:
        return a.dot(b);
    case KernelKind::polynomial:
        return std::pow(a.dot(b) + offset, degree);
    case KernelKind::rbf:
        return std::exp(-gamma * (a - b).squaredNorm());
    }
    return 0.0;
}

std::string KernelSpec::to_string() const {
    switch (kind) {
    case KernelKind::linear:
        return "linear";
    case KernelKind::polynomial:
        return "poly:degree=" + std::to_string(degree) + ",offset=" + format_number(offset);
    case KernelKind::rbf:
        return "rbf:gamma=" + format_number(gamma);
    }
    return {};
}

std::vector<KernelSpec> parse_kernel_specs(std::string_view text) {
    std::vector<KernelSpec> specs;
    std::optional<PendingSpec> pending;
    std::string_view rest = text;
    while (true) {
        const auto comma = rest.find(',');
        const auto token = trim(rest.substr(0, comma));
        if (token.empty()) throw DataError("kernel spec: empty item in '" + std::string{text} + "'");

        const auto colon = token.find(':');
        const auto eq = token.find('=');
        if (colon == std::string_view::npos && eq != std::string_view::npos) {
            // key=value continuing the previous item
            if (!pending) throw DataError("kernel spec: parameter '" + std::string{token} + "' without a kernel");
            pending->set(trim(token.substr(0, eq)), trim(token.substr(eq + 1)));
        } else {
            if (pending) specs.push_back(pending->finish());
            const auto name = trim(token.substr(0, colon));
            PendingSpec next{};
            next.name = std::string{name};
            if (name == "linear") next.kind = KernelKind::linear;
            else if (name == "poly" || name == "polynomial") next.kind = KernelKind::polynomial;
            else if (name == "rbf") next.kind = KernelKind::rbf;
            else throw DataError("kernel spec: unknown kernel '" + std::string{name} + "'");
            if (colon != std::string_view::npos) {
                const auto param = trim(token.substr(colon + 1));
                const auto peq = param.find('=');
                if (peq == std::string_view::npos) {
                    throw DataError("kernel spec: expected key=value after '" + std::string{name} + ":'");
                }
                next.set(trim(param.substr(0, peq)), trim(param.substr(peq + 1)));
            }
            pending = std::move(next);
        }
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    specs.push_back(pending->finish());
    return specs;
}

std::string format_kernel_specs(const std::vector<KernelSpec> &specs) {
    std::string out;
    for (const auto &s : specs) {
        if (!out.empty()) out += ',';
        out += s.to_string();
    }
    return out;
}

std::vector<KernelSpec> default_kernel_specs(std::size_t feature_dim) {
    const double scale = 1.0 / static_cast<double>(std::max<std::size_t>(feature_dim, 1));
    return {KernelSpec::linear(),          KernelSpec::polynomial(2, 1.0), KernelSpec::rbf(0.01 * scale),
            KernelSpec::rbf(0.1 * scale), KernelSpec::rbf(1.0 * scale),   KernelSpec::rbf(10.0 * scale)};
}

Eigen::MatrixXd gram(const KernelSpec &spec, const Eigen::MatrixXd &X) {
    spec.validate();
    const Eigen::Index n = X.cols();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            const double v = spec(X.col(i), X.col(j));
            if (!std::isfinite(v)) {
                throw DataError("kernel " + spec.to_string() + " produced a non-finite value for samples (" +
                                std::to_string(i) + ", " + std::to_string(j) + ")");
            }
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

Eigen::MatrixXd cross_gram(const KernelSpec &spec, const Eigen::MatrixXd &A, const Eigen::MatrixXd &B) {
    spec.validate();
    if (A.rows() != B.rows()) {
        throw DataError("kernel: feature dimension mismatch (" + std::to_string(A.rows()) + " vs " +
                        std::to_string(B.rows()) + ")");
    }
    Eigen::MatrixXd K(A.cols(), B.cols());
    for (Eigen::Index j = 0; j < B.cols(); ++j) {
        for (Eigen::Index i = 0; i < A.cols(); ++i) {
            const double v = spec(A.col(i), B.col(j));
            if (!std::isfinite(v)) {
                throw DataError("kernel " + spec.to_string() + " produced a non-finite value for samples (" +
                                std::to_string(i) + ", " + std::to_string(j) + ")");
            }
            K(i, j) = v;
        }
    }
    return K;
}

namespace {

Eigen::VectorXd diagonal_factors(const Eigen::VectorXd &diag) {
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
        if (!(diag(i) > 0.0)) {
            throw DataError("cannot normalize kernel: diagonal entry " + std::to_string(i) + " is " +
                            std::to_string(diag(i)));
        }
    }
    return diag.cwiseSqrt();
}

Eigen::MatrixXd scale_by_factors(const Eigen::MatrixXd &K, const Eigen::VectorXd &row_f, const Eigen::VectorXd &col_f) {
    Eigen::MatrixXd out(K.rows(), K.cols());
    for (Eigen::Index j = 0; j < K.cols(); ++j) {
        for (Eigen::Index i = 0; i < K.rows(); ++i) out(i, j) = K(i, j) / (row_f(i) * col_f(j));
    }
    return out;
}

}  // namespace

Eigen::MatrixXd normalize_unit_diagonal(const Eigen::MatrixXd &K) {
    if (K.rows() != K.cols()) throw DataError("cannot normalize a non-square kernel matrix");
    const Eigen::VectorXd f = diagonal_factors(K.diagonal());
    Eigen::MatrixXd out = scale_by_factors(K, f, f);
    out.diagonal().setOnes();
    return out;
}

KernelBank::KernelBank(std::vector<KernelSpec> specs, const Eigen::MatrixXd &X, bool normalize)
    : specs_{std::move(specs)}, normalized_{normalize} {
    if (specs_.empty()) throw DataError("kernel bank needs at least one kernel");
    grams_.reserve(specs_.size());
    factors_.reserve(specs_.size());
    for (const auto &spec : specs_) {
        Eigen::MatrixXd raw = mklpo::gram(spec, X);
        if (normalize) {
            factors_.push_back(diagonal_factors(raw.diagonal()));
            grams_.push_back(normalize_unit_diagonal(raw));
        } else {
            factors_.push_back(Eigen::VectorXd::Ones(X.cols()));
            grams_.push_back(std::move(raw));
        }
    }
    tau_ = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(specs_.size()), 1.0 / static_cast<double>(specs_.size()));
}

KernelBank::KernelBank(std::vector<KernelSpec> specs, std::vector<Eigen::MatrixXd> grams,
                       std::vector<Eigen::VectorXd> normalization_factors, bool normalized)
    : specs_{std::move(specs)}, grams_{std::move(grams)}, factors_{std::move(normalization_factors)}, normalized_{normalized} {
    if (grams_.empty()) throw DataError("kernel bank needs at least one kernel");
    if (specs_.size() != grams_.size()) throw DataError("kernel bank: spec count differs from gram count");
    const Eigen::Index n = grams_.front().rows();
    for (const auto &K : grams_) {
        if (K.rows() != n || K.cols() != n) throw DataError("kernel bank: gram matrices must share one square shape");
    }
    if (factors_.empty()) factors_.assign(grams_.size(), Eigen::VectorXd::Ones(n));
    if (factors_.size() != grams_.size()) throw DataError("kernel bank: factor count differs from gram count");
    tau_ = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grams_.size()), 1.0 / static_cast<double>(grams_.size()));
}

std::size_t KernelBank::sample_count() const noexcept {
    return grams_.empty() ? 0 : static_cast<std::size_t>(grams_.front().rows());
}

void check_simplex(const Eigen::VectorXd &tau) {
    if (tau.size() == 0) throw DataError("kernel weights are empty");
    if (!tau.allFinite() || tau.minCoeff() < 0.0) throw DataError("kernel weights must be finite and nonnegative");
    if (std::abs(tau.sum() - 1.0) > 1e-9) {
        throw DataError("kernel weights must sum to one (sum is " + format_number(tau.sum()) + ")");
    }
}

void KernelBank::set_tau(Eigen::VectorXd tau) {
    if (static_cast<std::size_t>(tau.size()) != grams_.size()) {
        throw DataError("kernel weights: expected " + std::to_string(grams_.size()) + " entries");
    }
    check_simplex(tau);
    tau_ = std::move(tau);
}

KernelBank KernelBank::single(std::size_t m) const {
    if (m >= grams_.size()) {
        throw DataError("single kernel index " + std::to_string(m) + " out of range for a bank of " +
                        std::to_string(grams_.size()));
    }
    return KernelBank{{specs_[m]}, {grams_[m]}, {factors_[m]}, normalized_};
}

Eigen::MatrixXd combine(const KernelBank &bank) {
    const auto n = static_cast<Eigen::Index>(bank.sample_count());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t m = 0; m < bank.size(); ++m) {
        const double w = bank.tau()(static_cast<Eigen::Index>(m));
        if (w != 0.0) out.noalias() += (w * w) * bank.gram(m);
    }
    return out;
}

Eigen::MatrixXd combine_cross(const std::vector<KernelSpec> &specs, const Eigen::VectorXd &tau,
                              const std::vector<Eigen::VectorXd> &train_factors, bool normalized,
                              const Eigen::MatrixXd &X_train, const Eigen::MatrixXd &X_test) {
    if (X_train.rows() != X_test.rows()) {
        throw DataError("feature dimension mismatch: model expects " + std::to_string(X_train.rows()) +
                        " features, data has " + std::to_string(X_test.rows()));
    }
    if (specs.size() != static_cast<std::size_t>(tau.size()) || specs.size() != train_factors.size()) {
        throw DataError("kernel weights, specs and normalization factors disagree in length");
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(X_train.cols(), X_test.cols());
    for (std::size_t m = 0; m < specs.size(); ++m) {
        const double w = tau(static_cast<Eigen::Index>(m));
        if (w == 0.0) continue;
        Eigen::MatrixXd K = cross_gram(specs[m], X_train, X_test);
        if (normalized) {
            Eigen::VectorXd self(X_test.cols());
            for (Eigen::Index j = 0; j < X_test.cols(); ++j) self(j) = specs[m](X_test.col(j), X_test.col(j));
            K = scale_by_factors(K, train_factors[m], diagonal_factors(self));
        }
        out.noalias() += (w * w) * K;
    }
    return out;
}

Eigen::MatrixXd combine_cross(const KernelBank &bank, const Eigen::MatrixXd &X_train, const Eigen::MatrixXd &X_test) {
    if (static_cast<std::size_t>(X_train.cols()) != bank.sample_count()) {
        throw DataError("training matrix has " + std::to_string(X_train.cols()) + " samples, bank has " +
                        std::to_string(bank.sample_count()));
    }
    return combine_cross(bank.specs(), bank.tau(), bank.normalization_factors(), bank.normalized(), X_train, X_test);
}

}  // namespace mklpo
