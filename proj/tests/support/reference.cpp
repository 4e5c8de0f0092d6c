#include "reference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace ref {

QpSolution qp_by_faces(const Eigen::MatrixXd &G, const Eigen::VectorXd &l, double C) {
    const auto L = static_cast<int>(l.size());
    if (L > 12) throw std::invalid_argument("qp_by_faces: too many constraints");
    QpSolution best;
    best.alpha = Eigen::VectorXd::Zero(L);
    best.objective = 0.0;
    for (unsigned mask = 1; mask < (1u << L); ++mask) {
        std::vector<int> S;
        for (int i = 0; i < L; ++i) {
            if (mask & (1u << i)) S.push_back(i);
        }
        const int k = static_cast<int>(S.size());
        for (int budget = 0; budget < 2; ++budget) {
            const int dim = k + budget;
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
            Eigen::VectorXd b(dim);
            for (int i = 0; i < k; ++i) {
                for (int j = 0; j < k; ++j) A(i, j) = G(S[i], S[j]);
                b(i) = l(S[i]);
            }
            if (budget) {
                for (int i = 0; i < k; ++i) A(i, k) = A(k, i) = 1.0;
                b(k) = C;
            }
            const Eigen::VectorXd x = A.completeOrthogonalDecomposition().solve(b);
            if (!x.allFinite() || (A * x - b).norm() > 1e-8 * std::max(1.0, b.norm())) continue;
            Eigen::VectorXd a = Eigen::VectorXd::Zero(L);
            bool feasible = true;
            for (int i = 0; i < k; ++i) {
                if (x(i) < -1e-12) feasible = false;
                a(S[i]) = std::max(0.0, x(i));
            }
            if (!feasible || a.sum() > C * (1 + 1e-12)) continue;
            const double obj = -0.5 * a.dot(G * a) + l.dot(a);
            if (obj > best.objective) {
                best.objective = obj;
                best.alpha = a;
            }
        }
    }
    return best;
}

Eigen::VectorXd project_capped(const Eigen::VectorXd &v, double C) {
    Eigen::VectorXd p = v.cwiseMax(0.0);
    if (p.sum() <= C) return p;
    // projection onto {a >= 0, sum a = C}
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cum += u[j];
        const double t = (cum - C) / static_cast<double>(j + 1);
        if (u[j] - t > 0) theta = t;
    }
    return (v.array() - theta).cwiseMax(0.0).matrix();
}

CertifiedValue certified_qp(const Eigen::MatrixXd &Psi, const Eigen::VectorXd &l, double C, double gap,
                            long max_iters) {
    const Eigen::MatrixXd G = Psi.transpose() * Psi;
    const double Lip = std::max(1e-12, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G).eigenvalues().maxCoeff());
    const auto dual = [&](const Eigen::VectorXd &a) { return -0.5 * a.dot(G * a) + l.dot(a); };
    const auto primal = [&](const Eigen::VectorXd &a) {
        const Eigen::VectorXd w = Psi * a;
        const double xi = std::max(0.0, (l - Psi.transpose() * w).maxCoeff());
        return 0.5 * w.squaredNorm() + C * xi;
    };
    Eigen::VectorXd a = Eigen::VectorXd::Zero(l.size());
    Eigen::VectorXd z = a;
    double t = 1.0;
    double best_dual = dual(a);
    double best_primal = primal(a);
    for (long it = 0; it < max_iters; ++it) {
        const Eigen::VectorXd grad = l - G * z;
        const Eigen::VectorXd next = project_capped(z + grad / Lip, C);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        // restart when the objective goes down
        if (dual(next) < dual(a)) {
            z = a;
            t = 1.0;
            continue;
        }
        z = next + ((t - 1.0) / t_next) * (next - a);
        a = next;
        t = t_next;
        if (it % 50 == 0) {
            best_dual = std::max(best_dual, dual(a));
            best_primal = std::min(best_primal, primal(a));
            if (best_primal - best_dual <= gap) break;
        }
    }
    best_dual = std::max(best_dual, dual(a));
    best_primal = std::min(best_primal, primal(a));
    return {best_dual, best_primal};
}

double loss_from_counts(mklpo::MeasureKind kind, long tp, long fp, long tn, long fn) {
    using mklpo::MeasureKind;
    const double TP = tp, FP = fp, TN = tn, FN = fn;
    switch (kind) {
    case MeasureKind::error_rate: return (FP + FN) / (TP + FP + TN + FN);
    case MeasureKind::f1: return 1.0 - 2.0 * TP / (2.0 * TP + FP + FN);
    case MeasureKind::prbep: return 1.0 - TP / (TP + FN);
    case MeasureKind::mcc: {
        const double den = std::sqrt((TP + FP) * (TP + FN) * (TN + FP) * (TN + FN));
        const double mcc = den == 0.0 ? 0.0 : (TP * TN - FP * FN) / den;
        return 0.5 * (1.0 - mcc);
    }
    case MeasureKind::auc: break;
    }
    throw std::invalid_argument("loss_from_counts: pairwise measure");
}

double brute_contingency(mklpo::MeasureKind kind, const mklpo::Labels &y, const Eigen::VectorXd &s) {
    const int n = static_cast<int>(y.size());
    const long n_pos = std::count(y.begin(), y.end(), 1);
    double best = -std::numeric_limits<double>::infinity();
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        long tp = 0, fp = 0, tn = 0, fn = 0;
        double lin = 0.0;
        bool same = true;
        for (int i = 0; i < n; ++i) {
            const int p = (mask >> i) & 1u ? 1 : -1;
            if (p != y[i]) same = false;
            lin += s(i) * p;
            if (y[i] == 1) (p == 1 ? tp : fn) += 1;
            else (p == 1 ? fp : tn) += 1;
        }
        if (same) continue;
        if (kind == mklpo::MeasureKind::prbep && tp + fp != n_pos) continue;
        best = std::max(best, loss_from_counts(kind, tp, fp, tn, fn) + lin);
    }
    return best;
}

double brute_auc(const mklpo::Labels &y, const Eigen::VectorXd &s) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < static_cast<int>(y.size()); ++i) {
        for (int j = 0; j < static_cast<int>(y.size()); ++j) {
            if (y[i] == 1 && y[j] == -1) pairs.emplace_back(i, j);
        }
    }
    const int P = static_cast<int>(pairs.size());
    if (P > 20) throw std::invalid_argument("brute_auc: too many pairs");
    double best = -std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask < (1u << P); ++mask) {
        double v = 0.0;
        for (int p = 0; p < P; ++p) {
            const double d = s(pairs[p].first) - s(pairs[p].second);
            v += (mask >> p) & 1u ? 1.0 / P - 0.5 * d : 0.5 * d;
        }
        best = std::max(best, v);
    }
    return best;
}

mklpo::Labels random_labels(std::mt19937_64 &gen, int n) {
    std::uniform_int_distribution<int> coin(0, 1);
    mklpo::Labels y(n);
    do {
        for (auto &v : y) v = coin(gen) ? 1 : -1;
    } while (std::count(y.begin(), y.end(), 1) == 0 || std::count(y.begin(), y.end(), -1) == 0);
    return y;
}

Eigen::VectorXd random_vector(std::mt19937_64 &gen, int n, double scale) {
    std::normal_distribution<double> nd(0.0, scale);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = nd(gen);
    return v;
}

Eigen::MatrixXd random_psd(std::mt19937_64 &gen, int n, int rank, double scale) {
    std::normal_distribution<double> nd(0.0, scale);
    Eigen::MatrixXd B(rank, n);
    for (int r = 0; r < rank; ++r) {
        for (int c = 0; c < n; ++c) B(r, c) = nd(gen);
    }
    Eigen::MatrixXd G = B.transpose() * B;
    return 0.5 * (G + G.transpose());
}

}  // namespace ref
