#include "mklpo/solver.hpp"

#include "mklpo/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

namespace mklpo {

// ---------------------------------------------------------------------------
// Working set and Gram products

void WorkingSet::add(Constraint c) {
    if (!keys_.insert(c.labeling).second) {
        throw SolverError("working set already holds this labeling");
    }
    constraints_.push_back(std::move(c));
}

std::vector<Eigen::VectorXd> WorkingSet::coefficients() const {
    std::vector<Eigen::VectorXd> out;
    out.reserve(constraints_.size());
    for (const auto &c : constraints_) out.push_back(c.coeff);
    return out;
}

Eigen::VectorXd WorkingSet::losses() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(constraints_.size()));
    for (std::size_t l = 0; l < constraints_.size(); ++l) out(static_cast<Eigen::Index>(l)) = constraints_[l].loss;
    return out;
}

GramProducts::GramProducts(const KernelBank &bank) : bank_{&bank}, G_(bank.size()), KC_(bank.size()) {
    for (auto &G : G_) G.resize(0, 0);
    for (auto &KC : KC_) KC.resize(static_cast<Eigen::Index>(bank.sample_count()), 0);
}

void GramProducts::add(const Eigen::VectorXd &coeff) {
    const auto n = static_cast<Eigen::Index>(bank_->sample_count());
    if (coeff.size() != n) throw DataError("constraint coefficients have the wrong length");
    const auto k = static_cast<Eigen::Index>(count_);
    for (std::size_t m = 0; m < G_.size(); ++m) {
        const Eigen::VectorXd u = bank_->gram(m) * coeff;
        if (KC_[m].cols() <= k) {
            Eigen::MatrixXd grown(n, std::max<Eigen::Index>(8, 2 * KC_[m].cols()));
            grown.leftCols(k) = KC_[m].leftCols(k);
            KC_[m].swap(grown);
        }
        KC_[m].col(k) = u;

        Eigen::MatrixXd G(k + 1, k + 1);
        G.topLeftCorner(k, k) = G_[m];
        const Eigen::VectorXd row = KC_[m].leftCols(k).transpose() * coeff;
        G.block(0, k, k, 1) = row;
        G.block(k, 0, 1, k) = row.transpose();
        G(k, k) = coeff.dot(u);
        G_[m].swap(G);
    }
    ++count_;
}

Eigen::MatrixXd GramProducts::combined(const Eigen::VectorXd &tau) const {
    const auto k = static_cast<Eigen::Index>(count_);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k, k);
    for (std::size_t m = 0; m < G_.size(); ++m) {
        const double w = tau(static_cast<Eigen::Index>(m));
        if (w != 0.0) out.noalias() += (w * w) * G_[m];
    }
    return out;
}

Eigen::VectorXd GramProducts::scores(const Eigen::VectorXd &alpha, const Eigen::VectorXd &tau) const {
    const auto n = static_cast<Eigen::Index>(bank_->sample_count());
    const auto k = static_cast<Eigen::Index>(count_);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
    if (k == 0) return s;
    for (std::size_t m = 0; m < KC_.size(); ++m) {
        const double w = tau(static_cast<Eigen::Index>(m));
        if (w != 0.0) s.noalias() += (w * w) * (KC_[m].leftCols(k) * alpha);
    }
    return s;
}

std::vector<Eigen::MatrixXd> gram_products(const std::vector<Eigen::VectorXd> &coeffs, const KernelBank &bank) {
    if (coeffs.empty()) throw DataError("gram products need a nonempty working set");
    GramProducts gp{bank};
    for (const auto &c : coeffs) gp.add(c);
    return gp.per_kernel();
}

// ---------------------------------------------------------------------------
// alpha step

double slack(const Eigen::MatrixXd &G, const Eigen::VectorXd &alpha, const Eigen::VectorXd &losses) {
    if (losses.size() == 0) return 0.0;
    const Eigen::VectorXd violation = losses - G * alpha;
    return std::max(0.0, violation.maxCoeff());
}

namespace {

struct QpPoint {
    Eigen::VectorXd alpha;
    Eigen::VectorXd h;  // G alpha
};

double dual_objective(const QpPoint &p, const Eigen::VectorXd &losses) {
    return -0.5 * p.alpha.dot(p.h) + losses.dot(p.alpha);
}

bool origin_active(double total, double C) { return total < C * (1.0 - 1e-12); }

// Gap between the best vertex and the worst active vertex, measured in
// gradient units. Vertex values: g_l for C e_l, 0 for the origin.
double kkt_residual(const QpPoint &p, const Eigen::VectorXd &losses, double C) {
    const Eigen::VectorXd g = losses - p.h;
    const double best = std::max(0.0, g.maxCoeff());
    double worst_active = std::numeric_limits<double>::infinity();
    if (origin_active(p.alpha.sum(), C)) worst_active = 0.0;
    for (Eigen::Index l = 0; l < g.size(); ++l) {
        if (p.alpha(l) > 0.0) worst_active = std::min(worst_active, g(l));
    }
    return std::isinf(worst_active) ? 0.0 : best - worst_active;
}

// Primal active-set method on min 1/2 a^T G a - l^T a from a feasible point.
// The reduced Hessian may be singular: a descent direction in its null space
// is followed until a bound or the budget blocks it.
std::optional<QpPoint> active_set_finish(const Eigen::MatrixXd &G, const Eigen::VectorXd &losses, double C,
                                         const QpPoint &start, double tolerance) {
    const Eigen::Index L = losses.size();
    Eigen::VectorXd a = start.alpha.cwiseMax(0.0);
    if (a.sum() > C) a *= C / a.sum();
    std::vector<bool> at_bound(static_cast<std::size_t>(L));
    for (Eigen::Index i = 0; i < L; ++i) at_bound[static_cast<std::size_t>(i)] = a(i) <= 0.0;
    bool budget = !origin_active(a.sum(), C);
    const double scale = std::max(1.0, G.diagonal().maxCoeff());

    const int cap = 100 + 20 * static_cast<int>(L);
    bool face_minimum = false;  // set after an unblocked Newton step
    for (int it = 0; it < cap; ++it) {
        const Eigen::VectorXd grad = G * a - losses;
        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < L; ++i) {
            if (!at_bound[static_cast<std::size_t>(i)]) free.push_back(i);
        }
        const auto k = static_cast<Eigen::Index>(free.size());
        if (k == 0) budget = false;

        // Orthonormal basis Z of the free subspace, minus the budget normal.
        Eigen::MatrixXd Z;
        if (budget) {
            const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k);
            const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(ones).householderQ();
            Z = Q.rightCols(k - 1);
        } else {
            Z = Eigen::MatrixXd::Identity(k, k);
        }
        Eigen::MatrixXd G_ff(k, k);
        Eigen::VectorXd g_f(k);
        for (Eigen::Index r = 0; r < k; ++r) {
            g_f(r) = grad(free[static_cast<std::size_t>(r)]);
            for (Eigen::Index c = 0; c < k; ++c) G_ff(r, c) = G(free[static_cast<std::size_t>(r)], free[static_cast<std::size_t>(c)]);
        }

        Eigen::VectorXd step_f = Eigen::VectorXd::Zero(k);
        bool ray = false;
        const Eigen::VectorXd c = Z.transpose() * g_f;
        const bool stationary = face_minimum || c.size() == 0 || c.cwiseAbs().maxCoeff() <= tolerance;
        face_minimum = false;
        if (!stationary) {
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Z.transpose() * G_ff * Z);
            const Eigen::VectorXd &lambda = es.eigenvalues();
            const Eigen::MatrixXd &V = es.eigenvectors();
            const Eigen::VectorXd cv = V.transpose() * c;
            const double flat = 1e-10 * std::max(scale, lambda.cwiseAbs().maxCoeff());
            Eigen::VectorXd y = Eigen::VectorXd::Zero(lambda.size());
            Eigen::VectorXd ray_y = Eigen::VectorXd::Zero(lambda.size());
            for (Eigen::Index j = 0; j < lambda.size(); ++j) {
                if (lambda(j) > flat) {
                    y(j) = -cv(j) / lambda(j);
                } else if (std::abs(cv(j)) > 1e-3 * tolerance) {
                    ray_y(j) = -cv(j);
                    ray = true;
                }
            }
            step_f = Z * (V * (ray ? ray_y : y));
        }

        if (stationary) {
            // Stationary on the face: check the multipliers.
            double nu = 0.0;
            if (budget) nu = -g_f.mean();
            Eigen::Index drop = -1;
            double worst = -tolerance;
            if (budget && nu < worst) {
                worst = nu;
                drop = L;
            }
            for (Eigen::Index i = 0; i < L; ++i) {
                if (!at_bound[static_cast<std::size_t>(i)]) continue;
                const double mu = grad(i) + nu;
                if (mu < worst) {
                    worst = mu;
                    drop = i;
                }
            }
            if (drop < 0) {
                QpPoint out{a, G * a};
                return out;
            }
            if (drop == L) budget = false;
            else at_bound[static_cast<std::size_t>(drop)] = false;
            continue;
        }

        // Longest feasible step along step_f, capped at 1 unless following a ray.
        double t = ray ? std::numeric_limits<double>::infinity() : 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index r = 0; r < k; ++r) {
            if (step_f(r) < 0.0) {
                const double lim = -a(free[static_cast<std::size_t>(r)]) / step_f(r);
                if (lim < t) {
                    t = lim;
                    blocking = free[static_cast<std::size_t>(r)];
                }
            }
        }
        if (!budget && step_f.sum() > 0.0) {
            const double lim = std::max(0.0, C - a.sum()) / step_f.sum();
            if (lim < t) {
                t = lim;
                blocking = L;
            }
        }
        if (std::isinf(t)) return std::nullopt;
        face_minimum = !ray && blocking < 0;
        for (Eigen::Index r = 0; r < k; ++r) a(free[static_cast<std::size_t>(r)]) += t * step_f(r);
        if (blocking == L) {
            budget = true;
        } else if (blocking >= 0) {
            a(blocking) = 0.0;
            at_bound[static_cast<std::size_t>(blocking)] = true;
        }
        a = a.cwiseMax(0.0);
        if (a.sum() > C || budget) a *= C / a.sum();
    }
    return std::nullopt;
}

std::string format_residual(double r) {
    std::ostringstream os;
    os << r;
    return os.str();
}

}  // namespace

DualState solve_alpha_qp(const Eigen::MatrixXd &G, const Eigen::VectorXd &losses, double C, double tolerance,
                         const Eigen::VectorXd &warm_start, std::size_t max_iters) {
    const Eigen::Index L = losses.size();
    if (G.rows() != L || G.cols() != L) throw DataError("alpha QP: Gram matrix does not match the number of losses");
    if (!(C > 0.0)) throw DataError("alpha QP: C must be positive");
    if (!(tolerance > 0.0)) throw DataError("alpha QP: tolerance must be positive");
    if (warm_start.size() > L) throw DataError("alpha QP: warm start longer than the working set");
    DualState state;
    if (L == 0) {
        state.alpha.resize(0);
        return state;
    }

    const double scale = std::max(1.0, G.diagonal().cwiseAbs().maxCoeff());
    const double psd_slack = 1e-9 * scale;
    if (G.diagonal().minCoeff() < -psd_slack) {
        throw SolverError("alpha QP: Gram matrix is indefinite (negative diagonal entry " +
                          format_residual(G.diagonal().minCoeff()) + ")");
    }
    for (Eigen::Index i = 0; i < L; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            const double minor = G(i, i) * G(j, j) - G(i, j) * G(j, i);
            if (minor < -psd_slack * scale) {
                throw SolverError("alpha QP: Gram matrix is indefinite (2x2 minor " + format_residual(minor) + " at " +
                                  std::to_string(j) + ", " + std::to_string(i) + ")");
            }
        }
    }
    if (max_iters == 0) max_iters = 100000 + 2000 * static_cast<std::size_t>(L);

    QpPoint p;
    p.alpha = Eigen::VectorXd::Zero(L);
    p.alpha.head(warm_start.size()) = warm_start.cwiseMax(0.0);
    if (p.alpha.sum() > C) p.alpha *= C / p.alpha.sum();
    p.h = G * p.alpha;

    const double threshold = tolerance * std::max(1.0, C);
    double residual = kkt_residual(p, losses, C);
    std::size_t iter = 0;
    const std::size_t polish_every = std::max<std::size_t>(20, static_cast<std::size_t>(L));
    for (; iter < max_iters && residual > threshold; ++iter) {
        if (iter % polish_every == 0) {
            if (auto q = active_set_finish(G, losses, C, p, threshold)) {
                const double r = kkt_residual(*q, losses, C);
                if (r < residual && dual_objective(*q, losses) >= dual_objective(p, losses) - 1e-12 * scale) {
                    p = std::move(*q);
                    residual = r;
                }
            }
            if (residual <= threshold) break;
        }

        const Eigen::VectorXd g = losses - p.h;
        const double total = p.alpha.sum();
        const double ga = g.dot(p.alpha);
        const double aha = p.alpha.dot(p.h);

        // Frank-Wolfe vertex: C e_s when g_s > 0, otherwise the origin.
        Eigen::Index s = 0;
        const double g_max = g.maxCoeff(&s);
        const bool fw_origin = g_max <= 0.0;
        const double fw_gap = (fw_origin ? 0.0 : C * g_max) - ga;

        // Away vertex: the active vertex with the lowest value.
        Eigen::Index away = -1;  // -1 is the origin
        double away_value = std::numeric_limits<double>::infinity();
        const double origin_weight = 1.0 - total / C;
        if (origin_active(total, C)) away_value = 0.0;
        for (Eigen::Index l = 0; l < L; ++l) {
            if (p.alpha(l) > 0.0 && C * g(l) < away_value) {
                away_value = C * g(l);
                away = l;
            }
        }
        const double away_gap = ga - away_value;

        if (fw_gap >= away_gap) {
            // d = v - alpha
            double dgd = aha;
            double dd = p.alpha.squaredNorm();
            if (!fw_origin) {
                dgd += C * C * G(s, s) - 2.0 * C * p.h(s);
                dd += C * C - 2.0 * C * p.alpha(s);
            }
            if (dgd < -psd_slack * std::max(1.0, dd)) {
                throw SolverError("alpha QP: Gram matrix is indefinite (curvature " + format_residual(dgd) + ")");
            }
            const double step = dgd > 0.0 ? std::min(1.0, fw_gap / dgd) : 1.0;
            p.alpha *= 1.0 - step;
            p.h *= 1.0 - step;
            if (!fw_origin) {
                p.alpha(s) += step * C;
                p.h.noalias() += (step * C) * G.col(s);
            }
        } else {
            // d = alpha - u
            const double weight = away < 0 ? origin_weight : p.alpha(away) / C;
            const double max_step = weight / (1.0 - weight);
            double dgd = aha;
            double dd = p.alpha.squaredNorm();
            if (away >= 0) {
                dgd += C * C * G(away, away) - 2.0 * C * p.h(away);
                dd += C * C - 2.0 * C * p.alpha(away);
            }
            if (dgd < -psd_slack * std::max(1.0, dd)) {
                throw SolverError("alpha QP: Gram matrix is indefinite (curvature " + format_residual(dgd) + ")");
            }
            const double step = dgd > 0.0 ? std::min(max_step, away_gap / dgd) : max_step;
            const bool drop = step >= max_step;
            p.alpha *= 1.0 + step;
            p.h *= 1.0 + step;
            if (away >= 0) {
                p.alpha(away) -= step * C;
                p.h.noalias() -= (step * C) * G.col(away);
                if (drop) p.alpha(away) = 0.0;
            } else if (drop) {
                p.alpha *= C / p.alpha.sum();
            }
        }
        p.alpha = p.alpha.cwiseMax(0.0);
        if (p.alpha.sum() > C) p.alpha *= C / p.alpha.sum();
        if ((iter + 1) % 64 == 0) p.h = G * p.alpha;
        residual = kkt_residual(p, losses, C);
    }
    p.h = G * p.alpha;
    residual = kkt_residual(p, losses, C);
    if (residual > threshold) {
        throw SolverError("alpha QP: no convergence after " + std::to_string(iter) + " iterations (KKT residual " +
                          format_residual(residual) + ")");
    }

    state.alpha = std::move(p.alpha);
    state.objective = -0.5 * state.alpha.dot(p.h) + losses.dot(state.alpha);
    state.xi = std::max(0.0, (losses - p.h).maxCoeff());
    state.kkt_residual = residual;
    state.iterations = iter;
    return state;
}

// ---------------------------------------------------------------------------
// tau step

TauObjective::TauObjective(const std::vector<Eigen::MatrixXd> &G_m, const Eigen::VectorXd &alpha,
                           const Eigen::VectorXd &losses, double C)
    : q_(static_cast<Eigen::Index>(G_m.size())), r_(losses.size(), static_cast<Eigen::Index>(G_m.size())),
      losses_{losses}, C_{C} {
    for (std::size_t m = 0; m < G_m.size(); ++m) {
        if (G_m[m].rows() != alpha.size() || G_m[m].cols() != alpha.size() || alpha.size() != losses.size()) {
            throw DataError("tau objective: working-set dimensions disagree");
        }
        const Eigen::VectorXd Ga = G_m[m] * alpha;
        q_(static_cast<Eigen::Index>(m)) = alpha.dot(Ga);
        r_.col(static_cast<Eigen::Index>(m)) = Ga;
    }
}

double TauObjective::operator()(const Eigen::VectorXd &tau) const {
    const Eigen::VectorXd t2 = tau.cwiseAbs2();
    double hinge = 0.0;
    if (losses_.size() > 0) hinge = std::max(0.0, (losses_ - r_ * t2).maxCoeff());
    return 0.5 * q_.dot(t2) + C_ * hinge;
}

Eigen::VectorXd TauObjective::subgradient(const Eigen::VectorXd &tau) const {
    Eigen::VectorXd g = q_.cwiseProduct(tau);
    if (losses_.size() > 0) {
        const Eigen::VectorXd t2 = tau.cwiseAbs2();
        Eigen::Index worst = 0;
        const double v = (losses_ - r_ * t2).maxCoeff(&worst);
        if (v > 0.0) g -= 2.0 * C_ * r_.row(worst).transpose().cwiseProduct(tau);
    }
    return g;
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd &v) {
    const Eigen::Index M = v.size();
    std::vector<double> sorted(v.data(), v.data() + M);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (Eigen::Index k = 0; k < M; ++k) {
        cumulative += sorted[static_cast<std::size_t>(k)];
        const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
        if (sorted[static_cast<std::size_t>(k)] - t > 0.0) theta = t;
    }
    Eigen::VectorXd out = (v.array() - theta).cwiseMax(0.0).matrix();
    const double total = out.sum();
    if (total > 0.0) out /= total;
    return out;
}

namespace {

// F restricted to tau_m = x, tau_k = s - x with the other weights fixed is
// the upper envelope of quadratics A x^2 + B x + D, one per hinge piece plus
// the hinge-free piece.
struct Quadratic {
    double A, B, D;
    [[nodiscard]] double operator()(double x) const { return (A * x + B) * x + D; }
};

std::vector<Quadratic> edge_pieces(const TauObjective &F, const Eigen::VectorXd &tau, Eigen::Index m, Eigen::Index k) {
    const double s = tau(m) + tau(k);
    const Eigen::VectorXd t2 = tau.cwiseAbs2();
    const auto piece = [&](const Eigen::VectorXd &coef, double constant) {
        double rest = constant;
        for (Eigen::Index j = 0; j < coef.size(); ++j) {
            if (j != m && j != k) rest += coef(j) * t2(j);
        }
        const double cm = coef(m);
        const double ck = coef(k);
        return Quadratic{cm + ck, -2.0 * ck * s, ck * s * s + rest};
    };
    std::vector<Quadratic> pieces;
    pieces.reserve(static_cast<std::size_t>(F.losses().size()) + 1);
    const Eigen::VectorXd half_q = 0.5 * F.q();
    pieces.push_back(piece(half_q, 0.0));
    for (Eigen::Index l = 0; l < F.losses().size(); ++l) {
        pieces.push_back(piece(half_q - F.C() * F.r().row(l).transpose(), F.C() * F.losses()(l)));
    }
    return pieces;
}

double envelope(const std::vector<Quadratic> &pieces, double x) {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto &q : pieces) v = std::max(v, q(x));
    return v;
}

std::size_t top_piece(const std::vector<Quadratic> &pieces, double x) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < pieces.size(); ++j) {
        if (pieces[j](x) > pieces[best](x)) best = j;
    }
    return best;
}

// Global minimum of the envelope on [0, hi]: scan a uniform grid, then around
// each grid local minimum test the stationary points and the pairwise
// crossings of the pieces that are on top nearby.
std::pair<double, double> minimize_envelope(const std::vector<Quadratic> &pieces, double hi) {
    constexpr int intervals = 1024;
    if (hi <= 0.0) return {0.0, envelope(pieces, 0.0)};
    std::vector<double> xs(intervals + 1);
    std::vector<double> fs(intervals + 1);
    for (int i = 0; i <= intervals; ++i) {
        xs[static_cast<std::size_t>(i)] = hi * static_cast<double>(i) / intervals;
        fs[static_cast<std::size_t>(i)] = envelope(pieces, xs[static_cast<std::size_t>(i)]);
    }
    double best_x = xs[0];
    double best_f = fs[0];
    for (int i = 1; i <= intervals; ++i) {
        if (fs[static_cast<std::size_t>(i)] < best_f) {
            best_f = fs[static_cast<std::size_t>(i)];
            best_x = xs[static_cast<std::size_t>(i)];
        }
    }

    std::vector<int> minima;
    for (int i = 0; i <= intervals; ++i) {
        const double f = fs[static_cast<std::size_t>(i)];
        const bool left_ok = i == 0 || f <= fs[static_cast<std::size_t>(i - 1)];
        const bool right_ok = i == intervals || f <= fs[static_cast<std::size_t>(i + 1)];
        if (left_ok && right_ok) minima.push_back(i);
    }
    std::sort(minima.begin(), minima.end(), [&](int a, int b) { return fs[static_cast<std::size_t>(a)] < fs[static_cast<std::size_t>(b)]; });
    if (minima.size() > 8) minima.resize(8);

    const auto consider = [&](double x, double lo_b, double hi_b) {
        if (!(x >= lo_b && x <= hi_b)) return;
        const double f = envelope(pieces, x);
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    };
    for (const int i : minima) {
        const double lo_b = xs[static_cast<std::size_t>(std::max(0, i - 1))];
        const double hi_b = xs[static_cast<std::size_t>(std::min(intervals, i + 1))];
        std::vector<std::size_t> top;
        for (const double x : {lo_b, xs[static_cast<std::size_t>(i)], hi_b, 0.5 * (lo_b + xs[static_cast<std::size_t>(i)]),
                               0.5 * (hi_b + xs[static_cast<std::size_t>(i)])}) {
            const std::size_t j = top_piece(pieces, x);
            if (std::find(top.begin(), top.end(), j) == top.end()) top.push_back(j);
        }
        for (const auto j : top) {
            const auto &q = pieces[j];
            if (q.A > 0.0) consider(-q.B / (2.0 * q.A), lo_b, hi_b);
        }
        for (std::size_t a = 0; a < top.size(); ++a) {
            for (std::size_t b = a + 1; b < top.size(); ++b) {
                const double A = pieces[top[a]].A - pieces[top[b]].A;
                const double B = pieces[top[a]].B - pieces[top[b]].B;
                const double D = pieces[top[a]].D - pieces[top[b]].D;
                if (std::abs(A) <= 1e-300) {
                    if (B != 0.0) consider(-D / B, lo_b, hi_b);
                    continue;
                }
                const double disc = B * B - 4.0 * A * D;
                if (disc < 0.0) continue;
                const double sq = std::sqrt(disc);
                // numerically stable pair of roots
                const double qq = -0.5 * (B + std::copysign(sq, B));
                consider(qq / A, lo_b, hi_b);
                if (qq != 0.0) consider(D / qq, lo_b, hi_b);
            }
        }
    }
    return {best_x, best_f};
}

}  // namespace

Eigen::VectorXd solve_tau_step(const std::vector<Eigen::MatrixXd> &G_m, const Eigen::VectorXd &alpha,
                               const Eigen::VectorXd &losses, double C, const Eigen::VectorXd &tau_current,
                               int tau_step_iters) {
    check_simplex(tau_current);
    if (static_cast<std::size_t>(tau_current.size()) != G_m.size()) {
        throw DataError("tau step: weight count differs from kernel count");
    }
    const Eigen::Index M = tau_current.size();
    if (M == 1) return Eigen::VectorXd::Ones(1);

    const TauObjective F{G_m, alpha, losses, C};
    Eigen::VectorXd best = tau_current;
    double best_f = F(best);

    Eigen::VectorXd tau = tau_current;
    for (int t = 1; t <= tau_step_iters; ++t) {
        const Eigen::VectorXd g = F.subgradient(tau);
        const double norm = g.norm();
        if (!(norm > 0.0)) break;
        tau = project_to_simplex(tau - (1.0 / std::sqrt(static_cast<double>(t))) * (g / norm));
        const double f = F(tau);
        if (f < best_f) {
            best_f = f;
            best = tau;
        }
    }

    // Exact line searches along the simplex edges through the best point.
    for (int sweep = 0; sweep < 8; ++sweep) {
        const double start = best_f;
        for (Eigen::Index m = 0; m < M; ++m) {
            for (Eigen::Index k = m + 1; k < M; ++k) {
                const double s = best(m) + best(k);
                if (s <= 0.0) continue;
                const auto [x, f] = minimize_envelope(edge_pieces(F, best, m, k), s);
                Eigen::VectorXd candidate = best;
                candidate(m) = x;
                candidate(k) = s - x;
                const double fc = F(candidate);
                if (fc < best_f) {
                    best_f = fc;
                    best = std::move(candidate);
                }
            }
        }
        if (start - best_f <= 1e-14 * std::max(1.0, std::abs(best_f))) break;
    }
    // guard against drift off the simplex
    best = best.cwiseMax(0.0);
    best /= best.sum();
    if (F(best) > F(tau_current)) return tau_current;
    return best;
}

// ---------------------------------------------------------------------------
// training loop

std::string_view stop_reason_name(StopReason reason) noexcept {
    switch (reason) {
    case StopReason::converged: return "converged";
    case StopReason::oracle_exhausted: return "oracle_exhausted";
    case StopReason::iteration_cap: return "iteration_cap";
    }
    return "?";
}

TrainResult mklpo_train(const Dataset &data, KernelBank bank, const TrainConfig &config, const ProgressCallback &progress) {
    config.validate();
    data.require_both_classes("training");
    if (bank.sample_count() != data.sample_count()) {
        throw DataError("kernel bank has " + std::to_string(bank.sample_count()) + " samples, dataset has " +
                        std::to_string(data.sample_count()));
    }
    const auto M = static_cast<Eigen::Index>(bank.size());
    Eigen::VectorXd tau = Eigen::VectorXd::Constant(M, 1.0 / static_cast<double>(M));
    bank.set_tau(tau);

    const Labels &y = data.labels();
    WorkingSet ws;
    GramProducts gp{bank};
    Eigen::VectorXd alpha(0);
    double xi = 0.0;

    TrainResult result;
    result.stop = StopReason::iteration_cap;
    for (int t = 1; t <= config.max_outer_iters; ++t) {
        const Eigen::VectorXd scores = gp.scores(alpha, tau);
        AugmentedObjective candidate;
        try {
            candidate = loss_augmented_argmax(config.measure, y, scores, ws.labelings());
        } catch (const OracleExhausted &) {
            result.stop = StopReason::oracle_exhausted;
            result.final_violation = 0.0;
            break;
        }
        const double violation = candidate.violation(scores);
        if (violation <= xi + config.epsilon) {
            result.stop = StopReason::converged;
            result.final_violation = violation;
            break;
        }

        gp.add(candidate.coeff);
        ws.add(Constraint{std::move(candidate.coeff), candidate.loss, std::move(candidate.labeling)});
        const Eigen::VectorXd losses = ws.losses();

        Eigen::VectorXd warm = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ws.size()));
        warm.head(alpha.size()) = alpha;
        alpha = solve_alpha_qp(gp.combined(tau), losses, config.C, config.qp_tolerance, warm).alpha;

        const TauObjective F{gp.per_kernel(), alpha, losses, config.C};
        const double before = F(tau);
        if (M > 1) tau = solve_tau_step(gp.per_kernel(), alpha, losses, config.C, tau, config.tau_step_iters);
        const double after = F(tau);
        xi = slack(gp.combined(tau), alpha, losses);

        IterationRecord record{t, ws.size(), violation, xi, before, after, tau};
        result.iterations = t;
        if (progress) progress(record);
        result.history.push_back(std::move(record));
    }

    const Eigen::VectorXd scores = gp.scores(alpha, tau);
    if (result.stop == StopReason::iteration_cap) {
        try {
            result.final_violation = loss_augmented_argmax(config.measure, y, scores, ws.labelings()).violation(scores);
        } catch (const OracleExhausted &) {
            result.final_violation = 0.0;
        }
    }
    result.xi = xi;
    result.train_scores = scores;
    result.objective = ws.empty() ? 0.0 : TauObjective{gp.per_kernel(), alpha, ws.losses(), config.C}(tau);

    Model &model = result.model;
    model.measure = config.measure;
    model.kernel_specs = bank.specs();
    model.tau = tau;
    model.alpha = alpha;
    model.constraint_coeffs.resize(static_cast<Eigen::Index>(ws.size()), static_cast<Eigen::Index>(data.sample_count()));
    for (std::size_t l = 0; l < ws.size(); ++l) model.constraint_coeffs.row(static_cast<Eigen::Index>(l)) = ws[l].coeff.transpose();
    model.training_features = data.features();
    model.normalization_factors = bank.normalization_factors();
    model.config = config;
    model.config.normalize_kernels = bank.normalized();
    return result;
}

}  // namespace mklpo
