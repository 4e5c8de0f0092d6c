#include "mklpo/measures.hpp"

#include "mklpo/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace mklpo {

std::string_view measure_name(MeasureKind kind) noexcept {
    switch (kind) {
    case MeasureKind::error_rate: return "err";
    case MeasureKind::f1: return "f1";
    case MeasureKind::prbep: return "prbep";
    case MeasureKind::mcc: return "mcc";
    case MeasureKind::auc: return "auc";
    }
    return "?";
}

MeasureKind parse_measure(std::string_view name) {
    for (const auto kind : all_measures) {
        if (measure_name(kind) == name) return kind;
    }
    throw DataError("unknown measure '" + std::string{name} + "' (expected err, f1, prbep, mcc or auc)");
}

ContingencyTable contingency(const Labels &y_true, const Labels &y_pred) {
    if (y_true.size() != y_pred.size()) {
        throw DataError("contingency: " + std::to_string(y_true.size()) + " true labels vs " +
                        std::to_string(y_pred.size()) + " predictions");
    }
    ContingencyTable ct;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] > 0) (y_pred[i] > 0 ? ct.tp : ct.fn) += 1;
        else (y_pred[i] > 0 ? ct.fp : ct.tn) += 1;
    }
    return ct;
}

double matthews(const ContingencyTable &ct) noexcept {
    const auto tp = static_cast<double>(ct.tp);
    const auto fp = static_cast<double>(ct.fp);
    const auto tn = static_cast<double>(ct.tn);
    const auto fn = static_cast<double>(ct.fn);
    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (denom == 0.0) return 0.0;
    return (tp * tn - fp * fn) / std::sqrt(denom);
}

double delta(MeasureKind kind, const ContingencyTable &ct) {
    const auto tp = static_cast<double>(ct.tp);
    const auto fp = static_cast<double>(ct.fp);
    const auto fn = static_cast<double>(ct.fn);
    switch (kind) {
    case MeasureKind::error_rate:
        if (ct.total() == 0) throw DataError("error rate of an empty table");
        return (fp + fn) / static_cast<double>(ct.total());
    case MeasureKind::f1:
        if (2 * ct.tp + ct.fp + ct.fn == 0) throw DataError("F1 undefined on a table without positives");
        return 1.0 - 2.0 * tp / (2.0 * tp + fp + fn);
    case MeasureKind::prbep:
        if (ct.tp + ct.fp != ct.tp + ct.fn) {
            throw DataError("PR-BEP loss needs as many predicted positives as actual positives");
        }
        if (ct.tp + ct.fn == 0) throw DataError("PR-BEP undefined without positives");
        return 1.0 - tp / (tp + fn);
    case MeasureKind::mcc:
        return (1.0 - matthews(ct)) / 2.0;
    case MeasureKind::auc:
        break;
    }
    throw DataError("AUC loss is pairwise; use delta_auc");
}

double delta_auc(const Labels &y_true, const Eigen::VectorXd &scores) {
    if (y_true.size() != static_cast<std::size_t>(scores.size())) {
        throw DataError("auc: " + std::to_string(y_true.size()) + " labels vs " + std::to_string(scores.size()) + " scores");
    }
    const auto n_pos = static_cast<std::size_t>(std::count(y_true.begin(), y_true.end(), 1));
    const std::size_t n_neg = y_true.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DataError("AUC requires both classes");

    // Mann-Whitney count with tied groups contributing one half.
    std::vector<std::size_t> order(y_true.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores(static_cast<Eigen::Index>(a)) < scores(static_cast<Eigen::Index>(b)); });
    double correct = 0.0;
    std::size_t negatives_below = 0;
    for (std::size_t start = 0; start < order.size();) {
        std::size_t end = start;
        std::size_t group_pos = 0;
        std::size_t group_neg = 0;
        const double s = scores(static_cast<Eigen::Index>(order[start]));
        while (end < order.size() && scores(static_cast<Eigen::Index>(order[end])) == s) {
            (y_true[order[end]] > 0 ? group_pos : group_neg) += 1;
            ++end;
        }
        correct += static_cast<double>(group_pos) * (static_cast<double>(negatives_below) + 0.5 * static_cast<double>(group_neg));
        negatives_below += group_neg;
        start = end;
    }
    const double pairs = static_cast<double>(n_pos) * static_cast<double>(n_neg);
    return (pairs - correct) / pairs;
}

Labels decisions(const Eigen::VectorXd &scores) {
    Labels out(static_cast<std::size_t>(scores.size()));
    for (Eigen::Index i = 0; i < scores.size(); ++i) out[static_cast<std::size_t>(i)] = scores(i) >= 0.0 ? 1 : -1;
    return out;
}

double evaluate(MeasureKind kind, const Labels &y_true, const Eigen::VectorXd &scores) {
    if (y_true.size() != static_cast<std::size_t>(scores.size())) {
        throw DataError("evaluate: " + std::to_string(y_true.size()) + " labels vs " + std::to_string(scores.size()) +
                        " scores");
    }
    switch (kind) {
    case MeasureKind::error_rate: {
        const auto ct = contingency(y_true, decisions(scores));
        if (ct.total() == 0) throw DataError("accuracy of an empty sample");
        return static_cast<double>(ct.tp + ct.tn) / static_cast<double>(ct.total());
    }
    case MeasureKind::f1: {
        const auto ct = contingency(y_true, decisions(scores));
        const auto denom = 2 * ct.tp + ct.fp + ct.fn;
        return denom == 0 ? 0.0 : 2.0 * static_cast<double>(ct.tp) / static_cast<double>(denom);
    }
    case MeasureKind::mcc:
        return matthews(contingency(y_true, decisions(scores)));
    case MeasureKind::prbep: {
        const auto n_pos = static_cast<std::size_t>(std::count(y_true.begin(), y_true.end(), 1));
        if (n_pos == 0) throw DataError("PR-BEP requires positive samples");
        std::vector<std::size_t> order(y_true.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return scores(static_cast<Eigen::Index>(a)) > scores(static_cast<Eigen::Index>(b));
        });
        std::size_t tp = 0;
        for (std::size_t k = 0; k < n_pos; ++k) tp += y_true[order[k]] > 0 ? 1 : 0;
        return static_cast<double>(tp) / static_cast<double>(n_pos);
    }
    case MeasureKind::auc:
        return 1.0 - delta_auc(y_true, scores);
    }
    return 0.0;
}

}  // namespace mklpo
