#include "mklpo/inference.hpp"

#include "mklpo/error.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <utility>

namespace mklpo {

namespace {

struct ClassCounts {
    std::size_t pos = 0;
    std::size_t neg = 0;
};

ClassCounts count_classes(const Labels &y, const Eigen::VectorXd &scores) {
    if (y.size() != static_cast<std::size_t>(scores.size())) {
        throw DataError("oracle: " + std::to_string(y.size()) + " labels vs " + std::to_string(scores.size()) + " scores");
    }
    ClassCounts c;
    for (const int label : y) (label > 0 ? c.pos : c.neg) += 1;
    if (c.pos == 0 || c.neg == 0) throw DataError("loss-augmented inference requires both classes");
    return c;
}

// Indices of one class ordered by score descending, ties by index ascending.
std::vector<std::size_t> ranked(const Labels &y, const Eigen::VectorXd &scores, int label) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == label) idx.push_back(i);
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return scores(static_cast<Eigen::Index>(a)) > scores(static_cast<Eigen::Index>(b));
    });
    return idx;
}

ContingencyTable cell_table(const ClassCounts &c, std::size_t a, std::size_t b) {
    return ContingencyTable{a, b, c.neg - b, c.pos - a};
}

Eigen::VectorXd label_coeff(const Labels &y, const LabelingKey &candidate) {
    Eigen::VectorXd coeff(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) coeff(static_cast<Eigen::Index>(i)) = y[i] - candidate[i];
    return coeff;
}

double dot_labels(const Eigen::VectorXd &scores, const LabelingKey &labels) {
    double s = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) s += scores(static_cast<Eigen::Index>(i)) * labels[i];
    return s;
}

// Pairwise AUC bookkeeping shared by the fast oracle and the brute force.
struct PairLayout {
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    double unit = 0.0;  // 1 / (n_pos n_neg)

    PairLayout(const Labels &y) {
        for (std::size_t i = 0; i < y.size(); ++i) (y[i] > 0 ? pos : neg).push_back(i);
        unit = 1.0 / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
    }
    [[nodiscard]] std::size_t pairs() const noexcept { return pos.size() * neg.size(); }
};

// Builds the result for a set of swapped pairs given as a predicate over the
// flat pair index p = i * n_neg + j.
template <typename Swapped>
AugmentedObjective pair_result(const Labels &y, const Eigen::VectorXd &scores, const PairLayout &layout, Swapped swapped) {
    LabelingKey key(y.size(), 0);
    std::size_t swaps = 0;
    double value = 0.0;
    for (std::size_t i = 0; i < layout.pos.size(); ++i) {
        for (std::size_t j = 0; j < layout.neg.size(); ++j) {
            const double d = scores(static_cast<Eigen::Index>(layout.pos[i])) - scores(static_cast<Eigen::Index>(layout.neg[j]));
            if (swapped(i * layout.neg.size() + j)) {
                ++swaps;
                key[layout.pos[i]] += 1;
                key[layout.neg[j]] -= 1;
                value += layout.unit - 0.5 * d;
            } else {
                value += 0.5 * d;
            }
        }
    }
    AugmentedObjective out;
    out.coeff = Eigen::VectorXd(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) out.coeff(static_cast<Eigen::Index>(i)) = key[i];
    out.labeling = std::move(key);
    out.loss = static_cast<double>(swaps) * layout.unit;
    out.value = value;
    return out;
}

bool is_all_correct(const LabelingKey &key) {
    return std::all_of(key.begin(), key.end(), [](int v) { return v == 0; });
}

}  // namespace

Eigen::VectorXd scores_from_dual(const Eigen::VectorXd &alpha, const std::vector<Eigen::VectorXd> &coeffs,
                                 const Eigen::MatrixXd &K) {
    if (static_cast<std::size_t>(alpha.size()) != coeffs.size()) {
        throw DataError("scores: " + std::to_string(alpha.size()) + " multipliers for " + std::to_string(coeffs.size()) +
                        " constraints");
    }
    if (K.rows() != K.cols()) throw DataError("scores: kernel matrix must be square");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(K.rows());
    for (std::size_t l = 0; l < coeffs.size(); ++l) {
        if (coeffs[l].size() != K.rows()) throw DataError("scores: coefficient length differs from kernel size");
        v += alpha(static_cast<Eigen::Index>(l)) * coeffs[l];
    }
    return K.transpose() * v;
}

double contingency_objective(MeasureKind kind, const Labels &y, const Labels &candidate, const Eigen::VectorXd &scores) {
    return delta(kind, contingency(y, candidate)) + dot_labels(scores, candidate);
}

AugmentedObjective argmax_contingency(MeasureKind kind, const Labels &y, const Eigen::VectorXd &scores,
                                      const LabelingSet &excluded) {
    if (kind == MeasureKind::auc) throw DataError("argmax_contingency: AUC is handled by argmax_auc");
    const ClassCounts c = count_classes(y, scores);
    const auto pos = ranked(y, scores, 1);
    const auto neg = ranked(y, scores, -1);

    // prefix[k] = sum of the k highest scores of the class
    std::vector<double> pos_prefix(c.pos + 1, 0.0);
    std::vector<double> neg_prefix(c.neg + 1, 0.0);
    for (std::size_t k = 0; k < c.pos; ++k) pos_prefix[k + 1] = pos_prefix[k] + scores(static_cast<Eigen::Index>(pos[k]));
    for (std::size_t k = 0; k < c.neg; ++k) neg_prefix[k + 1] = neg_prefix[k] + scores(static_cast<Eigen::Index>(neg[k]));

    // Top a positives and top b negatives at +1, everything else at -1.
    const auto cell_value = [&](std::size_t a, std::size_t b) {
        const double linear = (2.0 * pos_prefix[a] - pos_prefix[c.pos]) + (2.0 * neg_prefix[b] - neg_prefix[c.neg]);
        return delta(kind, cell_table(c, a, b)) + linear;
    };
    const auto admissible = [&](std::size_t a, std::size_t b) { return kind != MeasureKind::prbep || a + b == c.pos; };
    const auto canonical = [&](std::size_t a, std::size_t b) {
        LabelingKey labels(y.size(), -1);
        for (std::size_t k = 0; k < a; ++k) labels[pos[k]] = 1;
        for (std::size_t k = 0; k < b; ++k) labels[neg[k]] = 1;
        return labels;
    };

    // Cells whose canonical labeling turned out to be excluded. Each pass
    // finds the best remaining cell; ties go to the lexicographically
    // smallest (a, b).
    std::set<std::pair<std::size_t, std::size_t>> skipped;
    while (true) {
        bool found = false;
        std::size_t best_a = 0;
        std::size_t best_b = 0;
        double best = 0.0;
        for (std::size_t a = 0; a <= c.pos; ++a) {
            for (std::size_t b = 0; b <= c.neg; ++b) {
                if (!admissible(a, b) || (a == c.pos && b == 0)) continue;  // (n_pos, 0) holds only y
                if (!skipped.empty() && skipped.contains({a, b})) continue;
                const double v = cell_value(a, b);
                if (!found || v > best) {
                    found = true;
                    best = v;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        if (!found) throw OracleExhausted("every admissible labeling is excluded");

        LabelingKey labels = canonical(best_a, best_b);
        if (excluded.contains(labels)) {
            skipped.emplace(best_a, best_b);
            continue;
        }
        AugmentedObjective out;
        out.coeff = label_coeff(y, labels);
        out.loss = delta(kind, cell_table(c, best_a, best_b));
        out.value = out.loss + dot_labels(scores, labels);
        out.labeling = std::move(labels);
        return out;
    }
}

AugmentedObjective argmax_auc(const Labels &y, const Eigen::VectorXd &scores, const LabelingSet &excluded) {
    (void)count_classes(y, scores);
    const PairLayout layout{y};

    // Per pair, the swapped option wins when unit - d/2 > d/2.
    std::vector<double> flip_cost(layout.pairs());
    std::vector<std::uint8_t> best_swap(layout.pairs());
    for (std::size_t i = 0; i < layout.pos.size(); ++i) {
        for (std::size_t j = 0; j < layout.neg.size(); ++j) {
            const std::size_t p = i * layout.neg.size() + j;
            const double d = scores(static_cast<Eigen::Index>(layout.pos[i])) - scores(static_cast<Eigen::Index>(layout.neg[j]));
            const double keep = 0.5 * d;
            const double swap = layout.unit - 0.5 * d;
            best_swap[p] = swap > keep ? 1 : 0;
            flip_cost[p] = std::abs(swap - keep);
        }
    }

    auto best = pair_result(y, scores, layout, [&](std::size_t p) { return best_swap[p] != 0; });
    if (!is_all_correct(best.labeling) && !excluded.contains(best.labeling)) return best;

    // Enumerate sets of flipped pairs in order of increasing total cost until
    // an admissible assignment appears.
    std::vector<std::size_t> order(layout.pairs());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return flip_cost[a] < flip_cost[b]; });

    struct Node {
        double cost;
        std::vector<std::size_t> picks;  // positions in `order`, ascending
        bool operator>(const Node &o) const { return cost != o.cost ? cost > o.cost : picks > o.picks; }
    };
    std::priority_queue<Node, std::vector<Node>, std::greater<>> heap;
    heap.push(Node{flip_cost[order[0]], {0}});
    constexpr std::size_t search_limit = 200000;
    for (std::size_t popped = 0; !heap.empty() && popped < search_limit; ++popped) {
        Node node = heap.top();
        heap.pop();
        std::vector<std::uint8_t> flipped(layout.pairs(), 0);
        for (const auto k : node.picks) flipped[order[k]] = 1;
        auto candidate =
            pair_result(y, scores, layout, [&](std::size_t p) { return (best_swap[p] != 0) != (flipped[p] != 0); });
        if (!is_all_correct(candidate.labeling) && !excluded.contains(candidate.labeling)) return candidate;

        const std::size_t last = node.picks.back();
        if (last + 1 < order.size()) {
            Node extend = node;
            extend.picks.push_back(last + 1);
            extend.cost += flip_cost[order[last + 1]];
            heap.push(std::move(extend));
            Node shift = std::move(node);
            shift.picks.back() = last + 1;
            shift.cost += flip_cost[order[last + 1]] - flip_cost[order[last]];
            heap.push(std::move(shift));
        }
    }
    throw OracleExhausted("no admissible pair assignment left");
}

AugmentedObjective loss_augmented_argmax(MeasureKind kind, const Labels &y, const Eigen::VectorXd &scores,
                                         const LabelingSet &excluded) {
    return kind == MeasureKind::auc ? argmax_auc(y, scores, excluded) : argmax_contingency(kind, y, scores, excluded);
}

AugmentedObjective brute_force_argmax(MeasureKind kind, const Labels &y, const Eigen::VectorXd &scores,
                                      const LabelingSet &excluded) {
    const ClassCounts c = count_classes(y, scores);
    std::optional<AugmentedObjective> best;

    if (kind == MeasureKind::auc) {
        const PairLayout layout{y};
        if (layout.pairs() > 20) throw DataError("brute force: too many pairs (" + std::to_string(layout.pairs()) + ")");
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << layout.pairs()); ++mask) {
            auto candidate = pair_result(y, scores, layout, [&](std::size_t p) { return ((mask >> p) & 1U) != 0; });
            if (is_all_correct(candidate.labeling) || excluded.contains(candidate.labeling)) continue;
            if (!best || candidate.value > best->value) best = std::move(candidate);
        }
    } else {
        if (y.size() > 20) throw DataError("brute force: too many samples (" + std::to_string(y.size()) + ")");
        const LabelingKey truth(y.begin(), y.end());
        LabelingKey labels(y.size());
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << y.size()); ++mask) {
            std::size_t predicted_pos = 0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                labels[i] = ((mask >> i) & 1U) != 0 ? 1 : -1;
                predicted_pos += labels[i] > 0 ? 1 : 0;
            }
            if (kind == MeasureKind::prbep && predicted_pos != c.pos) continue;
            if (labels == truth || excluded.contains(labels)) continue;
            const double loss = delta(kind, contingency(y, labels));
            const double value = loss + dot_labels(scores, labels);
            if (!best || value > best->value) {
                best = AugmentedObjective{labels, label_coeff(y, labels), loss, value};
            }
        }
    }
    if (!best) throw OracleExhausted("every labeling is excluded");
    return *best;
}

}  // namespace mklpo
