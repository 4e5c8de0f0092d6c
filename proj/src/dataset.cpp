#include "mklpo/dataset.hpp"

#include "mklpo/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <utility>

namespace mklpo {

namespace {

std::string location(std::size_t line, std::size_t column) {
    std::ostringstream os;
    os << "line " << line << ", column " << column;
    return os.str();
}

std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view token, double &out) {
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    if (token.empty()) return false;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    return ec == std::errc{} && ptr == token.data() + token.size();
}

bool parse_index(std::string_view token, std::size_t &out) {
    if (token.empty()) return false;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    return ec == std::errc{} && ptr == token.data() + token.size();
}

struct SparseRow {
    int label;
    std::vector<std::pair<std::size_t, double>> entries;
};

}  // namespace

Dataset::Dataset(Eigen::MatrixXd features, Labels labels) : features_{std::move(features)}, labels_{std::move(labels)} {
    if (static_cast<std::size_t>(features_.cols()) != labels_.size()) {
        throw DataError("dataset: feature matrix has " + std::to_string(features_.cols()) + " columns but " +
                        std::to_string(labels_.size()) + " labels were given");
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] != 1 && labels_[i] != -1) {
            throw DataError("dataset: label of sample " + std::to_string(i) + " is " + std::to_string(labels_[i]) +
                            ", expected +1 or -1");
        }
    }
    if (!features_.allFinite()) {
        throw DataError("dataset: non-finite feature value");
    }
}

std::size_t Dataset::positive_count() const noexcept {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), 1));
}

void Dataset::require_both_classes(std::string_view purpose) const {
    if (sample_count() < 2 || positive_count() == 0 || negative_count() == 0) {
        throw DataError(std::string{purpose} + " requires both classes (found " + std::to_string(positive_count()) +
                        " positive and " + std::to_string(negative_count()) + " negative samples)");
    }
}

Dataset Dataset::subset(const std::vector<std::size_t> &indices) const {
    Eigen::MatrixXd X(features_.rows(), static_cast<Eigen::Index>(indices.size()));
    Labels y(indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        X.col(static_cast<Eigen::Index>(k)) = features_.col(static_cast<Eigen::Index>(indices[k]));
        y[k] = labels_.at(indices[k]);
    }
    return Dataset{std::move(X), std::move(y)};
}

Dataset parse_sparse(std::istream &in) {
    std::vector<SparseRow> rows;
    std::size_t dim = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view{line};
        if (trim(view).empty()) continue;

        SparseRow row{};
        bool have_label = false;
        std::size_t last_index = 0;
        std::size_t pos = 0;
        while (pos < view.size()) {
            while (pos < view.size() && std::isspace(static_cast<unsigned char>(view[pos]))) ++pos;
            if (pos >= view.size()) break;
            const std::size_t start = pos;
            while (pos < view.size() && !std::isspace(static_cast<unsigned char>(view[pos]))) ++pos;
            const std::string_view token = view.substr(start, pos - start);
            const std::size_t column = start + 1;

            if (!have_label) {
                if (token == "+1" || token == "1") {
                    row.label = 1;
                } else if (token == "-1") {
                    row.label = -1;
                } else {
                    throw DataError(location(line_no, column) + ": unknown label token '" + std::string{token} + "'");
                }
                have_label = true;
                continue;
            }

            const auto colon = token.find(':');
            if (colon == std::string_view::npos) {
                throw DataError(location(line_no, column) + ": expected <index>:<value>, got '" + std::string{token} + "'");
            }
            std::size_t index = 0;
            if (!parse_index(token.substr(0, colon), index) || index == 0) {
                throw DataError(location(line_no, column) + ": invalid feature index '" +
                                std::string{token.substr(0, colon)} + "'");
            }
            if (index <= last_index) {
                throw DataError(location(line_no, column) + ": non-increasing index " + std::to_string(index) +
                                " after " + std::to_string(last_index));
            }
            double value = 0.0;
            const auto value_token = token.substr(colon + 1);
            if (!parse_double(value_token, value)) {
                throw DataError(location(line_no, column + colon + 1) + ": invalid feature value '" +
                                std::string{value_token} + "'");
            }
            if (!std::isfinite(value)) {
                throw DataError(location(line_no, column + colon + 1) + ": non-finite feature value");
            }
            last_index = index;
            dim = std::max(dim, index);
            row.entries.emplace_back(index, value);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw DataError("sparse input is empty");
    }

    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(rows.size()));
    Labels y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        y[i] = rows[i].label;
        for (const auto &[index, value] : rows[i].entries) {
            X(static_cast<Eigen::Index>(index - 1), static_cast<Eigen::Index>(i)) = value;
        }
    }
    return Dataset{std::move(X), std::move(y)};
}

Dataset parse_sparse(std::string_view text) {
    std::istringstream in{std::string{text}};
    return parse_sparse(in);
}

CsvTable read_csv_table(std::istream &in, bool has_header) {
    CsvTable table;
    std::string line;
    bool header_pending = has_header;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::string_view rest{line};
        while (true) {
            const auto comma = rest.find(',');
            cells.emplace_back(trim(rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (header_pending) {
            table.header = std::move(cells);
            header_pending = false;
        } else {
            table.rows.push_back(std::move(cells));
        }
    }
    return table;
}

Dataset parse_dense_csv(std::istream &in, std::size_t label_column) {
    std::vector<std::vector<double>> rows;
    std::vector<double> raw_labels;
    std::size_t width = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<double> values;
        std::string_view rest{line};
        std::size_t column = 1;
        while (true) {
            const auto comma = rest.find(',');
            const auto cell = trim(rest.substr(0, comma));
            double value = 0.0;
            if (!parse_double(cell, value)) {
                throw DataError("line " + std::to_string(line_no) + ", field " + std::to_string(column) +
                                ": non-numeric cell '" + std::string{cell} + "'");
            }
            if (!std::isfinite(value)) {
                throw DataError("line " + std::to_string(line_no) + ", field " + std::to_string(column) +
                                ": non-finite value");
            }
            values.push_back(value);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
            ++column;
        }
        if (rows.empty()) {
            width = values.size();
            if (label_column >= width) {
                throw DataError("label column " + std::to_string(label_column) + " out of range for " +
                                std::to_string(width) + " columns");
            }
        } else if (values.size() != width) {
            throw DataError("line " + std::to_string(line_no) + ": ragged row with " + std::to_string(values.size()) +
                            " fields, expected " + std::to_string(width));
        }
        raw_labels.push_back(values[label_column]);
        values.erase(values.begin() + static_cast<std::ptrdiff_t>(label_column));
        rows.push_back(std::move(values));
    }
    if (rows.empty()) {
        throw DataError("csv input is empty");
    }

    const bool signed_labels = std::all_of(raw_labels.begin(), raw_labels.end(), [](double v) { return v == 1.0 || v == -1.0; });
    const bool binary_labels = std::all_of(raw_labels.begin(), raw_labels.end(), [](double v) { return v == 0.0 || v == 1.0; });
    if (!signed_labels && !binary_labels) {
        const auto bad = std::find_if(raw_labels.begin(), raw_labels.end(),
                                      [](double v) { return v != 1.0 && v != -1.0 && v != 0.0; });
        std::ostringstream os;
        os << "label outside {+1,-1} and {0,1}";
        if (bad != raw_labels.end()) os << ": " << *bad;
        else os << ": mixed 0 and -1 labels";
        throw DataError(os.str());
    }

    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd X(static_cast<Eigen::Index>(width - 1), n);
    Labels y(rows.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto &row = rows[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < row.size(); ++j) X(static_cast<Eigen::Index>(j), i) = row[j];
        y[static_cast<std::size_t>(i)] = raw_labels[static_cast<std::size_t>(i)] > 0.0 ? 1 : -1;
    }
    return Dataset{std::move(X), std::move(y)};
}

Dataset parse_dense_csv(std::string_view text, std::size_t label_column) {
    std::istringstream in{std::string{text}};
    return parse_dense_csv(in, label_column);
}

void write_sparse(std::ostream &out, const Dataset &data) {
    const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
    const auto &X = data.features();
    for (std::size_t i = 0; i < data.sample_count(); ++i) {
        out << (data.labels()[i] > 0 ? "+1" : "-1");
        for (Eigen::Index j = 0; j < X.rows(); ++j) {
            const double v = X(j, static_cast<Eigen::Index>(i));
            if (v != 0.0) out << ' ' << (j + 1) << ':' << v;
        }
        out << '\n';
    }
    out.precision(old_precision);
}

DataFormat parse_data_format(std::string_view name) {
    if (name == "svm") return DataFormat::svm;
    if (name == "csv") return DataFormat::csv;
    throw DataError("unknown data format '" + std::string{name} + "' (expected svm or csv)");
}

Dataset load_dataset(const std::string &path, DataFormat format) {
    if (path == "-") {
        return format == DataFormat::svm ? parse_sparse(std::cin) : parse_dense_csv(std::cin, 0);
    }
    std::ifstream in{path};
    if (!in) {
        throw DataError("cannot open data file '" + path + "'");
    }
    try {
        return format == DataFormat::svm ? parse_sparse(in) : parse_dense_csv(in, 0);
    } catch (const DataError &e) {
        throw DataError(path + ": " + e.what());
    }
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] == fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] != fold) out.push_back(i);
    }
    return out;
}

namespace {

// std::uniform_int_distribution is implementation defined; this keeps the
// shuffle identical across standard libraries.
std::uint64_t bounded(std::mt19937_64 &rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = rng();
    while (draw >= limit) draw = rng();
    return draw % bound;
}

void shuffle(std::vector<std::size_t> &v, std::mt19937_64 &rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[bounded(rng, i)]);
    }
}

}  // namespace

FoldPlan stratified_folds(const Labels &labels, std::size_t fold_count, std::uint64_t seed) {
    if (fold_count < 2) {
        throw DataError("fold count must be at least 2");
    }
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] > 0 ? positives : negatives).push_back(i);
    }
    if (positives.size() < fold_count || negatives.size() < fold_count) {
        throw DataError("class too small for " + std::to_string(fold_count) + " folds (" +
                        std::to_string(positives.size()) + " positive, " + std::to_string(negatives.size()) +
                        " negative samples)");
    }

    std::mt19937_64 rng{seed};
    shuffle(positives, rng);
    shuffle(negatives, rng);

    FoldPlan plan{fold_count, std::vector<std::size_t>(labels.size())};
    std::size_t next = 0;
    for (const auto i : positives) plan.assignments[i] = next++ % fold_count;
    for (const auto i : negatives) plan.assignments[i] = next++ % fold_count;
    return plan;
}

}  // namespace mklpo
