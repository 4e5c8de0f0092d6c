#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mklpo {

/// Binary label tuple, every entry is +1 or -1.
using Labels = std::vector<int>;

/// Training or test samples: one column per sample, one row per feature.
class Dataset {
  public:
    Dataset() = default;
    /// Validates labels and finiteness; throws DataError on violation.
    Dataset(Eigen::MatrixXd features, Labels labels);

    [[nodiscard]] const Eigen::MatrixXd &features() const noexcept { return features_; }
    [[nodiscard]] const Labels &labels() const noexcept { return labels_; }
    [[nodiscard]] std::size_t feature_dim() const noexcept { return static_cast<std::size_t>(features_.rows()); }
    [[nodiscard]] std::size_t sample_count() const noexcept { return labels_.size(); }

    [[nodiscard]] std::size_t positive_count() const noexcept;
    [[nodiscard]] std::size_t negative_count() const noexcept { return sample_count() - positive_count(); }

    /// Throws DataError("... requires both classes ...") unless n >= 2 and
    /// both labels occur.
    void require_both_classes(std::string_view purpose) const;

    /// Columns selected by `indices`, in the given order.
    [[nodiscard]] Dataset subset(const std::vector<std::size_t> &indices) const;

  private:
    Eigen::MatrixXd features_;
    Labels labels_;
};

/// Parses LIBSVM-style lines `<label> <index>:<value> ...` with 1-based,
/// strictly increasing indices. Labels are `+1`, `1` or `-1`.
[[nodiscard]] Dataset parse_sparse(std::istream &in);
[[nodiscard]] Dataset parse_sparse(std::string_view text);

/// Comma separated numeric rows, one sample per row. The label column holds
/// +1/-1, or 0/1 which is mapped to -1/+1.
[[nodiscard]] Dataset parse_dense_csv(std::istream &in, std::size_t label_column);
[[nodiscard]] Dataset parse_dense_csv(std::string_view text, std::size_t label_column);

/// Writes the sparse format; zero entries are omitted, values use
/// round-trip precision.
void write_sparse(std::ostream &out, const Dataset &data);

/// Minimal CSV table with an optional header row and string cells
/// (no quoting). Used for reading reports back.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
[[nodiscard]] CsvTable read_csv_table(std::istream &in, bool has_header);

enum class DataFormat { svm, csv };
[[nodiscard]] DataFormat parse_data_format(std::string_view name);

/// Reads a dataset from `path`, or standard input when `path` is "-".
/// CSV files use column 0 as label.
[[nodiscard]] Dataset load_dataset(const std::string &path, DataFormat format);

/// Assignment of every sample to one of `fold_count` folds.
struct FoldPlan {
    std::size_t fold_count = 0;
    std::vector<std::size_t> assignments;

    [[nodiscard]] std::vector<std::size_t> test_indices(std::size_t fold) const;
    [[nodiscard]] std::vector<std::size_t> train_indices(std::size_t fold) const;
};

/// Shuffles each class with a seeded generator and deals the samples
/// round-robin over the folds, so per-fold class counts differ by at most one.
[[nodiscard]] FoldPlan stratified_folds(const Labels &labels, std::size_t fold_count, std::uint64_t seed);

}  // namespace mklpo
