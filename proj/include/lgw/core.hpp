#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lgw/error.hpp"
#include "lgw/rng.hpp"

namespace lgw {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> column(std::size_t c) const;
  void append_row(std::span<const double> values);

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  Matrix select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Factor {
  std::string name;
  std::vector<std::string> values;

  friend bool operator==(const Factor&, const Factor&) = default;
};

// Ordered declaration of generative factors and their content vocabularies.
class FactorSchema {
 public:
  FactorSchema() = default;
  explicit FactorSchema(std::vector<Factor> factors);

  const std::vector<Factor>& factors() const { return factors_; }
  std::size_t size() const { return factors_.size(); }
  const Factor& factor(std::size_t f) const { return factors_.at(f); }

  // Throws SchemaError for unknown names.
  std::size_t factor_index(std::string_view name) const;
  std::size_t value_index(std::size_t factor, std::string_view value) const;
  std::optional<std::size_t> find_factor(std::string_view name) const;
  std::optional<std::size_t> find_value(std::size_t factor, std::string_view value) const;

  friend bool operator==(const FactorSchema&, const FactorSchema&) = default;

 private:
  std::vector<Factor> factors_;
};

enum class LabelKind : std::uint8_t { kNone, kCategorical, kCount };

// One annotation cell: either a vocabulary index or an occurrence count.
struct Label {
  LabelKind kind = LabelKind::kNone;
  int value = 0;

  static Label none() { return {}; }
  static Label categorical(int value_index) { return {LabelKind::kCategorical, value_index}; }
  static Label count(int times) { return {LabelKind::kCount, times}; }

  bool annotated() const { return kind != LabelKind::kNone; }

  friend bool operator==(const Label&, const Label&) = default;
};

// Latent vectors with per-sample factor annotations. Immutable once built.
class LatentDataset {
 public:
  LatentDataset() = default;

  // `labels` is samples x schema.size(). `texts` is empty or one per sample.
  LatentDataset(FactorSchema schema, Matrix vectors, std::vector<std::int64_t> ids,
                std::vector<std::vector<Label>> labels, std::vector<std::string> texts = {});

  // Convenience: ids 0..n-1, no text.
  static LatentDataset build(FactorSchema schema, Matrix vectors,
                             std::vector<std::vector<Label>> labels);

  const FactorSchema& schema() const { return schema_; }
  std::size_t dim() const { return vectors_.cols(); }
  std::size_t size() const { return vectors_.rows(); }
  bool empty() const { return vectors_.rows() == 0; }

  const Matrix& vectors() const { return vectors_; }
  std::span<const double> vector(std::size_t i) const { return vectors_.row(i); }
  std::int64_t id(std::size_t i) const { return ids_[i]; }
  const std::vector<std::int64_t>& ids() const { return ids_; }
  const Label& label(std::size_t i, std::size_t factor) const { return labels_[i][factor]; }
  const std::vector<Label>& labels(std::size_t i) const { return labels_[i]; }
  bool has_text() const { return !texts_.empty(); }
  const std::string& text(std::size_t i) const { return texts_.at(i); }

  // Class used for factor-conditioned statistics: the vocabulary index for
  // categorical labels, the count for count labels, nullopt if unannotated.
  std::optional<int> class_of(std::size_t i, std::size_t factor) const;

  // Samples at `indices`, in that order.
  LatentDataset select(std::span<const std::size_t> indices) const;

  // Same samples and ids with replaced vectors (dimension may change).
  LatentDataset with_vectors(Matrix vectors) const;

  // Same vectors with replaced annotations.
  LatentDataset with_labels(std::vector<std::vector<Label>> labels) const;

  friend bool operator==(const LatentDataset&, const LatentDataset&) = default;

 private:
  FactorSchema schema_;
  Matrix vectors_;
  std::vector<std::int64_t> ids_;
  std::vector<std::vector<Label>> labels_;
  std::vector<std::string> texts_;
};

// Rows annotated with `value` for `factor` (count annotations match when
// the count is positive). Order preserved; an empty result is valid.
LatentDataset subset_by_factor(const LatentDataset& ds, std::string_view factor,
                               std::string_view value);

// Seeded shuffle, then the last round(n * test_fraction) rows (at least one,
// at most n - 1) form the test part.
std::pair<LatentDataset, LatentDataset> train_test_split(const LatentDataset& ds,
                                                         double test_fraction, Seed seed);

// Index form of the split, shared by the metrics so every metric sees the
// same partition.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            double test_fraction,
                                                                            Seed seed);

// Distinct classes of `factor` over annotated samples, ascending.
std::vector<int> populated_classes(const LatentDataset& ds, std::size_t factor);

}  // namespace lgw
