#include "lgw/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

namespace lgw {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols_) throw InvalidArgument("ragged rows in matrix literal");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw InvalidArgument("row length does not match matrix width");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

FactorSchema::FactorSchema(std::vector<Factor> factors) : factors_(std::move(factors)) {
  std::unordered_set<std::string> names;
  for (const auto& f : factors_) {
    if (f.name.empty()) throw SchemaError("factor name must be non-empty");
    if (!names.insert(f.name).second) throw SchemaError("duplicate factor name: " + f.name);
    if (f.values.empty()) throw SchemaError("factor " + f.name + " has an empty vocabulary");
    std::unordered_set<std::string> seen;
    for (const auto& v : f.values) {
      if (!seen.insert(v).second) {
        throw SchemaError("factor " + f.name + " repeats value " + v);
      }
    }
  }
}

std::optional<std::size_t> FactorSchema::find_factor(std::string_view name) const {
  for (std::size_t f = 0; f < factors_.size(); ++f) {
    if (factors_[f].name == name) return f;
  }
  return std::nullopt;
}

std::optional<std::size_t> FactorSchema::find_value(std::size_t factor,
                                                    std::string_view value) const {
  const auto& values = factors_.at(factor).values;
  for (std::size_t v = 0; v < values.size(); ++v) {
    if (values[v] == value) return v;
  }
  return std::nullopt;
}

std::size_t FactorSchema::factor_index(std::string_view name) const {
  if (auto f = find_factor(name)) return *f;
  throw SchemaError("unknown factor: " + std::string(name));
}

std::size_t FactorSchema::value_index(std::size_t factor, std::string_view value) const {
  if (auto v = find_value(factor, value)) return *v;
  throw SchemaError("unknown value " + std::string(value) + " for factor " +
                    factors_.at(factor).name);
}

LatentDataset::LatentDataset(FactorSchema schema, Matrix vectors, std::vector<std::int64_t> ids,
                             std::vector<std::vector<Label>> labels,
                             std::vector<std::string> texts)
    : schema_(std::move(schema)),
      vectors_(std::move(vectors)),
      ids_(std::move(ids)),
      labels_(std::move(labels)),
      texts_(std::move(texts)) {
  const std::size_t n = vectors_.rows();
  if (ids_.size() != n || labels_.size() != n) {
    throw InvalidArgument("ids/labels count does not match the number of vectors");
  }
  if (!texts_.empty() && texts_.size() != n) {
    throw InvalidArgument("text count does not match the number of vectors");
  }
  if (n > 0 && vectors_.cols() == 0) throw InvalidArgument("latent dimension must be positive");
  for (double x : vectors_.data()) {
    if (!std::isfinite(x)) throw NumericalError("non-finite latent component");
  }
  std::unordered_set<std::int64_t> seen;
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen.insert(ids_[i]).second) {
      throw DataError("duplicate sample id " + std::to_string(ids_[i]));
    }
    if (labels_[i].size() != schema_.size()) {
      throw SchemaError("sample " + std::to_string(ids_[i]) +
                        " does not carry one annotation slot per factor");
    }
    for (std::size_t f = 0; f < schema_.size(); ++f) {
      const Label& l = labels_[i][f];
      if (l.kind == LabelKind::kCategorical &&
          (l.value < 0 || static_cast<std::size_t>(l.value) >= schema_.factor(f).values.size())) {
        throw SchemaError("value index out of vocabulary for factor " + schema_.factor(f).name);
      }
      if (l.kind == LabelKind::kCount && l.value < 0) {
        throw SchemaError("negative count for factor " + schema_.factor(f).name);
      }
    }
  }
}

LatentDataset LatentDataset::build(FactorSchema schema, Matrix vectors,
                                   std::vector<std::vector<Label>> labels) {
  std::vector<std::int64_t> ids(vectors.rows());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int64_t>(i);
  return LatentDataset(std::move(schema), std::move(vectors), std::move(ids), std::move(labels));
}

std::optional<int> LatentDataset::class_of(std::size_t i, std::size_t factor) const {
  const Label& l = labels_[i][factor];
  if (!l.annotated()) return std::nullopt;
  return l.value;
}

LatentDataset LatentDataset::select(std::span<const std::size_t> indices) const {
  std::vector<std::int64_t> ids;
  std::vector<std::vector<Label>> labels;
  std::vector<std::string> texts;
  ids.reserve(indices.size());
  labels.reserve(indices.size());
  for (std::size_t i : indices) {
    ids.push_back(ids_.at(i));
    labels.push_back(labels_[i]);
    if (has_text()) texts.push_back(texts_[i]);
  }
  Matrix vectors = vectors_.select_rows(indices);
  if (indices.empty()) vectors = Matrix(0, dim());
  LatentDataset out;
  out.schema_ = schema_;
  out.vectors_ = std::move(vectors);
  out.ids_ = std::move(ids);
  out.labels_ = std::move(labels);
  out.texts_ = std::move(texts);
  return out;
}

LatentDataset LatentDataset::with_vectors(Matrix vectors) const {
  if (vectors.rows() != size()) throw InvalidArgument("replacement vectors change sample count");
  return LatentDataset(schema_, std::move(vectors), ids_, labels_, texts_);
}

LatentDataset LatentDataset::with_labels(std::vector<std::vector<Label>> labels) const {
  return LatentDataset(schema_, vectors_, ids_, std::move(labels), texts_);
}

LatentDataset subset_by_factor(const LatentDataset& ds, std::string_view factor,
                               std::string_view value) {
  const auto& schema = ds.schema();
  const std::size_t f = schema.factor_index(factor);
  const int v = static_cast<int>(schema.value_index(f, value));
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Label& l = ds.label(i, f);
    if ((l.kind == LabelKind::kCategorical && l.value == v) ||
        (l.kind == LabelKind::kCount && l.value > 0)) {
      keep.push_back(i);
    }
  }
  return ds.select(keep);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            double test_fraction,
                                                                            Seed seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("test_fraction must lie strictly between 0 and 1");
  }
  if (n < 2) throw InvalidArgument("train/test split needs at least 2 samples");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
  std::vector<std::size_t> train(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> test(order.end() - static_cast<std::ptrdiff_t>(n_test), order.end());
  return {std::move(train), std::move(test)};
}

std::pair<LatentDataset, LatentDataset> train_test_split(const LatentDataset& ds,
                                                         double test_fraction, Seed seed) {
  auto [train, test] = split_indices(ds.size(), test_fraction, seed);
  return {ds.select(train), ds.select(test)};
}

std::vector<int> populated_classes(const LatentDataset& ds, std::size_t factor) {
  std::set<int> classes;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (auto c = ds.class_of(i, factor)) classes.insert(*c);
  }
  return {classes.begin(), classes.end()};
}

}  // namespace lgw
