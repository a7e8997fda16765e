#include "lgw/synth.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace lgw {

std::string to_string(Layout layout) {
  switch (layout) {
    case Layout::kDisentangled: return "disentangled";
    case Layout::kRotated: return "rotated";
    case Layout::kDuplicated: return "duplicated";
    case Layout::kShuffledLabels: return "shuffled_labels";
    case Layout::kCones: return "cones";
  }
  return "unknown";
}

Layout parse_layout(std::string_view name) {
  for (Layout l : {Layout::kDisentangled, Layout::kRotated, Layout::kDuplicated,
                   Layout::kShuffledLabels, Layout::kCones}) {
    if (to_string(l) == name) return l;
  }
  throw InvalidArgument("unknown layout " + std::string(name));
}

FactorSchema make_schema(std::size_t factors, std::size_t values) {
  std::vector<Factor> out;
  for (std::size_t f = 0; f < factors; ++f) {
    Factor factor{"f" + std::to_string(f), {}};
    for (std::size_t v = 0; v < values; ++v) factor.values.push_back("v" + std::to_string(v));
    out.push_back(std::move(factor));
  }
  return FactorSchema(std::move(out));
}

double value_gap(double noise_std) { return noise_std > 0.0 ? 6.0 * noise_std : 1.0; }

Matrix random_orthogonal(std::size_t dim, Seed seed) {
  if (dim < 1) throw InvalidArgument("random_orthogonal needs dim >= 1");
  Rng rng(seed);
  const auto n = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) g(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (Eigen::Index c = 0; c < n; ++c) {
    if (r(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  if (q.determinant() < 0.0) q.col(0) = -q.col(0);
  Matrix out(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      out(i, j) = q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

SynthData generate(const SynthSpec& spec) {
  const std::size_t k = spec.schema.size();
  if (k == 0) throw InvalidArgument("synthetic schema needs at least one factor");
  if (spec.samples < 1) throw InvalidArgument("synthetic dataset needs at least one sample");
  if (!(spec.noise_std >= 0.0) || !std::isfinite(spec.noise_std)) {
    throw InvalidArgument("noise_std must be finite and non-negative");
  }
  if (spec.layout != Layout::kCones && spec.dim < k) {
    throw InvalidArgument("dim must be at least the number of factors");
  }
  if (spec.layout == Layout::kDuplicated && spec.dim < 2 * k) {
    throw InvalidArgument("duplicated layout needs dim >= 2 * factors");
  }
  if (spec.dim < 1) throw InvalidArgument("dim must be positive");

  GroundTruth truth;
  truth.layout = spec.layout;
  truth.gap = value_gap(spec.noise_std);
  for (std::size_t f = 0; f < k; ++f) truth.factor_dims.push_back(f);

  Rng rng(derive(spec.seed, 0));
  std::vector<std::vector<Label>> labels(spec.samples, std::vector<Label>(k));
  for (std::size_t i = 0; i < spec.samples; ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      labels[i][f] = Label::categorical(static_cast<int>(rng.index(spec.schema.factor(f).values.size())));
    }
  }

  Matrix codes(spec.samples, spec.dim);
  if (spec.layout == Layout::kCones) {
    std::size_t rows = 0;
    for (const auto& f : spec.schema.factors()) rows += f.values.size();
    truth.directions = Matrix(rows, spec.dim);
    Rng dir_rng(derive(spec.seed, 2));
    for (std::size_t r = 0; r < rows; ++r) {
      auto row = truth.directions.row(r);
      double norm = 0.0;
      for (auto& x : row) {
        x = dir_rng.normal();
        norm += x * x;
      }
      norm = std::sqrt(norm);
      for (auto& x : row) x /= norm;
    }
    Rng noise(derive(spec.seed, 1));
    for (std::size_t i = 0; i < spec.samples; ++i) {
      auto z = codes.row(i);
      std::size_t offset = 0;
      for (std::size_t f = 0; f < k; ++f) {
        auto u = truth.directions.row(offset + static_cast<std::size_t>(labels[i][f].value));
        for (std::size_t d = 0; d < spec.dim; ++d) z[d] += spec.cone_radius * u[d];
        offset += spec.schema.factor(f).values.size();
      }
      for (auto& x : z) x += noise.normal(0.0, spec.noise_std);
    }
  } else {
    Rng noise(derive(spec.seed, 1));
    for (std::size_t i = 0; i < spec.samples; ++i) {
      auto z = codes.row(i);
      for (std::size_t d = 0; d < spec.dim; ++d) {
        if (d < k) {
          z[d] = labels[i][d].value * truth.gap + noise.normal(0.0, spec.noise_std);
        } else {
          z[d] = noise.normal();
        }
      }
    }
    if (spec.layout == Layout::kDuplicated) {
      for (std::size_t f = 0; f < k; ++f) {
        truth.copies.emplace_back(f, k + f);
        for (std::size_t i = 0; i < spec.samples; ++i) codes(i, k + f) = codes(i, f);
      }
    }
    if (spec.layout == Layout::kRotated) {
      Matrix q = random_orthogonal(spec.dim, derive(spec.seed, 3));
      Matrix rotated(spec.samples, spec.dim);
      for (std::size_t i = 0; i < spec.samples; ++i) {
        for (std::size_t c = 0; c < spec.dim; ++c) {
          double s = 0.0;
          for (std::size_t d = 0; d < spec.dim; ++d) s += codes(i, d) * q(d, c);
          rotated(i, c) = s;
        }
      }
      codes = std::move(rotated);
      truth.rotation = std::move(q);
    }
    if (spec.layout == Layout::kShuffledLabels) {
      Rng shuffle(derive(spec.seed, 4));
      for (std::size_t f = 0; f < k; ++f) {
        std::vector<Label> column(spec.samples);
        for (std::size_t i = 0; i < spec.samples; ++i) column[i] = labels[i][f];
        shuffle.shuffle(column);
        for (std::size_t i = 0; i < spec.samples; ++i) labels[i][f] = column[i];
      }
    }
  }
  return {LatentDataset::build(spec.schema, std::move(codes), std::move(labels)), std::move(truth)};
}

CentroidLabeler::CentroidLabeler(FactorSchema schema, std::vector<std::vector<int>> classes,
                                 std::vector<Matrix> centroids)
    : schema_(std::move(schema)), classes_(std::move(classes)), centroids_(std::move(centroids)) {
  if (classes_.size() != schema_.size() || centroids_.size() != schema_.size()) {
    throw InvalidArgument("one centroid table per factor required");
  }
}

std::vector<int> CentroidLabeler::label(std::span<const double> z) const {
  std::vector<int> out(schema_.size(), -1);
  for (std::size_t f = 0; f < schema_.size(); ++f) {
    const Matrix& c = centroids_[f];
    if (c.cols() != z.size()) throw InvalidArgument("query length does not match centroids");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < c.rows(); ++r) {
      double d2 = 0.0;
      auto row = c.row(r);
      for (std::size_t j = 0; j < z.size(); ++j) d2 += (z[j] - row[j]) * (z[j] - row[j]);
      if (d2 < best) {
        best = d2;
        out[f] = classes_[f][r];
      }
    }
  }
  return out;
}

CentroidLabeler centroid_labeler(const LatentDataset& ds, bool allow_missing_values) {
  const auto& schema = ds.schema();
  std::vector<std::vector<int>> classes(schema.size());
  std::vector<Matrix> centroids(schema.size());
  for (std::size_t f = 0; f < schema.size(); ++f) {
    classes[f] = populated_classes(ds, f);
    if (classes[f].empty()) {
      throw InvalidArgument("factor " + schema.factor(f).name + " has no annotated samples");
    }
    if (!allow_missing_values) {
      for (std::size_t v = 0; v < schema.factor(f).values.size(); ++v) {
        bool categorical_seen = false;
        for (std::size_t i = 0; i < ds.size() && !categorical_seen; ++i) {
          const Label& l = ds.label(i, f);
          categorical_seen = l.kind == LabelKind::kCategorical && l.value == static_cast<int>(v);
        }
        bool any_categorical = false;
        for (std::size_t i = 0; i < ds.size() && !any_categorical; ++i) {
          any_categorical = ds.label(i, f).kind == LabelKind::kCategorical;
        }
        if (any_categorical && !categorical_seen) {
          throw InvalidArgument("empty value group " + schema.factor(f).name + "=" +
                                schema.factor(f).values[v]);
        }
      }
    }
    Matrix c(classes[f].size(), ds.dim());
    std::vector<double> counts(classes[f].size(), 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto cls = ds.class_of(i, f);
      if (!cls) continue;
      const auto r = static_cast<std::size_t>(
          std::lower_bound(classes[f].begin(), classes[f].end(), *cls) - classes[f].begin());
      counts[r] += 1.0;
      auto row = c.row(r);
      auto z = ds.vector(i);
      for (std::size_t d = 0; d < ds.dim(); ++d) row[d] += z[d];
    }
    for (std::size_t r = 0; r < c.rows(); ++r) {
      for (auto& x : c.row(r)) x /= counts[r];
    }
    centroids[f] = std::move(c);
  }
  return CentroidLabeler(schema, std::move(classes), std::move(centroids));
}

TreeLabeler::TreeLabeler(const DecisionTree& tree, std::string factor_name) : tree_(tree) {
  Factor f{std::move(factor_name), {}};
  for (int c : tree.classes) f.values.push_back(std::to_string(c));
  schema_ = FactorSchema({std::move(f)});
}

std::vector<int> TreeLabeler::label(std::span<const double> z) const {
  const int cls = tree_.predict(z);
  return {static_cast<int>(std::lower_bound(tree_.classes.begin(), tree_.classes.end(), cls) -
                           tree_.classes.begin())};
}

}  // namespace lgw
