#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lgw/core.hpp"
#include "lgw/labeler.hpp"
#include "lgw/rng.hpp"

namespace lgw {

enum class Layout {
  kDisentangled,    // factor f lives on dimension f, other dims N(0, 1)
  kRotated,         // disentangled codes times a seeded orthogonal matrix
  kDuplicated,      // disentangled, plus an exact copy of each factor dim
  kShuffledLabels,  // disentangled vectors, annotations permuted per factor
  kCones,           // each (factor, value) owns a random direction; codes add up
};

std::string to_string(Layout layout);
Layout parse_layout(std::string_view name);

struct SynthSpec {
  FactorSchema schema;
  std::size_t dim = 32;
  std::size_t samples = 2000;
  double noise_std = 0.1;
  Layout layout = Layout::kDisentangled;
  Seed seed{1};
  double cone_radius = 3.0;  // kCones only
};

struct GroundTruth {
  Layout layout = Layout::kDisentangled;
  std::vector<std::size_t> factor_dims;                     // factor -> dimension before rotation
  std::vector<std::pair<std::size_t, std::size_t>> copies;  // (source dim, copy dim)
  std::optional<Matrix> rotation;                           // codes_row * rotation
  double gap = 0.0;                                         // spacing between value levels
  Matrix directions;                                        // kCones: one row per (factor, value)
};

struct SynthData {
  LatentDataset dataset;
  GroundTruth truth;
};

// Schema with factors f0..f{k-1}, each with values v0..v{m-1}.
FactorSchema make_schema(std::size_t factors, std::size_t values);

// Value level spacing: 6 * noise_std, or 1 when noise_std is 0.
double value_gap(double noise_std);

SynthData generate(const SynthSpec& spec);

// Haar-random rotation: QR of a Gaussian matrix, column signs fixed by R's
// diagonal, determinant normalized to +1.
Matrix random_orthogonal(std::size_t dim, Seed seed);

// Nearest value-centroid labeler (Euclidean; ties to the lowest class).
class CentroidLabeler : public Labeler {
 public:
  CentroidLabeler(FactorSchema schema, std::vector<std::vector<int>> classes,
                  std::vector<Matrix> centroids);

  const FactorSchema& schema() const override { return schema_; }
  std::vector<int> label(std::span<const double> z) const override;

  const Matrix& centroids(std::size_t factor) const { return centroids_.at(factor); }
  const std::vector<int>& classes(std::size_t factor) const { return classes_.at(factor); }

 private:
  FactorSchema schema_;
  std::vector<std::vector<int>> classes_;  // per factor, ascending
  std::vector<Matrix> centroids_;          // per factor, one row per class
};

// Centroids per factor class. Unless `allow_missing_values`, every
// categorical vocabulary value needs at least one sample; a factor with no
// annotated samples is always an error.
CentroidLabeler centroid_labeler(const LatentDataset& ds, bool allow_missing_values = false);

}  // namespace lgw
