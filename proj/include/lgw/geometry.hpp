#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lgw/core.hpp"
#include "lgw/labeler.hpp"
#include "lgw/learners.hpp"
#include "lgw/rng.hpp"

namespace lgw {

using Vector = std::vector<double>;

// Copies of z with component `dim` set to each of `values`.
std::vector<Vector> traverse_dim(std::span<const double> z, std::size_t dim,
                                 std::span<const double> values);

struct TraversalPlan {
  Vector seed;
  Vector low;                // per-dimension resample range
  Vector high;
  std::size_t steps = 8;     // evenly spaced values over [low, high]
  std::vector<bool> active;  // false = dimension held fixed
};

// Ranges mean +- 2 std per dimension over `ds`, 8 steps, all dims active.
TraversalPlan default_traversal_plan(const LatentDataset& ds, std::span<const double> seed);

struct DimTraversal {
  std::size_t dim = 0;
  Vector values;
  std::vector<Vector> vectors;
};

std::vector<DimTraversal> run_traversal(const TraversalPlan& plan);

// z_t = z1 * (1 - t) + z2 * t for t = step, 2 step, ... < 1.
std::vector<Vector> interpolate(std::span<const double> z1, std::span<const double> z2,
                                double step = 0.1);
std::vector<double> interpolation_times(double step = 0.1);

enum class ArithOp { kAdd, kSub, kHadamard };

std::string to_string(ArithOp op);
ArithOp parse_arith_op(std::string_view name);

Vector arithmetic(std::span<const double> z1, std::span<const double> z2, ArithOp op);

struct NeighborhoodOptions {
  std::size_t samples = 16;
  double radius = 0.1;  // std of the single-dimension perturbation
};

using VectorPair = std::pair<Vector, Vector>;

// Fraction of pairs whose op result keeps the pair's shared value of
// `factor`, judged by the majority label over a sampled neighborhood of the
// result (each neighbor perturbs one random dimension).
double consistency_ratio(std::span<const VectorPair> pairs, ArithOp op, const Labeler& labeler,
                         std::size_t factor, const NeighborhoodOptions& neighborhood, Seed seed);

struct ConvexTestOptions {
  std::size_t trials = 1000;
  std::optional<double> fixed_t;    // default: t ~ U(0, 1)
  std::optional<int> reference;     // default: majority label of the cluster
};

// Fraction of random convex combinations (1 - t) z_i + t z_j of cluster
// members that the labeler assigns to the reference class of `factor`.
double convex_combination_test(const Matrix& cluster, const Labeler& labeler, std::size_t factor,
                               const ConvexTestOptions& options, Seed seed);
double convex_combination_test(const Matrix& cluster, const DecisionTree& tree,
                               const ConvexTestOptions& options, Seed seed);

struct ClusterSize {
  double max_cos_dist = 0.0;
  double min_cos_dist = 0.0;
};

double cosine_distance(std::span<const double> a, std::span<const double> b);

// Extremes of 1 - cosine similarity over `pair_samples` random distinct pairs.
ClusterSize cluster_size(const Matrix& cluster, std::size_t pair_samples, Seed seed);

struct ProxyMetrics {
  double separation = 0.0;  // held-out accuracy
  double density = 0.0;     // held-out macro recall
};

// Decision tree on a train split; scores on the held-out part.
ProxyMetrics proxy_metrics(const Matrix& x, std::span<const int> labels, Seed seed,
                           double test_fraction = 0.2, const TreeParams& params = {});

struct PcaResult {
  Matrix projected;                 // samples x k
  Matrix components;                // k x dim, unit rows
  Vector mean;
  std::vector<double> explained_ratio;  // k entries, non-increasing
};

// Covariance eigendecomposition; each component's largest-magnitude loading
// is made positive.
PcaResult pca_project(const Matrix& x, std::size_t k = 2);

// 800x600 scatter with one circle per point, colored by cluster from a
// fixed 10-color palette, plus a legend.
std::string render_scatter_svg(const Matrix& points, std::span<const int> clusters,
                               std::span<const std::string> cluster_names);

// id,pc1,pc2,cluster
std::string render_scatter_csv(const Matrix& points, std::span<const std::int64_t> ids,
                               std::span<const int> clusters);

}  // namespace lgw
