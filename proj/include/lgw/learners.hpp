#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "lgw/core.hpp"
#include "lgw/rng.hpp"

namespace lgw {

struct TreeParams {
  std::size_t max_depth = 0;         // 0 = unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;      // candidate dims per split, 0 = all
};

// One CART node. Internal nodes send `x[dim] <= threshold` to `left`.
struct TreeNode {
  int dim = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> class_counts;  // indexed like DecisionTree::classes
  int majority = 0;                  // index into DecisionTree::classes
  double impurity = 0.0;             // Gini
  std::size_t samples = 0;

  bool is_leaf() const { return dim < 0; }
};

class DecisionTree {
 public:
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::vector<int> classes;     // ascending original labels
  std::size_t dim = 0;
  TreeParams params;
  // Weighted Gini decrease accumulated per dimension (sample-count units).
  std::vector<double> impurity_decrease;

  std::size_t leaf_of(std::span<const double> x) const;
  int predict(std::span<const double> x) const;
  int majority_class(std::size_t node) const { return classes[static_cast<std::size_t>(nodes[node].majority)]; }
  std::size_t depth() const;
  // Leaf node indices in left-to-right order.
  std::vector<std::size_t> leaves() const;
};

// Greedy CART with Gini impurity. Thresholds are midpoints between
// consecutive distinct values; ties go to the lowest dim, then the lowest
// threshold. The seed only matters when params.max_features < dim.
DecisionTree tree_fit(const Matrix& x, std::span<const int> y, const TreeParams& params, Seed seed);

enum class Branch { kYes, kNo };  // yes = x[dim] <= threshold

struct PathStep {
  std::size_t node = 0;
  std::size_t dim = 0;
  double threshold = 0.0;
  Branch branch = Branch::kYes;

  bool admits(double value) const { return branch == Branch::kYes ? value <= threshold : value > threshold; }
};

// Root-to-leaf walk; `leaf` is the child reached after the last step.
struct TreePath {
  std::vector<PathStep> steps;
  std::size_t leaf = 0;

  std::size_t size() const { return steps.size(); }
};

TreePath path_to(const DecisionTree& tree, std::size_t leaf);

// Paths to every leaf whose majority class is `label`, left to right.
std::vector<TreePath> leaf_paths_for_class(const DecisionTree& tree, int label);

// Shortest root path to a `to_class` leaf; ties by left-to-right leaf order.
TreePath tree_shortest_cross_path(const DecisionTree& tree, int from_class, int to_class);

inline constexpr std::size_t kAllFeatures = static_cast<std::size_t>(-1);

struct ForestParams {
  std::size_t n_trees = 64;
  TreeParams tree;  // max_features 0 here means floor(sqrt(dim)); kAllFeatures = every dim
};

struct RandomForest {
  std::vector<DecisionTree> trees;
  std::size_t dim = 0;
  std::vector<int> classes;

  int predict(std::span<const double> x) const;
};

// Bagged CART trees; trees fit in parallel with per-tree sub-seeds.
// Labels may be constant (every tree is then a single leaf).
RandomForest forest_fit(const Matrix& x, std::span<const int> y_counts, const ForestParams& params,
                        Seed seed);

// Mean decrease in Gini impurity per dimension, normalized to sum 1.
// Throws NumericalError("degenerate labels") when no split reduced impurity.
std::vector<double> forest_importance(const RandomForest& forest);

struct LinearParams {
  double learning_rate = 0.5;
  std::size_t epochs = 300;
  double l2 = 1e-4;
};

// Multinomial logistic regression over standardized features.
struct LinearClassifier {
  Matrix weights;                  // classes x features
  std::vector<double> bias;
  std::vector<int> classes;        // ascending original labels
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  LinearParams params;
  std::vector<double> loss_trace;  // objective before each epoch's update

  std::vector<double> logits(std::span<const double> x) const;
};

// Full-batch gradient descent from zero weights. The seed is accepted for
// interface uniformity; training is deterministic without it.
LinearClassifier linear_fit(const Matrix& x, std::span<const int> y, const LinearParams& params,
                            Seed seed);

// Highest logit wins; ties go to the lowest class.
int classify(const LinearClassifier& clf, std::span<const double> x);

struct ClassificationScore {
  double accuracy = 0.0;
  std::map<int, double> recall;  // classes present in truth
  double macro_recall = 0.0;
};

ClassificationScore score(std::span<const int> predictions, std::span<const int> truth);

}  // namespace lgw
