#include "lgw/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lgw/parallel.hpp"

namespace lgw {
namespace {

struct SplitChoice {
  bool found = false;
  std::size_t dim = 0;
  double threshold = 0.0;
  double child_impurity = std::numeric_limits<double>::infinity();  // nL*giniL + nR*giniR
};

// Gini times sample count: n - sum(c^2)/n.
double weighted_gini(std::span<const double> counts, double n) {
  if (n <= 0.0) return 0.0;
  double sq = 0.0;
  for (double c : counts) sq += c * c;
  return n - sq / n;
}

int argmax_lowest(std::span<const double> counts) {
  int best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const int> y_index, std::size_t n_classes,
              const TreeParams& params, Seed seed, DecisionTree& tree)
      : x_(x), y_(y_index), n_classes_(n_classes), params_(params), rng_(seed), tree_(tree) {}

  int grow(std::vector<std::size_t>& rows, std::size_t depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    std::vector<double> counts(n_classes_, 0.0);
    for (std::size_t r : rows) counts[static_cast<std::size_t>(y_[r])] += 1.0;
    const double n = static_cast<double>(rows.size());
    const double node_impurity = weighted_gini(counts, n);
    {
      TreeNode& node = tree_.nodes.back();
      node.class_counts = counts;
      node.majority = argmax_lowest(counts);
      node.impurity = n > 0 ? node_impurity / n : 0.0;
      node.samples = rows.size();
    }
    const bool pure = node_impurity <= 0.0;
    const bool depth_limited = params_.max_depth != 0 && depth >= params_.max_depth;
    if (pure || depth_limited || rows.size() < 2 * params_.min_samples_leaf) return id;

    SplitChoice split = best_split(rows, candidate_dims());
    if (!split.found && params_.max_features != 0 && params_.max_features < x_.cols()) {
      std::vector<std::size_t> all(x_.cols());
      std::iota(all.begin(), all.end(), 0);
      split = best_split(rows, all);
    }
    if (!split.found) return id;

    tree_.impurity_decrease[split.dim] += std::max(0.0, node_impurity - split.child_impurity);
    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows) {
      (x_(r, split.dim) <= split.threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int left = grow(left_rows, depth + 1);
    const int right = grow(right_rows, depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.dim = static_cast<int>(split.dim);
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

 private:
  std::vector<std::size_t> candidate_dims() {
    const std::size_t d = x_.cols();
    std::vector<std::size_t> dims;
    if (params_.max_features == 0 || params_.max_features >= d) {
      dims.resize(d);
      std::iota(dims.begin(), dims.end(), 0);
      return dims;
    }
    dims = rng_.sample_without_replacement(d, params_.max_features);
    std::sort(dims.begin(), dims.end());
    return dims;
  }

  SplitChoice best_split(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& dims) {
    SplitChoice best;
    const std::size_t n = rows.size();
    const double tie_tol = 1e-12 * static_cast<double>(n);
    std::vector<std::pair<double, int>> column(n);
    std::vector<double> left(n_classes_), right(n_classes_);
    std::vector<double> total(n_classes_, 0.0);
    for (std::size_t r : rows) total[static_cast<std::size_t>(y_[r])] += 1.0;
    for (std::size_t d : dims) {
      for (std::size_t i = 0; i < n; ++i) column[i] = {x_(rows[i], d), y_[rows[i]]};
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (column.front().first == column.back().first) continue;
      std::fill(left.begin(), left.end(), 0.0);
      right = total;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto c = static_cast<std::size_t>(column[i].second);
        left[c] += 1.0;
        right[c] -= 1.0;
        if (column[i].first == column[i + 1].first) continue;
        const std::size_t n_left = i + 1;
        if (n_left < params_.min_samples_leaf || n - n_left < params_.min_samples_leaf) continue;
        const double impurity = weighted_gini(left, static_cast<double>(n_left)) +
                                weighted_gini(right, static_cast<double>(n - n_left));
        if (!best.found || impurity < best.child_impurity - tie_tol) {
          double threshold = 0.5 * (column[i].first + column[i + 1].first);
          if (!(threshold < column[i + 1].first)) threshold = column[i].first;
          best = {true, d, threshold, impurity};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const int> y_;
  std::size_t n_classes_;
  TreeParams params_;
  Rng rng_;
  DecisionTree& tree_;
};

// Maps labels onto 0..k-1 following ascending label order.
std::vector<int> index_labels(std::span<const int> y, const std::vector<int>& classes) {
  std::vector<int> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    out[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), y[i]) - classes.begin());
  }
  return out;
}

std::vector<int> sorted_classes(std::span<const int> y) {
  std::vector<int> classes(y.begin(), y.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  return classes;
}

DecisionTree fit_tree_unchecked(const Matrix& x, std::span<const int> y, const std::vector<int>& classes,
                                const TreeParams& params, Seed seed) {
  DecisionTree tree;
  tree.classes = classes;
  tree.dim = x.cols();
  tree.params = params;
  tree.params.min_samples_leaf = std::max<std::size_t>(1, params.min_samples_leaf);
  tree.impurity_decrease.assign(x.cols(), 0.0);
  const auto indexed = index_labels(y, classes);
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0);
  TreeBuilder builder(x, indexed, classes.size(), tree.params, seed, tree);
  builder.grow(rows, 0);
  return tree;
}

void check_finite(const Matrix& x) {
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw NumericalError("non-finite feature value");
  }
}

}  // namespace

std::size_t DecisionTree::leaf_of(std::span<const double> x) const {
  std::size_t n = 0;
  while (!nodes[n].is_leaf()) {
    const TreeNode& node = nodes[n];
    n = static_cast<std::size_t>(x[static_cast<std::size_t>(node.dim)] <= node.threshold ? node.left
                                                                                         : node.right);
  }
  return n;
}

int DecisionTree::predict(std::span<const double> x) const {
  if (x.size() != dim) throw InvalidArgument("query length does not match tree dimension");
  return majority_class(leaf_of(x));
}

std::size_t DecisionTree::depth() const {
  std::size_t best = 0;
  for (std::size_t leaf : leaves()) best = std::max(best, path_to(*this, leaf).size());
  return best;
}

std::vector<std::size_t> DecisionTree::leaves() const {
  std::vector<std::size_t> out;
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const std::size_t n = stack.back();
    stack.pop_back();
    if (nodes[n].is_leaf()) {
      out.push_back(n);
    } else {
      stack.push_back(static_cast<std::size_t>(nodes[n].right));
      stack.push_back(static_cast<std::size_t>(nodes[n].left));
    }
  }
  return out;
}

DecisionTree tree_fit(const Matrix& x, std::span<const int> y, const TreeParams& params, Seed seed) {
  if (x.rows() == 0) throw InvalidArgument("tree_fit on empty input");
  if (x.rows() != y.size()) throw InvalidArgument("tree_fit: feature/label count mismatch");
  if (x.rows() < 2) throw InvalidArgument("tree_fit needs at least 2 samples");
  check_finite(x);
  const auto classes = sorted_classes(y);
  if (classes.size() < 2) throw InvalidArgument("tree_fit needs at least 2 classes");
  return fit_tree_unchecked(x, y, classes, params, seed);
}

TreePath path_to(const DecisionTree& tree, std::size_t leaf) {
  std::vector<int> parent(tree.nodes.size(), -1);
  for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
    if (!tree.nodes[n].is_leaf()) {
      parent[static_cast<std::size_t>(tree.nodes[n].left)] = static_cast<int>(n);
      parent[static_cast<std::size_t>(tree.nodes[n].right)] = static_cast<int>(n);
    }
  }
  TreePath path;
  path.leaf = leaf;
  std::size_t child = leaf;
  while (parent[child] >= 0) {
    const auto p = static_cast<std::size_t>(parent[child]);
    const TreeNode& node = tree.nodes[p];
    path.steps.push_back({p, static_cast<std::size_t>(node.dim), node.threshold,
                          node.left == static_cast<int>(child) ? Branch::kYes : Branch::kNo});
    child = p;
  }
  std::reverse(path.steps.begin(), path.steps.end());
  return path;
}

std::vector<TreePath> leaf_paths_for_class(const DecisionTree& tree, int label) {
  std::vector<TreePath> out;
  for (std::size_t leaf : tree.leaves()) {
    if (tree.majority_class(leaf) == label) out.push_back(path_to(tree, leaf));
  }
  return out;
}

TreePath tree_shortest_cross_path(const DecisionTree& tree, int from_class, int to_class) {
  (void)from_class;
  auto paths = leaf_paths_for_class(tree, to_class);
  if (paths.empty()) {
    throw InvalidArgument("class " + std::to_string(to_class) + " is not the majority of any leaf");
  }
  auto best = paths.begin();
  for (auto it = paths.begin(); it != paths.end(); ++it) {
    if (it->size() < best->size()) best = it;
  }
  return *best;
}

int RandomForest::predict(std::span<const double> x) const {
  std::vector<double> votes(classes.size(), 0.0);
  for (const auto& t : trees) {
    const int label = t.predict(x);
    votes[static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), label) -
                                   classes.begin())] += 1.0;
  }
  return classes[static_cast<std::size_t>(argmax_lowest(votes))];
}

RandomForest forest_fit(const Matrix& x, std::span<const int> y_counts, const ForestParams& params,
                        Seed seed) {
  if (x.rows() == 0 || x.rows() != y_counts.size()) {
    throw InvalidArgument("forest_fit: empty input or feature/label count mismatch");
  }
  if (params.n_trees < 1) throw InvalidArgument("forest_fit needs n_trees >= 1");
  for (int c : y_counts) {
    if (c < 0) throw InvalidArgument("forest labels are non-negative counts");
  }
  check_finite(x);
  RandomForest forest;
  forest.dim = x.cols();
  forest.classes = sorted_classes(y_counts);
  TreeParams tree_params = params.tree;
  if (tree_params.max_features == 0) {
    tree_params.max_features =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(x.cols())))));
  }
  forest.trees.resize(params.n_trees);
  const std::size_t n = x.rows();
  parallel_for(params.n_trees, [&](std::size_t t) {
    const Seed tree_seed = derive(seed, t);
    Rng rng(derive(tree_seed, 0));
    std::vector<std::size_t> boot(n);
    for (auto& b : boot) b = rng.index(n);
    const Matrix xb = x.select_rows(boot);
    std::vector<int> yb(n);
    for (std::size_t i = 0; i < n; ++i) yb[i] = y_counts[boot[i]];
    forest.trees[t] = fit_tree_unchecked(xb, yb, forest.classes, tree_params, derive(tree_seed, 1));
  });
  return forest;
}

std::vector<double> forest_importance(const RandomForest& forest) {
  std::vector<double> importance(forest.dim, 0.0);
  for (const auto& tree : forest.trees) {
    const double root = static_cast<double>(tree.nodes.front().samples);
    for (std::size_t d = 0; d < forest.dim; ++d) importance[d] += tree.impurity_decrease[d] / root;
  }
  const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
  if (!(total > 0.0)) throw NumericalError("degenerate labels");
  for (auto& v : importance) v /= total;
  return importance;
}

std::vector<double> LinearClassifier::logits(std::span<const double> x) const {
  if (x.size() != weights.cols()) throw InvalidArgument("query length does not match classifier");
  std::vector<double> out(bias);
  for (std::size_t c = 0; c < weights.rows(); ++c) {
    double s = 0.0;
    auto w = weights.row(c);
    for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * (x[j] - feature_mean[j]) / feature_scale[j];
    out[c] += s;
  }
  return out;
}

LinearClassifier linear_fit(const Matrix& x, std::span<const int> y, const LinearParams& params,
                            Seed seed) {
  (void)seed;
  if (x.rows() == 0 || x.rows() != y.size()) {
    throw InvalidArgument("linear_fit: empty input or feature/label count mismatch");
  }
  check_finite(x);
  LinearClassifier clf;
  clf.params = params;
  clf.classes = sorted_classes(y);
  if (clf.classes.size() < 2) throw InvalidArgument("linear_fit needs at least 2 classes");
  const std::size_t n = x.rows(), d = x.cols(), k = clf.classes.size();
  clf.feature_mean.assign(d, 0.0);
  clf.feature_scale.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) clf.feature_mean[j] += x(i, j);
  }
  for (auto& m : clf.feature_mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x(i, j) - clf.feature_mean[j];
      clf.feature_scale[j] += c * c;
    }
  }
  for (auto& s : clf.feature_scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 1e-12)) s = 1.0;
  }
  Matrix z(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) z(i, j) = (x(i, j) - clf.feature_mean[j]) / clf.feature_scale[j];
  }
  const auto target = index_labels(y, clf.classes);
  clf.weights = Matrix(k, d);
  clf.bias.assign(k, 0.0);
  Matrix grad_w(k, d);
  std::vector<double> grad_b(k), prob(k);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    std::fill(grad_w.data().begin(), grad_w.data().end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto zi = z.row(i);
      double max_logit = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        double s = clf.bias[c];
        auto w = clf.weights.row(c);
        for (std::size_t j = 0; j < d; ++j) s += w[j] * zi[j];
        prob[c] = s;
        max_logit = std::max(max_logit, s);
      }
      double norm = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        prob[c] = std::exp(prob[c] - max_logit);
        norm += prob[c];
      }
      const auto t = static_cast<std::size_t>(target[i]);
      loss -= std::log(prob[t] / norm);
      for (std::size_t c = 0; c < k; ++c) {
        const double g = prob[c] / norm - (c == t ? 1.0 : 0.0);
        grad_b[c] += g;
        auto gw = grad_w.row(c);
        for (std::size_t j = 0; j < d; ++j) gw[j] += g * zi[j];
      }
    }
    double penalty = 0.0;
    for (double w : clf.weights.data()) penalty += w * w;
    clf.loss_trace.push_back(loss * inv_n + 0.5 * params.l2 * penalty);
    for (std::size_t c = 0; c < k; ++c) {
      auto w = clf.weights.row(c);
      auto gw = grad_w.row(c);
      for (std::size_t j = 0; j < d; ++j) w[j] -= params.learning_rate * (gw[j] * inv_n + params.l2 * w[j]);
      clf.bias[c] -= params.learning_rate * grad_b[c] * inv_n;
    }
  }
  for (double w : clf.weights.data()) {
    if (!std::isfinite(w)) throw NumericalError("logistic regression diverged");
  }
  return clf;
}

int classify(const LinearClassifier& clf, std::span<const double> x) {
  const auto l = clf.logits(x);
  return clf.classes[static_cast<std::size_t>(argmax_lowest(l))];
}

ClassificationScore score(std::span<const int> predictions, std::span<const int> truth) {
  if (predictions.size() != truth.size()) throw InvalidArgument("score: length mismatch");
  if (truth.empty()) throw InvalidArgument("score: empty input");
  ClassificationScore out;
  std::map<int, std::pair<double, double>> per_class;  // correct, total
  double correct = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& [hit, total] = per_class[truth[i]];
    total += 1.0;
    if (predictions[i] == truth[i]) {
      hit += 1.0;
      correct += 1.0;
    }
  }
  out.accuracy = correct / static_cast<double>(truth.size());
  double sum = 0.0;
  for (const auto& [c, ht] : per_class) {
    out.recall[c] = ht.first / ht.second;
    sum += out.recall[c];
  }
  out.macro_recall = sum / static_cast<double>(per_class.size());
  return out;
}

}  // namespace lgw
