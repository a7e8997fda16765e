#include "lgw/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "lgw/parallel.hpp"

namespace lgw {
namespace {

void require_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("vector length mismatch");
}

int majority(const std::vector<int>& votes) {
  std::map<int, int> counts;
  for (int v : votes) ++counts[v];
  int best = -1, best_count = -1;
  for (const auto& [v, c] : counts) {
    if (c > best_count) {
      best = v;
      best_count = c;
    }
  }
  return best;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::vector<Vector> traverse_dim(std::span<const double> z, std::size_t dim,
                                 std::span<const double> values) {
  if (dim >= z.size()) throw InvalidArgument("traversal dimension out of range");
  std::vector<Vector> out;
  out.reserve(values.size());
  for (double v : values) {
    Vector zi(z.begin(), z.end());
    zi[dim] = v;
    out.push_back(std::move(zi));
  }
  return out;
}

TraversalPlan default_traversal_plan(const LatentDataset& ds, std::span<const double> seed) {
  if (seed.size() != ds.dim()) throw InvalidArgument("seed length does not match dataset");
  if (ds.empty()) throw InvalidArgument("traversal plan needs a non-empty dataset");
  TraversalPlan plan;
  plan.seed.assign(seed.begin(), seed.end());
  plan.active.assign(ds.dim(), true);
  const double n = static_cast<double>(ds.size());
  for (std::size_t d = 0; d < ds.dim(); ++d) {
    double mean = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) mean += ds.vector(i)[d];
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const double c = ds.vector(i)[d] - mean;
      var += c * c;
    }
    const double sd = std::sqrt(var / n);
    plan.low.push_back(mean - 2.0 * sd);
    plan.high.push_back(mean + 2.0 * sd);
  }
  return plan;
}

std::vector<DimTraversal> run_traversal(const TraversalPlan& plan) {
  const std::size_t n = plan.seed.size();
  if (plan.low.size() != n || plan.high.size() != n || plan.active.size() != n) {
    throw InvalidArgument("traversal plan fields disagree in length");
  }
  if (plan.steps < 1) throw InvalidArgument("traversal needs at least one step");
  std::vector<DimTraversal> out;
  for (std::size_t d = 0; d < n; ++d) {
    if (!plan.active[d]) continue;
    if (!std::isfinite(plan.low[d]) || !std::isfinite(plan.high[d])) {
      throw InvalidArgument("traversal range is not finite");
    }
    DimTraversal t;
    t.dim = d;
    for (std::size_t s = 0; s < plan.steps; ++s) {
      const double frac = plan.steps == 1 ? 0.5 : static_cast<double>(s) / static_cast<double>(plan.steps - 1);
      t.values.push_back(plan.low[d] + frac * (plan.high[d] - plan.low[d]));
    }
    t.vectors = traverse_dim(plan.seed, d, t.values);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<double> interpolation_times(double step) {
  if (!(step > 0.0 && step < 1.0)) throw InvalidArgument("interpolation step must lie in (0, 1)");
  std::vector<double> ts;
  for (std::size_t k = 1;; ++k) {
    const double t = static_cast<double>(k) * step;
    if (t >= 1.0 - 1e-9) break;
    ts.push_back(t);
  }
  return ts;
}

std::vector<Vector> interpolate(std::span<const double> z1, std::span<const double> z2, double step) {
  require_same_length(z1, z2);
  std::vector<Vector> out;
  for (double t : interpolation_times(step)) {
    Vector z(z1.size());
    for (std::size_t d = 0; d < z.size(); ++d) z[d] = z1[d] * (1.0 - t) + z2[d] * t;
    out.push_back(std::move(z));
  }
  return out;
}

std::string to_string(ArithOp op) {
  switch (op) {
    case ArithOp::kAdd: return "add";
    case ArithOp::kSub: return "sub";
    case ArithOp::kHadamard: return "hadamard";
  }
  return "unknown";
}

ArithOp parse_arith_op(std::string_view name) {
  if (name == "add") return ArithOp::kAdd;
  if (name == "sub") return ArithOp::kSub;
  if (name == "hadamard") return ArithOp::kHadamard;
  throw InvalidArgument("unknown arithmetic op " + std::string(name));
}

Vector arithmetic(std::span<const double> z1, std::span<const double> z2, ArithOp op) {
  require_same_length(z1, z2);
  Vector out(z1.size());
  for (std::size_t d = 0; d < out.size(); ++d) {
    switch (op) {
      case ArithOp::kAdd: out[d] = z1[d] + z2[d]; break;
      case ArithOp::kSub: out[d] = z1[d] - z2[d]; break;
      case ArithOp::kHadamard: out[d] = z1[d] * z2[d]; break;
    }
  }
  return out;
}

double consistency_ratio(std::span<const VectorPair> pairs, ArithOp op, const Labeler& labeler,
                         std::size_t factor, const NeighborhoodOptions& neighborhood, Seed seed) {
  if (pairs.empty()) throw InvalidArgument("consistency_ratio needs at least one pair");
  if (neighborhood.samples < 1) throw InvalidArgument("neighborhood needs at least one sample");
  std::vector<char> held(pairs.size(), 0);
  parallel_for(pairs.size(), [&](std::size_t p) {
    const auto& [z1, z2] = pairs[p];
    const int value = labeler.label_factor(z1, factor);
    if (labeler.label_factor(z2, factor) != value) {
      throw InvalidArgument("pair " + std::to_string(p) + " does not share a value under the labeler");
    }
    const Vector result = arithmetic(z1, z2, op);
    Rng rng(derive(seed, p));
    std::vector<int> votes;
    votes.reserve(neighborhood.samples);
    for (std::size_t s = 0; s < neighborhood.samples; ++s) {
      Vector neighbor = result;
      neighbor[rng.index(neighbor.size())] += neighborhood.radius * rng.normal();
      votes.push_back(labeler.label_factor(neighbor, factor));
    }
    held[p] = majority(votes) == value ? 1 : 0;
  });
  double count = 0.0;
  for (char h : held) count += h;
  return count / static_cast<double>(pairs.size());
}

double convex_combination_test(const Matrix& cluster, const Labeler& labeler, std::size_t factor,
                               const ConvexTestOptions& options, Seed seed) {
  if (cluster.rows() < 2) throw InvalidArgument("convex_combination_test needs at least 2 vectors");
  if (options.trials < 1) throw InvalidArgument("convex_combination_test needs trials >= 1");
  int reference = 0;
  if (options.reference) {
    reference = *options.reference;
  } else {
    std::vector<int> votes;
    for (std::size_t i = 0; i < cluster.rows(); ++i) votes.push_back(labeler.label_factor(cluster.row(i), factor));
    reference = majority(votes);
  }
  Rng rng(seed);
  const std::size_t n = cluster.rows();
  Vector z(cluster.cols());
  double inside = 0.0;
  for (std::size_t trial = 0; trial < options.trials; ++trial) {
    const std::size_t i = rng.index(n);
    std::size_t j = rng.index(n - 1);
    if (j >= i) ++j;
    double t = 0.0;
    if (options.fixed_t) {
      t = *options.fixed_t;
    } else {
      do {
        t = rng.uniform();
      } while (t <= 0.0);
    }
    auto zi = cluster.row(i);
    auto zj = cluster.row(j);
    for (std::size_t d = 0; d < z.size(); ++d) z[d] = zi[d] * (1.0 - t) + zj[d] * t;
    if (labeler.label_factor(z, factor) == reference) inside += 1.0;
  }
  return inside / static_cast<double>(options.trials);
}

double convex_combination_test(const Matrix& cluster, const DecisionTree& tree,
                               const ConvexTestOptions& options, Seed seed) {
  TreeLabeler labeler(tree);
  ConvexTestOptions opts = options;
  if (opts.reference) {
    // Reference given as a class label; TreeLabeler speaks class indices.
    const auto it = std::lower_bound(tree.classes.begin(), tree.classes.end(), *opts.reference);
    opts.reference = static_cast<int>(it - tree.classes.begin());
  }
  return convex_combination_test(cluster, labeler, 0, opts, seed);
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    dot += a[d] * b[d];
    na += a[d] * a[d];
    nb += b[d] * b[d];
  }
  if (na == 0.0 || nb == 0.0) throw InvalidArgument("cosine distance of a zero vector");
  const double cosine = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
  return 1.0 - cosine;
}

ClusterSize cluster_size(const Matrix& cluster, std::size_t pair_samples, Seed seed) {
  const std::size_t n = cluster.rows();
  if (n < 2) throw InvalidArgument("cluster_size needs at least 2 vectors");
  if (pair_samples < 1) throw InvalidArgument("cluster_size needs pair_samples >= 1");
  for (std::size_t i = 0; i < n; ++i) {
    bool zero = true;
    for (double x : cluster.row(i)) zero = zero && x == 0.0;
    if (zero) throw InvalidArgument("cluster contains a zero vector");
  }
  Rng rng(seed);
  ClusterSize out{0.0, 2.0};
  for (std::size_t s = 0; s < pair_samples; ++s) {
    const std::size_t i = rng.index(n);
    std::size_t j = rng.index(n - 1);
    if (j >= i) ++j;
    const double d = cosine_distance(cluster.row(i), cluster.row(j));
    out.max_cos_dist = std::max(out.max_cos_dist, d);
    out.min_cos_dist = std::min(out.min_cos_dist, d);
  }
  return out;
}

ProxyMetrics proxy_metrics(const Matrix& x, std::span<const int> labels, Seed seed,
                           double test_fraction, const TreeParams& params) {
  if (x.rows() != labels.size()) throw InvalidArgument("proxy_metrics: feature/label count mismatch");
  std::map<int, std::size_t> counts;
  for (int l : labels) ++counts[l];
  if (counts.size() != 2) throw InvalidArgument("proxy_metrics needs exactly two classes");
  for (const auto& [c, n] : counts) {
    if (n < 2) throw InvalidArgument("proxy_metrics needs at least 2 samples per class");
  }
  auto [train, test] = split_indices(x.rows(), test_fraction, derive(seed, 0));
  std::vector<int> y_train, y_test, pred;
  for (std::size_t i : train) y_train.push_back(labels[i]);
  for (std::size_t i : test) y_test.push_back(labels[i]);
  const DecisionTree tree = tree_fit(x.select_rows(train), y_train, params, derive(seed, 1));
  for (std::size_t i : test) pred.push_back(tree.predict(x.row(i)));
  const auto s = score(pred, y_test);
  return {s.accuracy, s.macro_recall};
}

PcaResult pca_project(const Matrix& x, std::size_t k) {
  const std::size_t n = x.rows(), d = x.cols();
  if (k < 1 || k > d) throw InvalidArgument("pca_project: k must lie in [1, dim]");
  if (n < k) throw InvalidArgument("pca_project needs at least k samples");
  PcaResult out;
  out.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out.mean[j] += x(i, j);
  }
  for (auto& m : out.mean) m /= static_cast<double>(n);
  const auto ed = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd centered(static_cast<Eigen::Index>(n), ed);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      centered(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x(i, j) - out.mean[j];
    }
  }
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  double total = 0.0;
  for (Eigen::Index i = 0; i < ed; ++i) total += std::max(0.0, values(i));
  out.components = Matrix(k, d);
  for (std::size_t c = 0; c < k; ++c) {
    const Eigen::Index src = ed - 1 - static_cast<Eigen::Index>(c);
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index pivot = 0;
    for (Eigen::Index j = 1; j < ed; ++j) {
      if (std::abs(v(j)) > std::abs(v(pivot)) + 1e-12) pivot = j;
    }
    if (v(pivot) < 0.0) v = -v;
    for (std::size_t j = 0; j < d; ++j) out.components(c, j) = v(static_cast<Eigen::Index>(j));
    out.explained_ratio.push_back(total > 0.0 ? std::max(0.0, values(src)) / total : 0.0);
  }
  out.projected = Matrix(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += (x(i, j) - out.mean[j]) * out.components(c, j);
      out.projected(i, c) = s;
    }
  }
  return out;
}

std::string render_scatter_svg(const Matrix& points, std::span<const int> clusters,
                               std::span<const std::string> cluster_names) {
  static constexpr const char* kPalette[10] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                               "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                               "#bcbd22", "#17becf"};
  if (points.cols() < 2) throw InvalidArgument("scatter needs 2-D points");
  if (clusters.size() != points.rows()) throw InvalidArgument("one cluster index per point required");
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (points.rows() > 0) {
    xmin = xmax = points(0, 0);
    ymin = ymax = points(0, 1);
    for (std::size_t i = 0; i < points.rows(); ++i) {
      xmin = std::min(xmin, points(i, 0));
      xmax = std::max(xmax, points(i, 0));
      ymin = std::min(ymin, points(i, 1));
      ymax = std::max(ymax, points(i, 1));
    }
  }
  const double xspan = xmax > xmin ? xmax - xmin : 1.0;
  const double yspan = ymax > ymin ? ymax - ymin : 1.0;
  const double left = 40, right = 640, top = 40, bottom = 560;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" viewBox=\"0 0 800 600\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const double px = left + (points(i, 0) - xmin) / xspan * (right - left);
    const double py = bottom - (points(i, 1) - ymin) / yspan * (bottom - top);
    const int c = clusters[i];
    const char* color = c < 0 ? "#000000" : kPalette[static_cast<std::size_t>(c) % 10];
    svg << "<circle cx=\"" << fmt(px) << "\" cy=\"" << fmt(py) << "\" r=\"3\" fill=\"" << color
        << "\" fill-opacity=\"0.7\"/>\n";
  }
  for (std::size_t c = 0; c < cluster_names.size(); ++c) {
    const double y = 60.0 + 20.0 * static_cast<double>(c);
    svg << "<circle cx=\"665\" cy=\"" << fmt(y - 4) << "\" r=\"5\" fill=\"" << kPalette[c % 10] << "\"/>\n";
    std::string name;
    for (char ch : cluster_names[c]) {
      if (ch == '<') name += "&lt;";
      else if (ch == '>') name += "&gt;";
      else if (ch == '&') name += "&amp;";
      else name.push_back(ch);
    }
    svg << "<text x=\"675\" y=\"" << fmt(y) << "\" font-size=\"12\" font-family=\"sans-serif\">" << name
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string render_scatter_csv(const Matrix& points, std::span<const std::int64_t> ids,
                               std::span<const int> clusters) {
  if (ids.size() != points.rows() || clusters.size() != points.rows()) {
    throw InvalidArgument("one id and cluster per point required");
  }
  std::ostringstream out;
  out << "id,pc1,pc2,cluster\n";
  char buf[64];
  for (std::size_t i = 0; i < points.rows(); ++i) {
    out << ids[i];
    for (std::size_t c = 0; c < 2; ++c) {
      std::snprintf(buf, sizeof(buf), ",%.6g", c < points.cols() ? points(i, c) : 0.0);
      out << buf;
    }
    out << ',' << clusters[i] << '\n';
  }
  return out.str();
}

}  // namespace lgw
