#include "lgw/guided.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "lgw/parallel.hpp"

namespace lgw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Half-open cell (lo, hi] per dim.
struct Bounds {
  std::vector<double> lo;
  std::vector<double> hi;

  explicit Bounds(std::size_t dim) : lo(dim, -kInf), hi(dim, kInf) {}

  void apply(const PathStep& step) {
    if (step.branch == Branch::kYes) {
      hi[step.dim] = std::min(hi[step.dim], step.threshold);
    } else {
      lo[step.dim] = std::max(lo[step.dim], step.threshold);
    }
  }
  bool contains(std::size_t d, double v) const { return v > lo[d] && v <= hi[d]; }
};

double margin(const DimStats& s, const EditValueOptions& o) {
  return std::max(o.delta * s.std, o.epsilon);
}

// Squared distance from z to the center of the leaf cell, over the dims the
// path constrains. Open sides fall back to the observed range padded by std.
double cell_distance(const TreePath& path, std::span<const double> z, const std::vector<DimStats>& stats) {
  Bounds b(z.size());
  for (const auto& s : path.steps) b.apply(s);
  double d2 = 0.0;
  std::vector<bool> seen(z.size(), false);
  for (const auto& s : path.steps) {
    if (seen[s.dim]) continue;
    seen[s.dim] = true;
    const auto& st = stats[s.dim];
    const double lo = std::isfinite(b.lo[s.dim]) ? b.lo[s.dim] : std::min(st.min - st.std, b.hi[s.dim]);
    const double hi = std::isfinite(b.hi[s.dim]) ? b.hi[s.dim] : std::max(st.max + st.std, b.lo[s.dim]);
    const double c = 0.5 * (lo + hi);
    d2 += (z[s.dim] - c) * (z[s.dim] - c);
  }
  return d2;
}

bool has_class(const DecisionTree& tree, int c) {
  return std::binary_search(tree.classes.begin(), tree.classes.end(), c);
}

}  // namespace

std::vector<DimStats> dim_stats(const Matrix& x) {
  if (x.rows() == 0) throw InvalidArgument("dim_stats needs at least one row");
  std::vector<DimStats> out(x.cols());
  const double n = static_cast<double>(x.rows());
  for (std::size_t d = 0; d < x.cols(); ++d) {
    DimStats s{kInf, -kInf, 0.0, 0.0};
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double v = x(i, d);
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
      s.mean += v;
    }
    s.mean /= n;
    for (std::size_t i = 0; i < x.rows(); ++i) s.std += (x(i, d) - s.mean) * (x(i, d) - s.mean);
    s.std = std::sqrt(s.std / n);
    out[d] = s;
  }
  return out;
}

double edit_value_for_branch(double threshold, Branch branch, const DimStats& stats,
                             const EditValueOptions& options) {
  if (!std::isfinite(stats.std)) throw NumericalError("dim std is not finite");
  if (!std::isfinite(threshold)) throw NumericalError("threshold is not finite");
  const double m = margin(stats, options);
  const double raw = branch == Branch::kYes ? threshold - m : threshold + m;
  const double clamped = std::clamp(raw, stats.min - stats.std, std::max(stats.min - stats.std, stats.max + stats.std));
  const bool ok = branch == Branch::kYes ? clamped < threshold : clamped > threshold;
  return ok ? clamped : raw;
}

GuidedTraverser::GuidedTraverser(const Matrix& x, std::span<const int> labels, const TreeParams& params,
                                 Seed seed, const EditValueOptions& options)
    : tree_(tree_fit(x, labels, params, seed)), stats_(dim_stats(x)), options_(options) {}

GuidedEdit GuidedTraverser::traverse(std::span<const double> z, int from_class, int to_class) const {
  if (z.size() != tree_.dim) throw InvalidArgument("seed vector length does not match the tree");
  for (double v : z) {
    if (!std::isfinite(v)) throw InvalidArgument("seed vector is not finite");
  }
  if (!has_class(tree_, from_class)) {
    throw InvalidArgument("class " + std::to_string(from_class) + " is not in the labels");
  }
  GuidedEdit out;
  out.from_class = from_class;
  out.to_class = to_class;
  out.seed.assign(z.begin(), z.end());
  out.seed_prediction = tree_.predict(z);
  if (out.seed_prediction != from_class) {
    out.warnings.push_back("seed predicted as " + std::to_string(out.seed_prediction) + ", not " +
                           std::to_string(from_class));
  }

  const auto candidates = leaf_paths_for_class(tree_, to_class);
  if (candidates.empty()) {
    throw InvalidArgument("class " + std::to_string(to_class) + " is not the majority of any leaf");
  }
  std::size_t shortest = candidates.front().size();
  for (const auto& p : candidates) shortest = std::min(shortest, p.size());
  const TreePath* best = nullptr;
  double best_d2 = kInf;
  for (const auto& p : candidates) {
    if (p.size() != shortest) continue;
    const double d2 = cell_distance(p, z, stats_);
    if (best == nullptr || d2 < best_d2) {
      best = &p;
      best_d2 = d2;
    }
  }
  out.path = *best;

  Vector cur = out.seed;
  Bounds bounds(cur.size());
  for (const auto& step : out.path.steps) {
    if (!std::isfinite(step.threshold)) throw NumericalError("non-finite threshold on the path");
    bounds.apply(step);
    const std::size_t d = step.dim;
    if (bounds.contains(d, cur[d])) continue;
    double v = edit_value_for_branch(step.threshold, step.branch, stats_[d], options_);
    if (!bounds.contains(d, v)) {
      const double lo = bounds.lo[d];
      const double hi = bounds.hi[d];
      const double m = margin(stats_[d], options_);
      if (std::isfinite(lo) && std::isfinite(hi)) {
        v = 0.5 * (lo + hi);
      } else if (std::isfinite(lo)) {
        v = lo + m;
      } else {
        v = hi - m;
      }
      if (!bounds.contains(d, v)) v = hi;
    }
    out.edits.push_back({step.node, d, cur[d], v, step.threshold, step.branch});
    cur[d] = v;
    out.intermediates.push_back(cur);
  }
  out.final = std::move(cur);
  out.final_prediction = tree_.predict(out.final);
  if (out.final_prediction != to_class) {
    throw NumericalError("edited vector left the target leaf");
  }
  return out;
}

GuidedEdit guided_traverse(const Matrix& x, std::span<const int> labels, std::span<const double> seed_vector,
                           int from_class, int to_class, const TreeParams& params, Seed seed) {
  return GuidedTraverser(x, labels, params, seed).traverse(seed_vector, from_class, to_class);
}

Vector replay(std::span<const double> seed_vector, std::span<const EditStep> edits) {
  Vector z(seed_vector.begin(), seed_vector.end());
  for (const auto& e : edits) {
    if (e.dim >= z.size()) throw InvalidArgument("edit dim out of range");
    z[e.dim] = e.new_value;
  }
  return z;
}

FlipResult flip_ratio(const GuidedTraverser& traverser, const Matrix& seeds, int from_class, int to_class,
                      const Labeler& labeler, std::size_t factor) {
  if (seeds.rows() == 0) throw InvalidArgument("flip_ratio needs at least one seed");
  FlipResult out;
  out.seeds = seeds.rows();
  out.edits.resize(seeds.rows());
  std::vector<int> hit(seeds.rows(), 0);
  std::vector<int> failed(seeds.rows(), 0);
  parallel_for(seeds.rows(), [&](std::size_t i) {
    try {
      out.edits[i] = traverser.traverse(seeds.row(i), from_class, to_class);
      hit[i] = labeler.label_factor(out.edits[i].final, factor) == to_class ? 1 : 0;
    } catch (const Error&) {
      out.edits[i] = GuidedEdit{};
      failed[i] = 1;
    }
  });
  for (std::size_t i = 0; i < seeds.rows(); ++i) {
    out.labeler_hits += static_cast<std::size_t>(hit[i]);
    out.failures += static_cast<std::size_t>(failed[i]);
    if (!failed[i] && out.edits[i].final_prediction == to_class) ++out.tree_hits;
  }
  out.ratio = static_cast<double>(out.labeler_hits) / static_cast<double>(out.seeds);
  return out;
}

std::string to_string(Branch branch) { return branch == Branch::kYes ? "yes" : "no"; }

std::string render_edit_log(const GuidedEdit& edit) {
  using nlohmann::ordered_json;
  std::ostringstream os;
  ordered_json header;
  header["interpretation"] = "enforce-target-path";
  header["from_class"] = edit.from_class;
  header["to_class"] = edit.to_class;
  header["path_length"] = edit.path.size();
  header["edits"] = edit.edits.size();
  header["seed_prediction"] = edit.seed_prediction;
  header["final_prediction"] = edit.final_prediction;
  header["seed"] = edit.seed;
  header["final"] = edit.final;
  header["warnings"] = edit.warnings;
  os << header.dump() << '\n';
  for (const auto& e : edit.edits) {
    ordered_json line;
    line["dim"] = e.dim;
    line["old"] = e.old_value;
    line["new"] = e.new_value;
    line["threshold"] = e.threshold;
    line["branch"] = to_string(e.branch);
    line["node"] = e.node;
    os << line.dump() << '\n';
  }
  return os.str();
}

std::vector<EditStep> parse_edit_log(const std::string& text) {
  std::vector<EditStep> out;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.contains("interpretation")) continue;
      EditStep e;
      e.dim = j.at("dim").get<std::size_t>();
      e.old_value = j.at("old").get<double>();
      e.new_value = j.at("new").get<double>();
      e.threshold = j.at("threshold").get<double>();
      const auto b = j.at("branch").get<std::string>();
      if (b != "yes" && b != "no") throw SchemaError("branch must be yes or no");
      e.branch = b == "yes" ? Branch::kYes : Branch::kNo;
      e.node = j.value("node", std::size_t{0});
      out.push_back(e);
    } catch (const nlohmann::json::exception& ex) {
      throw SchemaError("edit log line " + std::to_string(lineno) + ": " + ex.what());
    } catch (const SchemaError& ex) {
      throw SchemaError("edit log line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

}  // namespace lgw
