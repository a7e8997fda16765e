#include "lgw/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "lgw/parallel.hpp"

namespace lgw {
namespace {

double plogp_bits(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

// Entropy of a discrete distribution with logarithm base `base` (base <= 1
// gives 0, the single-outcome case).
double entropy_base(std::span<const double> weights, double base) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0) || base <= 1.0) return 0.0;
  double h = 0.0;
  for (double w : weights) {
    const double p = w / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h / std::log(base);
}

void check_importance(const Matrix& r) {
  if (r.rows() == 0 || r.cols() == 0) throw InvalidArgument("importance matrix is empty");
  for (double v : r.data()) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("importance entries must be finite and >= 0");
  }
}

std::vector<std::string> dim_labels(std::size_t dim) {
  std::vector<std::string> out;
  for (std::size_t d = 0; d < dim; ++d) out.push_back("z" + std::to_string(d));
  return out;
}

std::vector<std::string> factor_labels(const FactorSchema& schema, std::span<const std::size_t> factors) {
  std::vector<std::string> out;
  for (std::size_t f : factors) out.push_back(schema.factor(f).name);
  return out;
}

// Annotated rows of `factor` within `pool`, grouped by class.
std::map<int, std::vector<std::size_t>> groups_by_class(const LatentDataset& ds,
                                                        std::span<const std::size_t> pool,
                                                        std::size_t factor) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i : pool) {
    if (auto c = ds.class_of(i, factor)) groups[*c].push_back(i);
  }
  return groups;
}

}  // namespace

DimBins DimBins::fit(std::span<const double> values, std::size_t count) {
  if (values.empty()) throw InvalidArgument("cannot fit bins to an empty sample");
  if (count < 1) throw InvalidArgument("bin count must be positive");
  DimBins b;
  b.count = count;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  b.min = *lo;
  b.max = *hi;
  b.constant = !(b.max > b.min);
  const double width = (b.max - b.min) / static_cast<double>(count);
  for (std::size_t i = 0; i <= count; ++i) b.edges.push_back(b.min + width * static_cast<double>(i));
  b.edges.back() = b.max;
  return b;
}

std::size_t DimBins::bin_of(double value) const {
  if (constant) return 0;
  const double width = (max - min) / static_cast<double>(count);
  const double pos = std::floor((value - min) / width);
  if (!(pos > 0.0)) return 0;
  return std::min(count - 1, static_cast<std::size_t>(pos));
}

BinGrid BinGrid::fit(const Matrix& x, std::size_t bins) {
  BinGrid grid;
  for (std::size_t d = 0; d < x.cols(); ++d) grid.dims_.push_back(DimBins::fit(x.column(d), bins));
  return grid;
}

double entropy_binned(std::span<const double> values, const DimBins& bins) {
  if (values.empty()) throw InvalidArgument("entropy of an empty sample");
  if (bins.constant) return 0.0;
  std::vector<double> hist(bins.count, 0.0);
  for (double v : values) hist[bins.bin_of(v)] += 1.0;
  const double n = static_cast<double>(values.size());
  double h = 0.0;
  for (double c : hist) h += plogp_bits(c / n);
  return h;
}

MutualInformation mutual_information_matrix(const LatentDataset& ds, std::size_t bins) {
  if (ds.empty()) throw InvalidArgument("mutual information of an empty dataset");
  const auto& schema = ds.schema();
  const BinGrid grid = BinGrid::fit(ds.vectors(), bins);
  MutualInformation out;
  for (std::size_t d = 0; d < ds.dim(); ++d) out.entropy.push_back(entropy_binned(ds.vectors().column(d), grid.dim(d)));

  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::map<int, std::vector<std::size_t>>> groups;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    auto g = groups_by_class(ds, all, f);
    if (g.size() < 2) {
      out.warnings.push_back("factor " + schema.factor(f).name + " has fewer than 2 populated values; skipped");
      continue;
    }
    out.factors.push_back(f);
    groups.push_back(std::move(g));
  }
  out.mi = Matrix(ds.dim(), out.factors.size());
  for (std::size_t k = 0; k < out.factors.size(); ++k) {
    const auto& g = groups[k];
    std::size_t annotated = 0;
    std::vector<double> class_sizes;
    for (const auto& [c, rows] : g) {
      annotated += rows.size();
      class_sizes.push_back(static_cast<double>(rows.size()));
    }
    out.factor_entropy.push_back(entropy_base(class_sizes, 2.0));
    const bool complete = annotated == ds.size();
    for (std::size_t d = 0; d < ds.dim(); ++d) {
      const DimBins& b = grid.dim(d);
      double h_marginal = out.entropy[d];
      double h_conditional = 0.0;
      std::vector<double> pooled;
      for (const auto& [c, rows] : g) {
        std::vector<double> values;
        values.reserve(rows.size());
        for (std::size_t i : rows) values.push_back(ds.vector(i)[d]);
        h_conditional += static_cast<double>(rows.size()) / static_cast<double>(annotated) * entropy_binned(values, b);
        if (!complete) pooled.insert(pooled.end(), values.begin(), values.end());
      }
      // With sparse annotations the marginal is taken over the annotated
      // population so both entropies describe the same samples.
      if (!complete) h_marginal = entropy_binned(pooled, b);
      out.mi(d, k) = std::max(0.0, h_marginal - h_conditional);
    }
  }
  return out;
}

MigResult mig(const MutualInformation& mi, bool normalized) {
  if (mi.mi.rows() < 2) throw InvalidArgument("MIG needs at least 2 latent dimensions");
  if (mi.factors.empty()) throw InvalidArgument("MIG needs at least one factor with 2 populated values");
  MigResult out;
  for (std::size_t k = 0; k < mi.factors.size(); ++k) {
    double first = -1.0, second = -1.0;
    for (std::size_t d = 0; d < mi.mi.rows(); ++d) {
      const double v = mi.mi(d, k);
      if (v > first) {
        second = first;
        first = v;
      } else if (v > second) {
        second = v;
      }
    }
    double gap = first - second;
    if (normalized) gap = mi.factor_entropy[k] > 0.0 ? gap / mi.factor_entropy[k] : 0.0;
    out.gaps.push_back(gap);
  }
  out.value = std::accumulate(out.gaps.begin(), out.gaps.end(), 0.0) / static_cast<double>(out.gaps.size());
  return out;
}

double mig(const LatentDataset& ds, std::size_t bins, bool normalized) {
  return mig(mutual_information_matrix(ds, bins), normalized).value;
}

ModularityResult modularity(const MutualInformation& mi, bool raw_variance) {
  const std::size_t k = mi.factors.size();
  if (k < 2) throw InvalidArgument("modularity needs at least 2 factors");
  ModularityResult out;
  for (std::size_t d = 0; d < mi.mi.rows(); ++d) {
    std::vector<double> row(mi.mi.row(d).begin(), mi.mi.row(d).end());
    const auto top = std::max_element(row.begin(), row.end());
    const double scale = *top;
    row.erase(top);
    if (!raw_variance) {
      for (auto& v : row) v = scale > 0.0 ? v / scale : 0.0;
    }
    const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(row.size());
    out.per_dim.push_back(1.0 - var);
  }
  out.value = std::accumulate(out.per_dim.begin(), out.per_dim.end(), 0.0) / static_cast<double>(out.per_dim.size());
  return out;
}

ZDiffResult z_diff_accuracy(const LatentDataset& ds, std::span<const std::size_t> train,
                            std::span<const std::size_t> test, const ZDiffConfig& config, Seed seed) {
  if (config.batch < 1) throw InvalidArgument("z_diff batch must be positive");
  const auto& schema = ds.schema();
  // Pairable classes (>= 2 members) per factor, for both pools.
  auto pairable = [&](std::span<const std::size_t> pool, std::size_t f) {
    std::vector<std::vector<std::size_t>> out;
    for (auto& [c, rows] : groups_by_class(ds, pool, f)) {
      if (rows.size() >= 2) out.push_back(std::move(rows));
    }
    return out;
  };
  std::vector<std::size_t> factors;
  std::vector<std::vector<std::vector<std::size_t>>> train_groups, test_groups;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    auto tr = pairable(train, f);
    auto te = pairable(test, f);
    if (tr.empty() || te.empty()) continue;
    factors.push_back(f);
    train_groups.push_back(std::move(tr));
    test_groups.push_back(std::move(te));
  }
  ZDiffResult out;
  out.factors_used = factors.size();
  if (factors.size() < 2) {
    out.accuracy = 100.0;
    out.degenerate = true;
    return out;
  }
  const std::size_t dim = ds.dim();
  auto make_points = [&](const std::vector<std::vector<std::vector<std::size_t>>>& groups,
                         std::size_t per_factor, Rng& rng, Matrix& x, std::vector<int>& y) {
    std::vector<double> feature(dim);
    for (std::size_t k = 0; k < factors.size(); ++k) {
      for (std::size_t p = 0; p < per_factor; ++p) {
        std::fill(feature.begin(), feature.end(), 0.0);
        for (std::size_t b = 0; b < config.batch; ++b) {
          const auto& rows = groups[k][rng.index(groups[k].size())];
          const std::size_t i = rng.index(rows.size());
          std::size_t j = rng.index(rows.size() - 1);
          if (j >= i) ++j;
          auto z1 = ds.vector(rows[i]);
          auto z2 = ds.vector(rows[j]);
          for (std::size_t d = 0; d < dim; ++d) feature[d] += std::abs(z1[d] - z2[d]);
        }
        for (auto& v : feature) v /= static_cast<double>(config.batch);
        x.append_row(feature);
        y.push_back(static_cast<int>(k));
      }
    }
  };
  Rng train_rng(derive(seed, 0));
  Rng test_rng(derive(seed, 1));
  Matrix x_train(0, dim), x_test(0, dim);
  std::vector<int> y_train, y_test;
  make_points(train_groups, config.train_points_per_factor, train_rng, x_train, y_train);
  make_points(test_groups, config.test_points_per_factor, test_rng, x_test, y_test);
  const auto clf = linear_fit(x_train, y_train, config.linear, derive(seed, 2));
  std::vector<int> pred;
  for (std::size_t i = 0; i < x_test.rows(); ++i) pred.push_back(classify(clf, x_test.row(i)));
  out.accuracy = 100.0 * score(pred, y_test).accuracy;
  return out;
}

std::vector<int> golden_table(const Matrix& counts) {
  std::vector<int> golden(counts.rows(), -1);
  for (std::size_t d = 0; d < counts.rows(); ++d) {
    double best = 0.0;
    for (std::size_t f = 0; f < counts.cols(); ++f) {
      if (counts(d, f) > best) {
        best = counts(d, f);
        golden[d] = static_cast<int>(f);
      }
    }
  }
  return golden;
}

ZMinVarResult z_min_var_score(const LatentDataset& ds, std::span<const std::size_t> train,
                              std::span<const std::size_t> test, const ZMinVarConfig& config, Seed seed) {
  if (config.repeats < 1 || config.samples < 2) {
    throw InvalidArgument("z_min_var needs repeats >= 1 and samples >= 2");
  }
  const std::size_t dim = ds.dim();
  const auto& schema = ds.schema();
  std::vector<double> scale(dim, 0.0);
  std::vector<bool> usable(dim, false);
  {
    const double n = static_cast<double>(ds.size());
    for (std::size_t d = 0; d < dim; ++d) {
      double mean = 0.0;
      for (std::size_t i = 0; i < ds.size(); ++i) mean += ds.vector(i)[d];
      mean /= n;
      double var = 0.0;
      for (std::size_t i = 0; i < ds.size(); ++i) var += (ds.vector(i)[d] - mean) * (ds.vector(i)[d] - mean);
      scale[d] = std::sqrt(var / n);
      usable[d] = scale[d] > 0.0;
    }
  }
  if (std::none_of(usable.begin(), usable.end(), [](bool u) { return u; })) {
    throw InvalidArgument("z_min_var: every latent dimension is constant");
  }

  ZMinVarResult out;
  std::vector<std::vector<std::vector<std::size_t>>> train_groups, test_groups;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    std::vector<std::vector<std::size_t>> tr, te;
    for (auto& [c, rows] : groups_by_class(ds, train, f)) {
      if (rows.size() >= 2) tr.push_back(std::move(rows));
    }
    for (auto& [c, rows] : groups_by_class(ds, test, f)) {
      if (rows.size() >= 2) te.push_back(std::move(rows));
    }
    if (tr.empty()) continue;
    if (te.empty()) throw InvalidArgument("z_min_var: factor " + schema.factor(f).name + " is absent from the test split");
    out.factors.push_back(f);
    train_groups.push_back(std::move(tr));
    test_groups.push_back(std::move(te));
  }
  if (out.factors.empty()) throw InvalidArgument("z_min_var: no factor has a value with 2 training samples");

  auto vote = [&](const std::vector<std::vector<std::size_t>>& groups, Rng& rng) {
    const auto& rows = groups[rng.index(groups.size())];
    const auto pick = rng.sample_without_replacement(rows.size(), config.samples);
    std::size_t best_dim = 0;
    double best = std::numeric_limits<double>::infinity();
    const double m = static_cast<double>(pick.size());
    for (std::size_t d = 0; d < dim; ++d) {
      if (!usable[d]) continue;
      double mean = 0.0;
      for (std::size_t p : pick) mean += ds.vector(rows[p])[d] / scale[d];
      mean /= m;
      double var = 0.0;
      for (std::size_t p : pick) {
        const double c = ds.vector(rows[p])[d] / scale[d] - mean;
        var += c * c;
      }
      var /= m;
      if (var < best) {
        best = var;
        best_dim = d;
      }
    }
    return best_dim;
  };

  const std::size_t k = out.factors.size();
  out.counts = Matrix(dim, k);
  for (std::size_t f = 0; f < k; ++f) {
    Rng rng(derive(seed, 2 * f));
    for (std::size_t r = 0; r < config.repeats; ++r) out.counts(vote(train_groups[f], rng), f) += 1.0;
  }
  out.golden = golden_table(out.counts);
  for (std::size_t f = 0; f < k; ++f) {
    Rng rng(derive(seed, 2 * f + 1));
    double acc = 0.0;
    for (std::size_t r = 0; r < config.repeats; ++r) {
      if (out.golden[vote(test_groups[f], rng)] == static_cast<int>(f)) acc += 1.0;
    }
    out.per_factor.push_back(acc / static_cast<double>(config.repeats));
  }
  out.score = std::accumulate(out.per_factor.begin(), out.per_factor.end(), 0.0) / static_cast<double>(k);
  return out;
}

Importance dci_importance(const LatentDataset& ds, std::span<const std::size_t> rows,
                          const ForestParams& params, Seed seed) {
  const auto& schema = ds.schema();
  std::vector<std::vector<double>> rows_out(schema.size());
  std::vector<std::string> errors(schema.size());
  parallel_for(schema.size(), [&](std::size_t f) {
    std::vector<std::size_t> keep;
    std::vector<int> y;
    for (std::size_t i : rows) {
      if (auto c = ds.class_of(i, f)) {
        keep.push_back(i);
        y.push_back(*c);
      }
    }
    if (keep.empty()) {
      errors[f] = "factor " + schema.factor(f).name + " has no annotated samples; skipped";
      return;
    }
    try {
      const auto forest = forest_fit(ds.vectors().select_rows(keep), y, params, derive(seed, f));
      rows_out[f] = forest_importance(forest);
    } catch (const NumericalError&) {
      errors[f] = "factor " + schema.factor(f).name + " has degenerate labels; skipped";
    }
  });
  Importance out;
  std::vector<std::vector<double>> kept;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    if (!errors[f].empty()) {
      out.warnings.push_back(errors[f]);
      continue;
    }
    out.factors.push_back(f);
    kept.push_back(std::move(rows_out[f]));
  }
  out.r = kept.empty() ? Matrix(0, ds.dim()) : Matrix::from_rows(kept);
  return out;
}

double disentanglement_score(const Matrix& r) {
  check_importance(r);
  const double k = static_cast<double>(r.rows());
  double total = 0.0;
  for (double v : r.data()) total += v;
  if (!(total > 0.0)) throw InvalidArgument("importance matrix has zero mass");
  double score = 0.0;
  for (std::size_t d = 0; d < r.cols(); ++d) {
    const auto column = r.column(d);
    const double mass = std::accumulate(column.begin(), column.end(), 0.0);
    if (mass <= 0.0) continue;
    score += (mass / total) * (1.0 - entropy_base(column, k));
  }
  return score;
}

double completeness_score(const Matrix& r) {
  check_importance(r);
  const double dims = static_cast<double>(r.cols());
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t f = 0; f < r.rows(); ++f) {
    auto row = r.row(f);
    if (std::accumulate(row.begin(), row.end(), 0.0) <= 0.0) continue;
    sum += 1.0 - entropy_base(row, dims);
    ++counted;
  }
  if (counted == 0) throw InvalidArgument("importance matrix has zero mass");
  return sum / static_cast<double>(counted);
}

InformativenessResult informativeness_score(const LatentDataset& ds, std::span<const std::size_t> train,
                                            std::span<const std::size_t> test, const LinearParams& params,
                                            Seed seed) {
  const auto& schema = ds.schema();
  InformativenessResult out;
  std::vector<double> errors;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    std::vector<std::size_t> tr_rows, te_rows;
    std::vector<int> y_train, y_test;
    for (std::size_t i : train) {
      if (auto c = ds.class_of(i, f)) {
        tr_rows.push_back(i);
        y_train.push_back(*c);
      }
    }
    for (std::size_t i : test) {
      if (auto c = ds.class_of(i, f)) {
        te_rows.push_back(i);
        y_test.push_back(*c);
      }
    }
    std::vector<int> distinct(y_train);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2 || te_rows.empty()) {
      out.warnings.push_back("factor " + schema.factor(f).name + " is degenerate for informativeness; skipped");
      continue;
    }
    const auto clf = linear_fit(ds.vectors().select_rows(tr_rows), y_train, params, derive(seed, f));
    std::vector<int> pred;
    for (std::size_t i : te_rows) pred.push_back(classify(clf, ds.vector(i)));
    const double acc = score(pred, y_test).accuracy;
    out.factors.push_back(f);
    out.accuracy.push_back(acc);
    errors.push_back(1.0 - acc);
  }
  if (errors.empty()) throw InvalidArgument("informativeness: every factor is degenerate");
  out.error = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
  return out;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"z_diff", "z_min_var", "mig", "modularity", "dci",
                                                 "informativeness"};
  return names;
}

MetricReport run_all_metrics(const LatentDataset& ds, const MetricsConfig& config, Seed seed) {
  if (ds.empty()) throw InvalidArgument("metrics need at least one sample");
  for (const auto& name : config.selected) {
    if (std::find(metric_names().begin(), metric_names().end(), name) == metric_names().end()) {
      throw InvalidArgument("unknown metric " + name);
    }
  }
  auto wanted = [&](const std::string& name) { return config.selected.empty() || config.selected.count(name) > 0; };
  const auto& schema = ds.schema();
  MetricReport report;
  report.set_config("seed", std::to_string(seed.value));
  report.set_config("log_base", "2");
  report.set_config("bins", std::to_string(config.bins));
  report.set_config("test_fraction", std::to_string(config.test_fraction));
  report.set_config("classifier_family", "multinomial_logistic");
  report.set_config("mig", config.normalized_mig ? "normalized" : "unnormalized");
  report.set_config("modularity_variance", config.raw_variance ? "raw" : "normalized_by_dim_max");
  report.set_config("z_min_var_samples", std::to_string(config.z_min_var.samples));
  report.set_config("z_min_var_repeats", std::to_string(config.z_min_var.repeats));
  report.set_config("z_min_var_match", "argmax count of the golden table");
  report.set_config("z_diff_batch", std::to_string(config.z_diff.batch));
  report.set_config("z_diff_points_per_factor", std::to_string(config.z_diff.train_points_per_factor));
  report.set_config("z_diff_unit", "percent");
  report.set_config("forest_trees", std::to_string(config.forest.n_trees));
  report.set_config("forest_split_candidates",
                    config.forest.tree.max_features == kAllFeatures ? "all"
                    : config.forest.tree.max_features == 0
                        ? "sqrt"
                        : std::to_string(config.forest.tree.max_features));

  const auto split = split_indices(ds.size(), config.test_fraction, derive(seed, 1));
  const auto& train = split.first;
  const auto& test = split.second;
  const auto dims = dim_labels(ds.dim());

  auto guarded = [&](const std::string& name, auto&& body) {
    try {
      body();
    } catch (const InvalidArgument& e) {
      report.warn(name + ": " + e.what());
    } catch (const NumericalError& e) {
      report.warn(name + ": " + e.what());
    }
  };

  if (wanted("z_diff")) {
    guarded("z_diff", [&] {
      const auto r = z_diff_accuracy(ds, train, test, config.z_diff, derive(seed, 2));
      report.set("z_diff_accuracy", r.accuracy);
      report.set("z_diff_degenerate", r.degenerate ? 1.0 : 0.0);
      if (r.degenerate) report.warn("z_diff: fewer than 2 pairable factors; accuracy is trivially 100");
    });
  }
  if (wanted("z_min_var")) {
    guarded("z_min_var", [&] {
      const auto r = z_min_var_score(ds, train, test, config.z_min_var, derive(seed, 3));
      report.set("z_min_var_score", r.score);
      report.add_table({"z_min_var_counts", dims, factor_labels(schema, r.factors), r.counts});
    });
  }
  if (wanted("mig") || wanted("modularity")) {
    guarded("mutual_information", [&] {
      const auto mi = mutual_information_matrix(ds, config.bins);
      for (const auto& w : mi.warnings) report.warn(w);
      Matrix h(ds.dim(), 1);
      for (std::size_t d = 0; d < ds.dim(); ++d) h(d, 0) = mi.entropy[d];
      report.add_table({"entropy", dims, {"H(z)"}, h});
      report.add_table({"mutual_information", dims, factor_labels(schema, mi.factors), mi.mi});
      if (wanted("mig")) {
        guarded("mig", [&] {
          const auto plain = mig(mi, false);
          const auto norm = mig(mi, true);
          report.set("mig", config.normalized_mig ? norm.value : plain.value);
          report.set("mig_unnormalized", plain.value);
          report.set("mig_normalized", norm.value);
          Matrix gaps(plain.gaps.size(), 1);
          for (std::size_t k = 0; k < plain.gaps.size(); ++k) gaps(k, 0) = plain.gaps[k];
          report.add_table({"mig_gaps", factor_labels(schema, mi.factors), {"gap"}, gaps});
        });
      }
      if (wanted("modularity")) {
        guarded("modularity", [&] {
          const auto normalized = modularity(mi, false);
          const auto raw = modularity(mi, true);
          report.set("modularity", config.raw_variance ? raw.value : normalized.value);
          report.set("modularity_normalized_variance", normalized.value);
          report.set("modularity_raw_variance", raw.value);
          Matrix per_dim(ds.dim(), 1);
          const auto& chosen = config.raw_variance ? raw : normalized;
          for (std::size_t d = 0; d < ds.dim(); ++d) per_dim(d, 0) = chosen.per_dim[d];
          report.add_table({"modularity_per_dim", dims, {"score"}, per_dim});
        });
      }
    });
  }
  if (wanted("dci")) {
    guarded("dci", [&] {
      const auto imp = dci_importance(ds, train, config.forest, derive(seed, 4));
      for (const auto& w : imp.warnings) report.warn("dci: " + w);
      if (imp.factors.empty()) throw InvalidArgument("no factor produced an importance row");
      report.set("disentanglement", disentanglement_score(imp.r));
      report.set("completeness", completeness_score(imp.r));
      report.add_table({"importance", factor_labels(schema, imp.factors), dims, imp.r});
    });
  }
  if (wanted("informativeness")) {
    guarded("informativeness", [&] {
      const auto r = informativeness_score(ds, train, test, config.linear, derive(seed, 5));
      for (const auto& w : r.warnings) report.warn(w);
      report.set("informativeness_error", r.error);
      Matrix acc(r.accuracy.size(), 1);
      for (std::size_t k = 0; k < r.accuracy.size(); ++k) acc(k, 0) = r.accuracy[k];
      report.add_table({"informativeness_accuracy", factor_labels(schema, r.factors), {"accuracy"}, acc});
    });
  }
  return report;
}

}  // namespace lgw
