// lgw: command-line probes over labeled latent spaces.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lgw/cvae.hpp"
#include "lgw/geometry.hpp"
#include "lgw/guided.hpp"
#include "lgw/ingest.hpp"
#include "lgw/metrics.hpp"
#include "lgw/parallel.hpp"
#include "lgw/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace lgw;

namespace {

// Thrown for flag combinations CLI11 cannot express; maps to exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string input;
  std::string schema;
  std::string out;
  std::string format;
  std::optional<std::uint64_t> seed;
};

// Resolved settings, printed before the command runs and echoed into reports.
class Config {
 public:
  void set(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
  template <typename T>
  void set(const std::string& key, const T& value) {
    std::ostringstream os;
    os << value;
    set(key, os.str());
  }
  void print() const {
    for (const auto& [k, v] : entries_) std::cout << k << ": " << v << '\n';
    std::cout.flush();
  }
  void echo(MetricReport& report) const {
    for (const auto& [k, v] : entries_) report.set_config(k, v);
  }
  void echo(ordered_json& j) const {
    ordered_json c;
    for (const auto& [k, v] : entries_) c[k] = v;
    j["config"] = c;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

void add_input(CLI::App* cmd, Common& c) {
  cmd->add_option("--input", c.input, "dataset (.jsonl or .csv)")->required();
  cmd->add_option("--schema", c.schema, "schema JSON for CSV input");
}

void add_seed(CLI::App* cmd, Common& c, bool required) {
  auto* opt = cmd->add_option("--seed", c.seed, "random seed");
  if (required) opt->required();
}

void add_out(CLI::App* cmd, Common& c, const std::vector<std::string>& formats) {
  cmd->add_option("--out", c.out, "output file")->required();
  cmd->add_option("--format", c.format, "output format (default: from the --out extension)")
      ->check(CLI::IsMember(formats));
}

Seed seed_of(const Common& c) {
  if (!c.seed) throw UsageError("--seed is required");
  return Seed{*c.seed};
}

LatentDataset load_input(const Common& c, Config& cfg) {
  std::optional<FactorSchema> schema;
  if (!c.schema.empty()) {
    schema = load_schema(c.schema);
    cfg.set("schema", c.schema);
    cfg.set("schema_hash", content_hash(c.schema));
  }
  cfg.set("input", c.input);
  cfg.set("input_hash", content_hash(c.input));
  auto ds = load_dataset(c.input, std::nullopt, schema);
  if (ds.empty()) throw DataError("input has no samples");
  return ds;
}

std::string resolve_format(const Common& c, const std::vector<std::string>& allowed) {
  std::string f = c.format;
  if (f.empty()) {
    f = fs::path(c.out).extension().string();
    if (!f.empty()) f = f.substr(1);
    if (f == "jsonl") f = "json";
  }
  for (const auto& a : allowed) {
    if (a == f) return f;
  }
  throw UsageError("cannot infer an output format from " + c.out + "; pass --format");
}

ReportFormat report_format(const std::string& f) { return f == "csv" ? ReportFormat::kCsv : ReportFormat::kJson; }

std::size_t factor_of(const LatentDataset& ds, const std::string& name) {
  if (name.empty()) {
    if (ds.schema().size() == 0) throw SchemaError("dataset has no factors");
    return 0;
  }
  return ds.schema().factor_index(name);
}

std::size_t row_index(const LatentDataset& ds, std::int64_t id) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.id(i) == id) return i;
  }
  throw DataError("no sample with id " + std::to_string(id));
}

Vector copy(std::span<const double> z) { return Vector(z.begin(), z.end()); }

// Readout of factor values for emitted vectors, by nearest centroid. Only
// built when every factor has annotated samples.
class Readout {
 public:
  explicit Readout(const LatentDataset& ds) : schema_(ds.schema()) {
    categorical_.assign(schema_.size(), false);
    for (std::size_t f = 0; f < schema_.size(); ++f) {
      if (populated_classes(ds, f).empty()) return;
      for (std::size_t i = 0; i < ds.size() && !categorical_[f]; ++i) {
        categorical_[f] = ds.label(i, f).kind == LabelKind::kCategorical;
      }
    }
    labeler_.emplace(centroid_labeler(ds, true));
  }

  bool available() const { return labeler_.has_value(); }

  ordered_json labels(std::span<const double> z) const {
    ordered_json out = ordered_json::object();
    if (!labeler_) return out;
    const auto cls = labeler_->label(z);
    for (std::size_t f = 0; f < schema_.size(); ++f) {
      const auto& factor = schema_.factor(f);
      if (categorical_[f] && cls[f] >= 0 && static_cast<std::size_t>(cls[f]) < factor.values.size()) {
        out[factor.name] = factor.values[static_cast<std::size_t>(cls[f])];
      } else {
        out[factor.name] = cls[f];
      }
    }
    return out;
  }

 private:
  FactorSchema schema_;
  std::vector<bool> categorical_;
  std::optional<CentroidLabeler> labeler_;
};

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string vectors_csv(const std::vector<std::pair<std::string, Vector>>& rows, const std::string& key_header) {
  std::ostringstream os;
  os << key_header;
  const std::size_t dim = rows.empty() ? 0 : rows.front().second.size();
  for (std::size_t d = 0; d < dim; ++d) os << ",z" << d;
  os << '\n';
  for (const auto& [key, z] : rows) {
    os << key;
    for (double v : z) os << ',' << csv_number(v);
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  Common c;
  std::size_t factors = 4;
  std::size_t values = 4;
  std::size_t dim = 32;
  std::size_t samples = 2000;
  double noise = 0.1;
  std::string layout = "disentangled";
  double cone_radius = 3.0;
  std::string truth;
};

std::string render_truth(const SynthSpec& spec, const GroundTruth& t) {
  ordered_json j;
  j["layout"] = to_string(t.layout);
  j["seed"] = spec.seed.value;
  j["dim"] = spec.dim;
  j["samples"] = spec.samples;
  j["noise_std"] = spec.noise_std;
  j["gap"] = t.gap;
  ordered_json dims = ordered_json::object();
  for (std::size_t f = 0; f < t.factor_dims.size(); ++f) dims[spec.schema.factor(f).name] = t.factor_dims[f];
  j["factor_dims"] = dims;
  auto copies = ordered_json::array();
  for (const auto& [a, b] : t.copies) copies.push_back({a, b});
  j["copies"] = copies;
  auto rows = [](const Matrix& m) {
    auto out = ordered_json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) out.push_back(copy(m.row(i)));
    return out;
  };
  j["rotation"] = t.rotation ? rows(*t.rotation) : ordered_json();
  if (t.layout == Layout::kCones) {
    j["cone_radius"] = spec.cone_radius;
    j["directions"] = rows(t.directions);
  }
  return j.dump(2) + "\n";
}

int run_synth(const SynthArgs& a) {
  Config cfg;
  SynthSpec spec;
  spec.seed = seed_of(a.c);
  if (!a.c.schema.empty()) {
    spec.schema = load_schema(a.c.schema);
    cfg.set("schema", a.c.schema);
  } else {
    spec.schema = make_schema(a.factors, a.values);
    cfg.set("factors", a.factors);
    cfg.set("values", a.values);
  }
  spec.dim = a.dim;
  spec.samples = a.samples;
  spec.noise_std = a.noise;
  spec.layout = parse_layout(a.layout);
  spec.cone_radius = a.cone_radius;
  const fs::path truth = a.truth.empty() ? fs::path(a.c.out + ".truth.json") : fs::path(a.truth);
  cfg.set("command", "synth");
  cfg.set("seed", spec.seed.value);
  cfg.set("dim", spec.dim);
  cfg.set("samples", spec.samples);
  cfg.set("noise_std", spec.noise_std);
  cfg.set("layout", to_string(spec.layout));
  if (spec.layout == Layout::kCones) cfg.set("cone_radius", spec.cone_radius);
  cfg.set("out", a.c.out);
  cfg.set("truth", truth.string());
  cfg.print();

  const auto data = generate(spec);
  std::optional<DataFormat> format;
  if (a.c.format == "csv") format = DataFormat::kCsv;
  if (a.c.format == "jsonl") format = DataFormat::kJsonl;
  save_dataset(data.dataset, a.c.out, format);
  write_text_file(truth, render_truth(spec, data.truth));
  return 0;
}

// ---------------------------------------------------------------- metrics

struct MetricsArgs {
  Common c;
  std::size_t bins = 20;
  double test_fraction = 0.2;
  std::vector<std::string> only;
  bool raw_variance = false;
  bool normalized_mig = false;
  std::size_t trees = 64;
  std::string split_candidates = "all";
  std::size_t repeats = 50;
  std::size_t var_samples = 64;
  std::size_t batch = 64;
};

int run_metrics(const MetricsArgs& a) {
  Config cfg;
  cfg.set("command", "metrics");
  const Seed seed = seed_of(a.c);
  cfg.set("seed", seed.value);
  const auto ds = load_input(a.c, cfg);
  const auto format = resolve_format(a.c, {"json", "csv"});
  MetricsConfig mc;
  mc.bins = a.bins;
  mc.test_fraction = a.test_fraction;
  mc.raw_variance = a.raw_variance;
  mc.normalized_mig = a.normalized_mig;
  mc.forest.n_trees = a.trees;
  if (a.split_candidates == "all") {
    mc.forest.tree.max_features = kAllFeatures;
  } else if (a.split_candidates == "sqrt") {
    mc.forest.tree.max_features = 0;
  } else {
    try {
      mc.forest.tree.max_features = std::stoul(a.split_candidates);
    } catch (const std::exception&) {
      throw UsageError("--split-candidates takes all, sqrt or a positive integer");
    }
    if (mc.forest.tree.max_features == 0) throw UsageError("--split-candidates must be positive");
  }
  mc.z_min_var.repeats = a.repeats;
  mc.z_min_var.samples = a.var_samples;
  mc.z_diff.batch = a.batch;
  for (const auto& m : a.only) mc.selected.insert(m);
  std::string only;
  for (const auto& m : a.only) only += (only.empty() ? "" : ",") + m;
  cfg.set("only", only.empty() ? "all" : only);
  cfg.set("out", a.c.out);
  cfg.set("format", format);
  cfg.print();

  MetricReport report;
  cfg.echo(report);
  report.merge(run_all_metrics(ds, mc, seed));
  save_report(report, a.c.out, report_format(format));
  return 0;
}

// ---------------------------------------------------------------- traverse

struct TraverseArgs {
  Common c;
  std::int64_t id = 0;
  std::size_t steps = 8;
  std::vector<std::size_t> dims;
  bool guided = false;
  std::string factor;
  std::string from;
  std::string to;
  std::size_t max_depth = 0;
  std::size_t min_samples_leaf = 1;
};

struct BinaryTask {
  std::size_t factor = 0;
  int from = 0;
  int to = 1;
  std::vector<std::size_t> rows;  // samples carrying either value
  std::vector<int> labels;
};

BinaryTask binary_task(const LatentDataset& ds, const std::string& factor, const std::string& from,
                       const std::string& to) {
  if (from.empty() || to.empty()) throw UsageError("--from and --to are required");
  BinaryTask t;
  t.factor = factor_of(ds, factor);
  t.from = static_cast<int>(ds.schema().value_index(t.factor, from));
  t.to = static_cast<int>(ds.schema().value_index(t.factor, to));
  if (t.from == t.to) throw UsageError("--from and --to must differ");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Label& l = ds.label(i, t.factor);
    if (l.kind != LabelKind::kCategorical || (l.value != t.from && l.value != t.to)) continue;
    t.rows.push_back(i);
    t.labels.push_back(l.value);
  }
  std::size_t n_from = 0;
  for (int y : t.labels) n_from += y == t.from ? 1 : 0;
  if (n_from == 0 || n_from == t.labels.size()) {
    throw DataError("factor " + ds.schema().factor(t.factor).name + " needs samples of both " + from + " and " + to);
  }
  return t;
}

int run_traverse(const TraverseArgs& a) {
  Config cfg;
  cfg.set("command", a.guided ? "traverse --guided" : "traverse");
  std::optional<Seed> seed;
  if (a.guided) {
    seed = seed_of(a.c);
    cfg.set("seed", seed->value);
  }
  const auto ds = load_input(a.c, cfg);
  const std::size_t row = row_index(ds, a.id);
  cfg.set("id", a.id);

  if (a.guided) {
    const auto task = binary_task(ds, a.factor, a.from, a.to);
    cfg.set("factor", ds.schema().factor(task.factor).name);
    cfg.set("from", a.from);
    cfg.set("to", a.to);
    cfg.set("max_depth", a.max_depth);
    cfg.set("min_samples_leaf", a.min_samples_leaf);
    cfg.set("out", a.c.out);
    cfg.print();
    const GuidedTraverser traverser(ds.vectors().select_rows(task.rows), task.labels,
                                    TreeParams{a.max_depth, a.min_samples_leaf, 0}, *seed);
    const auto edit = traverser.traverse(ds.vector(row), task.from, task.to);
    write_text_file(a.c.out, render_edit_log(edit));
    return 0;
  }

  const auto format = resolve_format(a.c, {"json", "csv"});
  auto plan = default_traversal_plan(ds, ds.vector(row));
  plan.steps = a.steps;
  if (!a.dims.empty()) {
    plan.active.assign(ds.dim(), false);
    for (auto d : a.dims) {
      if (d >= ds.dim()) throw InvalidArgument("--dims entry " + std::to_string(d) + " is out of range");
      plan.active[d] = true;
    }
  }
  cfg.set("steps", plan.steps);
  cfg.set("range", "mean +- 2 std");
  cfg.set("out", a.c.out);
  cfg.set("format", format);
  cfg.print();

  const auto result = run_traversal(plan);
  if (format == "csv") {
    std::vector<std::pair<std::string, Vector>> rows;
    for (const auto& t : result) {
      for (std::size_t s = 0; s < t.vectors.size(); ++s) {
        rows.emplace_back(std::to_string(t.dim) + "," + std::to_string(s) + "," + csv_number(t.values[s]),
                          t.vectors[s]);
      }
    }
    write_text_file(a.c.out, vectors_csv(rows, "dim,step,value"));
    return 0;
  }
  const Readout readout(ds);
  ordered_json j;
  cfg.echo(j);
  j["seed_vector"] = copy(ds.vector(row));
  j["seed_labels"] = readout.labels(ds.vector(row));
  auto dims = ordered_json::array();
  for (const auto& t : result) {
    ordered_json d;
    d["dim"] = t.dim;
    d["values"] = t.values;
    auto steps = ordered_json::array();
    for (const auto& z : t.vectors) {
      ordered_json s;
      s["vector"] = z;
      s["labels"] = readout.labels(z);
      steps.push_back(s);
    }
    d["steps"] = steps;
    dims.push_back(d);
  }
  j["traversals"] = dims;
  write_text_file(a.c.out, j.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------- interpolate

struct InterpolateArgs {
  Common c;
  std::int64_t from = 0;
  std::int64_t to = 1;
  double step = 0.1;
};

int run_interpolate(const InterpolateArgs& a) {
  Config cfg;
  cfg.set("command", "interpolate");
  const auto ds = load_input(a.c, cfg);
  const auto format = resolve_format(a.c, {"json", "csv"});
  const auto z1 = ds.vector(row_index(ds, a.from));
  const auto z2 = ds.vector(row_index(ds, a.to));
  cfg.set("from", a.from);
  cfg.set("to", a.to);
  cfg.set("step", a.step);
  cfg.set("out", a.c.out);
  cfg.set("format", format);
  cfg.print();

  const auto times = interpolation_times(a.step);
  const auto points = interpolate(z1, z2, a.step);
  if (format == "csv") {
    std::vector<std::pair<std::string, Vector>> rows;
    for (std::size_t i = 0; i < points.size(); ++i) rows.emplace_back(csv_number(times[i]), points[i]);
    write_text_file(a.c.out, vectors_csv(rows, "t"));
    return 0;
  }
  const Readout readout(ds);
  ordered_json j;
  cfg.echo(j);
  j["z1_labels"] = readout.labels(z1);
  j["z2_labels"] = readout.labels(z2);
  auto out = ordered_json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    ordered_json p;
    p["t"] = times[i];
    p["vector"] = points[i];
    p["labels"] = readout.labels(points[i]);
    out.push_back(p);
  }
  j["intermediates"] = out;
  write_text_file(a.c.out, j.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------- arith

struct ArithArgs {
  Common c;
  std::string factor;
  std::string value;
  std::string op = "all";
  std::size_t pairs = 200;
  std::size_t neighbors = 16;
  double radius = 0.1;
  std::size_t trials = 1000;
  std::size_t cluster_pairs = 1000;
};

int run_arith(const ArithArgs& a) {
  Config cfg;
  cfg.set("command", "arith");
  const Seed seed = seed_of(a.c);
  cfg.set("seed", seed.value);
  const auto ds = load_input(a.c, cfg);
  const auto format = resolve_format(a.c, {"json", "csv"});
  const std::size_t f = factor_of(ds, a.factor);
  const auto& factor = ds.schema().factor(f);
  const std::string value = a.value.empty() ? factor.values.at(0) : a.value;
  const auto v = static_cast<int>(ds.schema().value_index(f, value));
  std::vector<ArithOp> ops;
  if (a.op == "all") {
    ops = {ArithOp::kAdd, ArithOp::kSub, ArithOp::kHadamard};
  } else {
    ops = {parse_arith_op(a.op)};
  }
  cfg.set("factor", factor.name);
  cfg.set("value", value);
  cfg.set("op", a.op);
  cfg.set("pairs", a.pairs);
  cfg.set("neighbors", a.neighbors);
  cfg.set("radius", a.radius);
  cfg.set("trials", a.trials);
  cfg.set("cluster_pairs", a.cluster_pairs);
  cfg.set("out", a.c.out);
  cfg.set("format", format);
  cfg.print();

  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Label& l = ds.label(i, f);
    if (l.kind == LabelKind::kCategorical && l.value == v) members.push_back(i);
  }
  if (members.size() < 2) throw DataError("cluster " + factor.name + "=" + value + " has fewer than 2 samples");
  const Matrix cluster = ds.vectors().select_rows(members);

  const auto labeler = centroid_labeler(ds, true);
  // consistency pairs need both ends to carry the value under the labeler too
  std::vector<std::size_t> agreeing;
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (labeler.label_factor(cluster.row(k), f) == v) agreeing.push_back(k);
  }
  if (agreeing.size() < 2) {
    throw DataError("fewer than 2 members of " + factor.name + "=" + value + " are labeled " + value +
                    " by the centroid labeler");
  }
  Rng rng(derive(seed, 1));
  std::vector<VectorPair> pairs;
  pairs.reserve(a.pairs);
  for (std::size_t p = 0; p < a.pairs; ++p) {
    const auto ij = rng.sample_without_replacement(agreeing.size(), 2);
    pairs.emplace_back(copy(cluster.row(agreeing[ij[0]])), copy(cluster.row(agreeing[ij[1]])));
  }

  MetricReport report;
  cfg.echo(report);
  report.set_config("labeler", "nearest value centroid");
  report.set_config("neighborhood", "one random dim perturbed by N(0, radius^2) per neighbor");
  report.set("cluster_members", static_cast<double>(members.size()));
  report.set("labeler_agreeing_members", static_cast<double>(agreeing.size()));
  for (std::size_t k = 0; k < ops.size(); ++k) {
    const double r = consistency_ratio(pairs, ops[k], labeler, f, NeighborhoodOptions{a.neighbors, a.radius},
                                       derive(seed, 10 + static_cast<std::uint64_t>(ops[k])));
    report.set("consistency_" + to_string(ops[k]), r);
  }
  const auto size = cluster_size(cluster, a.cluster_pairs, derive(seed, 2));
  report.set("cluster_max_cos_dist", size.max_cos_dist);
  report.set("cluster_min_cos_dist", size.min_cos_dist);
  ConvexTestOptions convex;
  convex.trials = a.trials;
  convex.reference = v;
  report.set("convex_ratio", convex_combination_test(cluster, labeler, f, convex, derive(seed, 3)));
  save_report(report, a.c.out, report_format(format));
  return 0;
}

// ---------------------------------------------------------------- tree

struct TreeArgs {
  Common c;
  std::string factor;
  std::string from;
  std::string to;
  double test_fraction = 0.2;
  std::size_t max_depth = 0;
  std::size_t min_samples_leaf = 1;
  std::string tree_out;
};

std::string render_tree(const DecisionTree& tree, const FactorSchema& schema, std::size_t f) {
  ordered_json j;
  j["dim"] = tree.dim;
  auto classes = ordered_json::array();
  for (int c : tree.classes) classes.push_back(schema.factor(f).values.at(static_cast<std::size_t>(c)));
  j["classes"] = classes;
  auto nodes = ordered_json::array();
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    ordered_json node;
    node["id"] = i;
    node["samples"] = n.samples;
    node["gini"] = n.impurity;
    node["majority"] = classes[static_cast<std::size_t>(n.majority)];
    if (!n.is_leaf()) {
      node["dim"] = n.dim;
      node["threshold"] = n.threshold;
      node["yes"] = n.left;
      node["no"] = n.right;
    }
    nodes.push_back(node);
  }
  j["nodes"] = nodes;
  return j.dump(2) + "\n";
}

int run_tree(const TreeArgs& a) {
  Config cfg;
  cfg.set("command", "tree");
  const Seed seed = seed_of(a.c);
  cfg.set("seed", seed.value);
  const auto ds = load_input(a.c, cfg);
  const auto format = resolve_format(a.c, {"json", "csv"});
  const auto task = binary_task(ds, a.factor, a.from, a.to);
  cfg.set("factor", ds.schema().factor(task.factor).name);
  cfg.set("from", a.from);
  cfg.set("to", a.to);
  cfg.set("test_fraction", a.test_fraction);
  cfg.set("max_depth", a.max_depth);
  cfg.set("min_samples_leaf", a.min_samples_leaf);
  cfg.set("out", a.c.out);
  cfg.set("format", format);
  if (!a.tree_out.empty()) cfg.set("tree_out", a.tree_out);
  cfg.print();

  const TreeParams params{a.max_depth, a.min_samples_leaf, 0};
  const Matrix x = ds.vectors().select_rows(task.rows);
  const auto proxy = proxy_metrics(x, task.labels, derive(seed, 1), a.test_fraction, params);
  const auto tree = tree_fit(x, task.labels, params, derive(seed, 2));

  MetricReport report;
  cfg.echo(report);
  report.set_config("classifier_family", "cart_gini");
  report.set("separation", proxy.separation);
  report.set("density", proxy.density);
  report.set("samples", static_cast<double>(task.rows.size()));
  report.set("tree_depth", static_cast<double>(tree.depth()));
  report.set("tree_leaves", static_cast<double>(tree.leaves().size()));
  const auto path = tree_shortest_cross_path(tree, task.from, task.to);
  report.set("shortest_cross_path", static_cast<double>(path.size()));
  save_report(report, a.c.out, report_format(format));
  if (!a.tree_out.empty()) write_text_file(a.tree_out, render_tree(tree, ds.schema(), task.factor));
  return 0;
}

// ---------------------------------------------------------------- guided

struct GuidedArgs {
  Common c;
  std::string factor;
  std::string from;
  std::string to;
  std::size_t seeds = 100;
  std::size_t max_depth = 0;
  std::size_t min_samples_leaf = 1;
  std::string edits_out;
};

int run_guided(const GuidedArgs& a) {
  Config cfg;
  cfg.set("command", "guided");
  const Seed seed = seed_of(a.c);
  cfg.set("seed", seed.value);
  const auto ds = load_input(a.c, cfg);
  const auto format = resolve_format(a.c, {"json", "csv"});
  const auto task = binary_task(ds, a.factor, a.from, a.to);
  cfg.set("factor", ds.schema().factor(task.factor).name);
  cfg.set("from", a.from);
  cfg.set("to", a.to);
  cfg.set("seeds", a.seeds);
  cfg.set("max_depth", a.max_depth);
  cfg.set("min_samples_leaf", a.min_samples_leaf);
  cfg.set("out", a.c.out);
  cfg.set("format", format);
  if (!a.edits_out.empty()) cfg.set("edits_out", a.edits_out);
  cfg.print();

  const GuidedTraverser traverser(ds.vectors().select_rows(task.rows), task.labels,
                                  TreeParams{a.max_depth, a.min_samples_leaf, 0}, derive(seed, 1));
  std::vector<std::size_t> from_rows;
  for (std::size_t k = 0; k < task.rows.size(); ++k) {
    if (task.labels[k] == task.from) from_rows.push_back(task.rows[k]);
  }
  Rng rng(derive(seed, 2));
  const std::size_t n = std::min(a.seeds, from_rows.size());
  auto pick = rng.sample_without_replacement(from_rows.size(), n);
  std::sort(pick.begin(), pick.end());
  std::vector<std::size_t> seed_rows;
  for (auto p : pick) seed_rows.push_back(from_rows[p]);
  const Matrix seeds = ds.vectors().select_rows(seed_rows);
  const auto labeler = centroid_labeler(ds, true);
  const auto result = flip_ratio(traverser, seeds, task.from, task.to, labeler, task.factor);

  MetricReport report;
  cfg.echo(report);
  report.set_config("interpretation", "enforce-target-path");
  report.set_config("labeler", "nearest value centroid");
  report.set_config("reference_flip_ratio", "0.71 on a trained sentence VAE; not reproducible with synthetic latents");
  report.set("flip_ratio", result.ratio);
  report.set("seeds", static_cast<double>(result.seeds));
  report.set("failures", static_cast<double>(result.failures));
  const double ok = static_cast<double>(result.seeds - result.failures);
  report.set("tree_postcondition", ok > 0 ? static_cast<double>(result.tree_hits) / ok : 0.0);
  double edits = 0.0;
  for (const auto& e : result.edits) edits += static_cast<double>(e.edits.size());
  report.set("mean_edits", ok > 0 ? edits / ok : 0.0);
  report.set("tree_depth", static_cast<double>(traverser.tree().depth()));
  save_report(report, a.c.out, report_format(format));
  if (!a.edits_out.empty()) {
    std::string text;
    for (std::size_t i = 0; i < result.edits.size(); ++i) {
      if (result.edits[i].final.empty()) continue;
      text += render_edit_log(result.edits[i]);
    }
    write_text_file(a.edits_out, text);
  }
  return 0;
}

// ---------------------------------------------------------------- train-vae

struct TrainArgs {
  Common c;
  std::size_t hidden = 16;
  std::size_t latent = 32;
  double lambda = 0.05;
  std::size_t cycle = 200;
  double ramp = 0.5;
  double lr = 0.05;
  std::size_t epochs = 20;
  std::size_t batch = 32;
  std::optional<double> beta;
  std::string trace;
  std::string latents;
};

int run_train(const TrainArgs& a) {
  Config cfg;
  cfg.set("command", "train-vae");
  TrainConfig tc;
  tc.seed = seed_of(a.c);
  cfg.set("seed", tc.seed.value);
  const auto ds = load_input(a.c, cfg);
  tc.lambda = a.lambda;
  tc.cycle_length = a.cycle;
  tc.ramp_fraction = a.ramp;
  tc.learning_rate = a.lr;
  tc.epochs = a.epochs;
  tc.batch_size = a.batch;
  tc.fixed_beta = a.beta;
  tc.validate();
  const auto trace = a.trace.empty() ? a.c.out + ".trace.csv" : a.trace;
  cfg.set("hidden", a.hidden);
  cfg.set("latent", a.latent);
  cfg.set("lambda", tc.lambda);
  cfg.set("cycle", tc.cycle_length);
  cfg.set("ramp", tc.ramp_fraction);
  cfg.set("lr", tc.learning_rate);
  cfg.set("epochs", tc.epochs);
  cfg.set("batch", tc.batch_size);
  cfg.set("beta", a.beta ? std::to_string(*a.beta) : std::string("cyclical"));
  cfg.set("out", a.c.out);
  cfg.set("trace", trace);
  if (!a.latents.empty()) cfg.set("latents", a.latents);
  cfg.print();

  const auto samples = cvae_samples(ds);
  const auto model = CvaeModel::init(cvae_shape(ds.schema(), a.hidden, a.latent), derive(tc.seed, 0));
  const auto result = train(model, samples, tc);
  write_text_file(a.c.out, render_checkpoint(result.model, tc));
  write_text_file(trace, render_loss_trace(result.trace));
  if (!a.latents.empty()) {
    // Posterior means, for probing the learned space with the other commands.
    Matrix mu(ds.size(), a.latent);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto q = encode(result.model, multi_hot(result.model.shape, samples[i].targets), samples[i].r);
      std::copy(q.mu.begin(), q.mu.end(), mu.row(i).begin());
    }
    save_dataset(ds.with_vectors(std::move(mu)), a.latents);
  }
  return 0;
}

// ---------------------------------------------------------------- project

struct ProjectArgs {
  Common c;
  std::string factor;
};

int run_project(const ProjectArgs& a) {
  Config cfg;
  cfg.set("command", "project");
  const auto ds = load_input(a.c, cfg);
  const auto format = resolve_format(a.c, {"svg", "csv"});
  const std::size_t f = factor_of(ds, a.factor);
  cfg.set("factor", ds.schema().factor(f).name);
  cfg.set("method", "pca");
  cfg.set("out", a.c.out);
  cfg.set("format", format);
  cfg.print();

  const auto pca = pca_project(ds.vectors(), 2);
  const auto classes = populated_classes(ds, f);
  const auto& factor = ds.schema().factor(f);
  std::vector<std::string> names;
  bool categorical = false;
  for (std::size_t i = 0; i < ds.size() && !categorical; ++i) {
    categorical = ds.label(i, f).kind == LabelKind::kCategorical;
  }
  for (int c : classes) {
    names.push_back(categorical && static_cast<std::size_t>(c) < factor.values.size()
                        ? factor.values[static_cast<std::size_t>(c)]
                        : std::to_string(c));
  }
  std::vector<int> cluster(ds.size(), static_cast<int>(classes.size()));
  bool missing = false;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto c = ds.class_of(i, f);
    if (!c) {
      missing = true;
      continue;
    }
    cluster[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), *c) - classes.begin());
  }
  if (missing) names.push_back("unannotated");
  const std::string text = format == "svg" ? render_scatter_svg(pca.projected, cluster, names)
                                           : render_scatter_csv(pca.projected, ds.ids(), cluster);
  write_text_file(a.c.out, text);
  return 0;
}

void print_error(const std::string& kind, const std::string& message) {
  std::string flat = message;
  for (auto& ch : flat) {
    if (ch == '\n') ch = ' ';
  }
  std::cerr << "error: " << kind << ": " << flat << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probe labeled latent spaces: metrics, traversal, arithmetic, guided edits, toy CVAE."};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", "lgw 0.1.0");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic labeled latent dataset");
  add_seed(s, synth.c, true);
  s->add_option("--out", synth.c.out, "dataset file (.jsonl or .csv)")->required();
  s->add_option("--format", synth.c.format, "dataset format")->check(CLI::IsMember({"jsonl", "csv"}));
  s->add_option("--schema", synth.c.schema, "schema JSON (overrides --factors/--values)");
  s->add_option("--factors", synth.factors, "number of factors");
  s->add_option("--values", synth.values, "values per factor");
  s->add_option("--dim", synth.dim, "latent dimension");
  s->add_option("--samples", synth.samples, "number of samples");
  s->add_option("--noise", synth.noise, "noise std");
  s->add_option("--layout", synth.layout, "layout")
      ->check(CLI::IsMember({"disentangled", "rotated", "duplicated", "shuffled_labels", "cones"}));
  s->add_option("--cone-radius", synth.cone_radius, "direction length for the cones layout");
  s->add_option("--truth", synth.truth, "ground-truth sidecar (default: <out>.truth.json)");

  MetricsArgs metrics;
  auto* m = app.add_subcommand("metrics", "Disentanglement metrics report");
  add_input(m, metrics.c);
  add_seed(m, metrics.c, true);
  add_out(m, metrics.c, {"json", "csv"});
  m->add_option("--bins", metrics.bins, "histogram bins per dimension")->check(CLI::PositiveNumber);
  m->add_option("--test-fraction", metrics.test_fraction, "held-out fraction")->check(CLI::Range(0.0, 1.0));
  m->add_option("--only", metrics.only, "metrics to run")->check(CLI::IsMember(metric_names()));
  m->add_flag("--raw-variance", metrics.raw_variance, "modularity on unnormalized MI");
  m->add_flag("--normalized-mig", metrics.normalized_mig, "report MIG divided by factor entropy");
  m->add_option("--trees", metrics.trees, "trees per DCI forest")->check(CLI::PositiveNumber);
  m->add_option("--split-candidates", metrics.split_candidates, "DCI split candidates: all, sqrt or a count");
  m->add_option("--repeats", metrics.repeats, "z_min_var votes per factor")->check(CLI::PositiveNumber);
  m->add_option("--var-samples", metrics.var_samples, "samples per z_min_var vote")->check(CLI::PositiveNumber);
  m->add_option("--batch", metrics.batch, "pairs per z_diff point")->check(CLI::PositiveNumber);

  TraverseArgs traverse;
  auto* t = app.add_subcommand("traverse", "Single-dimension traversal, or guided edits with --guided");
  add_input(t, traverse.c);
  add_seed(t, traverse.c, false);
  add_out(t, traverse.c, {"json", "csv"});
  t->add_option("--id", traverse.id, "sample id of the seed vector");
  t->add_option("--steps", traverse.steps, "values per dimension")->check(CLI::PositiveNumber);
  t->add_option("--dims", traverse.dims, "dimensions to traverse (default: all)");
  t->add_flag("--guided", traverse.guided, "walk the seed onto a --to leaf of a fitted tree (needs --seed)");
  t->add_option("--factor", traverse.factor, "factor for --guided (default: first)");
  t->add_option("--from", traverse.from, "source value for --guided");
  t->add_option("--to", traverse.to, "target value for --guided");
  t->add_option("--max-depth", traverse.max_depth, "tree depth limit, 0 = unlimited");
  t->add_option("--min-samples-leaf", traverse.min_samples_leaf, "tree leaf size")->check(CLI::PositiveNumber);

  InterpolateArgs interp;
  auto* i = app.add_subcommand("interpolate", "Linear interpolation between two samples");
  add_input(i, interp.c);
  add_out(i, interp.c, {"json", "csv"});
  i->add_option("--from", interp.from, "sample id of z1");
  i->add_option("--to", interp.to, "sample id of z2");
  i->add_option("--step", interp.step, "t increment")->check(CLI::Range(1e-6, 1.0));

  ArithArgs arith;
  auto* ar = app.add_subcommand("arith", "Vector arithmetic consistency inside one factor value");
  add_input(ar, arith.c);
  add_seed(ar, arith.c, true);
  add_out(ar, arith.c, {"json", "csv"});
  ar->add_option("--factor", arith.factor, "factor (default: first)");
  ar->add_option("--value", arith.value, "value defining the cluster (default: first)");
  ar->add_option("--op", arith.op, "operation")->check(CLI::IsMember({"all", "add", "sub", "hadamard"}));
  ar->add_option("--pairs", arith.pairs, "pairs drawn from the cluster")->check(CLI::PositiveNumber);
  ar->add_option("--neighbors", arith.neighbors, "neighborhood samples per result")->check(CLI::PositiveNumber);
  ar->add_option("--radius", arith.radius, "neighborhood perturbation std");
  ar->add_option("--trials", arith.trials, "convex combination trials")->check(CLI::PositiveNumber);
  ar->add_option("--cluster-pairs", arith.cluster_pairs, "pairs sampled for cluster size")->check(CLI::PositiveNumber);

  TreeArgs tree;
  auto* tr = app.add_subcommand("tree", "Decision tree between two values of a factor, with proxy metrics");
  add_input(tr, tree.c);
  add_seed(tr, tree.c, true);
  add_out(tr, tree.c, {"json", "csv"});
  tr->add_option("--factor", tree.factor, "factor (default: first)");
  tr->add_option("--from", tree.from, "first value")->required();
  tr->add_option("--to", tree.to, "second value")->required();
  tr->add_option("--test-fraction", tree.test_fraction, "held-out fraction")->check(CLI::Range(0.0, 1.0));
  tr->add_option("--max-depth", tree.max_depth, "depth limit, 0 = unlimited");
  tr->add_option("--min-samples-leaf", tree.min_samples_leaf, "leaf size")->check(CLI::PositiveNumber);
  tr->add_option("--tree-out", tree.tree_out, "write the fitted tree as JSON");

  GuidedArgs guided;
  auto* g = app.add_subcommand("guided", "Guided traversal flip ratio over many seeds");
  add_input(g, guided.c);
  add_seed(g, guided.c, true);
  add_out(g, guided.c, {"json", "csv"});
  g->add_option("--factor", guided.factor, "factor (default: first)");
  g->add_option("--from", guided.from, "source value")->required();
  g->add_option("--to", guided.to, "target value")->required();
  g->add_option("--seeds", guided.seeds, "seed vectors drawn from the source value")->check(CLI::PositiveNumber);
  g->add_option("--max-depth", guided.max_depth, "tree depth limit, 0 = unlimited");
  g->add_option("--min-samples-leaf", guided.min_samples_leaf, "tree leaf size")->check(CLI::PositiveNumber);
  g->add_option("--edits-out", guided.edits_out, "edit logs (JSONL) for every seed");

  TrainArgs trn;
  auto* v = app.add_subcommand("train-vae", "Train the toy conditional VAE on factor annotations");
  add_input(v, trn.c);
  add_seed(v, trn.c, true);
  v->add_option("--out", trn.c.out, "checkpoint JSON")->required();
  v->add_option("--hidden", trn.hidden, "encoder hidden units")->check(CLI::PositiveNumber);
  v->add_option("--latent", trn.latent, "latent dimension")->check(CLI::PositiveNumber);
  v->add_option("--lambda", trn.lambda, "KL floor per dimension (nats)");
  v->add_option("--cycle", trn.cycle, "beta cycle length in steps");
  v->add_option("--ramp", trn.ramp, "fraction of a cycle spent ramping beta");
  v->add_option("--lr", trn.lr, "learning rate");
  v->add_option("--epochs", trn.epochs, "epochs");
  v->add_option("--batch", trn.batch, "batch size")->check(CLI::PositiveNumber);
  v->add_option("--beta", trn.beta, "fixed beta instead of the cyclical schedule")->check(CLI::Range(0.0, 1.0));
  v->add_option("--trace", trn.trace, "loss trace CSV (default: <out>.trace.csv)");
  v->add_option("--latents", trn.latents, "write posterior means as a dataset");

  ProjectArgs project;
  auto* p = app.add_subcommand("project", "2-D PCA scatter colored by a factor");
  add_input(p, project.c);
  add_out(p, project.c, {"svg", "csv"});
  p->add_option("--factor", project.factor, "coloring factor (default: first)");

  CLI::App* active = nullptr;
  try {
    app.parse(argc, argv);
    for (auto* sub : app.get_subcommands()) active = sub;
    if (s->parsed()) return run_synth(synth);
    if (m->parsed()) return run_metrics(metrics);
    if (t->parsed()) return run_traverse(traverse);
    if (i->parsed()) return run_interpolate(interp);
    if (ar->parsed()) return run_arith(arith);
    if (tr->parsed()) return run_tree(tree);
    if (g->parsed()) return run_guided(guided);
    if (v->parsed()) return run_train(trn);
    if (p->parsed()) return run_project(project);
    return 1;
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    std::cout << (subs.empty() ? app.help() : subs.back()->help());
    return 0;
  } catch (const CLI::CallForVersion& e) {
    std::cout << e.what() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.back()->help());
    return 1;
  } catch (const UsageError& e) {
    print_error("usage", e.what());
    std::cerr << (active ? active->help() : app.help());
    return 1;
  } catch (const NumericalError& e) {
    print_error("numerical", e.what());
    return 3;
  } catch (const SchemaError& e) {
    print_error("schema", e.what());
    return 2;
  } catch (const DataError& e) {
    print_error("data", e.what());
    return 2;
  } catch (const Error& e) {
    print_error("invalid", e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error("data", e.what());
    return 2;
  }
}
