// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "lgw/cvae.hpp"
#include "lgw/geometry.hpp"
#include "lgw/guided.hpp"
#include "lgw/ingest.hpp"
#include "lgw/metrics.hpp"
#include "lgw/synth.hpp"

using namespace lgw;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

SynthData synth(Layout layout, std::size_t factors, std::size_t values, std::size_t dim, std::size_t n,
                double noise, std::uint64_t seed) {
  SynthSpec s;
  s.schema = make_schema(factors, values);
  s.dim = dim;
  s.samples = n;
  s.noise_std = noise;
  s.layout = layout;
  s.seed = Seed{seed};
  return generate(s);
}

std::vector<int> factor_classes(const LatentDataset& ds, std::size_t f) {
  std::vector<int> y(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) y[i] = ds.class_of(i, f).value();
  return y;
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Criterion 1
void metric_contrast(Outcome& o) {
  setenv("LGW_THREADS", "1", 1);
  const auto t0 = std::chrono::steady_clock::now();
  const auto dis = synth(Layout::kDisentangled, 4, 4, 32, 2000, 0.1, 1);
  const auto rot = synth(Layout::kRotated, 4, 4, 32, 2000, 0.1, 1);
  MetricsConfig cfg;
  cfg.selected = {"mig", "modularity", "dci", "informativeness"};
  const auto a = run_all_metrics(dis.dataset, cfg, Seed{1});
  const auto b = run_all_metrics(rot.dataset, cfg, Seed{1});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  unsetenv("LGW_THREADS");
  o.detail << "disentangled MIG=" << a.at("mig") << " modularity=" << a.at("modularity")
           << " D=" << a.at("disentanglement") << " inf_err=" << a.at("informativeness_error")
           << "; rotated MIG=" << b.at("mig") << " D=" << b.at("disentanglement")
           << " inf_err=" << b.at("informativeness_error") << "; " << secs << "s single-threaded ";
  o.require(a.at("mig") >= 0.8, "MIG >= 0.8");
  o.require(a.at("modularity") >= 0.9, "modularity >= 0.9");
  o.require(a.at("disentanglement") >= 0.9, "D >= 0.9");
  o.require(b.at("mig") <= 0.2, "rotated MIG <= 0.2");
  o.require(b.at("disentanglement") <= 0.5, "rotated D <= 0.5");
  o.require(a.at("informativeness_error") <= 0.05, "informativeness error <= 0.05");
  o.require(b.at("informativeness_error") <= 0.05, "rotated informativeness error <= 0.05");
  o.require(secs <= 60.0, "runtime <= 60 s");
}

// Criterion 2
void zdiff_zminvar(Outcome& o) {
  const auto dis = synth(Layout::kDisentangled, 4, 4, 32, 2000, 0.1, 1);
  const auto [tr, te] = split_indices(2000, 0.2, Seed{1});
  const double zd = z_diff_accuracy(dis.dataset, tr, te, {}, Seed{1}).accuracy;
  const double zm = z_min_var_score(dis.dataset, tr, te, {}, Seed{1}).score;
  o.detail << "disentangled z_diff=" << zd << "% z_min_var=" << zm << "; shuffled (chance 0.25):";
  o.require(zd >= 95.0, "z_diff >= 95");
  o.require(zm >= 0.9, "z_min_var >= 0.9");
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto sh = synth(Layout::kShuffledLabels, 4, 4, 32, 2000, 0.1, s);
    const auto [a, b] = split_indices(2000, 0.2, Seed{s});
    const double d = z_diff_accuracy(sh.dataset, a, b, {}, Seed{s}).accuracy / 100.0;
    const double m = z_min_var_score(sh.dataset, a, b, {}, Seed{s}).score;
    o.detail << " seed" << s << " z_diff=" << d << " z_min_var=" << m;
    o.require(std::abs(d - 0.25) <= 0.15, "shuffled z_diff within 0.15 of chance, seed " + std::to_string(s));
    o.require(std::abs(m - 0.25) <= 0.15, "shuffled z_min_var within 0.15 of chance, seed " + std::to_string(s));
  }
}

// Criterion 3
void guided_flip(Outcome& o, const fs::path& dir) {
  const auto data = synth(Layout::kDisentangled, 1, 2, 8, 400, 1.0, 1);
  const auto& ds = data.dataset;
  const auto y = factor_classes(ds, 0);
  const GuidedTraverser g(ds.vectors(), y, {}, Seed{2});
  Matrix seeds(0, ds.dim());
  for (std::size_t i = 0; i < ds.size() && seeds.rows() < 100; ++i)
    if (y[i] == 0) seeds.append_row(ds.vector(i));
  const auto labeler = centroid_labeler(ds);
  const auto r = flip_ratio(g, seeds, 0, 1, labeler, 0);
  const std::size_t ok = r.seeds - r.failures;
  o.detail << "flip_ratio=" << r.ratio << " over " << r.seeds << " seeds; tree postcondition " << r.tree_hits << "/"
           << ok << "; ";
  o.require(r.seeds == 100, "100 seeds");
  o.require(r.ratio >= 0.9, "flip_ratio >= 0.9");
  o.require(ok > 0 && r.tree_hits == ok, "postcondition on every successful edit");

  // the CLI report carries the trained-model reference
  save_jsonl(ds, dir / "two.jsonl");
  const auto report = dir / "guided.json";
  const int code = shell(std::string(LGW_CLI) + " guided --input " + (dir / "two.jsonl").string() +
                         " --seed 2 --from v0 --to v1 --out " + report.string() + " >/dev/null 2>&1");
  const auto rep = load_report(report, ReportFormat::kJson);
  const bool has_ref = rep.config("reference_flip_ratio").has_value();
  o.detail << "CLI flip_ratio=" << rep.get("flip_ratio").value_or(-1.0)
           << (has_ref ? ", reference 0.71 recorded" : "");
  o.require(code == 0, "guided CLI exit 0");
  o.require(has_ref, "reference ratio recorded in the report");
}

// Criterion 4
void interpolation_contract(Outcome& o) {
  Rng rng(Seed{4});
  std::vector<double> z1(32), z2(32);
  for (auto& v : z1) v = rng.normal();
  for (auto& v : z2) v = rng.normal();
  const auto path = interpolate(z1, z2, 0.1);
  double worst = 0.0;
  for (std::size_t k = 0; k < path.size(); ++k) {
    const double t = 0.1 * static_cast<double>(k + 1);
    for (std::size_t d = 0; d < 32; ++d) worst = std::max(worst, std::abs(path[k][d] - ((1 - t) * z1[d] + t * z2[d])));
  }
  o.detail << path.size() << " intermediates, max deviation " << worst << "; ";
  o.require(path.size() == 9, "9 intermediates");
  o.require(worst <= 1e-12, "affine formula within 1e-12");

  const auto data = synth(Layout::kDisentangled, 2, 3, 8, 600, 0.1, 4);
  const auto y = factor_classes(data.dataset, 0);
  const auto tree = tree_fit(data.dataset.vectors(), y, {}, Seed{1});
  std::size_t best = 0, best_n = 0;
  for (auto leaf : tree.leaves())
    if (tree.nodes[leaf].samples > best_n) best = leaf, best_n = tree.nodes[leaf].samples;
  Matrix cell(0, data.dataset.dim());
  for (std::size_t i = 0; i < data.dataset.size(); ++i)
    if (tree.leaf_of(data.dataset.vector(i)) == best) cell.append_row(data.dataset.vector(i));
  ConvexTestOptions opts;
  opts.trials = 1000;
  opts.reference = tree.majority_class(best);
  const double frac = convex_combination_test(cell, tree, opts, Seed{5});
  o.detail << "same-leaf convex fraction " << frac << " over " << cell.rows() << " members";
  o.require(cell.rows() >= 2, "leaf with two members");
  o.require(frac == 1.0, "same-leaf combinations 100%");
}

// Criterion 5
void arithmetic_direction(Outcome& o) {
  const auto data = synth(Layout::kCones, 3, 4, 32, 1000, 0.1, 1);
  const auto& ds = data.dataset;
  const auto labeler = centroid_labeler(ds);
  Rng rng(Seed{7});
  std::vector<VectorPair> pairs;
  while (pairs.size() < 200) {
    const std::size_t i = rng.index(ds.size()), j = rng.index(ds.size());
    if (i == j || ds.class_of(i, 0) != ds.class_of(j, 0)) continue;
    pairs.push_back({Vector(ds.vector(i).begin(), ds.vector(i).end()), Vector(ds.vector(j).begin(), ds.vector(j).end())});
  }
  const double add = consistency_ratio(pairs, ArithOp::kAdd, labeler, 0, {}, Seed{3});
  const double sub = consistency_ratio(pairs, ArithOp::kSub, labeler, 0, {}, Seed{3});
  o.detail << "add=" << add << " sub=" << sub << " difference " << add - sub;
  o.require(add - sub >= 0.2, "add exceeds sub by >= 0.2");
}

// Criterion 6
void cvae_numerics(Outcome& o) {
  CvaeShape sh;
  sh.groups = {3, 2};
  sh.r_dim = 2;
  sh.hidden = 4;
  sh.latent = 3;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto m = CvaeModel::init(sh, Seed{s}, 0.5);
    Rng r(derive(Seed{s}, 9));
    std::vector<CvaeSample> batch(4);
    for (auto& x : batch) {
      x.targets = {static_cast<int>(r.index(3)), static_cast<int>(r.index(2))};
      x.r = {1.0, static_cast<double>(r.index(2))};
    }
    TrainConfig c;
    c.lambda = 0.01;
    c.fixed_beta = 0.7;
    CvaeModel g;
    cvae_loss_grad(m, batch, c, 3, Seed{5}, g);
    auto pt = m.tensors();
    auto gt = g.tensors();
    for (std::size_t t = 0; t < pt.size(); ++t) {
      auto p = pt[t].second->data();
      auto gg = gt[t].second->data();
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = p[i], h = 1e-5;
        p[i] = orig + h;
        const double up = cvae_loss(m, batch, c, 3, Seed{5}).total;
        p[i] = orig - h;
        const double down = cvae_loss(m, batch, c, 3, Seed{5}).total;
        p[i] = orig;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(fd - gg[i]) / std::max(1e-6, std::max(std::abs(fd), std::abs(gg[i]))));
      }
    }
  }
  o.detail << "max FD relative error " << worst << "; ";
  o.require(worst <= 1e-4, "gradients within 1e-4");

  const auto m = CvaeModel::init(sh, Seed{1}, 0.5);
  std::vector<CvaeSample> batch{{{0, 1}, {1.0, 0.0}}, {{2, 0}, {1.0, 1.0}}};
  TrainConfig c;
  c.fixed_beta = 0.6;
  c.lambda = 1e3;
  const auto l = cvae_loss(m, batch, c, 0, Seed{1});
  const bool all_below = std::all_of(l.kl_per_dim.begin(), l.kl_per_dim.end(), [&](double k) { return k < c.lambda; });
  const double kl_term = l.total - l.recon;
  o.detail << "floored KL term " << l.beta * l.kl_thresholded << " vs beta*lambda*N " << 0.6 * 1e3 * 3 << "; ";
  o.require(all_below && l.beta * l.kl_thresholded == 0.6 * 1e3 * 3, "KL floor equals beta*lambda*N");
  o.require(std::abs(kl_term - 1800.0) <= 1e-9, "total minus recon equals the floor");

  TrainConfig sched;
  sched.cycle_length = 200;
  sched.ramp_fraction = 0.5;
  const bool beta_ok = beta_at(sched, 0) == 0.0 && beta_at(sched, 200) == 0.0 && beta_at(sched, 100) == 1.0;
  o.detail << "beta(0)=" << beta_at(sched, 0) << " beta(cycle)=" << beta_at(sched, 200)
           << " beta(ramp end)=" << beta_at(sched, 100) << "; ";
  o.require(beta_ok, "beta schedule endpoints");

  Rng rng(Seed{2});
  double kl_worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double mq = rng.normal(), lq = rng.uniform(-1, 0.5), mp = rng.normal(), lp = rng.uniform(-1, 0.5);
    const double sq = std::exp(lq), sp = std::exp(lp);
    const int n = 20000;
    const double lo = mq - 12 * sq, hi = mq + 12 * sq, h = (hi - lo) / n;
    double integral = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double x = lo + i * h;
      const double logq = -0.5 * std::pow((x - mq) / sq, 2) - lq - 0.5 * std::log(2 * M_PI);
      const double logp = -0.5 * std::pow((x - mp) / sp, 2) - lp - 0.5 * std::log(2 * M_PI);
      integral += ((i == 0 || i == n) ? 0.5 : 1.0) * std::exp(logq) * (logq - logp) * h;
    }
    const auto kl = kl_diag_gaussians(std::vector<double>{mq}, std::vector<double>{lq}, std::vector<double>{mp},
                                      std::vector<double>{lp});
    kl_worst = std::max(kl_worst, std::abs(kl[0] - integral));
  }
  o.detail << "KL vs integration max gap " << kl_worst;
  o.require(kl_worst <= 1e-6, "KL closed form within 1e-6");
}

// Criterion 7
void attention_shapes(Outcome& o) {
  Rng rng(Seed{8});
  Matrix q(5, 64), k(5, 64), v(5, 64);
  for (auto* m : {&q, &k, &v})
    for (auto& x : m->data()) x = rng.normal();
  std::vector<double> z(64);
  for (auto& x : z) x = rng.normal();
  const auto r = inject_latent_attention(q, k, v, z);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.weights.rows(); ++i) {
    const auto row = r.weights.row(i);
    worst = std::max(worst, std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0));
  }
  o.detail << "K,V rows " << r.keys.rows() << "," << r.values.rows() << "; output " << r.output.rows() << "x"
           << r.output.cols() << "; max row-sum error " << worst;
  o.require(r.keys.rows() == 6 && r.values.rows() == 6, "augmented K,V have 6 rows");
  o.require(r.output.rows() == 5 && r.output.cols() == 64, "output 5x64");
  o.require(worst <= 1e-12, "softmax rows sum to 1");
}

// Criterion 8
void cli_determinism(Outcome& o, const fs::path& dir) {
  const std::string cli = LGW_CLI;
  const auto p = [&](const std::string& name) { return (dir / name).string(); };
  struct Command {
    std::string args;
    std::vector<std::string> outputs;
  };
  const std::string in = " --input " + p("data.jsonl");
  const std::vector<Command> commands = {
      {"synth --seed 3 --factors 3 --values 3 --dim 8 --samples 400 --out " + p("data.jsonl"),
       {"data.jsonl", "data.jsonl.truth.json"}},
      {"synth --seed 3 --factors 3 --values 3 --dim 8 --samples 400 --format csv --out " + p("data.csv"),
       {"data.csv", "data.csv.truth.json"}},
      {"metrics" + in + " --seed 1 --trees 16 --out " + p("metrics.json"), {"metrics.json"}},
      {"metrics" + in + " --seed 1 --trees 16 --out " + p("metrics.csv"), {"metrics.csv"}},
      {"traverse" + in + " --id 5 --out " + p("traverse.json"), {"traverse.json"}},
      {"traverse" + in + " --guided --seed 2 --id 5 --from v0 --to v2 --out " + p("edits.jsonl"), {"edits.jsonl"}},
      {"interpolate" + in + " --from 1 --to 2 --out " + p("interp.csv"), {"interp.csv"}},
      {"arith" + in + " --seed 4 --pairs 50 --trials 200 --out " + p("arith.json"), {"arith.json"}},
      {"tree" + in + " --seed 5 --from v0 --to v1 --out " + p("tree.json") + " --tree-out " + p("tree_model.json"),
       {"tree.json", "tree_model.json"}},
      {"guided" + in + " --seed 6 --from v0 --to v1 --seeds 40 --out " + p("guided.json") + " --edits-out " +
           p("guided_edits.jsonl"),
       {"guided.json", "guided_edits.jsonl"}},
      {"train-vae" + in + " --seed 7 --epochs 3 --latent 4 --hidden 6 --out " + p("vae.json") + " --latents " +
           p("vae_latents.jsonl"),
       {"vae.json", "vae.json.trace.csv", "vae_latents.jsonl"}},
      {"project" + in + " --out " + p("plot.svg"), {"plot.svg"}},
      {"project" + in + " --out " + p("plot.csv"), {"plot.csv"}},
  };
  std::size_t files = 0, mismatches = 0, failures = 0;
  for (const auto& cmd : commands) {
    std::vector<std::vector<std::string>> hashes;
    for (const char* threads : {"1", "4", "4"}) {
      const int code = shell("LGW_THREADS=" + std::string(threads) + " " + cli + " " + cmd.args + " >/dev/null 2>&1");
      if (code != 0) {
        ++failures;
        o.detail << "[exit " << code << ": " << cmd.args.substr(0, cmd.args.find(' ')) << "] ";
      }
      std::vector<std::string> h;
      for (const auto& f : cmd.outputs) h.push_back(fs::exists(dir / f) ? content_hash(dir / f) : "missing");
      hashes.push_back(h);
    }
    files += cmd.outputs.size();
    for (std::size_t f = 0; f < cmd.outputs.size(); ++f) {
      if (hashes[0][f] == "missing" || hashes[0][f] != hashes[1][f] || hashes[1][f] != hashes[2][f]) {
        ++mismatches;
        o.detail << "[differs: " << cmd.outputs[f] << "] ";
      }
    }
  }
  o.detail << commands.size() << " invocations, " << files << " output files hashed under LGW_THREADS=1,4,4";
  o.require(failures == 0, "every command exits 0");
  o.require(mismatches == 0, "identical hashes");
}

// Criterion 9
void proxy_plumbing(Outcome& o) {
  const auto data = synth(Layout::kDisentangled, 1, 2, 8, 400, 0.05, 9);
  const auto y = factor_classes(data.dataset, 0);
  const auto r = proxy_metrics(data.dataset.vectors(), y, Seed{1});
  o.detail << "separation=" << r.separation << " density=" << r.density;
  o.require(r.separation == 1.0, "separation 1.0");
  o.require(r.density == 1.0, "density 1.0");
}

}  // namespace

int main() {
  const fs::path dir = fs::current_path() / "scratch" / "acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"metric oracle contrast", metric_contrast},
      {"z_diff / z_min_var sanity", zdiff_zminvar},
      {"guided traversal flip ratio", [&](Outcome& o) { guided_flip(o, dir); }},
      {"interpolation contract", interpolation_contract},
      {"arithmetic consistency direction", arithmetic_direction},
      {"cvae numerics", cvae_numerics},
      {"attention injection shapes", attention_shapes},
      {"cli determinism", [&](Outcome& o) { cli_determinism(o, dir); }},
      {"proxy metrics plumbing", proxy_plumbing},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    o.detail.precision(4);
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[threw: " << e.what() << "]";
    }
    std::printf("criterion %zu %s: %s  %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.str().c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
