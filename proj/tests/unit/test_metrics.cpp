#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "lgw/metrics.hpp"
#include "lgw/ingest.hpp"
#include "lgw/synth.hpp"

using namespace lgw;

namespace {

SynthData synth(Layout layout, std::size_t factors, std::size_t values, std::size_t dim, std::size_t n,
                std::uint64_t seed, double noise = 0.1) {
  SynthSpec spec;
  spec.schema = make_schema(factors, values);
  spec.dim = dim;
  spec.samples = n;
  spec.noise_std = noise;
  spec.layout = layout;
  spec.seed = Seed{seed};
  return generate(spec);
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

// Modularity computed straight from a MI matrix, no normalization.
double modularity_oracle(const Matrix& mi) {
  double total = 0.0;
  for (std::size_t d = 0; d < mi.rows(); ++d) {
    std::vector<double> row(mi.row(d).begin(), mi.row(d).end());
    row.erase(std::max_element(row.begin(), row.end()));
    const double mean = std::accumulate(row.begin(), row.end(), 0.0) / row.size();
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    total += 1.0 - var / row.size();
  }
  return total / mi.rows();
}

MutualInformation mi_of(const Matrix& m) {
  MutualInformation mi;
  mi.mi = m;
  for (std::size_t f = 0; f < m.cols(); ++f) mi.factors.push_back(f);
  mi.factor_entropy.assign(m.cols(), 1.0);
  mi.entropy.assign(m.rows(), 1.0);
  return mi;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("entropy of the bin histogram") {
    const std::vector<double> one_bin{0.0, 0.01, 0.02, 0.03};
    const auto grid = DimBins::fit(std::vector<double>{0.0, 1.0});
    CHECK(entropy_binned(one_bin, grid) == 0.0);
    const std::vector<double> coin{0.0, 0.0, 1.0, 1.0};
    CHECK(entropy_binned(coin, grid) == doctest::Approx(1.0).epsilon(1e-12));
    // constant dimension
    const std::vector<double> flat{3.0, 3.0, 3.0};
    const auto flat_bins = DimBins::fit(flat);
    CHECK(flat_bins.constant);
    CHECK(entropy_binned(flat, flat_bins) == 0.0);
    // out-of-range values clamp to the end bins
    CHECK(grid.bin_of(-5.0) == 0);
    CHECK(grid.bin_of(5.0) == 19);
    CHECK_THROWS(entropy_binned(std::vector<double>{}, grid));
  }

  TEST_CASE("uniform samples give close to log2(20) bits") {
    Rng rng(Seed{11});
    std::vector<double> u(1000);
    for (auto& v : u) v = rng.uniform();
    const auto bins = DimBins::fit(u);
    for (std::size_t i = 1; i < bins.edges.size(); ++i) CHECK(bins.edges[i] > bins.edges[i - 1]);
    CHECK(entropy_binned(u, bins) == doctest::Approx(std::log2(20.0)).epsilon(0.15 / std::log2(20.0)));
  }

  TEST_CASE("mutual information of a two-symbol channel") {
    std::vector<std::vector<double>> rows;
    std::vector<int> values;
    Rng rng(Seed{3});
    for (int i = 0; i < 2000; ++i) {
      const int v = i % 2;
      rows.push_back({static_cast<double>(v), rng.normal()});
      values.push_back(v);
    }
    const auto ds = testing::one_factor(rows, values);
    const auto mi = mutual_information_matrix(ds);
    CHECK(mi.mi(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mi.mi(1, 0) >= 0.0);
    CHECK(mi.mi(1, 0) < 0.05);
  }

  TEST_CASE("MI entries are never negative") {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto data = synth(Layout::kShuffledLabels, 3, 3, 6, 300, s);
      const auto mi = mutual_information_matrix(data.dataset);
      for (double v : mi.mi.data()) CHECK(v >= 0.0);
      for (double h : mi.entropy) CHECK(h >= 0.0);
    }
  }

  TEST_CASE("single-valued factor is skipped with a warning") {
    std::vector<std::vector<double>> rows{{0.0}, {1.0}, {2.0}};
    const auto ds = testing::one_factor(rows, {0, 0, -1});
    const auto mi = mutual_information_matrix(ds);
    CHECK(mi.factors.empty());
    CHECK(mi.warnings.size() == 1);
  }

  TEST_CASE("MIG separates disentangled from rotated codes") {
    const auto dis = synth(Layout::kDisentangled, 4, 4, 16, 2000, 1);
    const auto rot = synth(Layout::kRotated, 4, 4, 16, 2000, 1);
    CHECK(mig(dis.dataset) >= 0.8);
    CHECK(mig(rot.dataset) <= 0.2);
  }

  TEST_CASE("duplicating the best dimension collapses the gap") {
    const auto dup = synth(Layout::kDuplicated, 3, 4, 12, 1000, 2);
    const auto r = mig(mutual_information_matrix(dup.dataset));
    for (double g : r.gaps) CHECK(g == doctest::Approx(0.0));
  }

  TEST_CASE("MIG needs two dimensions") {
    const auto ds = testing::one_factor({{0.0}, {1.0}}, {0, 1});
    CHECK_THROWS(mig(ds));
  }

  TEST_CASE("MIG and modularity survive positive affine maps") {
    const auto data = synth(Layout::kDisentangled, 3, 3, 6, 600, 5);
    Matrix x = data.dataset.vectors();
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t d = 0; d < x.cols(); ++d) x(i, d) = 0.25 * static_cast<double>(d + 1) * x(i, d) - 7.0;
    const auto moved = data.dataset.with_vectors(x);
    const auto a = mutual_information_matrix(data.dataset);
    const auto b = mutual_information_matrix(moved);
    CHECK(mig(a).value == doctest::Approx(mig(b).value).epsilon(1e-9));
    CHECK(modularity(a).value == doctest::Approx(modularity(b).value).epsilon(1e-9));
  }

  TEST_CASE("modularity hand cases") {
    // remaining MIs equal: each dimension scores 1
    const auto eq = modularity(mi_of(Matrix::from_rows({{0.9, 0.3, 0.3}, {0.2, 0.2, 0.8}})), true);
    CHECK(eq.value == doctest::Approx(1.0));
    // remaining {0, 1} after dropping 2: variance 0.25
    const auto m = mi_of(Matrix::from_rows({{2.0, 0.0, 1.0}}));
    CHECK(modularity(m, true).value == doctest::Approx(0.75));
    CHECK(modularity(m, true).value == doctest::Approx(modularity_oracle(m.mi)));
    // normalized: {0, 0.5} -> 1 - 0.0625
    CHECK(modularity(m).value == doctest::Approx(0.9375));
    CHECK_THROWS(modularity(mi_of(Matrix::from_rows({{1.0}, {0.5}}))));
  }

  TEST_CASE("modularity ignores dimension order and stays in [0, 1]") {
    const auto data = synth(Layout::kDisentangled, 3, 3, 6, 600, 8);
    const auto mi = mutual_information_matrix(data.dataset);
    Matrix rev(mi.mi.rows(), mi.mi.cols());
    for (std::size_t d = 0; d < rev.rows(); ++d)
      for (std::size_t f = 0; f < rev.cols(); ++f) rev(d, f) = mi.mi(rev.rows() - 1 - d, f);
    auto mr = mi;
    mr.mi = rev;
    CHECK(modularity(mi).value == doctest::Approx(modularity(mr).value).epsilon(1e-12));
    CHECK(mig(mi).value == doctest::Approx(mig(mr).value).epsilon(1e-12));
    for (double s : modularity(mi).per_dim) {
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
    }
  }

  TEST_CASE("z_diff with one factor is degenerate") {
    const auto data = synth(Layout::kDisentangled, 1, 3, 4, 200, 1);
    const auto [tr, te] = split_indices(200, 0.2, Seed{1});
    const auto r = z_diff_accuracy(data.dataset, tr, te, {}, Seed{2});
    CHECK(r.accuracy == 100.0);
    CHECK(r.degenerate);
  }

  TEST_CASE("z_diff on disentangled and shuffled data") {
    const auto dis = synth(Layout::kDisentangled, 2, 4, 8, 1000, 3);
    const auto [tr, te] = split_indices(1000, 0.2, Seed{1});
    CHECK(z_diff_accuracy(dis.dataset, tr, te, {}, Seed{2}).accuracy >= 95.0);
    const auto sh = synth(Layout::kShuffledLabels, 4, 4, 8, 1000, 3);
    const auto r = z_diff_accuracy(sh.dataset, tr, te, {}, Seed{2});
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 100.0);
    CHECK(r.accuracy == doctest::Approx(25.0).epsilon(0.4));  // within 10 points
  }

  TEST_CASE("golden table of the count example") {
    Matrix counts = Matrix::from_rows({{100, 22, 3}, {0, 50, 0}, {0, 0, 0}, {2, 2, 0}});
    const auto g = golden_table(counts);
    CHECK(g[0] == 0);
    CHECK(g[1] == 1);
    CHECK(g[2] == -1);
    CHECK(g[3] == 0);  // tie to the lowest factor
  }

  TEST_CASE("z_min_var on a constant-coded factor") {
    // each factor's value sets one dim exactly; within a value that dim has zero variance
    const auto data = synth(Layout::kDisentangled, 3, 3, 6, 900, 4, 0.0);
    const auto [tr, te] = split_indices(900, 0.2, Seed{1});
    CHECK(z_min_var_score(data.dataset, tr, te, {}, Seed{3}).score == 1.0);
  }

  TEST_CASE("z_min_var on noise sits near chance") {
    double total = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto data = synth(Layout::kShuffledLabels, 4, 4, 8, 1000, 100 + s);
      const auto [tr, te] = split_indices(1000, 0.2, Seed{s});
      const auto r = z_min_var_score(data.dataset, tr, te, {}, Seed{s});
      CHECK(r.score >= 0.0);
      CHECK(r.score <= 1.0);
      total += r.score;
    }
    CHECK(std::abs(total / 5.0 - 0.25) <= 0.15);
  }

  TEST_CASE("D and C on hand matrices") {
    const auto eye = Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    CHECK(disentanglement_score(eye) == doctest::Approx(1.0));
    CHECK(completeness_score(eye) == doctest::Approx(1.0));
    const auto perm = Matrix::from_rows({{0, 0, 1}, {1, 0, 0}, {0, 1, 0}});
    CHECK(disentanglement_score(perm) == doctest::Approx(1.0));
    CHECK(completeness_score(perm) == doctest::Approx(1.0));
    const auto half = Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}});
    CHECK(disentanglement_score(half) == doctest::Approx(0.0));
    CHECK(completeness_score(half) == doctest::Approx(0.0));
    const Matrix uni(3, 4, 0.25);
    CHECK(disentanglement_score(uni) == doctest::Approx(0.0));
    CHECK(completeness_score(uni) == doctest::Approx(0.0));
    // all-zero column carries no weight
    const auto gap = Matrix::from_rows({{1, 0, 0}, {0, 1, 0}});
    CHECK(disentanglement_score(gap) == doctest::Approx(1.0));
  }

  TEST_CASE("D by hand entropy") {
    // column 0: (0.6, 0.2) -> p = (0.75, 0.25); column 1: (0, 0.2) -> pure
    const auto r = Matrix::from_rows({{0.6, 0.0}, {0.2, 0.2}});
    const double h0 = -(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25));
    const double expected = (0.8 / 1.0) * (1.0 - h0) + (0.2 / 1.0) * 1.0;
    CHECK(disentanglement_score(r) == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("DCI importance concentrates on the owning dimension") {
    const auto data = synth(Layout::kDisentangled, 2, 3, 6, 600, 6);
    ForestParams p{32, TreeParams{0, 1, kAllFeatures}};
    const auto imp = dci_importance(data.dataset, all_rows(600), p, Seed{1});
    REQUIRE(imp.r.rows() == 2);
    for (std::size_t f = 0; f < 2; ++f) {
      const auto row = imp.r.row(f);
      CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0));
      CHECK(row[data.truth.factor_dims[f]] > 0.9);
    }
  }

  TEST_CASE("count annotations become classes") {
    FactorSchema schema(std::vector<Factor>{{"ARG0", {"animal", "human"}}});
    // "animals require water for survival": one ARG0
    const auto ds = LatentDataset::build(schema, Matrix::from_rows({{0.1}}), {{Label::count(1)}});
    CHECK(ds.class_of(0, 0) == 1);
  }

  TEST_CASE("informativeness error on separable and shuffled labels") {
    const auto dis = synth(Layout::kDisentangled, 2, 3, 6, 900, 9);
    const auto [tr, te] = split_indices(900, 0.2, Seed{1});
    const auto good = informativeness_score(dis.dataset, tr, te, {}, Seed{1});
    CHECK(good.error <= 0.02);
    const auto sh = synth(Layout::kShuffledLabels, 2, 3, 6, 900, 9);
    const auto bad = informativeness_score(sh.dataset, tr, te, {}, Seed{1});
    CHECK(bad.error == doctest::Approx(2.0 / 3.0).epsilon(0.15));
    CHECK(bad.error >= 0.0);
    CHECK(bad.error <= 1.0);
  }

  TEST_CASE("run_all_metrics separates layouts and repeats exactly") {
    MetricsConfig cfg;
    cfg.forest.n_trees = 16;
    const auto dis = synth(Layout::kDisentangled, 3, 3, 8, 600, 12);
    const auto rot = synth(Layout::kRotated, 3, 3, 8, 600, 12);
    const auto a = run_all_metrics(dis.dataset, cfg, Seed{5});
    const auto b = run_all_metrics(rot.dataset, cfg, Seed{5});
    CHECK(a.at("mig") > 0.8);
    CHECK(a.at("modularity") > 0.8);
    CHECK(a.at("informativeness_error") < 0.05);
    CHECK(b.at("mig") < 0.2);
    CHECK(b.at("informativeness_error") < 0.05);
    const auto again = run_all_metrics(dis.dataset, cfg, Seed{5});
    CHECK(render_report(a, ReportFormat::kJson) == render_report(again, ReportFormat::kJson));
  }

  TEST_CASE("metric selection") {
    MetricsConfig cfg;
    cfg.selected = {"mig"};
    const auto data = synth(Layout::kDisentangled, 2, 2, 4, 200, 1);
    const auto r = run_all_metrics(data.dataset, cfg, Seed{1});
    CHECK(r.get("mig").has_value());
    CHECK_FALSE(r.get("disentanglement").has_value());
  }

  TEST_CASE("MIG and D are exact under dimension permutation") {
    const auto data = synth(Layout::kDisentangled, 3, 3, 6, 600, 13);
    const std::vector<std::size_t> perm{5, 2, 0, 4, 1, 3};
    Matrix x(600, 6);
    for (std::size_t i = 0; i < 600; ++i)
      for (std::size_t d = 0; d < 6; ++d) x(i, d) = data.dataset.vectors()(i, perm[d]);
    const auto moved = data.dataset.with_vectors(x);
    CHECK(mig(data.dataset) == doctest::Approx(mig(moved)).epsilon(1e-12));
    // D is a column-permutation invariant of R
    const auto r = Matrix::from_rows({{0.7, 0.2, 0.1}, {0.1, 0.1, 0.8}});
    const auto rp = Matrix::from_rows({{0.1, 0.7, 0.2}, {0.8, 0.1, 0.1}});
    CHECK(disentanglement_score(r) == doctest::Approx(disentanglement_score(rp)).epsilon(1e-12));
    CHECK(completeness_score(r) == doctest::Approx(completeness_score(rp)).epsilon(1e-12));
  }
}
