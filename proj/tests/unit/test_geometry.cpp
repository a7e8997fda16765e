#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "lgw/geometry.hpp"
#include "lgw/synth.hpp"

using namespace lgw;

namespace {

class ConstantLabeler : public Labeler {
 public:
  ConstantLabeler() : schema_(std::vector<Factor>{{"F", {"a", "b"}}}) {}
  const FactorSchema& schema() const override { return schema_; }
  std::vector<int> label(std::span<const double>) const override { return {1}; }

 private:
  FactorSchema schema_;
};

// Labels by which side of x0 = 0 the point is on.
class SignLabeler : public Labeler {
 public:
  SignLabeler() : schema_(std::vector<Factor>{{"F", {"neg", "pos"}}}) {}
  const FactorSchema& schema() const override { return schema_; }
  std::vector<int> label(std::span<const double> z) const override { return {z[0] > 0 ? 1 : 0}; }

 private:
  FactorSchema schema_;
};

Matrix gaussian_cluster(std::size_t n, std::vector<double> center, double sd, Seed seed) {
  Rng rng(seed);
  Matrix m(n, center.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < center.size(); ++d) m(i, d) = center[d] + sd * rng.normal();
  return m;
}

// Leading eigenvector of the sample covariance by power iteration.
std::vector<double> power_iteration(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j) / n;
  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov[a][b] += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
  std::vector<double> v(d, 1.0);
  for (int it = 0; it < 2000; ++it) {
    std::vector<double> w(d, 0.0);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) w[a] += cov[a][b] * v[b];
    double norm = 0.0;
    for (double c : w) norm += c * c;
    norm = std::sqrt(norm);
    for (std::size_t a = 0; a < d; ++a) v[a] = w[a] / norm;
  }
  std::size_t big = 0;
  for (std::size_t a = 1; a < d; ++a)
    if (std::abs(v[a]) > std::abs(v[big])) big = a;
  if (v[big] < 0)
    for (auto& c : v) c = -c;
  return v;
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("traverse_dim") {
    const std::vector<double> z{0.0, 0.0};
    const auto out = traverse_dim(z, 1, std::vector<double>{-1.0, 1.0});
    REQUIRE(out.size() == 2);
    CHECK(out[0] == Vector{0.0, -1.0});
    CHECK(out[1] == Vector{0.0, 1.0});
    const std::vector<double> w{0.3, -2.0, 5.0};
    CHECK(traverse_dim(w, 2, std::vector<double>{5.0})[0] == Vector(w.begin(), w.end()));
    const auto many = traverse_dim(w, 1, std::vector<double>{1, 2, 3, 4});
    for (const auto& v : many) {
      CHECK(v[0] == w[0]);
      CHECK(v[2] == w[2]);
    }
    CHECK_THROWS_AS(traverse_dim(w, 3, std::vector<double>{0.0}), InvalidArgument);
  }

  TEST_CASE("traversal plan covers every active dim") {
    TraversalPlan plan;
    plan.seed = {1.0, 2.0, 3.0};
    plan.low = {-1.0, -1.0, -1.0};
    plan.high = {1.0, 1.0, 1.0};
    plan.steps = 5;
    plan.active = {true, false, true};
    const auto runs = run_traversal(plan);
    REQUIRE(runs.size() == 2);
    CHECK(runs[0].dim == 0);
    CHECK(runs[1].dim == 2);
    CHECK(runs[0].values == Vector{-1.0, -0.5, 0.0, 0.5, 1.0});
    CHECK(runs[1].vectors[4] == Vector{1.0, 2.0, 1.0});
  }

  TEST_CASE("interpolate gives nine interior points") {
    const std::vector<double> a{0.0, 0.0}, b{1.0, 1.0};
    const auto path = interpolate(a, b);
    REQUIRE(path.size() == 9);
    CHECK(path[4][0] == doctest::Approx(0.5));
    CHECK(path[4][1] == doctest::Approx(0.5));
    const auto same = interpolate(a, a);
    for (const auto& v : same) CHECK(v == Vector{0.0, 0.0});
    CHECK_THROWS(interpolate(a, std::vector<double>{1.0}));
    CHECK_THROWS(interpolate(a, b, 0.0));
    CHECK_THROWS(interpolate(a, b, 1.0));
  }

  TEST_CASE("interpolation matches the affine formula and its endpoints") {
    Rng rng(Seed{1});
    std::vector<double> z1(6), z2(6);
    for (auto& v : z1) v = rng.normal();
    for (auto& v : z2) v = rng.normal();
    const auto ts = interpolation_times(0.1);
    const auto path = interpolate(z1, z2, 0.1);
    REQUIRE(ts.size() == path.size());
    for (std::size_t k = 0; k < ts.size(); ++k)
      for (std::size_t d = 0; d < 6; ++d)
        CHECK(path[k][d] == doctest::Approx(z1[d] * (1 - ts[k]) + z2[d] * ts[k]).epsilon(1e-14));
    for (std::size_t d = 0; d < 6; ++d) {
      CHECK(z1[d] * (1 - 0.0) + z2[d] * 0.0 == z1[d]);
      CHECK(z1[d] * (1 - 1.0) + z2[d] * 1.0 == z2[d]);
    }
  }

  TEST_CASE("arithmetic") {
    const std::vector<double> a{1, 2}, b{3, 4}, zero{0, 0};
    CHECK(arithmetic(a, b, ArithOp::kAdd) == Vector{4, 6});
    CHECK(arithmetic(a, zero, ArithOp::kAdd) == Vector{1, 2});
    CHECK(arithmetic(a, a, ArithOp::kSub) == Vector{0, 0});
    CHECK(arithmetic(a, b, ArithOp::kHadamard) == Vector{3, 8});
    CHECK_THROWS(arithmetic(a, std::vector<double>{1}, ArithOp::kAdd));
    CHECK(parse_arith_op("sub") == ArithOp::kSub);
    CHECK(to_string(ArithOp::kHadamard) == "hadamard");
    CHECK_THROWS(parse_arith_op("div"));
  }

  TEST_CASE("addition commutes and subtraction undoes it") {
    Rng rng(Seed{2});
    for (int t = 0; t < 100; ++t) {
      std::vector<double> a(8), b(8);
      for (auto& v : a) v = rng.normal(0, 10);
      for (auto& v : b) v = rng.normal(0, 10);
      CHECK(arithmetic(a, b, ArithOp::kAdd) == arithmetic(b, a, ArithOp::kAdd));
      const auto back = arithmetic(arithmetic(a, b, ArithOp::kAdd), b, ArithOp::kSub);
      for (std::size_t d = 0; d < 8; ++d) CHECK(std::abs(back[d] - a[d]) <= 1e-12 * std::max(1.0, std::abs(a[d])));
    }
  }

  TEST_CASE("consistency ratio") {
    ConstantLabeler constant;
    std::vector<VectorPair> pairs{{{0.0, 1.0}, {2.0, 3.0}}, {{-1.0, 0.0}, {5.0, 5.0}}};
    CHECK(consistency_ratio(pairs, ArithOp::kSub, constant, 0, {}, Seed{1}) == 1.0);
    CHECK_THROWS(consistency_ratio(std::span<const VectorPair>{}, ArithOp::kAdd, constant, 0, {}, Seed{1}));
    // two positive points stay positive under addition, but not always under subtraction
    SignLabeler sign;
    const Matrix c = gaussian_cluster(200, {5.0, 0.0}, 0.5, Seed{3});
    std::vector<VectorPair> same;
    for (std::size_t i = 0; i + 1 < 200; i += 2) {
      same.push_back({Vector(c.row(i).begin(), c.row(i).end()), Vector(c.row(i + 1).begin(), c.row(i + 1).end())});
    }
    const double add = consistency_ratio(same, ArithOp::kAdd, sign, 0, {}, Seed{1});
    const double sub = consistency_ratio(same, ArithOp::kSub, sign, 0, {}, Seed{1});
    CHECK(add >= 0.9);
    CHECK(sub < add);
  }

  TEST_CASE("convex combination test") {
    SignLabeler sign;
    Matrix twin(2, 2);
    twin(0, 0) = twin(1, 0) = 3.0;
    twin(0, 1) = twin(1, 1) = -1.0;
    CHECK(convex_combination_test(twin, sign, 0, {}, Seed{1}) == 1.0);

    const Matrix pos = gaussian_cluster(100, {4.0, 0.0}, 0.5, Seed{4});
    CHECK(convex_combination_test(pos, sign, 0, {}, Seed{2}) >= 0.95);

    // symmetric clusters at +-4: midpoints straddle x0 = 0 about half the time
    Matrix both = gaussian_cluster(200, {4.0, 0.0}, 1.0, Seed{5});
    const Matrix neg = gaussian_cluster(200, {-4.0, 0.0}, 1.0, Seed{6});
    for (std::size_t i = 0; i < neg.rows(); ++i) both.append_row(neg.row(i));
    ConvexTestOptions opts;
    opts.fixed_t = 0.5;
    opts.reference = 1;
    opts.trials = 4000;
    const double mixed = convex_combination_test(both, sign, 0, opts, Seed{7});
    // half the pairs are within one cluster (score 1 or 0); cross pairs straddle
    CHECK(mixed == doctest::Approx(0.5).epsilon(0.2));

    ConvexTestOptions none;
    none.trials = 0;
    CHECK_THROWS(convex_combination_test(pos, sign, 0, none, Seed{1}));
  }

  TEST_CASE("same-leaf combinations never leave the tree cell") {
    Rng rng(Seed{8});
    Matrix x(300, 3);
    std::vector<int> y(300);
    for (std::size_t i = 0; i < 300; ++i) {
      for (std::size_t d = 0; d < 3; ++d) x(i, d) = rng.normal();
      y[i] = (x(i, 0) > 0) ^ (x(i, 1) > 0.3) ? 1 : 0;
    }
    const auto tree = tree_fit(x, y, TreeParams{4, 5, 0}, Seed{1});
    for (auto leaf : tree.leaves()) {
      Matrix cluster(0, 3);
      for (std::size_t i = 0; i < 300; ++i)
        if (tree.leaf_of(x.row(i)) == leaf) cluster.append_row(x.row(i));
      if (cluster.rows() < 2) continue;
      ConvexTestOptions opts;
      opts.reference = tree.majority_class(leaf);
      opts.trials = 200;
      CHECK(convex_combination_test(cluster, tree, opts, Seed{leaf}) == 1.0);
    }
  }

  TEST_CASE("cosine cluster size") {
    CHECK(cosine_distance(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == doctest::Approx(1.0));
    const auto same_dir = Matrix::from_rows({{1, 2}, {2, 4}, {0.5, 1}});
    const auto s = cluster_size(same_dir, 10, Seed{1});
    CHECK(s.max_cos_dist == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.min_cos_dist == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS(cluster_size(Matrix::from_rows({{1, 0}, {0, 0}}), 5, Seed{1}));
  }

  TEST_CASE("sampled cluster size stays inside the exhaustive range") {
    Matrix c = gaussian_cluster(20, {0.5, 0.5, 0.5}, 1.0, Seed{9});
    double lo = 2.0, hi = 0.0;
    for (std::size_t i = 0; i < 20; ++i)
      for (std::size_t j = i + 1; j < 20; ++j) {
        const double d = cosine_distance(c.row(i), c.row(j));
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
    double prev_gap = 3.0;
    for (std::size_t k : {10, 100, 5000}) {
      const auto s = cluster_size(c, k, Seed{1});
      CHECK(s.max_cos_dist <= hi + 1e-15);
      CHECK(s.min_cos_dist >= lo - 1e-15);
      CHECK(0.0 <= s.min_cos_dist);
      CHECK(s.min_cos_dist <= s.max_cos_dist);
      CHECK(s.max_cos_dist <= 2.0);
      const double gap = (hi - s.max_cos_dist) + (s.min_cos_dist - lo);
      CHECK(gap <= prev_gap + 1e-15);
      prev_gap = gap;
    }
    CHECK(prev_gap == doctest::Approx(0.0).epsilon(1e-12));
  }

  TEST_CASE("proxy metrics") {
    Matrix x = gaussian_cluster(100, {-5.0, 0.0}, 0.5, Seed{10});
    const Matrix b = gaussian_cluster(100, {5.0, 0.0}, 0.5, Seed{11});
    for (std::size_t i = 0; i < b.rows(); ++i) x.append_row(b.row(i));
    std::vector<int> y(200, 0);
    std::fill(y.begin() + 100, y.end(), 1);
    const auto sep = proxy_metrics(x, y, Seed{1});
    CHECK(sep.separation == 1.0);
    CHECK(sep.density == 1.0);

    Matrix same = gaussian_cluster(2000, {0.0, 0.0}, 1.0, Seed{12});
    std::vector<int> coin(2000);
    for (std::size_t i = 0; i < 2000; ++i) coin[i] = static_cast<int>(i % 2);
    const auto chance = proxy_metrics(same, coin, Seed{2});
    CHECK(std::abs(chance.separation - 0.5) <= 0.1);
    CHECK_THROWS(proxy_metrics(same, std::vector<int>(2000, 0), Seed{1}));
  }

  TEST_CASE("PCA on collinear points") {
    Matrix x(50, 3);
    for (std::size_t i = 0; i < 50; ++i) {
      const double t = static_cast<double>(i) - 20.0;
      x(i, 0) = t;
      x(i, 1) = 2 * t;
      x(i, 2) = -t;
    }
    const auto p = pca_project(x, 2);
    CHECK(p.explained_ratio[0] == doctest::Approx(1.0));
    CHECK(p.explained_ratio[1] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK_THROWS(pca_project(x, 4));
  }

  TEST_CASE("PCA on an isotropic cloud") {
    const Matrix x = gaussian_cluster(20000, {1.0, -1.0, 3.0}, 2.0, Seed{13});
    const auto p = pca_project(x, 3);
    for (double r : p.explained_ratio) CHECK(r == doctest::Approx(1.0 / 3.0).epsilon(0.1));
  }

  TEST_CASE("PCA agrees with power iteration and reconstructs at full rank") {
    Rng rng(Seed{14});
    Matrix x(400, 4);
    for (std::size_t i = 0; i < 400; ++i) {
      const double a = rng.normal(0, 3), b = rng.normal(0, 1);
      x(i, 0) = a + 0.1 * rng.normal();
      x(i, 1) = 0.5 * a + b;
      x(i, 2) = b - 0.2 * a;
      x(i, 3) = 0.3 * rng.normal();
    }
    const auto p = pca_project(x, 4);
    const auto v = power_iteration(x);
    for (std::size_t d = 0; d < 4; ++d) CHECK(p.components(0, d) == doctest::Approx(v[d]).epsilon(1e-6));
    double sum = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      sum += p.explained_ratio[k];
      if (k > 0) CHECK(p.explained_ratio[k] <= p.explained_ratio[k - 1]);
    }
    CHECK(sum <= 1.0 + 1e-12);
    for (std::size_t i = 0; i < 400; ++i)
      for (std::size_t d = 0; d < 4; ++d) {
        double r = p.mean[d];
        for (std::size_t k = 0; k < 4; ++k) r += p.projected(i, k) * p.components(k, d);
        CHECK(r == doctest::Approx(x(i, d)).epsilon(1e-9));
      }
  }

  TEST_CASE("scatter renderings") {
    const auto pts = Matrix::from_rows({{0, 0}, {1, 1}, {2, 0.5}});
    const std::vector<int> cl{0, 1, 1};
    const std::vector<std::string> names{"x", "y"};
    const auto svg = render_scatter_svg(pts, cl, names);
    CHECK(svg.find("viewBox=\"0 0 800 600\"") != std::string::npos);
    std::size_t circles = 0;
    for (auto pos = svg.find("<circle"); pos != std::string::npos; pos = svg.find("<circle", pos + 1)) ++circles;
    CHECK(circles >= 3);
    CHECK(svg.find(">y<") != std::string::npos);
    const std::vector<std::int64_t> ids{7, 8, 9};
    const auto csv = render_scatter_csv(pts, ids, cl);
    CHECK(csv.rfind("id,pc1,pc2,cluster\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  }
}
