#include <algorithm>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "lgw/core.hpp"
#include "lgw/parallel.hpp"
#include "lgw/rng.hpp"

using namespace lgw;

namespace {

LatentDataset toy_roles() {
  FactorSchema schema({{"ARG0", {"animal", "human"}}, {"V", {"is", "causes"}}});
  Matrix x = Matrix::from_rows({{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}, {5, 0}});
  std::vector<std::vector<Label>> labels = {
      {Label::categorical(0), Label::categorical(0)}, {Label::categorical(1), Label::none()},
      {Label::categorical(0), Label::categorical(1)}, {Label::none(), Label::categorical(1)},
      {Label::categorical(0), Label::count(2)},       {Label::categorical(1), Label::categorical(0)}};
  return LatentDataset(schema, x, {10, 11, 12, 13, 14, 15}, labels);
}

}  // namespace

TEST_SUITE("core") {
  TEST_CASE("schema rejects duplicate factors and values") {
    CHECK_THROWS_AS(FactorSchema({{"A", {"x"}}, {"A", {"y"}}}), SchemaError);
    CHECK_THROWS_AS(FactorSchema({{"A", {"x", "x"}}}), SchemaError);
    CHECK_THROWS_AS(FactorSchema(std::vector<Factor>{{"A", {}}}), SchemaError);
    FactorSchema s(std::vector<Factor>{{"ARG0", {"animal", "human", "plant", "something"}}});
    CHECK(s.value_index(0, "plant") == 2);
    CHECK_THROWS_AS(s.factor_index("ARG1"), SchemaError);
  }

  TEST_CASE("dataset validates vectors and labels") {
    FactorSchema s(std::vector<Factor>{{"F", {"a"}}});
    CHECK_THROWS_AS(LatentDataset::build(s, Matrix::from_rows({{std::nan("")}}), {{Label::none()}}), NumericalError);
    CHECK_THROWS_AS(LatentDataset::build(s, Matrix::from_rows({{0.0}}), {{Label::categorical(3)}}), SchemaError);
    CHECK_THROWS_AS(LatentDataset(s, Matrix::from_rows({{0.0}, {1.0}}), {1, 1}, {{Label::none()}, {Label::none()}}),
                    DataError);
  }

  TEST_CASE("subset_by_factor keeps matching rows in order") {
    const auto ds = toy_roles();
    const auto animals = subset_by_factor(ds, "ARG0", "animal");
    // brute-force scan
    std::vector<std::int64_t> expected;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.label(i, 0) == Label::categorical(0)) expected.push_back(ds.id(i));
    }
    CHECK(animals.ids() == expected);
    CHECK(animals.size() == 3);
  }

  TEST_CASE("subset_by_factor: absent value gives an empty dataset, unknown names throw") {
    FactorSchema schema({{"ARG0", {"animal", "human", "plant"}}});
    const auto ds = LatentDataset::build(schema, Matrix::from_rows({{0.0}, {1.0}}),
                                         {{Label::categorical(0)}, {Label::categorical(1)}});
    CHECK(subset_by_factor(ds, "ARG0", "plant").size() == 0);
    CHECK_THROWS_AS(subset_by_factor(ds, "ARG1", "plant"), SchemaError);
    CHECK_THROWS_AS(subset_by_factor(ds, "ARG0", "rock"), SchemaError);
  }

  TEST_CASE("count annotations match when positive") {
    const auto ds = toy_roles();
    const auto causes = subset_by_factor(ds, "V", "causes");
    CHECK(causes.ids() == std::vector<std::int64_t>{12, 13, 14});
  }

  TEST_CASE("subsets over every value cover the annotated rows") {
    const auto ds = toy_roles();
    std::multiset<std::int64_t> got;
    for (const auto& v : ds.schema().factor(0).values) {
      const auto sub = subset_by_factor(ds, "ARG0", v);
      for (auto id : sub.ids()) got.insert(id);
    }
    std::multiset<std::int64_t> annotated;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.label(i, 0).annotated()) annotated.insert(ds.id(i));
    }
    CHECK(got == annotated);
  }

  TEST_CASE("train_test_split sizes, determinism and partition") {
    std::vector<std::vector<double>> rows;
    std::vector<int> vals;
    for (int i = 0; i < 10; ++i) {
      rows.push_back({static_cast<double>(i)});
      vals.push_back(i % 2);
    }
    const auto ds = testing::one_factor(rows, vals);
    const auto [tr7, te7] = train_test_split(ds, 0.2, Seed{7});
    CHECK(tr7.size() == 8);
    CHECK(te7.size() == 2);
    const auto [tr7b, te7b] = train_test_split(ds, 0.2, Seed{7});
    CHECK(tr7 == tr7b);
    CHECK(te7 == te7b);
    const auto [tr8, te8] = train_test_split(ds, 0.2, Seed{8});
    CHECK(tr8.size() == 8);
    CHECK(te8.size() == 2);

    std::multiset<std::int64_t> all(tr7.ids().begin(), tr7.ids().end());
    all.insert(te7.ids().begin(), te7.ids().end());
    CHECK(all == std::multiset<std::int64_t>(ds.ids().begin(), ds.ids().end()));

    CHECK_THROWS_AS(train_test_split(ds, 0.0, Seed{1}), InvalidArgument);
    CHECK_THROWS_AS(train_test_split(ds, 1.0, Seed{1}), InvalidArgument);
  }

  TEST_CASE("rng is reproducible and derive separates streams") {
    Rng a(Seed{42}), b(Seed{42}), c(derive(Seed{42}, 1));
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
      const double x = a.uniform();
      CHECK(x == b.uniform());
      CHECK(x >= 0.0);
      CHECK(x < 1.0);
      differs |= x != c.uniform();
    }
    CHECK(differs);
    CHECK(derive(Seed{1}, 0) != derive(Seed{1}, 1));
  }

  TEST_CASE("sample_without_replacement returns distinct indices") {
    Rng r(Seed{3});
    const auto s = r.sample_without_replacement(50, 20);
    CHECK(s.size() == 20);
    CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 20);
    CHECK(*std::max_element(s.begin(), s.end()) < 50);
  }

  TEST_CASE("normal draws have the right moments") {
    Rng r(Seed{9});
    double m = 0.0, v = 0.0;
    const int n = 20000;
    std::vector<double> xs(n);
    for (auto& x : xs) {
      x = r.normal();
      m += x;
    }
    m /= n;
    for (double x : xs) v += (x - m) * (x - m);
    v /= n;
    CHECK(std::abs(m) < 3.0 / std::sqrt(n));
    CHECK(v == doctest::Approx(1.0).epsilon(0.05));
  }

  TEST_CASE("parallel_for fills every slot and propagates exceptions") {
    std::vector<int> out(1000, 0);
    parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<int>(i) * 2; });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i) * 2);
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                      if (i == 7) throw DataError("boom");
                    }),
                    DataError);
  }
}
