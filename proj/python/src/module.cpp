#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lgw/cvae.hpp"
#include "lgw/geometry.hpp"
#include "lgw/guided.hpp"
#include "lgw/ingest.hpp"
#include "lgw/metrics.hpp"
#include "lgw/synth.hpp"

namespace py = pybind11;
using namespace lgw;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw InvalidArgument("expected a 2-d array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw InvalidArgument("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

Array from_matrix(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Array from_vector(std::span<const double> v) {
  Array out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array from_rows(const std::vector<Vector>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Array out({rows.size(), cols});
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), out.mutable_data() + i * cols);
  return out;
}

py::list schema_list(const FactorSchema& s) {
  py::list out;
  for (const auto& f : s.factors()) out.append(py::make_tuple(f.name, f.values));
  return out;
}

}  // namespace

PYBIND11_MODULE(_lgw, m) {
  m.doc() = "Latent space geometry probes";

  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

  py::class_<LatentDataset>(m, "Dataset")
      .def_property_readonly("size", &LatentDataset::size)
      .def_property_readonly("dim", &LatentDataset::dim)
      .def_property_readonly("vectors", [](const LatentDataset& d) { return from_matrix(d.vectors()); })
      .def_property_readonly("ids", &LatentDataset::ids)
      .def_property_readonly("schema", [](const LatentDataset& d) { return schema_list(d.schema()); })
      .def("classes",
           [](const LatentDataset& d, std::size_t factor) {
             if (factor >= d.schema().size()) throw InvalidArgument("factor index out of range");
             std::vector<int> out(d.size());
             for (std::size_t i = 0; i < d.size(); ++i) out[i] = d.class_of(i, factor).value_or(-1);
             return out;
           },
           py::arg("factor"), "Class per sample for one factor, -1 where unannotated.")
      .def("__len__", &LatentDataset::size);

  m.def("make_schema", [](std::size_t factors, std::size_t values) { return schema_list(make_schema(factors, values)); },
        py::arg("factors"), py::arg("values"));

  m.def(
      "generate",
      [](std::size_t factors, std::size_t values, std::size_t dim, std::size_t samples, double noise,
         const std::string& layout, std::uint64_t seed) {
        SynthSpec s;
        s.schema = make_schema(factors, values);
        s.dim = dim;
        s.samples = samples;
        s.noise_std = noise;
        s.layout = parse_layout(layout);
        s.seed = Seed{seed};
        return generate(s).dataset;
      },
      py::arg("factors") = 4, py::arg("values") = 4, py::arg("dim") = 32, py::arg("samples") = 2000,
      py::arg("noise") = 0.1, py::arg("layout") = "disentangled", py::arg("seed"));

  m.def(
      "load_dataset",
      [](const std::filesystem::path& path, std::optional<std::filesystem::path> schema) {
        std::optional<FactorSchema> s;
        if (schema) s = load_schema(*schema);
        return load_dataset(path, std::nullopt, s);
      },
      py::arg("path"), py::arg("schema") = py::none());
  m.def("save_dataset", [](const LatentDataset& d, const std::filesystem::path& path) { save_dataset(d, path); },
        py::arg("dataset"), py::arg("path"));

  m.def(
      "metrics",
      [](const LatentDataset& d, std::uint64_t seed, std::vector<std::string> only, std::size_t bins,
         std::size_t trees) {
        MetricsConfig cfg;
        cfg.bins = bins;
        cfg.forest.n_trees = trees;
        cfg.selected = {only.begin(), only.end()};
        const auto report = run_all_metrics(d, cfg, Seed{seed});
        py::dict out;
        for (const auto& [k, v] : report.scalars()) out[py::str(k)] = v;
        return out;
      },
      py::arg("dataset"), py::arg("seed"), py::arg("only") = std::vector<std::string>{}, py::arg("bins") = 20,
      py::arg("trees") = 64);

  m.def(
      "interpolate",
      [](const Array& z1, const Array& z2, double step) { return from_rows(interpolate(to_vector(z1), to_vector(z2), step)); },
      py::arg("z1"), py::arg("z2"), py::arg("step") = 0.1);

  m.def(
      "arithmetic",
      [](const Array& z1, const Array& z2, const std::string& op) {
        return from_vector(arithmetic(to_vector(z1), to_vector(z2), parse_arith_op(op)));
      },
      py::arg("z1"), py::arg("z2"), py::arg("op"));

  m.def("random_orthogonal", [](std::size_t dim, std::uint64_t seed) { return from_matrix(random_orthogonal(dim, Seed{seed})); },
        py::arg("dim"), py::arg("seed"));

  m.def(
      "pca_project",
      [](const Array& x, std::size_t k) {
        const auto r = pca_project(to_matrix(x), k);
        return py::make_tuple(from_matrix(r.projected), r.explained_ratio);
      },
      py::arg("x"), py::arg("k") = 2);

  m.def(
      "kl_diag_gaussians",
      [](const Array& mq, const Array& lq, const Array& mp, const Array& lp) {
        return from_vector(kl_diag_gaussians(to_vector(mq), to_vector(lq), to_vector(mp), to_vector(lp)));
      },
      py::arg("mu_q"), py::arg("log_sigma_q"), py::arg("mu_p"), py::arg("log_sigma_p"));

  m.def(
      "beta_at",
      [](std::size_t step, std::size_t cycle, double ramp) {
        TrainConfig c;
        c.cycle_length = cycle;
        c.ramp_fraction = ramp;
        c.validate();
        return beta_at(c, step);
      },
      py::arg("step"), py::arg("cycle") = 200, py::arg("ramp") = 0.5);

  m.def(
      "edit_value_for_branch",
      [](double threshold, const std::string& branch, double min, double max, double mean, double std) {
        if (branch != "yes" && branch != "no") throw InvalidArgument("branch must be 'yes' or 'no'");
        return edit_value_for_branch(threshold, branch == "yes" ? Branch::kYes : Branch::kNo,
                                     DimStats{min, max, mean, std});
      },
      py::arg("threshold"), py::arg("branch"), py::arg("min"), py::arg("max"), py::arg("mean"), py::arg("std"));

  m.def(
      "guided_traverse",
      [](const Array& x, std::vector<int> labels, const Array& seed_vector, int from_class, int to_class,
         std::uint64_t seed) {
        const auto e = guided_traverse(to_matrix(x), labels, to_vector(seed_vector), from_class, to_class, {}, Seed{seed});
        py::list edits;
        for (const auto& s : e.edits) {
          py::dict d;
          d["dim"] = s.dim;
          d["old"] = s.old_value;
          d["new"] = s.new_value;
          d["threshold"] = s.threshold;
          d["branch"] = to_string(s.branch);
          edits.append(d);
        }
        py::dict out;
        out["final"] = from_vector(e.final);
        out["edits"] = edits;
        out["seed_prediction"] = e.seed_prediction;
        out["final_prediction"] = e.final_prediction;
        out["warnings"] = e.warnings;
        return out;
      },
      py::arg("x"), py::arg("labels"), py::arg("seed_vector"), py::arg("from_class"), py::arg("to_class"),
      py::arg("seed"));
}
