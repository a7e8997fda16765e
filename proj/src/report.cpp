#include "lgw/report.hpp"

#include <algorithm>
#include <cmath>

namespace lgw {

void MetricReport::set(const std::string& name, double value) {
  if (!std::isfinite(value)) throw NumericalError("report value " + name + " is not finite");
  for (auto& [k, v] : scalars_) {
    if (k == name) {
      v = value;
      return;
    }
  }
  scalars_.emplace_back(name, value);
}

std::optional<double> MetricReport::get(const std::string& name) const {
  for (const auto& [k, v] : scalars_) {
    if (k == name) return v;
  }
  return std::nullopt;
}

double MetricReport::at(const std::string& name) const {
  if (auto v = get(name)) return *v;
  throw InvalidArgument("report has no metric named " + name);
}

void MetricReport::add_table(ReportTable table) {
  for (double x : table.values.data()) {
    if (!std::isfinite(x)) throw NumericalError("report table " + table.name + " is not finite");
  }
  for (auto& t : tables_) {
    if (t.name == table.name) {
      t = std::move(table);
      return;
    }
  }
  tables_.push_back(std::move(table));
}

const ReportTable* MetricReport::table(const std::string& name) const {
  auto it = std::find_if(tables_.begin(), tables_.end(),
                         [&](const ReportTable& t) { return t.name == name; });
  return it == tables_.end() ? nullptr : &*it;
}

void MetricReport::set_config(const std::string& key, const std::string& value) {
  for (auto& [k, v] : config_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  config_.emplace_back(key, value);
}

std::optional<std::string> MetricReport::config(const std::string& key) const {
  for (const auto& [k, v] : config_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void MetricReport::merge(const MetricReport& other) {
  for (const auto& [k, v] : other.scalars_) set(k, v);
  for (const auto& t : other.tables_) add_table(t);
  for (const auto& [k, v] : other.config_) set_config(k, v);
  for (const auto& w : other.warnings_) warn(w);
}

}  // namespace lgw
