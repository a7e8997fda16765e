#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lgw/core.hpp"

namespace lgw {

// Labeled 2-D breakdown (e.g. the MI matrix or the importance matrix R).
struct ReportTable {
  std::string name;
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;
  Matrix values;

  friend bool operator==(const ReportTable&, const ReportTable&) = default;
};

// Named scalar results plus breakdowns, a config echo and warnings.
// Insertion order is kept and is the serialization order.
class MetricReport {
 public:
  void set(const std::string& name, double value);
  std::optional<double> get(const std::string& name) const;
  double at(const std::string& name) const;

  void add_table(ReportTable table);
  const ReportTable* table(const std::string& name) const;

  void set_config(const std::string& key, const std::string& value);
  std::optional<std::string> config(const std::string& key) const;

  void warn(std::string message) { warnings_.push_back(std::move(message)); }

  // Appends everything from `other`; scalar names already present are overwritten.
  void merge(const MetricReport& other);

  const std::vector<std::pair<std::string, double>>& scalars() const { return scalars_; }
  const std::vector<ReportTable>& tables() const { return tables_; }
  const std::vector<std::pair<std::string, std::string>>& config_entries() const { return config_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  bool empty() const { return scalars_.empty() && tables_.empty(); }

 private:
  std::vector<std::pair<std::string, double>> scalars_;
  std::vector<ReportTable> tables_;
  std::vector<std::pair<std::string, std::string>> config_;
  std::vector<std::string> warnings_;
};

}  // namespace lgw
