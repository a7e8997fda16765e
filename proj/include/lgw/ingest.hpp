#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include "lgw/core.hpp"
#include "lgw/report.hpp"

namespace lgw {

enum class DataFormat { kJsonl, kCsv };
enum class ReportFormat { kJson, kCsv };

// `.jsonl`/`.json` -> JSONL, `.csv` -> CSV; anything else is a DataError.
DataFormat infer_data_format(const std::filesystem::path& path);
ReportFormat infer_report_format(const std::filesystem::path& path);

// JSONL: header line {"dim": N, "factors": {name: [values...]}} followed by
// one record per line {"id", "vector", "labels", "text"?}. String labels are
// vocabulary values, non-negative integers are occurrence counts.
LatentDataset load_jsonl(const std::filesystem::path& path);
void save_jsonl(const LatentDataset& ds, const std::filesystem::path& path);

// CSV: id, z0..z{dim-1}, then one column per factor; an empty cell means
// unannotated. With a schema, cells are matched against its vocabularies;
// without one the vocabulary is collected in first-seen order. Integer cells
// outside the vocabulary are counts. Text is not carried by CSV.
LatentDataset load_csv(const std::filesystem::path& path,
                       const std::optional<FactorSchema>& schema = std::nullopt);
void save_csv(const LatentDataset& ds, const std::filesystem::path& path);

LatentDataset load_dataset(const std::filesystem::path& path,
                           std::optional<DataFormat> format = std::nullopt,
                           const std::optional<FactorSchema>& schema = std::nullopt);
void save_dataset(const LatentDataset& ds, const std::filesystem::path& path,
                  std::optional<DataFormat> format = std::nullopt);

// Reads a schema from a JSON file holding the JSONL header object (or from
// the first line of a JSONL dataset).
FactorSchema load_schema(const std::filesystem::path& path);

void save_report(const MetricReport& report, const std::filesystem::path& path,
                 ReportFormat format);
MetricReport load_report(const std::filesystem::path& path, ReportFormat format);

// Reports and tables are rendered with this many significant digits.
inline constexpr int kReportDigits = 6;
double round_significant(double value, int digits = kReportDigits);

// Serialized report text (what save_report writes).
std::string render_report(const MetricReport& report, ReportFormat format);

// 64-bit FNV-1a of a file's bytes as 16 hex digits.
std::string content_hash(const std::filesystem::path& path);

// Whole-file write that reports unwritable paths as DataError.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace lgw
