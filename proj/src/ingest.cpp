#include "lgw/ingest.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace lgw {
namespace {

using ojson = nlohmann::ordered_json;

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string line_error(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  return path.string() + ":" + std::to_string(line) + ": " + what;
}

FactorSchema schema_from_header(const ojson& header) {
  if (!header.is_object() || !header.contains("factors") || !header["factors"].is_object()) {
    throw SchemaError("schema header must be an object with a \"factors\" object");
  }
  std::vector<Factor> factors;
  for (const auto& [name, values] : header["factors"].items()) {
    if (!values.is_array()) throw SchemaError("vocabulary of factor " + name + " is not an array");
    Factor f{name, {}};
    for (const auto& v : values) {
      if (!v.is_string()) throw SchemaError("vocabulary entries of " + name + " must be strings");
      f.values.push_back(v.get<std::string>());
    }
    factors.push_back(std::move(f));
  }
  return FactorSchema(std::move(factors));
}

ojson header_json(const FactorSchema& schema, std::size_t dim) {
  ojson header;
  header["dim"] = dim;
  ojson factors = ojson::object();
  for (const auto& f : schema.factors()) factors[f.name] = f.values;
  header["factors"] = std::move(factors);
  return header;
}

bool parse_count(const std::string& cell, int& out) {
  if (cell.empty() || cell.size() > 9) return false;
  for (char c : cell) {
    if (c < '0' || c > '9') return false;
  }
  out = std::stoi(cell);
  return true;
}

// RFC 4180 style record splitting over the whole file; handles quoted
// fields with embedded commas, quotes and newlines.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool row_has_content = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      row_has_content = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      row_has_content = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (row_has_content || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      row_has_content = false;
    } else {
      field.push_back(c);
      row_has_content = true;
    }
  }
  if (quoted) throw DataError("unterminated quoted CSV field");
  if (row_has_content || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

// Shortest round-trip rendering, matching what the JSON writer emits.
std::string full_precision(double v) {
  return ojson(v).dump();
}

std::string significant(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", kReportDigits, v);
  return buf;
}

}  // namespace

DataFormat infer_data_format(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".jsonl" || ext == ".json") return DataFormat::kJsonl;
  if (ext == ".csv") return DataFormat::kCsv;
  throw DataError("cannot infer dataset format from extension of " + path.string());
}

ReportFormat infer_report_format(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".json") return ReportFormat::kJson;
  if (ext == ".csv") return ReportFormat::kCsv;
  throw DataError("cannot infer report format from extension of " + path.string());
}

LatentDataset load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::optional<FactorSchema> schema;
  std::size_t dim = 0;
  Matrix vectors;
  std::vector<std::int64_t> ids;
  std::vector<std::vector<Label>> labels;
  std::vector<std::string> texts;
  bool any_text = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ojson obj;
    try {
      obj = ojson::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(line_error(path, line_no, std::string("malformed JSON: ") + e.what()));
    }
    if (!schema) {
      if (!obj.is_object() || !obj.contains("dim") || !obj["dim"].is_number_unsigned()) {
        throw DataError(line_error(path, line_no, "header must declare a positive integer \"dim\""));
      }
      dim = obj["dim"].get<std::size_t>();
      if (dim == 0) throw DataError(line_error(path, line_no, "dim must be positive"));
      try {
        schema = schema_from_header(obj);
      } catch (const SchemaError& e) {
        throw SchemaError(line_error(path, line_no, e.what()));
      }
      vectors = Matrix(0, dim);
      continue;
    }
    if (!obj.is_object()) throw DataError(line_error(path, line_no, "record is not an object"));
    if (!obj.contains("id") || !obj["id"].is_number_integer()) {
      throw DataError(line_error(path, line_no, "record needs an integer \"id\""));
    }
    if (!obj.contains("vector") || !obj["vector"].is_array()) {
      throw DataError(line_error(path, line_no, "record needs a \"vector\" array"));
    }
    const auto& vec = obj["vector"];
    if (vec.size() != dim) {
      throw DataError(line_error(path, line_no,
                                 "vector has " + std::to_string(vec.size()) +
                                     " components, expected " + std::to_string(dim)));
    }
    std::vector<double> row(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      if (!vec[d].is_number()) throw DataError(line_error(path, line_no, "non-numeric component"));
      row[d] = vec[d].get<double>();
      if (!std::isfinite(row[d])) {
        throw NumericalError(line_error(path, line_no, "non-finite latent component"));
      }
    }
    std::vector<Label> sample_labels(schema->size());
    if (obj.contains("labels")) {
      const auto& lab = obj["labels"];
      if (!lab.is_object()) throw DataError(line_error(path, line_no, "\"labels\" must be an object"));
      for (const auto& [name, value] : lab.items()) {
        const auto f = schema->find_factor(name);
        if (!f) throw SchemaError(line_error(path, line_no, "label for unknown factor " + name));
        if (value.is_null()) continue;
        if (value.is_string()) {
          const auto v = schema->find_value(*f, value.get<std::string>());
          if (!v) {
            throw SchemaError(line_error(path, line_no, "value " + value.get<std::string>() +
                                                            " not in vocabulary of " + name));
          }
          sample_labels[*f] = Label::categorical(static_cast<int>(*v));
        } else if (value.is_number_integer() && value.get<std::int64_t>() >= 0) {
          sample_labels[*f] = Label::count(value.get<int>());
        } else {
          throw SchemaError(line_error(path, line_no,
                                       "label for " + name + " must be a string or a count"));
        }
      }
    }
    std::string text;
    if (obj.contains("text") && !obj["text"].is_null()) {
      if (!obj["text"].is_string()) throw DataError(line_error(path, line_no, "\"text\" must be a string"));
      text = obj["text"].get<std::string>();
      any_text = true;
    }
    vectors.append_row(row);
    ids.push_back(obj["id"].get<std::int64_t>());
    labels.push_back(std::move(sample_labels));
    texts.push_back(std::move(text));
  }
  if (!schema) throw DataError(path.string() + ": missing header line");
  if (ids.empty()) throw DataError(path.string() + ": no records");
  if (!any_text) texts.clear();
  try {
    return LatentDataset(std::move(*schema), std::move(vectors), std::move(ids), std::move(labels),
                         std::move(texts));
  } catch (const InvalidArgument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_jsonl(const LatentDataset& ds, const std::filesystem::path& path) {
  std::ostringstream out;
  out << header_json(ds.schema(), ds.dim()).dump() << '\n';
  const auto& schema = ds.schema();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ojson rec;
    rec["id"] = ds.id(i);
    auto v = ds.vector(i);
    rec["vector"] = std::vector<double>(v.begin(), v.end());
    ojson labels = ojson::object();
    for (std::size_t f = 0; f < schema.size(); ++f) {
      const Label& l = ds.label(i, f);
      if (l.kind == LabelKind::kCategorical) {
        labels[schema.factor(f).name] = schema.factor(f).values[static_cast<std::size_t>(l.value)];
      } else if (l.kind == LabelKind::kCount) {
        labels[schema.factor(f).name] = l.value;
      }
    }
    rec["labels"] = std::move(labels);
    if (ds.has_text()) rec["text"] = ds.text(i);
    out << rec.dump() << '\n';
  }
  write_text_file(path, out.str());
}

LatentDataset load_csv(const std::filesystem::path& path,
                       const std::optional<FactorSchema>& schema) {
  const auto rows = parse_csv(read_file(path));
  if (rows.empty()) throw DataError(path.string() + ": empty CSV");
  const auto& header = rows.front();
  if (header.empty() || header[0] != "id") throw DataError(path.string() + ": first column must be id");
  std::size_t dim = 0;
  while (1 + dim < header.size() && header[1 + dim] == "z" + std::to_string(dim)) ++dim;
  if (dim == 0) throw DataError(path.string() + ": no latent columns z0..");
  std::vector<std::string> factor_names(header.begin() + static_cast<std::ptrdiff_t>(1 + dim),
                                        header.end());

  std::vector<Factor> collected;
  std::vector<std::size_t> column_factor(factor_names.size());
  if (schema) {
    for (std::size_t c = 0; c < factor_names.size(); ++c) {
      const auto f = schema->find_factor(factor_names[c]);
      if (!f) throw SchemaError(path.string() + ": column " + factor_names[c] + " is not a schema factor");
      column_factor[c] = *f;
    }
  } else {
    for (std::size_t c = 0; c < factor_names.size(); ++c) {
      collected.push_back({factor_names[c], {}});
      column_factor[c] = c;
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < factor_names.size() && 1 + dim + c < rows[r].size(); ++c) {
        const std::string& cell = rows[r][1 + dim + c];
        int count = 0;
        if (cell.empty() || parse_count(cell, count)) continue;
        auto& values = collected[c].values;
        if (std::find(values.begin(), values.end(), cell) == values.end()) values.push_back(cell);
      }
    }
    // Count-only columns still need a non-empty vocabulary.
    for (auto& f : collected) {
      if (f.values.empty()) f.values.push_back("present");
    }
  }
  FactorSchema resolved = schema ? *schema : FactorSchema(std::move(collected));

  Matrix vectors(0, dim);
  std::vector<std::int64_t> ids;
  std::vector<std::vector<Label>> labels;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t line = r + 1;
    if (row.size() != header.size()) {
      throw DataError(line_error(path, line, "ragged row: " + std::to_string(row.size()) +
                                                 " cells, expected " + std::to_string(header.size())));
    }
    try {
      std::size_t used = 0;
      ids.push_back(std::stoll(row[0], &used));
      if (used != row[0].size()) throw std::invalid_argument("id");
    } catch (const std::exception&) {
      throw DataError(line_error(path, line, "non-integer id " + row[0]));
    }
    std::vector<double> values(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      const std::string& cell = row[1 + d];
      try {
        std::size_t used = 0;
        values[d] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw DataError(line_error(path, line, "non-numeric latent cell '" + cell + "'"));
      }
      if (!std::isfinite(values[d])) throw NumericalError(line_error(path, line, "non-finite latent component"));
    }
    vectors.append_row(values);
    std::vector<Label> sample(resolved.size());
    for (std::size_t c = 0; c < factor_names.size(); ++c) {
      const std::string& cell = row[1 + dim + c];
      if (cell.empty()) continue;
      const std::size_t f = column_factor[c];
      int count = 0;
      if (auto v = resolved.find_value(f, cell)) {
        sample[f] = Label::categorical(static_cast<int>(*v));
      } else if (parse_count(cell, count)) {
        sample[f] = Label::count(count);
      } else {
        throw SchemaError(line_error(path, line, "value " + cell + " not in vocabulary of " +
                                                     resolved.factor(f).name));
      }
    }
    labels.push_back(std::move(sample));
  }
  if (ids.empty()) throw DataError(path.string() + ": no records");
  return LatentDataset(std::move(resolved), std::move(vectors), std::move(ids), std::move(labels));
}

void save_csv(const LatentDataset& ds, const std::filesystem::path& path) {
  std::ostringstream out;
  const auto& schema = ds.schema();
  out << "id";
  for (std::size_t d = 0; d < ds.dim(); ++d) out << ",z" << d;
  for (const auto& f : schema.factors()) out << ',' << csv_escape(f.name);
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.id(i);
    for (double x : ds.vector(i)) out << ',' << full_precision(x);
    for (std::size_t f = 0; f < schema.size(); ++f) {
      out << ',';
      const Label& l = ds.label(i, f);
      if (l.kind == LabelKind::kCategorical) {
        out << csv_escape(schema.factor(f).values[static_cast<std::size_t>(l.value)]);
      } else if (l.kind == LabelKind::kCount) {
        out << l.value;
      }
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

LatentDataset load_dataset(const std::filesystem::path& path, std::optional<DataFormat> format,
                           const std::optional<FactorSchema>& schema) {
  const DataFormat fmt = format.value_or(infer_data_format(path));
  if (fmt == DataFormat::kCsv) return load_csv(path, schema);
  LatentDataset ds = load_jsonl(path);
  if (schema && !(ds.schema() == *schema)) {
    throw SchemaError(path.string() + ": header schema differs from the supplied schema");
  }
  return ds;
}

void save_dataset(const LatentDataset& ds, const std::filesystem::path& path,
                  std::optional<DataFormat> format) {
  const DataFormat fmt = format.value_or(infer_data_format(path));
  if (fmt == DataFormat::kCsv) save_csv(ds, path);
  else save_jsonl(ds, path);
}

FactorSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string first;
  std::getline(in, first);
  ojson header;
  try {
    header = ojson::parse(first);
  } catch (const nlohmann::json::exception&) {
    try {
      header = ojson::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ": malformed schema JSON: " + e.what());
    }
  }
  return schema_from_header(header);
}

double round_significant(double value, int digits) {
  if (value == 0.0 || !std::isfinite(value)) return value;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, value);
  return std::strtod(buf, nullptr);
}

std::string render_report(const MetricReport& report, ReportFormat format) {
  for (const auto& [name, v] : report.scalars()) {
    if (!std::isfinite(v)) throw NumericalError("report value " + name + " is not finite");
  }
  if (format == ReportFormat::kJson) {
    ojson doc;
    ojson metrics = ojson::object();
    for (const auto& [name, v] : report.scalars()) metrics[name] = round_significant(v);
    doc["metrics"] = std::move(metrics);
    ojson tables = ojson::object();
    for (const auto& t : report.tables()) {
      ojson tj;
      tj["rows"] = t.row_labels;
      tj["columns"] = t.column_labels;
      ojson values = ojson::array();
      for (std::size_t r = 0; r < t.values.rows(); ++r) {
        ojson row = ojson::array();
        for (double x : t.values.row(r)) row.push_back(round_significant(x));
        values.push_back(std::move(row));
      }
      tj["values"] = std::move(values);
      tables[t.name] = std::move(tj);
    }
    doc["tables"] = std::move(tables);
    ojson config = ojson::object();
    for (const auto& [k, v] : report.config_entries()) config[k] = v;
    doc["config"] = std::move(config);
    doc["warnings"] = report.warnings();
    return doc.dump(2) + "\n";
  }
  std::ostringstream out;
  out << "kind,name,row,column,value\n";
  for (const auto& [name, v] : report.scalars()) {
    out << "metric," << csv_escape(name) << ",,," << significant(v) << '\n';
  }
  for (const auto& t : report.tables()) {
    for (std::size_t r = 0; r < t.values.rows(); ++r) {
      for (std::size_t c = 0; c < t.values.cols(); ++c) {
        out << "table," << csv_escape(t.name) << ',' << csv_escape(t.row_labels.at(r)) << ','
            << csv_escape(t.column_labels.at(c)) << ',' << significant(t.values(r, c)) << '\n';
      }
    }
  }
  for (const auto& [k, v] : report.config_entries()) {
    out << "config," << csv_escape(k) << ",,," << csv_escape(v) << '\n';
  }
  for (const auto& w : report.warnings()) out << "warning,,,," << csv_escape(w) << '\n';
  return out.str();
}

void save_report(const MetricReport& report, const std::filesystem::path& path,
                 ReportFormat format) {
  write_text_file(path, render_report(report, format));
}

MetricReport load_report(const std::filesystem::path& path, ReportFormat format) {
  MetricReport report;
  const std::string text = read_file(path);
  if (format == ReportFormat::kJson) {
    ojson doc;
    try {
      doc = ojson::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ": malformed report JSON: " + e.what());
    }
    for (const auto& [name, v] : doc.at("metrics").items()) report.set(name, v.get<double>());
    if (doc.contains("tables")) {
      for (const auto& [name, tj] : doc["tables"].items()) {
        ReportTable t;
        t.name = name;
        t.row_labels = tj.at("rows").get<std::vector<std::string>>();
        t.column_labels = tj.at("columns").get<std::vector<std::string>>();
        t.values = Matrix(t.row_labels.size(), t.column_labels.size());
        const auto& values = tj.at("values");
        for (std::size_t r = 0; r < t.values.rows(); ++r) {
          for (std::size_t c = 0; c < t.values.cols(); ++c) t.values(r, c) = values.at(r).at(c).get<double>();
        }
        report.add_table(std::move(t));
      }
    }
    if (doc.contains("config")) {
      for (const auto& [k, v] : doc["config"].items()) report.set_config(k, v.get<std::string>());
    }
    if (doc.contains("warnings")) {
      for (const auto& w : doc["warnings"]) report.warn(w.get<std::string>());
    }
    return report;
  }
  const auto rows = parse_csv(text);
  std::vector<ReportTable> tables;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 5) throw DataError(line_error(path, r + 1, "report rows have 5 cells"));
    if (row[0] == "metric") {
      report.set(row[1], std::stod(row[4]));
    } else if (row[0] == "table") {
      auto it = std::find_if(tables.begin(), tables.end(),
                             [&](const ReportTable& t) { return t.name == row[1]; });
      if (it == tables.end()) {
        tables.push_back(ReportTable{row[1], {}, {}, {}});
        it = tables.end() - 1;
      }
      if (std::find(it->row_labels.begin(), it->row_labels.end(), row[2]) == it->row_labels.end()) {
        it->row_labels.push_back(row[2]);
      }
      if (std::find(it->column_labels.begin(), it->column_labels.end(), row[3]) ==
          it->column_labels.end()) {
        it->column_labels.push_back(row[3]);
      }
    } else if (row[0] == "config") {
      report.set_config(row[1], row[4]);
    } else if (row[0] == "warning") {
      report.warn(row[4]);
    }
  }
  // Second pass fills table values now that the label sets are known.
  for (auto& t : tables) t.values = Matrix(t.row_labels.size(), t.column_labels.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row[0] != "table") continue;
    auto& t = *std::find_if(tables.begin(), tables.end(),
                            [&](const ReportTable& x) { return x.name == row[1]; });
    const auto ri = static_cast<std::size_t>(
        std::find(t.row_labels.begin(), t.row_labels.end(), row[2]) - t.row_labels.begin());
    const auto ci = static_cast<std::size_t>(
        std::find(t.column_labels.begin(), t.column_labels.end(), row[3]) - t.column_labels.begin());
    t.values(ri, ci) = std::stod(row[4]);
  }
  for (auto& t : tables) report.add_table(std::move(t));
  return report;
}

std::string content_hash(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace lgw
