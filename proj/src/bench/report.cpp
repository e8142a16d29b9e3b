#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "subboot/bench/bench.hpp"

namespace subboot::bench {

namespace {

std::string cell_text(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return format_number(std::get<double>(c));
}

Json cell_json(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return *i;
  const double v = std::get<double>(c);
  if (!std::isfinite(v)) return format_number(v);
  return v;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    }
    return;
  }
  out.emplace_back(prefix, j.is_string() ? j.get<std::string>() : j.dump());
}

}  // namespace

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::Csv;
  if (name == "markdown" || name == "md") return Format::Markdown;
  if (name == "json") return Format::Json;
  throw ConfigError("unknown report format: " + name);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string render_report(const Report& report, Format format) {
  if (report.rows.empty()) throw InvalidArgument("refusing to emit a report with no rows");
  for (const auto& row : report.rows) {
    if (row.size() != report.columns.size()) throw InvalidArgument("report row width does not match its columns");
  }
  std::ostringstream out;
  switch (format) {
    case Format::Json: {
      Json j;
      j["title"] = report.title;
      j["metadata"] = report.metadata;
      j["columns"] = report.columns;
      Json rows = Json::array();
      for (const auto& row : report.rows) {
        Json r = Json::object();
        for (std::size_t c = 0; c < row.size(); ++c) r[report.columns[c]] = cell_json(row[c]);
        rows.push_back(r);
      }
      j["rows"] = rows;
      out << j.dump(2) << "\n";
      break;
    }
    case Format::Csv: {
      std::vector<std::pair<std::string, std::string>> meta;
      flatten(report.metadata, "", meta);
      out << "# " << report.title << "\n";
      for (const auto& [k, v] : meta) out << "# " << k << ": " << v << "\n";
      for (std::size_t c = 0; c < report.columns.size(); ++c) {
        out << (c ? "," : "") << csv_escape(report.columns[c]);
      }
      out << "\n";
      for (const auto& row : report.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << csv_escape(cell_text(row[c]));
        out << "\n";
      }
      break;
    }
    case Format::Markdown: {
      std::vector<std::pair<std::string, std::string>> meta;
      flatten(report.metadata, "", meta);
      out << "# " << report.title << "\n\n";
      for (const auto& [k, v] : meta) out << "- " << k << ": `" << v << "`\n";
      out << "\n|";
      for (const auto& c : report.columns) out << " " << c << " |";
      out << "\n|";
      for (std::size_t c = 0; c < report.columns.size(); ++c) out << " --- |";
      out << "\n";
      for (const auto& row : report.rows) {
        out << "|";
        for (const auto& cell : row) out << " " << cell_text(cell) << " |";
        out << "\n";
      }
      break;
    }
  }
  return out.str();
}

void emit_report(const Report& report, Format format, const std::string& path) {
  const std::string text = render_report(report, format);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << text;
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace subboot::bench
