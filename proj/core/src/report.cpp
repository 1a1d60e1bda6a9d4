#include "rmr/report.hpp"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

#include "rmr/error.hpp"

namespace rmr::harness {
namespace {

using json = nlohmann::ordered_json;

std::vector<std::string> row_cells(const CategoryReport& report) {
  std::vector<std::string> cells{report.label, std::to_string(report.k_used)};
  for (Category c : kReportColumns) {
    cells.push_back(format_cell(report.cell(c)));
  }
  return cells;
}

std::vector<std::string> header_cells() {
  std::vector<std::string> cells{"run", "k"};
  for (Category c : kReportColumns) {
    cells.emplace_back(to_string(c));
  }
  return cells;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join(const std::vector<std::string>& cells, const std::string& sep, bool csv) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out += sep;
    out += csv ? csv_field(cells[i]) : cells[i];
  }
  return out;
}

json manifest_json(const RunManifest& m) {
  return json{
      {"endpoint", m.endpoint},   {"model", m.model},         {"library_hash", m.library_hash},
      {"encoder_tag", m.encoder_tag}, {"seed", m.seed},       {"scoring", m.scoring},
      {"exclusion", m.exclusion}, {"modality", m.modality},   {"notes", m.notes},
  };
}

std::string render_json(std::span<const CategoryReport> reports) {
  json runs = json::array();
  for (const auto& r : reports) {
    json categories = json::object();
    for (Category c : kReportColumns) {
      const auto& cell = r.cell(c);
      const auto acc = cell.accuracy();
      categories[std::string(to_string(c))] = {
          {"accuracy", acc ? json(*acc) : json(nullptr)},
          {"correct", cell.correct},
          {"total", cell.total},
      };
    }
    runs.push_back({{"run", r.label},
                    {"k", r.k_used},
                    {"records", r.record_count()},
                    {"categories", std::move(categories)},
                    {"manifest", manifest_json(r.manifest)}});
  }
  return json{{"reports", std::move(runs)}}.dump(2) + "\n";
}

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::kCsv;
  if (text == "json") return ReportFormat::kJson;
  if (text == "markdown" || text == "md") return ReportFormat::kMarkdown;
  throw Error(ErrorCode::kConfiguration, "unknown report format '" + std::string(text) + "' (csv, json, markdown)");
}

ReportFormat report_format_for(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext.size() > 1) return parse_report_format(ext.substr(1));
  throw Error(ErrorCode::kConfiguration, "cannot infer report format from '" + path.string() + "'");
}

std::string format_cell(const CategoryCell& cell) {
  const auto acc = cell.accuracy();
  if (!acc) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *acc);
  return buf;
}

std::string render_report(std::span<const CategoryReport> reports, ReportFormat format) {
  std::string out;
  switch (format) {
    case ReportFormat::kCsv:
      out += join(header_cells(), ",", true) + "\n";
      for (const auto& r : reports) out += join(row_cells(r), ",", true) + "\n";
      return out;
    case ReportFormat::kMarkdown: {
      const auto header = header_cells();
      out += "| " + join(header, " | ", false) + " |\n|";
      for (std::size_t i = 0; i < header.size(); ++i) out += i < 2 ? " --- |" : " ---: |";
      out += "\n";
      for (const auto& r : reports) out += "| " + join(row_cells(r), " | ", false) + " |\n";
      return out;
    }
    case ReportFormat::kJson:
      return render_json(reports);
  }
  return out;
}

void emit_report(std::span<const CategoryReport> reports, ReportFormat format, const std::filesystem::path& path) {
  const std::string text = render_report(reports, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIoFailure, "cannot open report file " + path.string());
  }
  out << text;
  if (!out) {
    throw Error(ErrorCode::kIoFailure, "write to " + path.string() + " failed");
  }
}

}  // namespace rmr::harness
