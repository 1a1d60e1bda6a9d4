#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "rmr/eval.hpp"

namespace rmr::harness {

enum class ReportFormat { kCsv, kJson, kMarkdown };

/// "csv", "json", "markdown"/"md". Throws kConfiguration otherwise.
ReportFormat parse_report_format(std::string_view text);
/// From the file extension (.csv, .json, .md); kConfiguration if unknown.
ReportFormat report_format_for(const std::filesystem::path& path);

/// A report cell as printed in CSV and markdown: two decimals, or "-" for a
/// category without records.
std::string format_cell(const CategoryCell& cell);

/// One row per report, columns run, k, then NAT SOC LAN TXT IMG NO G1-6
/// G7-12 AVG. JSON additionally carries counts and each run's manifest.
/// Output depends only on the reports, so re-rendering is byte-identical.
std::string render_report(std::span<const CategoryReport> reports, ReportFormat format);

/// Errors: kIoFailure.
void emit_report(std::span<const CategoryReport> reports, ReportFormat format, const std::filesystem::path& path);

}  // namespace rmr::harness
