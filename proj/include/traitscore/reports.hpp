#pragma once

#include <string>
#include <vector>

#include "traitscore/core.hpp"
#include "traitscore/metrics.hpp"
#include "traitscore/result.hpp"

namespace traitscore {

// Per-criterion table, rows = criteria in rubric order + Avg,
// columns = QWK / MSE / n / failed.
std::string report_csv(const EvalReport& report);
std::string report_markdown(const EvalReport& report);

// "delta,count" rows, ascending delta.
std::string error_histogram_csv(const EvalReport& report);

// Canonical JSON for report.json: sorted keys, no wall-clock fields.
std::string report_json(const EvalReport& report);

// Inverse of report_json (usage/extra fields ignored).
Result<EvalReport> parse_report_json(const std::string& json_text);

struct AblationRow {
  std::string label;  // "base", "no_examples", "reduced_rubric"
  EvalReport report;
};

// Trait-column comparison: one row per configuration, one column per
// criterion plus Overall.
std::string ablation_csv(const std::vector<AblationRow>& rows);
std::string ablation_markdown(const std::vector<AblationRow>& rows);

// Per-criterion mean / sample std plus score and word-count averages.
Result<std::string> stats_csv(const Dataset& dataset);

Status write_text_file(const std::string& path, const std::string& content);

}  // namespace traitscore
