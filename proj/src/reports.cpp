#include "traitscore/reports.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace traitscore {

using nlohmann::json;

namespace {

std::string fixed3(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", value);
  return std::string(buf);
}

const CriterionMetrics* find_metrics(const EvalReport& report,
                                     const std::string& criterion_id) {
  auto it = report.per_criterion.find(criterion_id);
  return it == report.per_criterion.end() ? nullptr : &it->second;
}

}  // namespace

std::string report_csv(const EvalReport& report) {
  std::string out = "criterion,qwk,mse,n,failed\n";
  for (const auto& criterion_id : report.criterion_order) {
    const CriterionMetrics* metrics = find_metrics(report, criterion_id);
    if (!metrics) continue;
    out += criterion_id + ",";
    if (metrics->metrics_failed) {
      out += "failed,failed,";
    } else {
      out += fixed3(metrics->qwk) + "," + fixed3(metrics->mse) + ",";
    }
    out += std::to_string(metrics->n) + "," + std::to_string(metrics->failed) +
           "\n";
  }
  out += "Avg," + fixed3(report.avg_qwk) + "," + fixed3(report.avg_mse) + ",,\n";
  return out;
}

std::string report_markdown(const EvalReport& report) {
  std::string out = "| Criterion | QWK | MSE | n | failed |\n";
  out += "|---|---|---|---|---|\n";
  for (const auto& criterion_id : report.criterion_order) {
    const CriterionMetrics* metrics = find_metrics(report, criterion_id);
    if (!metrics) continue;
    out += "| " + criterion_id + " | ";
    if (metrics->metrics_failed) {
      out += "failed | failed | ";
    } else {
      out += fixed3(metrics->qwk) + " | " + fixed3(metrics->mse) + " | ";
    }
    out += std::to_string(metrics->n) + " | " + std::to_string(metrics->failed) +
           " |\n";
  }
  out += "| **Avg** | " + fixed3(report.avg_qwk) + " | " +
         fixed3(report.avg_mse) + " | | |\n";
  return out;
}

std::string error_histogram_csv(const EvalReport& report) {
  std::string out = "delta,count\n";
  for (const auto& [delta, count] : report.error_histogram) {
    out += std::to_string(delta) + "," + std::to_string(count) + "\n";
  }
  return out;
}

std::string report_json(const EvalReport& report) {
  json per_criterion = json::object();
  for (const auto& [criterion_id, metrics] : report.per_criterion) {
    json entry = {
        {"n", metrics.n},
        {"failed", metrics.failed},
    };
    if (metrics.metrics_failed) {
      entry["metrics_failed"] = true;
      entry["failure"] = metrics.failure;
    } else {
      entry["qwk"] = metrics.qwk;
      entry["mse"] = metrics.mse;
      if (metrics.qwk_degenerate) entry["qwk_degenerate"] = true;
    }
    per_criterion[criterion_id] = std::move(entry);
  }
  json histogram = json::object();
  for (const auto& [delta, count] : report.error_histogram) {
    histogram[std::to_string(delta)] = count;
  }
  const json root = {
      {"run_id", report.run_id},
      {"config_fingerprint", report.config_fingerprint},
      {"criterion_order", report.criterion_order},
      {"per_criterion", per_criterion},
      {"averages", {{"qwk", report.avg_qwk}, {"mse", report.avg_mse}}},
      {"error_histogram", histogram},
  };
  return root.dump(2);
}

Result<EvalReport> parse_report_json(const std::string& json_text) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) {
    return make_error("io", "report is not valid JSON");
  }
  EvalReport report;
  report.run_id = root.value("run_id", "");
  report.config_fingerprint = root.value("config_fingerprint", "");
  if (root.contains("criterion_order")) {
    report.criterion_order =
        root["criterion_order"].get<std::vector<std::string>>();
  }
  if (root.contains("per_criterion")) {
    for (const auto& [criterion_id, entry] : root["per_criterion"].items()) {
      CriterionMetrics metrics;
      metrics.n = entry.value("n", 0U);
      metrics.failed = entry.value("failed", 0U);
      if (entry.value("metrics_failed", false)) {
        metrics.metrics_failed = true;
        metrics.failure = entry.value("failure", "");
      } else {
        metrics.qwk = entry.value("qwk", 0.0);
        metrics.mse = entry.value("mse", 0.0);
        metrics.qwk_degenerate = entry.value("qwk_degenerate", false);
      }
      report.per_criterion[criterion_id] = std::move(metrics);
    }
  }
  if (root.contains("averages")) {
    report.avg_qwk = root["averages"].value("qwk", 0.0);
    report.avg_mse = root["averages"].value("mse", 0.0);
  }
  if (root.contains("error_histogram")) {
    for (const auto& [delta, count] : root["error_histogram"].items()) {
      report.error_histogram[std::stoi(delta)] = count.get<std::size_t>();
    }
  }
  return report;
}

namespace {

std::vector<std::string> ablation_columns(const std::vector<AblationRow>& rows) {
  // Criterion order comes from the first row; all rows share a rubric.
  if (rows.empty()) return {};
  return rows.front().report.criterion_order;
}

}  // namespace

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  const auto columns = ablation_columns(rows);
  std::string out = "configuration";
  for (const auto& criterion_id : columns) out += "," + criterion_id;
  out += ",overall\n";
  for (const auto& row : rows) {
    out += row.label;
    for (const auto& criterion_id : columns) {
      const CriterionMetrics* metrics = find_metrics(row.report, criterion_id);
      out += ",";
      out += (metrics && !metrics->metrics_failed) ? fixed3(metrics->qwk)
                                                   : "failed";
    }
    out += "," + fixed3(row.report.avg_qwk) + "\n";
  }
  return out;
}

std::string ablation_markdown(const std::vector<AblationRow>& rows) {
  const auto columns = ablation_columns(rows);
  std::string out = "| Configuration |";
  for (const auto& criterion_id : columns) out += " " + criterion_id + " |";
  out += " Overall |\n|---|";
  for (std::size_t i = 0; i < columns.size(); ++i) out += "---|";
  out += "---|\n";
  for (const auto& row : rows) {
    out += "| " + row.label + " |";
    for (const auto& criterion_id : columns) {
      const CriterionMetrics* metrics = find_metrics(row.report, criterion_id);
      out += " ";
      out += (metrics && !metrics->metrics_failed) ? fixed3(metrics->qwk)
                                                   : "failed";
      out += " |";
    }
    out += " " + fixed3(row.report.avg_qwk) + " |\n";
  }
  return out;
}

Result<std::string> stats_csv(const Dataset& dataset) {
  std::string out = "criterion,mean,sample_std,n\n";
  double mean_sum = 0.0;
  double std_sum = 0.0;
  double words = 0.0;
  for (const auto& criterion : dataset.rubric.criteria) {
    auto stats = descriptive_stats(dataset, criterion.id);
    if (!stats.ok()) return stats.error();
    out += criterion.id + "," + fixed3(stats.value().mean) + "," +
           fixed3(stats.value().sample_std) + "," +
           std::to_string(stats.value().n) + "\n";
    mean_sum += stats.value().mean;
    std_sum += stats.value().sample_std;
    words = stats.value().avg_word_count;
  }
  const double k = static_cast<double>(dataset.rubric.criteria.size());
  out += "score_avg," + fixed3(mean_sum / k) + "," + fixed3(std_sum / k) + "," +
         std::to_string(dataset.items.size()) + "\n";
  out += "word_length_avg," + fixed3(words) + ",,\n";
  return out;
}

Status write_text_file(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    return make_error("io", "cannot write '" + path + "'");
  }
  out << content;
  return Status::success();
}

}  // namespace traitscore
