#include "traitscore/metrics.hpp"

#include <cmath>

namespace traitscore {

Status validate_pairs(const PairedScores& pairs) {
  if (pairs.truth.empty()) {
    return make_error("empty", "paired scores must contain at least one item");
  }
  if (pairs.truth.size() != pairs.pred.size()) {
    return make_error("length_mismatch",
                      "truth has " + std::to_string(pairs.truth.size()) +
                          " items, pred has " +
                          std::to_string(pairs.pred.size()));
  }
  if (pairs.scale.min >= pairs.scale.max) {
    return make_error("invalid_scale", "scale min must be below max");
  }
  for (std::size_t i = 0; i < pairs.truth.size(); ++i) {
    if (!pairs.scale.contains(pairs.truth[i]) ||
        !pairs.scale.contains(pairs.pred[i])) {
      return make_error("out_of_range",
                        "pair " + std::to_string(i) + " outside scale " +
                            std::to_string(pairs.scale.min) + ".." +
                            std::to_string(pairs.scale.max));
    }
  }
  return Status::success();
}

Result<QwkResult> qwk(const PairedScores& pairs) {
  if (Status status = validate_pairs(pairs); !status.ok()) {
    return status.error();
  }
  const int min = pairs.scale.min;
  const int levels = pairs.scale.levels();
  const double n = static_cast<double>(pairs.truth.size());
  const double span = static_cast<double>(levels - 1);
  const double weight_dencom = span * span;

  // Observed weighted disagreement straight off the item pairs.
  double weighted_observed = 0.0;
  std::vector<double> truth_marginal(static_cast<std::size_t>(levels), 0.0);
  std::vector<double> pred_marginal(static_cast<std::size_t>(levels), 0.0);
  bool all_equal = true;
  for (std::size_t k = 0; k < pairs.truth.size(); ++k) {
    const int t = pairs.truth[k];
    const int p = pairs.pred[k];
    const double d = static_cast<double>(t - p);
    weighted_observed += d * d / weight_dencom;
    ++truth_marginal[static_cast<std::size_t>(t - min)];
    ++pred_marginal[static_cast<std::size_t>(p - min)];
    if (t != p) all_equal = false;
  }

  // Expected weighted disagreement from the marginals, E scaled to n.
  double weighted_expected = 0.0;
  for (int i = 0; i < levels; ++i) {
    if (truth_marginal[static_cast<std::size_t>(i)] == 0.0) continue;
    for (int j = 0; j < levels; ++j) {
      const double e = truth_marginal[static_cast<std::size_t>(i)] *
                       pred_marginal[static_cast<std::size_t>(j)] / n;
      const double w =
          static_cast<double>(i - j) * static_cast<double>(i - j) /
          weight_dencom;
      weighted_expected += w * e;
    }
  }

  QwkResult result;
  if (weighted_expected == 0.0) {
    result.degenerate = true;
    result.value = all_equal ? 1.0 : 0.0;
    return result;
  }
  result.value = 1.0 - weighted_observed / weighted_expected;
  return result;
}

Result<double> mse(const PairedScores& pairs) {
  if (Status status = validate_pairs(pairs); !status.ok()) {
    return status.error();
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < pairs.truth.size(); ++i) {
    const double d = static_cast<double>(pairs.pred[i] - pairs.truth[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(pairs.truth.size());
}

Result<std::map<int, std::size_t>> error_distribution(
    const PairedScores& pairs) {
  if (Status status = validate_pairs(pairs); !status.ok()) {
    return status.error();
  }
  std::map<int, std::size_t> histogram;
  for (std::size_t i = 0; i < pairs.truth.size(); ++i) {
    ++histogram[pairs.pred[i] - pairs.truth[i]];
  }
  return histogram;
}

EvalReport summarize_run(
    const std::map<std::string, CriterionPairs>& per_criterion,
    const std::vector<std::string>& criterion_order,
    const std::string& run_id, const std::string& config_fingerprint) {
  EvalReport report;
  report.run_id = run_id;
  report.config_fingerprint = config_fingerprint;
  report.criterion_order = criterion_order;

  double qwk_sum = 0.0;
  double mse_sum = 0.0;
  std::size_t scored = 0;
  for (const auto& [criterion_id, entry] : per_criterion) {
    CriterionMetrics metrics;
    metrics.failed = entry.failed;
    metrics.n = entry.pairs.truth.size();

    auto qwk_result = qwk(entry.pairs);
    auto mse_result = mse(entry.pairs);
    if (!qwk_result.ok() || !mse_result.ok()) {
      metrics.metrics_failed = true;
      metrics.failure = qwk_result.ok() ? mse_result.error().message
                                        : qwk_result.error().message;
      report.per_criterion[criterion_id] = std::move(metrics);
      continue;
    }
    metrics.qwk = qwk_result.value().value;
    metrics.qwk_degenerate = qwk_result.value().degenerate;
    metrics.mse = mse_result.value();
    qwk_sum += metrics.qwk;
    mse_sum += metrics.mse;
    ++scored;

    auto histogram = error_distribution(entry.pairs);
    if (histogram.ok()) {
      for (const auto& [delta, count] : histogram.value()) {
        report.error_histogram[delta] += count;
      }
    }
    report.per_criterion[criterion_id] = std::move(metrics);
  }
  if (scored > 0) {
    report.avg_qwk = qwk_sum / static_cast<double>(scored);
    report.avg_mse = mse_sum / static_cast<double>(scored);
  }
  return report;
}

}  // namespace traitscore
