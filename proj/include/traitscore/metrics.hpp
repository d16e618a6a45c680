#pragma once

#include <map>
#include <string>
#include <vector>

#include "traitscore/core.hpp"
#include "traitscore/result.hpp"

namespace traitscore {

struct PairedScores {
  std::vector<int> truth;
  std::vector<int> pred;
  ScoreScale scale;
};

// nullopt error when lengths mismatch, lists are empty, or a value falls
// outside the scale.
Status validate_pairs(const PairedScores& pairs);

struct QwkResult {
  double value = 0.0;
  // Raised when expected disagreement is zero (both raters constant on the
  // same category); value is then 1.0 for elementwise equality, else 0.0.
  bool degenerate = false;
};

// Cohen's kappa with quadratic weights over the full category range
// scale.min..scale.max:
//   w(i,j) = (i-j)^2 / (max-min)^2
//   QWK    = 1 - sum(w*O) / sum(w*E),  E = outer(marginals)/n
Result<QwkResult> qwk(const PairedScores& pairs);

Result<double> mse(const PairedScores& pairs);

// Histogram of (pred - truth); counts sum to n.
Result<std::map<int, std::size_t>> error_distribution(
    const PairedScores& pairs);

struct CriterionMetrics {
  double qwk = 0.0;
  double mse = 0.0;
  std::size_t n = 0;
  std::size_t failed = 0;
  bool qwk_degenerate = false;
  bool metrics_failed = false;  // validation failed; excluded from averages
  std::string failure;
};

struct EvalReport {
  std::string run_id;
  std::string config_fingerprint;
  std::map<std::string, CriterionMetrics> per_criterion;
  double avg_qwk = 0.0;  // unweighted over non-failed criteria
  double avg_mse = 0.0;
  std::map<int, std::size_t> error_histogram;  // pooled over criteria
  std::vector<std::string> criterion_order;    // rubric order for tables
};

struct CriterionPairs {
  PairedScores pairs;
  std::size_t failed = 0;  // items excluded before metric computation
};

// Computes per-criterion QWK/MSE, unweighted averages and the pooled error
// histogram. A criterion whose pairs fail validation is marked failed and
// excluded from the averages instead of aborting the run.
EvalReport summarize_run(
    const std::map<std::string, CriterionPairs>& per_criterion,
    const std::vector<std::string>& criterion_order,
    const std::string& run_id, const std::string& config_fingerprint);

}  // namespace traitscore
