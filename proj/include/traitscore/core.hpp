#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "traitscore/result.hpp"

namespace traitscore {

struct Transcript {
  std::string id;
  std::string question_id;
  std::string raw_text;
  std::optional<std::string> cleaned_text;

  std::size_t word_count_raw() const;
  // Cleaned text when present, raw otherwise.
  const std::string& best_text(bool prefer_cleaned) const;
};

struct ScoreDescriptor {
  int level = 0;
  std::string text;
};

struct ScoreScale {
  int min = 1;
  int max = 7;
  std::vector<ScoreDescriptor> descriptors;  // may be empty

  int levels() const { return max - min + 1; }
  bool contains(int score) const { return score >= min && score <= max; }
};

struct Criterion {
  std::string id;
  std::string name;
  std::string description;
  ScoreScale scale;
};

enum class RubricVariant { Full, Reduced };

struct Rubric {
  std::string question_id;
  std::string question_text;
  std::vector<Criterion> criteria;
  RubricVariant variant = RubricVariant::Full;

  const Criterion* find(const std::string& criterion_id) const;
};

struct GoldScores {
  std::string transcript_id;
  std::map<std::string, int> scores;  // criterion_id -> score
};

struct DatasetItem {
  Transcript transcript;
  GoldScores gold;
};

struct Dataset {
  std::string name;
  Rubric rubric;
  std::vector<DatasetItem> items;

  const DatasetItem* find_item(const std::string& transcript_id) const;
  // Stable content hash over rubric + items; ingestion determinism contract.
  std::string fingerprint() const;
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct Violation {
  std::string code;      // "score_out_of_range", "empty_transcript", ...
  std::string item_id;   // transcript or criterion id, may be empty
  std::string message;
};

using ValidationReport = std::vector<Violation>;

// Returns all invariant violations; empty means valid. Never mutates input.
ValidationReport validate_dataset(const Dataset& dataset);

struct SplitResult {
  Dataset train;
  Dataset test;
};

// Deterministic seeded Fisher-Yates shuffle; |train| = round(fraction*n),
// half-up. Items keep dataset order within each side.
Result<SplitResult> split_dataset(const Dataset& dataset,
                                  const SplitSpec& spec);

struct StatsSummary {
  double mean = 0.0;
  double sample_std = 0.0;            // n-1 denominator; 0 when n == 1
  std::map<int, std::size_t> histogram;  // level -> count over full scale
  double avg_word_count = 0.0;
  std::size_t n = 0;
  std::vector<std::string> flags;     // e.g. "n=1"
};

Result<StatsSummary> descriptive_stats(const Dataset& dataset,
                                       const std::string& criterion_id);

// ---- synthetic fixture -----------------------------------------------------
//
// Seeded MMI-shaped dataset: one of four scenario questions, `items`
// responses, nine criteria c2..c10 on a 1..7 scale with scores skewed toward
// 4-6. Transcripts carry filler words and preambles so the preprocessing and
// retrieval paths have something to chew on.

struct FixtureSpec {
  int question = 1;          // 1..4
  std::uint64_t seed = 42;
  std::size_t items = 30;
};

Result<Dataset> make_fixture_dataset(const FixtureSpec& spec);

}  // namespace traitscore
