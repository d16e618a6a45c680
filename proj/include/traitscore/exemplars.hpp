#pragma once

#include <string>
#include <vector>

#include "traitscore/core.hpp"
#include "traitscore/result.hpp"

namespace traitscore {

// Percentile anchors: Low=5th, Medium=50th, High=95th of the training pool.
enum class Tier { Low, Medium, High };

const char* tier_name(Tier tier);
Result<Tier> tier_from_name(const std::string& name);
int tier_percentile(Tier tier);

struct ShotConfig {
  std::vector<Tier> tiers;  // length 0..5, prompt order
};

Status validate_shot_config(const ShotConfig& config);

struct Exemplar {
  std::string transcript_id;
  std::string text;  // cleaned when available and requested, else raw
  std::string criterion_id;
  int score = 0;
  Tier tier = Tier::Medium;
};

struct ExemplarBank {
  std::string criterion_id;
  // Ascending by (score, transcript_id); ties broken by id for determinism.
  std::vector<std::pair<std::string, int>> ranked;
};

// Nearest-rank percentile index: ceil(p*n/100), 1-based, clamped to [1,n].
std::size_t nearest_rank(int percentile, std::size_t n);

Result<ExemplarBank> build_bank(const Dataset& train,
                                const std::string& criterion_id);

// Nearest-rank percentile pick: k = ceil(p*n/100), 1-based, clamped to [1,n].
// Repeated tiers take successive adjacent ranks (k, k+1, ...) so distinct
// transcripts are used whenever the bank allows. Output preserves config
// order. `use_cleaned_text` selects cleaned_text when a transcript has one.
Result<std::vector<Exemplar>> select_exemplars(const ExemplarBank& bank,
                                               const ShotConfig& config,
                                               const Dataset& train,
                                               bool use_cleaned_text);

struct TierAnchors {
  int low = 0;
  int medium = 0;
  int high = 0;

  int score_of(Tier tier) const;
};

// Anchors are the bank's current L/M/H exemplar scores.
Result<TierAnchors> bank_anchors(const ExemplarBank& bank);

// Tier whose anchor score is nearest; ties break toward Medium.
Tier assign_tier(int score, const TierAnchors& anchors);

}  // namespace traitscore
