#include "traitscore/exemplars.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace traitscore {

const char* tier_name(Tier tier) {
  switch (tier) {
    case Tier::Low: return "low";
    case Tier::Medium: return "medium";
    case Tier::High: return "high";
  }
  return "medium";
}

Result<Tier> tier_from_name(const std::string& name) {
  if (name == "low" || name == "Low" || name == "L") return Tier::Low;
  if (name == "medium" || name == "Medium" || name == "M") return Tier::Medium;
  if (name == "high" || name == "High" || name == "H") return Tier::High;
  return make_error("config", "unknown tier '" + name + "'");
}

int tier_percentile(Tier tier) {
  switch (tier) {
    case Tier::Low: return 5;
    case Tier::Medium: return 50;
    case Tier::High: return 95;
  }
  return 50;
}

Status validate_shot_config(const ShotConfig& config) {
  if (config.tiers.size() > 5) {
    return make_error("config", "shot configs above 5 examples are untested");
  }
  return Status::success();
}

Result<ExemplarBank> build_bank(const Dataset& train,
                                const std::string& criterion_id) {
  if (train.items.empty()) {
    return make_error("empty_train", "cannot build bank from empty train set");
  }
  if (!train.rubric.find(criterion_id)) {
    return make_error("unknown_criterion",
                      "no criterion '" + criterion_id + "' in rubric");
  }
  ExemplarBank bank;
  bank.criterion_id = criterion_id;
  for (const auto& item : train.items) {
    auto it = item.gold.scores.find(criterion_id);
    if (it == item.gold.scores.end()) {
      return make_error("missing_score", "transcript '" + item.transcript.id +
                                             "' lacks a score for " +
                                             criterion_id);
    }
    bank.ranked.emplace_back(item.transcript.id, it->second);
  }
  std::sort(bank.ranked.begin(), bank.ranked.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second < b.second;
              return a.first < b.first;
            });
  return bank;
}

std::size_t nearest_rank(int percentile, std::size_t n) {
  const double raw =
      std::ceil(static_cast<double>(percentile) * static_cast<double>(n) /
                100.0);
  auto rank = static_cast<std::size_t>(raw);
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return rank;
}

Result<std::vector<Exemplar>> select_exemplars(const ExemplarBank& bank,
                                               const ShotConfig& config,
                                               const Dataset& train,
                                               bool use_cleaned_text) {
  if (bank.ranked.empty()) {
    return make_error("empty_bank", "exemplar bank is empty");
  }
  if (Status status = validate_shot_config(config); !status.ok()) {
    return status.error();
  }

  const std::size_t n = bank.ranked.size();
  std::map<Tier, std::size_t> occurrences;
  std::vector<Exemplar> selected;
  selected.reserve(config.tiers.size());
  for (Tier tier : config.tiers) {
    std::size_t rank = nearest_rank(tier_percentile(tier), n);
    rank += occurrences[tier]++;  // adjacent rank for repeated tiers
    if (rank > n) rank = n;

    const auto& [transcript_id, score] = bank.ranked[rank - 1];
    const DatasetItem* item = train.find_item(transcript_id);
    if (!item) {
      return make_error("missing_transcript",
                        "bank references unknown transcript '" +
                            transcript_id + "'");
    }
    Exemplar exemplar;
    exemplar.transcript_id = transcript_id;
    exemplar.text = item->transcript.best_text(use_cleaned_text);
    exemplar.criterion_id = bank.criterion_id;
    exemplar.score = score;
    exemplar.tier = tier;
    selected.push_back(std::move(exemplar));
  }
  return selected;
}

int TierAnchors::score_of(Tier tier) const {
  switch (tier) {
    case Tier::Low: return low;
    case Tier::Medium: return medium;
    case Tier::High: return high;
  }
  return medium;
}

Result<TierAnchors> bank_anchors(const ExemplarBank& bank) {
  if (bank.ranked.empty()) {
    return make_error("empty_bank", "exemplar bank is empty");
  }
  const std::size_t n = bank.ranked.size();
  TierAnchors anchors;
  anchors.low = bank.ranked[nearest_rank(5, n) - 1].second;
  anchors.medium = bank.ranked[nearest_rank(50, n) - 1].second;
  anchors.high = bank.ranked[nearest_rank(95, n) - 1].second;
  return anchors;
}

Tier assign_tier(int score, const TierAnchors& anchors) {
  const int dl = std::abs(score - anchors.low);
  const int dm = std::abs(score - anchors.medium);
  const int dh = std::abs(score - anchors.high);
  // Medium wins all ties it participates in; a strict Low/High tie with
  // Medium farther away cannot occur for ordered anchors.
  if (dm <= dl && dm <= dh) return Tier::Medium;
  if (dl <= dh) return Tier::Low;
  return Tier::High;
}

}  // namespace traitscore
