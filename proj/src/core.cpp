#include "traitscore/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "traitscore/hashing.hpp"
#include "traitscore/rng.hpp"
#include "traitscore/text.hpp"

namespace traitscore {

std::size_t Transcript::word_count_raw() const { return word_count(raw_text); }

const std::string& Transcript::best_text(bool prefer_cleaned) const {
  if (prefer_cleaned && cleaned_text && !cleaned_text->empty()) {
    return *cleaned_text;
  }
  return raw_text;
}

const Criterion* Rubric::find(const std::string& criterion_id) const {
  for (const auto& criterion : criteria) {
    if (criterion.id == criterion_id) return &criterion;
  }
  return nullptr;
}

const DatasetItem* Dataset::find_item(const std::string& transcript_id) const {
  for (const auto& item : items) {
    if (item.transcript.id == transcript_id) return &item;
  }
  return nullptr;
}

std::string Dataset::fingerprint() const {
  StableHash hash;
  hash.field(name).field(rubric.question_id).field(rubric.question_text);
  hash.field(rubric.variant == RubricVariant::Reduced ? "reduced" : "full");
  for (const auto& criterion : rubric.criteria) {
    hash.field(criterion.id)
        .field(criterion.name)
        .field(criterion.description)
        .field(std::to_string(criterion.scale.min))
        .field(std::to_string(criterion.scale.max));
    for (const auto& descriptor : criterion.scale.descriptors) {
      hash.field(std::to_string(descriptor.level)).field(descriptor.text);
    }
  }
  for (const auto& item : items) {
    hash.field(item.transcript.id)
        .field(item.transcript.question_id)
        .field(item.transcript.raw_text)
        .field(item.transcript.cleaned_text.value_or(""));
    for (const auto& [cid, score] : item.gold.scores) {
      hash.field(cid).field(std::to_string(score));
    }
  }
  return hash.hex();
}

ValidationReport validate_dataset(const Dataset& dataset) {
  ValidationReport report;
  auto add = [&report](std::string code, std::string item_id,
                       std::string message) {
    report.push_back({std::move(code), std::move(item_id), std::move(message)});
  };

  std::set<std::string> criterion_ids;
  for (const auto& criterion : dataset.rubric.criteria) {
    if (!criterion_ids.insert(criterion.id).second) {
      add("duplicate_criterion", criterion.id,
          "criterion id appears more than once in rubric");
    }
    const ScoreScale& scale = criterion.scale;
    if (scale.min >= scale.max) {
      add("invalid_scale", criterion.id,
          "scale min must be strictly below max");
    }
    if (!scale.descriptors.empty()) {
      std::set<int> levels;
      for (const auto& descriptor : scale.descriptors) {
        if (!levels.insert(descriptor.level).second) {
          add("duplicate_descriptor_level", criterion.id,
              "descriptor level " + std::to_string(descriptor.level) +
                  " repeated");
        }
      }
      for (int level = scale.min; level <= scale.max; ++level) {
        if (!levels.count(level)) {
          add("missing_descriptor_level", criterion.id,
              "no descriptor for level " + std::to_string(level));
        }
      }
      for (int level : levels) {
        if (level < scale.min || level > scale.max) {
          add("descriptor_out_of_scale", criterion.id,
              "descriptor level " + std::to_string(level) + " outside scale");
        }
      }
    }
  }
  if (dataset.rubric.criteria.empty()) {
    add("empty_rubric", "", "rubric has no criteria");
  }

  std::unordered_set<std::string> transcript_ids;
  for (const auto& item : dataset.items) {
    const Transcript& transcript = item.transcript;
    if (!transcript_ids.insert(transcript.id).second) {
      add("duplicate_transcript", transcript.id, "transcript id not unique");
    }
    if (trim(transcript.raw_text).empty()) {
      add("empty_transcript", transcript.id,
          "raw_text empty after whitespace trim");
    }
    if (transcript.cleaned_text && trim(*transcript.cleaned_text).empty()) {
      add("empty_cleaned_text", transcript.id,
          "cleaned_text present but empty");
    }
    if (item.gold.transcript_id != transcript.id) {
      add("gold_mismatch", transcript.id,
          "gold scores reference transcript '" + item.gold.transcript_id +
              "'");
    }
    for (const auto& criterion : dataset.rubric.criteria) {
      auto it = item.gold.scores.find(criterion.id);
      if (it == item.gold.scores.end()) {
        add("missing_score", transcript.id,
            "no gold score for criterion " + criterion.id);
      } else if (!criterion.scale.contains(it->second)) {
        add("score_out_of_range", transcript.id,
            "score " + std::to_string(it->second) + " for " + criterion.id +
                " outside scale " + std::to_string(criterion.scale.min) + ".." +
                std::to_string(criterion.scale.max));
      }
    }
    for (const auto& [cid, score] : item.gold.scores) {
      if (!criterion_ids.count(cid)) {
        add("unknown_criterion_score", transcript.id,
            "gold score for unknown criterion " + cid);
      }
    }
  }
  return report;
}

Result<SplitResult> split_dataset(const Dataset& dataset,
                                  const SplitSpec& spec) {
  const std::size_t n = dataset.items.size();
  if (n < 2) {
    return make_error("too_small", "dataset too small to split");
  }
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    return make_error("config", "train_fraction must lie in (0,1)");
  }
  // Half-up rounding of fraction*n, per the documented contract.
  const std::size_t train_size = static_cast<std::size_t>(
      std::floor(spec.train_fraction * static_cast<double>(n) + 0.5));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  SeededRng rng(spec.seed);
  rng.shuffle(order);

  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < train_size && i < n; ++i) in_train[order[i]] = true;

  SplitResult split;
  split.train.name = dataset.name + ".train";
  split.train.rubric = dataset.rubric;
  split.test.name = dataset.name + ".test";
  split.test.rubric = dataset.rubric;
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? split.train : split.test).items.push_back(dataset.items[i]);
  }
  return split;
}

Result<StatsSummary> descriptive_stats(const Dataset& dataset,
                                       const std::string& criterion_id) {
  const Criterion* criterion = dataset.rubric.find(criterion_id);
  if (!criterion) {
    return make_error("unknown_criterion",
                      "no criterion '" + criterion_id + "' in rubric");
  }
  if (dataset.items.empty()) {
    return make_error("empty_dataset", "dataset has no items");
  }

  StatsSummary summary;
  summary.n = dataset.items.size();
  for (int level = criterion->scale.min; level <= criterion->scale.max;
       ++level) {
    summary.histogram[level] = 0;
  }

  double score_sum = 0.0;
  double word_sum = 0.0;
  std::vector<int> scores;
  scores.reserve(summary.n);
  for (const auto& item : dataset.items) {
    auto it = item.gold.scores.find(criterion_id);
    if (it == item.gold.scores.end()) {
      return make_error("missing_score", "no gold score for transcript '" +
                                             item.transcript.id + "'");
    }
    scores.push_back(it->second);
    score_sum += it->second;
    word_sum += static_cast<double>(item.transcript.word_count_raw());
    ++summary.histogram[it->second];
  }

  const double n = static_cast<double>(summary.n);
  summary.mean = score_sum / n;
  summary.avg_word_count = word_sum / n;
  if (summary.n == 1) {
    summary.sample_std = 0.0;
    summary.flags.push_back("n=1");
  } else {
    double ss = 0.0;
    for (int score : scores) {
      const double d = score - summary.mean;
      ss += d * d;
    }
    summary.sample_std = std::sqrt(ss / (n - 1.0));
  }
  return summary;
}

}  // namespace traitscore
