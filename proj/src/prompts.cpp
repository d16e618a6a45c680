#include "traitscore/prompts.hpp"

#include <algorithm>

#include "prompt_templates.hpp"
#include "traitscore/hashing.hpp"
#include "traitscore/text.hpp"

namespace traitscore {

const char* template_name(TemplateId id) {
  switch (id) {
    case TemplateId::ZeroShotGrouped: return "zero_shot_grouped";
    case TemplateId::FewShotGrouped: return "few_shot_grouped";
    case TemplateId::Preprocess: return "preprocess";
    case TemplateId::CriterionAgent: return "criterion_agent";
  }
  return "unknown";
}

const char* template_version() { return templates::kTemplateVersion; }

std::string serialize_prompt(const PromptText& prompt) {
  std::string out = "<<<SYSTEM>>>\n";
  out += prompt.system;
  out += "\n<<<USER>>>\n";
  out += prompt.user;
  out += "\n";
  return out;
}

std::string criterion_display(const Criterion& criterion) {
  return criterion.id + " (" + criterion.name + "): " + criterion.description;
}

std::string grouped_format_fragment(const Rubric& rubric) {
  std::vector<std::string> parts;
  parts.reserve(rubric.criteria.size());
  for (const auto& criterion : rubric.criteria) {
    parts.push_back(criterion.id + ": x");
  }
  return join(parts, ", ");
}

namespace {

std::string quoted(const std::string& text) { return "\"" + text + "\""; }

std::string join_paragraphs(const std::vector<std::string>& paragraphs) {
  return join(paragraphs, "\n\n");
}

std::string grouped_system(const Rubric& rubric) {
  const auto& criteria = rubric.criteria;
  const ScoreScale& scale = criteria.front().scale;
  std::string system = templates::kGroupedSystemPrefix;
  system += std::to_string(criteria.size());
  system += " criteria (" + criteria.front().id + " to " + criteria.back().id +
            "), and each criterion is scored based on a " +
            std::to_string(scale.levels()) + "-point Likert scale (" +
            std::to_string(scale.max) + " being the highest).";
  return system;
}

std::string criteria_list(const Rubric& rubric) {
  std::vector<std::string> lines;
  lines.reserve(rubric.criteria.size());
  for (const auto& criterion : rubric.criteria) {
    lines.push_back(criterion_display(criterion));
  }
  return join(lines, "\n");
}

std::string scores_fragment(const Rubric& rubric,
                            const std::map<std::string, int>& scores) {
  std::vector<std::string> parts;
  parts.reserve(rubric.criteria.size());
  for (const auto& criterion : rubric.criteria) {
    parts.push_back(criterion.id + ": " +
                    std::to_string(scores.at(criterion.id)));
  }
  return join(parts, ", ");
}

PromptText finish(TemplateId id, std::string system, std::string user,
                  const std::vector<std::string>& slots) {
  PromptText prompt;
  prompt.template_id = id;
  prompt.system = std::move(system);
  prompt.user = std::move(user);
  StableHash hash;
  hash.field(template_name(id)).field(templates::kTemplateVersion);
  for (const auto& slot : slots) hash.field(slot);
  prompt.fingerprint = hash.hex();
  return prompt;
}

}  // namespace

Result<PromptText> render_grouped_prompt(
    const Rubric& rubric, const std::vector<GroupedExample>& examples,
    const std::string& response) {
  if (rubric.criteria.empty()) {
    return make_error("config", "rubric has no criteria");
  }
  if (trim(response).empty()) {
    return make_error("empty_response", "candidate response is empty");
  }
  if (examples.size() > 5) {
    return make_error("config", "grouped prompts support at most 5 examples");
  }
  for (const auto& example : examples) {
    if (example.scores.size() != rubric.criteria.size()) {
      return make_error("example_mismatch",
                        "example scores do not cover the rubric");
    }
    for (const auto& criterion : rubric.criteria) {
      auto it = example.scores.find(criterion.id);
      if (it == example.scores.end()) {
        return make_error("example_mismatch",
                          "example lacks a score for " + criterion.id);
      }
      if (!criterion.scale.contains(it->second)) {
        return make_error("example_mismatch",
                          "example score for " + criterion.id +
                              " outside scale");
      }
    }
  }

  std::vector<std::string> paragraphs;
  std::vector<std::string> slots = {rubric.question_text};
  if (examples.empty()) {
    paragraphs.push_back("The question asked was " +
                         quoted(rubric.question_text));
  } else {
    paragraphs.push_back("The question asked was: " +
                         quoted(rubric.question_text));
  }
  const std::string criteria = criteria_list(rubric);
  slots.push_back(criteria);
  paragraphs.push_back(
      "For this specific scenario question, the criteria are the following:\n" +
      quoted(criteria));

  for (std::size_t i = 0; i < examples.size(); ++i) {
    const std::string ordinal = ordinal_word(i + 1);
    std::string intro;
    if (i == 0) {
      intro = "I will provide you with " + std::to_string(examples.size()) +
              " examples with scores. ";
    }
    intro += "The " + ordinal + " example is " + quoted(examples[i].text) + ".";
    paragraphs.push_back(std::move(intro));
    const std::string score_line = scores_fragment(rubric, examples[i].scores);
    paragraphs.push_back("The score received for the " + ordinal +
                         " example was " + score_line + ".");
    slots.push_back(examples[i].text);
    slots.push_back(score_line);
  }

  paragraphs.push_back("Your task is to score the following response: " +
                       quoted(response));
  paragraphs.push_back(
      "Please provide the results in the following format and only provide "
      "the score, where x represents your chosen score: " +
      grouped_format_fragment(rubric) + templates::kGroupedClosingSuffix);
  slots.push_back(response);

  const TemplateId id = examples.empty() ? TemplateId::ZeroShotGrouped
                                         : TemplateId::FewShotGrouped;
  return finish(id, grouped_system(rubric), join_paragraphs(paragraphs),
                slots);
}

Result<PromptText> render_preprocess_prompt(const std::string& response) {
  if (trim(response).empty()) {
    return make_error("empty_response", "candidate response is empty");
  }
  std::vector<std::string> paragraphs = {
      "Given the following transcribed response, clean and refine it by:",
      templates::kPreprocessRules,
      "Original Response:\n" + quoted(response),
  };
  return finish(TemplateId::Preprocess, templates::kPreprocessSystem,
                join_paragraphs(paragraphs), {response});
}

Result<PromptText> render_criterion_prompt(const std::string& question_text,
                                           const Criterion& criterion,
                                           const std::string& descriptors,
                                           const std::vector<Exemplar>& exemplars,
                                           const std::string& response,
                                           bool no_examples) {
  if (trim(response).empty()) {
    return make_error("empty_response", "candidate response is empty");
  }
  if (no_examples) {
    if (!exemplars.empty()) {
      return make_error("config",
                        "no_examples ablation given a non-empty exemplar set");
    }
  } else if (exemplars.size() != 3) {
    return make_error("exemplar_count",
                      "criterion prompt requires exactly 3 exemplars, got " +
                          std::to_string(exemplars.size()));
  }
  for (const auto& exemplar : exemplars) {
    if (exemplar.criterion_id != criterion.id) {
      return make_error("exemplar_mismatch",
                        "exemplar scored for '" + exemplar.criterion_id +
                            "', prompt is for '" + criterion.id + "'");
    }
    if (!criterion.scale.contains(exemplar.score)) {
      return make_error("exemplar_mismatch",
                        "exemplar score outside the criterion scale");
    }
  }

  const std::string display = criterion_display(criterion);
  std::vector<std::string> paragraphs;
  paragraphs.push_back("The scenario question asked was:\n" +
                       quoted(question_text));
  paragraphs.push_back(
      "The response has already been preprocessed. Your task is to assign a "
      "score for the following criteria:\n" +
      quoted(display));
  paragraphs.push_back("Scoring Scale Descriptors:\n" + quoted(descriptors));

  std::vector<std::string> slots = {question_text, display, descriptors};
  if (!no_examples) {
    paragraphs.push_back(templates::kCriterionExamplesHeader);
    for (std::size_t i = 0; i < exemplars.size(); ++i) {
      paragraphs.push_back("Example " + std::to_string(i + 1) + ": " +
                           quoted(exemplars[i].text) + "\nScore: " +
                           criterion.id + ": " +
                           std::to_string(exemplars[i].score));
      slots.push_back(exemplars[i].text);
      slots.push_back(std::to_string(exemplars[i].score));
    }
  }
  paragraphs.push_back("Candidate Response:\n" + quoted(response));
  paragraphs.push_back(templates::kCriterionClosing);
  slots.push_back(response);
  slots.push_back(no_examples ? "no_examples" : "with_examples");

  return finish(TemplateId::CriterionAgent, templates::kCriterionSystem,
                join_paragraphs(paragraphs), slots);
}

Result<std::string> resolve_rubric(const Criterion& criterion,
                                   RubricVariant variant) {
  const ScoreScale& scale = criterion.scale;
  if (variant == RubricVariant::Reduced) {
    if (scale.min == 0 && scale.max == 3) return std::string(templates::kReducedRubric0To3);
    if (scale.min == 1 && scale.max == 6) return std::string(templates::kReducedRubric1To6);
    return make_error("no_reduced_rubric",
                      "no generic rubric for scale " +
                          std::to_string(scale.min) + ".." +
                          std::to_string(scale.max));
  }
  if (scale.descriptors.empty()) {
    return make_error("no_descriptors",
                      "criterion '" + criterion.id +
                          "' has no descriptors; supply them or use the "
                          "reduced variant");
  }
  std::vector<ScoreDescriptor> ordered = scale.descriptors;
  std::sort(ordered.begin(), ordered.end(),
            [](const ScoreDescriptor& a, const ScoreDescriptor& b) {
              return a.level > b.level;
            });
  std::vector<std::string> lines;
  lines.reserve(ordered.size());
  for (const auto& descriptor : ordered) {
    lines.push_back("(" + std::to_string(descriptor.level) + ") " +
                    descriptor.text);
  }
  return join(lines, "\n");
}

}  // namespace traitscore
