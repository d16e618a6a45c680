#pragma once

#include <map>
#include <string>
#include <vector>

#include "traitscore/core.hpp"
#include "traitscore/exemplars.hpp"
#include "traitscore/result.hpp"

namespace traitscore {

enum class TemplateId {
  ZeroShotGrouped,
  FewShotGrouped,
  Preprocess,
  CriterionAgent,
};

const char* template_name(TemplateId id);
const char* template_version();

struct PromptText {
  std::string system;
  std::string user;
  TemplateId template_id = TemplateId::ZeroShotGrouped;
  std::string fingerprint;  // stable hash over (template id, slot values)
};

// Canonical serialization used by golden files and logs.
std::string serialize_prompt(const PromptText& prompt);

struct GroupedExample {
  std::string text;
  std::map<std::string, int> scores;  // criterion_id -> score
};

// Zero examples renders the base template; otherwise the few-shot variant
// with examples enumerated in order ("first", "second", ...).
Result<PromptText> render_grouped_prompt(
    const Rubric& rubric, const std::vector<GroupedExample>& examples,
    const std::string& response);

Result<PromptText> render_preprocess_prompt(const std::string& response);

// Exactly 3 exemplars unless `no_examples` is set, in which case the example
// block is omitted entirely.
Result<PromptText> render_criterion_prompt(const std::string& question_text,
                                           const Criterion& criterion,
                                           const std::string& descriptors,
                                           const std::vector<Exemplar>& exemplars,
                                           const std::string& response,
                                           bool no_examples = false);

// Full -> dataset-supplied descriptors, one "(level) text" line per level,
// highest first. Reduced -> the generic rubric matching the scale (0..3 or
// 1..6); other scales have no reduced analogue.
Result<std::string> resolve_rubric(const Criterion& criterion,
                                   RubricVariant variant);

// Display string used for criterion slots: "id (name): description".
std::string criterion_display(const Criterion& criterion);

// The answer-format fragment "c2: x, c3: x, ..." over rubric order.
std::string grouped_format_fragment(const Rubric& rubric);

}  // namespace traitscore
