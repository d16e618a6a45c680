#include <array>
#include <string>
#include <vector>

#include "traitscore/core.hpp"
#include "traitscore/rng.hpp"

namespace traitscore {
namespace {

struct FixtureQuestion {
  const char* id;
  const char* text;
};

constexpr std::array<FixtureQuestion, 4> kQuestions = {{
    {"q1",
     "A new colleague on your shift is visibly struggling to keep up with "
     "their tasks and has started avoiding the rest of the team. Describe "
     "what you would do."},
    {"q2",
     "While waiting in a long queue you notice a customer speaking harshly "
     "to a trainee cashier who has made a mistake. Describe how you would "
     "respond."},
    {"q3",
     "A close friend asks for your honest opinion on a project they are "
     "proud of, but you can see serious problems with it. Describe how you "
     "would handle the conversation."},
    {"q4",
     "Your study group cannot agree on an approach the night before a "
     "deadline and two members have stopped speaking to each other. Describe "
     "how you would move the group forward."},
}};

struct FixtureCriterion {
  const char* id;
  const char* name;
  const char* description;
};

constexpr std::array<FixtureCriterion, 9> kCriteria = {{
    {"c2", "Clarity of communication",
     "Expresses ideas in an ordered, easy-to-follow way."},
    {"c3", "Perspective taking",
     "Considers how the situation looks and feels to the other people "
     "involved."},
    {"c4", "Emotional awareness",
     "Recognises and responds to the emotions present in the scenario."},
    {"c5", "Ethical reasoning",
     "Weighs fairness, honesty and responsibility when choosing actions."},
    {"c6", "Practical judgment",
     "Proposes concrete, workable steps rather than vague intentions."},
    {"c7", "Active listening",
     "Seeks out and incorporates the other person's view before acting."},
    {"c8", "Composure",
     "Stays measured and constructive under social pressure."},
    {"c9", "Collaboration",
     "Works toward outcomes that keep the group functioning."},
    {"c10", "Reflectiveness",
     "Shows awareness of own limits, biases and room to improve."},
}};

constexpr std::array<const char*, 7> kLevelNames = {
    "Unsatisfactory", "Poor",      "Below expectations", "Adequate",
    "Good",           "Very good", "Excellent"};

const std::vector<std::string>& openers() {
  static const std::vector<std::string> v = {
      "Um, thank you for the question.",
      "Okay, so, let me think about this for a second.",
      "Right, uh, that is a tricky situation.",
      "So, you know, I have actually been in something similar.",
      "Hmm, okay.",
  };
  return v;
}

const std::vector<std::string>& actions() {
  static const std::vector<std::string> v = {
      "I would start by checking in with them privately to hear their side.",
      "First I would make sure nobody feels singled out in front of others.",
      "I would ask open questions to understand what is actually going on.",
      "I would acknowledge how stressful the situation must feel for them.",
      "I would offer specific help rather than general reassurance.",
      "I would be honest about the problems while recognising the effort "
      "involved.",
      "I would suggest we take a short break so everyone can cool down.",
      "I would try to find one concrete next step we can all agree on.",
      "I would keep my tone calm even if the other person is upset.",
      "I would admit the parts I am unsure about and ask for input.",
      "I would focus on the behaviour and its impact, not the person.",
      "I would follow up afterwards to see how things have settled.",
  };
  return v;
}

const std::vector<std::string>& fillers() {
  static const std::vector<std::string> v = {
      "Um,", "Uh,", "You know,", "I mean,", "Like,", "So,",
  };
  return v;
}

const std::vector<std::string>& closers() {
  static const std::vector<std::string> v = {
      "Overall I would try to leave the situation better than I found it.",
      "In the end keeping trust matters more than being right.",
      "That is roughly how I would approach it.",
      "I think small concrete steps beat grand gestures here.",
  };
  return v;
}

// Score distribution over 1..7 skewed toward 4-6, mirroring an
// already-screened applicant pool. Weights sum to 100.
constexpr std::array<int, 7> kScoreWeights = {2, 3, 10, 25, 30, 22, 8};

int draw_score(SeededRng& rng) {
  int roll = static_cast<int>(rng.next_below(100));
  int acc = 0;
  for (int level = 0; level < 7; ++level) {
    acc += kScoreWeights[static_cast<std::size_t>(level)];
    if (roll < acc) return level + 1;
  }
  return 7;
}

std::string make_response_text(SeededRng& rng) {
  std::string text = openers()[rng.next_below(openers().size())];
  const std::size_t sentence_count = 4 + rng.next_below(5);
  std::vector<std::size_t> pool(actions().size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  rng.shuffle(pool);
  for (std::size_t s = 0; s < sentence_count && s < pool.size(); ++s) {
    text += " ";
    if (rng.next_below(3) == 0) {
      text += fillers()[rng.next_below(fillers().size())];
      text += " ";
    }
    text += actions()[pool[s]];
  }
  text += " ";
  text += closers()[rng.next_below(closers().size())];
  return text;
}

}  // namespace

Result<Dataset> make_fixture_dataset(const FixtureSpec& spec) {
  if (spec.question < 1 || spec.question > static_cast<int>(kQuestions.size())) {
    return make_error("config", "fixture question must be 1..4");
  }
  if (spec.items < 1) {
    return make_error("config", "fixture needs at least one item");
  }

  const FixtureQuestion& question =
      kQuestions[static_cast<std::size_t>(spec.question - 1)];

  Dataset dataset;
  dataset.name = "fixture_" + std::string(question.id);
  dataset.rubric.question_id = question.id;
  dataset.rubric.question_text = question.text;
  dataset.rubric.variant = RubricVariant::Full;
  for (const auto& fc : kCriteria) {
    Criterion criterion;
    criterion.id = fc.id;
    criterion.name = fc.name;
    criterion.description = fc.description;
    criterion.scale.min = 1;
    criterion.scale.max = 7;
    for (int level = 1; level <= 7; ++level) {
      criterion.scale.descriptors.push_back(
          {level, kLevelNames[static_cast<std::size_t>(level - 1)]});
    }
    dataset.rubric.criteria.push_back(std::move(criterion));
  }

  // Question index folded into the stream so the four fixtures differ even
  // under one seed.
  SeededRng rng(spec.seed * 1000003ULL +
                static_cast<std::uint64_t>(spec.question));
  for (std::size_t i = 0; i < spec.items; ++i) {
    DatasetItem item;
    item.transcript.id =
        std::string(question.id) + "_r" + (i < 9 ? "0" : "") + std::to_string(i + 1);
    item.transcript.question_id = question.id;
    item.transcript.raw_text = make_response_text(rng);
    item.gold.transcript_id = item.transcript.id;
    for (const auto& criterion : dataset.rubric.criteria) {
      item.gold.scores[criterion.id] = draw_score(rng);
    }
    dataset.items.push_back(std::move(item));
  }
  return dataset;
}

}  // namespace traitscore
