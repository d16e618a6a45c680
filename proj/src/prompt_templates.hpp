#pragma once

// Fixed prompt scaffolding. These strings are load-bearing: the test-suite
// golden files pin the rendered bytes, and request fingerprints (and with
// them the response cache) change whenever they change. Bump
// kTemplateVersion on any edit.

namespace traitscore::templates {

inline constexpr const char* kTemplateVersion = "v1";

// Grouped scoring (zero- and few-shot). The criteria count, id range and
// scale top are filled from the rubric; for the nine-criterion c2..c10
// 1..7 shape this renders the canonical wording.
inline constexpr const char* kGroupedSystemPrefix =
    "You are an expert Multiple Mini Interviewer whose task is to score "
    "candidates' responses to a scenario-based question. Each response is "
    "scored against ";
// ... "{N} criteria ({first} to {last}), and each criterion is scored based
// on a {levels}-point Likert scale ({max} being the highest)."

inline constexpr const char* kPreprocessSystem =
    "You are an expert in processing interview transcripts.";

inline constexpr const char* kCriterionSystem =
    "You are an expert interviewer evaluating a candidate's response in a "
    "Multiple Mini Interview (MMI).";

inline constexpr const char* kPreprocessRules =
    "1) Correcting minor transcription errors.\n"
    "2) Removing unnecessary filler words (e.g., \"um\", \"uh\").\n"
    "3) Removing conversational introductions. Omit opening phrases that are "
    "not part of the core answer, such as question repetitions, self "
    "identifications (e.g., \"My name is...\", \"I am a...\"), or "
    "acknowledgements of the question.\n"
    "4) Removing redundant statements (points repeated multiple times).\n"
    "5) Do not add content or improve the response.\n"
    "6) Your output must contain ONLY the cleaned structured transcript, no "
    "bullet points. Do not include any introductory phrases, explanations, "
    "or conversational text like \"Here is the cleaned response:\".";

// Kept verbatim, typo included.
inline constexpr const char* kCriterionExamplesHeader =
    "Below area examples of responses with their score for this specific "
    "criterion:";

inline constexpr const char* kCriterionClosing =
    "Provide the score in the format: 'cx:y'. Where 'x' is the criterion "
    "number and 'y' is the score. Do not provide explanations for the score.";

inline constexpr const char* kGroupedClosingSuffix =
    ". Explanation is not needed.";

// Generic reduced rubrics, highest level first.
inline constexpr const char* kReducedRubric0To3 =
    "(3) High: The response demonstrates a clear and consistent command of "
    "this trait.\n"
    "(2) Medium: The response demonstrates a reasonable command of this "
    "trait, though there may be some errors or lack of depth.\n"
    "(1) Low: The response demonstrates a weak command of this trait with "
    "significant errors or lack of understanding.\n"
    "(0) Unsatisfactory: The response is totally irrelevant, illegible, or "
    "shows no evidence of this trait.";

inline constexpr const char* kReducedRubric1To6 =
    "(6) Excellent: Exceptional performance. The response is highly "
    "insightful, skillful, and flawless in its execution of this trait.\n"
    "(5) Strong: Very good performance. The response shows command of the "
    "trait with only minor imperfections.\n"
    "(4) Competent: Satisfactory performance. The response is adequate and "
    "meets expectations for this trait, though it lacks depth or polish.\n"
    "(3) Developing: Inconsistent performance. The response shows some "
    "understanding of this trait but is uneven or has noticeable "
    "weaknesses.\n"
    "(2) Limited: Weak performance. The response struggles significantly "
    "with this trait and errors impede understanding.\n"
    "(1) Unsatisfactory: Poor performance. The response fails to demonstrate "
    "this trait effectively or is incoherent.";

}  // namespace traitscore::templates
