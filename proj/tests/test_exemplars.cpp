#include <set>

#include <doctest.h>

#include "test_support.hpp"
#include "traitscore/exemplars.hpp"
#include "traitscore/rng.hpp"

using namespace traitscore;

namespace {

// The 8-item bank [3,4,4,5,5,5,6,7] used throughout.
Dataset eight_item_dataset() {
  return testsupport::tiny_dataset("c2", {{"r1", "text r1", 3},
                                          {"r2", "text r2", 4},
                                          {"r3", "text r3", 4},
                                          {"r4", "text r4", 5},
                                          {"r5", "text r5", 5},
                                          {"r6", "text r6", 5},
                                          {"r7", "text r7", 6},
                                          {"r8", "text r8", 7}});
}

std::vector<int> scores_of(const std::vector<Exemplar>& exemplars) {
  std::vector<int> out;
  for (const auto& exemplar : exemplars) out.push_back(exemplar.score);
  return out;
}

}  // namespace

TEST_CASE("build_bank sorts ascending with id tie-break") {
  const auto dataset = testsupport::tiny_dataset(
      "c2", {{"a", "x", 5}, {"b", "y", 3}, {"c", "z", 7}});
  auto bank = build_bank(dataset, "c2");
  REQUIRE(bank.ok());
  REQUIRE(bank.value().ranked.size() == 3);
  CHECK(bank.value().ranked[0] == std::pair<std::string, int>{"b", 3});
  CHECK(bank.value().ranked[1] == std::pair<std::string, int>{"a", 5});
  CHECK(bank.value().ranked[2] == std::pair<std::string, int>{"c", 7});

  const auto tied =
      testsupport::tiny_dataset("c2", {{"b", "y", 5}, {"a", "x", 5}});
  auto tied_bank = build_bank(tied, "c2");
  REQUIRE(tied_bank.ok());
  CHECK(tied_bank.value().ranked[0].first == "a");
  CHECK(tied_bank.value().ranked[1].first == "b");

  const auto single = testsupport::tiny_dataset("c2", {{"a", "x", 4}});
  auto single_bank = build_bank(single, "c2");
  REQUIRE(single_bank.ok());
  CHECK(single_bank.value().ranked.size() == 1);
}

TEST_CASE("build_bank error paths") {
  Dataset empty;
  empty.rubric.criteria.push_back(testsupport::criterion("c2", 1, 7));
  auto bank = build_bank(empty, "c2");
  REQUIRE_FALSE(bank.ok());
  CHECK(bank.error().code == "empty_train");

  const auto dataset = testsupport::tiny_dataset("c2", {{"a", "x", 4}});
  auto unknown = build_bank(dataset, "zz");
  REQUIRE_FALSE(unknown.ok());
  CHECK(unknown.error().code == "unknown_criterion");
}

TEST_CASE("select_exemplars nearest-rank picks on the 8-item bank") {
  const auto dataset = eight_item_dataset();
  auto bank = build_bank(dataset, "c2");
  REQUIRE(bank.ok());

  // ceil(0.4)=1, ceil(4)=4, ceil(7.6)=8 -> scores (3,5,7)
  ShotConfig lmh{{Tier::Low, Tier::Medium, Tier::High}};
  auto picked = select_exemplars(bank.value(), lmh, dataset, false);
  REQUIRE(picked.ok());
  CHECK(scores_of(picked.value()) == std::vector<int>{3, 5, 7});
  CHECK(picked.value()[0].tier == Tier::Low);
  CHECK(picked.value()[2].tier == Tier::High);

  // Repeated tier advances to the adjacent rank: ranks 1,2,4 -> (3,4,5).
  ShotConfig llm{{Tier::Low, Tier::Low, Tier::Medium}};
  auto repeated = select_exemplars(bank.value(), llm, dataset, false);
  REQUIRE(repeated.ok());
  CHECK(scores_of(repeated.value()) == std::vector<int>{3, 4, 5});
  CHECK(repeated.value()[0].transcript_id != repeated.value()[1].transcript_id);
}

TEST_CASE("select_exemplars clamps on a single-item bank") {
  const auto dataset = testsupport::tiny_dataset("c2", {{"only", "x", 4}});
  auto bank = build_bank(dataset, "c2");
  REQUIRE(bank.ok());
  ShotConfig lmh{{Tier::Low, Tier::Medium, Tier::High}};
  auto picked = select_exemplars(bank.value(), lmh, dataset, false);
  REQUIRE(picked.ok());
  REQUIRE(picked.value().size() == 3);
  for (const auto& exemplar : picked.value()) {
    CHECK(exemplar.transcript_id == "only");
    CHECK(exemplar.score == 4);
  }
}

TEST_CASE("select_exemplars respects shot-config order and cleaned text") {
  auto dataset = eight_item_dataset();
  dataset.items[0].transcript.cleaned_text = "cleaned r1";
  auto bank = build_bank(dataset, "c2");
  REQUIRE(bank.ok());
  ShotConfig hml{{Tier::High, Tier::Medium, Tier::Low}};
  auto picked = select_exemplars(bank.value(), hml, dataset, true);
  REQUIRE(picked.ok());
  CHECK(scores_of(picked.value()) == std::vector<int>{7, 5, 3});
  CHECK(picked.value()[2].text == "cleaned r1");  // r1 has cleaned text
  auto raw = select_exemplars(bank.value(), hml, dataset, false);
  REQUIRE(raw.ok());
  CHECK(raw.value()[2].text == "text r1");
}

TEST_CASE("shot configs beyond 5 are rejected") {
  ShotConfig six{{Tier::Low, Tier::Low, Tier::Low, Tier::Low, Tier::Low,
                  Tier::Low}};
  CHECK_FALSE(validate_shot_config(six).ok());
}

TEST_CASE("assign_tier nearest anchor with Medium tie-break") {
  TierAnchors anchors{3, 5, 7};
  CHECK(assign_tier(7, anchors) == Tier::High);
  CHECK(assign_tier(1, anchors) == Tier::Low);
  // 6 ties between Medium(5) and High(7); Medium wins.
  CHECK(assign_tier(6, anchors) == Tier::Medium);
  CHECK(assign_tier(4, anchors) == Tier::Medium);
  CHECK(assign_tier(3, anchors) == Tier::Low);
  CHECK(assign_tier(5, anchors) == Tier::Medium);
}

TEST_CASE("selection properties over 1000 random banks") {
  SeededRng rng(4242);
  for (int round = 0; round < 1000; ++round) {
    const std::size_t n = 1 + rng.next_below(40);
    std::vector<std::tuple<std::string, std::string, int>> items;
    for (std::size_t i = 0; i < n; ++i) {
      items.emplace_back("t" + std::to_string(1000 + i),
                         "response " + std::to_string(i),
                         1 + static_cast<int>(rng.next_below(7)));
    }
    const auto dataset = testsupport::tiny_dataset("c2", items);
    auto bank = build_bank(dataset, "c2");
    REQUIRE(bank.ok());

    ShotConfig lmh{{Tier::Low, Tier::Medium, Tier::High}};
    auto picked = select_exemplars(bank.value(), lmh, dataset, false);
    REQUIRE(picked.ok());
    REQUIRE(picked.value().size() == 3);

    // Monotone non-decreasing scores in L,M,H order.
    CHECK(picked.value()[0].score <= picked.value()[1].score);
    CHECK(picked.value()[1].score <= picked.value()[2].score);

    // Within the bank's observed range.
    const int lowest = bank.value().ranked.front().second;
    const int highest = bank.value().ranked.back().second;
    for (const auto& exemplar : picked.value()) {
      CHECK(exemplar.score >= lowest);
      CHECK(exemplar.score <= highest);
    }

    // Distinct transcripts whenever n >= 3.
    if (n >= 3) {
      std::set<std::string> ids;
      for (const auto& exemplar : picked.value()) {
        ids.insert(exemplar.transcript_id);
      }
      CHECK(ids.size() == 3);
    }

    // Determinism.
    auto again = select_exemplars(bank.value(), lmh, dataset, false);
    REQUIRE(again.ok());
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(again.value()[i].transcript_id == picked.value()[i].transcript_id);
    }

    // assign_tier consistency: each anchor maps to a tier with its score.
    auto anchors = bank_anchors(bank.value());
    REQUIRE(anchors.ok());
    for (Tier tier : {Tier::Low, Tier::Medium, Tier::High}) {
      const int anchor_score = anchors.value().score_of(tier);
      const Tier assigned = assign_tier(anchor_score, anchors.value());
      CHECK(anchors.value().score_of(assigned) == anchor_score);
    }
  }
}
