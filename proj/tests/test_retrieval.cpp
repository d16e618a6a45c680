#include <cmath>
#include <set>

#include <doctest.h>

#include "test_support.hpp"
#include "traitscore/retrieval.hpp"
#include "traitscore/rng.hpp"

using namespace traitscore;

namespace {

VectorStore store_of(std::vector<std::pair<std::string, std::vector<double>>>
                         entries,
                     int dimension) {
  VectorStore store(dimension);
  for (auto& [id, vector] : entries) {
    auto record = make_embedding_record(id, std::move(vector));
    REQUIRE(record.ok());
    REQUIRE(store.add(record.take()).ok());
  }
  return store;
}

}  // namespace

TEST_CASE("cosine_similarity examples") {
  auto orthogonal = cosine_similarity({1, 0}, {0, 1});
  REQUIRE(orthogonal.ok());
  CHECK(orthogonal.value() == doctest::Approx(0.0));

  auto identical = cosine_similarity({2, 3, 4}, {2, 3, 4});
  REQUIRE(identical.ok());
  CHECK(identical.value() == doctest::Approx(1.0));

  auto diagonal = cosine_similarity({1, 0}, {1, 1});
  REQUIRE(diagonal.ok());
  CHECK(diagonal.value() == doctest::Approx(0.707107).epsilon(1e-6));

  CHECK_FALSE(cosine_similarity({1, 0}, {1, 0, 0}).ok());
  CHECK_FALSE(cosine_similarity({0, 0}, {1, 0}).ok());
}

TEST_CASE("cosine_similarity is symmetric and scale-invariant") {
  SeededRng rng(11);
  for (int round = 0; round < 50; ++round) {
    std::vector<double> u(4), v(4);
    for (int i = 0; i < 4; ++i) {
      u[static_cast<std::size_t>(i)] = rng.next_unit() - 0.5;
      v[static_cast<std::size_t>(i)] = rng.next_unit() - 0.5;
    }
    u[0] += 0.6;  // keep away from zero vectors
    v[1] += 0.6;
    auto forward = cosine_similarity(u, v);
    auto backward = cosine_similarity(v, u);
    REQUIRE(forward.ok());
    REQUIRE(backward.ok());
    CHECK(forward.value() == doctest::Approx(backward.value()).epsilon(1e-12));

    const double a = 0.1 + 3.0 * rng.next_unit();
    const double b = 0.1 + 3.0 * rng.next_unit();
    std::vector<double> au(u), bv(v);
    for (int i = 0; i < 4; ++i) {
      au[static_cast<std::size_t>(i)] *= a;
      bv[static_cast<std::size_t>(i)] *= b;
    }
    auto scaled = cosine_similarity(au, bv);
    REQUIRE(scaled.ok());
    CHECK(scaled.value() == doctest::Approx(forward.value()).epsilon(1e-9));
  }
}

TEST_CASE("embed_batch contract with the deterministic hash client") {
  HashEmbeddingClient client("test-model", 4);
  auto entries = embed_batch(
      {{"a", "first text"}, {"b", "second text"}, {"c", "third text"}}, client);
  REQUIRE(entries.ok());
  REQUIRE(entries.value().size() == 3);
  for (const auto& entry : entries.value()) {
    CHECK(entry.ok);
    CHECK(entry.record.vector.size() == 4);
    CHECK(entry.record.norm > 0.0);
  }

  // Duplicate texts embed identically.
  auto duplicates = embed_batch({{"x", "same words"}, {"y", "same words"}},
                                client);
  REQUIRE(duplicates.ok());
  CHECK(duplicates.value()[0].record.vector ==
        duplicates.value()[1].record.vector);

  // Empty text is a per-item error, not a batch failure.
  auto with_empty = embed_batch({{"a", "fine"}, {"b", ""}}, client);
  REQUIRE(with_empty.ok());
  CHECK(with_empty.value()[0].ok);
  CHECK_FALSE(with_empty.value()[1].ok);
  CHECK(with_empty.value()[1].error.code == "empty_text");
}

namespace {

// Declares one dimension, returns another.
class LyingClient : public EmbeddingClient {
 public:
  int dimension() const override { return 4; }
  std::string model_id() const override { return "liar"; }
  Result<std::vector<std::vector<double>>> embed(
      const std::vector<std::string>& texts) override {
    std::vector<std::vector<double>> out(texts.size(), {1.0, 2.0});
    return out;
  }
};

}  // namespace

TEST_CASE("embed_batch rejects a client whose vectors contradict its dimension") {
  LyingClient client;
  auto entries = embed_batch({{"a", "some text"}}, client);
  REQUIRE_FALSE(entries.ok());
  CHECK(entries.error().code == "dimension_mismatch");
}

TEST_CASE("vector store rejects mismatches and duplicates") {
  VectorStore store(3);
  auto good = make_embedding_record("a", {1, 0, 0});
  REQUIRE(good.ok());
  CHECK(store.add(good.take()).ok());

  auto wrong_dim = make_embedding_record("b", {1, 0});
  REQUIRE(wrong_dim.ok());
  CHECK_FALSE(store.add(wrong_dim.take()).ok());

  auto duplicate = make_embedding_record("a", {0, 1, 0});
  REQUIRE(duplicate.ok());
  CHECK_FALSE(store.add(duplicate.take()).ok());

  CHECK_FALSE(make_embedding_record("z", {0, 0, 0}).ok());
}

TEST_CASE("nearest_neighbors ordering, exclusion and exhaustion flag") {
  auto store = store_of({{"a", {1, 0}}, {"b", {0, 1}}}, 2);

  auto top1 = nearest_neighbors({1, 0}, store, 1, {});
  REQUIRE(top1.ok());
  REQUIRE(top1.value().neighbors.size() == 1);
  CHECK(top1.value().neighbors[0].first == "a");
  CHECK(top1.value().neighbors[0].second == doctest::Approx(1.0));
  CHECK_FALSE(top1.value().fewer_than_k);

  auto top3 = nearest_neighbors({1, 0}, store, 3, {});
  REQUIRE(top3.ok());
  CHECK(top3.value().neighbors.size() == 2);
  CHECK(top3.value().fewer_than_k);

  const double inv = 1.0 / std::sqrt(2.0);
  auto ordered = nearest_neighbors(
      {1, 0}, store_of({{"a", {1, 0}}, {"b", {inv, inv}}}, 2), 2, {});
  REQUIRE(ordered.ok());
  CHECK(ordered.value().neighbors[0].first == "a");
  CHECK(ordered.value().neighbors[1].first == "b");
  CHECK(ordered.value().neighbors[1].second ==
        doctest::Approx(0.7071).epsilon(1e-3));

  auto excluded = nearest_neighbors({1, 0}, store, 1, {"a"});
  REQUIRE(excluded.ok());
  CHECK(excluded.value().neighbors[0].first == "b");

  auto empty = nearest_neighbors({1, 0}, store, 1, {"a", "b"});
  REQUIRE_FALSE(empty.ok());
  CHECK(empty.error().code == "empty_pool");

  // Similarity ties break by ascending id.
  auto tied = nearest_neighbors(
      {1, 0}, store_of({{"zz", {2, 0}}, {"aa", {3, 0}}}, 2), 2, {});
  REQUIRE(tied.ok());
  CHECK(tied.value().neighbors[0].first == "aa");
  CHECK(tied.value().neighbors[1].first == "zz");

  // Top-k similarities are non-increasing.
  SeededRng rng(5);
  std::vector<std::pair<std::string, std::vector<double>>> entries;
  for (int i = 0; i < 12; ++i) {
    entries.push_back({"p" + std::to_string(i),
                       {rng.next_unit() + 0.01, rng.next_unit() + 0.01}});
  }
  auto big = nearest_neighbors({0.7, 0.3}, store_of(entries, 2), 6, {});
  REQUIRE(big.ok());
  for (std::size_t i = 1; i < big.value().neighbors.size(); ++i) {
    CHECK(big.value().neighbors[i - 1].second >=
          big.value().neighbors[i].second - 1e-12);
  }
}

namespace {

struct RagFixture {
  Dataset train;
  VectorStore store{4};
  Transcript query;
  std::vector<Exemplar> base;
};

// Train pool with hash embeddings plus a query embedding; base = [L,M,H].
RagFixture make_rag_fixture(SeededRng& rng, std::size_t n) {
  RagFixture fixture;
  std::vector<std::tuple<std::string, std::string, int>> items;
  for (std::size_t i = 0; i < n; ++i) {
    items.emplace_back("t" + std::to_string(100 + i),
                       "response text " + std::to_string(rng.next_below(1000)),
                       1 + static_cast<int>(rng.next_below(7)));
  }
  fixture.train = testsupport::tiny_dataset("c2", items);

  HashEmbeddingClient client("rag-test", 4);
  std::vector<std::pair<std::string, std::string>> id_texts;
  for (const auto& item : fixture.train.items) {
    id_texts.emplace_back(item.transcript.id, item.transcript.raw_text);
  }
  fixture.query.id = "query";
  fixture.query.question_id = "q";
  fixture.query.raw_text =
      "query text " + std::to_string(rng.next_below(1000));
  id_texts.emplace_back(fixture.query.id, fixture.query.raw_text);

  auto entries = embed_batch(id_texts, client);
  REQUIRE(entries.ok());
  for (auto& entry : entries.value()) {
    REQUIRE(entry.ok);
    REQUIRE(fixture.store.add(std::move(entry.record)).ok());
  }

  auto bank = build_bank(fixture.train, "c2");
  REQUIRE(bank.ok());
  ShotConfig lmh{{Tier::Low, Tier::Medium, Tier::High}};
  auto base = select_exemplars(bank.value(), lmh, fixture.train, false);
  REQUIRE(base.ok());
  fixture.base = base.take();
  return fixture;
}

}  // namespace

TEST_CASE("apply_rag_strategy None returns base unchanged") {
  SeededRng rng(77);
  auto fixture = make_rag_fixture(rng, 8);
  auto result = apply_rag_strategy(RagStrategy{RagVariant::None, 1},
                                   fixture.base, fixture.train, fixture.store,
                                   fixture.query, "c2", false);
  REQUIRE(result.ok());
  REQUIRE(result.value().size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(result.value()[i].transcript_id == fixture.base[i].transcript_id);
  }
}

TEST_CASE("apply_rag_strategy TopK retrieves k regardless of score") {
  SeededRng rng(78);
  auto fixture = make_rag_fixture(rng, 10);
  auto result = apply_rag_strategy(RagStrategy{RagVariant::TopK, 3},
                                   fixture.base, fixture.train, fixture.store,
                                   fixture.query, "c2", false);
  REQUIRE(result.ok());
  CHECK(result.value().size() == 3);
  for (const auto& exemplar : result.value()) {
    CHECK(exemplar.transcript_id != fixture.query.id);
  }
  auto k4 = apply_rag_strategy(RagStrategy{RagVariant::TopK, 4}, fixture.base,
                               fixture.train, fixture.store, fixture.query,
                               "c2", false);
  REQUIRE(k4.ok());
  CHECK(k4.value().size() == 4);
  CHECK_FALSE(
      validate_rag_strategy(RagStrategy{RagVariant::TopK, 5}).ok());
}

TEST_CASE("apply_rag_strategy BasePlusOne appends one retrieved exemplar") {
  SeededRng rng(79);
  auto fixture = make_rag_fixture(rng, 10);
  auto result = apply_rag_strategy(RagStrategy{RagVariant::BasePlusOne, 1},
                                   fixture.base, fixture.train, fixture.store,
                                   fixture.query, "c2", false);
  REQUIRE(result.ok());
  REQUIRE(result.value().size() == 4);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(result.value()[i].transcript_id == fixture.base[i].transcript_id);
  }
}

TEST_CASE("apply_rag_strategy errors on missing embeddings and bad base") {
  SeededRng rng(80);
  auto fixture = make_rag_fixture(rng, 6);

  Transcript unembedded;
  unembedded.id = "ghost";
  unembedded.raw_text = "no embedding";
  auto missing = apply_rag_strategy(
      RagStrategy{RagVariant::IntegratedCalibration, 1}, fixture.base,
      fixture.train, fixture.store, unembedded, "c2", false);
  REQUIRE_FALSE(missing.ok());
  CHECK(missing.error().code == "missing_embedding");

  std::vector<Exemplar> bad_base = {fixture.base[0]};
  auto bad = apply_rag_strategy(
      RagStrategy{RagVariant::IntegratedCalibration, 1}, bad_base,
      fixture.train, fixture.store, fixture.query, "c2", false);
  REQUIRE_FALSE(bad.ok());
  CHECK(bad.error().code == "config");
}

TEST_CASE("integrated calibration replaces exactly the matching tier slot") {
  SeededRng rng(4711);
  for (int round = 0; round < 1000; ++round) {
    auto fixture = make_rag_fixture(rng, 3 + rng.next_below(12));
    auto result = apply_rag_strategy(
        RagStrategy{RagVariant::IntegratedCalibration, 1}, fixture.base,
        fixture.train, fixture.store, fixture.query, "c2", false);
    REQUIRE(result.ok());
    const auto& out = result.value();
    REQUIRE(out.size() == 3);
    CHECK(out[0].tier == Tier::Low);
    CHECK(out[1].tier == Tier::Medium);
    CHECK(out[2].tier == Tier::High);

    // Independent recomputation of the retrieved neighbor and its tier.
    const EmbeddingRecord* query_record = fixture.store.find("query");
    REQUIRE(query_record != nullptr);
    auto neighbors = nearest_neighbors(query_record->vector, fixture.store, 1,
                                       {fixture.query.id});
    REQUIRE(neighbors.ok());
    const std::string retrieved = neighbors.value().neighbors[0].first;
    TierAnchors anchors{fixture.base[0].score, fixture.base[1].score,
                        fixture.base[2].score};
    const DatasetItem* item = fixture.train.find_item(retrieved);
    REQUIRE(item != nullptr);
    const Tier slot = assign_tier(item->gold.scores.at("c2"), anchors);

    std::size_t replaced = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      if (out[i].transcript_id != fixture.base[i].transcript_id) {
        ++replaced;
        CHECK(out[i].tier == slot);
        CHECK(out[i].transcript_id == retrieved);
      }
    }
    // Zero replacements only when the retrieved item already sat in its slot.
    CHECK(replaced <= 1);
    if (replaced == 0) {
      bool retrieved_in_base = false;
      for (const auto& exemplar : fixture.base) {
        if (exemplar.transcript_id == retrieved) retrieved_in_base = true;
      }
      CHECK(retrieved_in_base);
    }
  }
}

TEST_CASE("kmeans basics") {
  SUBCASE("k=1 centroid is the global mean") {
    auto result = kmeans_clusters({{0, 0}, {2, 0}, {4, 6}}, 1, 3, 50);
    REQUIRE(result.ok());
    CHECK(result.value().centroids[0][0] == doctest::Approx(2.0));
    CHECK(result.value().centroids[0][1] == doctest::Approx(2.0));
    for (std::size_t a : result.value().assignments) CHECK(a == 0);
  }
  SUBCASE("two far clusters separate") {
    auto result = kmeans_clusters(
        {{0, 0}, {0.1, 0}, {100, 100}, {100.2, 100}}, 2, 9, 50);
    REQUIRE(result.ok());
    const auto& a = result.value().assignments;
    CHECK(a[0] == a[1]);
    CHECK(a[2] == a[3]);
    CHECK(a[0] != a[2]);
  }
  SUBCASE("same seed, same assignments") {
    std::vector<std::vector<double>> points;
    SeededRng rng(13);
    for (int i = 0; i < 40; ++i) {
      points.push_back({rng.next_unit(), rng.next_unit(), rng.next_unit()});
    }
    auto first = kmeans_clusters(points, 5, 21, 100);
    auto second = kmeans_clusters(points, 5, 21, 100);
    REQUIRE(first.ok());
    REQUIRE(second.ok());
    CHECK(first.value().assignments == second.value().assignments);
  }
  SUBCASE("k larger than n errors") {
    CHECK_FALSE(kmeans_clusters({{1, 1}}, 2, 0, 10).ok());
  }
}

TEST_CASE("kmeans objective is non-increasing across iteration budgets") {
  std::vector<std::vector<double>> points;
  SeededRng rng(55);
  for (int i = 0; i < 60; ++i) {
    points.push_back({rng.next_unit() * 4, rng.next_unit() * 4});
  }
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t budget = 1; budget <= 12; ++budget) {
    auto result = kmeans_clusters(points, 4, 17, budget);
    REQUIRE(result.ok());
    CHECK(result.value().objective <= previous + 1e-9);
    previous = result.value().objective;
  }
}
