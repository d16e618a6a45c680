#include <filesystem>
#include <set>

#include <doctest.h>
#include <json.hpp>

#include "test_support.hpp"
#include "traitscore/pipeline.hpp"
#include "traitscore/text.hpp"

using namespace traitscore;
using nlohmann::json;
using testsupport::ScriptedBackend;
using testsupport::text_response;

namespace fs = std::filesystem;

namespace {

Dataset fixture(std::size_t items = 16, int question = 1) {
  FixtureSpec spec;
  spec.question = question;
  spec.seed = 42;
  spec.items = items;
  auto dataset = make_fixture_dataset(spec);
  REQUIRE(dataset.ok());
  return dataset.take();
}

RunConfig base_config(const fs::path& out_dir) {
  RunConfig config;
  config.run_name = "test";
  FixtureSpec spec;
  spec.question = 1;
  spec.seed = 42;
  spec.items = 16;
  config.dataset_fixture = spec;
  config.backend.kind = "mock-oracle";
  config.split = {0.75, 7};
  config.output_dir = out_dir.string();
  return config;
}

// Oracle everywhere except one criterion, which gets unparseable text.
class SabotageBackend : public ChatBackend {
 public:
  SabotageBackend(Dataset dataset, std::string target)
      : inner_(std::move(dataset)), target_(std::move(target)) {}
  Result<ChatResponse> complete(const ChatRequest& request) override {
    auto it = request.tags.find("criterion_id");
    if (it != request.tags.end() && it->second == target_) {
      return text_response("I would rather not give a number.");
    }
    return inner_.complete(request);
  }
  std::string name() const override { return "sabotage"; }

 private:
  OracleBackend inner_;
  std::string target_;
};

struct MultiAgentHarness {
  Dataset dataset;
  Dataset train;
  Dataset test;
  std::map<std::string, ExemplarBank> banks;
  MultiAgentContext context;

  explicit MultiAgentHarness(Dataset full) : dataset(std::move(full)) {
    auto parts = split_dataset(dataset, {0.75, 7});
    REQUIRE(parts.ok());
    train = std::move(parts.value().train);
    test = std::move(parts.value().test);
    for (const auto& criterion : dataset.rubric.criteria) {
      auto bank = build_bank(train, criterion.id);
      REQUIRE(bank.ok());
      banks[criterion.id] = bank.take();
    }
    context.train = &train;
    context.rubric = &dataset.rubric;
    context.banks = &banks;
    context.shots = ShotConfig{{Tier::Low, Tier::Medium, Tier::High}};
    context.model_id = "test-model";
  }
};

}  // namespace

TEST_CASE("preprocess_stage cleans every transcript via the mock backend") {
  auto dataset = fixture(6);
  auto backend = std::make_shared<OracleBackend>(dataset);
  LlmClient client(backend, RetryPolicy{}, nullptr, [](int) {});
  std::vector<Transcript> transcripts;
  for (const auto& item : dataset.items) transcripts.push_back(item.transcript);

  const auto outcomes =
      preprocess_stage(transcripts, client, "test-model", 0.0);
  REQUIRE(outcomes.size() == transcripts.size());
  for (const auto& outcome : outcomes) {
    CHECK(outcome.cleaned);
    CHECK_FALSE(outcome.raw_fallback);
  }
  for (const auto& transcript : transcripts) {
    REQUIRE(transcript.cleaned_text.has_value());
    CHECK_FALSE(transcript.cleaned_text->empty());
  }
}

TEST_CASE("preprocess_stage falls back to raw text and continues") {
  auto dataset = fixture(3);
  // First item fails at the backend; the others succeed.
  auto scripted = std::make_shared<ScriptedBackend>(
      std::vector<Result<ChatResponse>>{
          make_error("http_400", "simulated rejection"),
          text_response("Cleaned response: second answer cleaned."),
          text_response("Third answer cleaned."),
      });
  LlmClient client(scripted, RetryPolicy{}, nullptr, [](int) {});
  std::vector<Transcript> transcripts;
  for (const auto& item : dataset.items) transcripts.push_back(item.transcript);

  const auto outcomes =
      preprocess_stage(transcripts, client, "test-model", 0.0);
  REQUIRE(outcomes.size() == 3);
  CHECK(outcomes[0].raw_fallback);
  CHECK_FALSE(transcripts[0].cleaned_text.has_value());
  CHECK(outcomes[1].cleaned);
  CHECK(*transcripts[1].cleaned_text == "second answer cleaned.");
  CHECK(outcomes[2].cleaned);
}

TEST_CASE("score_multiagent with the oracle reproduces gold scores") {
  MultiAgentHarness harness(fixture(16));
  auto backend = std::make_shared<OracleBackend>(harness.dataset);
  LlmClient client(backend, RetryPolicy{}, nullptr, [](int) {});

  const auto& item = harness.test.items.front();
  const auto outcomes = score_multiagent(item.transcript,
                                         item.transcript.raw_text,
                                         harness.context, client);
  REQUIRE(outcomes.size() == 9);
  for (const auto& [cid, outcome] : outcomes) {
    REQUIRE(outcome.ok);
    CHECK(outcome.score == item.gold.scores.at(cid));
  }
}

TEST_CASE("score_multiagent constant mock predicts the constant") {
  MultiAgentHarness harness(fixture(16));
  auto backend = std::make_shared<ConstantBackend>(harness.dataset, 4);
  LlmClient client(backend, RetryPolicy{}, nullptr, [](int) {});
  const auto& item = harness.test.items.front();
  const auto outcomes = score_multiagent(item.transcript,
                                         item.transcript.raw_text,
                                         harness.context, client);
  for (const auto& [cid, outcome] : outcomes) {
    REQUIRE(outcome.ok);
    CHECK(outcome.score == 4);
  }
}

TEST_CASE("criterion agents are isolated: sabotaging c5 leaves the rest intact") {
  MultiAgentHarness harness(fixture(16));
  const auto& item = harness.test.items.front();

  auto oracle = std::make_shared<OracleBackend>(harness.dataset);
  LlmClient oracle_client(oracle, RetryPolicy{}, nullptr, [](int) {});
  const auto clean = score_multiagent(item.transcript,
                                      item.transcript.raw_text,
                                      harness.context, oracle_client);

  auto sabotage = std::make_shared<SabotageBackend>(harness.dataset, "c5");
  LlmClient sabotage_client(sabotage, RetryPolicy{}, nullptr, [](int) {});
  const auto hit = score_multiagent(item.transcript, item.transcript.raw_text,
                                    harness.context, sabotage_client);

  REQUIRE_FALSE(hit.at("c5").ok);
  CHECK(hit.at("c5").failure_code == "missing");
  std::size_t ok_count = 0;
  for (const auto& [cid, outcome] : hit) {
    if (cid == "c5") continue;
    REQUIRE(outcome.ok);
    CHECK(outcome.score == clean.at(cid).score);
    ++ok_count;
  }
  CHECK(ok_count == 8);
}

TEST_CASE("score_grouped zero-shot oracle returns the gold vector") {
  MultiAgentHarness harness(fixture(16));
  auto backend = std::make_shared<OracleBackend>(harness.dataset);
  LlmClient client(backend, RetryPolicy{}, nullptr, [](int) {});
  GroupedContext context;
  context.rubric = &harness.dataset.rubric;
  context.model_id = "test-model";

  const auto& item = harness.test.items.front();
  auto scores = score_grouped(item.transcript, item.transcript.raw_text,
                              context, client);
  REQUIRE(scores.ok());
  CHECK(scores.value().scores == item.gold.scores);

  // The issued request carries exactly the renderer's fingerprint.
  auto expected = render_grouped_prompt(harness.dataset.rubric, {},
                                        item.transcript.raw_text);
  REQUIRE(expected.ok());
  REQUIRE(client.call_log().size() == 1);
  CHECK(client.call_log()[0].tags.at("prompt_fingerprint") ==
        expected.value().fingerprint);
}

TEST_CASE("score_grouped fails the whole item after two malformed answers") {
  MultiAgentHarness harness(fixture(16));
  auto scripted = std::make_shared<ScriptedBackend>(
      std::vector<Result<ChatResponse>>{text_response("no scores here"),
                                        text_response("still no scores")});
  LlmClient client(scripted, RetryPolicy{}, nullptr, [](int) {});
  GroupedContext context;
  context.rubric = &harness.dataset.rubric;
  context.model_id = "test-model";

  const auto& item = harness.test.items.front();
  auto scores = score_grouped(item.transcript, item.transcript.raw_text,
                              context, client);
  REQUIRE_FALSE(scores.ok());
  CHECK(scores.error().code == "missing");
  CHECK(scripted->calls() == 2);  // original ask + one cache-bypassing re-ask
}

TEST_CASE("run_experiment oracle end to end: perfect report, exact call count") {
  const auto out_dir = testsupport::fresh_temp_dir("e2e_oracle");
  RunConfig config = base_config(out_dir);
  config.preprocessing = true;

  auto record = run_experiment(config);
  REQUIRE(record.ok());

  const std::size_t test_items = 4;  // 16 items, 0.75 train fraction
  REQUIRE(record.value().predictions.size() == test_items * 9);
  for (const auto& [key, outcome] : record.value().predictions) {
    CHECK(outcome.ok);
  }
  for (const auto& [cid, metrics] : record.value().report.per_criterion) {
    CHECK(metrics.qwk == doctest::Approx(1.0));
    CHECK(metrics.mse == 0.0);
    CHECK(metrics.failed == 0);
  }
  CHECK(record.value().report.avg_qwk == doctest::Approx(1.0));
  CHECK(record.value().report.avg_mse == 0.0);
  CHECK(record.value().backend_calls ==
        static_cast<std::int64_t>(test_items * 9 + test_items));
  CHECK(record.value().preprocess_fallbacks.empty());

  for (const char* name :
       {"config.json", "predictions.jsonl", "report.json", "report.csv",
        "report.md", "error_histogram.csv", "events.jsonl"}) {
    CHECK(fs::exists(fs::path(record.value().run_dir) / name));
  }
  std::filesystem::remove_all(out_dir);
}

TEST_CASE("exemplar provenance: no prompt reuses the scored transcript") {
  const auto out_dir = testsupport::fresh_temp_dir("provenance");
  RunConfig config = base_config(out_dir);
  auto record = run_experiment(config);
  REQUIRE(record.ok());

  std::ifstream events(fs::path(record.value().run_dir) / "events.jsonl");
  std::string line;
  std::size_t checked = 0;
  while (std::getline(events, line)) {
    json event = json::parse(line, nullptr, false);
    if (event.is_discarded() || event.value("event", "") != "llm_call") continue;
    if (!event.contains("exemplar_ids")) continue;
    const std::string scored = event.value("transcript_id", "");
    const std::string exemplars = event["exemplar_ids"].get<std::string>();
    std::stringstream stream(exemplars);
    std::string id;
    while (std::getline(stream, id, ',')) {
      CHECK(id != scored);
      ++checked;
    }
  }
  CHECK(checked > 0);
  std::filesystem::remove_all(out_dir);
}

TEST_CASE("run_experiment offset mock equals the metric oracle on the pattern") {
  const auto out_dir = testsupport::fresh_temp_dir("e2e_offset");
  RunConfig config = base_config(out_dir);
  config.backend.kind = "mock-offset";
  config.backend.offsets = {1, 0, -1, 0, 2};

  auto record = run_experiment(config);
  REQUIRE(record.ok());

  // Recompute expectations straight from the pattern definition.
  const Dataset dataset = fixture(16);
  auto parts = split_dataset(dataset, config.split);
  REQUIRE(parts.ok());
  for (const auto& criterion : dataset.rubric.criteria) {
    std::vector<int> truth, pred;
    for (const auto& item : parts.value().test.items) {
      const int gold = item.gold.scores.at(criterion.id);
      int expected = gold + OffsetBackend::offset_for(item.transcript.id,
                                                      criterion.id,
                                                      config.backend.offsets);
      expected = std::max(1, std::min(7, expected));
      truth.push_back(gold);
      pred.push_back(expected);

      const auto& outcome = record.value().predictions.at(
          {item.transcript.id, criterion.id});
      REQUIRE(outcome.ok);
      CHECK(outcome.score == expected);
    }
    const auto expected_qwk = testsupport::oracle_qwk(truth, pred, 1, 7);
    const auto& metrics = record.value().report.per_criterion.at(criterion.id);
    CHECK(std::abs(metrics.qwk - expected_qwk.value) < 1e-12);
    CHECK(std::abs(metrics.mse - testsupport::oracle_mse(truth, pred)) < 1e-12);
  }
  std::filesystem::remove_all(out_dir);
}

TEST_CASE("warm cache rerun: identical record fingerprint, zero backend calls") {
  const auto out_dir = testsupport::fresh_temp_dir("cache_rerun");
  RunConfig config = base_config(out_dir);
  config.preprocessing = true;
  config.cache_path = (out_dir / "responses.jsonl").string();

  auto first = run_experiment(config);
  REQUIRE(first.ok());
  CHECK(first.value().backend_calls > 0);

  config.output_dir = (out_dir / "second").string();
  auto second = run_experiment(config);
  REQUIRE(second.ok());
  CHECK(second.value().backend_calls == 0);
  CHECK(second.value().record_fingerprint() ==
        first.value().record_fingerprint());
  CHECK(second.value().canonical_report_json() ==
        first.value().canonical_report_json());
  std::filesystem::remove_all(out_dir);
}

TEST_CASE("reports are byte-identical across concurrency levels") {
  std::vector<std::string> reports;
  std::vector<fs::path> dirs;
  for (int concurrency : {1, 2, 8}) {
    const auto out_dir =
        testsupport::fresh_temp_dir("conc" + std::to_string(concurrency));
    dirs.push_back(out_dir);
    RunConfig config = base_config(out_dir);
    config.preprocessing = true;
    config.concurrency = concurrency;
    auto record = run_experiment(config);
    REQUIRE(record.ok());
    reports.push_back(testsupport::read_file(
        (fs::path(record.value().run_dir) / "report.json").string()));
    REQUIRE_FALSE(reports.back().empty());
  }
  CHECK(reports[0] == reports[1]);
  CHECK(reports[0] == reports[2]);
  for (const auto& dir : dirs) std::filesystem::remove_all(dir);
}

TEST_CASE("run_experiment with integrated calibration stays well formed") {
  const auto out_dir = testsupport::fresh_temp_dir("rag_ic");
  RunConfig config = base_config(out_dir);
  config.rag.variant = RagVariant::IntegratedCalibration;
  config.embeddings.provider = "hash";
  config.embeddings.dimension = 16;

  auto record = run_experiment(config);
  REQUIRE(record.ok());
  for (const auto& [key, outcome] : record.value().predictions) {
    CHECK(outcome.ok);  // oracle backend: still gold
  }
  CHECK(record.value().report.avg_qwk == doctest::Approx(1.0));
  std::filesystem::remove_all(out_dir);
}

TEST_CASE("grouped strategies run end to end") {
  const auto out_dir = testsupport::fresh_temp_dir("grouped");
  RunConfig config = base_config(out_dir);
  config.strategy = StrategyKind::FewShotGrouped;
  auto record = run_experiment(config);
  REQUIRE(record.ok());
  CHECK(record.value().report.avg_qwk == doctest::Approx(1.0));
  CHECK(record.value().backend_calls == 4);  // one grouped call per test item

  RunConfig zero = base_config(out_dir);
  zero.strategy = StrategyKind::ZeroShotGrouped;
  zero.run_name = "zero";
  auto zero_record = run_experiment(zero);
  REQUIRE(zero_record.ok());
  CHECK(zero_record.value().report.avg_mse == 0.0);
  std::filesystem::remove_all(out_dir);
}

TEST_CASE("run_ablation orders base above the degraded no-examples run") {
  const auto out_dir = testsupport::fresh_temp_dir("ablation");
  RunConfig config = base_config(out_dir);
  config.backend.kind = "mock-degrade";
  config.backend.offsets = {2, -2, 1, -1, 2, -2};

  auto report = run_ablation(config, {"no_examples"});
  REQUIRE(report.ok());
  REQUIRE(report.value().rows.size() == 2);
  CHECK(report.value().rows[0].label == "base");
  CHECK(report.value().rows[1].label == "no_examples");
  CHECK(report.value().rows[0].report.avg_qwk >
        report.value().rows[1].report.avg_qwk);
  CHECK(report.value().table_csv.find("configuration") == 0);
  CHECK(fs::exists(fs::path(report.value().records[0].run_dir) /
                   "ablation.csv"));

  // Empty ablation set: only the base row.
  auto base_only = run_ablation(config, {});
  REQUIRE(base_only.ok());
  CHECK(base_only.value().rows.size() == 1);
  std::filesystem::remove_all(out_dir);
}

TEST_CASE("reduced-rubric ablation on a 1..6 scale changes the prompts") {
  const auto out_dir = testsupport::fresh_temp_dir("reduced");
  // A small 1..6-scale dataset persisted through the canonical schema.
  Dataset narrow;
  narrow.name = "narrow";
  narrow.rubric.question_id = "q8";
  narrow.rubric.question_text = "Write about a time laughter helped you.";
  narrow.rubric.criteria.push_back(testsupport::criterion("c1", 1, 6));
  narrow.rubric.criteria.push_back(testsupport::criterion("c2", 1, 6));
  SeededRng rng(3);
  for (int i = 0; i < 12; ++i) {
    DatasetItem item;
    item.transcript.id = "e" + std::to_string(10 + i);
    item.transcript.question_id = "q8";
    item.transcript.raw_text =
        "Essay number " + std::to_string(i) + " about laughter and patience.";
    item.gold.transcript_id = item.transcript.id;
    item.gold.scores["c1"] = 1 + static_cast<int>(rng.next_below(6));
    item.gold.scores["c2"] = 1 + static_cast<int>(rng.next_below(6));
    narrow.items.push_back(std::move(item));
  }
  REQUIRE(save_dataset(narrow, (out_dir / "narrow").string()).ok());

  RunConfig config;
  config.run_name = "narrow";
  config.dataset_manifest = (out_dir / "narrow" / "manifest.json").string();
  config.backend.kind = "mock-oracle";
  config.split = {0.75, 7};
  config.output_dir = (out_dir / "runs").string();

  auto report = run_ablation(config, {"reduced_rubric"});
  REQUIRE(report.ok());
  REQUIRE(report.value().records.size() == 2);

  // Both runs succeed (the reduced 1..6 rubric resolves), and the reduced
  // run's criterion prompts differ from the base run's.
  auto fingerprints_of = [](const std::string& run_dir) {
    std::set<std::string> fingerprints;
    std::ifstream events(fs::path(run_dir) / "events.jsonl");
    std::string line;
    while (std::getline(events, line)) {
      json event = json::parse(line, nullptr, false);
      if (event.is_discarded()) continue;
      if (event.value("template", "") != "criterion_agent") continue;
      fingerprints.insert(event.value("prompt_fingerprint", ""));
    }
    return fingerprints;
  };
  const auto base_prompts =
      fingerprints_of(report.value().records[0].run_dir);
  const auto reduced_prompts =
      fingerprints_of(report.value().records[1].run_dir);
  REQUIRE_FALSE(base_prompts.empty());
  REQUIRE_FALSE(reduced_prompts.empty());
  for (const auto& fingerprint : reduced_prompts) {
    CHECK_FALSE(base_prompts.count(fingerprint));
  }
  CHECK(report.value().rows[1].report.avg_qwk == doctest::Approx(1.0));
  std::filesystem::remove_all(out_dir);
}

TEST_CASE("evaluate_run_dir reproduces the persisted report") {
  const auto out_dir = testsupport::fresh_temp_dir("evaluate");
  RunConfig config = base_config(out_dir);
  config.backend.kind = "mock-offset";
  auto record = run_experiment(config);
  REQUIRE(record.ok());

  auto recomputed = evaluate_run_dir(record.value().run_dir);
  REQUIRE(recomputed.ok());
  CHECK(recomputed.value().avg_qwk ==
        doctest::Approx(record.value().report.avg_qwk).epsilon(1e-12));
  CHECK(recomputed.value().avg_mse ==
        doctest::Approx(record.value().report.avg_mse).epsilon(1e-12));
  std::filesystem::remove_all(out_dir);
}

TEST_CASE("emit_report_files regenerates tables from report.json") {
  const auto out_dir = testsupport::fresh_temp_dir("emit");
  RunConfig config = base_config(out_dir);
  auto record = run_experiment(config);
  REQUIRE(record.ok());

  fs::remove(fs::path(record.value().run_dir) / "report.csv");
  auto files = emit_report_files(record.value().run_dir);
  REQUIRE(files.ok());
  CHECK(files.value().size() == 3);
  const std::string csv = testsupport::read_file(
      (fs::path(record.value().run_dir) / "report.csv").string());
  CHECK(csv.find("Avg,1.000,0.000") != std::string::npos);

  // Histogram rows sum to the scored item count.
  const std::string histogram = testsupport::read_file(
      (fs::path(record.value().run_dir) / "error_histogram.csv").string());
  std::size_t total = 0;
  std::stringstream stream(histogram);
  std::string line;
  std::getline(stream, line);  // header
  while (std::getline(stream, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    total += static_cast<std::size_t>(std::stoul(line.substr(comma + 1)));
  }
  CHECK(total == record.value().predictions.size());
  std::filesystem::remove_all(out_dir);
}

TEST_CASE("embed stage builds a cache and reuses it") {
  const auto out_dir = testsupport::fresh_temp_dir("embed");
  const auto dataset = fixture(8);
  EmbeddingConfig config;
  config.provider = "hash";
  config.dimension = 8;
  config.cache_path = (out_dir / "embeddings.jsonl").string();

  auto first = embed_dataset_stage(dataset, config);
  REQUIRE(first.ok());
  json summary = json::parse(first.value());
  CHECK(summary["embedded"] == 8);
  CHECK(summary["reused"] == 0);

  auto second = embed_dataset_stage(dataset, config);
  REQUIRE(second.ok());
  summary = json::parse(second.value());
  CHECK(summary["embedded"] == 0);
  CHECK(summary["reused"] == 8);
  std::filesystem::remove_all(out_dir);
}

TEST_CASE("cluster stage assigns every sentence deterministically") {
  const auto dataset = fixture(10);
  EmbeddingConfig config;
  config.provider = "hash";
  config.dimension = 8;

  auto first = cluster_sentences_stage(dataset, config, 5, 11, 50);
  auto second = cluster_sentences_stage(dataset, config, 5, 11, 50);
  REQUIRE(first.ok());
  REQUIRE(second.ok());
  CHECK(first.value().assignments_csv == second.value().assignments_csv);

  std::size_t expected = 0;
  for (const auto& item : dataset.items) {
    expected += split_sentences(item.transcript.raw_text).size();
  }
  std::size_t rows = 0;
  std::stringstream stream(first.value().assignments_csv);
  std::string line;
  std::getline(stream, line);  // header
  while (std::getline(stream, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == expected);

  json summary = json::parse(first.value().summary_json);
  CHECK(summary["sentences"] == expected);
  CHECK(summary["cluster_sizes"].size() == 5);
}

TEST_CASE("exemplar bank audit lists anchors for every criterion") {
  const auto dataset = fixture(16);
  auto audit = exemplar_bank_audit(dataset, {0.75, 7}, false);
  REQUIRE(audit.ok());
  json root = json::parse(audit.value());
  CHECK(root["banks"].size() == 9);
  for (const auto& bank : root["banks"]) {
    CHECK(bank["ranked"].size() == 12);
    CHECK(bank["anchors"]["low"].get<int>() <=
          bank["anchors"]["high"].get<int>());
    CHECK(bank["selected"].size() == 3);
  }
}

TEST_CASE("run config json round trip and validation") {
  RunConfig config;
  FixtureSpec spec;
  config.dataset_fixture = spec;
  config.preprocessing = true;
  config.concurrency = 4;
  auto parsed = RunConfig::from_json(config.to_json());
  REQUIRE(parsed.ok());
  CHECK(parsed.value().fingerprint() == config.fingerprint());
  CHECK(parsed.value().concurrency == 4);

  // Concurrency and output paths are execution knobs, not identity.
  RunConfig other = config;
  other.concurrency = 8;
  other.output_dir = "elsewhere";
  CHECK(other.fingerprint() == config.fingerprint());
  other.model_id = "different";
  CHECK(other.fingerprint() != config.fingerprint());

  CHECK_FALSE(RunConfig::from_json("{not json").ok());
  CHECK_FALSE(RunConfig::from_json("{}").ok());  // no dataset

  // MultiAgent demands 3 tiers unless no_examples.
  auto bad = RunConfig::from_json(R"({
    "dataset": {"fixture": {}}, "strategy": "multi_agent",
    "shots": ["low", "high"]
  })");
  REQUIRE_FALSE(bad.ok());

  auto ablated = RunConfig::from_json(R"({
    "dataset": {"fixture": {}}, "strategy": "multi_agent",
    "shots": [], "no_examples": true
  })");
  CHECK(ablated.ok());

  auto bad_rag = RunConfig::from_json(R"({
    "dataset": {"fixture": {}}, "strategy": "few_shot_grouped",
    "shots": ["low", "medium", "high"], "rag": {"kind": "top_k", "k": 3}
  })");
  REQUIRE_FALSE(bad_rag.ok());
}
