#include "traitscore/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "traitscore/embedding_http.hpp"
#include "traitscore/hashing.hpp"
#include "traitscore/prompts.hpp"
#include "traitscore/text.hpp"

namespace traitscore {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kCriterionMaxTokens = 64;
constexpr int kGroupedMaxTokens = 256;
constexpr int kPreprocessMaxTokens = 2048;

const char* strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::ZeroShotGrouped: return "zero_shot_grouped";
    case StrategyKind::FewShotGrouped: return "few_shot_grouped";
    case StrategyKind::MultiAgent: return "multi_agent";
  }
  return "multi_agent";
}

Result<StrategyKind> strategy_from_name(const std::string& name) {
  if (name == "zero_shot_grouped") return StrategyKind::ZeroShotGrouped;
  if (name == "few_shot_grouped") return StrategyKind::FewShotGrouped;
  if (name == "multi_agent") return StrategyKind::MultiAgent;
  return make_error("config", "unknown strategy '" + name + "'");
}

const char* rag_name(RagVariant variant) {
  switch (variant) {
    case RagVariant::None: return "none";
    case RagVariant::TopK: return "top_k";
    case RagVariant::BasePlusOne: return "base_plus_one";
    case RagVariant::IntegratedCalibration: return "integrated_calibration";
  }
  return "none";
}

Result<RagVariant> rag_from_name(const std::string& name) {
  if (name == "none") return RagVariant::None;
  if (name == "top_k") return RagVariant::TopK;
  if (name == "base_plus_one") return RagVariant::BasePlusOne;
  if (name == "integrated_calibration") return RagVariant::IntegratedCalibration;
  return make_error("config", "unknown rag strategy '" + name + "'");
}

std::string env_or_empty(const std::string& name) {
  const char* value = std::getenv(name.c_str());
  return value ? std::string(value) : std::string();
}

// Bounded worker pool over an indexed task list; results land in
// caller-owned slots so aggregation order never depends on the schedule.
void parallel_for(std::size_t task_count, int workers,
                  const std::function<void(std::size_t)>& body) {
  if (task_count == 0) return;
  const std::size_t pool =
      std::min<std::size_t>(std::max(workers, 1), task_count);
  if (pool <= 1) {
    for (std::size_t i = 0; i < task_count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(pool);
  for (std::size_t t = 0; t < pool; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < task_count;
           i = next.fetch_add(1)) {
        body(i);
      }
    });
  }
  for (auto& thread : threads) thread.join();
}

}  // namespace

RunConfig::RunConfig()
    : shots{{Tier::Low, Tier::Medium, Tier::High}} {}

Result<RunConfig> RunConfig::from_json(const std::string& json_text) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) {
    return make_error("config", "run config is not valid JSON");
  }
  RunConfig config;
  config.run_name = root.value("run_name", "run");
  if (root.contains("dataset")) {
    const auto& dataset = root["dataset"];
    if (dataset.contains("manifest")) {
      config.dataset_manifest = dataset["manifest"].get<std::string>();
    }
    if (dataset.contains("fixture")) {
      FixtureSpec spec;
      spec.question = dataset["fixture"].value("question", 1);
      spec.seed = dataset["fixture"].value("seed", 42ULL);
      spec.items = dataset["fixture"].value("items", 30U);
      config.dataset_fixture = spec;
    }
  }
  if (config.dataset_manifest.empty() && !config.dataset_fixture) {
    return make_error("config", "dataset.manifest or dataset.fixture required");
  }
  config.model_id = root.value("model_id", config.model_id);
  config.preprocess_model_id = root.value("preprocess_model_id", "");
  if (root.contains("strategy")) {
    auto kind = strategy_from_name(root["strategy"].get<std::string>());
    if (!kind.ok()) return kind.error();
    config.strategy = kind.value();
  }
  if (root.contains("shots")) {
    config.shots.tiers.clear();
    for (const auto& name : root["shots"]) {
      auto tier = tier_from_name(name.get<std::string>());
      if (!tier.ok()) return tier.error();
      config.shots.tiers.push_back(tier.value());
    }
  }
  if (root.contains("rag")) {
    auto variant = rag_from_name(root["rag"].value("kind", "none"));
    if (!variant.ok()) return variant.error();
    config.rag.variant = variant.value();
    config.rag.k = root["rag"].value("k", 1);
  }
  config.preprocessing = root.value("preprocessing", false);
  config.no_examples = root.value("no_examples", false);
  const std::string variant = root.value("rubric_variant", "full");
  if (variant == "reduced") {
    config.rubric_variant = RubricVariant::Reduced;
  } else if (variant != "full") {
    return make_error("config", "rubric_variant must be full or reduced");
  }
  if (root.contains("split")) {
    config.split.train_fraction =
        root["split"].value("train_fraction", config.split.train_fraction);
    config.split.seed = root["split"].value("seed", config.split.seed);
  }
  config.concurrency = root.value("concurrency", 1);
  config.seed = root.value("seed", 0ULL);
  config.temperature = root.value("temperature", 0.0);
  if (root.contains("backend")) {
    const auto& backend = root["backend"];
    config.backend.kind = backend.value("kind", config.backend.kind);
    config.backend.base_url = backend.value("base_url", "");
    config.backend.api_key_env =
        backend.value("api_key_env", config.backend.api_key_env);
    config.backend.timeout_seconds =
        backend.value("timeout_seconds", config.backend.timeout_seconds);
    config.backend.fixture_path = backend.value("fixture_path", "");
    if (backend.contains("offsets")) {
      config.backend.offsets = backend["offsets"].get<std::vector<int>>();
    }
    config.backend.constant = backend.value("constant", config.backend.constant);
  }
  if (root.contains("embeddings")) {
    const auto& embeddings = root["embeddings"];
    config.embeddings.provider =
        embeddings.value("provider", config.embeddings.provider);
    config.embeddings.model_id =
        embeddings.value("model_id", config.embeddings.model_id);
    config.embeddings.dimension =
        embeddings.value("dimension", config.embeddings.dimension);
    config.embeddings.base_url = embeddings.value("base_url", "");
    config.embeddings.api_key_env =
        embeddings.value("api_key_env", config.embeddings.api_key_env);
    config.embeddings.cache_path = embeddings.value("cache_path", "");
  }
  if (root.contains("use_cleaned_exemplar_text")) {
    config.use_cleaned_exemplar_text =
        root["use_cleaned_exemplar_text"].get<bool>();
  }
  config.output_dir = root.value("output_dir", config.output_dir);
  config.cache_path = root.value("cache_path", "");
  if (root.contains("retry")) {
    config.retry.max_retries =
        root["retry"].value("max_retries", config.retry.max_retries);
    config.retry.base_delay_ms =
        root["retry"].value("base_delay_ms", config.retry.base_delay_ms);
    config.retry.max_delay_ms =
        root["retry"].value("max_delay_ms", config.retry.max_delay_ms);
  }

  // Cross-field invariants.
  if (config.strategy == StrategyKind::ZeroShotGrouped) {
    config.shots.tiers.clear();
  }
  if (config.strategy == StrategyKind::FewShotGrouped &&
      (config.shots.tiers.empty() || config.shots.tiers.size() > 5)) {
    return make_error("config", "few-shot grouped needs 1..5 shot tiers");
  }
  if (config.no_examples && config.strategy != StrategyKind::MultiAgent) {
    return make_error("config", "no_examples applies to multi_agent only");
  }
  if (config.strategy == StrategyKind::MultiAgent && !config.no_examples &&
      config.shots.tiers.size() != 3) {
    return make_error("config",
                      "multi_agent requires a 3-tier shot config unless "
                      "no_examples is set");
  }
  if (config.rag.variant != RagVariant::None &&
      config.strategy != StrategyKind::MultiAgent) {
    return make_error("config", "rag strategies apply to multi_agent only");
  }
  if (config.rag.variant == RagVariant::BasePlusOne) {
    return make_error("config",
                      "base_plus_one yields 4 exemplars; criterion prompts "
                      "take exactly 3 (use it via apply_rag_strategy directly)");
  }
  if (config.rag.variant == RagVariant::TopK && config.rag.k != 3) {
    return make_error("config",
                      "multi_agent top_k needs k=3 to fill the 3 example "
                      "slots");
  }
  if (Status status = validate_rag_strategy(config.rag); !status.ok()) {
    return status.error();
  }
  return config;
}

std::string RunConfig::to_json() const {
  json shots = json::array();
  for (Tier tier : this->shots.tiers) shots.push_back(tier_name(tier));
  json dataset = json::object();
  if (!dataset_manifest.empty()) dataset["manifest"] = dataset_manifest;
  if (dataset_fixture) {
    dataset["fixture"] = {{"question", dataset_fixture->question},
                          {"seed", dataset_fixture->seed},
                          {"items", dataset_fixture->items}};
  }
  json root = {
      {"run_name", run_name},
      {"dataset", dataset},
      {"model_id", model_id},
      {"strategy", strategy_name(strategy)},
      {"shots", shots},
      {"rag", {{"kind", rag_name(rag.variant)}, {"k", rag.k}}},
      {"preprocessing", preprocessing},
      {"no_examples", no_examples},
      {"rubric_variant",
       rubric_variant == RubricVariant::Reduced ? "reduced" : "full"},
      {"split",
       {{"train_fraction", split.train_fraction}, {"seed", split.seed}}},
      {"concurrency", concurrency},
      {"seed", seed},
      {"temperature", temperature},
      {"backend",
       {{"kind", backend.kind},
        {"base_url", backend.base_url},
        {"api_key_env", backend.api_key_env},
        {"timeout_seconds", backend.timeout_seconds},
        {"fixture_path", backend.fixture_path},
        {"offsets", backend.offsets},
        {"constant", backend.constant}}},
      {"embeddings",
       {{"provider", embeddings.provider},
        {"model_id", embeddings.model_id},
        {"dimension", embeddings.dimension},
        {"base_url", embeddings.base_url},
        {"api_key_env", embeddings.api_key_env},
        {"cache_path", embeddings.cache_path}}},
      {"use_cleaned_exemplar_text", cleaned_exemplar_text()},
      {"output_dir", output_dir},
      {"cache_path", cache_path},
      {"retry",
       {{"max_retries", retry.max_retries},
        {"base_delay_ms", retry.base_delay_ms},
        {"max_delay_ms", retry.max_delay_ms}}},
  };
  if (!preprocess_model_id.empty()) {
    root["preprocess_model_id"] = preprocess_model_id;
  }
  return root.dump(2);
}

std::string RunConfig::fingerprint() const {
  StableHash hash;
  hash.field(run_name).field(dataset_manifest);
  if (dataset_fixture) {
    hash.field(std::to_string(dataset_fixture->question))
        .field(std::to_string(dataset_fixture->seed))
        .field(std::to_string(dataset_fixture->items));
  }
  hash.field(model_id)
      .field(preprocess_model_id)
      .field(strategy_name(strategy));
  for (Tier tier : shots.tiers) hash.field(tier_name(tier));
  hash.field(rag_name(rag.variant)).field(std::to_string(rag.k));
  hash.field(preprocessing ? "pre" : "nopre")
      .field(no_examples ? "noex" : "ex")
      .field(rubric_variant == RubricVariant::Reduced ? "reduced" : "full")
      .field(format_double(split.train_fraction))
      .field(std::to_string(split.seed))
      .field(std::to_string(seed))
      .field(format_double(temperature))
      .field(backend.kind)
      .field(backend.base_url)
      .field(backend.fixture_path)
      .field(std::to_string(backend.constant));
  for (int offset : backend.offsets) hash.field(std::to_string(offset));
  hash.field(embeddings.provider)
      .field(embeddings.model_id)
      .field(std::to_string(embeddings.dimension))
      .field(cleaned_exemplar_text() ? "cleaned" : "raw");
  return hash.hex();
}

std::string RunRecord::canonical_report_json() const {
  json root = json::parse(report_json(report));
  root["usage_totals"] = {
      {"prompt_tokens", usage_totals.prompt_tokens},
      {"completion_tokens", usage_totals.completion_tokens},
  };
  return root.dump(2);
}

std::string RunRecord::record_fingerprint() const {
  return StableHash()
      .field(config_fingerprint)
      .field(canonical_report_json())
      .hex();
}

// ---- dataset / backend wiring -----------------------------------------------------

Result<Dataset> load_run_dataset(const RunConfig& config) {
  if (!config.dataset_manifest.empty()) {
    auto ingest = ingest_from_path(config.dataset_manifest);
    if (!ingest.ok()) return ingest.error();
    return ingest.take().dataset;
  }
  if (config.dataset_fixture) {
    return make_fixture_dataset(*config.dataset_fixture);
  }
  return make_error("config", "run config names no dataset");
}

std::shared_ptr<ChatBackend> make_backend(const BackendConfig& config,
                                          const Dataset& dataset,
                                          Error* error) {
  auto fail = [error](Error e) -> std::shared_ptr<ChatBackend> {
    if (error) *error = std::move(e);
    return nullptr;
  };
  if (config.kind == "mock-oracle") {
    return std::make_shared<OracleBackend>(dataset);
  }
  if (config.kind == "mock-offset") {
    return std::make_shared<OffsetBackend>(dataset, config.offsets);
  }
  if (config.kind == "mock-constant") {
    return std::make_shared<ConstantBackend>(dataset, config.constant);
  }
  if (config.kind == "mock-degrade") {
    return std::make_shared<DegradeBackend>(dataset, config.offsets);
  }
  if (config.kind == "fixture") {
    auto backend = FixtureBackend::from_jsonl(config.fixture_path);
    if (!backend.ok()) return fail(backend.error());
    return backend.value();
  }
  if (config.kind == "http") {
    std::string base_url = config.base_url;
    if (base_url.empty()) base_url = env_or_empty("TRAITSCORE_BASE_URL");
    if (base_url.empty()) {
      return fail(make_error("config",
                             "http backend needs base_url (config or "
                             "TRAITSCORE_BASE_URL)"));
    }
    HttpBackendConfig http;
    http.base_url = base_url;
    http.api_key = env_or_empty(config.api_key_env);
    http.timeout_seconds = config.timeout_seconds;
    return std::make_shared<HttpChatBackend>(
        make_httplib_transport(base_url, config.timeout_seconds), http);
  }
  return fail(make_error("config", "unknown backend kind '" + config.kind + "'"));
}

namespace {

Result<std::unique_ptr<EmbeddingClient>> make_embedding_client(
    const EmbeddingConfig& config) {
  if (config.provider == "hash") {
    return std::unique_ptr<EmbeddingClient>(
        new HashEmbeddingClient(config.model_id, config.dimension));
  }
  if (config.provider == "http") {
    std::string base_url = config.base_url;
    if (base_url.empty()) base_url = env_or_empty("TRAITSCORE_EMBED_BASE_URL");
    if (base_url.empty()) base_url = env_or_empty("TRAITSCORE_BASE_URL");
    if (base_url.empty()) {
      return make_error("config", "http embeddings need a base_url");
    }
    HttpBackendConfig http;
    http.base_url = base_url;
    http.api_key = env_or_empty(config.api_key_env);
    return make_http_embedding_client(make_httplib_transport(base_url, 120),
                                      http, config.model_id, config.dimension);
  }
  return make_error("config",
                    "unknown embedding provider '" + config.provider + "'");
}

struct EmbeddingCacheFile {
  // (transcript_id) -> vector, for one model id.
  std::map<std::string, std::vector<double>> vectors;
};

Result<EmbeddingCacheFile> load_embedding_cache(const std::string& path,
                                                const std::string& model_id) {
  EmbeddingCacheFile cache;
  std::ifstream in(path);
  if (!in) return cache;  // absent cache is empty, not an error
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json entry = json::parse(line, nullptr, false);
    if (entry.is_discarded() || !entry.contains("transcript_id") ||
        !entry.contains("vector")) {
      return make_error("cache_corrupt", path + ":" + std::to_string(line_no) +
                                             ": unreadable embedding line");
    }
    if (entry.value("model_id", "") != model_id) continue;
    cache.vectors[entry["transcript_id"].get<std::string>()] =
        entry["vector"].get<std::vector<double>>();
  }
  return cache;
}

Status append_embedding_cache(
    const std::string& path, const std::string& model_id,
    const std::vector<std::pair<std::string, std::vector<double>>>& records) {
  if (records.empty()) return Status::success();
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::app);
  if (!out) return make_error("io", "cannot append to '" + path + "'");
  for (const auto& [id, vector] : records) {
    const json entry = {
        {"transcript_id", id}, {"model_id", model_id}, {"vector", vector}};
    out << entry.dump() << "\n";
  }
  return Status::success();
}

// Embeddings for every transcript's raw text, cache-first.
Result<VectorStore> build_vector_store(const Dataset& dataset,
                                       const EmbeddingConfig& config) {
  auto client = make_embedding_client(config);
  if (!client.ok()) return client.error();

  EmbeddingCacheFile cached;
  if (!config.cache_path.empty()) {
    auto loaded = load_embedding_cache(config.cache_path, config.model_id);
    if (!loaded.ok()) return loaded.error();
    cached = loaded.take();
  }

  VectorStore store(config.dimension);
  std::vector<std::pair<std::string, std::string>> to_embed;
  for (const auto& item : dataset.items) {
    auto hit = cached.vectors.find(item.transcript.id);
    if (hit != cached.vectors.end()) {
      auto record = make_embedding_record(item.transcript.id, hit->second);
      if (!record.ok()) return record.error();
      if (Status status = store.add(record.take()); !status.ok()) {
        return status.error();
      }
    } else {
      to_embed.emplace_back(item.transcript.id, item.transcript.raw_text);
    }
  }
  if (!to_embed.empty()) {
    auto entries = embed_batch(to_embed, *client.value());
    if (!entries.ok()) return entries.error();
    std::vector<std::pair<std::string, std::vector<double>>> fresh;
    for (auto& entry : entries.value()) {
      if (!entry.ok) {
        return make_error(entry.error.code,
                          "embedding failed: " + entry.error.message);
      }
      fresh.emplace_back(entry.record.transcript_id, entry.record.vector);
      if (Status status = store.add(std::move(entry.record)); !status.ok()) {
        return status.error();
      }
    }
    if (!config.cache_path.empty()) {
      if (Status status = append_embedding_cache(config.cache_path,
                                                 config.model_id, fresh);
          !status.ok()) {
        return status.error();
      }
    }
  }
  return store;
}

}  // namespace

// ---- stages ------------------------------------------------------------------------

std::vector<PreprocessOutcome> preprocess_stage(std::vector<Transcript>& transcripts,
                                                LlmClient& client,
                                                const std::string& model_id,
                                                double temperature) {
  std::vector<PreprocessOutcome> outcomes;
  outcomes.reserve(transcripts.size());
  for (auto& transcript : transcripts) {
    PreprocessOutcome outcome;
    outcome.transcript_id = transcript.id;
    auto prompt = render_preprocess_prompt(transcript.raw_text);
    if (!prompt.ok()) {
      outcome.raw_fallback = true;
      outcome.note = prompt.error().code;
      outcomes.push_back(std::move(outcome));
      continue;
    }
    ChatRequest request = make_chat_request(model_id, prompt.value(),
                                            temperature, kPreprocessMaxTokens);
    request.tags["transcript_id"] = transcript.id;
    auto response = client.complete(request);
    if (!response.ok()) {
      outcome.raw_fallback = true;
      outcome.note = response.error().code;
      outcomes.push_back(std::move(outcome));
      continue;
    }
    auto cleaned = sanitize_preprocessed(response.value().text);
    if (!cleaned.ok()) {
      outcome.raw_fallback = true;
      outcome.note = cleaned.error().code;
      outcomes.push_back(std::move(outcome));
      continue;
    }
    transcript.cleaned_text = cleaned.take();
    outcome.cleaned = true;
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

namespace {

std::string exemplar_ids_tag(const std::vector<Exemplar>& exemplars) {
  std::vector<std::string> ids;
  ids.reserve(exemplars.size());
  for (const auto& exemplar : exemplars) ids.push_back(exemplar.transcript_id);
  return join(ids, ",");
}

PredictionOutcome fail_outcome(const Error& error) {
  PredictionOutcome outcome;
  outcome.ok = false;
  outcome.failure_code = error.code;
  outcome.failure_message = error.message;
  return outcome;
}

PredictionOutcome score_one_criterion(const Transcript& transcript,
                                      const std::string& response_text,
                                      const Criterion& criterion,
                                      const MultiAgentContext& context,
                                      LlmClient& client) {
  std::vector<Exemplar> exemplars;
  if (!context.no_examples) {
    auto bank = context.banks->find(criterion.id);
    if (bank == context.banks->end()) {
      return fail_outcome(
          make_error("config", "no exemplar bank for " + criterion.id));
    }
    auto base = select_exemplars(bank->second, context.shots, *context.train,
                                 context.use_cleaned_exemplar_text);
    if (!base.ok()) return fail_outcome(base.error());
    exemplars = base.take();
    if (context.rag.variant != RagVariant::None) {
      if (!context.store) {
        return fail_outcome(
            make_error("config", "rag strategy configured without embeddings"));
      }
      auto adjusted = apply_rag_strategy(
          context.rag, exemplars, *context.train, *context.store, transcript,
          criterion.id, context.use_cleaned_exemplar_text);
      if (!adjusted.ok()) return fail_outcome(adjusted.error());
      exemplars = adjusted.take();
    }
  }

  auto descriptors = resolve_rubric(criterion, context.rubric_variant);
  if (!descriptors.ok()) return fail_outcome(descriptors.error());
  auto prompt = render_criterion_prompt(context.rubric->question_text,
                                        criterion, descriptors.value(),
                                        exemplars, response_text,
                                        context.no_examples);
  if (!prompt.ok()) return fail_outcome(prompt.error());

  ChatRequest request = make_chat_request(context.model_id, prompt.value(),
                                          context.temperature,
                                          kCriterionMaxTokens);
  request.tags["transcript_id"] = transcript.id;
  request.tags["criterion_id"] = criterion.id;
  if (!exemplars.empty()) {
    request.tags["exemplar_ids"] = exemplar_ids_tag(exemplars);
  }

  auto response = client.complete(request);
  if (!response.ok()) return fail_outcome(response.error());
  auto score = parse_single_score(response.value().text, criterion);
  if (!score.ok()) {
    // One re-ask past the cache, then the item fails for this criterion.
    request.bypass_cache = true;
    response = client.complete(request);
    if (!response.ok()) return fail_outcome(response.error());
    score = parse_single_score(response.value().text, criterion);
    if (!score.ok()) return fail_outcome(score.error());
  }
  PredictionOutcome outcome;
  outcome.ok = true;
  outcome.score = score.value();
  return outcome;
}

}  // namespace

std::map<std::string, PredictionOutcome> score_multiagent(
    const Transcript& transcript, const std::string& response_text,
    const MultiAgentContext& context, LlmClient& client) {
  std::map<std::string, PredictionOutcome> outcomes;
  for (const auto& criterion : context.rubric->criteria) {
    outcomes[criterion.id] = score_one_criterion(transcript, response_text,
                                                 criterion, context, client);
  }
  return outcomes;
}

Result<ScoreVector> score_grouped(const Transcript& transcript,
                                  const std::string& response_text,
                                  const GroupedContext& context,
                                  LlmClient& client) {
  auto prompt =
      render_grouped_prompt(*context.rubric, context.examples, response_text);
  if (!prompt.ok()) return prompt.error();
  ChatRequest request = make_chat_request(context.model_id, prompt.value(),
                                          context.temperature,
                                          kGroupedMaxTokens);
  request.tags["transcript_id"] = transcript.id;

  auto response = client.complete(request);
  if (!response.ok()) return response.error();
  auto scores = parse_grouped_scores(response.value().text, *context.rubric);
  if (scores.ok()) return scores;

  request.bypass_cache = true;
  response = client.complete(request);
  if (!response.ok()) return response.error();
  return parse_grouped_scores(response.value().text, *context.rubric);
}

// ---- experiment runner ----------------------------------------------------------------

namespace {

// Grouped few-shot examples: whole responses ranked by mean gold score
// (ties by id), picked at the tier percentiles with the adjacent-rank rule.
Result<std::vector<GroupedExample>> select_grouped_examples(
    const Dataset& train, const ShotConfig& shots, bool use_cleaned_text) {
  if (train.items.empty()) {
    return make_error("empty_train", "train split is empty");
  }
  std::vector<std::pair<double, const DatasetItem*>> ranked;
  ranked.reserve(train.items.size());
  for (const auto& item : train.items) {
    double sum = 0.0;
    for (const auto& criterion : train.rubric.criteria) {
      auto it = item.gold.scores.find(criterion.id);
      if (it == item.gold.scores.end()) {
        return make_error("missing_score", "transcript '" + item.transcript.id +
                                               "' lacks a gold score");
      }
      sum += it->second;
    }
    ranked.emplace_back(
        sum / static_cast<double>(train.rubric.criteria.size()), &item);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second->transcript.id < b.second->transcript.id;
  });

  std::map<Tier, std::size_t> occurrences;
  std::vector<GroupedExample> examples;
  for (Tier tier : shots.tiers) {
    std::size_t rank = nearest_rank(tier_percentile(tier), ranked.size());
    rank += occurrences[tier]++;
    if (rank > ranked.size()) rank = ranked.size();
    const DatasetItem* item = ranked[rank - 1].second;
    GroupedExample example;
    example.text = item->transcript.best_text(use_cleaned_text);
    example.scores = item->gold.scores;
    examples.push_back(std::move(example));
  }
  return examples;
}

void write_events_jsonl(const std::string& path, const RunConfig& config,
                        const Dataset& dataset, const LlmClient& client,
                        const std::vector<PreprocessOutcome>& preprocess,
                        std::int64_t backend_calls, std::int64_t wall_ms) {
  std::ofstream out(path);
  const json start = {{"event", "run_start"},
                      {"dataset", dataset.name},
                      {"dataset_fingerprint", dataset.fingerprint()},
                      {"items", dataset.items.size()},
                      {"config_fingerprint", config.fingerprint()}};
  out << start.dump() << "\n";
  for (const auto& outcome : preprocess) {
    const json event = {{"event", "preprocess"},
                        {"transcript_id", outcome.transcript_id},
                        {"cleaned", outcome.cleaned},
                        {"raw_fallback", outcome.raw_fallback},
                        {"note", outcome.note}};
    out << event.dump() << "\n";
  }
  for (const auto& record : client.call_log()) {
    json event = {{"event", "llm_call"},
                  {"fingerprint", record.fingerprint},
                  {"attempts", record.attempts},
                  {"ok", record.ok},
                  {"cached", record.cached},
                  {"prompt_tokens", record.usage.prompt_tokens},
                  {"completion_tokens", record.usage.completion_tokens}};
    if (!record.error_code.empty()) event["error_code"] = record.error_code;
    for (const auto& [key, value] : record.tags) event[key] = value;
    out << event.dump() << "\n";
  }
  const json end = {{"event", "run_end"},
                    {"backend_calls", backend_calls},
                    {"wall_ms", wall_ms}};
  out << end.dump() << "\n";
}

std::string predictions_jsonl(const RunRecord& record) {
  std::string out;
  for (const auto& [key, outcome] : record.predictions) {
    json line = {{"transcript_id", key.first}, {"criterion_id", key.second}};
    if (outcome.ok) {
      line["score"] = outcome.score;
    } else {
      line["failure_code"] = outcome.failure_code;
      line["failure_message"] = outcome.failure_message;
    }
    out += line.dump() + "\n";
  }
  return out;
}

}  // namespace

Result<RunRecord> run_experiment(const RunConfig& config) {
  const auto start_time = std::chrono::steady_clock::now();

  auto dataset_result = load_run_dataset(config);
  if (!dataset_result.ok()) return dataset_result.error();
  const Dataset dataset = dataset_result.take();

  const ValidationReport violations = validate_dataset(dataset);
  if (!violations.empty()) {
    return make_error("invalid_dataset",
                      std::to_string(violations.size()) +
                          " dataset violations; first: " +
                          violations.front().message);
  }

  auto split = split_dataset(dataset, config.split);
  if (!split.ok()) return split.error();
  const Dataset& train = split.value().train;
  Dataset test = split.value().test;
  if (test.items.empty()) {
    return make_error("empty_test", "split produced an empty test set");
  }
  if (train.items.empty()) {
    return make_error("empty_train", "split produced an empty train set");
  }

  Error backend_error;
  auto raw_backend = make_backend(config.backend, dataset, &backend_error);
  if (!raw_backend) return backend_error;
  auto counting = std::make_shared<CountingBackend>(raw_backend);
  std::shared_ptr<ResponseCache> cache;
  if (config.cache_path.empty()) {
    cache = std::make_shared<ResponseCache>();
  } else {
    auto opened = ResponseCache::open(config.cache_path);
    if (!opened.ok()) return opened.error();
    cache = opened.take();
  }
  auto caching = std::make_shared<CachingBackend>(counting, cache);
  auto limiter = std::make_shared<ConcurrencyLimiter>(config.concurrency);
  RetryPolicy policy = config.retry;
  policy.jitter_seed = config.seed;
  LlmClient client(caching, policy, limiter);

  RunRecord record;
  record.config_fingerprint = config.fingerprint();
  record.run_id =
      config.run_name + "-" + record.config_fingerprint.substr(0, 12);

  // Stage 1: preprocessing over the test split only.
  std::vector<PreprocessOutcome> preprocess_outcomes;
  if (config.preprocessing) {
    std::vector<Transcript> transcripts;
    transcripts.reserve(test.items.size());
    for (const auto& item : test.items) transcripts.push_back(item.transcript);
    const std::string preprocess_model = config.preprocess_model_id.empty()
                                             ? config.model_id
                                             : config.preprocess_model_id;
    preprocess_outcomes =
        preprocess_stage(transcripts, client, preprocess_model,
                         config.temperature);
    for (std::size_t i = 0; i < test.items.size(); ++i) {
      test.items[i].transcript = transcripts[i];
    }
    for (const auto& outcome : preprocess_outcomes) {
      if (outcome.raw_fallback) {
        record.preprocess_fallbacks.push_back(outcome.transcript_id);
      }
    }
  }

  // Stage 2: scoring.
  if (config.strategy == StrategyKind::MultiAgent) {
    std::map<std::string, ExemplarBank> banks;
    if (!config.no_examples) {
      for (const auto& criterion : dataset.rubric.criteria) {
        auto bank = build_bank(train, criterion.id);
        if (!bank.ok()) return bank.error();
        banks[criterion.id] = bank.take();
      }
    }
    std::optional<VectorStore> store;
    if (config.rag.variant != RagVariant::None) {
      auto built = build_vector_store(dataset, config.embeddings);
      if (!built.ok()) return built.error();
      store.emplace(built.take());
    }

    MultiAgentContext context;
    context.train = &train;
    context.rubric = &dataset.rubric;
    context.banks = &banks;
    context.store = store ? &*store : nullptr;
    context.shots = config.shots;
    context.rag = config.rag;
    context.use_cleaned_exemplar_text = config.cleaned_exemplar_text();
    context.no_examples = config.no_examples;
    context.rubric_variant = config.rubric_variant;
    context.model_id = config.model_id;
    context.temperature = config.temperature;

    struct Task {
      const DatasetItem* item;
      const Criterion* criterion;
    };
    std::vector<Task> tasks;
    tasks.reserve(test.items.size() * dataset.rubric.criteria.size());
    for (const auto& item : test.items) {
      for (const auto& criterion : dataset.rubric.criteria) {
        tasks.push_back({&item, &criterion});
      }
    }
    std::vector<PredictionOutcome> outcomes(tasks.size());
    parallel_for(tasks.size(), config.concurrency, [&](std::size_t i) {
      const Task& task = tasks[i];
      const std::string& response_text =
          task.item->transcript.best_text(config.preprocessing);
      outcomes[i] = score_one_criterion(task.item->transcript, response_text,
                                        *task.criterion, context, client);
    });
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      record.predictions[{tasks[i].item->transcript.id,
                          tasks[i].criterion->id}] = outcomes[i];
    }
  } else {
    GroupedContext context;
    context.rubric = &dataset.rubric;
    context.model_id = config.model_id;
    context.temperature = config.temperature;
    if (config.strategy == StrategyKind::FewShotGrouped) {
      auto examples = select_grouped_examples(train, config.shots,
                                              config.cleaned_exemplar_text());
      if (!examples.ok()) return examples.error();
      context.examples = examples.take();
    }
    std::vector<Result<ScoreVector>> outcomes(
        test.items.size(), Result<ScoreVector>(make_error("internal", "unset")));
    parallel_for(test.items.size(), config.concurrency, [&](std::size_t i) {
      const DatasetItem& item = test.items[i];
      outcomes[i] = score_grouped(item.transcript,
                                  item.transcript.best_text(config.preprocessing),
                                  context, client);
    });
    for (std::size_t i = 0; i < test.items.size(); ++i) {
      const std::string& id = test.items[i].transcript.id;
      for (const auto& criterion : dataset.rubric.criteria) {
        PredictionOutcome outcome;
        if (outcomes[i].ok()) {
          auto it = outcomes[i].value().scores.find(criterion.id);
          if (it != outcomes[i].value().scores.end()) {
            outcome.ok = true;
            outcome.score = it->second;
          } else {
            outcome = fail_outcome(
                make_error("missing", "no parsed score for " + criterion.id));
          }
        } else {
          outcome = fail_outcome(outcomes[i].error());
        }
        record.predictions[{id, criterion.id}] = outcome;
      }
    }
  }

  // Metrics.
  std::map<std::string, CriterionPairs> pairs;
  std::vector<std::string> criterion_order;
  for (const auto& criterion : dataset.rubric.criteria) {
    criterion_order.push_back(criterion.id);
    CriterionPairs entry;
    entry.pairs.scale = criterion.scale;
    for (const auto& item : test.items) {
      const auto& outcome =
          record.predictions.at({item.transcript.id, criterion.id});
      if (outcome.ok) {
        entry.pairs.truth.push_back(item.gold.scores.at(criterion.id));
        entry.pairs.pred.push_back(outcome.score);
      } else {
        ++entry.failed;
      }
    }
    pairs[criterion.id] = std::move(entry);
  }
  record.report = summarize_run(pairs, criterion_order, record.run_id,
                                record.config_fingerprint);
  record.usage_totals = client.total_usage();
  record.backend_calls = counting->calls();
  record.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start_time)
                       .count();

  // Persist the run directory.
  const fs::path run_dir = fs::path(config.output_dir) / record.run_id;
  std::error_code ec;
  fs::create_directories(run_dir, ec);
  if (ec) {
    return make_error("io",
                      "cannot create run dir '" + run_dir.string() + "'");
  }
  record.run_dir = run_dir.string();
  if (Status s = write_text_file((run_dir / "config.json").string(),
                                 config.to_json() + "\n");
      !s.ok()) {
    return s.error();
  }
  write_text_file((run_dir / "predictions.jsonl").string(),
                  predictions_jsonl(record));
  write_text_file((run_dir / "report.json").string(),
                  record.canonical_report_json() + "\n");
  write_text_file((run_dir / "report.csv").string(), report_csv(record.report));
  write_text_file((run_dir / "report.md").string(),
                  report_markdown(record.report));
  write_text_file((run_dir / "error_histogram.csv").string(),
                  error_histogram_csv(record.report));
  write_events_jsonl((run_dir / "events.jsonl").string(), config, dataset,
                     client, preprocess_outcomes, record.backend_calls,
                     record.wall_ms);
  return record;
}

Result<AblationReport> run_ablation(const RunConfig& base,
                                    const std::set<std::string>& ablations) {
  for (const auto& name : ablations) {
    if (name != "no_examples" && name != "reduced_rubric") {
      return make_error("config", "unknown ablation '" + name + "'");
    }
  }
  AblationReport report;

  auto base_record = run_experiment(base);
  if (!base_record.ok()) return base_record.error();
  report.rows.push_back({"base", base_record.value().report});
  report.records.push_back(base_record.take());

  if (ablations.count("no_examples")) {
    RunConfig config = base;
    config.run_name = base.run_name + "-no-examples";
    config.no_examples = true;
    config.shots.tiers.clear();
    config.rag = RagStrategy{};
    auto record = run_experiment(config);
    if (!record.ok()) return record.error();
    report.rows.push_back({"no_examples", record.value().report});
    report.records.push_back(record.take());
  }
  if (ablations.count("reduced_rubric")) {
    RunConfig config = base;
    config.run_name = base.run_name + "-reduced-rubric";
    config.rubric_variant = RubricVariant::Reduced;
    auto record = run_experiment(config);
    if (!record.ok()) return record.error();
    report.rows.push_back({"reduced_rubric", record.value().report});
    report.records.push_back(record.take());
  }

  report.table_csv = ablation_csv(report.rows);
  report.table_markdown = ablation_markdown(report.rows);
  if (!report.records.empty()) {
    const fs::path dir = report.records.front().run_dir;
    write_text_file((dir / "ablation.csv").string(), report.table_csv);
    write_text_file((dir / "ablation.md").string(), report.table_markdown);
  }
  return report;
}

// ---- CLI stage helpers -------------------------------------------------------------

Result<std::string> embed_dataset_stage(const Dataset& dataset,
                                        const EmbeddingConfig& config) {
  if (config.cache_path.empty()) {
    return make_error("config", "embedding stage needs a cache_path");
  }
  auto client = make_embedding_client(config);
  if (!client.ok()) return client.error();
  auto cached = load_embedding_cache(config.cache_path, config.model_id);
  if (!cached.ok()) return cached.error();

  std::vector<std::pair<std::string, std::string>> to_embed;
  std::size_t reused = 0;
  for (const auto& item : dataset.items) {
    if (cached.value().vectors.count(item.transcript.id)) {
      ++reused;
    } else {
      to_embed.emplace_back(item.transcript.id, item.transcript.raw_text);
    }
  }
  json failed = json::array();
  std::vector<std::pair<std::string, std::vector<double>>> fresh;
  if (!to_embed.empty()) {
    auto entries = embed_batch(to_embed, *client.value());
    if (!entries.ok()) return entries.error();
    for (auto& entry : entries.value()) {
      if (entry.ok) {
        fresh.emplace_back(entry.record.transcript_id, entry.record.vector);
      } else {
        failed.push_back({{"transcript_id", entry.record.transcript_id},
                          {"error", entry.error.message}});
      }
    }
    if (Status status = append_embedding_cache(config.cache_path,
                                               config.model_id, fresh);
        !status.ok()) {
      return status.error();
    }
  }
  const json summary = {{"model_id", config.model_id},
                        {"dimension", config.dimension},
                        {"embedded", fresh.size()},
                        {"reused", reused},
                        {"failed", failed},
                        {"cache_path", config.cache_path}};
  return summary.dump(2);
}

Result<std::string> exemplar_bank_audit(const Dataset& dataset,
                                        const SplitSpec& split,
                                        bool use_cleaned_text) {
  auto parts = split_dataset(dataset, split);
  if (!parts.ok()) return parts.error();
  const Dataset& train = parts.value().train;

  json banks = json::array();
  for (const auto& criterion : dataset.rubric.criteria) {
    auto bank = build_bank(train, criterion.id);
    if (!bank.ok()) return bank.error();
    auto anchors = bank_anchors(bank.value());
    if (!anchors.ok()) return anchors.error();
    ShotConfig base{{Tier::Low, Tier::Medium, Tier::High}};
    auto exemplars =
        select_exemplars(bank.value(), base, train, use_cleaned_text);
    if (!exemplars.ok()) return exemplars.error();

    json ranked = json::array();
    for (const auto& [id, score] : bank.value().ranked) {
      ranked.push_back({{"transcript_id", id}, {"score", score}});
    }
    json chosen = json::array();
    for (const auto& exemplar : exemplars.value()) {
      chosen.push_back({{"tier", tier_name(exemplar.tier)},
                        {"transcript_id", exemplar.transcript_id},
                        {"score", exemplar.score}});
    }
    banks.push_back({{"criterion_id", criterion.id},
                     {"ranked", ranked},
                     {"anchors",
                      {{"low", anchors.value().low},
                       {"medium", anchors.value().medium},
                       {"high", anchors.value().high}}},
                     {"selected", chosen}});
  }
  const json root = {{"dataset", dataset.name},
                     {"train_items", train.items.size()},
                     {"banks", banks}};
  return root.dump(2);
}

Result<ClusterOutput> cluster_sentences_stage(const Dataset& dataset,
                                              const EmbeddingConfig& config,
                                              std::size_t k, std::uint64_t seed,
                                              std::size_t max_iters) {
  auto client = make_embedding_client(config);
  if (!client.ok()) return client.error();

  struct SentenceRef {
    std::string transcript_id;
    std::size_t index;
  };
  std::vector<SentenceRef> refs;
  std::vector<std::pair<std::string, std::string>> id_texts;
  for (const auto& item : dataset.items) {
    const auto sentences = split_sentences(item.transcript.raw_text);
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      refs.push_back({item.transcript.id, i});
      id_texts.emplace_back(item.transcript.id + "#" + std::to_string(i),
                            sentences[i]);
    }
  }
  if (refs.empty()) {
    return make_error("no_items", "dataset has no sentences to cluster");
  }
  auto entries = embed_batch(id_texts, *client.value());
  if (!entries.ok()) return entries.error();
  std::vector<std::vector<double>> points;
  points.reserve(entries.value().size());
  for (auto& entry : entries.value()) {
    if (!entry.ok) {
      return make_error(entry.error.code, entry.error.message);
    }
    points.push_back(std::move(entry.record.vector));
  }

  auto clusters = kmeans_clusters(points, k, seed, max_iters);
  if (!clusters.ok()) return clusters.error();

  ClusterOutput output;
  output.assignments_csv = "transcript_id,sentence_index,cluster\n";
  std::map<std::size_t, std::size_t> sizes;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const std::size_t cluster = clusters.value().assignments[i];
    output.assignments_csv += refs[i].transcript_id + "," +
                              std::to_string(refs[i].index) + "," +
                              std::to_string(cluster) + "\n";
    ++sizes[cluster];
  }
  json size_json = json::object();
  for (const auto& [cluster, count] : sizes) {
    size_json[std::to_string(cluster)] = count;
  }
  const json summary = {{"sentences", refs.size()},
                        {"k", k},
                        {"iterations", clusters.value().iterations},
                        {"objective", clusters.value().objective},
                        {"cluster_sizes", size_json}};
  output.summary_json = summary.dump(2);
  return output;
}

Result<EvalReport> evaluate_run_dir(const std::string& run_dir) {
  std::ifstream config_in(fs::path(run_dir) / "config.json");
  if (!config_in) {
    return make_error("io", "no config.json under '" + run_dir + "'");
  }
  std::stringstream config_buffer;
  config_buffer << config_in.rdbuf();
  auto config = RunConfig::from_json(config_buffer.str());
  if (!config.ok()) return config.error();

  auto dataset = load_run_dataset(config.value());
  if (!dataset.ok()) return dataset.error();
  auto split = split_dataset(dataset.value(), config.value().split);
  if (!split.ok()) return split.error();
  const Dataset& test = split.value().test;

  std::ifstream predictions_in(fs::path(run_dir) / "predictions.jsonl");
  if (!predictions_in) {
    return make_error("io", "no predictions.jsonl under '" + run_dir + "'");
  }
  std::map<std::pair<std::string, std::string>, PredictionOutcome> predictions;
  std::string line;
  while (std::getline(predictions_in, line)) {
    if (trim(line).empty()) continue;
    json entry = json::parse(line, nullptr, false);
    if (entry.is_discarded()) {
      return make_error("io", "unreadable predictions line");
    }
    PredictionOutcome outcome;
    if (entry.contains("score")) {
      outcome.ok = true;
      outcome.score = entry["score"].get<int>();
    } else {
      outcome.failure_code = entry.value("failure_code", "unknown");
      outcome.failure_message = entry.value("failure_message", "");
    }
    predictions[{entry.value("transcript_id", ""),
                 entry.value("criterion_id", "")}] = outcome;
  }

  std::map<std::string, CriterionPairs> pairs;
  std::vector<std::string> criterion_order;
  for (const auto& criterion : dataset.value().rubric.criteria) {
    criterion_order.push_back(criterion.id);
    CriterionPairs entry;
    entry.pairs.scale = criterion.scale;
    for (const auto& item : test.items) {
      auto it = predictions.find({item.transcript.id, criterion.id});
      if (it == predictions.end()) {
        return make_error("incomplete_run",
                          "no prediction for " + item.transcript.id + "/" +
                              criterion.id);
      }
      if (it->second.ok) {
        entry.pairs.truth.push_back(item.gold.scores.at(criterion.id));
        entry.pairs.pred.push_back(it->second.score);
      } else {
        ++entry.failed;
      }
    }
    pairs[criterion.id] = std::move(entry);
  }
  const std::string fingerprint = config.value().fingerprint();
  return summarize_run(pairs, criterion_order,
                       config.value().run_name + "-" + fingerprint.substr(0, 12),
                       fingerprint);
}

Result<std::vector<std::string>> emit_report_files(const std::string& run_dir) {
  std::ifstream in(fs::path(run_dir) / "report.json");
  if (!in) {
    return make_error("io", "no report.json under '" + run_dir + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto report = parse_report_json(buffer.str());
  if (!report.ok()) return report.error();

  std::vector<std::string> written;
  const struct {
    const char* name;
    std::string content;
  } files[] = {
      {"report.csv", report_csv(report.value())},
      {"report.md", report_markdown(report.value())},
      {"error_histogram.csv", error_histogram_csv(report.value())},
  };
  for (const auto& file : files) {
    const std::string path = (fs::path(run_dir) / file.name).string();
    if (Status status = write_text_file(path, file.content); !status.ok()) {
      return status.error();
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace traitscore
