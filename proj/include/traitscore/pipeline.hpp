#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "traitscore/core.hpp"
#include "traitscore/dataset_io.hpp"
#include "traitscore/exemplars.hpp"
#include "traitscore/llm.hpp"
#include "traitscore/metrics.hpp"
#include "traitscore/reports.hpp"
#include "traitscore/retrieval.hpp"
#include "traitscore/result.hpp"

namespace traitscore {

enum class StrategyKind { ZeroShotGrouped, FewShotGrouped, MultiAgent };

struct BackendConfig {
  // "http", "fixture", "mock-oracle", "mock-offset", "mock-constant"
  std::string kind = "mock-oracle";
  std::string base_url;
  std::string api_key_env = "TRAITSCORE_API_KEY";
  int timeout_seconds = 120;
  std::string fixture_path;
  std::vector<int> offsets = {1, 0, -1, 0};
  int constant = 4;
};

struct EmbeddingConfig {
  std::string provider = "hash";  // "hash" | "http"
  std::string model_id = "all-mpnet-base-v2";
  int dimension = 768;
  std::string base_url;
  std::string api_key_env = "TRAITSCORE_API_KEY";
  std::string cache_path;  // JSONL {transcript_id, model_id, vector}
};

struct RunConfig {
  std::string run_name = "run";
  std::string dataset_manifest;  // path; exclusive with dataset_fixture
  std::optional<FixtureSpec> dataset_fixture;
  std::string model_id = "example-model";
  std::string preprocess_model_id;  // defaults to model_id
  StrategyKind strategy = StrategyKind::MultiAgent;
  ShotConfig shots;  // default low/medium/high
  RagStrategy rag;
  bool preprocessing = false;
  bool no_examples = false;
  RubricVariant rubric_variant = RubricVariant::Full;
  SplitSpec split{0.8, 7};
  int concurrency = 1;
  std::uint64_t seed = 0;
  double temperature = 0.0;
  BackendConfig backend;
  EmbeddingConfig embeddings;
  std::optional<bool> use_cleaned_exemplar_text;  // default: preprocessing
  std::string output_dir = "runs";
  std::string cache_path;  // chat response cache JSONL
  RetryPolicy retry;

  RunConfig();

  static Result<RunConfig> from_json(const std::string& json_text);
  std::string to_json() const;
  // Hash of the experiment identity: dataset, model, strategy, split, seed,
  // backend behaviour. Execution knobs (concurrency, paths, retry timing)
  // are excluded so schedule changes cannot alter the run identity.
  std::string fingerprint() const;

  bool cleaned_exemplar_text() const {
    return use_cleaned_exemplar_text.value_or(preprocessing);
  }
};

struct PredictionOutcome {
  bool ok = false;
  int score = 0;
  std::string failure_code;
  std::string failure_message;
};

struct RunRecord {
  std::string run_id;
  std::string config_fingerprint;
  // (transcript_id, criterion_id) -> outcome; every test item appears once
  // per criterion.
  std::map<std::pair<std::string, std::string>, PredictionOutcome> predictions;
  EvalReport report;
  TokenUsage usage_totals;
  std::int64_t backend_calls = 0;
  std::int64_t wall_ms = 0;
  std::vector<std::string> preprocess_fallbacks;  // transcript ids
  std::string run_dir;

  // Sorted-key JSON without wall-clock or call-count fields; byte-identical
  // across concurrency levels and cache states.
  std::string canonical_report_json() const;
  std::string record_fingerprint() const;
};

// ---- stages -------------------------------------------------------------------

struct PreprocessOutcome {
  std::string transcript_id;
  bool cleaned = false;
  bool raw_fallback = false;
  std::string note;
};

// Stage 1: render the cleanup prompt, call the backend, sanitise, store
// cleaned_text. Failures fall back to raw text with a flag.
std::vector<PreprocessOutcome> preprocess_stage(std::vector<Transcript>& transcripts,
                                                LlmClient& client,
                                                const std::string& model_id,
                                                double temperature);

struct MultiAgentContext {
  const Dataset* train = nullptr;
  const Rubric* rubric = nullptr;
  const std::map<std::string, ExemplarBank>* banks = nullptr;
  const VectorStore* store = nullptr;  // required when rag != None
  ShotConfig shots;
  RagStrategy rag;
  bool use_cleaned_exemplar_text = false;
  bool no_examples = false;
  RubricVariant rubric_variant = RubricVariant::Full;
  std::string model_id;
  double temperature = 0.0;
};

// Stage 2: one independent agent per criterion; per-criterion failures never
// abort the other criteria.
std::map<std::string, PredictionOutcome> score_multiagent(
    const Transcript& transcript, const std::string& response_text,
    const MultiAgentContext& context, LlmClient& client);

struct GroupedContext {
  const Rubric* rubric = nullptr;
  std::vector<GroupedExample> examples;
  std::string model_id;
  double temperature = 0.0;
};

// Single grouped prompt covering every criterion; a parse failure after the
// re-ask fails the whole item.
Result<ScoreVector> score_grouped(const Transcript& transcript,
                                  const std::string& response_text,
                                  const GroupedContext& context,
                                  LlmClient& client);

// ---- experiment runner ----------------------------------------------------------

Result<RunRecord> run_experiment(const RunConfig& config);

struct AblationReport {
  std::vector<AblationRow> rows;
  std::vector<RunRecord> records;
  std::string table_csv;
  std::string table_markdown;
};

// Executes base plus one run per ablation ("no_examples", "reduced_rubric").
Result<AblationReport> run_ablation(const RunConfig& base,
                                    const std::set<std::string>& ablations);

// ---- stage helpers exposed to the CLI --------------------------------------------

// Builds/extends the embedding cache for every transcript (raw text).
// Returns a JSON summary {embedded, reused, failed: [...]}.
Result<std::string> embed_dataset_stage(const Dataset& dataset,
                                        const EmbeddingConfig& config);

// Per-criterion bank audit: ranked (id, score) plus the L/M/H anchors.
Result<std::string> exemplar_bank_audit(const Dataset& dataset,
                                        const SplitSpec& split,
                                        bool use_cleaned_text);

// Sentence-level clustering diagnostic; returns CSV
// transcript_id,sentence_index,cluster plus a cluster-size summary JSON.
struct ClusterOutput {
  std::string assignments_csv;
  std::string summary_json;
};
Result<ClusterOutput> cluster_sentences_stage(const Dataset& dataset,
                                              const EmbeddingConfig& config,
                                              std::size_t k, std::uint64_t seed,
                                              std::size_t max_iters);

// Recomputes the EvalReport of a persisted run directory from
// predictions.jsonl + the dataset named in config.json.
Result<EvalReport> evaluate_run_dir(const std::string& run_dir);

// Re-emits report.csv/report.md/error_histogram.csv from report.json.
Result<std::vector<std::string>> emit_report_files(const std::string& run_dir);

// Loads a dataset per RunConfig (manifest path or fixture spec).
Result<Dataset> load_run_dataset(const RunConfig& config);

std::shared_ptr<ChatBackend> make_backend(const BackendConfig& config,
                                          const Dataset& dataset,
                                          Error* error);

}  // namespace traitscore
