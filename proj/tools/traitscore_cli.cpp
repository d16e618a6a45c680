// traitscore command-line driver. All functionality flows through the C API
// in traitscore.h; this file only handles flags, config JSON and file IO.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "traitscore.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;

int exit_code(ts_status status) {
  if (status == TS_OK) return kExitOk;
  if (status == TS_PARTIAL) return kExitPartial;
  return kExitFatal;
}

int fail(const std::string& context) {
  std::cerr << "error: " << context << ": " << ts_last_error() << "\n";
  return kExitFatal;
}

struct OwnedString {
  char* value = nullptr;
  ~OwnedString() { ts_string_free(value); }
  std::string str() const { return value ? std::string(value) : ""; }
};

struct OwnedDataset {
  ts_dataset* value = nullptr;
  ~OwnedDataset() { ts_dataset_free(value); }
};

struct OwnedRun {
  ts_run* value = nullptr;
  ~OwnedRun() { ts_run_free(value); }
};

// Shared flags: --config (run-config JSON) plus common overrides.
struct CommonOptions {
  std::string config_path;
  std::string manifest;
  std::string output_dir;
  std::string model_id;
  std::string backend_kind;
  std::string cache_path;
  int concurrency = 0;

  void attach(CLI::App* command, bool config_required) {
    auto* config = command->add_option("--config", config_path,
                                       "Run-config JSON file (see README)");
    if (config_required) config->required();
    command->add_option("--manifest", manifest,
                        "Dataset manifest path (overrides config)");
    command->add_option("--output-dir", output_dir,
                        "Run output directory (overrides config)");
    command->add_option("--model", model_id, "Model id (overrides config)");
    command->add_option("--backend", backend_kind,
                        "Backend kind (overrides config)");
    command->add_option("--cache", cache_path,
                        "Response cache path (overrides config)");
    command->add_option("--concurrency", concurrency,
                        "In-flight request bound (overrides config)");
  }

  // Loads the config JSON (or starts empty) and applies the overrides.
  std::optional<json> resolve() const {
    json config = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "error: cannot open config '" << config_path << "'\n";
        return std::nullopt;
      }
      std::stringstream buffer;
      buffer << in.rdbuf();
      config = json::parse(buffer.str(), nullptr, false);
      if (config.is_discarded()) {
        std::cerr << "error: '" << config_path << "' is not valid JSON\n";
        return std::nullopt;
      }
    }
    if (!manifest.empty()) config["dataset"] = {{"manifest", manifest}};
    if (!output_dir.empty()) config["output_dir"] = output_dir;
    if (!model_id.empty()) config["model_id"] = model_id;
    if (!backend_kind.empty()) config["backend"]["kind"] = backend_kind;
    if (!cache_path.empty()) config["cache_path"] = cache_path;
    if (concurrency > 0) config["concurrency"] = concurrency;
    return config;
  }
};

// Opens the dataset named by the resolved config (manifest or fixture).
int open_dataset(const json& config, OwnedDataset* out) {
  if (config.contains("dataset") && config["dataset"].contains("manifest")) {
    const std::string path = config["dataset"]["manifest"].get<std::string>();
    if (ts_dataset_open(path.c_str(), &out->value) != TS_OK) {
      return fail("opening dataset '" + path + "'");
    }
    return kExitOk;
  }
  if (config.contains("dataset") && config["dataset"].contains("fixture")) {
    const auto& fixture = config["dataset"]["fixture"];
    if (ts_dataset_fixture(fixture.value("question", 1),
                           fixture.value("seed", 42ULL),
                           fixture.value("items", 30U),
                           &out->value) != TS_OK) {
      return fail("generating fixture dataset");
    }
    return kExitOk;
  }
  std::cerr << "error: no dataset configured (dataset.manifest or "
               "dataset.fixture, or pass --manifest)\n";
  return kExitFatal;
}

int write_or_print(const std::string& content, const std::string& path) {
  if (path.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << "\n";
    return kExitOk;
  }
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write '" << path << "'\n";
    return kExitFatal;
  }
  out << content;
  std::cout << "wrote " << path << "\n";
  return kExitOk;
}

std::string embeddings_json(const json& config) {
  return config.contains("embeddings") ? config["embeddings"].dump() : "{}";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"traitscore: multi-agent rubric scoring pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ts_version()));

  // ---- ingest ----
  CommonOptions ingest_options;
  std::string ingest_out, ingest_stats;
  auto* ingest = app.add_subcommand(
      "ingest", "Load a dataset, validate it, report stats");
  ingest_options.attach(ingest, false);
  ingest->add_option("--out", ingest_out,
                     "Write the canonical dataset (manifest + items.jsonl)");
  ingest->add_option("--stats", ingest_stats,
                     "Write the per-criterion stats CSV");

  // ---- split ----
  CommonOptions split_options;
  std::string split_out;
  double split_fraction = 0.0;
  std::uint64_t split_seed = 0;
  bool split_seed_set = false;
  auto* split = app.add_subcommand(
      "split", "Deterministic train/test split to two dataset directories");
  split_options.attach(split, false);
  split->add_option("--out", split_out, "Output directory")->required();
  split->add_option("--fraction", split_fraction,
                    "Train fraction (overrides config)");
  split->add_option("--seed", split_seed, "Shuffle seed (overrides config)")
      ->each([&split_seed_set](const std::string&) { split_seed_set = true; });

  // ---- embed ----
  CommonOptions embed_options;
  std::string embed_cache;
  auto* embed = app.add_subcommand(
      "embed", "Build or extend the embedding cache for a dataset");
  embed_options.attach(embed, false);
  embed->add_option("--embed-cache", embed_cache,
                    "Embedding cache JSONL (overrides config)");

  // ---- exemplars ----
  CommonOptions exemplars_options;
  std::string exemplars_out;
  auto* exemplars = app.add_subcommand(
      "exemplars", "Audit per-criterion exemplar banks and anchors");
  exemplars_options.attach(exemplars, false);
  exemplars->add_option("--out", exemplars_out, "Write JSON here");

  // ---- score ----
  CommonOptions score_options;
  auto* score = app.add_subcommand(
      "score", "Run the configured experiment and persist the run directory");
  score_options.attach(score, true);

  // ---- evaluate ----
  std::string evaluate_run_dir;
  auto* evaluate = app.add_subcommand(
      "evaluate", "Recompute the report of a persisted run directory");
  evaluate->add_option("--run", evaluate_run_dir, "Run directory")->required();

  // ---- ablate ----
  CommonOptions ablate_options;
  std::string ablations = "no_examples,reduced_rubric";
  std::string ablate_out;
  auto* ablate = app.add_subcommand(
      "ablate", "Run base plus ablations and emit a comparison table");
  ablate_options.attach(ablate, true);
  ablate->add_option("--ablations", ablations,
                     "Comma list: no_examples,reduced_rubric");
  ablate->add_option("--out", ablate_out, "Write the CSV table here");

  // ---- cluster ----
  CommonOptions cluster_options;
  std::size_t cluster_k = 8;
  std::uint64_t cluster_seed = 0;
  std::size_t cluster_iters = 100;
  std::string cluster_out;
  auto* cluster = app.add_subcommand(
      "cluster", "Sentence-level k-means diagnostic over embeddings");
  cluster_options.attach(cluster, false);
  cluster->add_option("--k", cluster_k, "Cluster count");
  cluster->add_option("--seed", cluster_seed, "Initialisation seed");
  cluster->add_option("--max-iters", cluster_iters, "Iteration budget");
  cluster->add_option("--out", cluster_out, "Write assignments CSV here");

  // ---- report ----
  std::string report_run_dir;
  auto* report = app.add_subcommand(
      "report", "Re-emit CSV/Markdown/histogram files from report.json");
  report->add_option("--run", report_run_dir, "Run directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (*ingest) {
    auto config = ingest_options.resolve();
    if (!config) return kExitFatal;
    OwnedDataset dataset;
    if (int code = open_dataset(*config, &dataset); code != kExitOk) {
      return code;
    }
    OwnedString info;
    if (ts_dataset_info(dataset.value, &info.value) != TS_OK) {
      return fail("dataset info");
    }
    std::cout << info.str() << "\n";
    OwnedString validation;
    if (ts_dataset_validate(dataset.value, &validation.value) != TS_OK) {
      return fail("validation");
    }
    const json verdict = json::parse(validation.str());
    if (!verdict.value("valid", false)) {
      std::cout << validation.str() << "\n";
    }
    if (!ingest_out.empty()) {
      if (ts_dataset_save(dataset.value, ingest_out.c_str()) != TS_OK) {
        return fail("saving dataset");
      }
      std::cout << "wrote " << ingest_out << "\n";
    }
    if (!ingest_stats.empty()) {
      OwnedString stats;
      if (ts_dataset_stats_csv(dataset.value, &stats.value) != TS_OK) {
        return fail("stats");
      }
      if (int code = write_or_print(stats.str(), ingest_stats);
          code != kExitOk) {
        return code;
      }
    }
    return verdict.value("valid", false) ? kExitOk : kExitPartial;
  }

  if (*split) {
    auto config = split_options.resolve();
    if (!config) return kExitFatal;
    OwnedDataset dataset;
    if (int code = open_dataset(*config, &dataset); code != kExitOk) {
      return code;
    }
    double fraction = split_fraction;
    std::uint64_t seed = split_seed;
    if (fraction <= 0.0) {
      fraction = config->contains("split")
                     ? (*config)["split"].value("train_fraction", 0.8)
                     : 0.8;
    }
    if (!split_seed_set) {
      seed = config->contains("split") ? (*config)["split"].value("seed", 7ULL)
                                       : 7ULL;
    }
    OwnedDataset train, test;
    if (ts_dataset_split(dataset.value, fraction, seed, &train.value,
                         &test.value) != TS_OK) {
      return fail("split");
    }
    const std::string train_dir = (fs::path(split_out) / "train").string();
    const std::string test_dir = (fs::path(split_out) / "test").string();
    if (ts_dataset_save(train.value, train_dir.c_str()) != TS_OK) {
      return fail("saving train split");
    }
    if (ts_dataset_save(test.value, test_dir.c_str()) != TS_OK) {
      return fail("saving test split");
    }
    std::cout << "wrote " << train_dir << " and " << test_dir << "\n";
    return kExitOk;
  }

  if (*embed) {
    auto config = embed_options.resolve();
    if (!config) return kExitFatal;
    if (!embed_cache.empty()) {
      (*config)["embeddings"]["cache_path"] = embed_cache;
    }
    OwnedDataset dataset;
    if (int code = open_dataset(*config, &dataset); code != kExitOk) {
      return code;
    }
    OwnedString summary;
    if (ts_embed_dataset(dataset.value, embeddings_json(*config).c_str(),
                         &summary.value) != TS_OK) {
      return fail("embedding");
    }
    std::cout << summary.str() << "\n";
    return kExitOk;
  }

  if (*exemplars) {
    auto config = exemplars_options.resolve();
    if (!config) return kExitFatal;
    OwnedDataset dataset;
    if (int code = open_dataset(*config, &dataset); code != kExitOk) {
      return code;
    }
    const double fraction = config->contains("split")
                                ? (*config)["split"].value("train_fraction", 0.8)
                                : 0.8;
    const std::uint64_t seed =
        config->contains("split") ? (*config)["split"].value("seed", 7ULL)
                                  : 7ULL;
    const bool cleaned = config->value("use_cleaned_exemplar_text",
                                       config->value("preprocessing", false));
    OwnedString audit;
    if (ts_exemplar_banks(dataset.value, fraction, seed, cleaned ? 1 : 0,
                          &audit.value) != TS_OK) {
      return fail("exemplar audit");
    }
    return write_or_print(audit.str(), exemplars_out);
  }

  if (*score) {
    auto config = score_options.resolve();
    if (!config) return kExitFatal;
    OwnedRun run;
    const ts_status status =
        ts_run_experiment(config->dump().c_str(), &run.value);
    if (status != TS_OK && status != TS_PARTIAL) {
      return fail("score run");
    }
    OwnedString summary;
    if (ts_run_summary_json(run.value, &summary.value) != TS_OK) {
      return fail("run summary");
    }
    std::cout << summary.str() << "\n";
    if (status == TS_PARTIAL) {
      std::cerr << "note: run completed with item failures (exit 2)\n";
    }
    return exit_code(status);
  }

  if (*evaluate) {
    OwnedString report_json;
    if (ts_evaluate_run(evaluate_run_dir.c_str(), &report_json.value) !=
        TS_OK) {
      return fail("evaluate");
    }
    std::cout << report_json.str() << "\n";
    return kExitOk;
  }

  if (*ablate) {
    auto config = ablate_options.resolve();
    if (!config) return kExitFatal;
    OwnedString csv, markdown;
    const ts_status status = ts_run_ablation(
        config->dump().c_str(), ablations.c_str(), &csv.value, &markdown.value);
    if (status != TS_OK && status != TS_PARTIAL) {
      return fail("ablation run");
    }
    std::cout << markdown.str() << "\n";
    if (!ablate_out.empty()) {
      if (int code = write_or_print(csv.str(), ablate_out); code != kExitOk) {
        return code;
      }
    }
    return exit_code(status);
  }

  if (*cluster) {
    auto config = cluster_options.resolve();
    if (!config) return kExitFatal;
    OwnedDataset dataset;
    if (int code = open_dataset(*config, &dataset); code != kExitOk) {
      return code;
    }
    OwnedString csv, summary;
    if (ts_cluster_sentences(dataset.value, embeddings_json(*config).c_str(),
                             cluster_k, cluster_seed, cluster_iters,
                             &csv.value, &summary.value) != TS_OK) {
      return fail("clustering");
    }
    std::cerr << summary.str() << "\n";
    return write_or_print(csv.str(), cluster_out);
  }

  if (*report) {
    OwnedString files;
    if (ts_emit_report(report_run_dir.c_str(), &files.value) != TS_OK) {
      return fail("report emission");
    }
    std::cout << files.str() << "\n";
    return kExitOk;
  }

  return kExitFatal;
}
