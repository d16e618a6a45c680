// Exercises the shared-library surface only: traitscore.h, no C++ core
// headers. Keeps the C API honest as a standalone boundary.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "traitscore.h"

namespace fs = std::filesystem;

namespace {

struct ScopedString {
  char* value = nullptr;
  ~ScopedString() { ts_string_free(value); }
};

struct ScopedDataset {
  ts_dataset* value = nullptr;
  ~ScopedDataset() { ts_dataset_free(value); }
};

struct ScopedRun {
  ts_run* value = nullptr;
  ~ScopedRun() { ts_run_free(value); }
};

fs::path temp_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() / ("traitscore_capi_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string run_config_json(const fs::path& out_dir) {
  return std::string(R"({
    "run_name": "capi",
    "dataset": {"fixture": {"question": 1, "seed": 42, "items": 12}},
    "strategy": "multi_agent",
    "shots": ["low", "medium", "high"],
    "preprocessing": true,
    "split": {"train_fraction": 0.75, "seed": 7},
    "backend": {"kind": "mock-oracle"},
    "output_dir": ")") +
         out_dir.string() + "\"}";
}

}  // namespace

TEST_CASE("version and error strings are always present") {
  CHECK(std::string(ts_version()).find('.') != std::string::npos);
  CHECK(ts_last_error() != nullptr);
}

TEST_CASE("fixture dataset handle: info, validate, stats, save, split") {
  ScopedDataset dataset;
  REQUIRE(ts_dataset_fixture(1, 42, 20, &dataset.value) == TS_OK);

  ScopedString info;
  REQUIRE(ts_dataset_info(dataset.value, &info.value) == TS_OK);
  CHECK(std::string(info.value).find("\"items\": 20") != std::string::npos);
  CHECK(std::string(info.value).find("c10") != std::string::npos);

  ScopedString validation;
  REQUIRE(ts_dataset_validate(dataset.value, &validation.value) == TS_OK);
  CHECK(std::string(validation.value).find("\"valid\": true") !=
        std::string::npos);

  ScopedString stats;
  REQUIRE(ts_dataset_stats(dataset.value, "c2", &stats.value) == TS_OK);
  CHECK(std::string(stats.value).find("\"mean\"") != std::string::npos);
  ScopedString bad_stats;
  CHECK(ts_dataset_stats(dataset.value, "zz", &bad_stats.value) ==
        TS_ERR_CONFIG);
  CHECK(std::string(ts_last_error()).find("zz") != std::string::npos);

  const auto dir = temp_dir("save");
  REQUIRE(ts_dataset_save(dataset.value, dir.string().c_str()) == TS_OK);
  ScopedDataset reloaded;
  REQUIRE(ts_dataset_open((dir / "manifest.json").string().c_str(),
                          &reloaded.value) == TS_OK);
  ScopedString reloaded_info;
  REQUIRE(ts_dataset_info(reloaded.value, &reloaded_info.value) == TS_OK);
  CHECK(std::string(reloaded_info.value).find("\"items\": 20") !=
        std::string::npos);

  ScopedDataset train, test;
  REQUIRE(ts_dataset_split(dataset.value, 0.8, 7, &train.value,
                           &test.value) == TS_OK);
  ScopedString train_info;
  REQUIRE(ts_dataset_info(train.value, &train_info.value) == TS_OK);
  CHECK(std::string(train_info.value).find("\"items\": 16") !=
        std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("invalid arguments set a readable last error") {
  CHECK(ts_dataset_open(nullptr, nullptr) == TS_ERR_INVALID_ARG);
  CHECK(std::string(ts_last_error()).find("required") != std::string::npos);
  ScopedDataset missing;
  CHECK(ts_dataset_open("/nonexistent/manifest.json", &missing.value) ==
        TS_ERR_IO);
}

TEST_CASE("qwk and mse through the C boundary") {
  const int truth[] = {1, 2, 3};
  const int pred[] = {1, 2, 2};
  double value = 0.0;
  int degenerate = -1;
  REQUIRE(ts_qwk(truth, pred, 3, 1, 3, &value, &degenerate) == TS_OK);
  CHECK(value == doctest::Approx(0.666667).epsilon(1e-6));
  CHECK(degenerate == 0);

  const int constant[] = {5, 5};
  REQUIRE(ts_qwk(constant, constant, 2, 1, 7, &value, &degenerate) == TS_OK);
  CHECK(value == 1.0);
  CHECK(degenerate == 1);

  double mse = 0.0;
  REQUIRE(ts_mse(truth, pred, 3, 1, 3, &mse) == TS_OK);
  CHECK(mse == doctest::Approx(1.0 / 3.0));

  const int bad[] = {9, 1};
  CHECK(ts_qwk(bad, pred, 2, 1, 3, &value, &degenerate) ==
        TS_ERR_INVALID_ARG);
}

TEST_CASE("embedding, exemplar and clustering stages through the C API") {
  ScopedDataset dataset;
  REQUIRE(ts_dataset_fixture(2, 9, 10, &dataset.value) == TS_OK);

  const auto dir = temp_dir("stages");
  const std::string embeddings_json =
      std::string(R"({"provider": "hash", "dimension": 8, "cache_path": ")") +
      (dir / "embeddings.jsonl").string() + "\"}";
  ScopedString summary;
  REQUIRE(ts_embed_dataset(dataset.value, embeddings_json.c_str(),
                           &summary.value) == TS_OK);
  CHECK(std::string(summary.value).find("\"embedded\": 10") !=
        std::string::npos);

  ScopedString banks;
  REQUIRE(ts_exemplar_banks(dataset.value, 0.8, 7, 0, &banks.value) == TS_OK);
  CHECK(std::string(banks.value).find("\"anchors\"") != std::string::npos);

  ScopedString csv, cluster_summary;
  REQUIRE(ts_cluster_sentences(dataset.value,
                               R"({"provider": "hash", "dimension": 8})", 4, 3,
                               50, &csv.value, &cluster_summary.value) ==
          TS_OK);
  CHECK(std::string(csv.value).find("transcript_id,sentence_index,cluster") ==
        0);
  fs::remove_all(dir);
}

TEST_CASE("full experiment, evaluation and report emission via the C API") {
  const auto dir = temp_dir("experiment");
  const std::string config = run_config_json(dir);

  ScopedRun run;
  REQUIRE(ts_run_experiment(config.c_str(), &run.value) == TS_OK);

  ScopedString summary;
  REQUIRE(ts_run_summary_json(run.value, &summary.value) == TS_OK);
  CHECK(std::string(summary.value).find("\"avg_qwk\": 1.0") !=
        std::string::npos);
  CHECK(std::string(summary.value).find("\"failed_predictions\": 0") !=
        std::string::npos);

  ScopedString run_dir;
  REQUIRE(ts_run_dir(run.value, &run_dir.value) == TS_OK);
  REQUIRE(fs::exists(fs::path(run_dir.value) / "report.json"));

  ScopedString report;
  REQUIRE(ts_evaluate_run(run_dir.value, &report.value) == TS_OK);
  CHECK(std::string(report.value).find("\"qwk\": 1.0") != std::string::npos);

  ScopedString files;
  REQUIRE(ts_emit_report(run_dir.value, &files.value) == TS_OK);
  CHECK(std::string(files.value).find("report.csv") != std::string::npos);

  ScopedRun bad;
  CHECK(ts_run_experiment("{\"strategy\": \"unknown\"}", &bad.value) ==
        TS_ERR_CONFIG);
  fs::remove_all(dir);
}

TEST_CASE("ablation comparison through the C API") {
  const auto dir = temp_dir("ablation");
  std::string config = std::string(R"({
    "run_name": "capi-ablate",
    "dataset": {"fixture": {"question": 1, "seed": 42, "items": 12}},
    "strategy": "multi_agent",
    "backend": {"kind": "mock-degrade", "offsets": [2, -2, 1, -1]},
    "split": {"train_fraction": 0.75, "seed": 7},
    "output_dir": ")") + dir.string() + "\"}";

  ScopedString csv, markdown;
  REQUIRE(ts_run_ablation(config.c_str(), "no_examples", &csv.value,
                          &markdown.value) == TS_OK);
  CHECK(std::string(csv.value).find("base,") != std::string::npos);
  CHECK(std::string(csv.value).find("no_examples,") != std::string::npos);
  CHECK(std::string(markdown.value).find("| Configuration |") == 0);
  fs::remove_all(dir);
}
