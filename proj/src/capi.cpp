#include "traitscore.h"

#include <cstring>
#include <exception>
#include <set>
#include <sstream>

#include <json.hpp>

#include "traitscore/core.hpp"
#include "traitscore/dataset_io.hpp"
#include "traitscore/metrics.hpp"
#include "traitscore/pipeline.hpp"
#include "traitscore/reports.hpp"
#include "traitscore/text.hpp"

using nlohmann::json;

struct ts_dataset {
  traitscore::Dataset dataset;
};

struct ts_run {
  traitscore::RunRecord record;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

ts_status status_from_code(const std::string& code) {
  if (code == "io" || code == "no_items" || code == "too_many_skips" ||
      code == "cache_corrupt") {
    return TS_ERR_IO;
  }
  if (code == "config" || code == "manifest" || code == "missing_column" ||
      code == "unknown_criterion" || code == "invalid_dataset" ||
      code == "too_small" || code == "empty_test" || code == "empty_train" ||
      code == "empty_dataset" || code == "no_reduced_rubric") {
    return TS_ERR_CONFIG;
  }
  if (code == "transport" || code == "timeout" || code == "rate_limit" ||
      code == "server" || code.rfind("http_", 0) == 0 || code == "protocol" ||
      code == "fixture_miss") {
    return TS_ERR_BACKEND;
  }
  return TS_ERR_INVALID_ARG;
}

ts_status fail(const traitscore::Error& error) {
  set_error(error.code + ": " + error.message);
  return status_from_code(error.code);
}

char* dup_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out) std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

ts_status out_string(char** slot, const std::string& text) {
  if (!slot) {
    set_error("output pointer is null");
    return TS_ERR_INVALID_ARG;
  }
  *slot = dup_string(text);
  if (!*slot) {
    set_error("allocation failed");
    return TS_ERR_INTERNAL;
  }
  return TS_OK;
}

template <typename Fn>
ts_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    set_error(std::string("internal: ") + e.what());
    return TS_ERR_INTERNAL;
  } catch (...) {
    set_error("internal: unknown exception");
    return TS_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* ts_version(void) { return "0.1.0"; }

const char* ts_last_error(void) { return g_last_error.c_str(); }

void ts_string_free(char* text) { std::free(text); }

ts_status ts_dataset_open(const char* manifest_path, ts_dataset** out) {
  return guarded([&]() -> ts_status {
    if (!manifest_path || !out) {
      set_error("manifest_path and out are required");
      return TS_ERR_INVALID_ARG;
    }
    auto ingest = traitscore::ingest_from_path(manifest_path);
    if (!ingest.ok()) return fail(ingest.error());
    *out = new ts_dataset{std::move(ingest.value().dataset)};
    return TS_OK;
  });
}

ts_status ts_dataset_fixture(int question, uint64_t seed, size_t items,
                             ts_dataset** out) {
  return guarded([&]() -> ts_status {
    if (!out) {
      set_error("out is required");
      return TS_ERR_INVALID_ARG;
    }
    traitscore::FixtureSpec spec;
    spec.question = question;
    spec.seed = seed;
    spec.items = items;
    auto dataset = traitscore::make_fixture_dataset(spec);
    if (!dataset.ok()) return fail(dataset.error());
    *out = new ts_dataset{dataset.take()};
    return TS_OK;
  });
}

void ts_dataset_free(ts_dataset* dataset) { delete dataset; }

ts_status ts_dataset_info(const ts_dataset* dataset, char** out_json) {
  return guarded([&]() -> ts_status {
    if (!dataset) {
      set_error("dataset handle is null");
      return TS_ERR_INVALID_ARG;
    }
    json criteria = json::array();
    for (const auto& criterion : dataset->dataset.rubric.criteria) {
      criteria.push_back({{"id", criterion.id},
                          {"name", criterion.name},
                          {"scale_min", criterion.scale.min},
                          {"scale_max", criterion.scale.max}});
    }
    const json info = {
        {"name", dataset->dataset.name},
        {"question_id", dataset->dataset.rubric.question_id},
        {"items", dataset->dataset.items.size()},
        {"criteria", criteria},
        {"fingerprint", dataset->dataset.fingerprint()},
    };
    return out_string(out_json, info.dump(2));
  });
}

ts_status ts_dataset_validate(const ts_dataset* dataset, char** out_json) {
  return guarded([&]() -> ts_status {
    if (!dataset) {
      set_error("dataset handle is null");
      return TS_ERR_INVALID_ARG;
    }
    const auto violations = traitscore::validate_dataset(dataset->dataset);
    json list = json::array();
    for (const auto& violation : violations) {
      list.push_back({{"code", violation.code},
                      {"item_id", violation.item_id},
                      {"message", violation.message}});
    }
    const json report = {{"valid", violations.empty()},
                         {"violations", list}};
    return out_string(out_json, report.dump(2));
  });
}

ts_status ts_dataset_stats(const ts_dataset* dataset, const char* criterion_id,
                           char** out_json) {
  return guarded([&]() -> ts_status {
    if (!dataset || !criterion_id) {
      set_error("dataset and criterion_id are required");
      return TS_ERR_INVALID_ARG;
    }
    auto stats = traitscore::descriptive_stats(dataset->dataset, criterion_id);
    if (!stats.ok()) return fail(stats.error());
    json histogram = json::object();
    for (const auto& [level, count] : stats.value().histogram) {
      histogram[std::to_string(level)] = count;
    }
    const json out = {{"criterion_id", criterion_id},
                      {"mean", stats.value().mean},
                      {"sample_std", stats.value().sample_std},
                      {"n", stats.value().n},
                      {"avg_word_count", stats.value().avg_word_count},
                      {"histogram", histogram},
                      {"flags", stats.value().flags}};
    return out_string(out_json, out.dump(2));
  });
}

ts_status ts_dataset_stats_csv(const ts_dataset* dataset, char** out_csv) {
  return guarded([&]() -> ts_status {
    if (!dataset) {
      set_error("dataset handle is null");
      return TS_ERR_INVALID_ARG;
    }
    auto csv = traitscore::stats_csv(dataset->dataset);
    if (!csv.ok()) return fail(csv.error());
    return out_string(out_csv, csv.value());
  });
}

ts_status ts_dataset_save(const ts_dataset* dataset, const char* dir) {
  return guarded([&]() -> ts_status {
    if (!dataset || !dir) {
      set_error("dataset and dir are required");
      return TS_ERR_INVALID_ARG;
    }
    auto status = traitscore::save_dataset(dataset->dataset, dir);
    if (!status.ok()) return fail(status.error());
    return TS_OK;
  });
}

ts_status ts_dataset_split(const ts_dataset* dataset, double train_fraction,
                           uint64_t seed, ts_dataset** out_train,
                           ts_dataset** out_test) {
  return guarded([&]() -> ts_status {
    if (!dataset || !out_train || !out_test) {
      set_error("dataset, out_train and out_test are required");
      return TS_ERR_INVALID_ARG;
    }
    auto split = traitscore::split_dataset(dataset->dataset,
                                           {train_fraction, seed});
    if (!split.ok()) return fail(split.error());
    *out_train = new ts_dataset{std::move(split.value().train)};
    *out_test = new ts_dataset{std::move(split.value().test)};
    return TS_OK;
  });
}

ts_status ts_qwk(const int* truth, const int* pred, size_t n, int scale_min,
                 int scale_max, double* out_qwk, int* out_degenerate) {
  return guarded([&]() -> ts_status {
    if (!truth || !pred || !out_qwk) {
      set_error("truth, pred and out_qwk are required");
      return TS_ERR_INVALID_ARG;
    }
    traitscore::PairedScores pairs;
    pairs.truth.assign(truth, truth + n);
    pairs.pred.assign(pred, pred + n);
    pairs.scale.min = scale_min;
    pairs.scale.max = scale_max;
    auto result = traitscore::qwk(pairs);
    if (!result.ok()) return fail(result.error());
    *out_qwk = result.value().value;
    if (out_degenerate) *out_degenerate = result.value().degenerate ? 1 : 0;
    return TS_OK;
  });
}

ts_status ts_mse(const int* truth, const int* pred, size_t n, int scale_min,
                 int scale_max, double* out_mse) {
  return guarded([&]() -> ts_status {
    if (!truth || !pred || !out_mse) {
      set_error("truth, pred and out_mse are required");
      return TS_ERR_INVALID_ARG;
    }
    traitscore::PairedScores pairs;
    pairs.truth.assign(truth, truth + n);
    pairs.pred.assign(pred, pred + n);
    pairs.scale.min = scale_min;
    pairs.scale.max = scale_max;
    auto result = traitscore::mse(pairs);
    if (!result.ok()) return fail(result.error());
    *out_mse = result.value();
    return TS_OK;
  });
}

namespace {

ts_status parse_embeddings_json(const char* embeddings_json,
                                traitscore::EmbeddingConfig* out) {
  if (!embeddings_json) return TS_OK;  // defaults
  json root = json::parse(embeddings_json, nullptr, false);
  if (root.is_discarded()) {
    set_error("embeddings config is not valid JSON");
    return TS_ERR_CONFIG;
  }
  out->provider = root.value("provider", out->provider);
  out->model_id = root.value("model_id", out->model_id);
  out->dimension = root.value("dimension", out->dimension);
  out->base_url = root.value("base_url", out->base_url);
  out->api_key_env = root.value("api_key_env", out->api_key_env);
  out->cache_path = root.value("cache_path", out->cache_path);
  return TS_OK;
}

}  // namespace

ts_status ts_embed_dataset(const ts_dataset* dataset,
                           const char* embeddings_json,
                           char** out_summary_json) {
  return guarded([&]() -> ts_status {
    if (!dataset) {
      set_error("dataset handle is null");
      return TS_ERR_INVALID_ARG;
    }
    traitscore::EmbeddingConfig config;
    if (ts_status status = parse_embeddings_json(embeddings_json, &config);
        status != TS_OK) {
      return status;
    }
    auto summary = traitscore::embed_dataset_stage(dataset->dataset, config);
    if (!summary.ok()) return fail(summary.error());
    return out_string(out_summary_json, summary.value());
  });
}

ts_status ts_exemplar_banks(const ts_dataset* dataset, double train_fraction,
                            uint64_t seed, int use_cleaned_text,
                            char** out_json) {
  return guarded([&]() -> ts_status {
    if (!dataset) {
      set_error("dataset handle is null");
      return TS_ERR_INVALID_ARG;
    }
    auto audit = traitscore::exemplar_bank_audit(
        dataset->dataset, {train_fraction, seed}, use_cleaned_text != 0);
    if (!audit.ok()) return fail(audit.error());
    return out_string(out_json, audit.value());
  });
}

ts_status ts_cluster_sentences(const ts_dataset* dataset,
                               const char* embeddings_json, size_t k,
                               uint64_t seed, size_t max_iters, char** out_csv,
                               char** out_summary_json) {
  return guarded([&]() -> ts_status {
    if (!dataset) {
      set_error("dataset handle is null");
      return TS_ERR_INVALID_ARG;
    }
    traitscore::EmbeddingConfig config;
    if (ts_status status = parse_embeddings_json(embeddings_json, &config);
        status != TS_OK) {
      return status;
    }
    auto output = traitscore::cluster_sentences_stage(dataset->dataset, config,
                                                      k, seed, max_iters);
    if (!output.ok()) return fail(output.error());
    if (ts_status status = out_string(out_csv, output.value().assignments_csv);
        status != TS_OK) {
      return status;
    }
    return out_string(out_summary_json, output.value().summary_json);
  });
}

namespace {

json run_summary(const traitscore::RunRecord& record) {
  std::size_t failed = 0;
  for (const auto& [key, outcome] : record.predictions) {
    if (!outcome.ok) ++failed;
  }
  return json{
      {"run_id", record.run_id},
      {"run_dir", record.run_dir},
      {"config_fingerprint", record.config_fingerprint},
      {"record_fingerprint", record.record_fingerprint()},
      {"avg_qwk", record.report.avg_qwk},
      {"avg_mse", record.report.avg_mse},
      {"predictions", record.predictions.size()},
      {"failed_predictions", failed},
      {"preprocess_fallbacks", record.preprocess_fallbacks},
      {"backend_calls", record.backend_calls},
      {"usage",
       {{"prompt_tokens", record.usage_totals.prompt_tokens},
        {"completion_tokens", record.usage_totals.completion_tokens}}},
      {"wall_ms", record.wall_ms},
  };
}

bool has_failures(const traitscore::RunRecord& record) {
  for (const auto& [key, outcome] : record.predictions) {
    if (!outcome.ok) return true;
  }
  return !record.preprocess_fallbacks.empty();
}

}  // namespace

ts_status ts_run_experiment(const char* config_json, ts_run** out) {
  return guarded([&]() -> ts_status {
    if (!config_json || !out) {
      set_error("config_json and out are required");
      return TS_ERR_INVALID_ARG;
    }
    auto config = traitscore::RunConfig::from_json(config_json);
    if (!config.ok()) return fail(config.error());
    auto record = traitscore::run_experiment(config.value());
    if (!record.ok()) return fail(record.error());
    const bool partial = has_failures(record.value());
    *out = new ts_run{record.take()};
    return partial ? TS_PARTIAL : TS_OK;
  });
}

void ts_run_free(ts_run* run) { delete run; }

ts_status ts_run_summary_json(const ts_run* run, char** out_json) {
  return guarded([&]() -> ts_status {
    if (!run) {
      set_error("run handle is null");
      return TS_ERR_INVALID_ARG;
    }
    return out_string(out_json, run_summary(run->record).dump(2));
  });
}

ts_status ts_run_report_json(const ts_run* run, char** out_json) {
  return guarded([&]() -> ts_status {
    if (!run) {
      set_error("run handle is null");
      return TS_ERR_INVALID_ARG;
    }
    return out_string(out_json, run->record.canonical_report_json());
  });
}

ts_status ts_run_dir(const ts_run* run, char** out_path) {
  return guarded([&]() -> ts_status {
    if (!run) {
      set_error("run handle is null");
      return TS_ERR_INVALID_ARG;
    }
    return out_string(out_path, run->record.run_dir);
  });
}

ts_status ts_run_ablation(const char* config_json, const char* ablations_csv,
                          char** out_table_csv, char** out_table_markdown) {
  return guarded([&]() -> ts_status {
    if (!config_json) {
      set_error("config_json is required");
      return TS_ERR_INVALID_ARG;
    }
    auto config = traitscore::RunConfig::from_json(config_json);
    if (!config.ok()) return fail(config.error());
    std::set<std::string> ablations;
    if (ablations_csv) {
      std::stringstream stream(ablations_csv);
      std::string name;
      while (std::getline(stream, name, ',')) {
        const std::string trimmed = traitscore::trim(name);
        if (!trimmed.empty()) ablations.insert(trimmed);
      }
    }
    auto report = traitscore::run_ablation(config.value(), ablations);
    if (!report.ok()) return fail(report.error());
    if (ts_status status = out_string(out_table_csv, report.value().table_csv);
        status != TS_OK) {
      return status;
    }
    if (ts_status status =
            out_string(out_table_markdown, report.value().table_markdown);
        status != TS_OK) {
      return status;
    }
    for (const auto& record : report.value().records) {
      if (has_failures(record)) return TS_PARTIAL;
    }
    return TS_OK;
  });
}

ts_status ts_evaluate_run(const char* run_dir, char** out_report_json) {
  return guarded([&]() -> ts_status {
    if (!run_dir) {
      set_error("run_dir is required");
      return TS_ERR_INVALID_ARG;
    }
    auto report = traitscore::evaluate_run_dir(run_dir);
    if (!report.ok()) return fail(report.error());
    return out_string(out_report_json, traitscore::report_json(report.value()));
  });
}

ts_status ts_emit_report(const char* run_dir, char** out_files_json) {
  return guarded([&]() -> ts_status {
    if (!run_dir) {
      set_error("run_dir is required");
      return TS_ERR_INVALID_ARG;
    }
    auto files = traitscore::emit_report_files(run_dir);
    if (!files.ok()) return fail(files.error());
    return out_string(out_files_json, json(files.value()).dump(2));
  });
}

}  // extern "C"
