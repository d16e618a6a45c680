#pragma once

#include <map>
#include <string>
#include <vector>

#include "traitscore/core.hpp"
#include "traitscore/result.hpp"

namespace traitscore {

// Manifest JSON (fields by format):
//   name, format: "jsonl" | "asap_tsv" | "fixture"
//   question: {id, text}
//   rubric: {variant, criteria: [{id, name, description,
//            scale: {min, max, descriptors: [{level, text}]}}]}
//   path: items file, relative to the manifest's directory
//   column_map (asap_tsv): {id, text, essay_set, scores: {criterion -> column}}
//   essay_set (asap_tsv): row selector value
//   fixture (fixture): {question, seed, items}
struct DatasetManifest {
  std::string name;
  std::string format;
  std::string path;
  Rubric rubric;

  std::string id_column;
  std::string text_column;
  std::string essay_set_column;
  std::string essay_set;
  std::map<std::string, std::string> score_columns;

  FixtureSpec fixture;
};

Result<DatasetManifest> parse_manifest_json(const std::string& json_text);
Result<DatasetManifest> load_manifest(const std::string& manifest_path);

struct IngestResult {
  Dataset dataset;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

// Items JSONL line: {"id","question_id","raw_text","cleaned_text"?,
// "scores":{criterion_id: int}}. Lines violating the schema are skipped with
// a warning; more than 10% skipped is fatal.
Result<IngestResult> ingest_jsonl(const DatasetManifest& manifest,
                                  const std::string& base_dir);

// Tab-separated ASAP export. Rows are filtered on the essay_set column,
// trait scores mapped through column_map; malformed rows are skipped with a
// warning, missing columns are fatal.
Result<IngestResult> ingest_asap_tsv(const DatasetManifest& manifest,
                                     const std::string& base_dir);

// Dispatch on manifest.format ("fixture" generates the synthetic dataset).
Result<IngestResult> ingest_dataset(const DatasetManifest& manifest,
                                    const std::string& base_dir);
Result<IngestResult> ingest_from_path(const std::string& manifest_path);

// Writes <dir>/manifest.json (format jsonl) and <dir>/items.jsonl in the
// canonical on-disk schema; the result round-trips through ingest_jsonl.
Status save_dataset(const Dataset& dataset, const std::string& dir);

}  // namespace traitscore
