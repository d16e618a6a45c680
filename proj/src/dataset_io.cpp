#include "traitscore/dataset_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "traitscore/text.hpp"

namespace traitscore {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Result<Rubric> rubric_from_json(const json& manifest) {
  if (!manifest.contains("rubric") || !manifest["rubric"].contains("criteria")) {
    return make_error("manifest", "manifest lacks rubric.criteria");
  }
  Rubric rubric;
  if (manifest.contains("question")) {
    rubric.question_id = manifest["question"].value("id", "");
    rubric.question_text = manifest["question"].value("text", "");
  }
  const std::string variant = manifest["rubric"].value("variant", "full");
  if (variant == "reduced") {
    rubric.variant = RubricVariant::Reduced;
  } else if (variant == "full") {
    rubric.variant = RubricVariant::Full;
  } else {
    return make_error("manifest", "unknown rubric variant '" + variant + "'");
  }
  for (const auto& entry : manifest["rubric"]["criteria"]) {
    Criterion criterion;
    criterion.id = entry.value("id", "");
    criterion.name = entry.value("name", "");
    criterion.description = entry.value("description", "");
    if (criterion.id.empty()) {
      return make_error("manifest", "criterion without id");
    }
    if (!entry.contains("scale")) {
      return make_error("manifest",
                        "criterion '" + criterion.id + "' lacks a scale");
    }
    criterion.scale.min = entry["scale"].value("min", 1);
    criterion.scale.max = entry["scale"].value("max", 7);
    if (entry["scale"].contains("descriptors")) {
      for (const auto& descriptor : entry["scale"]["descriptors"]) {
        criterion.scale.descriptors.push_back(
            {descriptor.value("level", 0), descriptor.value("text", "")});
      }
    }
    rubric.criteria.push_back(std::move(criterion));
  }
  if (rubric.criteria.empty()) {
    return make_error("manifest", "rubric has no criteria");
  }
  return rubric;
}

}  // namespace

Result<DatasetManifest> parse_manifest_json(const std::string& json_text) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) {
    return make_error("manifest", "manifest is not valid JSON");
  }
  DatasetManifest manifest;
  manifest.name = root.value("name", "dataset");
  manifest.format = root.value("format", "");
  manifest.path = root.value("path", "");
  if (manifest.format != "jsonl" && manifest.format != "asap_tsv" &&
      manifest.format != "fixture") {
    return make_error("manifest",
                      "format must be jsonl, asap_tsv or fixture, got '" +
                          manifest.format + "'");
  }

  if (manifest.format == "fixture") {
    if (root.contains("fixture")) {
      manifest.fixture.question = root["fixture"].value("question", 1);
      manifest.fixture.seed = root["fixture"].value("seed", 42ULL);
      manifest.fixture.items = root["fixture"].value("items", 30U);
    }
    return manifest;  // rubric comes from the generator
  }

  auto rubric = rubric_from_json(root);
  if (!rubric.ok()) return rubric.error();
  manifest.rubric = rubric.take();

  if (manifest.format == "asap_tsv") {
    if (!root.contains("column_map")) {
      return make_error("manifest", "asap_tsv manifest needs a column_map");
    }
    const auto& columns = root["column_map"];
    manifest.id_column = columns.value("id", "");
    manifest.text_column = columns.value("text", "");
    manifest.essay_set_column = columns.value("essay_set", "");
    manifest.essay_set = root.value("essay_set", "");
    if (manifest.id_column.empty() || manifest.text_column.empty()) {
      return make_error("manifest", "column_map must name id and text columns");
    }
    if (!columns.contains("scores")) {
      return make_error("manifest", "column_map must map criterion scores");
    }
    for (const auto& [criterion_id, column] : columns["scores"].items()) {
      manifest.score_columns[criterion_id] = column.get<std::string>();
    }
    for (const auto& criterion : manifest.rubric.criteria) {
      if (!manifest.score_columns.count(criterion.id)) {
        return make_error("manifest", "column_map lacks a score column for " +
                                          criterion.id);
      }
    }
  }
  return manifest;
}

Result<DatasetManifest> load_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) {
    return make_error("io", "cannot open manifest '" + manifest_path + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest_json(buffer.str());
}

Result<IngestResult> ingest_jsonl(const DatasetManifest& manifest,
                                  const std::string& base_dir) {
  const fs::path items_path = fs::path(base_dir) / manifest.path;
  std::ifstream in(items_path);
  if (!in) {
    return make_error("io", "cannot open items file '" + items_path.string() +
                                "'");
  }

  IngestResult result;
  result.dataset.name = manifest.name;
  result.dataset.rubric = manifest.rubric;

  std::string line;
  std::size_t line_no = 0;
  std::size_t total = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++total;
    auto skip = [&](const std::string& why) {
      ++result.skipped;
      result.warnings.push_back("line " + std::to_string(line_no) + ": " + why);
    };

    json entry = json::parse(line, nullptr, false);
    if (entry.is_discarded()) {
      skip("not valid JSON");
      continue;
    }
    if (!entry.contains("id") || !entry.contains("raw_text") ||
        !entry.contains("scores")) {
      skip("missing id/raw_text/scores");
      continue;
    }
    DatasetItem item;
    item.transcript.id = entry["id"].get<std::string>();
    item.transcript.question_id =
        entry.value("question_id", manifest.rubric.question_id);
    item.transcript.raw_text = entry["raw_text"].get<std::string>();
    if (entry.contains("cleaned_text") && !entry["cleaned_text"].is_null()) {
      item.transcript.cleaned_text = entry["cleaned_text"].get<std::string>();
    }
    if (trim(item.transcript.raw_text).empty()) {
      skip("empty raw_text");
      continue;
    }
    item.gold.transcript_id = item.transcript.id;
    bool scores_ok = true;
    for (const auto& criterion : manifest.rubric.criteria) {
      if (!entry["scores"].contains(criterion.id) ||
          !entry["scores"][criterion.id].is_number_integer()) {
        skip("missing gold score for " + criterion.id);
        scores_ok = false;
        break;
      }
      const int score = entry["scores"][criterion.id].get<int>();
      if (!criterion.scale.contains(score)) {
        skip("score for " + criterion.id + " outside scale");
        scores_ok = false;
        break;
      }
      item.gold.scores[criterion.id] = score;
    }
    if (!scores_ok) continue;
    result.dataset.items.push_back(std::move(item));
  }

  if (result.dataset.items.empty()) {
    return make_error("no_items", "no usable items in '" +
                                      items_path.string() + "'");
  }
  if (result.skipped * 10 > total) {
    return make_error("too_many_skips",
                      std::to_string(result.skipped) + " of " +
                          std::to_string(total) +
                          " lines skipped (over 10%)");
  }
  return result;
}

namespace {

std::vector<std::string> split_tsv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == '\t') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  return cells;
}

bool parse_int_cell(const std::string& cell, int& out) {
  const std::string trimmed = trim(cell);
  if (trimmed.empty()) return false;
  std::size_t pos = 0;
  try {
    const long value = std::stol(trimmed, &pos);
    if (pos != trimmed.size()) return false;
    out = static_cast<int>(value);
    return true;
  } catch (...) {
    return false;
  }
}

}  // namespace

Result<IngestResult> ingest_asap_tsv(const DatasetManifest& manifest,
                                     const std::string& base_dir) {
  const fs::path tsv_path = fs::path(base_dir) / manifest.path;
  std::ifstream in(tsv_path);
  if (!in) {
    return make_error("io", "cannot open TSV '" + tsv_path.string() + "'");
  }
  std::string header_line;
  if (!std::getline(in, header_line)) {
    return make_error("no_items", "TSV is empty");
  }
  const std::vector<std::string> header = split_tsv_row(header_line);
  auto column_index = [&header](const std::string& name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  };

  const int id_idx = column_index(manifest.id_column);
  const int text_idx = column_index(manifest.text_column);
  if (id_idx < 0 || text_idx < 0) {
    return make_error("missing_column", "TSV lacks '" + manifest.id_column +
                                            "' or '" + manifest.text_column +
                                            "' column");
  }
  int set_idx = -1;
  if (!manifest.essay_set_column.empty()) {
    set_idx = column_index(manifest.essay_set_column);
    if (set_idx < 0) {
      return make_error("missing_column", "TSV lacks essay_set column '" +
                                              manifest.essay_set_column + "'");
    }
  }
  std::map<std::string, int> score_idx;
  for (const auto& [criterion_id, column] : manifest.score_columns) {
    const int idx = column_index(column);
    if (idx < 0) {
      return make_error("missing_column",
                        "TSV lacks score column '" + column + "' for " +
                            criterion_id);
    }
    score_idx[criterion_id] = idx;
  }

  IngestResult result;
  result.dataset.name = manifest.name;
  result.dataset.rubric = manifest.rubric;

  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_tsv_row(line);
    auto skip = [&](const std::string& why) {
      ++result.skipped;
      result.warnings.push_back("row " + std::to_string(line_no) + ": " + why);
    };
    if (cells.size() != header.size()) {
      skip("expected " + std::to_string(header.size()) + " cells, got " +
           std::to_string(cells.size()));
      continue;
    }
    if (set_idx >= 0 &&
        trim(cells[static_cast<std::size_t>(set_idx)]) != manifest.essay_set) {
      continue;  // different essay set, not an error
    }
    DatasetItem item;
    item.transcript.id = trim(cells[static_cast<std::size_t>(id_idx)]);
    item.transcript.question_id = manifest.rubric.question_id;
    item.transcript.raw_text = cells[static_cast<std::size_t>(text_idx)];
    if (item.transcript.id.empty() || trim(item.transcript.raw_text).empty()) {
      skip("empty id or essay text");
      continue;
    }
    item.gold.transcript_id = item.transcript.id;
    bool row_ok = true;
    for (const auto& criterion : manifest.rubric.criteria) {
      int score = 0;
      if (!parse_int_cell(cells[static_cast<std::size_t>(score_idx[criterion.id])],
                          score)) {
        skip("non-integer score cell for " + criterion.id);
        row_ok = false;
        break;
      }
      if (!criterion.scale.contains(score)) {
        skip("score for " + criterion.id + " outside scale");
        row_ok = false;
        break;
      }
      item.gold.scores[criterion.id] = score;
    }
    if (!row_ok) continue;
    result.dataset.items.push_back(std::move(item));
  }
  if (result.dataset.items.empty()) {
    return make_error("no_items", "no rows matched the manifest selection");
  }
  return result;
}

Result<IngestResult> ingest_dataset(const DatasetManifest& manifest,
                                    const std::string& base_dir) {
  if (manifest.format == "jsonl") return ingest_jsonl(manifest, base_dir);
  if (manifest.format == "asap_tsv") return ingest_asap_tsv(manifest, base_dir);
  if (manifest.format == "fixture") {
    auto dataset = make_fixture_dataset(manifest.fixture);
    if (!dataset.ok()) return dataset.error();
    IngestResult result;
    result.dataset = dataset.take();
    if (!manifest.name.empty() && manifest.name != "dataset") {
      result.dataset.name = manifest.name;
    }
    return result;
  }
  return make_error("manifest", "unknown format '" + manifest.format + "'");
}

Result<IngestResult> ingest_from_path(const std::string& manifest_path) {
  auto manifest = load_manifest(manifest_path);
  if (!manifest.ok()) return manifest.error();
  return ingest_dataset(manifest.value(),
                        fs::path(manifest_path).parent_path().string());
}

Status save_dataset(const Dataset& dataset, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    return make_error("io", "cannot create '" + dir + "': " + ec.message());
  }

  json criteria = json::array();
  for (const auto& criterion : dataset.rubric.criteria) {
    json descriptors = json::array();
    for (const auto& descriptor : criterion.scale.descriptors) {
      descriptors.push_back(
          {{"level", descriptor.level}, {"text", descriptor.text}});
    }
    criteria.push_back({{"id", criterion.id},
                        {"name", criterion.name},
                        {"description", criterion.description},
                        {"scale",
                         {{"min", criterion.scale.min},
                          {"max", criterion.scale.max},
                          {"descriptors", descriptors}}}});
  }
  const json manifest = {
      {"name", dataset.name},
      {"format", "jsonl"},
      {"path", "items.jsonl"},
      {"question",
       {{"id", dataset.rubric.question_id},
        {"text", dataset.rubric.question_text}}},
      {"rubric",
       {{"variant",
         dataset.rubric.variant == RubricVariant::Reduced ? "reduced" : "full"},
        {"criteria", criteria}}},
  };

  std::ofstream manifest_out(fs::path(dir) / "manifest.json");
  if (!manifest_out) {
    return make_error("io", "cannot write manifest under '" + dir + "'");
  }
  manifest_out << manifest.dump(2) << "\n";

  std::ofstream items_out(fs::path(dir) / "items.jsonl");
  if (!items_out) {
    return make_error("io", "cannot write items under '" + dir + "'");
  }
  for (const auto& item : dataset.items) {
    json entry = {
        {"id", item.transcript.id},
        {"question_id", item.transcript.question_id},
        {"raw_text", item.transcript.raw_text},
        {"scores", item.gold.scores},
    };
    if (item.transcript.cleaned_text) {
      entry["cleaned_text"] = *item.transcript.cleaned_text;
    }
    items_out << entry.dump() << "\n";
  }
  return Status::success();
}

}  // namespace traitscore
