#include <fstream>

#include <json.hpp>

#include "traitscore/hashing.hpp"
#include "traitscore/llm.hpp"
#include "traitscore/text.hpp"

namespace traitscore {

using nlohmann::json;

// ---- file-backed cache --------------------------------------------------------

Result<std::shared_ptr<ResponseCache>> ResponseCache::open(
    const std::string& path) {
  auto cache = std::make_shared<ResponseCache>();
  cache->path_ = path;
  std::ifstream in(path);
  if (in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      json entry = json::parse(line, nullptr, false);
      if (entry.is_discarded() || !entry.contains("fingerprint") ||
          !entry.contains("text")) {
        return make_error("cache_corrupt",
                          path + ":" + std::to_string(line_no) +
                              ": unreadable cache line");
      }
      ChatResponse response;
      response.text = entry["text"].get<std::string>();
      response.model_id = entry.value("model_id", "");
      if (entry.contains("usage")) {
        response.usage.prompt_tokens =
            entry["usage"].value("prompt_tokens", 0);
        response.usage.completion_tokens =
            entry["usage"].value("completion_tokens", 0);
      }
      cache->entries_[entry["fingerprint"].get<std::string>()] =
          std::move(response);
    }
  }
  return cache;
}

void ResponseCache::store(const std::string& fingerprint,
                          const ChatResponse& response) {
  std::lock_guard<std::mutex> lock(mutex_);
  ChatResponse stored = response;
  stored.from_cache = false;
  const bool fresh = entries_.find(fingerprint) == entries_.end();
  entries_[fingerprint] = stored;
  if (!path_.empty() && fresh) {
    json entry = {
        {"fingerprint", fingerprint},
        {"text", stored.text},
        {"model_id", stored.model_id},
        {"usage",
         {{"prompt_tokens", stored.usage.prompt_tokens},
          {"completion_tokens", stored.usage.completion_tokens}}},
    };
    std::ofstream out(path_, std::ios::app);
    out << entry.dump() << "\n";
  }
}

// ---- deterministic backends -----------------------------------------------------

namespace {

TokenUsage mock_usage(const ChatRequest& request, const std::string& text) {
  TokenUsage usage;
  for (const auto& message : request.messages) {
    usage.prompt_tokens +=
        static_cast<std::int64_t>(word_count(message.content));
  }
  usage.completion_tokens = static_cast<std::int64_t>(word_count(text));
  return usage;
}

ChatResponse mock_response(const ChatRequest& request, std::string text) {
  ChatResponse response;
  response.text = std::move(text);
  response.model_id = request.model_id;
  response.usage = mock_usage(request, response.text);
  response.latency_ms = 0;
  return response;
}

Result<const DatasetItem*> item_from_tags(const Dataset& dataset,
                                          const ChatRequest& request) {
  auto it = request.tags.find("transcript_id");
  if (it == request.tags.end()) {
    return make_error("protocol", "mock backend needs a transcript_id tag");
  }
  const DatasetItem* item = dataset.find_item(it->second);
  if (!item) {
    return make_error("protocol",
                      "mock backend: unknown transcript '" + it->second + "'");
  }
  return item;
}

std::string tag_or(const ChatRequest& request, const std::string& key,
                   const std::string& fallback) {
  auto it = request.tags.find(key);
  return it == request.tags.end() ? fallback : it->second;
}

}  // namespace

Result<ChatResponse> OracleBackend::complete(const ChatRequest& request) {
  auto item = item_from_tags(dataset_, request);
  if (!item.ok()) return item.error();
  const std::string tmpl = tag_or(request, "template", "");

  if (tmpl == "preprocess") {
    return mock_response(request, "Here is the cleaned response:\n" +
                                      trim(item.value()->transcript.raw_text));
  }
  if (tmpl == "criterion_agent") {
    const std::string cid = tag_or(request, "criterion_id", "");
    auto score = item.value()->gold.scores.find(cid);
    if (score == item.value()->gold.scores.end()) {
      return make_error("protocol", "oracle: no gold score for '" + cid + "'");
    }
    return mock_response(request,
                         format_single_answer(cid, score->second));
  }
  ScoreVector gold;
  gold.scores = item.value()->gold.scores;
  return mock_response(request, format_grouped_answer(dataset_.rubric, gold));
}

int OffsetBackend::offset_for(const std::string& transcript_id,
                              const std::string& criterion_id,
                              const std::vector<int>& pattern) {
  if (pattern.empty()) return 0;
  const std::uint64_t h = stable_hash_u64(transcript_id + ":" + criterion_id);
  return pattern[static_cast<std::size_t>(h % pattern.size())];
}

Result<ChatResponse> OffsetBackend::complete(const ChatRequest& request) {
  auto item = item_from_tags(dataset_, request);
  if (!item.ok()) return item.error();
  const std::string tmpl = tag_or(request, "template", "");

  auto offset_score = [&](const std::string& cid) -> Result<int> {
    auto gold = item.value()->gold.scores.find(cid);
    if (gold == item.value()->gold.scores.end()) {
      return make_error("protocol", "offset: no gold score for '" + cid + "'");
    }
    const Criterion* criterion = dataset_.rubric.find(cid);
    if (!criterion) {
      return make_error("protocol", "offset: unknown criterion '" + cid + "'");
    }
    int value = gold->second +
                offset_for(item.value()->transcript.id, cid, pattern_);
    value = std::max(criterion->scale.min, std::min(criterion->scale.max, value));
    return value;
  };

  if (tmpl == "preprocess") {
    return mock_response(request, "Here is the cleaned response:\n" +
                                      trim(item.value()->transcript.raw_text));
  }
  if (tmpl == "criterion_agent") {
    const std::string cid = tag_or(request, "criterion_id", "");
    auto score = offset_score(cid);
    if (!score.ok()) return score.error();
    return mock_response(request, format_single_answer(cid, score.value()));
  }
  ScoreVector vector;
  for (const auto& criterion : dataset_.rubric.criteria) {
    auto score = offset_score(criterion.id);
    if (!score.ok()) return score.error();
    vector.scores[criterion.id] = score.value();
  }
  return mock_response(request, format_grouped_answer(dataset_.rubric, vector));
}

Result<ChatResponse> ConstantBackend::complete(const ChatRequest& request) {
  const std::string tmpl = tag_or(request, "template", "");
  if (tmpl == "preprocess") {
    return mock_response(request, "The candidate describes their approach.");
  }
  if (tmpl == "criterion_agent") {
    const std::string cid = tag_or(request, "criterion_id", "");
    return mock_response(request, format_single_answer(cid, score_));
  }
  ScoreVector vector;
  for (const auto& criterion : dataset_.rubric.criteria) {
    vector.scores[criterion.id] = score_;
  }
  return mock_response(request, format_grouped_answer(dataset_.rubric, vector));
}

Result<ChatResponse> DegradeBackend::complete(const ChatRequest& request) {
  auto item = item_from_tags(dataset_, request);
  if (!item.ok()) return item.error();
  const std::string tmpl = tag_or(request, "template", "");
  if (tmpl == "preprocess") {
    return mock_response(request, trim(item.value()->transcript.raw_text));
  }
  bool has_examples = false;
  for (const auto& message : request.messages) {
    if (message.content.find("Example 1:") != std::string::npos ||
        message.content.find("The first example is") != std::string::npos) {
      has_examples = true;
    }
  }
  auto degraded_score = [&](const std::string& cid) -> Result<int> {
    auto gold = item.value()->gold.scores.find(cid);
    if (gold == item.value()->gold.scores.end()) {
      return make_error("protocol", "degrade: no gold score for '" + cid + "'");
    }
    if (has_examples) return gold->second;
    const Criterion* criterion = dataset_.rubric.find(cid);
    if (!criterion) {
      return make_error("protocol", "degrade: unknown criterion '" + cid + "'");
    }
    int value = gold->second +
                OffsetBackend::offset_for(item.value()->transcript.id, cid,
                                          pattern_);
    return std::max(criterion->scale.min,
                    std::min(criterion->scale.max, value));
  };
  if (tmpl == "criterion_agent") {
    const std::string cid = tag_or(request, "criterion_id", "");
    auto score = degraded_score(cid);
    if (!score.ok()) return score.error();
    return mock_response(request, format_single_answer(cid, score.value()));
  }
  ScoreVector vector;
  for (const auto& criterion : dataset_.rubric.criteria) {
    auto score = degraded_score(criterion.id);
    if (!score.ok()) return score.error();
    vector.scores[criterion.id] = score.value();
  }
  return mock_response(request, format_grouped_answer(dataset_.rubric, vector));
}

Result<std::shared_ptr<FixtureBackend>> FixtureBackend::from_jsonl(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return make_error("io", "cannot open fixture file '" + path + "'");
  }
  std::map<std::string, std::string> responses;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json entry = json::parse(line, nullptr, false);
    if (entry.is_discarded() || !entry.contains("fingerprint") ||
        !entry.contains("text")) {
      return make_error("io", "unreadable fixture line in '" + path + "'");
    }
    responses[entry["fingerprint"].get<std::string>()] =
        entry["text"].get<std::string>();
  }
  return std::make_shared<FixtureBackend>(std::move(responses));
}

Result<ChatResponse> FixtureBackend::complete(const ChatRequest& request) {
  auto it = responses_.find(request.fingerprint());
  if (it == responses_.end()) {
    return make_error("fixture_miss", "no canned response for fingerprint " +
                                          request.fingerprint());
  }
  return mock_response(request, it->second);
}

}  // namespace traitscore
