#include "traitscore/llm.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <thread>

#include "traitscore/hashing.hpp"
#include "traitscore/rng.hpp"
#include "traitscore/text.hpp"

namespace traitscore {

std::string ChatRequest::fingerprint() const {
  StableHash hash;
  hash.field(model_id)
      .field(format_double(temperature))
      .field(std::to_string(max_tokens));
  for (const auto& message : messages) {
    hash.field(message.role == ChatMessage::Role::System ? "system" : "user");
    hash.field(message.content);
  }
  return hash.hex();
}

ChatRequest make_chat_request(const std::string& model_id,
                              const PromptText& prompt, double temperature,
                              int max_tokens) {
  ChatRequest request;
  request.model_id = model_id;
  request.messages.push_back({ChatMessage::Role::System, prompt.system});
  request.messages.push_back({ChatMessage::Role::User, prompt.user});
  request.temperature = temperature;
  request.max_tokens = max_tokens;
  request.tags["template"] = template_name(prompt.template_id);
  request.tags["prompt_fingerprint"] = prompt.fingerprint;
  return request;
}

bool is_transient_error(const Error& error) {
  return error.code == "transport" || error.code == "timeout" ||
         error.code == "rate_limit" || error.code == "server";
}

// ---- cache -------------------------------------------------------------------

std::optional<ChatResponse> ResponseCache::lookup(
    const std::string& fingerprint) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find(fingerprint);
  if (it == entries_.end()) return std::nullopt;
  ChatResponse response = it->second;
  response.from_cache = true;
  return response;
}

std::size_t ResponseCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

// ---- limiter -----------------------------------------------------------------

ConcurrencyLimiter::ConcurrencyLimiter(int max_in_flight)
    : max_in_flight_(max_in_flight < 1 ? 1 : max_in_flight) {}

ConcurrencyLimiter::Permit::~Permit() {
  if (owner_) owner_->release();
}

ConcurrencyLimiter::Permit ConcurrencyLimiter::acquire() {
  std::unique_lock<std::mutex> lock(mutex_);
  cv_.wait(lock, [this] { return in_flight_ < max_in_flight_; });
  ++in_flight_;
  peak_ = std::max(peak_, in_flight_);
  return Permit(this);
}

void ConcurrencyLimiter::release() {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    --in_flight_;
  }
  cv_.notify_one();
}

int ConcurrencyLimiter::peak_in_flight() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return peak_;
}

// ---- caching backend -----------------------------------------------------------

Result<ChatResponse> CachingBackend::complete(const ChatRequest& request) {
  const std::string fingerprint = request.fingerprint();
  if (!request.bypass_cache) {
    if (auto hit = cache_->lookup(fingerprint)) {
      return *hit;
    }
  }
  auto response = inner_->complete(request);
  if (response.ok()) {
    cache_->store(fingerprint, response.value());
  }
  return response;
}

// ---- retrying client ----------------------------------------------------------

LlmClient::LlmClient(std::shared_ptr<ChatBackend> backend, RetryPolicy policy,
                     std::shared_ptr<ConcurrencyLimiter> limiter, SleepFn sleep)
    : backend_(std::move(backend)),
      policy_(policy),
      limiter_(std::move(limiter)),
      sleep_(std::move(sleep)) {
  if (!sleep_) {
    sleep_ = [](int delay_ms) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
    };
  }
}

Result<ChatResponse> LlmClient::complete(const ChatRequest& request) {
  if (request.messages.empty()) {
    return make_error("config", "chat request has no messages");
  }
  for (std::size_t i = 0; i < request.messages.size(); ++i) {
    if (request.messages[i].role == ChatMessage::Role::System && i != 0) {
      return make_error("config", "system message must come first");
    }
  }

  CallRecord record;
  record.fingerprint = request.fingerprint();
  record.tags = request.tags;

  // Per-request jitter stream: deterministic, no shared RNG state.
  SeededRng jitter(policy_.jitter_seed ^ stable_hash_u64(record.fingerprint));

  Result<ChatResponse> last = make_error("internal", "no attempt made");
  for (int attempt = 0; attempt <= policy_.max_retries; ++attempt) {
    if (attempt > 0) {
      double delay = static_cast<double>(policy_.base_delay_ms);
      for (int i = 1; i < attempt; ++i) delay *= 2.0;
      delay = std::min(delay, static_cast<double>(policy_.max_delay_ms));
      const int jittered =
          static_cast<int>(delay * (0.5 + 0.5 * jitter.next_unit()));
      sleep_(jittered);
    }
    ++record.attempts;
    {
      std::optional<ConcurrencyLimiter::Permit> permit;
      if (limiter_) permit.emplace(limiter_->acquire());
      last = backend_->complete(request);
    }
    if (last.ok()) {
      record.ok = true;
      record.cached = last.value().from_cache;
      record.usage = last.value().usage;
      break;
    }
    record.error_code = last.error().code;
    if (!is_transient_error(last.error())) break;
  }
  if (!last.ok() && is_transient_error(last.error())) {
    last = make_error(last.error().code,
                      last.error().message + " (exhausted retries)");
  }
  {
    std::lock_guard<std::mutex> lock(log_mutex_);
    log_.push_back(record);
  }
  return last;
}

std::vector<CallRecord> LlmClient::call_log() const {
  std::lock_guard<std::mutex> lock(log_mutex_);
  return log_;
}

// Totals count cached hits too: a resumed run must report the same usage a
// fresh run would, or reports stop being byte-reproducible.
TokenUsage LlmClient::total_usage() const {
  std::lock_guard<std::mutex> lock(log_mutex_);
  TokenUsage total;
  for (const auto& record : log_) {
    total.prompt_tokens += record.usage.prompt_tokens;
    total.completion_tokens += record.usage.completion_tokens;
  }
  return total;
}

// ---- parsing -------------------------------------------------------------------

std::string format_grouped_answer(const Rubric& rubric,
                                  const ScoreVector& scores) {
  std::vector<std::string> parts;
  parts.reserve(rubric.criteria.size());
  for (const auto& criterion : rubric.criteria) {
    auto it = scores.scores.find(criterion.id);
    parts.push_back(criterion.id + ": " +
                    (it == scores.scores.end() ? std::string("?")
                                               : std::to_string(it->second)));
  }
  return join(parts, ", ");
}

std::string format_single_answer(const std::string& criterion_id, int score) {
  return criterion_id + ":" + std::to_string(score);
}

namespace {

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool equals_ci(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

// First "<id> : <integer>" occurrence, case-insensitive on the id, word
// boundary on the left so "c1" never matches inside "c10". Whitespace
// (including newlines) tolerated around the colon.
std::optional<long long> scan_for_score(const std::string& text,
                                        const std::string& id) {
  if (id.empty()) return std::nullopt;
  const std::size_t n = text.size();
  for (std::size_t i = 0; i + id.size() <= n; ++i) {
    if (!equals_ci(std::string_view(text).substr(i, id.size()), id)) continue;
    if (i > 0 && is_word_char(text[i - 1])) continue;
    std::size_t j = i + id.size();
    while (j < n && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j >= n || text[j] != ':') continue;
    ++j;
    while (j < n && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    bool negative = false;
    if (j < n && (text[j] == '-' || text[j] == '+')) {
      negative = text[j] == '-';
      ++j;
    }
    std::size_t digits_begin = j;
    long long value = 0;
    bool overflow = false;
    while (j < n && std::isdigit(static_cast<unsigned char>(text[j]))) {
      if (j - digits_begin >= 9) {
        overflow = true;  // way outside any scale; let range check reject
      } else {
        value = value * 10 + (text[j] - '0');
      }
      ++j;
    }
    if (j == digits_begin) continue;  // "c7: x" style, keep scanning
    if (overflow) value = 1000000000LL;
    return negative ? -value : value;
  }
  return std::nullopt;
}

}  // namespace

Result<ScoreVector> parse_grouped_scores(const std::string& text,
                                         const Rubric& rubric) {
  ScoreVector vector;
  for (const auto& criterion : rubric.criteria) {
    auto value = scan_for_score(text, criterion.id);
    if (!value) {
      return make_error("missing",
                        "no score found for criterion " + criterion.id);
    }
    if (*value < criterion.scale.min || *value > criterion.scale.max) {
      return make_error("range", "score " + std::to_string(*value) + " for " +
                                     criterion.id + " outside scale " +
                                     std::to_string(criterion.scale.min) +
                                     ".." +
                                     std::to_string(criterion.scale.max));
    }
    vector.scores[criterion.id] = static_cast<int>(*value);
  }
  return vector;
}

Result<int> parse_single_score(const std::string& text,
                               const Criterion& criterion) {
  auto value = scan_for_score(text, criterion.id);
  if (!value) {
    return make_error("missing", "no '" + criterion.id +
                                     ": <score>' pattern in model output");
  }
  if (*value < criterion.scale.min || *value > criterion.scale.max) {
    return make_error("range", "score " + std::to_string(*value) +
                                   " outside scale " +
                                   std::to_string(criterion.scale.min) + ".." +
                                   std::to_string(criterion.scale.max));
  }
  return static_cast<int>(*value);
}

namespace {

const std::vector<std::string>& preamble_prefixes() {
  static const std::vector<std::string> v = {
      "here is the cleaned response:", "here's the cleaned response:",
      "here is the cleaned transcript:", "cleaned response:",
      "cleaned transcript:",
  };
  return v;
}

}  // namespace

Result<std::string> sanitize_preprocessed(const std::string& text) {
  std::string s = trim(text);
  if (s.empty()) {
    return make_error("empty_output", "preprocessing produced no content");
  }

  // Markdown fences.
  if (s.rfind("```", 0) == 0) {
    auto nl = s.find('\n');
    s = nl == std::string::npos ? "" : s.substr(nl + 1);
    s = trim(s);
    if (s.size() >= 3 && s.compare(s.size() - 3, 3, "```") == 0) {
      s = trim(s.substr(0, s.size() - 3));
    }
  }

  // Same-line preamble prefix, e.g. "Cleaned response: I would...".
  for (const auto& prefix : preamble_prefixes()) {
    if (starts_with_ci(s, prefix)) {
      s = trim(s.substr(prefix.size()));
      break;
    }
  }

  // Whole-line preamble, e.g. "Here is your cleaned answer:\n...".
  if (!s.empty()) {
    const auto nl = s.find('\n');
    const std::string first_line =
        trim(nl == std::string::npos ? s : s.substr(0, nl));
    const bool looks_preamble =
        (starts_with_ci(first_line, "here is") ||
         starts_with_ci(first_line, "here's") ||
         starts_with_ci(first_line, "sure")) &&
        !first_line.empty() && first_line.back() == ':';
    if (looks_preamble) {
      s = nl == std::string::npos ? "" : trim(s.substr(nl + 1));
    }
  }

  if (s.empty()) {
    return make_error("empty_output", "preprocessing produced no content");
  }
  return s;
}

}  // namespace traitscore
