#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "traitscore/core.hpp"
#include "traitscore/prompts.hpp"
#include "traitscore/result.hpp"

namespace traitscore {

// ---- chat types -------------------------------------------------------------

struct ChatMessage {
  enum class Role { System, User };
  Role role = Role::User;
  std::string content;
};

struct ChatRequest {
  std::string model_id;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 512;
  // Metadata for deterministic backends and logs (template, transcript_id,
  // criterion_id). Not part of the fingerprint.
  std::map<std::string, std::string> tags;
  // Re-ask path after a parse failure: skip cache lookup, overwrite on
  // success. Not part of the fingerprint.
  bool bypass_cache = false;

  // Stable hash over model, decoding params and messages; cache key.
  std::string fingerprint() const;
};

ChatRequest make_chat_request(const std::string& model_id,
                              const PromptText& prompt, double temperature,
                              int max_tokens);

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  std::string model_id;
  TokenUsage usage;
  std::int64_t latency_ms = 0;
  bool from_cache = false;
};

// ---- backends ---------------------------------------------------------------

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual Result<ChatResponse> complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

// Transient failures are retryable; everything else fails immediately.
bool is_transient_error(const Error& error);

// Counts calls that reach the wrapped backend; cache hits never get here.
class CountingBackend : public ChatBackend {
 public:
  explicit CountingBackend(std::shared_ptr<ChatBackend> inner)
      : inner_(std::move(inner)) {}
  Result<ChatResponse> complete(const ChatRequest& request) override {
    calls_.fetch_add(1);
    return inner_->complete(request);
  }
  std::string name() const override { return inner_->name(); }
  std::int64_t calls() const { return calls_.load(); }

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::atomic<std::int64_t> calls_{0};
};

// ---- response cache ---------------------------------------------------------

// JSONL-backed response cache keyed by request fingerprint. Writes are
// serialised; reads are concurrent.
class ResponseCache {
 public:
  // In-memory only.
  ResponseCache() = default;
  // File-backed: loads existing entries, appends new ones.
  static Result<std::shared_ptr<ResponseCache>> open(const std::string& path);

  std::optional<ChatResponse> lookup(const std::string& fingerprint) const;
  void store(const std::string& fingerprint, const ChatResponse& response);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, ChatResponse> entries_;
  std::string path_;  // empty for in-memory
};

class CachingBackend : public ChatBackend {
 public:
  CachingBackend(std::shared_ptr<ChatBackend> inner,
                 std::shared_ptr<ResponseCache> cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}
  Result<ChatResponse> complete(const ChatRequest& request) override;
  std::string name() const override { return inner_->name(); }

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::shared_ptr<ResponseCache> cache_;
};

// ---- concurrency limiter ----------------------------------------------------

// Bounds in-flight backend requests to a configured maximum.
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(int max_in_flight);

  class Permit {
   public:
    explicit Permit(ConcurrencyLimiter* owner) : owner_(owner) {}
    Permit(Permit&& other) noexcept : owner_(other.owner_) {
      other.owner_ = nullptr;
    }
    Permit(const Permit&) = delete;
    ~Permit();

   private:
    ConcurrencyLimiter* owner_;
  };

  Permit acquire();
  int max_in_flight() const { return max_in_flight_; }
  int peak_in_flight() const;

 private:
  friend class Permit;
  void release();

  const int max_in_flight_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  int peak_ = 0;
};

// ---- retrying client --------------------------------------------------------

struct RetryPolicy {
  int max_retries = 2;  // attempts <= 1 + max_retries
  int base_delay_ms = 250;
  int max_delay_ms = 4000;
  std::uint64_t jitter_seed = 0;
};

struct CallRecord {
  std::string fingerprint;
  std::map<std::string, std::string> tags;
  int attempts = 0;
  bool ok = false;
  bool cached = false;
  std::string error_code;
  TokenUsage usage;
};

using SleepFn = std::function<void(int delay_ms)>;

// chat_complete with at-most-(1 + R) attempts, jittered exponential backoff
// on transient failures, optional in-flight limiting, and a call log keyed
// by request fingerprint.
class LlmClient {
 public:
  LlmClient(std::shared_ptr<ChatBackend> backend, RetryPolicy policy,
            std::shared_ptr<ConcurrencyLimiter> limiter = nullptr,
            SleepFn sleep = {});

  Result<ChatResponse> complete(const ChatRequest& request);

  std::vector<CallRecord> call_log() const;
  TokenUsage total_usage() const;

 private:
  std::shared_ptr<ChatBackend> backend_;
  RetryPolicy policy_;
  std::shared_ptr<ConcurrencyLimiter> limiter_;
  SleepFn sleep_;
  mutable std::mutex log_mutex_;
  std::vector<CallRecord> log_;
};

// ---- score output parsing ---------------------------------------------------

struct ScoreVector {
  std::map<std::string, int> scores;  // criterion_id -> score
};

// The grouped answer line "c2: 5, c3: 6, ..." in rubric order.
std::string format_grouped_answer(const Rubric& rubric,
                                  const ScoreVector& scores);

// The single-criterion answer in the exact 'cx:y' shape.
std::string format_single_answer(const std::string& criterion_id, int score);

// Extracts one integer per rubric criterion; whitespace-tolerant, first
// occurrence wins. Error codes: "missing", "range".
Result<ScoreVector> parse_grouped_scores(const std::string& text,
                                         const Rubric& rubric);

Result<int> parse_single_score(const std::string& text,
                               const Criterion& criterion);

// Strips known preamble lines and markdown fences from a preprocessing
// response; error "empty_output" when nothing remains.
Result<std::string> sanitize_preprocessed(const std::string& text);

// ---- deterministic backends -------------------------------------------------

// Answers every request with the gold score(s) of the transcript named in
// the request tags; preprocess requests get a preamble-wrapped copy of the
// raw text so the sanitiser has work to do.
class OracleBackend : public ChatBackend {
 public:
  explicit OracleBackend(Dataset dataset) : dataset_(std::move(dataset)) {}
  Result<ChatResponse> complete(const ChatRequest& request) override;
  std::string name() const override { return "mock-oracle"; }

 private:
  Dataset dataset_;
};

// Gold plus a deterministic offset pattern:
//   delta = pattern[stable_hash(transcript_id + ":" + criterion_id) % len]
//   pred  = clamp(gold + delta, scale.min, scale.max)
class OffsetBackend : public ChatBackend {
 public:
  OffsetBackend(Dataset dataset, std::vector<int> pattern)
      : dataset_(std::move(dataset)), pattern_(std::move(pattern)) {}
  Result<ChatResponse> complete(const ChatRequest& request) override;
  std::string name() const override { return "mock-offset"; }

  static int offset_for(const std::string& transcript_id,
                        const std::string& criterion_id,
                        const std::vector<int>& pattern);

 private:
  Dataset dataset_;
  std::vector<int> pattern_;
};

// Emits a constant score for every criterion.
class ConstantBackend : public ChatBackend {
 public:
  ConstantBackend(Dataset dataset, int score)
      : dataset_(std::move(dataset)), score_(score) {}
  Result<ChatResponse> complete(const ChatRequest& request) override;
  std::string name() const override { return "mock-constant"; }

 private:
  Dataset dataset_;
  int score_;
};

// Gold when the prompt carries in-context example blocks, gold plus a
// deterministic offset pattern otherwise. Simulates the benefit of few-shot
// calibration so ablation comparisons have a known ordering offline.
class DegradeBackend : public ChatBackend {
 public:
  DegradeBackend(Dataset dataset, std::vector<int> pattern)
      : dataset_(std::move(dataset)), pattern_(std::move(pattern)) {}
  Result<ChatResponse> complete(const ChatRequest& request) override;
  std::string name() const override { return "mock-degrade"; }

 private:
  Dataset dataset_;
  std::vector<int> pattern_;
};

// Canned responses keyed by request fingerprint (replay of a cache file).
class FixtureBackend : public ChatBackend {
 public:
  explicit FixtureBackend(std::map<std::string, std::string> by_fingerprint)
      : responses_(std::move(by_fingerprint)) {}
  static Result<std::shared_ptr<FixtureBackend>> from_jsonl(
      const std::string& path);
  Result<ChatResponse> complete(const ChatRequest& request) override;
  std::string name() const override { return "fixture"; }

 private:
  std::map<std::string, std::string> responses_;
};

// ---- HTTP backend -----------------------------------------------------------

struct HttpResult {
  int status = 0;
  std::string body;
};

// Seam between retry/parsing logic and the socket layer.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual Result<HttpResult> post_json(
      const std::string& path, const std::string& body,
      const std::vector<std::pair<std::string, std::string>>& headers) = 0;
};

// cpp-httplib implementation.
std::unique_ptr<HttpTransport> make_httplib_transport(
    const std::string& base_url, int timeout_seconds);

struct HttpBackendConfig {
  std::string base_url;      // e.g. https://api.example.com/v1
  std::string api_key;
  int timeout_seconds = 120;
};

// OpenAI-compatible chat-completions backend. Request JSON:
//   {"model","messages":[{"role","content"}],"temperature","max_tokens"}
// Response JSON read: choices[0].message.content and usage token counts.
class HttpChatBackend : public ChatBackend {
 public:
  HttpChatBackend(std::unique_ptr<HttpTransport> transport,
                  HttpBackendConfig config);
  Result<ChatResponse> complete(const ChatRequest& request) override;
  std::string name() const override { return "http"; }

 private:
  std::unique_ptr<HttpTransport> transport_;
  HttpBackendConfig config_;
  std::mutex mutex_;
};

}  // namespace traitscore
