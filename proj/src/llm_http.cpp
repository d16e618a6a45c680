#include <chrono>

#include <httplib.h>
#include <json.hpp>

#include "traitscore/embedding_http.hpp"
#include "traitscore/llm.hpp"

namespace traitscore {

using nlohmann::json;

namespace {

class HttplibTransport : public HttpTransport {
 public:
  HttplibTransport(std::string base_url, int timeout_seconds)
      : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {}

  Result<HttpResult> post_json(
      const std::string& path, const std::string& body,
      const std::vector<std::pair<std::string, std::string>>& headers)
      override {
    // One client per call keeps the transport thread-safe without locking.
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    client.set_write_timeout(timeout_seconds_, 0);
    httplib::Headers hdrs;
    for (const auto& [key, value] : headers) hdrs.emplace(key, value);
    auto result = client.Post(path, hdrs, body, "application/json");
    if (!result) {
      return make_error("transport",
                        "request to " + base_url_ + path + " failed: " +
                            httplib::to_string(result.error()));
    }
    return HttpResult{result->status, result->body};
  }

 private:
  std::string base_url_;
  int timeout_seconds_;
};

Error classify_http_status(int status, const std::string& body) {
  const std::string detail =
      "HTTP " + std::to_string(status) +
      (body.empty() ? "" : ": " + body.substr(0, 300));
  if (status == 429) return make_error("rate_limit", detail);
  if (status == 408) return make_error("timeout", detail);
  if (status >= 500) return make_error("server", detail);
  return make_error("http_" + std::to_string(status), detail);
}

std::vector<std::pair<std::string, std::string>> auth_headers(
    const HttpBackendConfig& config) {
  std::vector<std::pair<std::string, std::string>> headers;
  if (!config.api_key.empty()) {
    headers.emplace_back("Authorization", "Bearer " + config.api_key);
  }
  return headers;
}

}  // namespace

std::unique_ptr<HttpTransport> make_httplib_transport(
    const std::string& base_url, int timeout_seconds) {
  return std::make_unique<HttplibTransport>(base_url, timeout_seconds);
}

HttpChatBackend::HttpChatBackend(std::unique_ptr<HttpTransport> transport,
                                 HttpBackendConfig config)
    : transport_(std::move(transport)), config_(std::move(config)) {}

Result<ChatResponse> HttpChatBackend::complete(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& message : request.messages) {
    messages.push_back(
        {{"role",
          message.role == ChatMessage::Role::System ? "system" : "user"},
         {"content", message.content}});
  }
  const json body = {
      {"model", request.model_id},
      {"messages", messages},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
  };

  const auto start = std::chrono::steady_clock::now();
  auto result = transport_->post_json("/chat/completions", body.dump(),
                                      auth_headers(config_));
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  if (!result.ok()) return result.error();
  if (result.value().status != 200) {
    return classify_http_status(result.value().status, result.value().body);
  }

  json payload = json::parse(result.value().body, nullptr, false);
  if (payload.is_discarded() || !payload.contains("choices") ||
      payload["choices"].empty() ||
      !payload["choices"][0].contains("message")) {
    return make_error("protocol", "response body is not a chat completion");
  }
  ChatResponse response;
  response.text =
      payload["choices"][0]["message"].value("content", std::string());
  if (response.text.empty()) {
    return make_error("protocol", "chat completion has empty content");
  }
  response.model_id = payload.value("model", request.model_id);
  if (payload.contains("usage")) {
    response.usage.prompt_tokens = payload["usage"].value("prompt_tokens", 0);
    response.usage.completion_tokens =
        payload["usage"].value("completion_tokens", 0);
  }
  response.latency_ms = static_cast<std::int64_t>(elapsed);
  return response;
}

namespace {

class HttpEmbeddingClient : public EmbeddingClient {
 public:
  HttpEmbeddingClient(std::unique_ptr<HttpTransport> transport,
                      HttpBackendConfig config, std::string model_id,
                      int dimension)
      : transport_(std::move(transport)),
        config_(std::move(config)),
        model_id_(std::move(model_id)),
        dimension_(dimension) {}

  int dimension() const override { return dimension_; }
  std::string model_id() const override { return model_id_; }

  Result<std::vector<std::vector<double>>> embed(
      const std::vector<std::string>& texts) override {
    const json body = {{"model", model_id_}, {"input", texts}};
    auto result =
        transport_->post_json("/embeddings", body.dump(), auth_headers(config_));
    if (!result.ok()) return result.error();
    if (result.value().status != 200) {
      return classify_http_status(result.value().status, result.value().body);
    }
    json payload = json::parse(result.value().body, nullptr, false);
    if (payload.is_discarded() || !payload.contains("data")) {
      return make_error("protocol", "response body is not an embedding list");
    }
    std::vector<std::vector<double>> vectors(texts.size());
    std::size_t filled = 0;
    for (const auto& entry : payload["data"]) {
      if (!entry.contains("index") || !entry.contains("embedding")) {
        return make_error("protocol", "embedding entry missing index/vector");
      }
      const auto index = entry["index"].get<std::size_t>();
      if (index >= vectors.size()) {
        return make_error("protocol", "embedding index out of range");
      }
      vectors[index] = entry["embedding"].get<std::vector<double>>();
      ++filled;
    }
    if (filled != texts.size()) {
      return make_error("protocol", "embedding response incomplete");
    }
    return vectors;
  }

 private:
  std::unique_ptr<HttpTransport> transport_;
  HttpBackendConfig config_;
  std::string model_id_;
  int dimension_;
};

}  // namespace

std::unique_ptr<EmbeddingClient> make_http_embedding_client(
    std::unique_ptr<HttpTransport> transport, HttpBackendConfig config,
    std::string model_id, int dimension) {
  return std::make_unique<HttpEmbeddingClient>(
      std::move(transport), std::move(config), std::move(model_id), dimension);
}

}  // namespace traitscore
