#pragma once

#include <memory>
#include <string>

#include "traitscore/llm.hpp"
#include "traitscore/retrieval.hpp"

namespace traitscore {

// OpenAI-compatible /embeddings client sharing the chat backend's wire
// conventions. Request JSON: {"model","input":[texts]}; response read:
// data[i].embedding ordered by data[i].index.
std::unique_ptr<EmbeddingClient> make_http_embedding_client(
    std::unique_ptr<HttpTransport> transport, HttpBackendConfig config,
    std::string model_id, int dimension);

}  // namespace traitscore
