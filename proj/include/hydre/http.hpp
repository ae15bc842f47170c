#pragma once

#include <chrono>
#include <string>
#include <string_view>

#include "hydre/judge.hpp"
#include "hydre/providers.hpp"

namespace hydre {

inline constexpr std::string_view kLlmApiKeyEnv = "HYDRE_LLM_API_KEY";
inline constexpr std::string_view kEmbedApiKeyEnv = "HYDRE_EMBED_API_KEY";

// Value of an environment variable; throws ValidationError when unset or empty.
std::string require_env(std::string_view name);

// Chat-completion client: POST {"model", "messages", "temperature", "max_tokens"},
// reads choices[0].message.content. Connection errors, 429 and 5xx raise
// TransportError (retryable); other failures raise RuntimeFailure.
class HttpChatBackend : public Backend {
 public:
  HttpChatBackend(std::string url, std::string api_key,
                  std::chrono::seconds timeout = std::chrono::seconds(120));
  std::string complete(const std::string& prompt, const GenerationParams& params) override;

 private:
  std::string url_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

// Encoder transport: POST {"texts": [...]} and read {"vectors": [[...]]}.
EmbeddingService::Transport http_embedding_transport(std::string url, std::string api_key,
                                                     std::chrono::seconds timeout =
                                                         std::chrono::seconds(120));

}  // namespace hydre
