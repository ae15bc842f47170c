#include "hydre/http.hpp"

#include <cstdlib>

#ifdef HYDRE_WITH_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

#include "hydre/jsonl.hpp"

namespace hydre {

using jsonl::json;

std::string require_env(std::string_view name) {
  const char* v = std::getenv(std::string(name).c_str());
  if (v == nullptr || *v == '\0') {
    throw ValidationError("environment variable " + std::string(name) + " is not set");
  }
  return v;
}

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("endpoint URL lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

json post_json(const std::string& url, const std::string& api_key, const json& body,
               std::chrono::seconds timeout) {
  const auto ep = split_url(url);
  httplib::Client client(ep.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

  auto res = client.Post(ep.path, headers, body.dump(), "application/json");
  if (!res) throw TransportError("POST " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500) {
    throw TransportError("POST " + url + " returned HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw RuntimeFailure("POST " + url + " returned HTTP " + std::to_string(res->status) + ": " +
                         res->body.substr(0, 200));
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw RuntimeFailure("unparseable response from " + url + ": " + e.what());
  }
}

}  // namespace

HttpChatBackend::HttpChatBackend(std::string url, std::string api_key, std::chrono::seconds timeout)
    : url_(std::move(url)), api_key_(std::move(api_key)), timeout_(timeout) {
  split_url(url_);
}

std::string HttpChatBackend::complete(const std::string& prompt, const GenerationParams& params) {
  const json body = {{"model", params.model_name},
                     {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                     {"temperature", params.temperature},
                     {"max_tokens", params.max_output_tokens}};
  const auto reply = post_json(url_, api_key_, body, timeout_);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw RuntimeFailure("malformed chat completion: " + std::string(e.what()));
  }
}

EmbeddingService::Transport http_embedding_transport(std::string url, std::string api_key,
                                                     std::chrono::seconds timeout) {
  split_url(url);
  return [url = std::move(url), api_key = std::move(api_key),
          timeout](std::span<const std::string> texts) {
    const json body = {{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
    const auto reply = post_json(url, api_key, body, timeout);
    try {
      return reply.at("vectors").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
      throw RuntimeFailure("malformed embedding response: " + std::string(e.what()));
    }
  };
}

}  // namespace hydre
