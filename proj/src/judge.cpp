#include "hydre/judge.hpp"

#include <cmath>
#include <cstdio>
#include <thread>

#include <openssl/evp.h>

#include "hydre/jsonl.hpp"

namespace hydre {

using jsonl::json;

void GenerationParams::validate() const {
  if (!(temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
  if (max_input_tokens == 0 || max_output_tokens == 0) {
    throw ValidationError("token limits must be positive");
  }
  if (model_name.empty()) throw ValidationError("model_name must be set");
}

std::string FailOnDispatchBackend::complete(const std::string&, const GenerationParams&) {
  ++attempts_;
  throw RuntimeFailure("backend dispatch attempted in replay mode");
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw RuntimeFailure("sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string cache_key(std::string_view prompt, const GenerationParams& params) {
  char temp[32];
  std::snprintf(temp, sizeof temp, "%.17g", params.temperature);
  std::string material;
  material.reserve(prompt.size() + params.model_name.size() + 48);
  material.append(prompt).push_back('\0');
  material.append(params.model_name).push_back('\0');
  material.append(temp).push_back('\0');
  material.append(std::to_string(params.max_output_tokens));
  return sha256_hex(material);
}

ReplayCache::ReplayCache(std::filesystem::path file) : file_(std::move(file)) {
  if (!std::filesystem::exists(*file_)) return;
  jsonl::for_each(*file_, [&](const json& j, std::size_t) {
    const auto key = j.at("key").get<std::string>();
    Entry e{j.at("prompt_sha").get<std::string>(), j.at("response").get<std::string>()};
    auto [it, inserted] = entries_.emplace(key, e);
    if (!inserted) check(key, e.prompt_sha, it->second);
  });
}

void ReplayCache::check(const std::string& key, const std::string& prompt_sha, const Entry& e) const {
  if (e.prompt_sha != prompt_sha) {
    throw RuntimeFailure("cache corruption: key " + key + " maps to two different prompts");
  }
}

std::optional<std::string> ReplayCache::lookup(const std::string& key,
                                               const std::string& prompt_sha) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  check(key, prompt_sha, it->second);
  return it->second.response;
}

void ReplayCache::insert(const std::string& key, const std::string& prompt_sha,
                         const std::string& response) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = entries_.emplace(key, Entry{prompt_sha, response});
  if (!inserted) {
    check(key, prompt_sha, it->second);
    return;
  }
  if (file_) {
    jsonl::Writer out(*file_, /*append=*/true);
    out.write({{"key", key}, {"prompt_sha", prompt_sha}, {"response", response}});
  }
}

std::size_t ReplayCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

Judge::Judge(Backend& backend, ReplayCache& cache, GenerationParams params, JudgeMode mode,
             RetryPolicy retry)
    : backend_(backend), cache_(cache), params_(std::move(params)), mode_(mode), retry_(std::move(retry)) {
  params_.validate();
}

std::size_t Judge::estimate_tokens(std::string_view prompt) const {
  if (auto n = backend_.count_tokens(prompt)) return *n;
  return static_cast<std::size_t>(std::ceil(1.3 * static_cast<double>(whitespace_tokens(prompt))));
}

bool Judge::is_cached(const std::string& prompt) const {
  return cache_.lookup(cache_key(prompt, params_), sha256_hex(prompt)).has_value();
}

std::string Judge::generate(const std::string& prompt) {
  if (prompt.empty()) throw ValidationError("empty prompt");
  const auto tokens = estimate_tokens(prompt);
  if (tokens > params_.max_input_tokens) throw PromptTooLong(tokens, params_.max_input_tokens);

  const auto key = cache_key(prompt, params_);
  const auto prompt_sha = sha256_hex(prompt);
  if (auto hit = cache_.lookup(key, prompt_sha)) return *hit;
  if (mode_ == JudgeMode::replay) throw ReplayMiss(key);

  auto response = with_retries(retry_, [&] {
    ++backend_calls_;
    return backend_.complete(prompt, params_);
  });
  cache_.insert(key, prompt_sha, response);
  return response;
}

std::vector<BatchRecord> run_batch(std::span<const PromptJob> jobs, Judge& judge,
                                   const RelationOntology& ontology, std::size_t parallelism) {
  if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
  std::vector<BatchRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      auto& rec = records[i];
      rec.query_id = jobs[i].query_id;
      try {
        rec.prediction = parse_response(judge.generate(jobs[i].prompt), ontology);
      } catch (const std::exception& e) {
        rec.prediction = ParsedPrediction{};
        rec.error = e.what();
      }
    }
  };

  const std::size_t n_threads = std::min(parallelism, std::max<std::size_t>(jobs.size(), 1));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  return records;
}

}  // namespace hydre
