#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hydre/corpus.hpp"
#include "hydre/error.hpp"
#include "hydre/prompting.hpp"
#include "hydre/retry.hpp"

namespace hydre {

struct GenerationParams {
  std::string model_name = "gpt-4o-2024-05-13";
  double temperature = 0.0;
  std::size_t max_input_tokens = 2048;
  std::size_t max_output_tokens = 256;

  void validate() const;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Must be safe to call from several threads at once.
  virtual std::string complete(const std::string& prompt, const GenerationParams& params) = 0;
  // Exact token count when the backend can provide one.
  virtual std::optional<std::size_t> count_tokens(std::string_view) const { return std::nullopt; }
};

// Refuses every dispatch. Replay runs use it to prove they never go to the network.
class FailOnDispatchBackend : public Backend {
 public:
  std::string complete(const std::string& prompt, const GenerationParams& params) override;
  std::size_t attempts() const { return attempts_; }

 private:
  std::atomic<std::size_t> attempts_{0};
};

class PromptTooLong : public ValidationError {
 public:
  PromptTooLong(std::size_t tokens, std::size_t limit)
      : ValidationError("prompt has ~" + std::to_string(tokens) + " tokens, limit " +
                        std::to_string(limit)),
        token_count(tokens) {}
  std::size_t token_count;
};

class ReplayMiss : public RuntimeFailure {
 public:
  explicit ReplayMiss(const std::string& key)
      : RuntimeFailure("replay cache has no response for key " + key) {}
};

std::string sha256_hex(std::string_view data);

// Content hash over everything that can change the model's answer.
std::string cache_key(std::string_view prompt, const GenerationParams& params);

// Append-only response store backed by a line-record file.
class ReplayCache {
 public:
  ReplayCache() = default;
  // Loads existing records; new entries are appended to the same file.
  explicit ReplayCache(std::filesystem::path file);

  std::optional<std::string> lookup(const std::string& key, const std::string& prompt_sha) const;
  void insert(const std::string& key, const std::string& prompt_sha, const std::string& response);
  std::size_t size() const;

 private:
  struct Entry {
    std::string prompt_sha;
    std::string response;
  };
  void check(const std::string& key, const std::string& prompt_sha, const Entry& e) const;

  std::optional<std::filesystem::path> file_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, Entry> entries_;
};

enum class JudgeMode { live, replay };

class Judge {
 public:
  Judge(Backend& backend, ReplayCache& cache, GenerationParams params, JudgeMode mode,
        RetryPolicy retry = {});

  // Cache first; replay mode never dispatches. Over-long prompts fail before
  // either, transport failures after the retry budget.
  std::string generate(const std::string& prompt);

  // Backend count when available, else ceil(1.3 * whitespace tokens).
  std::size_t estimate_tokens(std::string_view prompt) const;
  bool is_cached(const std::string& prompt) const;

  const GenerationParams& params() const { return params_; }
  std::size_t backend_calls() const { return backend_calls_; }

 private:
  Backend& backend_;
  ReplayCache& cache_;
  GenerationParams params_;
  JudgeMode mode_;
  RetryPolicy retry_;
  std::atomic<std::size_t> backend_calls_{0};
};

struct PromptJob {
  std::string query_id;
  std::string prompt;
};

struct BatchRecord {
  std::string query_id;
  ParsedPrediction prediction;
  std::optional<std::string> error;
};

// One record per job, in job order. A failing job yields an NA prediction
// with the error attached instead of aborting the batch.
std::vector<BatchRecord> run_batch(std::span<const PromptJob> jobs, Judge& judge,
                                   const RelationOntology& ontology, std::size_t parallelism);

}  // namespace hydre
