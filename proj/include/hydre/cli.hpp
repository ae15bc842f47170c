#pragma once

#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "hydre/config.hpp"
#include "hydre/judge.hpp"

namespace hydre::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

struct Environment {
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
  // Builds the LLM backend for `run`. Defaults: HTTP in live mode, a
  // dispatch-refusing backend in replay mode.
  std::function<std::unique_ptr<Backend>(const RunConfig&)> make_backend;
};

// Parses "5", "1..20" or "1,5,10" into k values.
std::vector<std::size_t> parse_k_list(const std::string& spec);

// Entry point shared by the binary and the tests. Returns the process exit code.
int run(const std::vector<std::string>& args, const Environment& env = {});

}  // namespace hydre::cli
