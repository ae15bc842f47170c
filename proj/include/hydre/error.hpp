#pragma once

#include <stdexcept>
#include <string>

namespace hydre {

// Base for every error raised by the library. Callers that only care about
// "something in the inputs is wrong" vs "something at runtime failed" can
// catch ValidationError / RuntimeFailure respectively.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (corpus, ontology, provider files, config).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Failures that are not the input's fault: transport, cache corruption, replay misses.
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

// A remote endpoint could not be reached or answered with a failure status.
// Retried by with_retries().
class TransportError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

}  // namespace hydre
