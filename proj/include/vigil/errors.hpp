#pragma once

#include <stdexcept>
#include <string>

namespace vigil {

// All library errors derive from Error; the message carries a module tag
// like "[vigilance-core] ..." so the CLI can surface the failing component.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

class LookupError : public Error {
 public:
  explicit LookupError(const std::string& msg) : Error(msg) {}
};

// Observed utterance has zero probability under every hypothesis combination.
class DegenerateEvidenceError : public Error {
 public:
  explicit DegenerateEvidenceError(const std::string& msg) : Error(msg) {}
};

class FitDegenerateError : public Error {
 public:
  explicit FitDegenerateError(const std::string& msg) : Error(msg) {}
};

class GenerationError : public Error {
 public:
  explicit GenerationError(const std::string& msg) : Error(msg) {}
};

class IngestError : public Error {
 public:
  explicit IngestError(const std::string& msg) : Error(msg) {}
};

class UnavailableError : public Error {
 public:
  explicit UnavailableError(const std::string& msg) : Error(msg) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& msg) : Error(msg) {}
};

class CacheIntegrityError : public Error {
 public:
  explicit CacheIntegrityError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// A synthetic agent received a prompt it cannot classify. This is a test-bug
// signal and is never downgraded to a parse failure.
class AgentError : public Error {
 public:
  explicit AgentError(const std::string& msg) : Error(msg) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& msg) : Error(msg) {}
};

// A completion could not be turned into a score (no integer, out of range).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

}  // namespace vigil
