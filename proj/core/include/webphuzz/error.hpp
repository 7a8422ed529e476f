#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace webphuzz {

// Base for every error the library throws. `kind()` names the failure the
// way operators and logs refer to it (EmptyConfig, ParseError, ...).
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("InvalidConfig", message) {}
};

class EmptyConfig : public Error {
 public:
  explicit EmptyConfig(const std::string& message) : Error("EmptyConfig", message) {}
};

class NoFuzzParams : public Error {
 public:
  explicit NoFuzzParams(const std::string& message) : Error("NoFuzzParams", message) {}
};

class EmptyPool : public Error {
 public:
  EmptyPool() : Error("EmptyPool", "candidate pool is empty") {}
};

class InvalidHeaderValue : public Error {
 public:
  explicit InvalidHeaderValue(const std::string& header)
      : Error("InvalidHeaderValue", "CR/LF in value of header '" + header + "'") {}
};

class TimeoutError : public Error {
 public:
  explicit TimeoutError(const std::string& message) : Error("Timeout", message) {}
};

class ConnectError : public Error {
 public:
  explicit ConnectError(const std::string& message) : Error("ConnectError", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("IoError", message) {}
};

// Malformed input. `offset` is the byte position where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error("ParseError", message + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class UnsupportedBody : public Error {
 public:
  explicit UnsupportedBody(const std::string& mime)
      : Error("UnsupportedBody", "unsupported request body type '" + mime + "'") {}
};

class EmptyCampaign : public Error {
 public:
  EmptyCampaign() : Error("EmptyCampaign", "no fuzzer configs given") {}
};

class LoginFailed : public Error {
 public:
  explicit LoginFailed(const std::string& message) : Error("LoginFailed", message) {}
};

}  // namespace webphuzz
