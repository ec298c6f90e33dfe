#pragma once

#include <stdexcept>
#include <string>

namespace macs {

// Exit codes used by the command-line front end. Library code throws the
// matching exception type; the CLI maps them.
enum class ExitCode : int {
  ok = 0,
  failure = 1,
  config = 2,
  protocol = 3,
  io = 4,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual ExitCode exit_code() const noexcept { return ExitCode::failure; }
};

// A caller broke a documented precondition (dimension mismatch, value out of
// range after clamping, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::config; }
};

// Bad user data: empty sequences, letters outside the alphabet, wrong length.
class InputError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::protocol; }
};

// Transport failure talking to an external worker (timeout, dead process).
class BridgeError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class IoError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::io; }
};

}  // namespace macs
