// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gsrobust {

/// Failure categories. The CLI maps each one onto a process exit code.
enum class ErrorKind {
  usage,        // bad command line
  io,           // file could not be read or written
  format,       // malformed header / unsupported layout
  data,         // well-formed file carrying invalid values
  range,        // value outside the domain of an inverse activation
  invariant,    // constructed value violates a type invariant
  contract,     // caller broke an operation precondition
  numeric,      // ill-conditioned input for a numerical routine
  convergence,  // iterative solver did not reach its tolerance
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::usage: return "usage error";
    case ErrorKind::io: return "I/O error";
    case ErrorKind::format: return "format error";
    case ErrorKind::data: return "data error";
    case ErrorKind::range: return "range error";
    case ErrorKind::invariant: return "invariant error";
    case ErrorKind::contract: return "contract error";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::convergence: return "convergence error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace gsrobust
