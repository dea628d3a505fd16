#pragma once

#include <stdexcept>
#include <string>

namespace footprint {

// Broad failure classes; the CLI maps them onto exit codes.
enum class ErrorKind {
  parse,        // malformed input file
  validation,   // well-formed input violating a domain invariant
  referential,  // id that does not resolve
  parameter,    // caller supplied an out-of-range argument
  empty,        // degenerate (empty) result or input
  numeric,      // singular system, divergence, non-finite values
  io,           // filesystem failure
  prerequisite  // pipeline stage run before its inputs exist
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace footprint
