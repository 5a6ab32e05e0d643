#pragma once

#include <stdexcept>
#include <string>

namespace examkit {

// Error taxonomy shared by the library and the CLI. The CLI maps each
// category to a distinct process exit code.
enum class ErrorCode {
  InvalidArgument,      // bad inputs, dimension mismatches, violated preconditions
  Parse,                // malformed file or backend reply
  DataIntegrity,        // contradictory rows (e.g. one item with two exam kinds)
  EmptyDataset,         // ingestion produced nothing usable
  SamplerInit,          // could not find a finite starting point
  Backend,              // LLM backend transport failure
  GenerationFailure,    // generator kept producing unparseable questions
  JudgingFailure,       // judge kept producing unparseable verdicts
  LoopExhaustion,       // refine loop hit its iteration cap
  AssemblyFailure,      // could not fill a 10-question exam
  Io,                   // file read/write failure
  Internal,             // unexpected condition, a bug if ever seen
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw_error(code, what);
}

}  // namespace examkit
