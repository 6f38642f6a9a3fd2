#pragma once

#include <stdexcept>
#include <string>

namespace cytoseg {

enum class ErrorCode {
  unreadable_file,
  unsupported_format,
  unsupported_bit_depth,
  io_failure,
  dimension_mismatch,
  empty_roi,
  invalid_argument,
  degenerate_distribution,
  empty_class,
  stability_violation,
  empty_seed,
  placement_failed,
  config_error,
  layout_error,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::unreadable_file: return "unreadable file";
    case ErrorCode::unsupported_format: return "unsupported format";
    case ErrorCode::unsupported_bit_depth: return "unsupported bit depth";
    case ErrorCode::io_failure: return "i/o failure";
    case ErrorCode::dimension_mismatch: return "dimension mismatch";
    case ErrorCode::empty_roi: return "empty roi";
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::degenerate_distribution: return "degenerate distribution";
    case ErrorCode::empty_class: return "empty class";
    case ErrorCode::stability_violation: return "stability violation";
    case ErrorCode::empty_seed: return "empty seed";
    case ErrorCode::placement_failed: return "placement failed";
    case ErrorCode::config_error: return "config error";
    case ErrorCode::layout_error: return "layout error";
  }
  return "unknown error";
}

/// Library-wide exception. Every failure carries a code so callers
/// (notably the CLI) can map it to a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace detail
}  // namespace cytoseg
