#ifndef SLGEO_ERRORS_HPP
#define SLGEO_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace slgeo {

/// Failure categories raised by the library. Each maps to one documented
/// error condition of a public operation.
enum class ErrorKind {
  InvalidDimension,
  InvalidArgument,
  DegeneratePlane,
  InvalidAction,
  OutOfStencil,
  Divergence,
  HypothesisViolation,
  InvalidFamily,
  InvalidRegion,
  OutOfRange,
  NeedsLargerCutoff,
  NonKahlerIterate,
  PathFailure,
  InvalidVolume,
  DomainError,
  InvalidChi,
  FitFailure,
  FormatError,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidDimension: return "invalid-dimension";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::DegeneratePlane: return "degenerate-plane";
    case ErrorKind::InvalidAction: return "invalid-action";
    case ErrorKind::OutOfStencil: return "out-of-stencil";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::HypothesisViolation: return "hypothesis-violation";
    case ErrorKind::InvalidFamily: return "invalid-family";
    case ErrorKind::InvalidRegion: return "invalid-region";
    case ErrorKind::OutOfRange: return "out-of-range";
    case ErrorKind::NeedsLargerCutoff: return "needs-larger-cutoff";
    case ErrorKind::NonKahlerIterate: return "non-kahler-iterate";
    case ErrorKind::PathFailure: return "path-failure";
    case ErrorKind::InvalidVolume: return "invalid-volume";
    case ErrorKind::DomainError: return "domain-error";
    case ErrorKind::InvalidChi: return "invalid-chi";
    case ErrorKind::FitFailure: return "fit-failure";
    case ErrorKind::FormatError: return "format-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

/// Carries the last residual of a failed iterative solve.
class DivergenceError : public Error {
public:
  DivergenceError(const std::string& what, double last_residual)
      : Error(ErrorKind::Divergence, what), last_residual_(last_residual) {}
  [[nodiscard]] double last_residual() const noexcept { return last_residual_; }

private:
  double last_residual_;
};

/// Continuity-path failure; remembers the last parameter that was solved.
class PathFailureError : public Error {
public:
  PathFailureError(const std::string& what, double last_good_t)
      : Error(ErrorKind::PathFailure, what), last_good_t_(last_good_t) {}
  [[nodiscard]] double last_good_t() const noexcept { return last_good_t_; }

private:
  double last_good_t_;
};

#define SLGEO_THROW_IF(cond, kind, msg)            \
  do {                                             \
    if (cond) throw ::slgeo::Error((kind), (msg)); \
  } while (0)

}  // namespace slgeo

#endif  // SLGEO_ERRORS_HPP
