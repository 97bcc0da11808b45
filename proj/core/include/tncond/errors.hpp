#pragma once

#include <stdexcept>
#include <string>

namespace tncond {

/// Base of every error raised by the library. `kind()` is a stable,
/// machine-readable tag used by the CLI for its one-line diagnostics.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string &what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string &kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

#define TNCOND_DEFINE_ERROR(Name)                                              \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string &what) : Error(#Name, what) {}             \
  }

TNCOND_DEFINE_ERROR(DimensionError);
TNCOND_DEFINE_ERROR(LegNotFound);
TNCOND_DEFINE_ERROR(PartitionError);
TNCOND_DEFINE_ERROR(TooLargeToMaterialize);
TNCOND_DEFINE_ERROR(NetworkInvalid);
TNCOND_DEFINE_ERROR(VertexNotFound);
TNCOND_DEFINE_ERROR(DegenerateSite);
TNCOND_DEFINE_ERROR(ShapeError);
TNCOND_DEFINE_ERROR(NotCanonical);
TNCOND_DEFINE_ERROR(InvalidPerturbationBudget);
TNCOND_DEFINE_ERROR(InvalidArgument);
TNCOND_DEFINE_ERROR(IoError);

#undef TNCOND_DEFINE_ERROR

/// Iterative method gave up. Carries the best estimate reached so far.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string &what, double best_estimate)
      : Error("ConvergenceError", what), best_(best_estimate) {}
  double best_estimate() const noexcept { return best_; }

private:
  double best_;
};

} // namespace tncond
