#pragma once

#include <stdexcept>
#include <string>

namespace sbwc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs outside an operation's domain (non-finite values, bad ranges).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix sizes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite or runaway loss.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

/// An iterative solver hit its iteration cap; carries the best estimate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_estimate,
                   double residual)
      : Error(what), best_estimate_(best_estimate), residual_(residual) {}
  double best_estimate() const noexcept { return best_estimate_; }
  double residual() const noexcept { return residual_; }

 private:
  double best_estimate_;
  double residual_;
};

/// Malformed files or configuration.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace sbwc
