#pragma once

#include <stdexcept>
#include <string>

namespace ctopt {

/// Malformed arguments: wrong dimensions, zero polynomials, empty inputs.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// A parameter lies outside the range where the operation is defined.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Numerical procedure failed to produce a result (non-convergence, budget exhausted).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// The state of an integration became non-finite.
class DivergenceError : public NumericalError {
 public:
  explicit DivergenceError(const std::string& what) : NumericalError(what) {}
};

/// A Nyquist contour passes through a pole of the transfer function.
class ContourSingularity : public NumericalError {
 public:
  explicit ContourSingularity(const std::string& what) : NumericalError(what) {}
};

/// A frequency-response curve passes (numerically) through the critical point.
class MarginalStability : public NumericalError {
 public:
  explicit MarginalStability(const std::string& what) : NumericalError(what) {}
};

/// The open loop violates the hypothesis of a frequency-domain test.
class PreconditionError : public DomainError {
 public:
  explicit PreconditionError(const std::string& what) : DomainError(what) {}
};

}  // namespace ctopt
