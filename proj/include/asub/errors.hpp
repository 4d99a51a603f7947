#pragma once

#include <stdexcept>
#include <string>

namespace asub {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SpaceMismatchError : public Error {
 public:
  SpaceMismatchError() : Error("fields belong to different function spaces") {}
};

class SingularRieszError : public Error {
 public:
  explicit SingularRieszError(long node)
      : Error("zero quadrature weight with nonzero dual coefficient at node " + std::to_string(node)),
        node_(node) {}
  long node() const { return node_; }

 private:
  long node_;
};

class EmptySubspaceError : public Error {
 public:
  EmptySubspaceError() : Error("basis spans the zero subspace") {}
};

class NotOrthonormalError : public Error {
 public:
  explicit NotOrthonormalError(const std::string& what) : Error(what) {}
};

class NonTraceClassError : public Error {
 public:
  explicit NonTraceClassError(double decay)
      : Error("covariance decay must exceed 1 for a trace-class measure, got " + std::to_string(decay)) {}
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Linear solver failed to reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(int iterations, double residual)
      : Error("conjugate gradient did not converge after " + std::to_string(iterations) +
              " iterations (relative residual " + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// A functional threw while being evaluated at one of the Monte Carlo inputs.
class SampleFailure : public Error {
 public:
  SampleFailure(long index, std::string dump_path, const std::string& cause)
      : Error("functional failed at sample " + std::to_string(index) + ": " + cause +
              (dump_path.empty() ? std::string() : " (input saved to " + dump_path + ")")),
        index_(index),
        dump_path_(std::move(dump_path)) {}
  long index() const { return index_; }
  const std::string& dump_path() const { return dump_path_; }

 private:
  long index_;
  std::string dump_path_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace asub
