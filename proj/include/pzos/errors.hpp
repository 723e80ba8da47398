#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace pzos {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad dimension, non-positive
/// smoothing radius, non-unit direction, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An iterative solver failed to produce a certified answer.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Random instance generation could not satisfy its structural constraints.
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// A follower oracle query failed. Carries the query point.
class OracleError : public Error {
 public:
  OracleError(const std::string& what, Eigen::VectorXd query)
      : Error(what), query_(std::move(query)) {}

  const Eigen::VectorXd& query() const { return query_; }

 private:
  Eigen::VectorXd query_;
};

struct Trajectory;

/// An optimization run produced a non-finite or exploding iterate. The
/// trajectory recorded up to (and excluding) the failing step is attached.
class DivergedError : public Error {
 public:
  DivergedError(const std::string& what, std::shared_ptr<const Trajectory> prefix)
      : Error(what), prefix_(std::move(prefix)) {}

  const Trajectory& prefix() const { return *prefix_; }

 private:
  std::shared_ptr<const Trajectory> prefix_;
};

}  // namespace pzos
