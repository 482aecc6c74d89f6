#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace adiaflow {

// Base class for everything this library throws on purpose.
class AdiaflowError : public std::runtime_error {
 public:
  explicit AdiaflowError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite value or loss of precision in a numerical kernel.
class NumericalError : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

// A self-consistency check (analytic vs finite-difference) failed.
// Carries the worst offending point and the measured deviation.
class CheckFailed : public AdiaflowError {
 public:
  CheckFailed(const std::string& what, Eigen::VectorXd worst_point, double worst_dev)
      : AdiaflowError(what), worst_point(std::move(worst_point)), worst_dev(worst_dev) {}
  Eigen::VectorXd worst_point;
  double worst_dev = 0.0;
};

// |grad H| fell below the configured floor, the surface frame is unusable.
class DegenerateGradient : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

class NotTangent : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

class NotOnSurface : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

class RetractFailed : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

class FrameDegenerate : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

class NoConvergence : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

class NotCritical : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

class CorrespondenceFailed : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

class NoConnection : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

class StiffnessFailure : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

class IllConditioned : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

class NotSurjective : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

class Diverged : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

class UniquenessViolated : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

class DomainExit : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

class InsufficientData : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

class ConfigError : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

// A harness suite assertion failed; the message names the suite and the check.
class SuiteFailure : public AdiaflowError {
 public:
  using AdiaflowError::AdiaflowError;
};

}  // namespace adiaflow
