#pragma once

#include <stdexcept>

namespace pcawald {

// A spectral gap (or resolvent) was requested from a single-cluster model.
class GapUndefinedError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The empirical covariance is too close to singular to be inverted.
class NotInvertibleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DimensionMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Experiment or model inconsistency detected before any work is done.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace pcawald
