#pragma once

#include <stdexcept>
#include <string>

namespace spinpump {

// Raised by steady_state when the Liouvillian null space has dimension > 1,
// e.g. an undriven system whose ground manifold decouples.
class DegenerateSteadyState : public std::runtime_error {
 public:
  explicit DegenerateSteadyState(int null_dim)
      : std::runtime_error("no unique steady state: null space dimension " +
                           std::to_string(null_dim)),
        null_dim_(null_dim) {}
  int null_space_dimension() const noexcept { return null_dim_; }

 private:
  int null_dim_;
};

class NoConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotUnimodal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HalfMaxNotBracketed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridTooNarrow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ZeroRow : public std::runtime_error {
 public:
  explicit ZeroRow(int row)
      : std::runtime_error("row " + std::to_string(row) +
                           " has zero maximum, cannot normalize"),
        row_(row) {}
  int row() const noexcept { return row_; }

 private:
  int row_;
};

class InsufficientPoints : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ZeroField : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NegativeSlope : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spinpump
