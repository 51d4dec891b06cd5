#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace stf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Tolerance for probability-vector and column-sum checks. Vectors that miss
// it are rejected; nothing is renormalized on behalf of the caller. For
// dimensions beyond ~10^3 the tolerance scales with the dimension to stay
// above floating-point summation noise.
inline constexpr double kProbabilitySumTol = 1e-12;

inline double probability_sum_tolerance(Eigen::Index n) {
  const double scaled = 2e-15 * static_cast<double>(n);
  return scaled > kProbabilitySumTol ? scaled : kProbabilitySumTol;
}

// Default ceiling on the number of enumerable cache states. Larger instances
// belong to the simulation regime.
inline constexpr std::uint64_t kDefaultMaxStates = 100000;

// Thrown when an iterative solver runs out of budget. Carries the last
// iterate so callers can inspect how far the iteration got.
class ConvergenceFailure : public std::runtime_error {
 public:
  ConvergenceFailure(const std::string& what, Vector last_iterate,
                     double residual)
      : std::runtime_error(what),
        last_iterate_(std::move(last_iterate)),
        residual_(residual) {}

  const Vector& last_iterate() const { return last_iterate_; }
  double residual() const { return residual_; }

 private:
  Vector last_iterate_;
  double residual_;
};

/// Content request probabilities: strictly positive entries summing to one.
class Popularity {
 public:
  explicit Popularity(Vector probs);

  const Vector& vec() const { return probs_; }
  double operator[](int l) const { return probs_[l]; }
  int size() const { return static_cast<int>(probs_.size()); }

 private:
  Vector probs_;
};

/// A state-caching-probability vector: a point of the probability simplex
/// over cache states.
class SimplexPoint {
 public:
  explicit SimplexPoint(Vector eta);

  const Vector& vec() const { return eta_; }
  double operator[](Eigen::Index k) const { return eta_[k]; }
  Eigen::Index size() const { return eta_.size(); }

 private:
  Vector eta_;
};

SimplexPoint uniform_simplex_point(Eigen::Index n);

/// Unit mass on state `k`.
SimplexPoint unit_simplex_point(Eigen::Index n, Eigen::Index k);

}  // namespace stf
