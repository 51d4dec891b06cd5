#include "stf/types.hpp"

#include <cmath>
#include <sstream>

namespace stf {

Popularity::Popularity(Vector probs) : probs_(std::move(probs)) {
  if (probs_.size() < 1) {
    throw std::invalid_argument("popularity vector must be non-empty");
  }
  for (Eigen::Index i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i] > 0.0)) {
      throw std::invalid_argument(
          "popularity entries must be strictly positive (content " +
          std::to_string(i + 1) + " is " + std::to_string(probs_[i]) + ")");
    }
  }
  const double sum = probs_.sum();
  if (std::abs(sum - 1.0) > probability_sum_tolerance(probs_.size())) {
    std::ostringstream msg;
    msg << "popularity entries must sum to 1, got " << sum
        << "; renormalize explicitly if that is intended";
    throw std::invalid_argument(msg.str());
  }
}

SimplexPoint::SimplexPoint(Vector eta) : eta_(std::move(eta)) {
  if (eta_.size() < 1) {
    throw std::invalid_argument("simplex point must be non-empty");
  }
  const double tol = probability_sum_tolerance(eta_.size());
  for (Eigen::Index k = 0; k < eta_.size(); ++k) {
    if (eta_[k] < 0.0 || eta_[k] > 1.0 + tol) {
      throw std::invalid_argument("simplex point entry " + std::to_string(k) +
                                  " out of [0,1]: " + std::to_string(eta_[k]));
    }
  }
  const double sum = eta_.sum();
  if (std::abs(sum - 1.0) > tol) {
    std::ostringstream msg;
    msg << "simplex point entries must sum to 1, got " << sum;
    throw std::invalid_argument(msg.str());
  }
}

SimplexPoint uniform_simplex_point(Eigen::Index n) {
  return SimplexPoint(Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

SimplexPoint unit_simplex_point(Eigen::Index n, Eigen::Index k) {
  if (k < 0 || k >= n) {
    throw std::invalid_argument("unit simplex point index out of range");
  }
  Vector eta = Vector::Zero(n);
  eta[k] = 1.0;
  return SimplexPoint(std::move(eta));
}

}  // namespace stf
