#include "stf/steady.hpp"

#include <algorithm>
#include <cmath>

namespace stf {

namespace {

SimplexPoint wrap_iterate(Vector eta) {
  // Transition products preserve nonnegativity exactly; only the sum picks
  // up rounding drift, which is divided out before validation.
  eta /= eta.sum();
  return SimplexPoint(std::move(eta));
}

double sorted_predicted_value(const Popularity& predicted, int rank) {
  std::vector<double> values(predicted.vec().data(),
                             predicted.vec().data() + predicted.size());
  std::sort(values.begin(), values.end());
  return values[rank];
}

}  // namespace

std::string steady_method_name(SteadyMethod method) {
  switch (method) {
    case SteadyMethod::kPowerIteration:
      return "power-iteration";
    case SteadyMethod::kRrClosedForm:
      return "rr-closed-form";
    case SteadyMethod::kAbsorbingAnalytic:
      return "absorbing-analytic";
  }
  throw std::logic_error("unknown steady-state method");
}

SteadyStateResult steady_state_power(const Matrix& theta,
                                     const SimplexPoint& eta0, double tol,
                                     std::uint64_t max_iter) {
  if (theta.rows() != theta.cols() || theta.cols() != eta0.size()) {
    throw std::invalid_argument("matrix and start point dimensions disagree");
  }
  if (!is_column_stochastic(theta,
                            probability_sum_tolerance(theta.rows()))) {
    throw std::invalid_argument("transition matrix is not column-stochastic");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");

  Vector eta = eta0.vec();
  Vector next = theta * eta;
  double residual = (next - eta).lpNorm<Eigen::Infinity>();
  std::uint64_t iterations = 0;
  while (residual > tol) {
    if (iterations == max_iter) {
      throw ConvergenceFailure(
          "power iteration did not reach tolerance " + std::to_string(tol) +
              " within " + std::to_string(max_iter) + " iterations",
          eta, residual);
    }
    eta.swap(next);
    ++iterations;
    next.noalias() = theta * eta;
    residual = (next - eta).lpNorm<Eigen::Infinity>();
  }
  return SteadyStateResult{wrap_iterate(eta), iterations, residual,
                           SteadyMethod::kPowerIteration};
}

SteadyStateResult steady_state_rr_closed_form(const StateSpace& space,
                                              const Popularity& popularity) {
  if (popularity.size() != space.n_contents()) {
    throw std::invalid_argument("popularity has wrong length");
  }
  const auto n = static_cast<Eigen::Index>(space.n_states());
  const int L = space.cache_size();
  Matrix a = Matrix::Zero(n, n);
  std::vector<int> swapped;
  for (std::size_t m = 0; m + 1 < space.n_states(); ++m) {
    const auto mr = static_cast<Eigen::Index>(m);
    const auto& contents = space.state(m);
    double missing = 1.0;
    for (int q : contents) missing -= popularity[q];
    a(mr, mr) = missing;
    for (std::size_t qi = 0; qi < contents.size(); ++qi) {
      for (int t = 0; t < space.n_contents(); ++t) {
        if (space.caches(m, t)) continue;
        swapped = contents;
        swapped[qi] = t;
        const auto k = static_cast<Eigen::Index>(space.index_of(swapped));
        a(mr, k) = -popularity[contents[qi]] / L;
      }
    }
  }
  a.row(n - 1).setOnes();
  Vector g = Vector::Zero(n);
  g[n - 1] = 1.0;

  Vector eta = a.colPivHouseholderQr().solve(g);
  const double solve_residual = (a * eta - g).lpNorm<Eigen::Infinity>();
  if (!eta.allFinite() || solve_residual > 1e-9) {
    throw std::runtime_error(
        "balance system solve failed (residual " +
        std::to_string(solve_residual) + "); this indicates a bug, the "
        "system is nonsingular for strictly positive popularity");
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    if (eta[k] < -kProbabilitySumTol) {
      throw std::runtime_error("balance solve produced a negative entry: " +
                               std::to_string(eta[k]));
    }
    eta[k] = std::max(eta[k], 0.0);
  }
  const SimplexPoint eta_star = wrap_iterate(std::move(eta));

  // Steady state is phi-independent; measure the fixed-point residual at
  // maximum replacement activity.
  const Matrix theta =
      overall_matrix(RrScheme{1.0 / L}, space, popularity);
  const double residual =
      (theta * eta_star.vec() - eta_star.vec()).lpNorm<Eigen::Infinity>();
  return SteadyStateResult{eta_star, 0, residual, SteadyMethod::kRrClosedForm};
}

SteadyStateResult steady_state_absorbing(const StateSpace& space,
                                         const Popularity& predicted) {
  const std::vector<std::size_t> order =
      sort_states_by_predicted_mass(space, predicted);
  const std::size_t top = order.back();
  const std::size_t runner_up = order[order.size() - 2];
  double top_mass = 0.0;
  double runner_mass = 0.0;
  for (int l : space.state(top)) top_mass += predicted[l];
  for (int l : space.state(runner_up)) runner_mass += predicted[l];
  if (!(top_mass > runner_mass)) {
    throw std::invalid_argument(
        "no unique heaviest state under the predicted popularity; the chain "
        "is not absorbing in a single state");
  }
  return SteadyStateResult{
      unit_simplex_point(static_cast<Eigen::Index>(space.n_states()),
                         static_cast<Eigen::Index>(top)),
      0, 0.0, SteadyMethod::kAbsorbingAnalytic};
}

SteadyStateResult scheme_steady_state(const Scheme& scheme,
                                      const StateSpace& space,
                                      const Popularity& popularity) {
  if (std::holds_alternative<RrScheme>(scheme)) {
    return steady_state_rr_closed_form(space, popularity);
  }
  if (const auto* lp = std::get_if<LpScheme>(&scheme)) {
    return steady_state_absorbing(space, lp->predicted);
  }
  if (const auto* tlp = std::get_if<TlpScheme>(&scheme)) {
    return steady_state_absorbing(space, tlp->predicted);
  }
  const Matrix theta = overall_matrix(scheme, space, popularity);
  return steady_state_power(
      theta, uniform_simplex_point(theta.rows()));
}

Vector verify_balance_rr(const StateSpace& space, const Popularity& popularity,
                         const SimplexPoint& eta) {
  if (static_cast<std::size_t>(eta.size()) != space.n_states()) {
    throw std::invalid_argument("state distribution has wrong length");
  }
  if (popularity.size() != space.n_contents()) {
    throw std::invalid_argument("popularity has wrong length");
  }
  const int L = space.cache_size();
  Vector residual(static_cast<Eigen::Index>(space.n_states()));
  std::vector<int> swapped;
  for (std::size_t m = 0; m < space.n_states(); ++m) {
    const auto& contents = space.state(m);
    double missing = 1.0;
    for (int q : contents) missing -= popularity[q];
    double inflow = 0.0;
    for (std::size_t qi = 0; qi < contents.size(); ++qi) {
      for (int t = 0; t < space.n_contents(); ++t) {
        if (space.caches(m, t)) continue;
        swapped = contents;
        swapped[qi] = t;
        const auto k = static_cast<Eigen::Index>(space.index_of(swapped));
        inflow += eta[k] * popularity[contents[qi]];
      }
    }
    residual[static_cast<Eigen::Index>(m)] =
        eta[static_cast<Eigen::Index>(m)] * missing - inflow / L;
  }
  return residual;
}

Vector verify_balance_lru(const StateSpace& space,
                          const Popularity& popularity,
                          const RecencyProfile& profile,
                          const SimplexPoint& eta) {
  if (static_cast<std::size_t>(eta.size()) != space.n_states()) {
    throw std::invalid_argument("state distribution has wrong length");
  }
  if (popularity.size() != space.n_contents()) {
    throw std::invalid_argument("popularity has wrong length");
  }
  Vector residual(static_cast<Eigen::Index>(space.n_states()));
  std::vector<int> swapped;
  for (std::size_t m = 0; m < space.n_states(); ++m) {
    const auto& contents = space.state(m);
    double missing = 1.0;
    for (int q : contents) missing -= popularity[q];
    double inflow = 0.0;
    for (std::size_t qi = 0; qi < contents.size(); ++qi) {
      for (int t = 0; t < space.n_contents(); ++t) {
        if (space.caches(m, t)) continue;
        swapped = contents;
        swapped[qi] = t;
        const std::size_t k = space.index_of(swapped);
        inflow += popularity[contents[qi]] * profile.rho(k, t) *
                  eta[static_cast<Eigen::Index>(k)];
      }
    }
    residual[static_cast<Eigen::Index>(m)] =
        eta[static_cast<Eigen::Index>(m)] * missing - inflow;
  }
  return residual;
}

double SpectralReport::bound_at(double t, double eta0_norm) const {
  return std::pow(second_largest_modulus, t) * eta0_norm;
}

SpectralReport spectral_report(const Matrix& theta) {
  if (theta.rows() != theta.cols()) {
    throw std::invalid_argument("transition matrix must be square");
  }
  if (theta.rows() < 2) {
    throw std::invalid_argument("need at least two states");
  }
  Eigen::EigenSolver<Matrix> solver(theta, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigenvalue computation failed");
  }
  std::vector<double> moduli(theta.rows());
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    moduli[static_cast<std::size_t>(i)] = std::abs(solver.eigenvalues()[i]);
  }
  std::sort(moduli.begin(), moduli.end(), std::greater<double>());
  SpectralReport report;
  report.largest = moduli[0];
  report.second_largest_modulus = moduli[1];
  report.eigenvalue_moduli = std::move(moduli);
  return report;
}

SpectralReport spectral_report(const Matrix& theta, const Scheme& scheme,
                               const StateSpace& space) {
  SpectralReport report = spectral_report(theta);
  const int gap_rank = space.n_contents() - space.cache_size();
  double closed = -1.0;
  if (const auto* lp = std::get_if<LpScheme>(&scheme)) {
    closed = 1.0 - lp->alpha * sorted_predicted_value(lp->predicted, gap_rank);
  } else if (const auto* tlp = std::get_if<TlpScheme>(&scheme)) {
    const double entering = sorted_predicted_value(tlp->predicted, gap_rank);
    const double move =
        tlp->variant == TlpVariant::kAlways
            ? 1.0
            : entering - sorted_predicted_value(tlp->predicted, gap_rank - 1);
    closed = 1.0 - entering * move;
  } else {
    return report;
  }
  report.second_largest_closed_form = closed;
  report.closed_form_agrees =
      std::abs(report.second_largest_modulus - closed) <= 1e-9;
  return report;
}

ConvergenceBoundResult convergence_bound(const Matrix& theta,
                                         const SimplexPoint& eta0,
                                         std::uint64_t t) {
  const SpectralReport spectrum = spectral_report(theta);
  const SteadyStateResult steady = steady_state_power(theta, eta0);
  Vector iterate = eta0.vec();
  for (std::uint64_t i = 0; i < t; ++i) iterate = theta * iterate;
  return ConvergenceBoundResult{
      spectrum.bound_at(static_cast<double>(t), eta0.vec().norm()),
      (iterate - steady.eta_star.vec()).norm()};
}

}  // namespace stf
