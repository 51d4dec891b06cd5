#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stf/schemes.hpp"
#include "stf/state_space.hpp"
#include "stf/types.hpp"

namespace stf {

enum class SteadyMethod {
  kPowerIteration,
  kRrClosedForm,
  kAbsorbingAnalytic,
};

std::string steady_method_name(SteadyMethod method);

struct SteadyStateResult {
  SimplexPoint eta_star;
  std::uint64_t iterations;
  double residual;  // max-norm of theta * eta_star - eta_star
  SteadyMethod method;
};

/// Repeated application of the transition matrix until the one-step change
/// drops below `tol` in max norm. Throws ConvergenceFailure (carrying the
/// last iterate) when `max_iter` is exhausted first.
SteadyStateResult steady_state_power(const Matrix& theta,
                                     const SimplexPoint& eta0,
                                     double tol = 1e-12,
                                     std::uint64_t max_iter = 10000000);

/// Direct solve of the random-replacement balance equations: one balance row
/// per state except the last, plus the normalization row. The result does
/// not depend on the replacement-activity parameter phi.
SteadyStateResult steady_state_rr_closed_form(const StateSpace& space,
                                              const Popularity& popularity);

/// Unit mass on the state with the largest predicted-popularity mass, the
/// absorbing state of the prediction-based schemes. Requires a unique
/// heaviest state.
SteadyStateResult steady_state_absorbing(const StateSpace& space,
                                         const Popularity& predicted);

/// Exact steady state by the scheme's preferred route: balance solve for
/// random replacement, the absorbing target for the prediction-based
/// schemes, power iteration from uniform otherwise.
SteadyStateResult scheme_steady_state(const Scheme& scheme,
                                      const StateSpace& space,
                                      const Popularity& popularity);

/// Per-state residual of the random-replacement balance equations at `eta`:
/// outflow term minus inflow term; identically zero exactly at the steady
/// state.
Vector verify_balance_rr(const StateSpace& space, const Popularity& popularity,
                         const SimplexPoint& eta);

/// Per-state residual of the least-recently-used balance equations, with
/// inflow weighted by the recency profile.
Vector verify_balance_lru(const StateSpace& space,
                          const Popularity& popularity,
                          const RecencyProfile& profile,
                          const SimplexPoint& eta);

struct SpectralReport {
  std::vector<double> eigenvalue_moduli;  // sorted descending
  double largest;
  double second_largest_modulus;
  // Closed-form second eigenvalue, available for the prediction-based
  // schemes, and whether the numeric value agrees with it to 1e-9.
  std::optional<double> second_largest_closed_form;
  std::optional<bool> closed_form_agrees;

  /// Geometric decay envelope d2^t * |eta0|.
  double bound_at(double t, double eta0_norm) const;
};

SpectralReport spectral_report(const Matrix& theta);

/// Adds the closed-form second eigenvalue when the scheme admits one (LP and
/// TLP); other schemes report numeric values only.
SpectralReport spectral_report(const Matrix& theta, const Scheme& scheme,
                               const StateSpace& space);

struct ConvergenceBoundResult {
  double bound;   // d2^t * |eta0|_2
  double actual;  // |theta^t eta0 - eta*|_2, eta* reached from eta0
};

ConvergenceBoundResult convergence_bound(const Matrix& theta,
                                         const SimplexPoint& eta0,
                                         std::uint64_t t);

}  // namespace stf
