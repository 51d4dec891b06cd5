#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "stf/schemes.hpp"
#include "stf/state_space.hpp"
#include "stf/types.hpp"

namespace stf {

/// Expected one-step change of the state distribution at `eta`:
/// theta * eta - eta. Components sum to zero.
Vector field_at(const Matrix& theta, const SimplexPoint& eta);

/// Same drift conditioned on a single content being requested.
Vector content_field_at(const Matrix& theta_l, const SimplexPoint& eta);

/// Closed form of the conditional drift under random replacement, bypassing
/// the matrix: phi * (inflow from states one swap away) on states caching
/// `l`, -cache_size * phi * eta elsewhere.
Vector rr_content_field(const StateSpace& space, double phi, int l,
                        const SimplexPoint& eta);

/// Closed form of the conditional drift under least-recently-used
/// replacement, weighting inflow by the recency profile.
Vector lru_content_field(const StateSpace& space, const RecencyProfile& profile,
                         int l, const SimplexPoint& eta);

/// `count` points drawn uniformly from the probability simplex (flat
/// Dirichlet via normalized exponentials). Deterministic for a given seed.
std::vector<SimplexPoint> sample_domain(std::size_t n_states,
                                        std::size_t count, std::uint64_t seed);

/// Regular barycentric grid over the 3-state simplex; `step` must divide 1.
std::vector<SimplexPoint> barycentric_grid(double step);

struct FieldSample {
  SimplexPoint point;
  Vector field;
  // Conditional drift per content, present when a decomposition was
  // requested; popularity-weighted sum of the entries equals `field`.
  std::optional<std::vector<Vector>> decomposition;
};

std::vector<FieldSample> field_snapshot(const Scheme& scheme,
                                        const StateSpace& space,
                                        const Popularity& popularity,
                                        const std::vector<SimplexPoint>& points,
                                        bool decompose);

/// Popularity-weighted sum of the Euclidean norms of the conditional drifts
/// at a steady state; zero only when no request can move the state.
double replacement_activity_metric(const Scheme& scheme,
                                   const StateSpace& space,
                                   const Popularity& popularity,
                                   const SimplexPoint& eta_star);

struct ConvergenceReport {
  double second_eigenvalue_modulus;
  double projection_mean;  // mean over points of <u(eta), unit(eta* - eta)>
  double projection_min;
  double projection_max;
  std::size_t samples_used;
};

/// Average alignment of the drift with the direction toward the steady
/// state; sample points coinciding with the steady state are skipped.
ConvergenceReport convergence_projection_metric(
    const Scheme& scheme, const StateSpace& space, const Popularity& popularity,
    const SimplexPoint& eta_star, const std::vector<SimplexPoint>& points);

}  // namespace stf
