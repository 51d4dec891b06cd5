#include "stf/field.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "stf/steady.hpp"

namespace stf {

namespace {

void check_point(const StateSpace& space, const SimplexPoint& eta) {
  if (static_cast<std::size_t>(eta.size()) != space.n_states()) {
    throw std::invalid_argument("state distribution has wrong length");
  }
}

}  // namespace

Vector field_at(const Matrix& theta, const SimplexPoint& eta) {
  if (theta.rows() != theta.cols() || theta.cols() != eta.size()) {
    throw std::invalid_argument("matrix and point dimensions disagree");
  }
  return theta * eta.vec() - eta.vec();
}

Vector content_field_at(const Matrix& theta_l, const SimplexPoint& eta) {
  return field_at(theta_l, eta);
}

Vector rr_content_field(const StateSpace& space, double phi, int l,
                        const SimplexPoint& eta) {
  check_point(space, eta);
  validate_scheme(RrScheme{phi}, space.n_contents(), space.cache_size());
  const auto n = static_cast<Eigen::Index>(space.n_states());
  Vector u(n);
  std::vector<int> swapped;
  for (std::size_t m = 0; m < space.n_states(); ++m) {
    const auto mc = static_cast<Eigen::Index>(m);
    if (!space.caches(m, l)) {
      u[mc] = -space.cache_size() * phi * eta[mc];
      continue;
    }
    // Inflow comes from the states that swap l for some uncached content.
    const auto& contents = space.state(m);
    double inflow = 0.0;
    for (std::size_t li = 0; li < contents.size(); ++li) {
      if (contents[li] != l) continue;
      for (int t = 0; t < space.n_contents(); ++t) {
        if (space.caches(m, t)) continue;
        swapped = contents;
        swapped[li] = t;
        inflow += eta[static_cast<Eigen::Index>(space.index_of(swapped))];
      }
    }
    u[mc] = phi * inflow;
  }
  return u;
}

Vector lru_content_field(const StateSpace& space, const RecencyProfile& profile,
                         int l, const SimplexPoint& eta) {
  check_point(space, eta);
  const auto n = static_cast<Eigen::Index>(space.n_states());
  Vector u(n);
  std::vector<int> swapped;
  for (std::size_t m = 0; m < space.n_states(); ++m) {
    const auto mc = static_cast<Eigen::Index>(m);
    if (!space.caches(m, l)) {
      u[mc] = -eta[mc];
      continue;
    }
    const auto& contents = space.state(m);
    double inflow = 0.0;
    for (std::size_t li = 0; li < contents.size(); ++li) {
      if (contents[li] != l) continue;
      for (int t = 0; t < space.n_contents(); ++t) {
        if (space.caches(m, t)) continue;
        swapped = contents;
        swapped[li] = t;
        const std::size_t k = space.index_of(swapped);
        inflow += profile.rho(k, t) * eta[static_cast<Eigen::Index>(k)];
      }
    }
    u[mc] = inflow;
  }
  return u;
}

std::vector<SimplexPoint> sample_domain(std::size_t n_states,
                                        std::size_t count,
                                        std::uint64_t seed) {
  if (n_states < 1) throw std::invalid_argument("need at least one state");
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> exp1(1.0);
  std::vector<SimplexPoint> points;
  points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vector x(static_cast<Eigen::Index>(n_states));
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = exp1(rng);
    x /= x.sum();
    Eigen::Index argmax = 0;
    x.maxCoeff(&argmax);
    x[argmax] += 1.0 - x.sum();  // absorb rounding drift
    points.emplace_back(std::move(x));
  }
  return points;
}

std::vector<SimplexPoint> barycentric_grid(double step) {
  if (!(step > 0.0) || step > 1.0) {
    throw std::invalid_argument("grid step must lie in (0, 1]");
  }
  const double divisions = 1.0 / step;
  const auto n = static_cast<long>(std::llround(divisions));
  if (std::abs(divisions - static_cast<double>(n)) > 1e-9) {
    throw std::invalid_argument("grid step must divide 1");
  }
  std::vector<SimplexPoint> points;
  points.reserve(static_cast<std::size_t>((n + 1) * (n + 2) / 2));
  for (long i = 0; i <= n; ++i) {
    for (long j = 0; j <= n - i; ++j) {
      const long k = n - i - j;
      Vector eta(3);
      eta << static_cast<double>(i) / n, static_cast<double>(j) / n,
          static_cast<double>(k) / n;
      Eigen::Index argmax = 0;
      eta.maxCoeff(&argmax);
      eta[argmax] += 1.0 - eta.sum();
      points.emplace_back(std::move(eta));
    }
  }
  return points;
}

std::vector<FieldSample> field_snapshot(const Scheme& scheme,
                                        const StateSpace& space,
                                        const Popularity& popularity,
                                        const std::vector<SimplexPoint>& points,
                                        bool decompose) {
  const Matrix theta = overall_matrix(scheme, space, popularity);
  std::vector<Matrix> conditionals;
  if (decompose) {
    conditionals = all_conditional_matrices(scheme, space, popularity);
  }
  std::vector<FieldSample> samples;
  samples.reserve(points.size());
  for (const SimplexPoint& point : points) {
    FieldSample sample{point, field_at(theta, point), std::nullopt};
    if (decompose) {
      std::vector<Vector> parts;
      parts.reserve(conditionals.size());
      for (const Matrix& theta_l : conditionals) {
        parts.push_back(field_at(theta_l, point));
      }
      sample.decomposition = std::move(parts);
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

double replacement_activity_metric(const Scheme& scheme,
                                   const StateSpace& space,
                                   const Popularity& popularity,
                                   const SimplexPoint& eta_star) {
  check_point(space, eta_star);
  const std::vector<Matrix> conditionals =
      all_conditional_matrices(scheme, space, popularity);
  double metric = 0.0;
  for (int l = 0; l < space.n_contents(); ++l) {
    metric += popularity[l] * field_at(conditionals[l], eta_star).norm();
  }
  return metric;
}

ConvergenceReport convergence_projection_metric(
    const Scheme& scheme, const StateSpace& space, const Popularity& popularity,
    const SimplexPoint& eta_star, const std::vector<SimplexPoint>& points) {
  check_point(space, eta_star);
  const Matrix theta = overall_matrix(scheme, space, popularity);
  const SpectralReport spectrum = spectral_report(theta);

  double sum = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  for (const SimplexPoint& point : points) {
    const Vector direction = eta_star.vec() - point.vec();
    const double distance = direction.norm();
    if (distance < 1e-14) continue;
    const double projection =
        field_at(theta, point).dot(direction) / distance;
    sum += projection;
    min = std::min(min, projection);
    max = std::max(max, projection);
    ++used;
  }
  if (used == 0) {
    throw std::invalid_argument(
        "no sample points distinct from the steady state");
  }
  return ConvergenceReport{spectrum.second_largest_modulus, sum / used, min,
                           max, used};
}

}  // namespace stf
