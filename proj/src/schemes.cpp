#include "stf/schemes.hpp"

#include <algorithm>
#include <cmath>

namespace stf {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr int kMaxRecencyEnumSize = 8;

// Accumulates the probability of every recency ordering of `weights`,
// binned by the last (least recent) element. `prefix` is the probability of
// the choices made so far, `tail` the weight still unplaced.
void accumulate_orderings(const std::vector<double>& weights,
                          std::vector<char>& used, int remaining,
                          double prefix, double tail,
                          std::vector<double>& rho) {
  const int n = static_cast<int>(weights.size());
  if (remaining == 1) {
    for (int i = 0; i < n; ++i) {
      if (!used[i]) rho[i] += prefix;
    }
    return;
  }
  for (int i = 0; i < n; ++i) {
    if (used[i]) continue;
    used[i] = 1;
    accumulate_orderings(weights, used, remaining - 1,
                         prefix * weights[i] / tail, tail - weights[i], rho);
    used[i] = 0;
  }
}

Matrix identity_columns(std::size_t n) {
  return Matrix::Identity(static_cast<Eigen::Index>(n),
                          static_cast<Eigen::Index>(n));
}

Matrix rr_conditional(const StateSpace& space, double phi, int l) {
  const auto n = static_cast<Eigen::Index>(space.n_states());
  Matrix theta = Matrix::Zero(n, n);
  const double stay = 1.0 - space.cache_size() * phi;
  for (std::size_t k = 0; k < space.n_states(); ++k) {
    const auto kc = static_cast<Eigen::Index>(k);
    if (space.caches(k, l)) {
      theta(kc, kc) = 1.0;
      continue;
    }
    theta(kc, kc) = stay;
    for (std::size_t m : space.content_neighbors(k, l)) {
      theta(static_cast<Eigen::Index>(m), kc) = phi;
    }
  }
  return theta;
}

Matrix lp_conditional(const StateSpace& space, const LpScheme& lp, int l) {
  const auto n = static_cast<Eigen::Index>(space.n_states());
  const Vector& pred = lp.predicted.vec();
  Matrix theta = Matrix::Zero(n, n);
  std::vector<int> swapped;
  for (std::size_t k = 0; k < space.n_states(); ++k) {
    const auto kc = static_cast<Eigen::Index>(k);
    if (space.caches(k, l)) {
      theta(kc, kc) = 1.0;
      continue;
    }
    const auto& contents = space.state(k);
    double denom = 0.0;
    for (int q : contents) {
      if (pred[q] < pred[l]) denom += pred[l] - pred[q];
    }
    if (denom == 0.0) {
      theta(kc, kc) = 1.0;
      continue;
    }
    theta(kc, kc) = 1.0 - lp.alpha;
    for (std::size_t qi = 0; qi < contents.size(); ++qi) {
      const int q = contents[qi];
      if (!(pred[q] < pred[l])) continue;
      swapped = contents;
      swapped[qi] = l;
      const auto m = static_cast<Eigen::Index>(space.index_of(swapped));
      theta(m, kc) = lp.alpha * (pred[l] - pred[q]) / denom;
    }
  }
  return theta;
}

double tlp_replacement_probability(const TlpScheme& tlp, int l, int target) {
  if (tlp.variant == TlpVariant::kAlways) return 1.0;
  const double gap = tlp.predicted[l] - tlp.predicted[target];
  if (!(gap > 0.0 && gap < 1.0)) {
    throw std::logic_error("replacement probability out of (0,1): " +
                           std::to_string(gap));
  }
  return gap;
}

Matrix tlp_conditional(const StateSpace& space, const TlpScheme& tlp, int l) {
  const auto n = static_cast<Eigen::Index>(space.n_states());
  const Vector& pred = tlp.predicted.vec();
  Matrix theta = Matrix::Zero(n, n);
  std::vector<int> swapped;
  for (std::size_t k = 0; k < space.n_states(); ++k) {
    const auto kc = static_cast<Eigen::Index>(k);
    if (space.caches(k, l)) {
      theta(kc, kc) = 1.0;
      continue;
    }
    const int target = tlp_target(space, tlp.predicted, k);
    if (!(pred[l] > pred[target])) {
      theta(kc, kc) = 1.0;
      continue;
    }
    const double move = tlp_replacement_probability(tlp, l, target);
    const auto& contents = space.state(k);
    swapped = contents;
    for (std::size_t qi = 0; qi < contents.size(); ++qi) {
      if (contents[qi] == target) swapped[qi] = l;
    }
    const auto m = static_cast<Eigen::Index>(space.index_of(swapped));
    theta(m, kc) = move;
    theta(kc, kc) = 1.0 - move;
  }
  return theta;
}

Matrix lru_conditional(const StateSpace& space, const RecencyProfile& profile,
                       int l) {
  const auto n = static_cast<Eigen::Index>(space.n_states());
  Matrix theta = Matrix::Zero(n, n);
  std::vector<int> swapped;
  for (std::size_t k = 0; k < space.n_states(); ++k) {
    const auto kc = static_cast<Eigen::Index>(k);
    if (space.caches(k, l)) {
      theta(kc, kc) = 1.0;
      continue;
    }
    const auto& contents = space.state(k);
    for (std::size_t qi = 0; qi < contents.size(); ++qi) {
      swapped = contents;
      swapped[qi] = l;
      const auto m = static_cast<Eigen::Index>(space.index_of(swapped));
      theta(m, kc) = profile.rho(k, contents[qi]);
    }
  }
  return theta;
}

Matrix rr_overall(const StateSpace& space, double phi,
                  const Popularity& popularity) {
  const auto n = static_cast<Eigen::Index>(space.n_states());
  Matrix theta = Matrix::Zero(n, n);
  std::vector<int> swapped;
  for (std::size_t k = 0; k < space.n_states(); ++k) {
    const auto kc = static_cast<Eigen::Index>(k);
    const auto& contents = space.state(k);
    double missing = 1.0;
    for (int q : contents) missing -= popularity[q];
    theta(kc, kc) = 1.0 - space.cache_size() * phi * missing;
    for (std::size_t qi = 0; qi < contents.size(); ++qi) {
      for (int l = 0; l < space.n_contents(); ++l) {
        if (space.caches(k, l)) continue;
        swapped = contents;
        swapped[qi] = l;
        const auto m = static_cast<Eigen::Index>(space.index_of(swapped));
        theta(m, kc) = phi * popularity[l];
      }
    }
  }
  return theta;
}

Matrix lp_overall(const StateSpace& space, const LpScheme& lp,
                  const Popularity& popularity) {
  const auto n = static_cast<Eigen::Index>(space.n_states());
  const Vector& pred = lp.predicted.vec();
  Matrix theta = Matrix::Zero(n, n);
  std::vector<int> swapped;
  for (std::size_t k = 0; k < space.n_states(); ++k) {
    const auto kc = static_cast<Eigen::Index>(k);
    const auto& contents = space.state(k);
    double diag = 0.0;
    for (int q : contents) diag += popularity[q];
    for (int l = 0; l < space.n_contents(); ++l) {
      if (space.caches(k, l)) continue;
      double denom = 0.0;
      for (int q : contents) {
        if (pred[q] < pred[l]) denom += pred[l] - pred[q];
      }
      if (denom == 0.0) {
        diag += popularity[l];
        continue;
      }
      diag += popularity[l] * (1.0 - lp.alpha);
      for (std::size_t qi = 0; qi < contents.size(); ++qi) {
        const int q = contents[qi];
        if (!(pred[q] < pred[l])) continue;
        swapped = contents;
        swapped[qi] = l;
        const auto m = static_cast<Eigen::Index>(space.index_of(swapped));
        theta(m, kc) =
            lp.alpha * popularity[l] * (pred[l] - pred[q]) / denom;
      }
    }
    theta(kc, kc) = diag;
  }
  return theta;
}

Matrix tlp_overall(const StateSpace& space, const TlpScheme& tlp,
                   const Popularity& popularity) {
  const auto n = static_cast<Eigen::Index>(space.n_states());
  const Vector& pred = tlp.predicted.vec();
  Matrix theta = Matrix::Zero(n, n);
  std::vector<int> swapped;
  for (std::size_t k = 0; k < space.n_states(); ++k) {
    const auto kc = static_cast<Eigen::Index>(k);
    const auto& contents = space.state(k);
    const int target = tlp_target(space, tlp.predicted, k);
    double diag = 0.0;
    for (int q : contents) diag += popularity[q];
    for (int l = 0; l < space.n_contents(); ++l) {
      if (space.caches(k, l)) continue;
      if (!(pred[l] > pred[target])) {
        diag += popularity[l];
        continue;
      }
      const double move = tlp_replacement_probability(tlp, l, target);
      diag += popularity[l] * (1.0 - move);
      swapped = contents;
      for (std::size_t qi = 0; qi < contents.size(); ++qi) {
        if (contents[qi] == target) swapped[qi] = l;
      }
      const auto m = static_cast<Eigen::Index>(space.index_of(swapped));
      theta(m, kc) = popularity[l] * move;
    }
    theta(kc, kc) = diag;
  }
  return theta;
}

Matrix lru_overall(const StateSpace& space, const RecencyProfile& profile,
                   const Popularity& popularity) {
  const auto n = static_cast<Eigen::Index>(space.n_states());
  Matrix theta = Matrix::Zero(n, n);
  std::vector<int> swapped;
  for (std::size_t k = 0; k < space.n_states(); ++k) {
    const auto kc = static_cast<Eigen::Index>(k);
    const auto& contents = space.state(k);
    double diag = 0.0;
    for (int q : contents) diag += popularity[q];
    theta(kc, kc) = diag;
    for (std::size_t qi = 0; qi < contents.size(); ++qi) {
      const double rho = profile.rho(k, contents[qi]);
      for (int l = 0; l < space.n_contents(); ++l) {
        if (space.caches(k, l)) continue;
        swapped = contents;
        swapped[qi] = l;
        const auto m = static_cast<Eigen::Index>(space.index_of(swapped));
        theta(m, kc) = popularity[l] * rho;
      }
    }
  }
  return theta;
}

}  // namespace

std::string scheme_name(const Scheme& scheme) {
  return std::visit(
      Overloaded{[](const RrScheme&) { return std::string("rr"); },
                 [](const LpScheme&) { return std::string("lp"); },
                 [](const TlpScheme& t) {
                   return std::string(t.variant == TlpVariant::kAlways
                                          ? "tlp-a"
                                          : "tlp-p");
                 },
                 [](const LruScheme&) { return std::string("lru"); }},
      scheme);
}

void validate_scheme(const Scheme& scheme, int n_contents, int cache_size) {
  std::visit(
      Overloaded{
          [&](const RrScheme& rr) {
            const double limit = 1.0 / cache_size;
            if (!(rr.phi > 0.0) || rr.phi > limit + 1e-15) {
              throw std::invalid_argument(
                  "rr phi must lie in (0, 1/cache_size], got " +
                  std::to_string(rr.phi));
            }
          },
          [&](const LpScheme& lp) {
            if (!(lp.alpha > 0.0) || lp.alpha > 1.0) {
              throw std::invalid_argument("lp alpha must lie in (0, 1], got " +
                                          std::to_string(lp.alpha));
            }
            if (lp.predicted.size() != n_contents) {
              throw std::invalid_argument(
                  "predicted popularity has wrong length");
            }
          },
          [&](const TlpScheme& tlp) {
            if (tlp.predicted.size() != n_contents) {
              throw std::invalid_argument(
                  "predicted popularity has wrong length");
            }
          },
          [](const LruScheme&) {}},
      scheme);
}

RecencyProfile::RecencyProfile(std::vector<std::vector<int>> contents,
                               std::vector<std::vector<double>> rho)
    : contents_(std::move(contents)), rho_(std::move(rho)) {
  if (contents_.size() != rho_.size()) {
    throw std::invalid_argument("recency profile rows misaligned");
  }
}

double RecencyProfile::rho(std::size_t k, int content) const {
  if (k >= contents_.size()) {
    throw std::invalid_argument("state index out of range");
  }
  const auto& c = contents_[k];
  const auto it = std::lower_bound(c.begin(), c.end(), content);
  if (it == c.end() || *it != content) {
    throw std::invalid_argument("state " + std::to_string(k) +
                                " does not cache content " +
                                std::to_string(content));
  }
  return rho_[k][static_cast<std::size_t>(it - c.begin())];
}

RecencyProfile lru_recency_profile(const StateSpace& space,
                                   const Popularity& popularity) {
  if (popularity.size() != space.n_contents()) {
    throw std::invalid_argument("popularity has wrong length");
  }
  if (space.cache_size() > kMaxRecencyEnumSize) {
    throw std::invalid_argument(
        "recency profile enumerates cache_size! orderings and is limited to "
        "cache sizes up to " + std::to_string(kMaxRecencyEnumSize) +
        "; estimate the profile from simulated traces instead");
  }
  const int L = space.cache_size();
  std::vector<std::vector<int>> contents(space.n_states());
  std::vector<std::vector<double>> rho(space.n_states());
  std::vector<double> weights(L);
  std::vector<char> used(L);
  for (std::size_t k = 0; k < space.n_states(); ++k) {
    contents[k] = space.state(k);
    double total = 0.0;
    for (int i = 0; i < L; ++i) {
      weights[i] = popularity[contents[k][i]];
      total += weights[i];
    }
    rho[k].assign(L, 0.0);
    if (L == 1) {
      rho[k][0] = 1.0;
      continue;
    }
    std::fill(used.begin(), used.end(), 0);
    accumulate_orderings(weights, used, L, 1.0, total, rho[k]);
  }
  return RecencyProfile(std::move(contents), std::move(rho));
}

double lp_replacement_probability(const StateSpace& space,
                                  const Popularity& predicted, int l, int q,
                                  std::size_t k) {
  if (predicted.size() != space.n_contents()) {
    throw std::invalid_argument("predicted popularity has wrong length");
  }
  if (space.caches(k, l)) {
    throw std::invalid_argument("requested content is already cached");
  }
  if (!space.caches(k, q)) {
    throw std::invalid_argument("candidate victim is not cached");
  }
  if (!(predicted[q] < predicted[l])) {
    throw std::invalid_argument(
        "victim must have strictly lower predicted popularity");
  }
  double denom = 0.0;
  for (int t : space.state(k)) {
    if (predicted[t] < predicted[l]) denom += predicted[l] - predicted[t];
  }
  return (predicted[l] - predicted[q]) / denom;
}

int tlp_target(const StateSpace& space, const Popularity& predicted,
               std::size_t k) {
  if (predicted.size() != space.n_contents()) {
    throw std::invalid_argument("predicted popularity has wrong length");
  }
  const auto& contents = space.state(k);
  int best = contents.front();
  for (int q : contents) {
    if (predicted[q] < predicted[best]) best = q;
  }
  return best;
}

Matrix conditional_matrix(const Scheme& scheme, const StateSpace& space,
                          const Popularity& popularity, int l) {
  if (l < 0 || l >= space.n_contents()) {
    throw std::invalid_argument("content id out of range: " +
                                std::to_string(l));
  }
  if (popularity.size() != space.n_contents()) {
    throw std::invalid_argument("popularity has wrong length");
  }
  validate_scheme(scheme, space.n_contents(), space.cache_size());
  return std::visit(
      Overloaded{[&](const RrScheme& rr) {
                   return rr_conditional(space, rr.phi, l);
                 },
                 [&](const LpScheme& lp) { return lp_conditional(space, lp, l); },
                 [&](const TlpScheme& tlp) {
                   return tlp_conditional(space, tlp, l);
                 },
                 [&](const LruScheme&) {
                   return lru_conditional(
                       space, lru_recency_profile(space, popularity), l);
                 }},
      scheme);
}

Matrix overall_matrix(const Scheme& scheme, const StateSpace& space,
                      const Popularity& popularity) {
  if (popularity.size() != space.n_contents()) {
    throw std::invalid_argument("popularity has wrong length");
  }
  validate_scheme(scheme, space.n_contents(), space.cache_size());
  return std::visit(
      Overloaded{[&](const RrScheme& rr) {
                   return rr_overall(space, rr.phi, popularity);
                 },
                 [&](const LpScheme& lp) {
                   return lp_overall(space, lp, popularity);
                 },
                 [&](const TlpScheme& tlp) {
                   return tlp_overall(space, tlp, popularity);
                 },
                 [&](const LruScheme&) {
                   return lru_overall(
                       space, lru_recency_profile(space, popularity),
                       popularity);
                 }},
      scheme);
}

std::vector<Matrix> all_conditional_matrices(const Scheme& scheme,
                                             const StateSpace& space,
                                             const Popularity& popularity) {
  if (popularity.size() != space.n_contents()) {
    throw std::invalid_argument("popularity has wrong length");
  }
  validate_scheme(scheme, space.n_contents(), space.cache_size());
  std::vector<Matrix> result;
  result.reserve(space.n_contents());
  if (std::holds_alternative<LruScheme>(scheme)) {
    const RecencyProfile profile = lru_recency_profile(space, popularity);
    for (int l = 0; l < space.n_contents(); ++l) {
      result.push_back(lru_conditional(space, profile, l));
    }
    return result;
  }
  for (int l = 0; l < space.n_contents(); ++l) {
    result.push_back(conditional_matrix(scheme, space, popularity, l));
  }
  return result;
}

bool is_column_stochastic(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index k = 0; k < m.cols(); ++k) {
    double sum = 0.0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (m(r, k) < -tol || m(r, k) > 1.0 + tol) return false;
      sum += m(r, k);
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

}  // namespace stf
