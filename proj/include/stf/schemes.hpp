#pragma once

#include <string>
#include <variant>
#include <vector>

#include "stf/state_space.hpp"
#include "stf/types.hpp"

namespace stf {

/// Random replacement: on a miss, evict a uniformly chosen cached content
/// with probability cache_size * phi. Requires phi in (0, 1/cache_size].
struct RrScheme {
  double phi;
};

/// Popularity-prediction replacement: a missed content may replace any
/// cached content with strictly lower predicted popularity; the whole
/// replacement fires with probability alpha, and the victim is picked with
/// probability proportional to the popularity deficit.
struct LpScheme {
  double alpha;
  Popularity predicted;
};

enum class TlpVariant {
  kAlways,         // replace with probability 1
  kProbabilistic,  // replace with probability equal to the popularity gap
};

/// Targeted popularity-prediction replacement: only the cached content with
/// the lowest predicted popularity is ever evicted.
struct TlpScheme {
  TlpVariant variant;
  Popularity predicted;
};

/// Least-recently-used replacement.
struct LruScheme {};

using Scheme = std::variant<RrScheme, LpScheme, TlpScheme, LruScheme>;

/// "rr", "lp", "tlp-a", "tlp-p" or "lru".
std::string scheme_name(const Scheme& scheme);

/// Checks scheme parameters against a concrete cache size and catalogue.
void validate_scheme(const Scheme& scheme, int n_contents, int cache_size);

/// Distribution of the least-recently-used content in each state under
/// independent requests: rho(k, q) is the probability that q is the eviction
/// candidate given the cache is in state k. Rows sum to one and depend only
/// on popularity ratios within each state.
class RecencyProfile {
 public:
  RecencyProfile(std::vector<std::vector<int>> contents,
                 std::vector<std::vector<double>> rho);

  double rho(std::size_t k, int content) const;
  const std::vector<double>& row(std::size_t k) const { return rho_[k]; }
  std::size_t n_states() const { return rho_.size(); }

 private:
  std::vector<std::vector<int>> contents_;  // per state, sorted ascending
  std::vector<std::vector<double>> rho_;    // aligned with contents_
};

/// Exact recency profile by enumerating the cache_size! recency orderings of
/// each state, weighting an ordering by sequential size-biased sampling.
/// Refuses cache sizes above 8; estimate empirically from traces instead.
RecencyProfile lru_recency_profile(const StateSpace& space,
                                   const Popularity& popularity);

/// Probability that missed content `l` replaces cached content `q` in state
/// `k`, proportional to the predicted-popularity deficit over all cached
/// contents predicted less popular than `l`. Requires that `q` qualifies.
double lp_replacement_probability(const StateSpace& space,
                                  const Popularity& predicted, int l, int q,
                                  std::size_t k);

/// The eviction candidate in state `k`: the cached content with the lowest
/// predicted popularity, ties resolved toward the smallest content id.
int tlp_target(const StateSpace& space, const Popularity& predicted,
               std::size_t k);

/// Column-stochastic one-step transition matrix conditioned on content `l`
/// being requested; column k is the distribution of the next state from
/// state k.
Matrix conditional_matrix(const Scheme& scheme, const StateSpace& space,
                          const Popularity& popularity, int l);

/// Overall one-step transition matrix: the popularity-weighted sum of the
/// conditional matrices, built directly from the per-scheme closed forms.
Matrix overall_matrix(const Scheme& scheme, const StateSpace& space,
                      const Popularity& popularity);

/// All conditional matrices, indexed by content. Shares per-scheme
/// precomputation (notably the LRU recency profile) across contents.
std::vector<Matrix> all_conditional_matrices(const Scheme& scheme,
                                             const StateSpace& space,
                                             const Popularity& popularity);

bool is_column_stochastic(const Matrix& m, double tol = kProbabilitySumTol);

}  // namespace stf
