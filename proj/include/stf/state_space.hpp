#pragma once

#include <cstdint>
#include <vector>

#include "stf/types.hpp"

namespace stf {

/// Enumerated space of cache states for a cache of fixed size over a finite
/// content catalogue.
///
/// A state is the set of cached contents (capacity is always used in full),
/// represented as a sorted vector of 0-based content ids. States are listed
/// in lexicographic order of their content sets unless the space has been
/// reordered; that canonical order is what all file exports refer to.
/// Two states are neighbors when their sets differ in exactly one element.
///
/// Instances are immutable after construction and safe to share across
/// threads.
class StateSpace {
 public:
  static StateSpace enumerate(int n_contents, int cache_size,
                              std::uint64_t max_states = exact_regime_cap());

  int n_contents() const { return n_contents_; }
  int cache_size() const { return cache_size_; }
  std::size_t n_states() const { return states_.size(); }

  /// Contents of state `k`, sorted ascending.
  const std::vector<int>& state(std::size_t k) const;

  bool caches(std::size_t k, int content) const;

  /// Index of the state with exactly these contents (any input order).
  std::size_t index_of(std::vector<int> contents) const;

  /// All states differing from `k` in exactly one content, ascending index.
  std::vector<std::size_t> neighbors(std::size_t k) const;

  /// Neighbors of `k` that cache `content`; requires `content` not cached
  /// by `k`. Always `cache_size` states.
  std::vector<std::size_t> content_neighbors(std::size_t k, int content) const;

  /// The single content cached by `k` but not by neighbor `m`.
  int swapped_content(std::size_t k, std::size_t m) const;

  /// 0/1 indicator column of state `k` over contents.
  Vector cache_state_vector(std::size_t k) const;

  /// n_contents x n_states 0/1 matrix; column k indicates the contents of
  /// state k.
  Matrix cache_state_matrix() const;

  /// Same space with states listed in a new order; `perm[i]` is the current
  /// index of the state placed at position `i`.
  StateSpace reordered(const std::vector<std::size_t>& perm) const;

  /// Ceiling on enumerable states: the STF_CACHE_MAX_STATES environment
  /// variable when set, otherwise kDefaultMaxStates.
  static std::uint64_t exact_regime_cap();

 private:
  StateSpace() = default;

  std::uint64_t lex_rank(const std::vector<int>& contents) const;

  int n_contents_ = 0;
  int cache_size_ = 0;
  std::vector<std::vector<int>> states_;
  std::vector<std::size_t> index_by_lex_rank_;
  // binom_[a][b] = C(a, b) for a <= n_contents, b <= cache_size, saturated;
  // every value actually consulted by lex_rank is <= n_states.
  std::vector<std::vector<std::uint64_t>> binom_;
};

/// Content caching probabilities induced by a state distribution:
/// lambda_l = sum of eta_k over states caching l. Entries lie in [0,1] and
/// sum to the cache size.
Vector scp_to_ccp(const StateSpace& space, const SimplexPoint& eta);

/// Probability that the next request hits the cache: dot(popularity, ccp).
double hit_probability(const Popularity& popularity, const Vector& ccp);

/// Permutation placing states in non-decreasing order of total predicted
/// popularity mass; ties break lexicographically on the content sets. Feed
/// the result to StateSpace::reordered.
std::vector<std::size_t> sort_states_by_predicted_mass(
    const StateSpace& space, const Popularity& predicted);

}  // namespace stf
