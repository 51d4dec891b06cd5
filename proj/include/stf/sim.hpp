#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "stf/schemes.hpp"
#include "stf/state_space.hpp"
#include "stf/types.hpp"

namespace stf {

// Popularity with mass proportional to rank^(-exponent), rank 1 = content 0.
Popularity zipf_popularity(int n_contents, double exponent);

// Stable stream splitting: mixes (seed, stream) into an independent seed so
// parallel work units get decorrelated generators while staying reproducible
// for any thread count.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Categorical sampling by cumulative-sum inversion over nonnegative weights.
class RequestSampler {
 public:
  explicit RequestSampler(const Vector& weights);

  int operator()(std::mt19937_64& rng) const;

 private:
  std::vector<double> cumulative_;
};

// A concrete cache configuration: the cached set plus a recency order
// (most recent first). The set is kept sorted; the recency order is what
// LRU eviction consults.
class CacheInstance {
 public:
  CacheInstance(int n_contents, int capacity);
  // Warm start: `recency_order` lists cached contents most recent first.
  CacheInstance(int n_contents, int capacity, std::vector<int> recency_order);

  int n_contents() const { return n_contents_; }
  int capacity() const { return capacity_; }
  bool full() const { return static_cast<int>(contents_.size()) == capacity_; }
  bool contains(int content) const;
  const std::vector<int>& contents() const { return contents_; }  // sorted
  const std::vector<int>& recency() const { return recency_; }
  int least_recent() const;

  void touch(int content);
  void insert(int content);
  void replace(int victim, int content);

 private:
  int n_contents_;
  int capacity_;
  std::vector<int> contents_;
  std::vector<char> cached_;
  std::vector<int> recency_;
};

// Draws a recency order (most recent first) for `contents` under IRM: the
// most recent is content q with probability proportional to popularity[q],
// recursively over the remainder.
std::vector<int> draw_recency_order(const std::vector<int>& contents,
                                    const Popularity& popularity,
                                    std::mt19937_64& rng);

// Serves one request. Returns true on a hit. On a miss with a full cache,
// applies the scheme's replacement rule; on a miss with spare capacity the
// content fills an empty slot (warm-up, no eviction).
bool step(const Scheme& scheme, CacheInstance& cache, int content,
          std::mt19937_64& rng);

struct TraceRecord {
  std::uint64_t request_index;  // 0-based position in the trace
  int content;
  bool hit;
  // Index of the cache state after the replacement point, or -1 when the
  // cache is not yet full or no state space was supplied.
  std::int64_t state_index;
};

struct Trajectory {
  std::vector<TraceRecord> records;
};

// Runs `n_requests` IRM requests against one cache instance. `initial`
// lists the starting contents most recent first (may be empty or partial).
// Pass a state space to record state indices; it must match cache_size.
Trajectory run_trace(const Scheme& scheme, const Popularity& popularity,
                     int cache_size, const std::vector<int>& initial,
                     std::uint64_t n_requests, std::uint64_t seed,
                     const StateSpace* space = nullptr);

// Estimates the overall transition matrix column by column: for each state,
// `samples_per_state` independent one-step transitions (content drawn from
// the popularity, LRU recency drawn per sample). Entries are frequencies.
Matrix empirical_theta(const Scheme& scheme, const Popularity& popularity,
                       const StateSpace& space,
                       std::uint64_t samples_per_state, std::uint64_t seed,
                       int threads = 1);

enum class StfEstimatorMode {
  // Reset sampling: draw start states from eta, measure single steps.
  kCategorical,
  // Trace sampling: estimate the transition matrix from free-running
  // traces, then apply it to eta. Covers schemes whose configuration
  // cannot be reset from the state alone without a modeling choice.
  kTrace,
};

// Estimates the field at eta from M realizations of R request events each.
Vector empirical_stf(const Scheme& scheme, const Popularity& popularity,
                     const StateSpace& space, const SimplexPoint& eta,
                     std::uint64_t m_realizations, std::uint64_t r_requests,
                     std::uint64_t seed, StfEstimatorMode mode);

struct CcpEstimate {
  std::vector<int> tracked;  // content ids, 0-based
  // rounds-averaged caching probability; (request, tracked content)
  Matrix ccp;
  std::uint64_t rounds;
};

// Repeats the empty-cache experiment `n_rounds` times and averages, per
// request index, the indicator that each tracked content is cached.
CcpEstimate ccp_trajectory(const Scheme& scheme, const Popularity& popularity,
                           int cache_size, std::uint64_t n_rounds,
                           std::uint64_t n_requests,
                           const std::vector<int>& tracked, std::uint64_t seed,
                           int threads = 1);

}  // namespace stf
