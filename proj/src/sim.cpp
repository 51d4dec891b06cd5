#include "stf/sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

namespace stf {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::size_t chunk_count(std::size_t n, int threads) {
  if (threads < 1) {
    throw std::invalid_argument("thread count must be at least 1");
  }
  return std::max<std::size_t>(1,
                               std::min(static_cast<std::size_t>(threads), n));
}

// Splits [0, n) into at most `threads` contiguous chunks and runs
// fn(chunk, begin, end) on each, one thread per chunk. fn must confine
// writes to chunk-private or disjoint slots.
template <class Fn>
void parallel_chunks(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = chunk_count(n, threads);
  if (workers <= 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  const std::size_t base = n / workers;
  const std::size_t extra = n % workers;
  std::size_t begin = 0;
  for (std::size_t c = 0; c < workers; ++c) {
    const std::size_t end = begin + base + (c < extra ? 1 : 0);
    pool.emplace_back([&fn, &errors, c, begin, end] {
      try {
        fn(c, begin, end);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& worker : pool) worker.join();
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

std::uint64_t splitmix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double unit_draw(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

Popularity zipf_popularity(int n_contents, double exponent) {
  if (n_contents < 1) {
    throw std::invalid_argument("need at least one content");
  }
  if (!(exponent >= 0.0)) {
    throw std::invalid_argument("zipf exponent must be nonnegative");
  }
  Vector probs(n_contents);
  for (int rank = 0; rank < n_contents; ++rank) {
    probs[rank] = std::pow(static_cast<double>(rank + 1), -exponent);
  }
  probs /= probs.sum();
  return Popularity(std::move(probs));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix(seed + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

RequestSampler::RequestSampler(const Vector& weights) {
  if (weights.size() < 1) {
    throw std::invalid_argument("sampler needs at least one weight");
  }
  cumulative_.resize(static_cast<std::size_t>(weights.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw std::invalid_argument("sampler weights must be nonnegative");
    }
    acc += weights[i];
    cumulative_[static_cast<std::size_t>(i)] = acc;
  }
  if (!(acc > 0.0)) {
    throw std::invalid_argument("sampler weights must not all be zero");
  }
}

int RequestSampler::operator()(std::mt19937_64& rng) const {
  const double u = unit_draw(rng) * cumulative_.back();
  const auto it =
      std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) {
    return static_cast<int>(cumulative_.size()) - 1;
  }
  return static_cast<int>(it - cumulative_.begin());
}

CacheInstance::CacheInstance(int n_contents, int capacity)
    : n_contents_(n_contents),
      capacity_(capacity),
      cached_(static_cast<std::size_t>(std::max(n_contents, 0)), 0) {
  if (n_contents < 1) {
    throw std::invalid_argument("need at least one content");
  }
  if (capacity < 1 || capacity > n_contents) {
    throw std::invalid_argument("cache capacity out of range");
  }
  contents_.reserve(static_cast<std::size_t>(capacity));
  recency_.reserve(static_cast<std::size_t>(capacity));
}

CacheInstance::CacheInstance(int n_contents, int capacity,
                             std::vector<int> recency_order)
    : CacheInstance(n_contents, capacity) {
  if (recency_order.size() > static_cast<std::size_t>(capacity)) {
    throw std::invalid_argument("initial contents exceed cache capacity");
  }
  for (int c : recency_order) {
    if (c < 0 || c >= n_contents_) {
      throw std::invalid_argument("initial content id out of range: " +
                                  std::to_string(c));
    }
    if (cached_[static_cast<std::size_t>(c)]) {
      throw std::invalid_argument("duplicate initial content: " +
                                  std::to_string(c));
    }
    cached_[static_cast<std::size_t>(c)] = 1;
  }
  recency_ = std::move(recency_order);
  contents_ = recency_;
  std::sort(contents_.begin(), contents_.end());
}

bool CacheInstance::contains(int content) const {
  if (content < 0 || content >= n_contents_) {
    throw std::invalid_argument("content id out of range: " +
                                std::to_string(content));
  }
  return cached_[static_cast<std::size_t>(content)] != 0;
}

int CacheInstance::least_recent() const {
  if (recency_.empty()) throw std::logic_error("cache is empty");
  return recency_.back();
}

void CacheInstance::touch(int content) {
  const auto it = std::find(recency_.begin(), recency_.end(), content);
  if (it == recency_.end()) {
    throw std::invalid_argument("touched content is not cached: " +
                                std::to_string(content));
  }
  std::rotate(recency_.begin(), it, it + 1);
}

void CacheInstance::insert(int content) {
  if (full()) throw std::logic_error("cache is full; use replace");
  if (contains(content)) {
    throw std::invalid_argument("content already cached: " +
                                std::to_string(content));
  }
  cached_[static_cast<std::size_t>(content)] = 1;
  contents_.insert(
      std::lower_bound(contents_.begin(), contents_.end(), content), content);
  recency_.insert(recency_.begin(), content);
}

void CacheInstance::replace(int victim, int content) {
  if (!contains(victim)) {
    throw std::invalid_argument("victim is not cached: " +
                                std::to_string(victim));
  }
  if (contains(content)) {
    throw std::invalid_argument("content already cached: " +
                                std::to_string(content));
  }
  cached_[static_cast<std::size_t>(victim)] = 0;
  cached_[static_cast<std::size_t>(content)] = 1;
  contents_.erase(
      std::lower_bound(contents_.begin(), contents_.end(), victim));
  contents_.insert(
      std::lower_bound(contents_.begin(), contents_.end(), content), content);
  recency_.erase(std::find(recency_.begin(), recency_.end(), victim));
  recency_.insert(recency_.begin(), content);
}

std::vector<int> draw_recency_order(const std::vector<int>& contents,
                                    const Popularity& popularity,
                                    std::mt19937_64& rng) {
  const std::size_t n = contents.size();
  if (n == 0) throw std::invalid_argument("content set is empty");
  std::vector<double> weights(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (contents[i] < 0 || contents[i] >= popularity.size()) {
      throw std::invalid_argument("content id out of range: " +
                                  std::to_string(contents[i]));
    }
    weights[i] = popularity[contents[i]];
    total += weights[i];
  }
  std::vector<char> placed(n, 0);
  std::vector<int> order;
  order.reserve(n);
  for (std::size_t drawn = 0; drawn < n; ++drawn) {
    const double u = unit_draw(rng) * total;
    double acc = 0.0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (placed[i]) continue;
      acc += weights[i];
      pick = i;
      if (u < acc) break;
    }
    placed[pick] = 1;
    total -= weights[pick];
    order.push_back(contents[pick]);
  }
  return order;
}

bool step(const Scheme& scheme, CacheInstance& cache, int content,
          std::mt19937_64& rng) {
  if (cache.contains(content)) {
    cache.touch(content);
    return true;
  }
  if (!cache.full()) {
    cache.insert(content);
    return false;
  }
  std::visit(
      Overloaded{
          [&](const RrScheme& rr) {
            const int L = cache.capacity();
            if (unit_draw(rng) < L * rr.phi) {
              std::uniform_int_distribution<int> pick(0, L - 1);
              cache.replace(cache.contents()[pick(rng)], content);
            }
          },
          [&](const LpScheme& lp) {
            const Vector& pred = lp.predicted.vec();
            if (pred.size() != cache.n_contents()) {
              throw std::invalid_argument(
                  "predicted popularity has wrong length");
            }
            double denom = 0.0;
            for (int q : cache.contents()) {
              if (pred[q] < pred[content]) denom += pred[content] - pred[q];
            }
            if (denom == 0.0) return;
            if (unit_draw(rng) >= lp.alpha) return;
            const double u = unit_draw(rng) * denom;
            double acc = 0.0;
            int victim = -1;
            for (int q : cache.contents()) {
              if (!(pred[q] < pred[content])) continue;
              acc += pred[content] - pred[q];
              victim = q;
              if (u < acc) break;
            }
            cache.replace(victim, content);
          },
          [&](const TlpScheme& tlp) {
            const Vector& pred = tlp.predicted.vec();
            if (pred.size() != cache.n_contents()) {
              throw std::invalid_argument(
                  "predicted popularity has wrong length");
            }
            int target = cache.contents().front();
            for (int q : cache.contents()) {
              if (pred[q] < pred[target]) target = q;
            }
            if (!(pred[content] > pred[target])) return;
            if (tlp.variant == TlpVariant::kProbabilistic &&
                unit_draw(rng) >= pred[content] - pred[target]) {
              return;
            }
            cache.replace(target, content);
          },
          [&](const LruScheme&) {
            cache.replace(cache.least_recent(), content);
          }},
      scheme);
  return false;
}

Trajectory run_trace(const Scheme& scheme, const Popularity& popularity,
                     int cache_size, const std::vector<int>& initial,
                     std::uint64_t n_requests, std::uint64_t seed,
                     const StateSpace* space) {
  if (n_requests < 1) {
    throw std::invalid_argument("need at least one request");
  }
  const int n_contents = static_cast<int>(popularity.size());
  validate_scheme(scheme, n_contents, cache_size);
  if (space != nullptr && (space->n_contents() != n_contents ||
                           space->cache_size() != cache_size)) {
    throw std::invalid_argument(
        "state space does not match the trace dimensions");
  }
  CacheInstance cache(n_contents, cache_size, initial);
  std::mt19937_64 rng(seed);
  const RequestSampler sample(popularity.vec());
  Trajectory trajectory;
  trajectory.records.reserve(n_requests);
  for (std::uint64_t i = 0; i < n_requests; ++i) {
    const int content = sample(rng);
    const bool hit = step(scheme, cache, content, rng);
    std::int64_t state_index = -1;
    if (space != nullptr && cache.full()) {
      state_index =
          static_cast<std::int64_t>(space->index_of(cache.contents()));
    }
    trajectory.records.push_back(TraceRecord{i, content, hit, state_index});
  }
  return trajectory;
}

Matrix empirical_theta(const Scheme& scheme, const Popularity& popularity,
                       const StateSpace& space,
                       std::uint64_t samples_per_state, std::uint64_t seed,
                       int threads) {
  if (samples_per_state < 1) {
    throw std::invalid_argument("need at least one sample per state");
  }
  if (popularity.size() != space.n_contents()) {
    throw std::invalid_argument("popularity has wrong length");
  }
  validate_scheme(scheme, space.n_contents(), space.cache_size());
  const std::size_t n = space.n_states();
  Matrix theta(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const RequestSampler sample(popularity.vec());
  const bool lru = std::holds_alternative<LruScheme>(scheme);
  parallel_chunks(n, threads, [&](std::size_t, std::size_t begin,
                                  std::size_t end) {
    std::vector<std::uint64_t> counts(n);
    for (std::size_t k = begin; k < end; ++k) {
      std::mt19937_64 rng(derive_seed(seed, k));
      std::fill(counts.begin(), counts.end(), 0);
      const std::vector<int>& contents = space.state(k);
      for (std::uint64_t s = 0; s < samples_per_state; ++s) {
        CacheInstance cache(
            space.n_contents(), space.cache_size(),
            lru ? draw_recency_order(contents, popularity, rng) : contents);
        const int content = sample(rng);
        step(scheme, cache, content, rng);
        ++counts[space.index_of(cache.contents())];
      }
      for (std::size_t m = 0; m < n; ++m) {
        theta(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) =
            static_cast<double>(counts[m]) /
            static_cast<double>(samples_per_state);
      }
    }
  });
  return theta;
}

Vector empirical_stf(const Scheme& scheme, const Popularity& popularity,
                     const StateSpace& space, const SimplexPoint& eta,
                     std::uint64_t m_realizations, std::uint64_t r_requests,
                     std::uint64_t seed, StfEstimatorMode mode) {
  if (m_realizations < 1 || r_requests < 1) {
    throw std::invalid_argument("need at least one realization and request");
  }
  if (popularity.size() != space.n_contents()) {
    throw std::invalid_argument("popularity has wrong length");
  }
  if (static_cast<std::size_t>(eta.size()) != space.n_states()) {
    throw std::invalid_argument("state distribution has wrong length");
  }
  validate_scheme(scheme, space.n_contents(), space.cache_size());
  const std::size_t n = space.n_states();
  const bool lru = std::holds_alternative<LruScheme>(scheme);
  // Separate streams keep the request noise aligned across evaluation
  // points that share a seed.
  std::mt19937_64 start_rng(derive_seed(seed, 1));
  std::mt19937_64 request_rng(derive_seed(seed, 2));
  const RequestSampler draw_state(eta.vec());
  const RequestSampler draw_content(popularity.vec());

  if (mode == StfEstimatorMode::kCategorical) {
    std::vector<std::int64_t> delta(n, 0);
    for (std::uint64_t m = 0; m < m_realizations; ++m) {
      const auto k = static_cast<std::size_t>(draw_state(start_rng));
      const std::vector<int> order =
          lru ? draw_recency_order(space.state(k), popularity, start_rng)
              : space.state(k);
      for (std::uint64_t r = 0; r < r_requests; ++r) {
        CacheInstance cache(space.n_contents(), space.cache_size(), order);
        const int content = draw_content(request_rng);
        step(scheme, cache, content, request_rng);
        ++delta[space.index_of(cache.contents())];
        --delta[k];
      }
    }
    Vector field(static_cast<Eigen::Index>(n));
    const double scale =
        static_cast<double>(m_realizations) * static_cast<double>(r_requests);
    for (std::size_t m = 0; m < n; ++m) {
      field[static_cast<Eigen::Index>(m)] =
          static_cast<double>(delta[m]) / scale;
    }
    return field;
  }

  std::vector<std::uint64_t> transitions(n * n, 0);
  for (std::uint64_t m = 0; m < m_realizations; ++m) {
    const auto start = static_cast<std::size_t>(draw_state(start_rng));
    CacheInstance cache(
        space.n_contents(), space.cache_size(),
        lru ? draw_recency_order(space.state(start), popularity, start_rng)
            : space.state(start));
    std::size_t current = start;
    for (std::uint64_t r = 0; r < r_requests; ++r) {
      const int content = draw_content(request_rng);
      step(scheme, cache, content, request_rng);
      const std::size_t next = space.index_of(cache.contents());
      ++transitions[next + current * n];
      current = next;
    }
  }
  Matrix theta_hat(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    std::uint64_t total = 0;
    for (std::size_t m = 0; m < n; ++m) total += transitions[m + k * n];
    for (std::size_t m = 0; m < n; ++m) {
      // Unvisited columns fall back to the identity so the estimate stays
      // column-stochastic; they contribute zero drift.
      theta_hat(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) =
          total == 0 ? (m == k ? 1.0 : 0.0)
                     : static_cast<double>(transitions[m + k * n]) /
                           static_cast<double>(total);
    }
  }
  return theta_hat * eta.vec() - eta.vec();
}

CcpEstimate ccp_trajectory(const Scheme& scheme, const Popularity& popularity,
                           int cache_size, std::uint64_t n_rounds,
                           std::uint64_t n_requests,
                           const std::vector<int>& tracked, std::uint64_t seed,
                           int threads) {
  if (n_rounds < 1 || n_requests < 1) {
    throw std::invalid_argument("need at least one round and request");
  }
  if (tracked.empty()) {
    throw std::invalid_argument("no tracked contents given");
  }
  const int n_contents = static_cast<int>(popularity.size());
  validate_scheme(scheme, n_contents, cache_size);
  std::vector<char> seen(static_cast<std::size_t>(n_contents), 0);
  for (int c : tracked) {
    if (c < 0 || c >= n_contents) {
      throw std::invalid_argument("tracked content id out of range: " +
                                  std::to_string(c));
    }
    if (seen[static_cast<std::size_t>(c)]) {
      throw std::invalid_argument("duplicate tracked content: " +
                                  std::to_string(c));
    }
    seen[static_cast<std::size_t>(c)] = 1;
  }
  const std::size_t width = tracked.size();
  const std::size_t cells = static_cast<std::size_t>(n_requests) * width;
  const RequestSampler sample(popularity.vec());
  const std::size_t workers =
      chunk_count(static_cast<std::size_t>(n_rounds), threads);
  std::vector<std::vector<std::uint64_t>> counts(
      workers, std::vector<std::uint64_t>(cells, 0));
  parallel_chunks(
      static_cast<std::size_t>(n_rounds), threads,
      [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        std::vector<std::uint64_t>& local = counts[chunk];
        for (std::size_t round = begin; round < end; ++round) {
          std::mt19937_64 rng(derive_seed(seed, round));
          CacheInstance cache(n_contents, cache_size);
          for (std::uint64_t i = 0; i < n_requests; ++i) {
            const int content = sample(rng);
            step(scheme, cache, content, rng);
            const std::size_t row = static_cast<std::size_t>(i) * width;
            for (std::size_t j = 0; j < width; ++j) {
              if (cache.contains(tracked[j])) ++local[row + j];
            }
          }
        }
      });
  for (std::size_t c = 1; c < workers; ++c) {
    for (std::size_t i = 0; i < cells; ++i) counts[0][i] += counts[c][i];
  }
  CcpEstimate estimate;
  estimate.tracked = tracked;
  estimate.rounds = n_rounds;
  estimate.ccp.resize(static_cast<Eigen::Index>(n_requests),
                      static_cast<Eigen::Index>(width));
  for (std::uint64_t i = 0; i < n_requests; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      estimate.ccp(static_cast<Eigen::Index>(i),
                   static_cast<Eigen::Index>(j)) =
          static_cast<double>(counts[0][static_cast<std::size_t>(i) * width +
                                        j]) /
          static_cast<double>(n_rounds);
    }
  }
  return estimate;
}

}  // namespace stf
