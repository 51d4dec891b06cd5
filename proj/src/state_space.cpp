#include "stf/state_space.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>

namespace stf {

namespace {

constexpr std::uint64_t kU64Max = std::numeric_limits<std::uint64_t>::max();

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  return a > kU64Max - b ? kU64Max : a + b;
}

// C(n, k), or max_states + 1 as soon as the count exceeds max_states.
std::uint64_t count_subsets_capped(int n, int k, std::uint64_t max_states) {
  unsigned __int128 count = 1;
  for (int i = 1; i <= k; ++i) {
    count = count * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (count > max_states) return max_states + 1;
  }
  return static_cast<std::uint64_t>(count);
}

}  // namespace

std::uint64_t StateSpace::exact_regime_cap() {
  const char* env = std::getenv("STF_CACHE_MAX_STATES");
  if (env == nullptr || *env == '\0') return kDefaultMaxStates;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0' || value == 0) {
    throw std::invalid_argument(
        "STF_CACHE_MAX_STATES must be a positive integer, got '" +
        std::string(env) + "'");
  }
  return static_cast<std::uint64_t>(value);
}

StateSpace StateSpace::enumerate(int n_contents, int cache_size,
                                 std::uint64_t max_states) {
  if (n_contents < 2) {
    throw std::invalid_argument("need at least two contents");
  }
  if (cache_size < 1 || cache_size >= n_contents) {
    throw std::invalid_argument(
        "cache size must satisfy 1 <= size < n_contents, got " +
        std::to_string(cache_size) + " for " + std::to_string(n_contents) +
        " contents");
  }
  const std::uint64_t count =
      count_subsets_capped(n_contents, cache_size, max_states);
  if (count > max_states) {
    throw std::invalid_argument(
        "state space for " + std::to_string(n_contents) + " contents and "
        "cache size " + std::to_string(cache_size) + " exceeds the exact-"
        "regime cap of " + std::to_string(max_states) +
        " states; use the simulation paths or raise STF_CACHE_MAX_STATES");
  }

  StateSpace space;
  space.n_contents_ = n_contents;
  space.cache_size_ = cache_size;
  space.states_.reserve(count);

  std::vector<int> current(cache_size);
  std::iota(current.begin(), current.end(), 0);
  while (true) {
    space.states_.push_back(current);
    int i = cache_size - 1;
    while (i >= 0 && current[i] == n_contents - cache_size + i) --i;
    if (i < 0) break;
    ++current[i];
    for (int j = i + 1; j < cache_size; ++j) current[j] = current[j - 1] + 1;
  }

  space.index_by_lex_rank_.resize(space.states_.size());
  std::iota(space.index_by_lex_rank_.begin(), space.index_by_lex_rank_.end(),
            std::size_t{0});

  space.binom_.assign(n_contents + 1,
                      std::vector<std::uint64_t>(cache_size + 1, 0));
  for (int a = 0; a <= n_contents; ++a) {
    space.binom_[a][0] = 1;
    for (int b = 1; b <= std::min(a, cache_size); ++b) {
      space.binom_[a][b] = a == b ? 1
                                  : saturating_add(space.binom_[a - 1][b - 1],
                                                   space.binom_[a - 1][b]);
    }
  }
  return space;
}

const std::vector<int>& StateSpace::state(std::size_t k) const {
  if (k >= states_.size()) {
    throw std::invalid_argument("state index " + std::to_string(k) +
                                " out of range");
  }
  return states_[k];
}

bool StateSpace::caches(std::size_t k, int content) const {
  const auto& c = state(k);
  return std::binary_search(c.begin(), c.end(), content);
}

std::uint64_t StateSpace::lex_rank(const std::vector<int>& contents) const {
  std::uint64_t rank = 0;
  int prev = -1;
  for (int i = 0; i < cache_size_; ++i) {
    for (int v = prev + 1; v < contents[i]; ++v) {
      rank += binom_[n_contents_ - 1 - v][cache_size_ - 1 - i];
    }
    prev = contents[i];
  }
  return rank;
}

std::size_t StateSpace::index_of(std::vector<int> contents) const {
  if (static_cast<int>(contents.size()) != cache_size_) {
    throw std::invalid_argument("content set has size " +
                                std::to_string(contents.size()) +
                                ", expected " + std::to_string(cache_size_));
  }
  std::sort(contents.begin(), contents.end());
  for (int i = 0; i < cache_size_; ++i) {
    if (contents[i] < 0 || contents[i] >= n_contents_) {
      throw std::invalid_argument("content id out of range: " +
                                  std::to_string(contents[i]));
    }
    if (i > 0 && contents[i] == contents[i - 1]) {
      throw std::invalid_argument("content set has a duplicate entry");
    }
  }
  return index_by_lex_rank_[lex_rank(contents)];
}

std::vector<std::size_t> StateSpace::neighbors(std::size_t k) const {
  const auto& c = state(k);
  std::vector<std::size_t> result;
  result.reserve(static_cast<std::size_t>(cache_size_) *
                 (n_contents_ - cache_size_));
  std::vector<int> swapped(c);
  for (int qi = 0; qi < cache_size_; ++qi) {
    for (int l = 0; l < n_contents_; ++l) {
      if (std::binary_search(c.begin(), c.end(), l)) continue;
      swapped = c;
      swapped[qi] = l;
      result.push_back(index_of(std::move(swapped)));
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

std::vector<std::size_t> StateSpace::content_neighbors(std::size_t k,
                                                       int content) const {
  const auto& c = state(k);
  if (content < 0 || content >= n_contents_) {
    throw std::invalid_argument("content id out of range: " +
                                std::to_string(content));
  }
  if (std::binary_search(c.begin(), c.end(), content)) {
    throw std::invalid_argument("state " + std::to_string(k) +
                                " already caches content " +
                                std::to_string(content));
  }
  std::vector<std::size_t> result;
  result.reserve(cache_size_);
  std::vector<int> swapped(c);
  for (int qi = 0; qi < cache_size_; ++qi) {
    swapped = c;
    swapped[qi] = content;
    result.push_back(index_of(std::move(swapped)));
  }
  std::sort(result.begin(), result.end());
  return result;
}

int StateSpace::swapped_content(std::size_t k, std::size_t m) const {
  const auto& a = state(k);
  const auto& b = state(m);
  int found = -1;
  int extra = 0;
  std::size_t j = 0;
  for (int value : a) {
    while (j < b.size() && b[j] < value) ++j;
    if (j < b.size() && b[j] == value) continue;
    found = value;
    ++extra;
  }
  if (extra != 1) {
    throw std::invalid_argument("states " + std::to_string(k) + " and " +
                                std::to_string(m) + " are not neighbors");
  }
  return found;
}

Vector StateSpace::cache_state_vector(std::size_t k) const {
  Vector column = Vector::Zero(n_contents_);
  for (int l : state(k)) column[l] = 1.0;
  return column;
}

Matrix StateSpace::cache_state_matrix() const {
  Matrix cs = Matrix::Zero(n_contents_, static_cast<Eigen::Index>(n_states()));
  for (std::size_t k = 0; k < n_states(); ++k) {
    for (int l : states_[k]) cs(l, static_cast<Eigen::Index>(k)) = 1.0;
  }
  return cs;
}

StateSpace StateSpace::reordered(const std::vector<std::size_t>& perm) const {
  if (perm.size() != n_states()) {
    throw std::invalid_argument("permutation has wrong length");
  }
  std::vector<std::size_t> inverse(perm.size(), n_states());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (perm[i] >= n_states() || inverse[perm[i]] != n_states()) {
      throw std::invalid_argument("not a permutation of the state indices");
    }
    inverse[perm[i]] = i;
  }
  StateSpace result;
  result.n_contents_ = n_contents_;
  result.cache_size_ = cache_size_;
  result.binom_ = binom_;
  result.states_.reserve(n_states());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    result.states_.push_back(states_[perm[i]]);
  }
  result.index_by_lex_rank_.resize(n_states());
  for (std::size_t r = 0; r < n_states(); ++r) {
    result.index_by_lex_rank_[r] = inverse[index_by_lex_rank_[r]];
  }
  return result;
}

Vector scp_to_ccp(const StateSpace& space, const SimplexPoint& eta) {
  if (static_cast<std::size_t>(eta.size()) != space.n_states()) {
    throw std::invalid_argument("state distribution has wrong length");
  }
  Vector ccp = Vector::Zero(space.n_contents());
  for (std::size_t k = 0; k < space.n_states(); ++k) {
    for (int l : space.state(k)) {
      ccp[l] += eta[static_cast<Eigen::Index>(k)];
    }
  }
  return ccp;
}

double hit_probability(const Popularity& popularity, const Vector& ccp) {
  if (popularity.size() != ccp.size()) {
    throw std::invalid_argument(
        "popularity and caching-probability lengths differ");
  }
  for (Eigen::Index l = 0; l < ccp.size(); ++l) {
    if (ccp[l] < -1e-9 || ccp[l] > 1.0 + 1e-9) {
      throw std::invalid_argument("caching probability out of [0,1]: " +
                                  std::to_string(ccp[l]));
    }
  }
  return popularity.vec().dot(ccp);
}

std::vector<std::size_t> sort_states_by_predicted_mass(
    const StateSpace& space, const Popularity& predicted) {
  if (predicted.size() != space.n_contents()) {
    throw std::invalid_argument("predicted popularity has wrong length");
  }
  std::vector<double> mass(space.n_states(), 0.0);
  for (std::size_t k = 0; k < space.n_states(); ++k) {
    for (int l : space.state(k)) mass[k] += predicted[l];
  }
  std::vector<std::size_t> perm(space.n_states());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    if (mass[a] != mass[b]) return mass[a] < mass[b];
    return space.state(a) < space.state(b);
  });
  return perm;
}

}  // namespace stf
