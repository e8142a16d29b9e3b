#pragma once

// Seed-addressable random sampling shared by every engine.
//
// Every random draw in the library comes from a Stream obtained from
// SeedSpec::stream(r, b). A stream is a xoshiro256++ generator whose state is
// expanded (splitmix64) from a key that mixes the root seed with the pair
// (r, b). Streams therefore never share state and can be handed to any worker.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

#include "subboot/errors.hpp"
#include "subboot/types.hpp"

namespace subboot {

/// Recorded in report metadata so experiments can be reproduced bit-for-bit.
inline constexpr std::string_view kGeneratorName = "xoshiro256pp/splitmix-key-v1";

namespace detail {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  state += 0x9e3779b97f4a7c15ULL;
  return mix64(state);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// xoshiro256++ generator. Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) noexcept {
    std::uint64_t sm = key;
    for (auto& word : s_) word = detail::splitmix64(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = detail::rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  /// Uniform double on [0, 1) with 53 random bits.
  double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, bound), bound >= 1. Lemire's multiply-shift with
  /// rejection, so the result is exactly uniform.
  std::uint64_t below(std::uint64_t bound) noexcept {
    std::uint64_t x = (*this)();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = (*this)();
        m = static_cast<unsigned __int128>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::array<std::uint64_t, 4> s_{};
};

/// Root seed plus the (r, b) addressing scheme.
struct SeedSpec {
  std::uint64_t root = 0;

  /// Key for the (r, b) stream; a pure function of (root, r, b).
  constexpr std::uint64_t key(std::uint64_t r, std::uint64_t b) const noexcept {
    std::uint64_t k = detail::mix64(root + 0x9e3779b97f4a7c15ULL);
    k = detail::mix64(k ^ (r * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
    k = detail::mix64(k ^ (b * 0xabc98388fb8fac03ULL + 0x8cb92ba72f3d8dd7ULL));
    return k;
  }

  Stream stream(std::uint64_t r, std::uint64_t b) const noexcept { return Stream(key(r, b)); }

  /// A new root for an independent sub-experiment (dataset m, grid cell, ...).
  SeedSpec derive(std::uint64_t a, std::uint64_t b = 0) const noexcept {
    return SeedSpec{key(a ^ 0x5bd1e9955bd1e995ULL, b ^ 0x2545f4914f6cdd1dULL)};
  }
};

using IndexSample = std::vector<Index>;

/// Multinomial cell counts f_1..f_n; always sums to the population size.
using WeightVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// m draws with replacement from {0, ..., N-1}, written into `out`.
inline void srswr_into(Index N, Index m, Stream& stream, IndexSample& out) {
  if (N < 1) throw InvalidArgument("srswr: population size must be at least 1");
  if (m < 0) throw InvalidArgument("srswr: draw count must be non-negative");
  out.resize(static_cast<std::size_t>(m));
  const auto bound = static_cast<std::uint64_t>(N);
  for (auto& idx : out) idx = static_cast<Index>(stream.below(bound));
}

inline IndexSample srswr(Index N, Index m, Stream& stream) {
  IndexSample out;
  srswr_into(N, m, stream, out);
  return out;
}

/// Poisson(lambda) by Walker's alias method over 0..K-1 plus one tail cell,
/// K = lambda + 10 sqrt(lambda) + 20. One 64-bit word picks a cell (high half
/// of a 128-bit product) and decides between the cell and its alias (low
/// half). The tail cell, whose mass is below 1e-20, is resolved by inversion.
class PoissonTable {
 public:
  explicit PoissonTable(double lambda) : lambda_(lambda) {
    const auto K = static_cast<std::size_t>(lambda + 10.0 * std::sqrt(lambda) + 20.0);
    std::vector<double> pmf(K + 1);
    const double log_lambda = std::log(lambda);
    for (std::size_t k = 0; k < K; ++k) {
      const double kk = static_cast<double>(k);
      pmf[k] = std::exp(-lambda + kk * log_lambda - std::lgamma(kk + 1.0));
    }
    tail_start_ = K;
    pmf[K] = tail_mass(K);
    tail_mass_ = pmf[K];
    build_alias(pmf);
  }

  std::int64_t operator()(Stream& stream) const {
    const std::uint64_t x = stream();
    const unsigned __int128 m = static_cast<unsigned __int128>(x) * cells_.size();
    const auto idx = static_cast<std::uint64_t>(m >> 64);
    const Cell& cell = cells_[idx];
    // Branch-free select; the keep/alias decision is unpredictable.
    const std::uint64_t keep = 0 - static_cast<std::uint64_t>(static_cast<std::uint64_t>(m) < cell.threshold);
    const std::uint64_t k = (idx & keep) | (static_cast<std::uint64_t>(cell.alias) & ~keep);
    if (k != tail_start_) return static_cast<std::int64_t>(k);
    return draw_tail(stream);
  }

 private:
  struct Cell {
    std::uint64_t threshold;  // keep the cell when the low word is below this
    std::uint32_t alias;
  };

  double log_pmf(std::size_t k) const {
    const double kk = static_cast<double>(k);
    return -lambda_ + kk * std::log(lambda_) - std::lgamma(kk + 1.0);
  }

  double tail_mass(std::size_t from) const {
    double mass = 0.0;
    double p = std::exp(log_pmf(from));
    for (std::size_t k = from; p > 0.0 && p >= mass * 1e-17; ++k) {
      mass += p;
      p *= lambda_ / static_cast<double>(k + 1);
    }
    return mass;
  }

  /// Inversion over k >= tail_start_ with a fresh uniform.
  std::int64_t draw_tail(Stream& stream) const {
    const double u = stream.uniform01() * tail_mass_;
    std::size_t k = tail_start_;
    double p = std::exp(log_pmf(k));
    double cumulative = p;
    while (cumulative <= u && p > 0.0) {
      ++k;
      p *= lambda_ / static_cast<double>(k);
      cumulative += p;
    }
    return static_cast<std::int64_t>(k);
  }

  void build_alias(const std::vector<double>& pmf) {
    const std::size_t size = pmf.size();
    double total = 0.0;
    for (double p : pmf) total += p;
    std::vector<double> scaled(size);
    std::vector<std::size_t> small, large;
    for (std::size_t k = 0; k < size; ++k) {
      scaled[k] = pmf[k] / total * static_cast<double>(size);
      (scaled[k] < 1.0 ? small : large).push_back(k);
    }
    cells_.assign(size, Cell{std::numeric_limits<std::uint64_t>::max(), 0});
    for (std::size_t k = 0; k < size; ++k) cells_[k].alias = static_cast<std::uint32_t>(k);
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      small.pop_back();
      const std::size_t l = large.back();
      cells_[s].threshold = to_threshold(scaled[s]);
      cells_[s].alias = static_cast<std::uint32_t>(l);
      scaled[l] -= 1.0 - scaled[s];
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    // Leftovers are 1 up to rounding and keep their own cell.
  }

  static std::uint64_t to_threshold(double q) {
    if (!(q > 0.0)) return 0;
    if (q >= 1.0) return std::numeric_limits<std::uint64_t>::max();
    return static_cast<std::uint64_t>(std::ldexp(q, 64));
  }

  double lambda_;
  std::size_t tail_start_ = 0;
  double tail_mass_ = 0.0;
  std::vector<Cell> cells_;
};

/// Draws f ~ Multinomial(N; 1/n, ..., 1/n).
///
/// Cells are first filled with iid Poisson(lambda), lambda = (N - c sqrt(N)) / n,
/// restarting if the total exceeds N; the remaining N - total balls are then
/// thrown uniformly. Given its total s, an iid Poisson vector is
/// Multinomial(s; uniform), so the result is exactly Multinomial(N; uniform)
/// for any c. The margin c is picked once to minimise the expected number of
/// draws (n per attempt plus about c sqrt(N) top-up balls). When lambda < 1
/// all N balls are thrown one by one.
class MultinomialSampler {
 public:
  MultinomialSampler(Index n, Index N) : n_(n), N_(N) {
    if (n < 1 || n > N) throw InvalidArgument("multinomial_weights: requires 1 <= n <= N");
    const double total = static_cast<double>(N);
    const double root = std::sqrt(total);
    const double cells = static_cast<double>(n);
    double best_margin = 3.0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int step = 0; step <= 80; ++step) {
      const double margin = 0.05 * step;
      const double reject = 0.5 * std::erfc(margin / std::sqrt(2.0));
      const double cost = cells / (1.0 - reject) + margin * root;
      if (cost < best_cost) {
        best_cost = cost;
        best_margin = margin;
      }
    }
    lambda_ = (total - best_margin * root) / cells;
    if (n > 1 && lambda_ >= 1.0) {
      if (lambda_ <= kTableLimit) {
        table_.emplace_back(lambda_);
      } else {
        large_ = true;
      }
    }
  }

  /// Poisson rate per cell; 0 when the sampler throws balls one by one.
  double lambda() const noexcept { return (table_.empty() && !large_) ? 0.0 : lambda_; }

  Index cells() const noexcept { return n_; }
  Index population() const noexcept { return N_; }

  /// Fills `counts` (resized to n) with one multinomial draw.
  template <typename Derived>
  void draw_into(Stream& stream, Eigen::PlainObjectBase<Derived>& counts) const {
    using Value = typename Derived::Scalar;
    counts.resize(n_);
    if (n_ == 1) {
      counts(0) = static_cast<Value>(N_);
      return;
    }
    std::int64_t filled = 0;
    if (!table_.empty() || large_) {
      std::poisson_distribution<std::int64_t> poisson(lambda_);
      const auto limit = static_cast<std::int64_t>(N_);
      for (bool accepted = false; !accepted;) {
        filled = 0;
        accepted = true;
        for (Index i = 0; i < n_; ++i) {
          const std::int64_t k = large_ ? poisson(stream) : table_.front()(stream);
          counts(i) = static_cast<Value>(k);
          filled += k;
          if (filled > limit) {
            accepted = false;
            break;
          }
        }
      }
    } else {
      counts.setZero();
    }
    const auto cells = static_cast<std::uint64_t>(n_);
    for (std::int64_t j = filled; j < static_cast<std::int64_t>(N_); ++j) {
      counts(static_cast<Index>(stream.below(cells))) += Value(1);
    }
  }

  WeightVector draw(Stream& stream) const {
    WeightVector counts;
    draw_into(stream, counts);
    return counts;
  }

 private:
  static constexpr double kTableLimit = 4096.0;

  Index n_;
  Index N_;
  double lambda_ = 0.0;
  bool large_ = false;
  std::vector<PoissonTable> table_;  // empty or one element
};

inline WeightVector multinomial_weights(Index n, Index N, Stream& stream) {
  return MultinomialSampler(n, N).draw(stream);
}

}  // namespace subboot
