#pragma once

// Path generation: simple random walk, the walk with no double backtrack at
// even times, the geometric clock, and the splice rebuilding a simple random
// walk from the two.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rwb/lattice.hpp"
#include "rwb/rng.hpp"

namespace rwb {

template <int D>
struct WalkPath {
  std::vector<std::uint8_t> steps;

  std::size_t length() const { return steps.size(); }

  std::vector<Point<D>> positions() const {
    std::vector<Point<D>> out(steps.size() + 1);
    for (std::size_t k = 0; k < steps.size(); ++k) out[k + 1] = out[k] + direction<D>(steps[k]);
    return out;
  }

  Point<D> end() const {
    Point<D> p{};
    for (auto s : steps) p = p + direction<D>(s);
    return p;
  }

  WalkPath prefix(std::size_t n) const { return WalkPath{std::vector<std::uint8_t>(steps.begin(), steps.begin() + n)}; }
};

template <int D>
WalkPath<D> gen_srw(std::size_t n, Rng& rng) {
  WalkPath<D> p;
  p.steps.resize(n);
  for (auto& s : p.steps) s = static_cast<std::uint8_t>(rng.below(2 * D));
  return p;
}

// The first pair of steps is uniform over all (2D)^2 outcomes; each later
// pair (a, b) is uniform over the outcomes other than the double backtrack
// (opposite(last), last), where last is the step just before the pair.
template <int D>
WalkPath<D> gen_ndb(std::size_t n, Rng& rng) {
  constexpr std::uint32_t k = 2 * D;
  WalkPath<D> p;
  p.steps.reserve(n + 1);
  for (std::size_t t = 0; t < n; t += 2) {
    std::uint32_t r;
    if (t == 0) {
      r = rng.below(k * k);
    } else {
      int last = p.steps.back();
      std::uint32_t banned = static_cast<std::uint32_t>(opposite(last)) * k + last;
      r = rng.below(k * k - 1);
      if (r >= banned) ++r;
    }
    p.steps.push_back(static_cast<std::uint8_t>(r / k));
    p.steps.push_back(static_cast<std::uint8_t>(r % k));
  }
  p.steps.resize(n);
  return p;
}

// True when the path has a double backtrack at some even time 2m >= 2,
// i.e. S_{2m+1} = S_{2m-1} and S_{2m+2} = S_{2m}.
template <int D>
bool has_even_double_backtrack(const WalkPath<D>& p) {
  for (std::size_t t = 2; t + 1 < p.steps.size(); t += 2) {
    if (p.steps[t] == opposite(p.steps[t - 1]) && p.steps[t + 1] == p.steps[t - 1]) return true;
  }
  return false;
}

inline double clock_parameter(int d) { return 1.0 / (4.0 * d * d); }

// xi_i i.i.d. with P(xi = k) = (1 - p) p^k, p = 1 / (2d)^2, by inversion.
inline std::vector<std::uint32_t> gen_clock(int d, std::size_t count, Rng& rng) {
  const double lp = std::log(clock_parameter(d));
  std::vector<std::uint32_t> xi(count);
  for (auto& x : xi) x = static_cast<std::uint32_t>(std::floor(std::log(rng.uniform_open0()) / lp));
  return xi;
}

template <int D>
struct ClockedWalk {
  WalkPath<D> skeleton;
  // xi[i - 1] holds xi_i, the number of double backtracks inserted after
  // skeleton time 2i.
  std::vector<std::uint32_t> xi;

  // N~_k = sum_{i <= floor(k/2)} xi_i.
  std::vector<std::uint64_t> n_tilde() const {
    std::vector<std::uint64_t> out(skeleton.length() + 1, 0);
    std::uint64_t acc = 0;
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (k >= 2 && k % 2 == 0) acc += xi.at(k / 2 - 1);
      out[k] = acc;
    }
    return out;
  }
};

template <int D>
ClockedWalk<D> gen_clocked(std::size_t n, Rng& rng) {
  ClockedWalk<D> cw;
  cw.skeleton = gen_ndb<D>(n, rng);
  cw.xi = gen_clock(D, n / 2, rng);
  return cw;
}

// Emits each skeleton pair (a, b) followed by xi times the double backtrack
// (opposite(b), b), so S_{k + 2 N~_k} = S~_k for every k.
template <int D>
WalkPath<D> splice(const ClockedWalk<D>& cw) {
  const auto& s = cw.skeleton.steps;
  if (cw.xi.size() < s.size() / 2) throw std::invalid_argument("splice: clock shorter than skeleton");
  WalkPath<D> out;
  out.steps.reserve(s.size() + s.size() / 8 + 4);
  for (std::size_t i = 0; i + 1 < s.size(); i += 2) {
    out.steps.push_back(s[i]);
    out.steps.push_back(s[i + 1]);
    for (std::uint32_t r = 0; r < cw.xi[i / 2]; ++r) {
      out.steps.push_back(static_cast<std::uint8_t>(opposite(s[i + 1])));
      out.steps.push_back(s[i + 1]);
    }
  }
  if (s.size() % 2 == 1) out.steps.push_back(s.back());
  return out;
}

// Path dump: header line "# d=<d> n=<n> seed=<seed>", then one step per line.
template <int D>
void write_path(std::ostream& os, const WalkPath<D>& p, std::uint64_t seed) {
  os << "# d=" << D << " n=" << p.length() << " seed=" << seed << "\n";
  for (auto s : p.steps) os << int(s) << "\n";
}

template <int D>
WalkPath<D> read_path(std::istream& is, std::uint64_t* seed = nullptr) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty path dump");
  int d = 0;
  unsigned long long n = 0, sd = 0;
  if (std::sscanf(line.c_str(), "# d=%d n=%llu seed=%llu", &d, &n, &sd) != 3) throw std::runtime_error("malformed path header");
  if (d != D) throw std::runtime_error("path dimension mismatch");
  WalkPath<D> p;
  p.steps.reserve(n);
  for (unsigned long long k = 0; k < n; ++k) {
    int s;
    if (!(is >> s) || s < 0 || s >= 2 * D) throw std::runtime_error("bad step in path dump");
    p.steps.push_back(static_cast<std::uint8_t>(s));
  }
  if (seed) *seed = sd;
  return p;
}

}  // namespace rwb
