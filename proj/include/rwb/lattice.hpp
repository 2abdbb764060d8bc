#pragma once

// Lattice primitives for Z^D: points, the 2D unit directions, neighbor masks
// and isometry classes of direction subsets.
//
// Direction index i encodes the unit vector (+e_{i/2}) for even i and
// (-e_{i/2}) for odd i, so the antipode of direction i is i ^ 1. A
// NeighborMask stores a subset of directions with bit i <-> direction i.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rwb {

template <int D>
using Point = std::array<int, D>;

template <int D>
constexpr Point<D> origin() {
  return Point<D>{};
}

template <std::size_t D>
constexpr std::array<int, D> operator+(std::array<int, D> a, const std::array<int, D>& b) {
  for (std::size_t j = 0; j < D; ++j) a[j] += b[j];
  return a;
}

template <std::size_t D>
constexpr std::array<int, D> operator-(std::array<int, D> a, const std::array<int, D>& b) {
  for (std::size_t j = 0; j < D; ++j) a[j] -= b[j];
  return a;
}

template <std::size_t D>
constexpr std::array<int, D> operator-(std::array<int, D> a) {
  for (std::size_t j = 0; j < D; ++j) a[j] = -a[j];
  return a;
}

template <std::size_t D>
double norm(const std::array<int, D>& p) {
  double s = 0.0;
  for (std::size_t j = 0; j < D; ++j) s += double(p[j]) * p[j];
  return std::sqrt(s);
}

template <std::size_t D>
int sup_norm(const std::array<int, D>& p) {
  int m = 0;
  for (std::size_t j = 0; j < D; ++j) m = std::max(m, std::abs(p[j]));
  return m;
}

template <std::size_t D>
int l1_norm(const std::array<int, D>& p) {
  int s = 0;
  for (std::size_t j = 0; j < D; ++j) s += std::abs(p[j]);
  return s;
}

constexpr int opposite(int direction) { return direction ^ 1; }

template <int D>
constexpr Point<D> direction(int i) {
  Point<D> p{};
  p[i / 2] = (i % 2 == 0) ? 1 : -1;
  return p;
}

// +e_1, -e_1, +e_2, -e_2, ..., +e_D, -e_D.
template <int D>
std::vector<Point<D>> unit_directions() {
  static_assert(D >= 1);
  std::vector<Point<D>> out;
  out.reserve(2 * D);
  for (int i = 0; i < 2 * D; ++i) out.push_back(direction<D>(i));
  return out;
}

// Index of a unit vector in the direction order, or -1.
template <int D>
int direction_index(const Point<D>& p) {
  int found = -1;
  for (int j = 0; j < D; ++j) {
    if (p[j] == 0) continue;
    if (found >= 0 || std::abs(p[j]) != 1) return -1;
    found = 2 * j + (p[j] < 0 ? 1 : 0);
  }
  return found;
}

struct NeighborMask {
  std::uint32_t bits = 0;

  static constexpr NeighborMask full(int d) { return {(std::uint32_t{1} << (2 * d)) - 1}; }
  static constexpr NeighborMask single(int direction) { return {std::uint32_t{1} << direction}; }

  constexpr bool contains(int direction) const { return (bits >> direction) & 1u; }
  constexpr bool empty() const { return bits == 0; }
  constexpr int size() const { return std::popcount(bits); }
  constexpr bool valid_for(int d) const { return (bits >> (2 * d)) == 0; }
  constexpr bool subset_of(NeighborMask o) const { return (bits & ~o.bits) == 0; }

  constexpr NeighborMask with(int direction) const { return {bits | (std::uint32_t{1} << direction)}; }
  constexpr NeighborMask without(int direction) const { return {bits & ~(std::uint32_t{1} << direction)}; }

  friend constexpr NeighborMask operator&(NeighborMask a, NeighborMask b) { return {a.bits & b.bits}; }
  friend constexpr NeighborMask operator|(NeighborMask a, NeighborMask b) { return {a.bits | b.bits}; }
  friend constexpr auto operator<=>(NeighborMask, NeighborMask) = default;

  template <class F>
  constexpr void for_each(F&& f) const {
    for (std::uint32_t b = bits; b != 0; b &= b - 1) f(std::countr_zero(b));
  }
};

template <int D>
std::vector<Point<D>> points_of(NeighborMask m) {
  std::vector<Point<D>> out;
  m.for_each([&](int i) { out.push_back(direction<D>(i)); });
  return out;
}

inline std::string to_string(NeighborMask m, int d) {
  std::string s = "{";
  bool first = true;
  for (int i = 0; i < 2 * d; ++i) {
    if (!m.contains(i)) continue;
    if (!first) s += ",";
    s += (i % 2 == 0 ? "+e" : "-e") + std::to_string(i / 2 + 1);
    first = false;
  }
  return s + "}";
}

// Orbit of a mask under signed coordinate permutations, canonicalized to
// the numerically smallest member.
struct IsometryClass {
  NeighborMask canonical;
  friend constexpr auto operator<=>(IsometryClass, IsometryClass) = default;
};

namespace detail {

// Generators of the hyperoctahedral group acting on direction masks:
// transpositions of adjacent coordinates and the sign flip of coordinate 0.
inline NeighborMask swap_coordinates(NeighborMask m, int a, int b) {
  std::uint32_t bits = m.bits;
  std::uint32_t pa = (bits >> (2 * a)) & 3u;
  std::uint32_t pb = (bits >> (2 * b)) & 3u;
  bits &= ~((3u << (2 * a)) | (3u << (2 * b)));
  bits |= (pa << (2 * b)) | (pb << (2 * a));
  return {bits};
}

inline NeighborMask flip_coordinate(NeighborMask m, int a) {
  std::uint32_t p = (m.bits >> (2 * a)) & 3u;
  std::uint32_t q = ((p & 1u) << 1) | (p >> 1);
  return {(m.bits & ~(3u << (2 * a))) | (q << (2 * a))};
}

template <class F>
void for_each_generator_image(NeighborMask m, int d, F&& f) {
  for (int a = 0; a + 1 < d; ++a) f(swap_coordinates(m, a, a + 1));
  f(flip_coordinate(m, 0));
}

}  // namespace detail

inline std::vector<NeighborMask> orbit(NeighborMask v, int d) {
  std::vector<NeighborMask> seen{v};
  for (std::size_t head = 0; head < seen.size(); ++head) {
    detail::for_each_generator_image(seen[head], d, [&](NeighborMask w) {
      if (std::find(seen.begin(), seen.end(), w) == seen.end()) seen.push_back(w);
    });
  }
  return seen;
}

inline IsometryClass canonical_class(NeighborMask v, int d) {
  if (d < 1 || !v.valid_for(d)) throw std::invalid_argument("mask " + std::to_string(v.bits) + " invalid for d=" + std::to_string(d));
  auto o = orbit(v, d);
  return {*std::min_element(o.begin(), o.end())};
}

// Canonical class of every mask of V_0, computed once per dimension.
template <int D>
class ClassTable {
 public:
  static const ClassTable& instance() {
    static const ClassTable table;
    return table;
  }

  static constexpr std::uint32_t mask_count = std::uint32_t{1} << (2 * D);

  IsometryClass of(NeighborMask m) const { return {NeighborMask{canonical_[m.bits]}}; }
  const std::vector<NeighborMask>& representatives() const { return reps_; }
  std::size_t orbit_size(IsometryClass c) const {
    return std::count(canonical_.begin(), canonical_.end(), c.canonical.bits);
  }

 private:
  ClassTable() : canonical_(mask_count, mask_count) {
    for (std::uint32_t m = 0; m < mask_count; ++m) {
      if (canonical_[m] != mask_count) continue;
      auto o = orbit(NeighborMask{m}, D);
      std::uint32_t best = std::min_element(o.begin(), o.end())->bits;
      for (auto w : o) canonical_[w.bits] = best;
      reps_.push_back(NeighborMask{best});
    }
    std::sort(reps_.begin(), reps_.end());
  }

  std::vector<std::uint32_t> canonical_;
  std::vector<NeighborMask> reps_;
};

}  // namespace rwb
