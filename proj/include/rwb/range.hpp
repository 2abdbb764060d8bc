#pragma once

// Streaming range and boundary of a lattice path, the first-visit partition
// R_{n,V} and its boundary part, last-passage counts, and the intersection
// functionals that control subadditivity of the boundary size.

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "rwb/lattice.hpp"
#include "rwb/site_map.hpp"
#include "rwb/walk.hpp"

namespace rwb {

struct SiteRecord {
  std::uint64_t first_visit = 0;
  // Directions whose neighbor was unvisited at the first visit.
  NeighborMask first_mask;
  // Directions whose neighbor is still unvisited.
  NeighborMask open;
};

template <int D>
class RangeState {
 public:
  using Packing = KeyPacking<D>;

  explicit RangeState(std::size_t expected_sites = 16) : sites_(expected_sites), counts_(std::size_t{1} << (2 * D), 0) {
    reset();
  }

  void reset() {
    sites_.clear();
    order_.clear();
    std::fill(counts_.begin(), counts_.end(), 0);
    boundary_ = 0;
    time_ = 0;
    pos_ = origin<D>();
    key_ = Packing::pack(pos_);
    visit(key_);
  }

  void extend(int dir) {
    pos_[dir / 2] += (dir % 2 == 0) ? 1 : -1;
    if (pos_[dir / 2] >= Packing::limit || pos_[dir / 2] <= -Packing::limit) throw std::out_of_range("walk left the packing range");
    key_ = Packing::step(key_, dir);
    ++time_;
    last_new_ = sites_.find(key_) == nullptr;
    if (last_new_) visit(key_);
  }

  template <class Steps>
  void extend_all(const Steps& steps) {
    for (auto s : steps) extend(s);
  }

  std::uint64_t time() const { return time_; }
  const Point<D>& position() const { return pos_; }
  std::uint64_t position_key() const { return key_; }
  bool last_step_new() const { return last_new_; }

  std::size_t range_size() const { return sites_.size(); }
  std::size_t boundary_size() const { return boundary_; }

  // |R_{n,V}| for every raw mask V, indexed by V.bits.
  const std::vector<std::uint64_t>& partition_counts() const { return counts_; }

  std::map<IsometryClass, std::uint64_t> class_counts() const {
    std::map<IsometryClass, std::uint64_t> out;
    const auto& table = ClassTable<D>::instance();
    for (std::uint32_t m = 0; m < counts_.size(); ++m)
      if (counts_[m]) out[table.of(NeighborMask{m})] += counts_[m];
    return out;
  }

  const SiteRecord* find(const Point<D>& p) const { return sites_.find(Packing::pack(p)); }
  const SiteRecord* find_key(std::uint64_t key) const { return sites_.find(key); }
  const SiteRecord& record(std::uint64_t key) const { return *sites_.find(key); }

  // Keys in order of first visit.
  const std::vector<std::uint64_t>& order() const { return order_; }

 private:
  void visit(std::uint64_t key) {
    NeighborMask open;
    for (int i = 0; i < 2 * D; ++i) {
      SiteRecord* nb = sites_.find(Packing::step(key, i));
      if (nb == nullptr) {
        open = open.with(i);
        continue;
      }
      nb->open = nb->open.without(opposite(i));
      if (nb->open.empty()) --boundary_;
    }
    sites_.emplace(key, SiteRecord{time_, open, open});
    order_.push_back(key);
    ++counts_[open.bits];
    if (!open.empty()) ++boundary_;
  }

  SiteMap<SiteRecord> sites_;
  std::vector<std::uint64_t> order_;
  std::vector<std::uint64_t> counts_;
  std::size_t boundary_ = 0;
  std::uint64_t time_ = 0;
  Point<D> pos_{};
  std::uint64_t key_ = 0;
  bool last_new_ = true;
};

template <int D>
RangeState<D> range_of(const WalkPath<D>& path, std::size_t from, std::size_t to) {
  RangeState<D> st(to - from + 1);
  for (std::size_t k = from; k < to; ++k) st.extend(path.steps[k]);
  return st;
}

// |dR_{n,V}| per raw mask V from the future-dependent indicator
// J_{k,n,V} = 1{S_k + V not contained in {S_k, ..., S_n}}, evaluated through
// first-visit times of the whole path (path.length() >= n).
template <int D>
std::vector<std::uint64_t> boundary_partition(const WalkPath<D>& path, std::size_t n) {
  if (n > path.length()) throw std::invalid_argument("boundary_partition: n exceeds path length");
  RangeState<D> st = range_of(path, 0, path.length());
  std::vector<std::uint64_t> out(std::size_t{1} << (2 * D), 0);
  for (std::uint64_t key : st.order()) {
    const SiteRecord& r = st.record(key);
    if (r.first_visit > n) break;
    bool escapes = false;
    r.first_mask.for_each([&](int i) {
      const SiteRecord* nb = st.find_key(KeyPacking<D>::step(key, i));
      if (nb == nullptr || nb->first_visit > n) escapes = true;
    });
    if (escapes) ++out[r.first_mask.bits];
  }
  return out;
}

// |R-bar_{n,U}| = sum over V containing U of |R_{n,V}|.
template <int D>
std::uint64_t bar_range(const RangeState<D>& st, NeighborMask U) {
  std::uint64_t s = 0;
  const auto& c = st.partition_counts();
  for (std::uint32_t m = 0; m < c.size(); ++m)
    if (U.subset_of(NeighborMask{m})) s += c[m];
  return s;
}

template <int D>
std::uint64_t bar_range(const WalkPath<D>& path, std::size_t n, NeighborMask U) {
  return bar_range(range_of(path, 0, n), U);
}

// Counts times k <= n with S_k not in R_{k-1} and S_i not in S_k + U for all
// i <= k - 1.
template <int D>
std::uint64_t bar_range_direct(const WalkPath<D>& path, std::size_t n, NeighborMask U) {
  SiteMap<std::uint8_t> seen(n + 1);
  std::uint64_t key = KeyPacking<D>::pack(origin<D>());
  std::uint64_t count = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    if (k > 0) key = KeyPacking<D>::step(key, path.steps[k - 1]);
    if (seen.find(key) == nullptr) {
      bool clear = true;
      U.for_each([&](int i) { clear = clear && seen.find(KeyPacking<D>::step(key, i)) == nullptr; });
      if (clear) ++count;
      seen.emplace(key, 1);
    }
  }
  return count;
}

// sum_{i=0}^{n-1} Z_i^n with Z_i^n = 1{S_{i+k} not in S_i + (V u {0}) for
// k = 1..n-i}, from last-visit times. This plus Z_n^n = 1 has the law of
// |R-bar_{n,V}|.
template <int D>
std::uint64_t underline_range(const WalkPath<D>& path, std::size_t n, NeighborMask V) {
  if (n > path.length()) throw std::invalid_argument("underline_range: n exceeds path length");
  SiteMap<std::uint64_t> last(n + 1);
  std::vector<std::uint64_t> keys(n + 1);
  keys[0] = KeyPacking<D>::pack(origin<D>());
  for (std::size_t k = 1; k <= n; ++k) keys[k] = KeyPacking<D>::step(keys[k - 1], path.steps[k - 1]);
  for (std::size_t k = 0; k <= n; ++k) {
    auto [slot, inserted] = last.emplace(keys[k], k);
    if (!inserted) *slot = k;
  }
  std::uint64_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool z = *last.find(keys[i]) == i;
    V.for_each([&](int d) {
      const std::uint64_t* t = last.find(KeyPacking<D>::step(keys[i], d));
      if (t != nullptr && *t > i) z = false;
    });
    if (z) ++count;
  }
  return count;
}

// ---------------------------------------------------------------------------
// Segment ranges and intersection functionals.

using KeySet = SiteMap<std::uint8_t>;

// {S_k - S_anchor : from <= k <= to}.
template <int D>
KeySet segment_set(const std::vector<Point<D>>& pos, std::size_t from, std::size_t to, std::size_t anchor) {
  KeySet s(to - from + 1);
  for (std::size_t k = from; k <= to; ++k) s.emplace(KeyPacking<D>::pack(pos[k] - pos[anchor]), 1);
  return s;
}

// Lambda+ = Lambda + (V_0 u {0}).
template <int D>
KeySet fatten(const KeySet& a) {
  KeySet out(a.size() * (2 * D + 1));
  a.for_each([&](std::uint64_t key, std::uint8_t) {
    out.emplace(key, 1);
    for (int i = 0; i < 2 * D; ++i) out.emplace(KeyPacking<D>::step(key, i), 1);
  });
  return out;
}

inline std::uint64_t intersection_size(const KeySet& a, const KeySet& b) {
  const KeySet& small = a.size() <= b.size() ? a : b;
  const KeySet& large = a.size() <= b.size() ? b : a;
  std::uint64_t c = 0;
  small.for_each([&](std::uint64_t key, std::uint8_t) { c += large.find(key) != nullptr; });
  return c;
}

// |A n B+| + |A+ n B|.
template <int D>
std::uint64_t cross_count(const KeySet& a, const KeySet& b) {
  return intersection_size(a, fatten<D>(b)) + intersection_size(fatten<D>(a), b);
}

// Z(n,m) with the backward range of [0,n] and the forward range of
// [n, n+m], both translated so that S_n sits at the origin.
template <int D>
std::uint64_t intersect_Z(const WalkPath<D>& path, std::size_t n, std::size_t m) {
  if (n + m > path.length()) throw std::invalid_argument("intersect_Z: path too short");
  auto pos = path.positions();
  return cross_count<D>(segment_set<D>(pos, 0, n, n), segment_set<D>(pos, n, n + m, n));
}

// |backward R(0,n) n R(n,n+m)|, the overlap in the range identity.
template <int D>
std::uint64_t range_overlap(const WalkPath<D>& path, std::size_t n, std::size_t m) {
  auto pos = path.positions();
  return intersection_size(segment_set<D>(pos, 0, n, n), segment_set<D>(pos, n, n + m, n));
}

// Endpoints of strand k (1-based) at level l: the level splits [0, n] into
// 2^{l-1} strands, each halved at mid.
struct StrandSplit {
  std::size_t begin, mid, end;
};

inline StrandSplit dyadic_strand(std::size_t n, int level, std::size_t k) {
  const std::size_t parts = std::size_t{1} << (level - 1);
  const unsigned __int128 N = n;
  auto at = [&](std::size_t num, std::size_t den) { return static_cast<std::size_t>(N * num / den); };
  return {at(k - 1, parts), at(2 * k - 1, 2 * parts), at(k, parts)};
}

// Z^{(l)}_{k,n} = |U n U~+| + |U+ n U~| for the two halves of strand k at
// level l, without translation.
template <int D>
std::uint64_t dyadic_Z(const std::vector<Point<D>>& pos, std::size_t n, int level, std::size_t k) {
  if (level < 1 || k < 1 || k > (std::size_t{1} << (level - 1))) throw std::invalid_argument("dyadic_Z: strand index out of range");
  if ((std::size_t{1} << level) > n) throw std::invalid_argument("dyadic_Z: 2^level exceeds n");
  auto s = dyadic_strand(n, level, k);
  return cross_count<D>(segment_set<D>(pos, s.begin, s.mid, 0), segment_set<D>(pos, s.mid, s.end, 0));
}

template <int D>
std::uint64_t dyadic_Z(const WalkPath<D>& path, std::size_t n, int level, std::size_t k) {
  return dyadic_Z<D>(path.positions(), n, level, k);
}

}  // namespace rwb
