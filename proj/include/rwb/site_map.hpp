#pragma once

// Open-addressing hash map from lattice sites to a small value type.
//
// Sites are packed into 64 bits with B = 64 / D bits per coordinate, each
// coordinate stored with offset 2^(B-1). Key 0 is reserved as the empty
// marker; it corresponds to the corner (-2^(B-1), ...), which lies outside
// the admissible coordinate range |c| < 2^(B-1) - 1.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rwb/lattice.hpp"

namespace rwb {

template <int D>
struct KeyPacking {
  static_assert(D >= 1 && D <= 8);
  static constexpr int bits = 64 / D;
  static constexpr std::int64_t offset = std::int64_t{1} << (bits - 1);
  static constexpr std::int64_t limit = offset - 1;

  static std::uint64_t pack(const Point<D>& p) {
    std::uint64_t key = 0;
    for (int j = 0; j < D; ++j) {
      if (p[j] >= limit || p[j] <= -limit) {
        throw std::out_of_range("coordinate " + std::to_string(p[j]) + " exceeds packing bound " + std::to_string(limit));
      }
      key |= static_cast<std::uint64_t>(p[j] + offset) << (bits * j);
    }
    return key;
  }

  static Point<D> unpack(std::uint64_t key) {
    Point<D> p{};
    const std::uint64_t m = bits == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << bits) - 1);
    for (int j = 0; j < D; ++j) p[j] = static_cast<int>(static_cast<std::int64_t>((key >> (bits * j)) & m) - offset);
    return p;
  }

  // Key of p + direction(i), valid while p + direction(i) stays in range.
  static constexpr std::uint64_t step(std::uint64_t key, int i) {
    const std::uint64_t unit = std::uint64_t{1} << (bits * (i / 2));
    return (i % 2 == 0) ? key + unit : key - unit;
  }
};

template <class Value>
class SiteMap {
 public:
  explicit SiteMap(std::size_t expected = 16) { rehash(capacity_for(expected)); }

  std::size_t size() const { return size_; }

  Value* find(std::uint64_t key) {
    std::size_t i = slot(key);
    while (true) {
      if (keys_[i] == key) return &values_[i];
      if (keys_[i] == 0) return nullptr;
      i = (i + 1) & mask_;
    }
  }
  const Value* find(std::uint64_t key) const { return const_cast<SiteMap*>(this)->find(key); }

  // Inserts key if absent. Returns the value slot and whether it was inserted.
  std::pair<Value*, bool> emplace(std::uint64_t key, const Value& v) {
    if ((size_ + 1) * 4 > keys_.size() * 3) rehash(keys_.size() * 2);
    std::size_t i = slot(key);
    while (keys_[i] != 0) {
      if (keys_[i] == key) return {&values_[i], false};
      i = (i + 1) & mask_;
    }
    keys_[i] = key;
    values_[i] = v;
    ++size_;
    return {&values_[i], true};
  }

  void clear() {
    std::fill(keys_.begin(), keys_.end(), 0);
    size_ = 0;
  }

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < keys_.size(); ++i)
      if (keys_[i] != 0) f(keys_[i], values_[i]);
  }

 private:
  static std::size_t capacity_for(std::size_t n) {
    std::size_t c = 16;
    while (c * 3 < n * 4) c *= 2;
    return c;
  }

  std::size_t slot(std::uint64_t key) const { return (key * 0x9e3779b97f4a7c15ULL) >> shift_; }

  void rehash(std::size_t cap) {
    std::vector<std::uint64_t> old_keys(cap, 0);
    std::vector<Value> old_values(cap);
    old_keys.swap(keys_);
    old_values.swap(values_);
    mask_ = cap - 1;
    shift_ = 64 - std::countr_zero(cap);
    size_ = 0;
    for (std::size_t i = 0; i < old_keys.size(); ++i) {
      if (old_keys[i] == 0) continue;
      std::size_t s = slot(old_keys[i]);
      while (keys_[s] != 0) s = (s + 1) & mask_;
      keys_[s] = old_keys[i];
      values_[s] = old_values[i];
      ++size_;
    }
  }

  std::vector<std::uint64_t> keys_;
  std::vector<Value> values_;
  std::size_t mask_ = 0;
  int shift_ = 64;
  std::size_t size_ = 0;
};

}  // namespace rwb
