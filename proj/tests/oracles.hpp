#pragma once

// Brute-force recomputations straight from the set definitions. Slow and
// obvious on purpose: everything is std::set over coordinate vectors.

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_bessel.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <vector>

namespace oracle {

using Site = std::vector<int>;
using SiteSet = std::set<Site>;

// Direction i: coordinate i/2, sign + for even i.
inline Site add_dir(Site x, int i) {
  x[i / 2] += (i % 2 == 0) ? 1 : -1;
  return x;
}

inline Site sub(const Site& a, const Site& b) {
  Site r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline std::vector<Site> positions(const std::vector<std::uint8_t>& steps, int d) {
  std::vector<Site> out{Site(d, 0)};
  for (auto s : steps) out.push_back(add_dir(out.back(), s));
  return out;
}

inline SiteSet set_of(const std::vector<Site>& pos, std::size_t from, std::size_t to) {
  return SiteSet(pos.begin() + from, pos.begin() + to + 1);
}

inline std::size_t boundary(const SiteSet& r, int d) {
  std::size_t c = 0;
  for (const auto& x : r) {
    bool open = false;
    for (int i = 0; i < 2 * d; ++i) open = open || !r.count(add_dir(x, i));
    c += open;
  }
  return c;
}

// {x : x in A, x + v in B for some v in V_0 u {0}} style "plus" set.
inline SiteSet plus(const SiteSet& a, int d) {
  SiteSet out = a;
  for (const auto& x : a)
    for (int i = 0; i < 2 * d; ++i) out.insert(add_dir(x, i));
  return out;
}

inline std::size_t intersection(const SiteSet& a, const SiteSet& b) {
  std::size_t c = 0;
  for (const auto& x : a) c += b.count(x);
  return c;
}

inline SiteSet translate(const SiteSet& a, const Site& by) {
  SiteSet out;
  for (const auto& x : a) out.insert(sub(x, by));
  return out;
}

// First-visit mask of S_k: directions v with S_k + v not in {S_0..S_{k-1}}.
// Returns -1 when S_k was visited before k.
inline int first_mask(const std::vector<Site>& pos, std::size_t k, int d) {
  SiteSet before = k ? set_of(pos, 0, k - 1) : SiteSet{};
  if (before.count(pos[k])) return -1;
  int m = 0;
  for (int i = 0; i < 2 * d; ++i)
    if (!before.count(add_dir(pos[k], i))) m |= 1 << i;
  return m;
}

// |R_{n,V}| per raw mask.
inline std::map<int, std::uint64_t> partition(const std::vector<Site>& pos, std::size_t n, int d) {
  std::map<int, std::uint64_t> out;
  for (std::size_t k = 0; k <= n; ++k) {
    int m = first_mask(pos, k, d);
    if (m >= 0) ++out[m];
  }
  return out;
}

// |dR_{n,V}|: I_{k,V} J_{k,n,V} with J = 1{S_k + V not in {S_k..S_n}}.
inline std::map<int, std::uint64_t> boundary_partition(const std::vector<Site>& pos, std::size_t n, int d) {
  std::map<int, std::uint64_t> out;
  for (std::size_t k = 0; k <= n; ++k) {
    int m = first_mask(pos, k, d);
    if (m < 0) continue;
    SiteSet future = set_of(pos, k, n);
    bool j = false;
    for (int i = 0; i < 2 * d; ++i)
      if ((m >> i) & 1) j = j || !future.count(add_dir(pos[k], i));
    if (j) ++out[m];
  }
  return out;
}

// #{k <= n : S_k not in R_{k-1}, S_i not in S_k + U for i <= k-1}.
inline std::uint64_t bar_range(const std::vector<Site>& pos, std::size_t n, int U, int d) {
  std::uint64_t c = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    int m = first_mask(pos, k, d);
    if (m >= 0 && (m & U) == U) ++c;
  }
  return c;
}

// sum_{i=0}^{n-1} 1{S_{i+k} not in S_i + (V u {0}), k = 1..n-i}.
inline std::uint64_t underline_range(const std::vector<Site>& pos, std::size_t n, int V, int d) {
  std::uint64_t c = 0;
  for (std::size_t i = 0; i < n; ++i) {
    SiteSet bad{pos[i]};
    for (int e = 0; e < 2 * d; ++e)
      if ((V >> e) & 1) bad.insert(add_dir(pos[i], e));
    bool z = true;
    for (std::size_t k = i + 1; k <= n; ++k) z = z && !bad.count(pos[k]);
    c += z;
  }
  return c;
}

// Z(n, m) from translated sets.
inline std::uint64_t Z(const std::vector<Site>& pos, std::size_t n, std::size_t m, int d) {
  SiteSet back = translate(set_of(pos, 0, n), pos[n]);
  SiteSet fwd = translate(set_of(pos, n, n + m), pos[n]);
  return intersection(back, plus(fwd, d)) + intersection(plus(back, d), fwd);
}

// Signed permutation action on a direction mask; min over the group.
inline int canonical_mask(int mask, int d) {
  std::vector<int> perm(d);
  for (int i = 0; i < d; ++i) perm[i] = i;
  int best = mask;
  do {
    for (int signs = 0; signs < (1 << d); ++signs) {
      int img = 0;
      for (int i = 0; i < 2 * d; ++i) {
        if (!((mask >> i) & 1)) continue;
        int coord = i / 2, sign = i % 2;
        int nc = perm[coord];
        int ns = sign ^ ((signs >> coord) & 1);
        img |= 1 << (2 * nc + ns);
      }
      best = std::min(best, img);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// G(0, z) = d * int_0^inf prod_j e^{-s} I_{|z_j|}(s) ds by adaptive
// Gauss-Kronrod on [0, inf).
inline double green_integral(const std::vector<int>& z, double epsabs = 1e-12) {
  struct Ctx {
    std::vector<int> z;
  } ctx{z};
  gsl_function f;
  f.function = [](double s, void* p) {
    const auto* c = static_cast<const Ctx*>(p);
    double v = 1.0;
    for (int a : c->z) v *= gsl_sf_bessel_In_scaled(std::abs(a), s);
    return v;
  };
  f.params = &ctx;
  gsl_set_error_handler_off();
  gsl_integration_workspace* w = gsl_integration_workspace_alloc(4000);
  double result = 0.0, err = 0.0;
  gsl_integration_qagiu(&f, 0.0, epsabs, 1e-12, 4000, w, &result, &err);
  gsl_integration_workspace_free(w);
  return double(z.size()) * result;
}

// P(S_m = z) for all z by convolving m one-step laws; returns sum_{k<=n}.
inline std::map<Site, double> truncated_green(int d, int n) {
  std::map<Site, double> cur{{Site(d, 0), 1.0}}, total{{Site(d, 0), 1.0}};
  for (int k = 1; k <= n; ++k) {
    std::map<Site, double> next;
    for (const auto& [x, p] : cur)
      for (int i = 0; i < 2 * d; ++i) next[add_dir(x, i)] += p / (2 * d);
    cur.swap(next);
    for (const auto& [x, p] : cur) total[x] += p;
  }
  return total;
}

// Exhaustive truncated cover probability: P_z(Lambda within {S_0..S_T}).
inline double cover_truncated(const Site& z, const SiteSet& lambda, int T, int d) {
  std::function<double(Site, SiteSet, int)> rec = [&](Site x, SiteSet left, int t) -> double {
    left.erase(x);
    if (left.empty()) return 1.0;
    if (t == 0) return 0.0;
    double s = 0.0;
    for (int i = 0; i < 2 * d; ++i) s += rec(add_dir(x, i), left, t - 1);
    return s / (2 * d);
  };
  return rec(z, lambda, T);
}

}  // namespace oracle
