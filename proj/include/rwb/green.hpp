#pragma once

// Lattice Green's function of simple random walk on Z^D (D >= 3).
//
// G(0,z) is evaluated through the continuous-time representation
//   G(0,z) = D * int_0^inf prod_j e^{-s} I_{|z_j|}(s) ds,
// with the substitution s = e^u and the trapezoid rule in u, which converges
// geometrically because the integrand is analytic in a strip around the real
// axis. Nodes with s beyond a cutoff are summed in closed form from the
// large-argument expansion of the scaled Bessel functions. Step halving is
// repeated until successive sums agree to the requested tolerance at every
// stored point.
//
// Values are stored only for canonical points (sorted absolute coordinates)
// with sup-norm at most R, indexed by the combinatorial number system.

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_bessel.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rwb/lattice.hpp"

namespace rwb {

class GreenConvergenceError : public std::runtime_error {
 public:
  GreenConvergenceError(double achieved, double requested)
      : std::runtime_error("green quadrature did not converge: achieved " + fmt(achieved) + ", requested " + fmt(requested)),
        achieved_(achieved),
        requested_(requested) {}
  double achieved() const { return achieved_; }
  double requested() const { return requested_; }

 private:
  static std::string fmt(double x) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(3) << x;
    return os.str();
  }
  double achieved_, requested_;
};

class GreenCoverageError : public std::out_of_range {
 public:
  GreenCoverageError(int required, int available)
      : std::out_of_range("green table radius " + std::to_string(available) + " too small, need " + std::to_string(required)),
        required_(required) {}
  int required_radius() const { return required_; }

 private:
  int required_;
};

struct GreenBuildOptions {
  double u_min = -40.0;
  double h0 = 0.5;
  int max_levels = 7;
  int series_terms = 10;
  // Nodes with s >= asym_factor * (R + 2)^2 use the large-argument expansion.
  double asym_factor = 30.0;
};

namespace detail {

inline double binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

// Calls f(canonical point) in index order: a_0 <= a_1 <= ... <= a_{D-1} <= R.
template <int D, class F>
void for_each_canonical(int R, F&& f) {
  Point<D> a{};
  auto rec = [&](auto&& self, int j, int maxa) -> void {
    for (int v = 0; v <= maxa; ++v) {
      a[j] = v;
      if (j == 0) {
        f(static_cast<const Point<D>&>(a));
      } else {
        self(self, j - 1, v);
      }
    }
  };
  rec(rec, D - 1, R);
}

template <int J>
void accumulate_products(const double* b, int maxa, double factor, double*& out) {
  if constexpr (J == 1) {
    for (int a = 0; a <= maxa; ++a) *out++ += factor * b[a];
  } else {
    for (int a = 0; a <= maxa; ++a) accumulate_products<J - 1>(b, a, factor * b[a], out);
  }
}

// q: coefficients of the partial product series over the outer coordinates.
// At the last coordinate, sums c_k * g_k with c = q * P_a, truncated at K.
template <int J>
void accumulate_tail(const std::vector<std::vector<double>>& P, const std::vector<double>& g, int maxa,
                     const std::vector<double>& q, double*& out) {
  const int K = static_cast<int>(g.size()) - 1;
  if constexpr (J == 1) {
    std::vector<double> r(K + 1, 0.0);
    for (int j = 0; j <= K; ++j)
      for (int i = 0; i + j <= K; ++i) r[j] += q[i] * g[i + j];
    for (int a = 0; a <= maxa; ++a) {
      double s = 0.0;
      for (int j = 0; j <= K; ++j) s += P[a][j] * r[j];
      *out++ = s;
    }
  } else {
    std::vector<double> next(K + 1);
    for (int a = 0; a <= maxa; ++a) {
      std::fill(next.begin(), next.end(), 0.0);
      for (int i = 0; i <= K; ++i)
        for (int j = 0; i + j <= K; ++j) next[i + j] += q[i] * P[a][j];
      accumulate_tail<J - 1>(P, g, a, next, out);
    }
  }
}

inline void scaled_bessel_array(int nmax, double s, double* out) {
  static const bool handler_off = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)handler_off;
  if (gsl_sf_bessel_In_scaled_array(0, nmax, s, out) == GSL_SUCCESS) return;
  for (int n = 0; n <= nmax; ++n) {
    gsl_sf_result r;
    int status = gsl_sf_bessel_In_scaled_e(n, s, &r);
    if (status == GSL_EUNDRFLW) {
      out[n] = 0.0;
    } else if (status != GSL_SUCCESS) {
      throw std::runtime_error("bessel evaluation failed at order " + std::to_string(n) + ", s=" + std::to_string(s));
    } else {
      out[n] = r.val;
    }
  }
}

}  // namespace detail

template <int D>
class GreenTable {
  static_assert(D >= 3, "simple random walk is recurrent for d < 3");

 public:
  static constexpr int dim = D;

  GreenTable() = default;
  GreenTable(int radius, double tol, double eps, std::vector<double> values)
      : radius_(radius), tol_(tol), eps_(eps), values_(std::move(values)) {
    if (values_.size() != size_for(radius_)) throw std::invalid_argument("green table size mismatch");
    init_index();
    fit_far_constant();
  }

  static std::size_t size_for(int R) { return static_cast<std::size_t>(detail::binomial(R + D, D)); }

  int radius() const { return radius_; }
  double tol() const { return tol_; }
  double eps() const { return eps_; }
  double g00() const { return values_.at(0); }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& raw() const { return values_; }

  bool covers(const Point<D>& z) const { return sup_norm(z) <= radius_; }

  double operator()(const Point<D>& z) const {
    Point<D> a = canonical(z);
    if (a[D - 1] > radius_) throw GreenCoverageError(a[D - 1], radius_);
    return values_[index_sorted(a)];
  }

  // Value or NaN when outside the table.
  double get_or_nan(const Point<D>& z) const {
    Point<D> a = canonical(z);
    if (a[D - 1] > radius_) return std::numeric_limits<double>::quiet_NaN();
    return values_[index_sorted(a)];
  }

  double at_index(std::size_t i) const { return values_[i]; }

  // G(0,z) <= far_constant() * |z|^{2-D} for |z| beyond the fitted shell.
  double far_constant() const { return far_k_; }
  double far_bound(double r) const { return far_k_ * std::pow(r, 2.0 - D); }

  static Point<D> canonical(const Point<D>& z) {
    Point<D> a;
    for (int j = 0; j < D; ++j) a[j] = std::abs(z[j]);
    std::sort(a.begin(), a.end());
    return a;
  }

  std::size_t index_sorted(const Point<D>& a) const {
    std::size_t idx = 0;
    for (int j = 0; j < D; ++j) idx += offsets_[j * (radius_ + 1) + a[j]];
    return idx;
  }

  // Stable content hash of (d, R, tol, values).
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](const void* p, std::size_t n) {
      auto c = static_cast<const unsigned char*>(p);
      for (std::size_t i = 0; i < n; ++i) h = (h ^ c[i]) * 1099511628211ULL;
    };
    int d = D;
    mix(&d, sizeof d);
    mix(&radius_, sizeof radius_);
    mix(&tol_, sizeof tol_);
    mix(values_.data(), values_.size() * sizeof(double));
    return h;
  }

 private:
  void init_index() {
    offsets_.assign(static_cast<std::size_t>(D) * (radius_ + 1), 0);
    for (int j = 0; j < D; ++j)
      for (int a = 0; a <= radius_; ++a)
        offsets_[j * (radius_ + 1) + a] = static_cast<std::size_t>(detail::binomial(a + j, j + 1));
  }

  void fit_far_constant() {
    far_k_ = 0.0;
    int inner = radius_ / 2;
    std::size_t idx = 0;
    detail::for_each_canonical<D>(radius_, [&](const Point<D>& a) {
      if (a[D - 1] >= std::max(inner, 1)) far_k_ = std::max(far_k_, values_[idx] * std::pow(norm(a), D - 2.0));
      ++idx;
    });
    far_k_ *= 1.01;
  }

  int radius_ = 0;
  double tol_ = 0.0;
  double eps_ = 0.0;
  std::vector<double> values_;
  std::vector<std::size_t> offsets_;
  double far_k_ = 0.0;
};

template <int D>
GreenTable<D> build_green_table(int R, double tol, const GreenBuildOptions& opt = {}) {
  if (R < 0) throw std::invalid_argument("radius must be nonnegative");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const int K = opt.series_terms;
  const std::size_t N = GreenTable<D>::size_for(R);

  // Per-order expansion coefficients (-1)^k a_k(nu).
  std::vector<std::vector<double>> P(R + 1, std::vector<double>(K + 1));
  for (int nu = 0; nu <= R; ++nu) {
    double a = 1.0;
    P[nu][0] = 1.0;
    for (int k = 1; k <= K; ++k) {
      a *= (4.0 * nu * nu - (2.0 * k - 1) * (2.0 * k - 1)) / (8.0 * k);
      P[nu][k] = (k % 2 ? -a : a);
    }
  }

  const double s_asym = opt.asym_factor * (R + 2.0) * (R + 2.0);
  const int n0 = static_cast<int>(std::ceil((std::log(s_asym) - opt.u_min) / opt.h0));
  const double u_cut = opt.u_min + n0 * opt.h0;
  const double pref = std::pow(2.0 * std::numbers::pi, -D / 2.0);

  std::vector<double> node_sum(N, 0.0), tail(N), prev(N), cur(N);
  std::vector<double> bess(R + 1);

  auto add_node = [&](double u) {
    double s = std::exp(u);
    detail::scaled_bessel_array(R, s, bess.data());
    double* out = node_sum.data();
    detail::accumulate_products<D>(bess.data(), R, s, out);
  };
  auto evaluate = [&](double h, std::vector<double>& T) {
    std::vector<double> g(K + 1);
    for (int k = 0; k <= K; ++k) {
      double beta = 1.0 - D / 2.0 - k;
      g[k] = pref * std::exp(u_cut * beta) / (1.0 - std::exp(h * beta));
    }
    std::vector<double> q(K + 1, 0.0);
    q[0] = 1.0;
    double* out = tail.data();
    detail::accumulate_tail<D>(P, g, R, q, out);
    for (std::size_t i = 0; i < N; ++i) T[i] = D * h * (node_sum[i] + tail[i]);
  };

  for (int i = 0; i < n0; ++i) add_node(opt.u_min + i * opt.h0);
  evaluate(opt.h0, prev);

  double h = opt.h0;
  double err = std::numeric_limits<double>::infinity();
  int nodes = n0;
  for (int level = 1; level <= opt.max_levels; ++level) {
    h /= 2.0;
    for (int i = 0; i < nodes; ++i) add_node(opt.u_min + (2 * i + 1) * h);
    nodes *= 2;
    evaluate(h, cur);
    err = 0.0;
    for (std::size_t i = 0; i < N; ++i) err = std::max(err, std::abs(cur[i] - prev[i]));
    prev.swap(cur);
    if (err <= tol) return GreenTable<D>(R, tol, tol, std::move(prev));
  }
  throw GreenConvergenceError(err, tol);
}

// ---------------------------------------------------------------------------
// Return probabilities and truncated Green's function.

// p[m] = P(S_m = 0) for m = 0..m_max, by splitting steps between one
// coordinate and the remaining D-1.
inline std::vector<double> return_probabilities(int d, int m_max) {
  if (d < 1 || m_max < 0) throw std::invalid_argument("return_probabilities: bad arguments");
  std::vector<double> lf(m_max + 1, 0.0);
  for (int i = 1; i <= m_max; ++i) lf[i] = lf[i - 1] + std::log(static_cast<double>(i));
  std::vector<double> p1(m_max + 1, 0.0);
  for (int m = 0; m <= m_max; m += 2) p1[m] = std::exp(lf[m] - 2 * lf[m / 2] - m * std::log(2.0));
  std::vector<double> pk = p1;
  for (int k = 2; k <= d; ++k) {
    const double la = std::log(1.0 / k), lb = std::log((k - 1.0) / k);
    std::vector<double> next(m_max + 1, 0.0);
    for (int m = 0; m <= m_max; m += 2) {
      double s = 0.0;
      for (int c = 0; c <= m; c += 2) {
        if (pk[m - c] == 0.0) continue;
        s += std::exp(lf[m] - lf[c] - lf[m - c] + c * la + (m - c) * lb) * p1[c] * pk[m - c];
      }
      next[m] = s;
    }
    pk.swap(next);
  }
  return pk;
}

// Sum of p(m), m <= 2J, plus the tail from p(2j) ~ 2 (d / (4 pi j))^{d/2}
// integrated from J + 1/2. Returns {partial, tail}.
inline std::pair<double, double> green_origin_partial_sum(int d, int J) {
  auto p = return_probabilities(d, 2 * J);
  double s = 0.0;
  for (double v : p) s += v;
  double c = 2.0 * std::pow(d / (4.0 * std::numbers::pi), d / 2.0);
  double tail = c * std::pow(J + 0.5, 1.0 - d / 2.0) / (d / 2.0 - 1.0);
  return {s, tail};
}

// sum_z G_n(0,z)^2 = sum_{m=0}^{2n} (min(m, 2n - m) + 1) p(m).
inline double bubble_sum(int d, int n) {
  auto p = return_probabilities(d, 2 * n);
  double s = 0.0;
  for (int m = 0; m <= 2 * n; ++m) s += (std::min(m, 2 * n - m) + 1.0) * p[m];
  return s;
}

template <int D>
class TruncatedGreenTable {
 public:
  TruncatedGreenTable(int n, int box) : n_(n), box_(box), values_(cells(box), 0.0) {}

  int n() const { return n_; }
  int box() const { return box_; }

  double operator()(const Point<D>& z) const {
    if (sup_norm(z) > box_) return 0.0;
    return values_[index(z)];
  }

  double sum_of_squares() const {
    double s = 0.0;
    for_each_orthant([&](const Point<D>& a, std::size_t i) {
      double mult = 1.0;
      for (int j = 0; j < D; ++j) mult *= (a[j] == 0 ? 1.0 : 2.0);
      s += mult * values_[i] * values_[i];
    });
    return s;
  }

  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  std::size_t index(const Point<D>& z) const {
    std::size_t i = 0;
    for (int j = D - 1; j >= 0; --j) i = i * (box_ + 1) + std::abs(z[j]);
    return i;
  }

  template <class F>
  void for_each_orthant(F&& f) const {
    Point<D> a{};
    for (std::size_t i = 0; i < values_.size(); ++i) {
      std::size_t r = i;
      for (int j = 0; j < D; ++j) {
        a[j] = static_cast<int>(r % (box_ + 1));
        r /= (box_ + 1);
      }
      f(static_cast<const Point<D>&>(a), i);
    }
  }

 private:
  static std::size_t cells(int box) {
    std::size_t c = 1;
    for (int j = 0; j < D; ++j) c *= static_cast<std::size_t>(box + 1);
    return c;
  }

  int n_, box_;
  std::vector<double> values_;
};

// G_n(0,z) = sum_{k<=n} P(S_k = z). The law of S_k is symmetric under sign
// flips, so it is propagated on the nonnegative orthant only, reflecting
// through the coordinate hyperplanes.
template <int D>
TruncatedGreenTable<D> truncated_green(int n, int box) {
  if (n < 0) throw std::invalid_argument("truncated_green: n must be nonnegative");
  if (box < n) throw std::invalid_argument("truncated_green: box " + std::to_string(box) + " smaller than horizon " + std::to_string(n));
  TruncatedGreenTable<D> out(n, box), law(n, box), next(n, box);
  law.data()[0] = 1.0;
  out.data()[0] = 1.0;
  const double w = 1.0 / (2 * D);
  std::array<std::size_t, D> stride{};
  stride[0] = 1;
  for (int j = 1; j < D; ++j) stride[j] = stride[j - 1] * (box + 1);
  for (int k = 1; k <= n; ++k) {
    const auto& L = law.data();
    auto& X = next.data();
    law.for_each_orthant([&](const Point<D>& a, std::size_t i) {
      if (l1_norm(a) > k || (l1_norm(a) - k) % 2 != 0) {
        X[i] = 0.0;
        return;
      }
      double s = 0.0;
      for (int j = 0; j < D; ++j) {
        double up = a[j] < box ? L[i + stride[j]] : 0.0;
        s += up + (a[j] > 0 ? L[i - stride[j]] : up);
      }
      X[i] = w * s;
    });
    law.data().swap(next.data());
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += law.data()[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence.

template <int D>
void save_text(const GreenTable<D>& g, std::ostream& os) {
  os << "# rwb-green d=" << D << " R=" << g.radius() << std::setprecision(17) << " tol=" << g.tol() << " eps=" << g.eps()
     << " g00=" << g.g00() << "\n";
  std::size_t idx = 0;
  detail::for_each_canonical<D>(g.radius(), [&](const Point<D>& a) {
    for (int j = 0; j < D; ++j) os << a[j] << ' ';
    os << g.at_index(idx++) << ' ' << g.eps() << '\n';
  });
}

template <int D>
GreenTable<D> load_text(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# rwb-green", 0) != 0) throw std::runtime_error("not a green table");
  int d = 0, R = -1;
  double tol = 0, eps = 0, g00 = 0;
  if (std::sscanf(line.c_str(), "# rwb-green d=%d R=%d tol=%lf eps=%lf g00=%lf", &d, &R, &tol, &eps, &g00) != 5)
    throw std::runtime_error("malformed green table header");
  if (d != D) throw std::runtime_error("green table dimension " + std::to_string(d) + " != " + std::to_string(D));
  std::vector<double> values(GreenTable<D>::size_for(R));
  GreenTable<D> probe(R, tol, eps, std::vector<double>(values.size(), 1.0));
  for (std::size_t n = 0; n < values.size(); ++n) {
    Point<D> z;
    double v, e;
    for (int j = 0; j < D; ++j) is >> z[j];
    if (!(is >> v >> e)) throw std::runtime_error("truncated green table");
    values[probe.index_sorted(GreenTable<D>::canonical(z))] = v;
  }
  return GreenTable<D>(R, tol, eps, std::move(values));
}

inline constexpr char kGreenMagic[8] = {'R', 'W', 'B', 'G', 'R', 'N', '1', '\0'};

template <int D>
void save_binary(const GreenTable<D>& g, std::ostream& os) {
  os.write(kGreenMagic, sizeof kGreenMagic);
  std::int32_t hdr[2] = {D, g.radius()};
  double f[3] = {g.tol(), g.eps(), g.g00()};
  std::uint64_t n = g.size();
  os.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  os.write(reinterpret_cast<const char*>(f), sizeof f);
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  os.write(reinterpret_cast<const char*>(g.raw().data()), static_cast<std::streamsize>(n * sizeof(double)));
}

template <int D>
GreenTable<D> load_binary(std::istream& is) {
  char magic[8];
  std::int32_t hdr[2];
  double f[3];
  std::uint64_t n;
  if (!is.read(magic, sizeof magic) || !std::equal(magic, magic + 8, kGreenMagic)) throw std::runtime_error("not a binary green table");
  is.read(reinterpret_cast<char*>(hdr), sizeof hdr);
  is.read(reinterpret_cast<char*>(f), sizeof f);
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!is || hdr[0] != D) throw std::runtime_error("green table header mismatch");
  if (n != GreenTable<D>::size_for(hdr[1])) throw std::runtime_error("green table size mismatch");
  std::vector<double> values(n);
  if (!is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(n * sizeof(double))))
    throw std::runtime_error("truncated green table");
  return GreenTable<D>(hdr[1], f[0], f[1], std::move(values));
}

inline std::string green_cache_name(int d, int R, double tol) {
  std::ostringstream os;
  os << "green_d" << d << "_R" << R << "_tol" << std::scientific << std::setprecision(2) << tol << ".bin";
  return os.str();
}

// Loads the table for (D, R, tol) from cache_dir, building and storing it
// when absent. An empty cache_dir disables caching.
template <int D>
GreenTable<D> load_or_build_green_table(const std::filesystem::path& cache_dir, int R, double tol, bool* built = nullptr) {
  if (built) *built = false;
  if (!cache_dir.empty()) {
    auto file = cache_dir / green_cache_name(D, R, tol);
    std::ifstream in(file, std::ios::binary);
    if (in) {
      try {
        return load_binary<D>(in);
      } catch (const std::exception&) {
      }
    }
  }
  auto g = build_green_table<D>(R, tol);
  if (built) *built = true;
  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    auto file = cache_dir / green_cache_name(D, R, tol);
    auto tmp = file;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      save_binary(g, out);
    }
    std::filesystem::rename(tmp, file);
  }
  return g;
}

}  // namespace rwb
