#pragma once

// Path-wise Doob decomposition of the boundary size, the dyadic splitting
// error, and subadditive-limit brackets.
//
// At time n, with k ranging over first visits k <= n-1:
//   A_n = sum_k rho_{V_k},
//   X_n = sum_k P_{S_n - S_k}(V'_k not contained in R_inf),
// where V_k is the first-visit mask of S_k and V'_k its still-unvisited
// neighbors at time n. M_n = X_n - A_n is a martingale and
// E_n = |dR_n| - X_n.

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rwb/green.hpp"
#include "rwb/hitting.hpp"
#include "rwb/range.hpp"
#include "rwb/walk.hpp"

namespace rwb {

struct TracePoint {
  std::uint64_t n = 0;
  std::uint64_t boundary = 0;
  double A = 0.0;
  double X = 0.0;
  double M = 0.0;
  double E = 0.0;
  double X_error_bound = 0.0;
};

struct DecompositionTrace {
  std::vector<TracePoint> points;
};

struct TraceOptions {
  // Throw GreenCoverageError instead of applying the far-field bound.
  bool strict = false;
};

template <int D>
double X_at(const RangeState<D>& st, const MaskCover<D>& cover, const TraceOptions& opt, double& err) {
  const std::uint64_t n = st.time();
  const Point<D> here = st.position();
  double x = 0.0;
  err = 0.0;
  int required = 0;
  for (std::uint64_t key : st.order()) {
    const SiteRecord& r = st.record(key);
    if (r.first_visit >= n) break;
    if (r.open.empty()) continue;
    Point<D> z = here - KeyPacking<D>::unpack(key);
    double bound = 0.0;
    double c = cover.cover_or_far(z, r.open, bound);
    if (bound > 0.0) required = std::max(required, sup_norm(z) + 1);
    x += 1.0 - c;
    err += bound;
  }
  if (opt.strict && required > 0) throw GreenCoverageError(required, cover.radius());
  return x;
}

template <int D>
DecompositionTrace trace(const WalkPath<D>& path, const std::vector<std::uint64_t>& checkpoints, const MaskCover<D>& cover,
                         const TraceOptions& opt = {}) {
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] > path.length()) throw std::invalid_argument("trace: checkpoint beyond path length");
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1]) throw std::invalid_argument("trace: checkpoints must increase");
  }
  DecompositionTrace out;
  RangeState<D> st(path.length() + 1);
  double A = 0.0;
  std::size_t next = 0;
  for (std::uint64_t t = 0;; ++t) {
    while (next < checkpoints.size() && checkpoints[next] == t) {
      TracePoint p;
      p.n = t;
      p.boundary = st.boundary_size();
      p.A = A;
      p.X = X_at(st, cover, opt, p.X_error_bound);
      p.M = p.X - p.A;
      p.E = static_cast<double>(p.boundary) - p.X;
      out.points.push_back(p);
      ++next;
    }
    if (next == checkpoints.size() || t == path.length()) break;
    if (st.last_step_new()) A += cover.rho(st.record(st.position_key()).first_mask);
    st.extend(path.steps[t]);
  }
  return out;
}

// A_n recomputed from the first n-1 steps only.
template <int D>
double predictable_part(const WalkPath<D>& path, std::uint64_t n, const MaskCover<D>& cover) {
  if (n == 0) return 0.0;
  RangeState<D> st = range_of(path, 0, n - 1);
  double a = 0.0;
  const auto& c = st.partition_counts();
  for (std::uint32_t m = 0; m < c.size(); ++m) a += cover.rho(NeighborMask{m}) * static_cast<double>(c[m]);
  return a;
}

struct DyadicError {
  std::int64_t error = 0;
  std::uint64_t bound = 0;
};

// error = sum of |dR| over the 2^L level-L strands minus |dR(0,n)|,
// bound = sum of the splitting functionals over levels 1..L.
template <int D>
DyadicError dyadic_error(const WalkPath<D>& path, std::size_t n, int L) {
  if (L < 0 || (std::size_t{1} << L) > n) throw std::invalid_argument("dyadic_error: need 2^L <= n");
  if (n > path.length()) throw std::invalid_argument("dyadic_error: n exceeds path length");
  DyadicError out;
  const std::int64_t whole = static_cast<std::int64_t>(range_of(path, 0, n).boundary_size());
  std::int64_t parts = 0;
  const std::size_t strands = std::size_t{1} << L;
  const unsigned __int128 N = n;
  for (std::size_t i = 0; i < strands; ++i) {
    std::size_t a = static_cast<std::size_t>(N * i / strands), b = static_cast<std::size_t>(N * (i + 1) / strands);
    parts += static_cast<std::int64_t>(range_of(path, a, b).boundary_size());
  }
  out.error = parts - whole;
  auto pos = path.positions();
  for (int l = 1; l <= L; ++l)
    for (std::size_t k = 1; k <= (std::size_t{1} << (l - 1)); ++k) out.bound += dyadic_Z<D>(pos, n, l, k);
  return out;
}

// psi_3(n) = sqrt(n), psi_4(n) = log n, psi_d(n) = 1 for d >= 5.
inline double psi(int d, double n) {
  if (d == 3) return std::sqrt(n);
  if (d == 4) return std::log(n);
  if (d >= 5) return 1.0;
  throw std::invalid_argument("psi: d must be at least 3");
}

// b_n = c n^alpha (log n)^beta.
struct GrowthForm {
  double c = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  double operator()(double n) const {
    if (c == 0.0) return 0.0;
    double v = c * std::pow(n, alpha);
    return beta == 0.0 ? v : v * std::pow(std::log(n), beta);
  }
};

// Upper bound on sum_{k > m} b_k / (k(k+1)): explicit terms up to a cutoff
// plus the integral of c x^{alpha-2} (log x)^beta beyond it.
class HammersleyTail {
 public:
  HammersleyTail(GrowthForm b, std::uint64_t max_m) : b_(b) {
    if (b.c < 0.0) throw std::domain_error("growth form must be nonnegative");
    if (b.c > 0.0 && !(b.alpha < 1.0)) throw std::domain_error("growth form is not summable against 1/(k(k+1))");
    if (b.beta < 0.0) throw std::domain_error("growth form must be nondecreasing");
    double start = b.beta > 0.0 ? std::exp(b.beta / (2.0 - b.alpha)) + 1.0 : 1.0;
    cutoff_ = std::max<std::uint64_t>(2 * max_m + 16, static_cast<std::uint64_t>(std::ceil(start)));
    integral_ = 0.0;
    if (b.c > 0.0) {
      double a = 1.0 - b.alpha;
      integral_ = b.c * boost::math::tgamma(b.beta + 1.0, a * std::log(static_cast<double>(cutoff_))) / std::pow(a, b.beta + 1.0);
    }
    suffix_.assign(cutoff_ + 2, 0.0);
    double acc = integral_;
    for (std::uint64_t k = cutoff_; k >= 1; --k) {
      suffix_[k] = acc;  // sum over j > k
      acc += b_(double(k)) / (double(k) * double(k + 1));
    }
    suffix_[0] = acc;
  }

  // Upper bound on sum_{k > m} b_k / (k(k+1)).
  double tail_after(std::uint64_t m) const {
    if (m > cutoff_) throw std::out_of_range("HammersleyTail: m beyond precomputed range");
    return suffix_[m];
  }

  const GrowthForm& form() const { return b_; }

 private:
  GrowthForm b_;
  std::uint64_t cutoff_ = 0;
  double integral_ = 0.0;
  std::vector<double> suffix_;
};

struct HammersleyBracket {
  std::uint64_t n = 0;
  double a_over_n = 0.0;
  // Bracket on a_n/n - lim a_k/k.
  double lower = 0.0;
  double upper = 0.0;

  // Implied bracket on the limit itself.
  double limit_lower() const { return a_over_n - upper; }
  double limit_upper() const { return a_over_n - lower; }
};

inline HammersleyBracket hammersley_bracket(const std::function<double(std::uint64_t)>& a, const HammersleyTail& b,
                                            const HammersleyTail& bprime, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("hammersley_bracket: n must be positive");
  HammersleyBracket out;
  out.n = n;
  out.a_over_n = a(n) / double(n);
  out.upper = -bprime.form()(double(n)) / double(n) + 4.0 * bprime.tail_after(2 * n);
  out.lower = b.form()(double(n)) / double(n) - 4.0 * b.tail_after(2 * n);
  return out;
}

inline HammersleyBracket hammersley_bracket(const std::function<double(std::uint64_t)>& a, GrowthForm b, GrowthForm bprime,
                                            std::uint64_t n) {
  return hammersley_bracket(a, HammersleyTail(b, n), HammersleyTail(bprime, n), n);
}

}  // namespace rwb
