#pragma once

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace rwb {

// Count, mean and central moment sums M2..M4 with pairwise merge
// (Pebay 2008). Merge is associative up to rounding.
class SummaryStats {
 public:
  void add(double x) {
    SummaryStats one;
    one.n_ = 1;
    one.mean_ = x;
    merge(one);
  }

  void merge(const SummaryStats& b) {
    if (b.n_ == 0) return;
    if (n_ == 0) {
      *this = b;
      return;
    }
    const double na = double(n_), nb = double(b.n_), n = na + nb;
    const double delta = b.mean_ - mean_;
    const double d2 = delta * delta, d3 = d2 * delta, d4 = d2 * d2;
    const double m2 = m2_ + b.m2_ + d2 * na * nb / n;
    const double m3 = m3_ + b.m3_ + d3 * na * nb * (na - nb) / (n * n) + 3.0 * delta * (na * b.m2_ - nb * m2_) / n;
    const double m4 = m4_ + b.m4_ + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                      6.0 * d2 * (na * na * b.m2_ + nb * nb * m2_) / (n * n) + 4.0 * delta * (na * b.m3_ - nb * m3_) / n;
    mean_ += delta * nb / n;
    m2_ = m2;
    m3_ = m3;
    m4_ = m4;
    n_ += b.n_;
  }

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double m2() const { return m2_; }
  double m3() const { return m3_; }
  double m4() const { return m4_; }
  // Unbiased sample variance.
  double variance() const { return n_ > 1 ? m2_ / double(n_ - 1) : 0.0; }
  double sd() const { return std::sqrt(variance()); }
  double sem() const { return n_ > 0 ? sd() / std::sqrt(double(n_)) : 0.0; }
  double skewness() const { return m2_ > 0 ? std::sqrt(double(n_)) * m3_ / std::pow(m2_, 1.5) : 0.0; }
  double excess_kurtosis() const { return m2_ > 0 ? double(n_) * m4_ / (m2_ * m2_) - 3.0 : 0.0; }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0, m2_ = 0.0, m3_ = 0.0, m4_ = 0.0;
};

inline SummaryStats summarize(const std::vector<double>& xs) {
  SummaryStats s;
  for (double x : xs) s.add(x);
  return s;
}

struct VarianceEstimate {
  double variance = 0.0;
  // Block jackknife standard error of the variance.
  double se = 0.0;
  double lo = 0.0, hi = 0.0;
};

// Sample variance with a delete-one-block jackknife standard error; blocks
// are consecutive runs of replicas. CI is +-3 se.
inline VarianceEstimate jackknife_variance(const std::vector<double>& xs, int blocks = 20) {
  VarianceEstimate out;
  const std::size_t n = xs.size();
  if (n < 2) return out;
  blocks = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(blocks, 2)), n));
  std::vector<SummaryStats> part(blocks);
  for (std::size_t i = 0; i < n; ++i) part[i * blocks / n].add(xs[i]);
  SummaryStats all;
  for (const auto& p : part) all.merge(p);
  out.variance = all.variance();
  std::vector<double> loo(blocks);
  double mean = 0.0;
  for (int b = 0; b < blocks; ++b) {
    SummaryStats s;
    for (int c = 0; c < blocks; ++c)
      if (c != b) s.merge(part[c]);
    loo[b] = s.variance();
    mean += loo[b];
  }
  mean /= blocks;
  double ss = 0.0;
  for (double v : loo) ss += (v - mean) * (v - mean);
  out.se = std::sqrt(ss * (blocks - 1.0) / blocks);
  out.lo = out.variance - 3.0 * out.se;
  out.hi = out.variance + 3.0 * out.se;
  return out;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Kolmogorov-Smirnov distance between the empirical law of xs and N(0,1).
inline double ks_normal(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("ks_normal: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = double(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double f = normal_cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

// Goodness of fit of counts against probabilities.
inline ChiSquareResult chi_square_gof(const std::vector<std::uint64_t>& counts, const std::vector<double>& probs) {
  if (counts.size() != probs.size() || counts.size() < 2) throw std::invalid_argument("chi_square_gof: size mismatch");
  double total = 0.0;
  for (auto c : counts) total += double(c);
  ChiSquareResult r;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    double e = total * probs[i];
    r.statistic += (counts[i] - e) * (counts[i] - e) / e;
  }
  r.dof = static_cast<int>(counts.size()) - 1;
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.dof), r.statistic));
  return r;
}

// Two-sample homogeneity test on a contingency table with two rows.
inline ChiSquareResult chi_square_two_sample(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("chi_square_two_sample: size mismatch");
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += double(a[i]);
    nb += double(b[i]);
  }
  ChiSquareResult r;
  int cells = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double col = double(a[i] + b[i]);
    if (col == 0.0) continue;
    ++cells;
    double ea = col * na / (na + nb), eb = col * nb / (na + nb);
    r.statistic += (a[i] - ea) * (a[i] - ea) / ea + (b[i] - eb) * (b[i] - eb) / eb;
  }
  r.dof = cells - 1;
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.dof), r.statistic));
  return r;
}

// Sample autocorrelation at `lag` pooled over independent series of equal
// length, using the pooled mean and variance.
struct Autocorrelation {
  double value = 0.0;
  double se = 0.0;
  std::uint64_t pairs = 0;
};

// The standard error uses the spread of the lagged products, so it stays
// valid for uncorrelated but heteroscedastic series such as martingale
// differences.
inline Autocorrelation pooled_autocorrelation(const std::vector<std::vector<double>>& series, std::size_t lag) {
  SummaryStats all;
  for (const auto& s : series)
    for (double x : s) all.add(x);
  const double mu = all.mean(), var = all.variance();
  Autocorrelation out;
  SummaryStats prod;
  for (const auto& s : series)
    for (std::size_t i = 0; i + lag < s.size(); ++i) prod.add((s[i] - mu) * (s[i + lag] - mu));
  out.pairs = prod.count();
  if (out.pairs == 0 || var <= 0.0) return out;
  out.value = prod.mean() / var;
  out.se = out.pairs > 1 ? prod.sem() / var : 1.0;
  return out;
}

}  // namespace rwb
