#pragma once

// Monte Carlo drivers and exhaustive enumeration oracles.
//
// Replica r of a run draws from Rng::for_replica(seed, r) and results are
// stored by replica index, so every output is independent of the number of
// worker threads.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rwb/decompose.hpp"
#include "rwb/green.hpp"
#include "rwb/hitting.hpp"
#include "rwb/range.hpp"
#include "rwb/rng.hpp"
#include "rwb/stats.hpp"
#include "rwb/walk.hpp"

namespace rwb {

template <class F>
auto run_replicas(std::uint64_t count, int workers, F&& f) -> std::vector<decltype(f(std::uint64_t{}))> {
  using R = decltype(f(std::uint64_t{}));
  std::vector<R> out(count);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    while (true) {
      std::uint64_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        out[i] = f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  workers = std::max(1, workers);
  if (workers == 1 || count < 2) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

struct ExperimentConfig {
  int d = 3;
  std::vector<std::uint64_t> n_grid{1024};
  std::uint64_t replicas = 100;
  // Replicas for the time-average estimator of nu; 0 means `replicas`.
  std::uint64_t direct_replicas = 0;
  std::uint64_t seed = 1;
  int green_radius = 64;
  double tol = 1e-8;
  std::uint64_t horizon = 10000;
  int workers = 1;

  void validate() const {
    if (replicas < 1) throw std::invalid_argument("replicas must be at least 1");
    if (n_grid.empty()) throw std::invalid_argument("n grid must be nonempty");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
      if (n_grid[i] <= n_grid[i - 1]) throw std::invalid_argument("n grid must be strictly increasing");
  }
};

// ---------------------------------------------------------------------------
// Functionals of a path.

enum class FunctionalKind { range, boundary, range_V, boundary_V, range_class, boundary_class, bar_range, underline_range, M, E };

struct Functional {
  FunctionalKind kind = FunctionalKind::boundary;
  NeighborMask mask;

  bool needs_green() const { return kind == FunctionalKind::M || kind == FunctionalKind::E; }

  std::string name() const {
    static const char* names[] = {"range", "boundary", "range_V", "boundary_V", "range_class", "boundary_class",
                                  "bar_range", "underline_range", "M", "E"};
    std::string s = names[static_cast<int>(kind)];
    switch (kind) {
      case FunctionalKind::range_V:
      case FunctionalKind::boundary_V:
      case FunctionalKind::range_class:
      case FunctionalKind::boundary_class:
      case FunctionalKind::bar_range:
      case FunctionalKind::underline_range:
        s += ":" + std::to_string(mask.bits);
        break;
      default:
        break;
    }
    return s;
  }

  // "boundary", "range", "M", "E", or "<kind>:<mask bits>" for the
  // mask-indexed kinds.
  static Functional parse(const std::string& text, int d) {
    auto colon = text.find(':');
    std::string head = text.substr(0, colon);
    Functional f;
    static const std::pair<const char*, FunctionalKind> table[] = {
        {"range", FunctionalKind::range},
        {"boundary", FunctionalKind::boundary},
        {"range_V", FunctionalKind::range_V},
        {"boundary_V", FunctionalKind::boundary_V},
        {"range_class", FunctionalKind::range_class},
        {"boundary_class", FunctionalKind::boundary_class},
        {"bar_range", FunctionalKind::bar_range},
        {"underline_range", FunctionalKind::underline_range},
        {"M", FunctionalKind::M},
        {"E", FunctionalKind::E},
    };
    bool found = false;
    for (const auto& [name, kind] : table)
      if (head == name) {
        f.kind = kind;
        found = true;
      }
    if (!found) throw std::invalid_argument("unknown functional '" + text + "'");
    bool masked = f.name().find(':') != std::string::npos;
    if (masked != (colon != std::string::npos)) throw std::invalid_argument("functional '" + head + "' mask argument mismatch");
    if (masked) {
      unsigned long bits = std::stoul(text.substr(colon + 1));
      f.mask = NeighborMask{static_cast<std::uint32_t>(bits)};
      if (!f.mask.valid_for(d)) throw std::invalid_argument("mask " + std::to_string(bits) + " invalid for d=" + std::to_string(d));
      if (f.kind == FunctionalKind::underline_range && f.mask.empty()) throw std::invalid_argument("underline_range needs a nonempty mask");
    }
    return f;
  }
};

template <int D>
std::uint64_t class_sum(const std::vector<std::uint64_t>& per_mask, NeighborMask V) {
  const auto& table = ClassTable<D>::instance();
  const IsometryClass c = table.of(V);
  std::uint64_t s = 0;
  for (std::uint32_t m = 0; m < per_mask.size(); ++m)
    if (table.of(NeighborMask{m}) == c) s += per_mask[m];
  return s;
}

// Value of a path functional at time n (no Green's function needed).
template <int D>
std::int64_t evaluate_functional(const WalkPath<D>& path, std::size_t n, const Functional& f) {
  switch (f.kind) {
    case FunctionalKind::boundary_V:
      return static_cast<std::int64_t>(boundary_partition(path, n)[f.mask.bits]);
    case FunctionalKind::boundary_class:
      return static_cast<std::int64_t>(class_sum<D>(boundary_partition(path, n), f.mask));
    case FunctionalKind::underline_range:
      return static_cast<std::int64_t>(underline_range(path, n, f.mask));
    case FunctionalKind::M:
    case FunctionalKind::E:
      throw std::invalid_argument("functional " + f.name() + " needs a green table");
    default:
      break;
  }
  RangeState<D> st = range_of(path, 0, n);
  switch (f.kind) {
    case FunctionalKind::range:
      return static_cast<std::int64_t>(st.range_size());
    case FunctionalKind::boundary:
      return static_cast<std::int64_t>(st.boundary_size());
    case FunctionalKind::range_V:
      return static_cast<std::int64_t>(st.partition_counts()[f.mask.bits]);
    case FunctionalKind::range_class:
      return static_cast<std::int64_t>(class_sum<D>(st.partition_counts(), f.mask));
    case FunctionalKind::bar_range:
      return static_cast<std::int64_t>(bar_range(st, f.mask));
    default:
      throw std::logic_error("unhandled functional");
  }
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration.

inline constexpr std::uint64_t kEnumerationBudget = 1679616;  // 6^8

struct ExactDistribution {
  std::uint64_t denominator = 1;
  std::map<std::int64_t, std::uint64_t> counts;

  double probability(std::int64_t v) const {
    auto it = counts.find(v);
    return it == counts.end() ? 0.0 : double(it->second) / double(denominator);
  }

  // Reduced fraction "p/q" for count/denominator.
  std::string probability_string(std::int64_t v) const {
    auto it = counts.find(v);
    std::uint64_t num = it == counts.end() ? 0 : it->second;
    return fraction(num, denominator);
  }

  // Mean as a reduced fraction {numerator, denominator}.
  std::pair<std::int64_t, std::uint64_t> mean_fraction() const {
    std::int64_t num = 0;
    for (const auto& [v, c] : counts) num += v * static_cast<std::int64_t>(c);
    std::uint64_t g = std::gcd(static_cast<std::uint64_t>(num < 0 ? -num : num), denominator);
    if (g == 0) g = 1;
    return {num / static_cast<std::int64_t>(g), denominator / g};
  }

  double mean() const {
    auto [p, q] = mean_fraction();
    return double(p) / double(q);
  }

  static std::string fraction(std::uint64_t num, std::uint64_t den) {
    std::uint64_t g = std::gcd(num, den);
    if (g == 0) g = 1;
    return std::to_string(num / g) + "/" + std::to_string(den / g);
  }

  friend bool operator==(const ExactDistribution&, const ExactDistribution&) = default;
};

// Calls f(path) for each of the (2D)^n step sequences.
template <int D, class F>
void for_each_path(int n, F&& f) {
  WalkPath<D> p;
  p.steps.assign(n, 0);
  while (true) {
    f(static_cast<const WalkPath<D>&>(p));
    int i = n - 1;
    while (i >= 0 && p.steps[i] == 2 * D - 1) p.steps[i--] = 0;
    if (i < 0) return;
    ++p.steps[i];
  }
}

inline std::uint64_t path_count(int d, int n) {
  std::uint64_t c = 1;
  for (int i = 0; i < n; ++i) {
    if (c > kEnumerationBudget) return c;
    c *= 2 * d;
  }
  return c;
}

template <int D>
ExactDistribution enumerate_exact(int n, const Functional& f, std::uint64_t budget = kEnumerationBudget) {
  if (n < 0) throw std::invalid_argument("enumerate_exact: n must be nonnegative");
  const std::uint64_t total = path_count(D, n);
  if (total > budget) throw std::invalid_argument("enumeration of (2d)^n = " + std::to_string(total) + " paths exceeds budget " + std::to_string(budget));
  ExactDistribution out;
  out.denominator = total;
  for_each_path<D>(n, [&](const WalkPath<D>& p) { ++out.counts[evaluate_functional(p, n, f)]; });
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo.

struct SimRow {
  std::uint64_t replica = 0;
  std::uint64_t n = 0;
  std::uint64_t range = 0;
  std::uint64_t boundary = 0;
  // |R_{n,V}| aggregated over the classes of ClassTable::representatives().
  std::vector<std::uint64_t> class_counts;
};

template <int D>
std::vector<SimRow> simulate_replica(const ExperimentConfig& cfg, std::uint64_t r) {
  Rng rng = Rng::for_replica(cfg.seed, r);
  const auto& reps = ClassTable<D>::instance().representatives();
  RangeState<D> st(cfg.n_grid.back() + 1);
  std::vector<SimRow> rows;
  std::size_t next = 0;
  for (std::uint64_t t = 0;; ++t) {
    while (next < cfg.n_grid.size() && cfg.n_grid[next] == t) {
      SimRow row{r, t, st.range_size(), st.boundary_size(), {}};
      for (auto rep : reps) row.class_counts.push_back(class_sum<D>(st.partition_counts(), rep));
      rows.push_back(std::move(row));
      ++next;
    }
    if (next == cfg.n_grid.size()) break;
    st.extend(static_cast<int>(rng.below(2 * D)));
  }
  return rows;
}

template <int D>
std::vector<std::vector<SimRow>> simulate(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_replicas(cfg.replicas, cfg.workers, [&](std::uint64_t r) { return simulate_replica<D>(cfg, r); });
}

// Functional values at each grid point for replica r.
template <int D>
std::vector<double> functional_series(const ExperimentConfig& cfg, const Functional& f, const MaskCover<D>* cover, std::uint64_t r) {
  Rng rng = Rng::for_replica(cfg.seed, r);
  const std::uint64_t nmax = cfg.n_grid.back();
  std::vector<double> out;
  out.reserve(cfg.n_grid.size());
  switch (f.kind) {
    case FunctionalKind::M:
    case FunctionalKind::E: {
      if (cover == nullptr) throw std::invalid_argument("functional " + f.name() + " needs a green table");
      auto path = gen_srw<D>(nmax, rng);
      auto tr = trace(path, cfg.n_grid, *cover);
      for (const auto& p : tr.points) out.push_back(f.kind == FunctionalKind::M ? p.M : p.E);
      return out;
    }
    case FunctionalKind::boundary_V:
    case FunctionalKind::boundary_class:
    case FunctionalKind::underline_range: {
      auto path = gen_srw<D>(nmax, rng);
      for (auto n : cfg.n_grid) out.push_back(double(evaluate_functional(path, n, f)));
      return out;
    }
    default:
      break;
  }
  RangeState<D> st(nmax + 1);
  std::size_t next = 0;
  for (std::uint64_t t = 0;; ++t) {
    while (next < cfg.n_grid.size() && cfg.n_grid[next] == t) {
      double v = 0.0;
      switch (f.kind) {
        case FunctionalKind::range:
          v = double(st.range_size());
          break;
        case FunctionalKind::boundary:
          v = double(st.boundary_size());
          break;
        case FunctionalKind::range_V:
          v = double(st.partition_counts()[f.mask.bits]);
          break;
        case FunctionalKind::range_class:
          v = double(class_sum<D>(st.partition_counts(), f.mask));
          break;
        case FunctionalKind::bar_range:
          v = double(bar_range(st, f.mask));
          break;
        default:
          throw std::logic_error("unhandled functional");
      }
      out.push_back(v);
      ++next;
    }
    if (next == cfg.n_grid.size()) break;
    st.extend(static_cast<int>(rng.below(2 * D)));
  }
  return out;
}

struct VarianceRow {
  std::uint64_t n = 0;
  double mean = 0.0;
  VarianceEstimate var;
  double var_over_n = 0.0;
  double var_over_nlogn = 0.0;
};

template <int D>
std::vector<VarianceRow> variance_scan(const ExperimentConfig& cfg, const Functional& f, const MaskCover<D>* cover = nullptr) {
  cfg.validate();
  auto series = run_replicas(cfg.replicas, cfg.workers, [&](std::uint64_t r) { return functional_series<D>(cfg, f, cover, r); });
  std::vector<VarianceRow> rows;
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
    std::vector<double> xs(series.size());
    for (std::size_t r = 0; r < series.size(); ++r) xs[r] = series[r][i];
    VarianceRow row;
    row.n = cfg.n_grid[i];
    row.mean = summarize(xs).mean();
    row.var = jackknife_variance(xs);
    const double n = double(row.n);
    row.var_over_n = n > 0 ? row.var.variance / n : 0.0;
    row.var_over_nlogn = n > 1 ? row.var.variance / (n * std::log(n)) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

struct CltReport {
  std::uint64_t n = 0;
  std::uint64_t replicas = 0;
  double mean = 0.0;
  double sd = 0.0;
  double ks = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  std::vector<double> standardized;
};

inline constexpr std::uint64_t kMinCltReplicas = 200;

template <int D>
CltReport clt_test(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.replicas < kMinCltReplicas)
    throw std::invalid_argument("clt_test needs at least " + std::to_string(kMinCltReplicas) + " replicas");
  ExperimentConfig one = cfg;
  one.n_grid = {cfg.n_grid.back()};
  auto xs = run_replicas(cfg.replicas, cfg.workers, [&](std::uint64_t r) {
    return functional_series<D>(one, Functional{FunctionalKind::boundary, {}}, nullptr, r)[0];
  });
  SummaryStats s = summarize(xs);
  CltReport rep;
  rep.n = one.n_grid[0];
  rep.replicas = cfg.replicas;
  rep.mean = s.mean();
  rep.sd = s.sd();
  rep.standardized.resize(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) rep.standardized[i] = rep.sd > 0 ? (xs[i] - rep.mean) / rep.sd : 0.0;
  rep.ks = ks_normal(rep.standardized);
  rep.skewness = s.skewness();
  rep.excess_kurtosis = s.excess_kurtosis();
  return rep;
}

struct NuEstimate {
  std::uint64_t n = 0;
  std::uint64_t horizon = 0;
  std::uint64_t direct_replicas = 0;
  std::uint64_t event_replicas = 0;
  // (a) |dR_n| / n.
  double direct_mean = 0.0, direct_se = 0.0;
  // (b) truncated two-walk event frequency; biased upward by at most
  // bias_bound.
  double event_mean = 0.0, event_se = 0.0;
  double bias_bound = 0.0;

  double combined_se() const { return std::sqrt(direct_se * direct_se + event_se * event_se); }
  bool consistent() const { return std::abs(direct_mean - event_mean) <= 3.0 * combined_se() + bias_bound; }
};

struct TwoWalkSample {
  double indicator = 0.0;
  double bias = 0.0;
};

// One replica of the two-walk estimator: walks S, S~ from 0 to horizon T.
// The event is {V_0 not covered by R_T u R~_T, S_k != 0 for 1 <= k <= T}.
// When it holds, the chance that either walk later visits V_0 u {0} is
// bounded by sum_w sum_x G(S^w_T - x) / G(0,0).
template <int D>
TwoWalkSample two_walk_sample(std::uint64_t T, const GreenTable<D>& G, Rng& rng) {
  std::uint32_t covered = 0;
  bool returned = false;
  std::array<Point<D>, 2> ends{};
  for (int w = 0; w < 2; ++w) {
    Point<D> p{};
    for (std::uint64_t k = 0; k < T; ++k) {
      int dir = static_cast<int>(rng.below(2 * D));
      p[dir / 2] += (dir % 2 == 0) ? 1 : -1;
      if (l1_norm(p) <= 1) {
        int idx = direction_index<D>(p);
        if (idx < 0) {
          if (w == 0) returned = true;
        } else {
          covered |= 1u << idx;
        }
      }
    }
    ends[w] = p;
  }
  TwoWalkSample s;
  const bool event = !returned && covered != NeighborMask::full(D).bits;
  s.indicator = event ? 1.0 : 0.0;
  if (event) {
    double b = 0.0;
    for (const auto& e : ends) {
      for (int i = -1; i < 2 * D; ++i) {
        Point<D> x = i < 0 ? origin<D>() : direction<D>(i);
        Point<D> z = e - x;
        b += (G.covers(z) ? G(z) : G.far_bound(norm(z))) / G.g00();
      }
    }
    s.bias = std::min(1.0, b);
  }
  return s;
}

template <int D>
NuEstimate estimate_nu(const ExperimentConfig& cfg, const GreenTable<D>& G) {
  cfg.validate();
  NuEstimate est;
  est.n = cfg.n_grid.back();
  est.horizon = cfg.horizon;
  est.direct_replicas = cfg.direct_replicas ? cfg.direct_replicas : cfg.replicas;
  est.event_replicas = cfg.replicas;
  ExperimentConfig one = cfg;
  one.n_grid = {est.n};
  auto a = run_replicas(est.direct_replicas, cfg.workers, [&](std::uint64_t r) {
    return functional_series<D>(one, Functional{FunctionalKind::boundary, {}}, nullptr, r)[0] / double(est.n);
  });
  SummaryStats sa = summarize(a);
  est.direct_mean = sa.mean();
  est.direct_se = sa.sem();
  const std::uint64_t event_seed = splitmix64(cfg.seed ^ 0x5eed0b0b5eed0b0bULL);
  auto b = run_replicas(cfg.replicas, cfg.workers, [&](std::uint64_t r) {
    Rng rng = Rng::for_replica(event_seed, r);
    return two_walk_sample<D>(cfg.horizon, G, rng);
  });
  SummaryStats sb, sbias;
  for (const auto& s : b) {
    sb.add(s.indicator);
    sbias.add(s.bias);
  }
  est.event_mean = sb.mean();
  est.event_se = sb.sem();
  est.bias_bound = sbias.mean() + 3.0 * sbias.sem();
  return est;
}

struct DyadicRow {
  std::uint64_t replica = 0;
  std::uint64_t n = 0;
  int L = 0;
  DyadicError result;
};

template <int D>
std::vector<DyadicRow> dyadic_experiment(const ExperimentConfig& cfg, int L) {
  cfg.validate();
  auto per = run_replicas(cfg.replicas, cfg.workers, [&](std::uint64_t r) {
    Rng rng = Rng::for_replica(cfg.seed, r);
    auto path = gen_srw<D>(cfg.n_grid.back(), rng);
    std::vector<DyadicRow> rows;
    for (auto n : cfg.n_grid) rows.push_back({r, n, L, dyadic_error(path, n, L)});
    return rows;
  });
  std::vector<DyadicRow> out;
  for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
  return out;
}

// 2^L close to sqrt(n) / log(n)^2, at least 1.
inline int dyadic_level_for(std::uint64_t n) {
  double target = std::sqrt(double(n)) / std::pow(std::log(double(n)), 2.0);
  int L = static_cast<int>(std::lround(std::log2(std::max(target, 1.0))));
  return std::max(L, 1);
}

}  // namespace rwb
