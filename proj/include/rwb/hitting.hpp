#pragma once

// Probabilities derived from the Green's function: hitting distributions of
// finite sets, cover probabilities, escape constants rho_V, the boundary
// gradient constant c(Lambda) and the joint-hitting covariance b_V(x).
//
// Hitting times follow H_A = inf{n >= 1 : S_n in A}. Cover probabilities
// count the starting point as visited.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "rwb/green.hpp"
#include "rwb/lattice.hpp"

namespace rwb {

class HittingSolveError : public std::runtime_error {
 public:
  HittingSolveError(double condition)
      : std::runtime_error("hitting system ill-conditioned, condition estimate " + std::to_string(condition)), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

template <int D>
struct HittingDistribution {
  Point<D> source;
  std::vector<Point<D>> targets;
  std::vector<double> weights;
  double condition = 1.0;

  double total() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

// Point parameter excluded from template argument deduction.
template <int D>
using NdPoint = std::type_identity_t<Point<D>>;

inline constexpr double kMaxCondition = 1e12;

namespace detail {

template <int D>
Eigen::MatrixXd gram(const std::vector<NdPoint<D>>& pts, const GreenTable<D>& G) {
  const int n = static_cast<int>(pts.size());
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = G(pts[i] - pts[j]);
  return M;
}

inline double condition_estimate(const Eigen::MatrixXd& M) {
  if (M.rows() == 0) return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  return s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
}

template <class T>
bool contains(const std::vector<T>& v, const T& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace detail

// Solves sum_y h(y) G(y - x) = G(z - x) for x in Lambda. For z outside
// Lambda, h(x) = P_z(S_{H_Lambda} = x, H_Lambda < inf).
template <int D>
HittingDistribution<D> hitting_distribution(const NdPoint<D>& z, const std::vector<NdPoint<D>>& lambda, const GreenTable<D>& G) {
  if (detail::contains(lambda, z)) throw std::invalid_argument("hitting_distribution: source lies in the target set");
  HittingDistribution<D> out{z, lambda, {}, 1.0};
  if (lambda.empty()) return out;
  Eigen::MatrixXd M = detail::gram(lambda, G);
  Eigen::VectorXd rhs(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) rhs(i) = G(z - lambda[i]);
  out.condition = detail::condition_estimate(M);
  if (!(out.condition < kMaxCondition)) throw HittingSolveError(out.condition);
  Eigen::VectorXd h = M.ldlt().solve(rhs);
  out.weights.assign(h.data(), h.data() + h.size());
  return out;
}

// P_z(H_Lambda < inf) with H >= 1, by averaging over the first step.
template <int D>
double hit_probability(const NdPoint<D>& z, const std::vector<NdPoint<D>>& lambda, const GreenTable<D>& G) {
  if (lambda.empty()) return 0.0;
  double s = 0.0;
  for (int i = 0; i < 2 * D; ++i) {
    Point<D> y = z + direction<D>(i);
    s += detail::contains(lambda, y) ? 1.0 : hitting_distribution(y, lambda, G).total();
  }
  return s / (2 * D);
}

// Cover probabilities f(z, S) for all subsets S of a fixed point list.
// For each subset the weights w_S = Gram_S^{-1} (f(x, S \ {x}))_{x in S}
// are precomputed, so f(z, S) = sum_x G(z - x) w_S(x) for any z.
template <int D>
class CoverSolver {
 public:
  static constexpr int kMaxPoints = 16;

  CoverSolver(std::vector<Point<D>> points, const GreenTable<D>& G) : points_(std::move(points)), G_(&G) {
    const int n = static_cast<int>(points_.size());
    if (n > kMaxPoints) throw std::invalid_argument("CoverSolver supports at most 16 points");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j)
        if (points_[i] == points_[j]) throw std::invalid_argument("CoverSolver: duplicate points");
    const std::uint32_t count = std::uint32_t{1} << n;
    weights_.assign(count, {});
    condition_.assign(count, 1.0);
    for (std::uint32_t S = 1; S < count; ++S) {
      std::vector<int> idx;
      for (int i = 0; i < n; ++i)
        if (S >> i & 1u) idx.push_back(i);
      const int m = static_cast<int>(idx.size());
      Eigen::MatrixXd M(m, m);
      Eigen::VectorXd f(m);
      for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) M(a, b) = G(points_[idx[a]] - points_[idx[b]]);
        f(a) = cover_with(points_[idx[a]], S & ~(std::uint32_t{1} << idx[a]));
      }
      condition_[S] = detail::condition_estimate(M);
      if (!(condition_[S] < kMaxCondition)) throw HittingSolveError(condition_[S]);
      Eigen::VectorXd w = M.ldlt().solve(f);
      weights_[S].assign(w.data(), w.data() + m);
    }
  }

  const std::vector<Point<D>>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  const GreenTable<D>& green() const { return *G_; }
  double condition(std::uint32_t subset) const { return condition_.at(subset); }
  double max_condition() const { return *std::max_element(condition_.begin(), condition_.end()); }

  // f(z, subset); throws GreenCoverageError when z - x leaves the table.
  double cover(const Point<D>& z, std::uint32_t subset) const { return cover_with(z, subset); }

  // As cover(), but when some z - x is outside the table the value is
  // replaced by 0 and `bound` receives an upper bound on the true value.
  double cover_or_far(const Point<D>& z, std::uint32_t subset, double& bound) const {
    bound = 0.0;
    if (subset == 0) return 1.0;
    double s = 0.0;
    int k = 0;
    double far = std::numeric_limits<double>::infinity();
    bool outside = false;
    for (std::uint32_t b = subset; b != 0; b &= b - 1, ++k) {
      const Point<D>& x = points_[std::countr_zero(b)];
      Point<D> diff = z - x;
      if (!G_->covers(diff)) {
        outside = true;
        far = std::min(far, G_->far_bound(norm(diff)) / G_->g00());
      } else {
        s += (*G_)(diff)*weights_[subset][k];
      }
    }
    if (outside) {
      bound = std::min(1.0, far);
      return 0.0;
    }
    return s;
  }

 private:
  double cover_with(const Point<D>& z, std::uint32_t subset) const {
    if (subset == 0) return 1.0;
    double s = 0.0;
    int k = 0;
    for (std::uint32_t b = subset; b != 0; b &= b - 1, ++k) s += (*G_)(z - points_[std::countr_zero(b)]) * weights_[subset][k];
    return s;
  }

  std::vector<Point<D>> points_;
  const GreenTable<D>* G_;
  std::vector<std::vector<double>> weights_;
  std::vector<double> condition_;
};

// f(z, Lambda) = P_z(Lambda contained in {S_0, S_1, ...}).
template <int D>
double cover_probability(const NdPoint<D>& z, const std::vector<NdPoint<D>>& lambda, const GreenTable<D>& G) {
  if (lambda.empty()) return 1.0;
  CoverSolver<D> solver(lambda, G);
  return solver.cover(z, (std::uint32_t{1} << lambda.size()) - 1);
}

// Cover probabilities of subsets of V_0, addressed by NeighborMask.
template <int D>
class MaskCover {
 public:
  explicit MaskCover(const GreenTable<D>& G) : solver_(unit_directions<D>(), G), rho_(std::size_t{1} << (2 * D), 0.0) {
    const auto& classes = ClassTable<D>::instance();
    for (std::uint32_t m = 1; m < rho_.size(); ++m) {
      NeighborMask rep = classes.of(NeighborMask{m}).canonical;
      rho_[m] = 1.0 - solver_.cover(origin<D>(), rep.bits);
    }
  }

  double cover(const Point<D>& z, NeighborMask V) const { return solver_.cover(z, V.bits); }
  double cover_or_far(const Point<D>& z, NeighborMask V, double& bound) const { return solver_.cover_or_far(z, V.bits, bound); }
  double escape(const Point<D>& z, NeighborMask V) const { return V.empty() ? 0.0 : 1.0 - cover(z, V); }

  // rho_V = P(V not contained in R_inf), rho_empty = 0.
  double rho(NeighborMask V) const { return rho_.at(V.bits); }
  const std::vector<double>& rho_table() const { return rho_; }
  const CoverSolver<D>& solver() const { return solver_; }
  const GreenTable<D>& green() const { return solver_.green(); }
  int radius() const { return solver_.green().radius(); }

 private:
  CoverSolver<D> solver_;
  std::vector<double> rho_;
};

template <int D>
double rho(NeighborMask V, const GreenTable<D>& G) {
  if (!V.valid_for(D)) throw std::invalid_argument("rho: mask invalid for dimension");
  if (V.empty()) return 0.0;
  NeighborMask rep = canonical_class(V, D).canonical;
  return 1.0 - cover_probability(origin<D>(), points_of<D>(rep), G);
}

inline double unit_ball_volume(int d) { return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0); }

struct BoundaryGradientConstant {
  double c = 0.0;
  double v_d = 0.0;
};

template <int D>
BoundaryGradientConstant c_lambda(const std::vector<NdPoint<D>>& lambda, const GreenTable<D>& G) {
  BoundaryGradientConstant out{0.0, unit_ball_volume(D)};
  if (lambda.empty()) return out;
  CoverSolver<D> cover(lambda, G);
  const std::uint32_t all = (std::uint32_t{1} << lambda.size()) - 1;
  double s = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    double fx = cover.cover(lambda[i], all);
    for (int e = 0; e < 2 * D; ++e) {
      Point<D> v = lambda[i] + direction<D>(e);
      if (detail::contains(lambda, v)) continue;
      s += (1.0 - hitting_distribution(v, lambda, G).total()) * fx;
    }
  }
  out.c = s / (D * out.v_d);
  return out;
}

// b_V(x) = P_x(H_A < inf) P_x(H_B = inf) - P_x(H_A < inf, H_B = inf) with
// A = V u {0} and B = x + A; equivalently P(both) - P(H_A<inf) P(H_B<inf).
template <int D>
double b_V(const NdPoint<D>& x, NeighborMask V, const GreenTable<D>& G) {
  std::vector<Point<D>> A{origin<D>()};
  for (const auto& v : points_of<D>(V)) A.push_back(v);
  if (detail::contains(A, x)) throw std::invalid_argument("b_V: x lies in V u {0}");
  std::vector<Point<D>> B;
  for (const auto& a : A) B.push_back(x + a);
  std::vector<Point<D>> U = A;
  for (const auto& b : B)
    if (!detail::contains(U, b)) U.push_back(b);

  // Probability, from y (time 0 counted), of eventually visiting the set.
  auto reach = [&](const Point<D>& y, const std::vector<Point<D>>& S) {
    return detail::contains(S, y) ? 1.0 : hitting_distribution(y, S, G).total();
  };
  auto reach_both = [&](const Point<D>& z) {
    bool inA = detail::contains(A, z), inB = detail::contains(B, z);
    if (inA && inB) return 1.0;
    if (inA) return reach(z, B);
    if (inB) return reach(z, A);
    auto h = hitting_distribution(z, U, G);
    double s = 0.0;
    for (std::size_t i = 0; i < U.size(); ++i) {
      bool a = detail::contains(A, U[i]), b = detail::contains(B, U[i]);
      double tail = (a && b) ? 1.0 : a ? reach(U[i], B) : reach(U[i], A);
      s += h.weights[i] * tail;
    }
    return s;
  };

  double pa = 0.0, pb = 0.0, pab = 0.0;
  for (int e = 0; e < 2 * D; ++e) {
    Point<D> y = x + direction<D>(e);
    pa += reach(y, A);
    pb += reach(y, B);
    pab += reach_both(y);
  }
  pa /= 2 * D;
  pb /= 2 * D;
  pab /= 2 * D;
  return pab - pa * pb;
}

}  // namespace rwb
