#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "oracles.hpp"
#include "rwb/green.hpp"

using namespace rwb;

namespace {

const GreenTable<3>& table3() {
  static const GreenTable<3> g = build_green_table<3>(24, 1e-8);
  return g;
}

// Adaptive quadrature of the Bessel integral, frozen.
struct Frozen {
  std::vector<int> z;
  double value;
};
const std::vector<Frozen> kFrozen = {
    {{0, 0, 0}, 1.516386059151966}, {{1, 0, 0}, 0.516386059151980}, {{1, 1, 0}, 0.331148602126423},
    {{2, 1, 1}, 0.191791650646263}, {{5, 0, 0}, 0.096606452025598}, {{3, 2, 1}, 0.126945971757360},
    {{0, 0, 0, 0}, 1.239467121848482}, {{1, 1, 0, 0}, 0.101717630167474}, {{0, 0, 0, 0, 0}, 1.156308124840232},
    {{2, 0, 1, 0, 0}, 0.013979483124824},
};

template <int D>
Point<D> to_point(const std::vector<int>& v) {
  Point<D> p{};
  for (int j = 0; j < D; ++j) p[j] = v[j];
  return p;
}

}  // namespace

TEST(GreenOracle, AdaptiveQuadratureReproducesFrozenValues) {
  for (const auto& f : kFrozen) EXPECT_NEAR(oracle::green_integral(f.z), f.value, 1e-11);
}

TEST(GreenTable, MatchesFrozenOracle) {
  auto g4 = build_green_table<4>(6, 1e-8);
  auto g5 = build_green_table<5>(4, 1e-8);
  for (const auto& f : kFrozen) {
    double v = f.z.size() == 3 ? table3()(to_point<3>(f.z)) : f.z.size() == 4 ? g4(to_point<4>(f.z)) : g5(to_point<5>(f.z));
    EXPECT_NEAR(v, f.value, 2e-8);
  }
}

TEST(GreenTable, WatsonConstant) { EXPECT_NEAR(table3().g00(), 1.516386059151978, 1e-8); }

TEST(GreenTable, NeighborIdentity) {
  const auto& g = table3();
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(g(direction<3>(i)), g.g00() - 1.0, 2 * g.tol());
}

TEST(GreenTable, Harmonicity) {
  const auto& g = table3();
  double worst = 0.0;
  for (int a = 0; a < g.radius(); ++a)
    for (int b = 0; b < g.radius(); ++b)
      for (int c = 0; c < g.radius(); ++c) {
        Point<3> z{a, b, c};
        double s = 0.0;
        for (int i = 0; i < 6; ++i) s += g(z + direction<3>(i));
        double lhs = s / 6.0 + (z == origin<3>() ? 1.0 : 0.0);
        worst = std::max(worst, std::abs(lhs - g(z)));
      }
  EXPECT_LE(worst, 2 * g.tol());
}

TEST(GreenTable, SignedPermutationSymmetry) {
  const auto& g = table3();
  Point<3> z{4, -1, 2};
  double v = g(z);
  EXPECT_EQ(g(Point<3>{-1, 2, 4}), v);
  EXPECT_EQ(g(Point<3>{2, 4, 1}), v);
  EXPECT_EQ(g(Point<3>{-4, 1, -2}), v);
}

TEST(GreenTable, HigherDimensionsIdentities) {
  auto g4 = build_green_table<4>(8, 1e-8);
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(g4(direction<4>(i)), g4.g00() - 1.0, 2e-8);
  auto g5 = build_green_table<5>(6, 1e-8);
  EXPECT_NEAR(g5.g00(), 1.156308124840232, 1e-8);
}

TEST(GreenTable, DecayAndFarBound) {
  const auto& g = table3();
  double prev = g(origin<3>());
  for (int k = 1; k <= g.radius(); ++k) {
    double v = g(Point<3>{k, 0, 0});
    EXPECT_LT(v, prev);
    prev = v;
    if (k >= g.radius() / 2) {
      EXPECT_LE(v, g.far_bound(k));
    }
  }
  // G(0,z) |z| -> 3 / (2 pi) along a ray in d = 3.
  EXPECT_NEAR(g(Point<3>{24, 0, 0}) * 24.0, 3.0 / (2.0 * std::numbers::pi), 0.01);
}

TEST(GreenTable, CoverageError) {
  const auto& g = table3();
  EXPECT_THROW(g(Point<3>{25, 0, 0}), GreenCoverageError);
  try {
    g(Point<3>{0, 30, 1});
  } catch (const GreenCoverageError& e) {
    EXPECT_EQ(e.required_radius(), 30);
  }
  EXPECT_TRUE(std::isnan(g.get_or_nan(Point<3>{0, 0, 25})));
}

TEST(GreenTable, ConvergenceFailureCarriesAccuracy) {
  GreenBuildOptions opt;
  opt.max_levels = 1;
  try {
    build_green_table<3>(4, 1e-15, opt);
    FAIL() << "expected GreenConvergenceError";
  } catch (const GreenConvergenceError& e) {
    EXPECT_GT(e.achieved(), e.requested());
    EXPECT_EQ(e.requested(), 1e-15);
  }
  EXPECT_THROW(build_green_table<3>(4, 0.0), std::invalid_argument);
}

TEST(GreenTable, DpPartialSumAgrees) {
  auto [partial, tail] = green_origin_partial_sum(3, 2000);
  EXPECT_NEAR(table3().g00(), partial + tail, 1e-4);
  EXPECT_LT(partial, table3().g00());
}

TEST(ReturnProbabilities, SmallValues) {
  auto p = return_probabilities(3, 6);
  EXPECT_DOUBLE_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], 0.0);
  EXPECT_NEAR(p[2], 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(p[4], 90.0 / 1296.0, 1e-15);
  auto q = return_probabilities(1, 4);
  EXPECT_NEAR(q[4], 6.0 / 16.0, 1e-15);
}

TEST(TruncatedGreen, BaseCases) {
  auto g0 = truncated_green<3>(0, 2);
  EXPECT_EQ(g0(origin<3>()), 1.0);
  EXPECT_EQ(g0(Point<3>{1, 0, 0}), 0.0);
  auto g2 = truncated_green<3>(2, 2);
  EXPECT_NEAR(g2(origin<3>()), 1.0 + 1.0 / 6.0, 1e-15);
  EXPECT_THROW(truncated_green<3>(5, 4), std::invalid_argument);
  EXPECT_THROW(truncated_green<3>(-1, 4), std::invalid_argument);
}

TEST(TruncatedGreen, MatchesConvolutionOracle) {
  const int n = 7;
  auto dp = truncated_green<3>(n, n);
  auto brute = oracle::truncated_green(3, n);
  for (const auto& [z, v] : brute) EXPECT_NEAR(dp(Point<3>{z[0], z[1], z[2]}), v, 1e-14);
  auto dp4 = truncated_green<4>(5, 6);
  auto brute4 = oracle::truncated_green(4, 5);
  for (const auto& [z, v] : brute4) EXPECT_NEAR(dp4(Point<4>{z[0], z[1], z[2], z[3]}), v, 1e-14);
}

TEST(TruncatedGreen, MonotoneAndBelowFullGreen) {
  const auto& g = table3();
  auto a = truncated_green<3>(10, 12), b = truncated_green<3>(20, 20);
  for (int x = 0; x <= 10; ++x)
    for (int y = 0; y <= 10; ++y) {
      Point<3> z{x, y, 1};
      EXPECT_LE(a(z), b(z) + 1e-15);
      EXPECT_LE(b(z), g(z) + g.eps());
      EXPECT_GE(a(z), 0.0);
    }
}

TEST(TruncatedGreen, BubbleSumIdentityAndGrowth) {
  auto t = truncated_green<3>(48, 48);
  EXPECT_NEAR(t.sum_of_squares(), bubble_sum(3, 48), 1e-10);
  // sum_z G_n(0,z)^2 grows like sqrt(n) in d = 3.
  for (int n : {256, 1024}) {
    double ratio = bubble_sum(3, 4 * n) / bubble_sum(3, n);
    EXPECT_GT(ratio, 1.6);
    EXPECT_LT(ratio, 2.4);
  }
}

TEST(GreenPersistence, TextAndBinaryRoundTrip) {
  auto g = build_green_table<3>(6, 1e-8);
  std::stringstream txt, bin;
  save_text(g, txt);
  auto a = load_text<3>(txt);
  EXPECT_EQ(a.radius(), 6);
  EXPECT_EQ(a.raw(), g.raw());
  EXPECT_EQ(a.fingerprint(), g.fingerprint());
  save_binary(g, bin);
  auto b = load_binary<3>(bin);
  EXPECT_EQ(b.raw(), g.raw());
  EXPECT_EQ(b.tol(), g.tol());
  std::stringstream wrong;
  save_binary(g, wrong);
  EXPECT_THROW(load_binary<4>(wrong), std::runtime_error);
}

TEST(GreenPersistence, CacheBuildsOnce) {
  auto dir = std::filesystem::temp_directory_path() / "rwb-test-green-cache";
  std::filesystem::remove_all(dir);
  bool built = false;
  auto a = load_or_build_green_table<3>(dir, 5, 1e-8, &built);
  EXPECT_TRUE(built);
  auto b = load_or_build_green_table<3>(dir, 5, 1e-8, &built);
  EXPECT_FALSE(built);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_TRUE(std::filesystem::exists(dir / green_cache_name(3, 5, 1e-8)));
  std::filesystem::remove_all(dir);
}
