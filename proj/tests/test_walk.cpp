#include <gtest/gtest.h>

#include <sstream>

#include "rwb/range.hpp"
#include "rwb/stats.hpp"
#include "rwb/walk.hpp"

using namespace rwb;

TEST(Srw, EmptyAndReproducible) {
  Rng a(5), b(6);
  auto p0 = gen_srw<3>(0, a);
  EXPECT_EQ(p0.length(), 0u);
  EXPECT_EQ(p0.end(), origin<3>());
  EXPECT_EQ(range_of(p0, 0, 0).range_size(), 1u);
  auto x = gen_srw<3>(1000, a), y = gen_srw<3>(1000, b);
  EXPECT_NE(x.steps, y.steps);
  Rng c(5), d(5);
  gen_srw<3>(0, c);
  EXPECT_EQ(gen_srw<3>(1000, c).steps, gen_srw<3>(1000, d).steps);
  for (auto s : x.steps) EXPECT_LT(s, 6);
}

TEST(Srw, ReturnAfterTwoSteps) {
  Rng rng(17);
  const int N = 1000000;
  int hits = 0;
  for (int i = 0; i < N; ++i) {
    int a = static_cast<int>(rng.below(6)), b = static_cast<int>(rng.below(6));
    hits += b == opposite(a);
  }
  double p = 1.0 / 6.0, se = std::sqrt(p * (1 - p) / N);
  EXPECT_NEAR(double(hits) / N, p, 3 * se);
  // Same check through the generator.
  Rng r2(18);
  hits = 0;
  for (int i = 0; i < 100000; ++i) hits += gen_srw<3>(2, r2).end() == origin<3>();
  EXPECT_NEAR(hits / 1e5, p, 4 * std::sqrt(p * (1 - p) / 1e5));
}

TEST(Ndb, NoEvenDoubleBacktrack) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    auto p = gen_ndb<3>(10000, rng);
    EXPECT_EQ(p.length(), 10000u);
    EXPECT_FALSE(has_even_double_backtrack(p));
  }
  auto odd = gen_ndb<3>(7, rng);
  EXPECT_EQ(odd.length(), 7u);
  // A hand-made path with a double backtrack at time 2.
  WalkPath<3> bad{{0, 2, 3, 2}};
  EXPECT_TRUE(has_even_double_backtrack(bad));
  WalkPath<3> ok{{0, 2, 2, 3}};
  EXPECT_FALSE(has_even_double_backtrack(ok));
}

TEST(Ndb, FirstPairUniform) {
  Rng rng(99);
  const int N = 1000000;
  std::vector<std::uint64_t> counts(36, 0);
  for (int i = 0; i < N; ++i) {
    auto p = gen_ndb<3>(2, rng);
    ++counts[p.steps[0] * 6 + p.steps[1]];
  }
  auto r = chi_square_gof(counts, std::vector<double>(36, 1.0 / 36));
  EXPECT_GT(r.p_value, 0.001);
}

TEST(Ndb, LaterPairsAvoidOnlyTheBacktrack) {
  Rng rng(7);
  std::vector<std::uint64_t> counts(36, 0);
  const int N = 200000;
  for (int i = 0; i < N; ++i) {
    auto p = gen_ndb<3>(4, rng);
    // Relabel so that the last step of the first pair is direction 0.
    int last = p.steps[1];
    int a = p.steps[2], b = p.steps[3];
    if (last != 0) continue;
    ++counts[a * 6 + b];
  }
  EXPECT_EQ(counts[opposite(0) * 6 + 0], 0u);
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  std::vector<std::uint64_t> allowed;
  for (int k = 0; k < 36; ++k)
    if (k != opposite(0) * 6 + 0) allowed.push_back(counts[k]);
  auto r = chi_square_gof(allowed, std::vector<double>(35, 1.0 / 35));
  EXPECT_GT(r.p_value, 0.001);
  EXPECT_GT(total, 0u);
}

TEST(Clock, ParameterAndLaw) {
  EXPECT_DOUBLE_EQ(clock_parameter(3), 1.0 / 36.0);
  Rng rng(1234);
  const std::size_t N = 1000000;
  auto xi = gen_clock(3, N, rng);
  SummaryStats s;
  std::size_t zeros = 0;
  for (auto x : xi) {
    s.add(double(x));
    zeros += x == 0;
  }
  EXPECT_NEAR(s.mean(), 1.0 / 35.0, 3 * s.sem());
  double p0 = 35.0 / 36.0;
  EXPECT_NEAR(double(zeros) / N, p0, 3 * std::sqrt(p0 * (1 - p0) / N));
}

TEST(Splice, EmptyClockIsIdentity) {
  Rng rng(2);
  ClockedWalk<3> cw{gen_ndb<3>(100, rng), std::vector<std::uint32_t>(50, 0)};
  EXPECT_EQ(splice(cw).steps, cw.skeleton.steps);
}

TEST(Splice, SingleInsertion) {
  ClockedWalk<3> cw{WalkPath<3>{{0, 2, 4, 4}}, {1, 0}};
  auto out = splice(cw);
  ASSERT_EQ(out.length(), 6u);
  auto pos = out.positions();
  auto sk = cw.skeleton.positions();
  EXPECT_EQ(pos[3], sk[1]);
  EXPECT_EQ(pos[4], sk[2]);
  EXPECT_EQ(pos[6], sk[4]);
  EXPECT_THROW(splice(ClockedWalk<3>{WalkPath<3>{{0, 2, 4, 4}}, {1}}), std::invalid_argument);
}

TEST(Splice, NTildeAndPositions) {
  Rng rng(5);
  auto cw = gen_clocked<3>(2000, rng);
  for (auto& x : cw.xi) x += (rng.below(4) == 0);  // force insertions
  auto nt = cw.n_tilde();
  EXPECT_EQ(nt[0], 0u);
  EXPECT_EQ(nt[1], 0u);
  auto out = splice(cw);
  auto pos = out.positions();
  auto sk = cw.skeleton.positions();
  for (std::size_t k = 0; k <= cw.skeleton.length(); ++k) ASSERT_EQ(pos[k + 2 * nt[k]], sk[k]) << k;
  EXPECT_EQ(out.length(), cw.skeleton.length() + 2 * nt.back());
}

TEST(Splice, RangesAndBoundariesAgreeAtMappedTimes) {
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    auto cw = gen_clocked<3>(3000, rng);
    auto nt = cw.n_tilde();
    auto out = splice(cw);
    RangeState<3> a(out.length() + 1), b(cw.skeleton.length() + 1);
    std::size_t time = 0;
    for (std::size_t k = 0; k <= cw.skeleton.length(); ++k) {
      if (k > 0) b.extend(cw.skeleton.steps[k - 1]);
      while (time < k + 2 * nt[k]) a.extend(out.steps[time++]);
      ASSERT_EQ(a.range_size(), b.range_size());
      ASSERT_EQ(a.boundary_size(), b.boundary_size());
    }
  }
}

TEST(Splice, NTildeLaw) {
  // N~_n / n -> p / (2 (1 - p)).
  Rng rng(77);
  SummaryStats s;
  const std::size_t n = 2000;
  for (int r = 0; r < 2000; ++r) {
    auto xi = gen_clock(3, n / 2, rng);
    double acc = 0;
    for (auto x : xi) acc += x;
    s.add(acc / n);
  }
  double p = 1.0 / 36.0;
  EXPECT_NEAR(s.mean(), p / (2 * (1 - p)), 3 * s.sem());
}

TEST(PathDump, RoundTrip) {
  Rng rng(4);
  auto p = gen_srw<4>(50, rng);
  std::stringstream ss;
  write_path(ss, p, 42);
  std::uint64_t seed = 0;
  auto q = read_path<4>(ss, &seed);
  EXPECT_EQ(seed, 42u);
  EXPECT_EQ(q.steps, p.steps);
  std::stringstream bad("# d=3 n=2 seed=1\n0\n9\n");
  EXPECT_THROW(read_path<3>(bad), std::runtime_error);
  std::stringstream wrongd("# d=3 n=0 seed=1\n");
  EXPECT_THROW(read_path<4>(wrongd), std::runtime_error);
}
