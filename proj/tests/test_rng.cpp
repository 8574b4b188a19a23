#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "hmcd/rng.hpp"

using namespace hmcd;

TEST(Rng, SameSeedSameStream) {
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(Rng, DerivedSeedsAreStableAndPurposeSpecific) {
  EXPECT_EQ(derive_seed(1, "init"), derive_seed(1, "init"));
  EXPECT_NE(derive_seed(1, "init"), derive_seed(1, "edges"));
  EXPECT_NE(derive_seed(1, "init"), derive_seed(2, "init"));
}

TEST(Rng, UniformStaysInRange) {
  Rng r(4);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const double v = r.uniform(1e-6, 1.0);
    EXPECT_GE(v, 1e-6);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Rng, IndexCoversRangeRoughlyUniformly) {
  Rng r(8);
  std::vector<int> counts(7, 0);
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) ++counts[r.index(7)];
  // Binomial(70000, 1/7): mean 10000, sd ~ 92.6; allow 5 sd.
  for (int c : counts) EXPECT_NEAR(c, 10000, 463);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng r(12);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  r.shuffle(w.begin(), w.end());
  EXPECT_NE(v, w);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}
