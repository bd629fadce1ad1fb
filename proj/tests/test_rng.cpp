#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "polaron_tfim/rng.hpp"
#include "support/oracles.hpp"

using polaron_tfim::Philox4x32;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswers) {
  using C = Philox4x32::Counter;
  EXPECT_EQ(Philox4x32(Philox4x32::Key{0, 0})(C{0, 0, 0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32(Philox4x32::Key{0xffffffff, 0xffffffff})(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32(Philox4x32::Key{0xa4093822, 0x299f31d0})(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, SeedSplitsIntoKey) {
  const Philox4x32 g(0x0123456789abcdefULL);
  EXPECT_EQ(g.key()[0], 0x89abcdefu);
  EXPECT_EQ(g.key()[1], 0x01234567u);
}

TEST(Philox, UniformIsPureFunctionOfCoordinates) {
  const Philox4x32 a(42), b(42), c(43);
  EXPECT_EQ(a.uniform(3, 5, 7), b.uniform(3, 5, 7));
  EXPECT_NE(a.uniform(3, 5, 7), c.uniform(3, 5, 7));
  EXPECT_NE(a.uniform(3, 5, 7), a.uniform(5, 3, 7));
  EXPECT_NE(a.uniform(0, 0, 1), a.uniform(0, 0, std::uint64_t{1} << 32));
}

TEST(Philox, UniformRangeAndMoments) {
  const Philox4x32 g(2024);
  constexpr int kBins = 20;
  std::vector<double> counts(kBins, 0.0);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int t = 0; t < n; ++t) {
    const double u = g.uniform(static_cast<std::uint32_t>(t % 97), static_cast<std::uint32_t>(t / 97), 11);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sum2 += u * u;
    counts[static_cast<std::size_t>(u * kBins)] += 1.0;
  }
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sum2 / n, 1.0 / 3.0, 0.005);
  double chi2 = 0.0;
  const double expected = static_cast<double>(n) / kBins;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_GT(oracle::chi_square_sf(chi2, kBins - 1), 1e-3);
}
