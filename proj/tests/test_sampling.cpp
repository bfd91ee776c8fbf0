#include "podecm/sampling.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace podecm {
namespace {

TEST(Sobol, FirstPointsMatchTheClassicSequence) {
  SobolSampler sampler(2);
  const double expect[8][2] = {
      {0.0, 0.0},       {0.5, 0.5},     {0.75, 0.25},  {0.25, 0.75},
      {0.375, 0.375},   {0.875, 0.875}, {0.625, 0.125}, {0.125, 0.625}};
  for (int i = 0; i < 8; ++i) {
    VecX p = sampler.next();
    EXPECT_EQ(p(0), expect[i][0]) << "point " << i;
    EXPECT_EQ(p(1), expect[i][1]) << "point " << i;
  }
}

TEST(Sobol, EveryCoordinateIsPerfectlyStratified) {
  // First 2^k points put exactly one point in each dyadic bin of width
  // 2^-k, in every dimension; a digital shift must preserve this.
  const int k = 5;
  const int n = 1 << k;
  for (std::uint64_t seed : {0ull, 42ull, 20260822ull}) {
    SobolSampler sampler(8, seed);
    MatX pts = sampler.draw(n);
    for (int d = 0; d < 8; ++d) {
      std::vector<int> bin(n, 0);
      for (int i = 0; i < n; ++i) {
        int b = static_cast<int>(std::floor(pts(i, d) * n));
        ASSERT_GE(b, 0);
        ASSERT_LT(b, n);
        ++bin[b];
      }
      for (int b = 0; b < n; ++b) {
        EXPECT_EQ(bin[b], 1) << "seed " << seed << " dim " << d;
      }
    }
  }
}

TEST(Sobol, LeadingPairFillsDyadicBoxes) {
  // Dimensions 1 and 2 form a (0,2)-sequence: the first 16 points place
  // exactly one point in each cell of the 4x4 dyadic grid.
  SobolSampler sampler(2, 7);
  MatX pts = sampler.draw(16);
  int counts[4][4] = {};
  for (int i = 0; i < 16; ++i) {
    ++counts[static_cast<int>(pts(i, 0) * 4)][static_cast<int>(pts(i, 1) * 4)];
  }
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) EXPECT_EQ(counts[a][b], 1);
  }
}

TEST(Sobol, SeedChangesPointsDeterministically) {
  MatX a1 = SobolSampler(4, 9).draw(16);
  MatX a2 = SobolSampler(4, 9).draw(16);
  MatX b = SobolSampler(4, 10).draw(16);
  EXPECT_EQ((a1 - a2).norm(), 0.0);
  EXPECT_GT((a1 - b).norm(), 1e-3);
}

TEST(Sobol, RejectsUnsupportedDimensions) {
  EXPECT_THROW(SobolSampler(0), ConfigError);
  EXPECT_THROW(SobolSampler(9), ConfigError);
}

TEST(Sobol, PointsStayInTheHalfOpenUnitCube) {
  SobolSampler sampler(8, 3);
  MatX pts = sampler.draw(200);
  EXPECT_GE(pts.minCoeff(), 0.0);
  EXPECT_LT(pts.maxCoeff(), 1.0);
}

TEST(UniformSamples, DeterministicAndInRange) {
  MatX a = uniform_samples(50, 3, 11);
  MatX b = uniform_samples(50, 3, 11);
  MatX c = uniform_samples(50, 3, 12);
  EXPECT_EQ((a - b).norm(), 0.0);
  EXPECT_GT((a - c).norm(), 1e-6);
  EXPECT_GE(a.minCoeff(), 0.0);
  EXPECT_LT(a.maxCoeff(), 1.0);
}

TEST(ScaleToBounds, MapsCubeCornersToBoxCorners) {
  MatX unit(2, 2);
  unit << 0.0, 1.0, 0.5, 0.25;
  MatX out = scale_to_bounds(unit, {{-1.0, 1.0}, {2.0, 6.0}});
  EXPECT_EQ(out(0, 0), -1.0);
  EXPECT_EQ(out(0, 1), 6.0);
  EXPECT_EQ(out(1, 0), 0.0);
  EXPECT_EQ(out(1, 1), 3.0);
}

TEST(ScaleToBounds, RejectsDimensionMismatch) {
  EXPECT_THROW(scale_to_bounds(MatX::Zero(2, 3), {{0.0, 1.0}}), ConfigError);
}

}  // namespace
}  // namespace podecm
