// Copyright 2026 The cbpert Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace cbpert {
namespace {

using testing::MaxAbs;
using testing::NoiseWithNorm;
using testing::RandomSymmetric;
using testing::RotatedSpectrum;

SpectralDecomposition Diag(std::vector<double> eigs) {
  return eigendecompose(SymmetricMatrix::Diagonal(eigs));
}

TEST(ProjectorTest, DiagonalCase) {
  const auto p = projector(Diag({3, 1, -2}), {0});
  EXPECT_EQ(p.dense(), SymmetricMatrix::Diagonal({1, 0, 0}).dense());
}

TEST(ProjectorTest, FullSetIsIdentity) {
  const auto d = eigendecompose(RandomSymmetric(7, 1));
  EXPECT_LE(MaxAbs(projector(d, leading_set(7)).dense() - Matrix::Identity(7, 7)), 1e-12);
}

TEST(ProjectorTest, SeededIdempotentRankTwo) {
  const auto d = eigendecompose(RandomSymmetric(6, 3));
  const Matrix p = projector(d, {0, 1}).dense();
  EXPECT_LE(MaxAbs(p * p - p), 1e-9);
  EXPECT_NEAR(p.trace(), 2.0, 1e-9);
  Eigen::SelfAdjointEigenSolver<Matrix> es(p);
  int rank = 0;
  for (int i = 0; i < 6; ++i) rank += es.eigenvalues()(i) > 0.5;
  EXPECT_EQ(rank, 2);
}

TEST(ProjectorTest, RejectsBadIndexSets) {
  const auto d = Diag({2, 1});
  EXPECT_THROW(projector(d, {}), InvalidArgument);
  EXPECT_THROW(projector(d, {2}), InvalidArgument);
  EXPECT_THROW(projector(d, {-1}), InvalidArgument);
}

TEST(ProjectorTest, BasisInvariantForDegenerateCluster) {
  const SymmetricMatrix a = SymmetricMatrix::Diagonal({5, 2, 2, 2, -1});
  Matrix g = Matrix::Identity(5, 5);
  const double c = std::cos(1e-3), s = std::sin(1e-3);
  g(1, 1) = c;
  g(1, 2) = -s;
  g(2, 1) = s;
  g(2, 2) = c;
  const auto rotated = SymmetricMatrix::Symmetrize(g * a.dense() * g.transpose());
  const auto da = eigendecompose(a);
  const auto dr = eigendecompose(rotated);
  EXPECT_TRUE(da.degenerate);
  const Matrix pa = projector(da, {0, 1, 2, 3}).dense();
  const Matrix pr = projector(dr, {0, 1, 2, 3}).dense();
  EXPECT_LE(MaxAbs(pa - pr), 1e-8);
}

TEST(BestRankPTest, PicksByMagnitude) {
  const auto ap = best_rank_p(Diag({3, 1, -2}), 2);
  EXPECT_EQ(ap.dense(), SymmetricMatrix::Diagonal({3, 0, -2}).dense());
}

TEST(BestRankPTest, FullRankIsIdentityMap) {
  const auto a = RandomSymmetric(6, 4);
  EXPECT_LE(MaxAbs(best_rank_p(eigendecompose(a), 6).dense() - a.dense()), 1e-12);
}

TEST(BestRankPTest, EckartYoungResidual) {
  const auto a = RandomSymmetric(8, 11);
  const auto d = eigendecompose(a);
  EXPECT_NEAR(spectral_norm(a - best_rank_p(d, 3)), d.sigma(4), 1e-8);
}

TEST(BestRankPTest, RejectsBadP) {
  const auto d = Diag({1, 0});
  EXPECT_THROW(best_rank_p(d, 0), InvalidArgument);
  EXPECT_THROW(best_rank_p(d, 3), InvalidArgument);
}

TEST(FSDirectTest, ConstantFunctionIsProjector) {
  const auto d = eigendecompose(RandomSymmetric(6, 8));
  const auto f = f_S_direct(d, leading_set(3), [](double) { return 1.0; });
  EXPECT_LE(MaxAbs(f.dense() - projector(d, leading_set(3)).dense()), 1e-15);
}

TEST(FSDirectTest, IdentityOnSingularSetIsBestRankP) {
  const auto d = eigendecompose(RandomSymmetric(6, 9));
  const auto f = f_S_direct(d, singular_set(d, 2), [](double z) { return z; });
  EXPECT_LE(MaxAbs(f.dense() - best_rank_p(d, 2).dense()), 1e-15);
}

TEST(FSDirectTest, SquareOnDiagonal) {
  const auto f = f_S_direct(Diag({3, 1, -2}), {0, 2}, [](double z) { return z * z; });
  EXPECT_EQ(f.dense(), SymmetricMatrix::Diagonal({9, 0, 4}).dense());
}

TEST(FSDirectTest, RejectsNonFiniteValues) {
  EXPECT_THROW(f_S_direct(Diag({1, 0}), {1}, [](double z) { return 1.0 / z; }),
               InvalidArgument);
}

TEST(FSDirectTest, Linearity) {
  const auto d = eigendecompose(RandomSymmetric(7, 10));
  const IndexSet s = {0, 3, 5};
  const auto g = [](double z) { return z * z; };
  const auto h = [](double z) { return std::sin(z); };
  const Matrix combo = f_S_direct(d, s, [&](double z) { return 2.5 * g(z) - 0.75 * h(z); }).dense();
  const Matrix parts = 2.5 * f_S_direct(d, s, g).dense() - 0.75 * f_S_direct(d, s, h).dense();
  EXPECT_LE(MaxAbs(combo - parts), 1e-10);
}

TEST(GapProfileTest, DeltasAndSubsetGap) {
  const GapProfile g(Diag({10, 9, 8.5, 4, 1}));
  EXPECT_EQ(g.deltas(), (std::vector<double>{1, 0.5, 4.5, 3}));
  EXPECT_EQ(g.delta(3), 4.5);
  EXPECT_EQ(g.subset_gap({0, 1, 2}), 4.5);
  // {1, 3}: |9 - 10| = 1 and |8.5 - 9| = 0.5 cross the boundary.
  EXPECT_EQ(g.subset_gap({0, 2}), 0.5);
  EXPECT_TRUE(std::isinf(g.subset_gap({0, 1, 2, 3, 4})));
  EXPECT_THROW(g.delta(5), InvalidArgument);
}

TEST(GapProfileTest, SubsetGapMayBeSmallerThanConsecutiveGap) {
  const GapProfile g(Diag({3, 1, -2}));
  EXPECT_EQ(g.delta(1), 2.0);
  EXPECT_EQ(g.subset_gap({0, 2}), 2.0);
  EXPECT_EQ(g.subset_gap({1}), 2.0);
  const GapProfile h(Diag({5, 4.9, 0}));
  EXPECT_EQ(h.delta(2), 4.9);
  EXPECT_NEAR(h.subset_gap({0, 2}), 0.1, 1e-15);
}

TEST(ComputeStatsTest, SmallestRScan) {
  const auto d = Diag({10, 9, 8.5, 4, 1});
  const auto s = compute_stats(d, SymmetricMatrix::Zero(5), 1);
  EXPECT_EQ(s.r, 3);
  EXPECT_TRUE(s.gap_condition_met);
  EXPECT_EQ(s.x, 0.0);
  EXPECT_EQ(s.x_bar, 0.0);
}

TEST(ComputeStatsTest, NoQualifyingRFlagged) {
  const auto s = compute_stats(Diag({10, 9, 8}), SymmetricMatrix::Zero(3), 1);
  EXPECT_EQ(s.r, 3);
  EXPECT_FALSE(s.gap_condition_met);
}

TEST(ComputeStatsTest, SignSplit) {
  const auto d = Diag({3, 1, -2});
  const auto s = compute_stats(d, SymmetricMatrix::Zero(3), 2);
  EXPECT_EQ(s.k, 1);
  EXPECT_TRUE(s.split_valid);
  EXPECT_TRUE(s.negative_block());
  EXPECT_EQ(s.lambda_k, 3.0);
  EXPECT_EQ(s.delta_k, 2.0);
  EXPECT_EQ(s.lambda_neg, -2.0);
  EXPECT_EQ(s.delta_neg, 3.0);
}

TEST(ComputeStatsTest, SplitValidity) {
  const auto s = compute_stats(Diag({4, 1, -3, -3.5}), SymmetricMatrix::Zero(4), 2);
  EXPECT_EQ(s.k, 1);
  EXPECT_TRUE(s.split_valid);
  // Magnitude tie: the order picks indices 1 and 2, not 1 and 3.
  const auto tie = compute_stats(Diag({3, -3, -3}), SymmetricMatrix::Zero(3), 2);
  EXPECT_EQ(tie.k, 1);
  EXPECT_FALSE(tie.split_valid);
  const auto none = compute_stats(Diag({1, -5, -6}), SymmetricMatrix::Zero(3), 1);
  EXPECT_EQ(none.k, 0);
  EXPECT_FALSE(none.split_valid);
}

TEST(ComputeStatsTest, ProperlyOrderedIntegers) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto d = eigendecompose(RandomSymmetric(9, seed));
    const auto e = NoiseWithNorm(9, seed + 500, 0.05);
    for (int p = 1; p <= 8; ++p) {
      const auto s = compute_stats(d, e, p);
      EXPECT_GE(s.r, p);
      EXPECT_LE(s.r, 9);
      EXPECT_LE(s.k, p);
      EXPECT_LE(s.x, s.noise_norm + 1e-9);
      EXPECT_LE(s.x_bar, s.noise_norm + 1e-9);
      if (s.split_valid) {
        EXPECT_GE(s.r1, s.k);
        EXPECT_LE(s.r2, 9 - (p - s.k) + 1);
      }
    }
  }
}

TEST(ComputeStatsTest, XMatchesDirectBilinearForms) {
  const auto a = RotatedSpectrum({10, 9, 8.5, 4, 1}, 21);
  const auto d = eigendecompose(a);
  const auto e = NoiseWithNorm(5, 22, 0.5);
  const auto s = compute_stats(d, e, 3);
  double x = 0.0;
  for (int i = 1; i <= s.r; ++i) {
    for (int j = 1; j <= s.r; ++j) {
      x = std::max(x, std::abs(d.u(i).dot(e.dense() * d.u(j))));
    }
  }
  EXPECT_NEAR(s.x, x, 1e-12);
  EXPECT_NEAR(s.noise_norm, 0.5, 1e-12);
}

TEST(ComputeStatsTest, XIsMonotoneInR) {
  const auto d = eigendecompose(RandomSymmetric(10, 30));
  const Matrix rot = rotate_to_eigenbasis(d, RandomSymmetric(10, 31));
  double prev = 0.0;
  for (int r = 1; r <= 10; ++r) {
    const double x = internal::BlockMaxAbs(rot, 1, r);
    EXPECT_GE(x, prev);
    prev = x;
  }
}

TEST(ComputeStatsTest, XBarUsesBothDiagonalBlocksOnly) {
  // [8, 1, -8], p = 2, k = 1: r1 = 1, r2 = 3, so x_bar reads entries (1,1)
  // and (3,3) of U^T E U and ignores the cross term (1,3).
  const auto d = Diag({8, 1, -8});
  Matrix e = Matrix::Zero(3, 3);
  e(0, 0) = 0.1;
  e(2, 2) = -0.2;
  e(0, 2) = e(2, 0) = 0.9;
  const auto s = compute_stats(d, SymmetricMatrix::FromDense(e), 2);
  EXPECT_EQ(s.r1, 1);
  EXPECT_EQ(s.r2, 3);
  EXPECT_EQ(s.r_bar, 1);
  EXPECT_EQ(s.x_bar, 0.2);
}

}  // namespace
}  // namespace cbpert
