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
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace cbpert {
namespace {

using testing::MaxAbs;
using testing::RandomSymmetric;
using testing::SvdNorm;

TEST(SymmetricMatrixTest, RejectsAsymmetricAndNonFinite) {
  Matrix m(2, 2);
  m << 1, 2, 2.0000001, 1;
  EXPECT_THROW(SymmetricMatrix::FromDense(m), InvalidArgument);
  m(1, 0) = 2;
  EXPECT_NO_THROW(SymmetricMatrix::FromDense(m));
  m(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(SymmetricMatrix::FromDense(m), InvalidArgument);
  EXPECT_THROW(SymmetricMatrix::FromDense(Matrix(2, 3)), InvalidArgument);
}

TEST(SymmetricMatrixTest, SymmetrizeAveragesTranspose) {
  Matrix m(2, 2);
  m << 1, 4, 2, 3;
  const auto s = SymmetricMatrix::Symmetrize(m);
  EXPECT_EQ(s(0, 1), 3.0);
  EXPECT_EQ(s(1, 0), 3.0);
}

TEST(EigendecomposeTest, DiagonalMatrix) {
  const auto d = eigendecompose(SymmetricMatrix::Diagonal({3, 1, -2}));
  EXPECT_EQ(d.eigenvalues, Vector::Map(std::vector<double>{3, 1, -2}.data(), 3));
  EXPECT_LE(MaxAbs(d.eigenvectors - Matrix::Identity(3, 3)), 1e-15);
}

TEST(EigendecomposeTest, SwapMatrix) {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  const auto d = eigendecompose(SymmetricMatrix::FromDense(m));
  EXPECT_NEAR(d.lambda(1), 1.0, 1e-15);
  EXPECT_NEAR(d.lambda(2), -1.0, 1e-15);
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(d.u(1)(0), h, 1e-15);
  EXPECT_NEAR(d.u(1)(1), h, 1e-15);
  EXPECT_NEAR(d.u(2)(0), h, 1e-15);
  EXPECT_NEAR(d.u(2)(1), -h, 1e-15);
}

TEST(EigendecomposeTest, SeededReconstructionAndOrthogonality) {
  const auto a = RandomSymmetric(8, 42);
  const auto d = eigendecompose(a);
  EXPECT_LE(MaxAbs(d.Reconstruct() - a.dense()), 1e-9);
  EXPECT_LE(MaxAbs(d.eigenvectors.transpose() * d.eigenvectors - Matrix::Identity(8, 8)), 1e-10);
  for (int i = 1; i < 8; ++i) EXPECT_GE(d.lambda(i), d.lambda(i + 1));
  for (int i = 1; i < 8; ++i) EXPECT_GE(d.sigma(i), d.sigma(i + 1));
}

TEST(EigendecomposeTest, MatchesIndependentSolver) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto a = RandomSymmetric(12, seed);
    Eigen::SelfAdjointEigenSolver<Matrix> es(a.dense());
    const Vector ref = es.eigenvalues().reverse();
    EXPECT_LE((eigendecompose(a).eigenvalues - ref).cwiseAbs().maxCoeff(), 1e-10) << seed;
  }
}

TEST(EigendecomposeTest, SignConvention) {
  const auto d = eigendecompose(RandomSymmetric(9, 5));
  for (int j = 0; j < 9; ++j) {
    Eigen::Index arg = 0;
    d.eigenvectors.col(j).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(d.eigenvectors(arg, j), 0.0);
  }
}

TEST(EigendecomposeTest, BitwiseDeterministic) {
  const auto a = RandomSymmetric(15, 77);
  const auto d1 = eigendecompose(a);
  const auto d2 = eigendecompose(a);
  EXPECT_TRUE(d1.eigenvalues == d2.eigenvalues);
  EXPECT_TRUE(d1.eigenvectors == d2.eigenvectors);
}

TEST(EigendecomposeTest, DegeneracyFlag) {
  EXPECT_TRUE(eigendecompose(SymmetricMatrix::Diagonal({2, 2, 1})).degenerate);
  EXPECT_FALSE(eigendecompose(SymmetricMatrix::Diagonal({3, 2, 1})).degenerate);
}

TEST(EigendecomposeTest, SweepCapReportsResidual) {
  JacobiOptions opts;
  opts.max_sweeps = 1;
  try {
    eigendecompose(RandomSymmetric(20, 3), opts);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(EigendecomposeTest, WeylInequality) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = RandomSymmetric(10, seed);
    const auto e = RandomSymmetric(10, seed + 1000, 0.1);
    const Vector diff = eigenvalues(a + e) - eigenvalues(a);
    EXPECT_LE(diff.cwiseAbs().maxCoeff(), spectral_norm(e) + 1e-9);
  }
}

TEST(SpectralNormTest, Examples) {
  EXPECT_EQ(spectral_norm(SymmetricMatrix::Diagonal({3, 1, -5})), 5.0);
  EXPECT_EQ(spectral_norm(SymmetricMatrix::Zero(4)), 0.0);
  const auto a = RandomSymmetric(10, 7);
  EXPECT_NEAR(spectral_norm(a), eigendecompose(a).eigenvalues.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SpectralNormTest, GeneralMatrixAgainstSvd) {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix m(7, 7);
    for (int i = 0; i < 49; ++i) m.data()[i] = rng.normal();
    const double ref = SvdNorm(m);
    EXPECT_NEAR(spectral_norm(m), ref, 1e-8 * ref);
  }
  Matrix zero = Matrix::Zero(3, 3);
  EXPECT_EQ(spectral_norm(zero), 0.0);
}

TEST(SpectralNormTest, StructuredMatrixNotAnnihilatedByStart) {
  Matrix m(2, 2);
  m << 1, -1, 1, -1;
  EXPECT_NEAR(spectral_norm(m), 2.0, 1e-10);
}

TEST(SpectralNormTest, ComplexMatrixAgainstSvd) {
  Rng rng(12);
  CMatrix m(6, 6);
  for (int i = 0; i < 36; ++i) m.data()[i] = Complex(rng.normal(), rng.normal());
  const double ref = SvdNorm(m);
  EXPECT_NEAR(spectral_norm(m), ref, 1e-8 * ref);
}

TEST(SingularOrderTest, Examples) {
  Vector v(3);
  v << 3, 1, -2;
  EXPECT_EQ(singular_order(v), (std::vector<int>{0, 2, 1}));
  Vector tie(2);
  tie << 5, -5;
  EXPECT_EQ(singular_order(tie), (std::vector<int>{0, 1}));
  Vector bad(2);
  bad << -4, -7;
  EXPECT_NO_THROW(singular_order(bad));
  bad << -7, -4;
  EXPECT_THROW(singular_order(bad), InvalidArgument);
}

TEST(SingularOrderTest, TiesAmongNegativesUseSmallerIndex) {
  Vector v(4);
  v << 2, -2, -2, -3;
  EXPECT_EQ(singular_order(v), (std::vector<int>{3, 0, 1, 2}));
}

TEST(MatrixIoTest, RoundTripIsExact) {
  const auto a = RandomSymmetric(5, 9);
  std::stringstream ss;
  write_matrix(ss, a);
  EXPECT_TRUE(read_matrix(ss) == a);
}

TEST(MatrixIoTest, CommentsAndBlankLines) {
  std::istringstream in("# header comment\n2\n\n1 0.5\n# inside\n0.5 -1\n");
  const auto a = read_matrix(in);
  EXPECT_EQ(a.n(), 2);
  EXPECT_EQ(a(0, 1), 0.5);
  EXPECT_EQ(a(1, 1), -1.0);
}

TEST(MatrixIoTest, RejectsMalformedInput) {
  std::istringstream short_in("2\n1 2\n2\n");
  EXPECT_THROW(read_matrix(short_in), InvalidArgument);
  std::istringstream asym("2\n1 2\n3 1\n");
  EXPECT_THROW(read_matrix(asym), InvalidArgument);
  std::istringstream junk("2\n1 x\n2 1\n");
  EXPECT_THROW(read_matrix(junk), InvalidArgument);
  std::istringstream empty("# nothing\n");
  EXPECT_THROW(read_matrix(empty), InvalidArgument);
}

}  // namespace
}  // namespace cbpert
