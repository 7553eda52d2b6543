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

// Dense symmetric matrices, the cyclic Jacobi eigensolver, spectral norms and
// the plain-text matrix format.

#ifndef CBPERT_MATCORE_HPP_
#define CBPERT_MATCORE_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cbpert {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Raised when an argument violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised by iterative routines that hit their iteration cap. `residual` is
// the routine-specific measure of how far from converged it stopped.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// A dense real n x n matrix with entries[i][j] == entries[j][i] bit-for-bit
// and every entry finite.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;

  // Rejects anything that is not exactly symmetric.
  static SymmetricMatrix FromDense(Matrix m) {
    CheckSquareFinite(m);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = j + 1; i < m.rows(); ++i) {
        if (m(i, j) != m(j, i)) {
          std::ostringstream os;
          os << "matrix is not symmetric at (" << i << ", " << j << ")";
          throw InvalidArgument(os.str());
        }
      }
    }
    return SymmetricMatrix(std::move(m));
  }

  // (M + M^T) / 2.
  static SymmetricMatrix Symmetrize(const Matrix& m) {
    CheckSquareFinite(m);
    Matrix s = 0.5 * (m + m.transpose());
    return SymmetricMatrix(std::move(s));
  }

  static SymmetricMatrix Zero(int n) {
    CheckDimension(n);
    return SymmetricMatrix(Matrix::Zero(n, n));
  }

  static SymmetricMatrix Identity(int n) {
    CheckDimension(n);
    return SymmetricMatrix(Matrix::Identity(n, n));
  }

  static SymmetricMatrix Diagonal(const std::vector<double>& d) {
    CheckDimension(static_cast<int>(d.size()));
    Matrix m = Matrix::Zero(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    CheckSquareFinite(m);
    return SymmetricMatrix(std::move(m));
  }

  int n() const { return static_cast<int>(m_.rows()); }
  const Matrix& dense() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  SymmetricMatrix operator+(const SymmetricMatrix& other) const {
    CheckSameSize(other);
    return SymmetricMatrix(m_ + other.m_);
  }
  SymmetricMatrix operator-(const SymmetricMatrix& other) const {
    CheckSameSize(other);
    return SymmetricMatrix(m_ - other.m_);
  }
  SymmetricMatrix scaled(double c) const {
    if (!std::isfinite(c)) throw InvalidArgument("scale factor must be finite");
    return SymmetricMatrix(c * m_);
  }

  bool operator==(const SymmetricMatrix& other) const {
    return m_.rows() == other.m_.rows() && m_ == other.m_;
  }

 private:
  explicit SymmetricMatrix(Matrix m) : m_(std::move(m)) {}

  static void CheckDimension(int n) {
    if (n < 1) throw InvalidArgument("matrix dimension must be positive");
  }
  static void CheckSquareFinite(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1) {
      throw InvalidArgument("matrix must be square and non-empty");
    }
    if (!m.allFinite()) throw InvalidArgument("matrix has non-finite entries");
  }
  void CheckSameSize(const SymmetricMatrix& other) const {
    if (n() != other.n()) throw InvalidArgument("dimension mismatch");
  }

  Matrix m_;
};

// A = U diag(eigenvalues) U^T with eigenvalues descending. singular_order is
// 0-based: singular_order[i] is the eigen-index of the (i+1)-th largest
// singular value.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;  // columns
  std::vector<int> singular_order;
  bool degenerate = false;
  int sweeps = 0;

  int n() const { return static_cast<int>(eigenvalues.size()); }

  // 1-based accessors matching the usual lambda_i / sigma_i notation.
  double lambda(int i) const { return eigenvalues(i - 1); }
  double sigma(int i) const { return std::abs(eigenvalues(singular_order[i - 1])); }
  auto u(int i) const { return eigenvectors.col(i - 1); }
  double spectral_norm() const { return n() == 0 ? 0.0 : sigma(1); }

  Matrix Reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  }
};

struct JacobiOptions {
  double relative_tolerance = 1e-12;
  int max_sweeps = 100;
  double degeneracy_tolerance = 1e-12;
};

// Ties in |lambda| go to the positive eigenvalue, then to the smaller index.
inline std::vector<int> singular_order(const Vector& eigs) {
  for (Eigen::Index i = 1; i < eigs.size(); ++i) {
    if (eigs(i) > eigs(i - 1)) {
      throw InvalidArgument("eigenvalues must be sorted in descending order");
    }
  }
  std::vector<int> order(eigs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double fa = std::abs(eigs(a));
    const double fb = std::abs(eigs(b));
    if (fa != fb) return fa > fb;
    const bool pa = eigs(a) > 0;
    const bool pb = eigs(b) > 0;
    if (pa != pb) return pa;
    return a < b;
  });
  return order;
}

namespace internal {

inline double OffDiagonalNorm(const Matrix& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

// Cyclic Jacobi on a working copy. Leaves eigenvalues on the diagonal of `a`
// and, if `v` is non-null, accumulates the rotations into it.
inline int JacobiSweeps(Matrix& a, Matrix* v, const JacobiOptions& opts) {
  const Eigen::Index n = a.rows();
  const double threshold = opts.relative_tolerance * a.norm();
  double off = OffDiagonalNorm(a);
  int sweep = 0;
  while (off > threshold) {
    if (sweep == opts.max_sweeps) {
      std::ostringstream os;
      os << "Jacobi eigensolver did not converge in " << opts.max_sweeps
         << " sweeps; off-diagonal norm " << off;
      throw ConvergenceError(os.str(), off);
    }
    ++sweep;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        double* cp = a.col(p).data();
        double* cq = a.col(q).data();
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = cp[k];
          const double akq = cq[k];
          cp[k] = c * akp - s * akq;
          cq[k] = s * akp + c * akq;
        }
        cp[p] = app - t * apq;
        cq[q] = aqq + t * apq;
        cp[q] = 0.0;
        cq[p] = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          a(p, k) = cp[k];
          a(q, k) = cq[k];
        }
        if (v != nullptr) {
          double* vp = v->col(p).data();
          double* vq = v->col(q).data();
          for (Eigen::Index k = 0; k < n; ++k) {
            const double vkp = vp[k];
            const double vkq = vq[k];
            vp[k] = c * vkp - s * vkq;
            vq[k] = s * vkp + c * vkq;
          }
        }
      }
    }
    off = OffDiagonalNorm(a);
  }
  return sweep;
}

}  // namespace internal

// Eigenvalues only, descending.
inline Vector eigenvalues(const SymmetricMatrix& a, const JacobiOptions& opts = {}) {
  Matrix work = a.dense();
  internal::JacobiSweeps(work, nullptr, opts);
  Vector d = work.diagonal();
  std::sort(d.data(), d.data() + d.size(), std::greater<double>());
  return d;
}

inline SpectralDecomposition eigendecompose(const SymmetricMatrix& a,
                                            const JacobiOptions& opts = {}) {
  const int n = a.n();
  Matrix work = a.dense();
  Matrix v = Matrix::Identity(n, n);
  SpectralDecomposition out;
  out.sweeps = internal::JacobiSweeps(work, &v, opts);

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int x, int y) { return work(x, x) > work(y, y); });
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    out.eigenvalues(i) = work(idx[i], idx[i]);
    Vector col = v.col(idx[i]);
    Eigen::Index big = 0;
    double best = -1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (std::abs(col(k)) > best) {
        best = std::abs(col(k));
        big = k;
      }
    }
    if (col(big) < 0) col = -col;
    out.eigenvectors.col(i) = col;
  }
  out.singular_order = singular_order(out.eigenvalues);
  const double scale = std::abs(out.eigenvalues(out.singular_order[0]));
  for (int i = 0; i + 1 < n; ++i) {
    if (out.eigenvalues(i) - out.eigenvalues(i + 1) <=
        opts.degeneracy_tolerance * scale) {
      out.degenerate = true;
    }
  }
  return out;
}

// Exact route for symmetric input: max |lambda_i|.
inline double spectral_norm(const SymmetricMatrix& m) {
  return eigenvalues(m).cwiseAbs().maxCoeff();
}

struct PowerIterationOptions {
  int max_iterations = 1000;
  double relative_tolerance = 1e-10;
};

namespace internal {

// Fixed, non-constant start vector. A constant vector is annihilated by
// structured matrices such as [[1, -1], [1, -1]].
inline Vector PowerStartVector(Eigen::Index n) {
  Vector v(n);
  constexpr double kGolden = 0.6180339887498949;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double frac = std::fmod(static_cast<double>(i + 1) * kGolden, 1.0);
    v(i) = 1.0 + frac;
  }
  return v.normalized();
}

template <class MatrixType, class VectorType>
double PowerNorm(const MatrixType& m, VectorType v, const PowerIterationOptions& opts) {
  double sigma = 0.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    VectorType mv = m * v;
    const double next = mv.norm();
    if (next == 0.0) return 0.0;
    VectorType w = m.adjoint() * mv;
    const double wn = w.norm();
    if (wn == 0.0) return next;
    v = w / wn;
    if (std::abs(next - sigma) <= opts.relative_tolerance * next) return next;
    sigma = next;
  }
  return sigma;
}

}  // namespace internal

// Largest singular value of a general real matrix by power iteration on
// M^T M. Returns a lower estimate if the iteration cap is hit.
inline double spectral_norm(const Matrix& m, const PowerIterationOptions& opts = {}) {
  if (!m.allFinite()) throw InvalidArgument("matrix has non-finite entries");
  if (m.size() == 0) return 0.0;
  return internal::PowerNorm(m, internal::PowerStartVector(m.cols()), opts);
}

inline double spectral_norm(const CMatrix& m, const PowerIterationOptions& opts = {}) {
  if (m.size() == 0) return 0.0;
  CVector start = internal::PowerStartVector(m.cols()).cast<Complex>();
  return internal::PowerNorm(m, std::move(start), opts);
}

// Text format: first line n, then n lines of n floats. '#' lines are
// comments and blank lines are skipped.
inline SymmetricMatrix read_matrix(std::istream& in) {
  std::vector<double> values;
  long n = -1;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    if (n < 0) {
      if (!(ls >> n) || n < 1) throw InvalidArgument("bad matrix header line");
      continue;
    }
    std::string tok;
    while (ls >> tok) {
      char* end = nullptr;
      const double x = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') {
        throw InvalidArgument("bad matrix entry '" + tok + "'");
      }
      values.push_back(x);
    }
  }
  if (n < 0) throw InvalidArgument("empty matrix file");
  if (static_cast<long>(values.size()) != n * n) {
    throw InvalidArgument("expected " + std::to_string(n * n) + " entries, got " +
                          std::to_string(values.size()));
  }
  Matrix m(n, n);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < n; ++j) m(i, j) = values[i * n + j];
  }
  return SymmetricMatrix::FromDense(std::move(m));
}

inline void write_matrix(std::ostream& out, const SymmetricMatrix& m) {
  out << m.n() << '\n';
  char buf[32];
  for (int i = 0; i < m.n(); ++i) {
    for (int j = 0; j < m.n(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << (j ? " " : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace cbpert

#endif  // CBPERT_MATCORE_HPP_
