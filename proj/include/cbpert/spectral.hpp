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

// Spectral functionals (projectors, best rank-p approximants, f_S(A)),
// eigenvalue gaps and the perturbation statistics consumed by the bounds.
//
// Index conventions: IndexSet holds 0-based eigen-indices. Integer statistics
// (p, r, k, r1, r2) keep their 1-based meaning: r = 3 means "the first three
// eigenvectors".

#ifndef CBPERT_SPECTRAL_HPP_
#define CBPERT_SPECTRAL_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "cbpert/matcore.hpp"

namespace cbpert {

using IndexSet = std::vector<int>;

// Sorted, de-duplicated copy of `s`; throws if empty or out of [0, n).
inline IndexSet normalize_index_set(IndexSet s, int n) {
  if (s.empty()) throw InvalidArgument("index set must be non-empty");
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  if (s.front() < 0 || s.back() >= n) {
    throw InvalidArgument("index set out of range [0, " + std::to_string(n) + ")");
  }
  return s;
}

// {0, ..., p-1}: the leading p eigenvalues by value.
inline IndexSet leading_set(int p) {
  IndexSet s(p);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

// {pi(1), ..., pi(p)}: the leading p by magnitude.
inline IndexSet singular_set(const SpectralDecomposition& d, int p) {
  if (p < 1 || p > d.n()) throw InvalidArgument("p out of range");
  IndexSet s(d.singular_order.begin(), d.singular_order.begin() + p);
  std::sort(s.begin(), s.end());
  return s;
}

template <class F>
SymmetricMatrix f_S_direct(const SpectralDecomposition& d, IndexSet s, F&& f) {
  s = normalize_index_set(std::move(s), d.n());
  Matrix acc = Matrix::Zero(d.n(), d.n());
  for (int i : s) {
    const double w = static_cast<double>(f(d.eigenvalues(i)));
    if (!std::isfinite(w)) {
      throw InvalidArgument("f is not finite at eigenvalue " +
                            std::to_string(d.eigenvalues(i)));
    }
    acc.noalias() += w * d.eigenvectors.col(i) * d.eigenvectors.col(i).transpose();
  }
  return SymmetricMatrix::Symmetrize(acc);
}

inline SymmetricMatrix projector(const SpectralDecomposition& d, IndexSet s) {
  return f_S_direct(d, std::move(s), [](double) { return 1.0; });
}

// A_p: keeps the p eigen-components of largest magnitude.
inline SymmetricMatrix best_rank_p(const SpectralDecomposition& d, int p) {
  return f_S_direct(d, singular_set(d, p), [](double x) { return x; });
}

class GapProfile {
 public:
  explicit GapProfile(Vector eigenvalues) : eigs_(std::move(eigenvalues)) {
    for (Eigen::Index i = 1; i < eigs_.size(); ++i) {
      if (eigs_(i) > eigs_(i - 1)) {
        throw InvalidArgument("eigenvalues must be sorted in descending order");
      }
    }
  }
  explicit GapProfile(const SpectralDecomposition& d) : GapProfile(d.eigenvalues) {}

  int n() const { return static_cast<int>(eigs_.size()); }

  // delta_p = lambda_p - lambda_{p+1}, 1 <= p < n.
  double delta(int p) const {
    if (p < 1 || p >= n()) throw InvalidArgument("gap index out of range");
    return eigs_(p - 1) - eigs_(p);
  }

  std::vector<double> deltas() const {
    std::vector<double> out;
    for (int p = 1; p < n(); ++p) out.push_back(delta(p));
    return out;
  }

  // min |lambda_i - lambda_j| over i in S, j not in S. +inf if S is everything.
  double subset_gap(IndexSet s) const {
    s = normalize_index_set(std::move(s), n());
    std::vector<char> in(n(), 0);
    for (int i : s) in[i] = 1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n(); ++i) {
      if (!in[i]) continue;
      for (int j = 0; j < n(); ++j) {
        if (in[j]) continue;
        best = std::min(best, std::abs(eigs_(i) - eigs_(j)));
      }
    }
    return best;
  }

 private:
  Vector eigs_;
};

// Everything the bound evaluators read. Quantities that do not exist for a
// given instance (e.g. the negative block when k == p) are NaN.
struct PerturbationStats {
  int n = 0;
  int p = 0;
  double noise_norm = 0.0;

  double lambda1 = 0.0;
  double lambda_n = 0.0;
  double sigma1 = 0.0;
  double lambda_p = 0.0;
  double delta_p = std::numeric_limits<double>::quiet_NaN();
  double sigma_next = std::numeric_limits<double>::quiet_NaN();  // sigma_{p+1}

  // Eigenspace statistics.
  int r = 0;
  bool gap_condition_met = false;
  double x = 0.0;

  // Sign split of the leading-p singular set.
  int k = 0;
  bool split_valid = false;
  double lambda_k = std::numeric_limits<double>::quiet_NaN();
  double delta_k = std::numeric_limits<double>::quiet_NaN();
  double lambda_neg = std::numeric_limits<double>::quiet_NaN();  // lambda_{n-(p-k)+1}
  double delta_neg = std::numeric_limits<double>::quiet_NaN();   // delta_{n-(p-k)}
  int r1 = 0;
  bool r1_found = false;
  int r2 = 0;
  bool r2_found = false;
  int r_bar = 0;
  double x_bar = 0.0;

  bool negative_block() const { return k < p; }
};

struct SignSplit {
  int k = 0;
  bool valid = false;
};

// k counts the positive eigenvalues among the leading-p singular set. The
// split is valid when k >= 1 and that set is {1..k} u {n-(p-k)+1..n},
// compared by index rather than by value.
inline SignSplit sign_split(const SpectralDecomposition& d, int p) {
  const int n = d.n();
  if (p < 1 || p > n) throw InvalidArgument("p out of range");
  IndexSet top = singular_set(d, p);
  SignSplit out;
  for (int i : top) {
    if (d.eigenvalues(i) > 0) ++out.k;
  }
  IndexSet expected;
  for (int i = 0; i < out.k; ++i) expected.push_back(i);
  for (int i = n - (p - out.k); i < n; ++i) expected.push_back(i);
  out.valid = out.k >= 1 && expected == top;
  return out;
}

// E expressed in A's eigenbasis: entry (i, j) is u_i^T E u_j.
inline Matrix rotate_to_eigenbasis(const SpectralDecomposition& d, const SymmetricMatrix& e) {
  if (e.n() != d.n()) throw InvalidArgument("dimension mismatch");
  return d.eigenvectors.transpose() * e.dense() * d.eigenvectors;
}

namespace internal {

// max |B(i, j)| over the 1-based index window [lo, hi] x [lo, hi].
inline double BlockMaxAbs(const Matrix& b, int lo, int hi) {
  if (hi < lo) return 0.0;
  return b.block(lo - 1, lo - 1, hi - lo + 1, hi - lo + 1).cwiseAbs().maxCoeff();
}

}  // namespace internal

// Same as compute_stats but reuses a precomputed u_i^T E u_j table and norm.
inline PerturbationStats compute_stats_rotated(const SpectralDecomposition& d,
                                               const Matrix& rotated_noise,
                                               double noise_norm, int p) {
  const int n = d.n();
  if (p < 1 || p > n) throw InvalidArgument("p out of range");
  const auto lam = [&](int i) { return d.lambda(i); };

  PerturbationStats s;
  s.n = n;
  s.p = p;
  s.noise_norm = noise_norm;
  s.lambda1 = lam(1);
  s.lambda_n = lam(n);
  s.sigma1 = d.sigma(1);
  s.lambda_p = lam(p);
  if (p < n) {
    s.delta_p = lam(p) - lam(p + 1);
    s.sigma_next = d.sigma(p + 1);
  }

  // r: smallest r >= p with |lambda_p| / 2 <= |lambda_p - lambda_{r+1}|.
  s.r = n;
  for (int r = p; r < n; ++r) {
    if (std::abs(lam(p)) / 2.0 <= std::abs(lam(p) - lam(r + 1))) {
      s.r = r;
      s.gap_condition_met = true;
      break;
    }
  }
  s.x = internal::BlockMaxAbs(rotated_noise, 1, s.r);

  const SignSplit split = sign_split(d, p);
  s.k = split.k;
  s.split_valid = split.valid;
  if (!s.split_valid) return s;

  const int k = s.k;
  const int m = n - (p - k) + 1;  // first index of the negative block
  s.lambda_k = lam(k);
  if (k < n) s.delta_k = lam(k) - lam(k + 1);

  s.r1 = n;
  for (int r1 = k; r1 < n; ++r1) {
    if (lam(k) / 2.0 <= std::abs(lam(k) - lam(r1 + 1))) {
      s.r1 = r1;
      s.r1_found = true;
      break;
    }
  }
  double xb = internal::BlockMaxAbs(rotated_noise, 1, s.r1);
  s.r_bar = s.r1;

  if (s.negative_block()) {
    s.lambda_neg = lam(m);
    s.delta_neg = lam(m - 1) - lam(m);
    s.r2 = 1;
    for (int r2 = m; r2 >= 2; --r2) {
      if (std::abs(lam(m)) / 2.0 <= std::abs(lam(m) - lam(r2 - 1))) {
        s.r2 = r2;
        s.r2_found = true;
        break;
      }
    }
    xb = std::max(xb, internal::BlockMaxAbs(rotated_noise, s.r2, n));
    s.r_bar = std::max(s.r1, n - s.r2 + 1);
  }
  s.x_bar = xb;
  return s;
}

inline PerturbationStats compute_stats(const SpectralDecomposition& d,
                                       const SymmetricMatrix& e, int p) {
  return compute_stats_rotated(d, rotate_to_eigenbasis(d, e), spectral_norm(e), p);
}

}  // namespace cbpert

#endif  // CBPERT_SPECTRAL_HPP_
