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

// Symmetric noise generators, Wigner norm statistics and the noisy low-rank
// release pipeline.

#ifndef CBPERT_NOISE_HPP_
#define CBPERT_NOISE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbpert/bounds.hpp"
#include "cbpert/matcore.hpp"
#include "cbpert/rng.hpp"
#include "cbpert/spectral.hpp"

namespace cbpert {

enum class NoiseKind { kGaussianWigner, kRademacherWigner, kScaledGaussian };

inline std::string_view to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::kGaussianWigner: return "gaussian_wigner";
    case NoiseKind::kRademacherWigner: return "rademacher_wigner";
    case NoiseKind::kScaledGaussian: return "scaled_gaussian";
  }
  return "unknown";
}

inline std::optional<NoiseKind> parse_noise_kind(std::string_view s) {
  for (NoiseKind k : {NoiseKind::kGaussianWigner, NoiseKind::kRademacherWigner,
                      NoiseKind::kScaledGaussian}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

// gaussian_wigner and rademacher_wigner: entries have standard deviation
// `scale`. scaled_gaussian: Gaussian entries with standard deviation
// scale / (2 sqrt(n)), so that ||E|| is close to `scale` for large n.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::kGaussianWigner;
  double scale = 1.0;
  std::uint64_t seed = 0;

  double entry_sd(int n) const {
    return kind == NoiseKind::kScaledGaussian ? scale / (2.0 * std::sqrt(static_cast<double>(n)))
                                              : scale;
  }

  NoiseSpec for_trial(std::uint64_t trial) const {
    NoiseSpec s = *this;
    s.seed = substream_seed(seed, trial);
    return s;
  }
};

// Upper triangle (diagonal included) drawn row by row, i <= j, then
// mirrored.
inline SymmetricMatrix sample_noise(const NoiseSpec& spec, int n) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (!(spec.scale >= 0) || !std::isfinite(spec.scale)) {
    throw InvalidArgument("noise scale must be finite and non-negative");
  }
  Rng rng(spec.seed);
  const double sd = spec.entry_sd(n);
  Matrix e(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double draw = spec.kind == NoiseKind::kRademacherWigner ? rng.rademacher()
                                                                     : rng.normal();
      e(i, j) = sd * draw;
      e(j, i) = e(i, j);
    }
  }
  return SymmetricMatrix::FromDense(e);
}

// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
// signs of R's diagonal moved into Q.
inline Matrix random_orthogonal(int n, Rng& rng) {
  Matrix g(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

// Q diag(eigenvalues) Q^T.
inline SymmetricMatrix with_spectrum(const std::vector<double>& eigenvalues, const Matrix& basis) {
  const int n = static_cast<int>(eigenvalues.size());
  if (basis.rows() != n || basis.cols() != n) throw InvalidArgument("basis size mismatch");
  const Vector lam = Eigen::Map<const Vector>(eigenvalues.data(), n);
  return SymmetricMatrix::Symmetrize(basis * lam.asDiagonal() * basis.transpose());
}

struct WignerSummary {
  std::vector<double> norm_over_sqrt_n;
  std::vector<double> bilinear_max;
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median of empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// Trial t samples E from spec.for_trial(t). Probe pairs are all (u_a, u_b)
// with a < b; five probes give ten pairs.
inline WignerSummary wigner_statistics(const NoiseSpec& spec, int n, int trials,
                                       const std::vector<Vector>& probes) {
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  for (const Vector& u : probes) {
    if (u.size() != n) throw InvalidArgument("probe vector has wrong dimension");
    if (std::abs(u.norm() - 1.0) > 1e-12) throw InvalidArgument("probe vectors must be unit");
  }
  WignerSummary out;
  const double root_n = std::sqrt(static_cast<double>(n));
  for (int t = 0; t < trials; ++t) {
    const SymmetricMatrix e = sample_noise(spec.for_trial(static_cast<std::uint64_t>(t)), n);
    out.norm_over_sqrt_n.push_back(spectral_norm(e) / root_n);
    double best = 0.0;
    for (std::size_t a = 0; a < probes.size(); ++a) {
      const Vector eu = e.dense() * probes[a];
      for (std::size_t b = a + 1; b < probes.size(); ++b) {
        best = std::max(best, std::abs(probes[b].dot(eu)));
      }
    }
    out.bilinear_max.push_back(best);
  }
  return out;
}

struct PrivatePipelineResult {
  SymmetricMatrix noisy_rank_p;
  double noise_scale = 0.0;
  double measured_noise_norm = 0.0;
  // ||A~_p - A_p||, known only to the data holder.
  double actual_error = 0.0;
  PerturbationStats stats;
  // Eckart-Young first, then each split bound that is applicable.
  std::vector<BoundReport> certificates;
};

inline PrivatePipelineResult private_lowrank(const SpectralDecomposition& da,
                                             const SymmetricMatrix& a, int p,
                                             const NoiseSpec& spec) {
  if (p < 1 || p >= a.n()) throw InvalidArgument("need 1 <= p < n");
  const SymmetricMatrix e = sample_noise(spec, a.n());
  const SpectralDecomposition dp = eigendecompose(a + e);
  PrivatePipelineResult out;
  out.noisy_rank_p = best_rank_p(dp, p);
  out.noise_scale = spec.entry_sd(a.n());
  out.measured_noise_norm = spectral_norm(e);
  out.actual_error = actual_perturbation(da, dp, p, Functional::kRankP);
  out.stats = compute_stats_rotated(da, rotate_to_eigenbasis(da, e), out.measured_noise_norm, p);
  out.certificates.push_back(bound_eckart_young(out.stats));
  for (BoundReport r : {bound_lowrank_E(out.stats), bound_lowrank_xbar(out.stats)}) {
    if (r.applicable) out.certificates.push_back(std::move(r));
  }
  return out;
}

inline PrivatePipelineResult private_lowrank(const SymmetricMatrix& a, int p,
                                             const NoiseSpec& spec) {
  return private_lowrank(eigendecompose(a), a, p, spec);
}

}  // namespace cbpert

#endif  // CBPERT_NOISE_HPP_
