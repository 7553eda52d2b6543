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

// Perturbation bounds for spectral projectors and best rank-p approximations.
//
// Every evaluator is a pure function of PerturbationStats (plus an index set
// or a scalar function where needed) and returns a BoundReport. Hypotheses
// are checked with <= exactly as stated; each failed hypothesis is listed by
// name and makes the report inapplicable. The formula value is still
// reported when its ingredients are defined, otherwise it is +inf.
//
// Logarithms are natural.

#ifndef CBPERT_BOUNDS_HPP_
#define CBPERT_BOUNDS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "cbpert/contour.hpp"
#include "cbpert/matcore.hpp"
#include "cbpert/spectral.hpp"

namespace cbpert {

enum class BoundName {
  kDavisKahanS,
  kDavisKahanP,
  kEckartYoung,
  kEigMain,
  kLowrankXbar,
  kLowrankE,
  kGeneralF,
  kPsdLowrankXbar,
  kPsdLowrankE,
};

inline constexpr std::array<BoundName, 9> kAllBounds = {
    BoundName::kDavisKahanS,    BoundName::kDavisKahanP, BoundName::kEckartYoung,
    BoundName::kEigMain,        BoundName::kLowrankXbar, BoundName::kLowrankE,
    BoundName::kGeneralF,       BoundName::kPsdLowrankXbar, BoundName::kPsdLowrankE,
};

inline std::string_view to_string(BoundName b) {
  switch (b) {
    case BoundName::kDavisKahanS: return "davis_kahan_S";
    case BoundName::kDavisKahanP: return "davis_kahan_p";
    case BoundName::kEckartYoung: return "eckart_young";
    case BoundName::kEigMain: return "eig_main";
    case BoundName::kLowrankXbar: return "lowrank_xbar";
    case BoundName::kLowrankE: return "lowrank_E";
    case BoundName::kGeneralF: return "general_f";
    case BoundName::kPsdLowrankXbar: return "psd_lowrank_xbar";
    case BoundName::kPsdLowrankE: return "psd_lowrank_E";
  }
  return "unknown";
}

inline std::optional<BoundName> parse_bound_name(std::string_view s) {
  for (BoundName b : kAllBounds) {
    if (to_string(b) == s) return b;
  }
  return std::nullopt;
}

struct BoundReport {
  BoundName name = BoundName::kDavisKahanS;
  double value = std::numeric_limits<double>::infinity();
  bool applicable = false;
  std::vector<std::string> precondition_failures;
  // The value exceeds a ceiling every instance satisfies anyway.
  bool vacuous = false;
  std::map<std::string, double> inputs;
  // Eckart-Young only: ||.||_F <= frobenius_factor * ||.||.
  std::optional<double> frobenius_factor;
  std::string note;
};

// Ceiling for the spectral norm of a difference of two orthogonal projectors.
inline constexpr double kProjectorCeiling = 2.0;

// Hypotheses use these names in BoundReport::precondition_failures.
namespace gate {
inline constexpr const char* kPRange = "p_range";
inline constexpr const char* kDeltaZero = "delta_zero";
inline constexpr const char* kGapLower = "gap_lower";
inline constexpr const char* kGapUpper = "gap_upper";
inline constexpr const char* kRNotFound = "r_not_found";
inline constexpr const char* kSplitInvalid = "split_invalid";
inline constexpr const char* kGapLowerK = "gap_lower_k";
inline constexpr const char* kGapUpperK = "gap_upper_k";
inline constexpr const char* kGapLowerNeg = "gap_lower_neg";
inline constexpr const char* kGapUpperNeg = "gap_upper_neg";
inline constexpr const char* kLambdaNegZero = "lambda_neg_zero";
inline constexpr const char* kR1NotFound = "r1_not_found";
inline constexpr const char* kR2NotFound = "r2_not_found";
}  // namespace gate

namespace internal {

inline BoundReport Finish(BoundReport r, double value) {
  r.value = std::isfinite(value) && value >= 0 ? value : std::numeric_limits<double>::infinity();
  r.applicable = r.precondition_failures.empty();
  if (r.applicable && !std::isfinite(r.value)) {
    r.applicable = false;
    r.precondition_failures.emplace_back("value_undefined");
  }
  return r;
}

inline double Sq(double v) { return v * v; }

// 24-scaled bracket shared by the eigenspace and general-f bounds.
inline double EigMainInner(const PerturbationStats& s) {
  return s.noise_norm / std::abs(s.lambda_p) * std::log(6.0 * s.sigma1 / s.delta_p) +
         Sq(s.r) * s.x / s.delta_p;
}

inline void EigMainGates(const PerturbationStats& s, BoundReport& r) {
  if (s.p >= s.n) {
    r.precondition_failures.emplace_back(gate::kPRange);
    return;
  }
  if (!(4.0 * s.noise_norm <= s.delta_p)) r.precondition_failures.emplace_back(gate::kGapLower);
  if (!(s.delta_p <= std::abs(s.lambda_p) / 4.0)) {
    r.precondition_failures.emplace_back(gate::kGapUpper);
  }
  if (!s.gap_condition_met) r.precondition_failures.emplace_back(gate::kRNotFound);
}

inline void EigMainInputs(const PerturbationStats& s, BoundReport& r) {
  r.inputs = {{"noise_norm", s.noise_norm}, {"lambda_p", s.lambda_p}, {"sigma1", s.sigma1},
              {"delta_p", s.delta_p},       {"r", s.r},               {"x", s.x},
              {"p", s.p}};
}

inline void SplitInputs(const PerturbationStats& s, BoundReport& r) {
  r.inputs = {{"noise_norm", s.noise_norm}, {"sigma1", s.sigma1}, {"lambda1", s.lambda1},
              {"p", s.p},                   {"k", s.k},           {"lambda_k", s.lambda_k},
              {"delta_k", s.delta_k}};
  if (s.negative_block()) {
    r.inputs["lambda_neg"] = s.lambda_neg;
    r.inputs["delta_neg"] = s.delta_neg;
  }
}

}  // namespace internal

// 2 ||E|| / delta_S.
inline BoundReport bound_davis_kahan(const PerturbationStats& s, const GapProfile& gaps,
                                     const IndexSet& subset) {
  BoundReport r;
  r.name = BoundName::kDavisKahanS;
  const double delta_s = gaps.subset_gap(subset);
  r.inputs = {{"noise_norm", s.noise_norm}, {"delta_S", delta_s}};
  if (!(delta_s > 0)) r.precondition_failures.emplace_back(gate::kDeltaZero);
  r = internal::Finish(std::move(r), delta_s > 0 ? 2.0 * s.noise_norm / delta_s
                                                 : std::numeric_limits<double>::infinity());
  r.vacuous = r.value > kProjectorCeiling;
  return r;
}

// 2 ||E|| / delta_p, the S = {1..p} case.
inline BoundReport bound_davis_kahan_p(const PerturbationStats& s) {
  BoundReport r;
  r.name = BoundName::kDavisKahanP;
  r.inputs = {{"noise_norm", s.noise_norm}, {"delta_p", s.delta_p}, {"p", s.p}};
  if (s.p >= s.n) {
    r.precondition_failures.emplace_back(gate::kPRange);
  } else if (!(s.delta_p > 0)) {
    r.precondition_failures.emplace_back(gate::kDeltaZero);
  }
  r = internal::Finish(std::move(r), 2.0 * s.noise_norm / s.delta_p);
  r.vacuous = r.value > kProjectorCeiling;
  return r;
}

// 2 (sigma_{p+1} + ||E||).
inline BoundReport bound_eckart_young(const PerturbationStats& s) {
  BoundReport r;
  r.name = BoundName::kEckartYoung;
  r.inputs = {{"noise_norm", s.noise_norm}, {"sigma_next", s.sigma_next}, {"p", s.p}};
  if (s.p >= s.n) r.precondition_failures.emplace_back(gate::kPRange);
  r.frobenius_factor = std::sqrt(2.0 * s.p);
  return internal::Finish(std::move(r), 2.0 * (s.sigma_next + s.noise_norm));
}

// 24 (||E|| / |lambda_p| log(6 sigma_1 / delta_p) + r^2 x / delta_p) under
// 4 ||E|| <= delta_p <= |lambda_p| / 4.
inline BoundReport bound_eig_main(const PerturbationStats& s) {
  BoundReport r;
  r.name = BoundName::kEigMain;
  internal::EigMainInputs(s, r);
  internal::EigMainGates(s, r);
  r = internal::Finish(std::move(r), 24.0 * internal::EigMainInner(s));
  r.vacuous = r.value > kProjectorCeiling;
  return r;
}

// max |f| over the rectangle x0 = lambda_p - delta_p / 2, x1 = 2 sigma_1,
// T = 2 sigma_1. Exact for monomials, 4096 samples per side otherwise.
inline double max_abs_on_rectangle(const RectContour& c, const Monomial& f) {
  return std::pow(c.max_modulus(), f.power);
}

template <class F>
double max_abs_on_rectangle(const RectContour& c, F&& f) {
  constexpr int kSamples = 4096;
  double best = 0.0;
  for (const Segment& seg : c.segments()) {
    for (int j = 0; j <= kSamples; ++j) {
      best = std::max(best, std::abs(Complex(f(seg.at(static_cast<double>(j) / kSamples)))));
    }
  }
  return best;
}

template <class F>
BoundReport bound_general_f(const PerturbationStats& s, F&& f) {
  BoundReport r;
  r.name = BoundName::kGeneralF;
  internal::EigMainInputs(s, r);
  internal::EigMainGates(s, r);
  double max_f = std::numeric_limits<double>::infinity();
  if (s.p < s.n && s.delta_p > 0 && s.sigma1 > 0) {
    const auto c = RectContour::Make(s.lambda_p - s.delta_p / 2.0, 2.0 * s.sigma1,
                                     2.0 * s.sigma1);
    max_f = max_abs_on_rectangle(c, f);
  }
  r.inputs["max_abs_f"] = max_f;
  return internal::Finish(std::move(r), 24.0 * max_f * internal::EigMainInner(s));
}

// Split bound with the noise norm only. With k == p it reduces to
// 6 ||E|| (log(6 sigma_1 / delta_p) + lambda_p / delta_p), reported as
// psd_lowrank_E.
inline BoundReport bound_lowrank_E(const PerturbationStats& s) {
  BoundReport r;
  r.name = BoundName::kLowrankE;
  if (s.p >= s.n) {
    r.precondition_failures.emplace_back(gate::kPRange);
    return internal::Finish(std::move(r), std::numeric_limits<double>::infinity());
  }
  if (!s.split_valid) {
    r.precondition_failures.emplace_back(gate::kSplitInvalid);
    return internal::Finish(std::move(r), std::numeric_limits<double>::infinity());
  }
  internal::SplitInputs(s, r);
  const double e = s.noise_norm;
  if (!(4.0 * e <= s.delta_k)) r.precondition_failures.emplace_back(gate::kGapLowerK);
  double bracket = std::log(6.0 * s.sigma1 / s.delta_k) + s.lambda_k / s.delta_k;
  if (s.negative_block()) {
    if (!(4.0 * e <= s.delta_neg)) r.precondition_failures.emplace_back(gate::kGapLowerNeg);
    if (s.lambda_neg == 0.0) r.precondition_failures.emplace_back(gate::kLambdaNegZero);
    bracket += std::log(6.0 * s.sigma1 / s.delta_neg) + std::abs(s.lambda_neg) / s.delta_neg;
  } else {
    r.name = BoundName::kPsdLowrankE;
  }
  return internal::Finish(std::move(r), 6.0 * e * bracket);
}

// The constant of the positive semidefinite simplification, taken from the
// general split bound.
inline constexpr double kPsdXbarConstant = 30.0;

// Split bound with the block statistic x_bar. With k == p it reduces to
// C (||E|| + r^2 x lambda_p / delta_p) log(lambda_1 / delta_p) with C = 30,
// reported as psd_lowrank_xbar.
//
// The proof's intermediate estimate bounds the positive block with
// x_1 = max_{i,j <= r_1} |u_i^T E u_j| <= x_bar; the report follows the
// stated form in x_bar.
inline BoundReport bound_lowrank_xbar(const PerturbationStats& s) {
  BoundReport r;
  r.name = BoundName::kLowrankXbar;
  if (s.p >= s.n) {
    r.precondition_failures.emplace_back(gate::kPRange);
    return internal::Finish(std::move(r), std::numeric_limits<double>::infinity());
  }
  if (!s.split_valid) {
    r.precondition_failures.emplace_back(gate::kSplitInvalid);
    return internal::Finish(std::move(r), std::numeric_limits<double>::infinity());
  }
  internal::SplitInputs(s, r);
  r.inputs["r1"] = s.r1;
  r.inputs["r_bar"] = s.r_bar;
  r.inputs["x_bar"] = s.x_bar;
  const double e = s.noise_norm;
  if (!(4.0 * e <= s.delta_k)) r.precondition_failures.emplace_back(gate::kGapLowerK);
  if (!(s.delta_k <= s.lambda_k / 4.0)) r.precondition_failures.emplace_back(gate::kGapUpperK);
  if (!s.r1_found) r.precondition_failures.emplace_back(gate::kR1NotFound);
  const double r2x = internal::Sq(s.r_bar) * s.x_bar;

  if (!s.negative_block()) {
    r.name = BoundName::kPsdLowrankXbar;
    r.inputs["C"] = kPsdXbarConstant;
    r.note = "constant C = 30 inherited from the general split bound";
    const double value = kPsdXbarConstant * (e + r2x * s.lambda_k / s.delta_k) *
                         std::log(s.lambda1 / s.delta_k);
    return internal::Finish(std::move(r), value);
  }

  r.inputs["r2"] = s.r2;
  if (!(4.0 * e <= s.delta_neg)) r.precondition_failures.emplace_back(gate::kGapLowerNeg);
  if (!(s.delta_neg <= std::abs(s.lambda_neg) / 4.0)) {
    r.precondition_failures.emplace_back(gate::kGapUpperNeg);
  }
  if (s.lambda_neg == 0.0) r.precondition_failures.emplace_back(gate::kLambdaNegZero);
  if (!s.r2_found) r.precondition_failures.emplace_back(gate::kR2NotFound);
  const double logs =
      std::log(6.0 * s.sigma1 / s.delta_k) + std::log(6.0 * s.sigma1 / s.delta_neg);
  const double ratios = s.lambda_k / s.delta_k + std::abs(s.lambda_neg) / s.delta_neg;
  return internal::Finish(std::move(r), 30.0 * (e + r2x) * logs + 30.0 * r2x * ratios);
}

enum class Functional { kProjP, kProjSingP, kRankP };

inline std::string_view to_string(Functional f) {
  switch (f) {
    case Functional::kProjP: return "proj_p";
    case Functional::kProjSingP: return "proj_sing_p";
    case Functional::kRankP: return "rank_p";
  }
  return "unknown";
}

namespace internal {

// ||Ub diag(wb) Ub^T - Ua diag(wa) Ua^T|| for column blocks Ua, Ub. The
// difference lives in span[Ua, Ub], so its nonzero eigenvalues are those of
// the compression to an orthonormal basis of that span.
inline double LowRankDifferenceNorm(const Matrix& ua, const Vector& wa, const Matrix& ub,
                                    const Vector& wb) {
  const Eigen::Index n = ua.rows();
  const Eigen::Index m = std::min<Eigen::Index>(n, ua.cols() + ub.cols());
  Matrix stacked(n, ua.cols() + ub.cols());
  stacked << ua, ub;
  Eigen::HouseholderQR<Matrix> qr(stacked);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, m);
  const Matrix ca = q.transpose() * ua;
  const Matrix cb = q.transpose() * ub;
  const Matrix small = cb * wb.asDiagonal() * cb.transpose() - ca * wa.asDiagonal() * ca.transpose();
  return spectral_norm(SymmetricMatrix::Symmetrize(small));
}

template <class F>
double FunctionalDifference(const SpectralDecomposition& original,
                            const SpectralDecomposition& perturbed, const IndexSet& s_original,
                            const IndexSet& s_perturbed, F&& f) {
  const auto gather = [&](const SpectralDecomposition& d, const IndexSet& s, Matrix& u,
                          Vector& w) {
    u.resize(d.n(), static_cast<Eigen::Index>(s.size()));
    w.resize(static_cast<Eigen::Index>(s.size()));
    for (std::size_t j = 0; j < s.size(); ++j) {
      u.col(j) = d.eigenvectors.col(s[j]);
      w(j) = static_cast<double>(f(d.eigenvalues(s[j])));
      if (!std::isfinite(w(j))) throw InvalidArgument("f is not finite at an eigenvalue");
    }
  };
  Matrix ua, ub;
  Vector wa, wb;
  gather(original, s_original, ua, wa);
  gather(perturbed, s_perturbed, ub, wb);
  return LowRankDifferenceNorm(ua, wa, ub, wb);
}

}  // namespace internal

// ||f(A~) - f(A)|| for the chosen functional.
inline double actual_perturbation(const SpectralDecomposition& original,
                                  const SpectralDecomposition& perturbed, int p,
                                  Functional functional) {
  if (original.n() != perturbed.n()) throw InvalidArgument("dimension mismatch");
  if (p < 1 || p > original.n()) throw InvalidArgument("p out of range");
  const auto one = [](double) { return 1.0; };
  const auto id = [](double x) { return x; };
  switch (functional) {
    case Functional::kProjP:
      return internal::FunctionalDifference(original, perturbed, leading_set(p), leading_set(p),
                                            one);
    case Functional::kProjSingP:
      return internal::FunctionalDifference(original, perturbed, singular_set(original, p),
                                            singular_set(perturbed, p), one);
    case Functional::kRankP:
      return internal::FunctionalDifference(original, perturbed, singular_set(original, p),
                                            singular_set(perturbed, p), id);
  }
  return 0.0;
}

// ||f_S(A~) - f_S(A)|| for S = {1..p} and a real function f.
template <class F>
double actual_f_perturbation(const SpectralDecomposition& original,
                             const SpectralDecomposition& perturbed, int p, F&& f) {
  if (original.n() != perturbed.n()) throw InvalidArgument("dimension mismatch");
  return internal::FunctionalDifference(original, perturbed, leading_set(p), leading_set(p), f);
}

}  // namespace cbpert

#endif  // CBPERT_BOUNDS_HPP_
