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

// Rectangular contours around parts of a real spectrum, resolvents, and
// numerical contour integrals built on them:
//
//   * contour_f_S: (1 / 2 pi i) \oint f(z) (z - A)^{-1} dz, which equals
//     sum_{i inside} f(lambda_i) u_i u_i^T;
//   * segment_integrals_M / segment_integrals_N: per-side line integrals of
//     the norm bounds used to control the perturbation of f_S;
//   * bootstrap_integrals: F, F_1 and max ||(z - A)^{-1} E|| on the contour.
//
// Segments are numbered 1..4 as left, top, right, bottom and traversed
// counterclockwise. Norm integrals are taken against arc length.

#ifndef CBPERT_CONTOUR_HPP_
#define CBPERT_CONTOUR_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "cbpert/matcore.hpp"
#include "cbpert/quadrature.hpp"
#include "cbpert/spectral.hpp"

namespace cbpert {

// Raised when an eigenvalue sits closer to the contour than an operation
// allows.
class ClearanceError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct Segment {
  Complex start;
  Complex end;
  Complex delta() const { return end - start; }
  double length() const { return std::abs(end - start); }
  Complex at(double s) const { return start + s * (end - start); }
};

class RectContour {
 public:
  RectContour() = default;

  static RectContour Make(double x_left, double x_right, double half_height) {
    if (!std::isfinite(x_left) || !std::isfinite(x_right) || !std::isfinite(half_height)) {
      throw InvalidArgument("contour coordinates must be finite");
    }
    if (!(x_left < x_right)) throw InvalidArgument("contour needs x_left < x_right");
    if (!(half_height > 0)) throw InvalidArgument("contour needs T > 0");
    RectContour c;
    c.x_left_ = x_left;
    c.x_right_ = x_right;
    c.t_ = half_height;
    return c;
  }

  double x_left() const { return x_left_; }
  double x_right() const { return x_right_; }
  double half_height() const { return t_; }

  // Counterclockwise: left side downward, top leftward, right side upward,
  // bottom rightward.
  std::array<Segment, 4> segments() const {
    const Complex tl(x_left_, t_), tr(x_right_, t_);
    const Complex bl(x_left_, -t_), br(x_right_, -t_);
    return {Segment{tl, bl}, Segment{tr, tl}, Segment{br, tr}, Segment{bl, br}};
  }

  bool encloses(double lambda) const { return x_left_ < lambda && lambda < x_right_; }

  // Euclidean distance from the real point lambda to the boundary.
  double distance(double lambda) const {
    if (lambda < x_left_) return x_left_ - lambda;
    if (lambda > x_right_) return lambda - x_right_;
    return std::min({lambda - x_left_, x_right_ - lambda, t_});
  }

  IndexSet enclosed_indices(const Vector& eigs) const {
    IndexSet s;
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
      if (encloses(eigs(i))) s.push_back(static_cast<int>(i));
    }
    return s;
  }

  double min_distance(const Vector& eigs) const {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eigs.size(); ++i) best = std::min(best, distance(eigs(i)));
    return best;
  }

  // Largest |z| on the boundary; attained at a corner.
  double max_modulus() const {
    return std::max(std::abs(Complex(x_left_, t_)), std::abs(Complex(x_right_, t_)));
  }

 private:
  double x_left_ = 0.0;
  double x_right_ = 1.0;
  double t_ = 1.0;
};

// Contour for the leading-p eigenspace: x0 = lambda_p - delta_p / 2,
// x1 = 2 sigma_1, T = 2 sigma_1. Encloses exactly lambda_1..lambda_p.
inline RectContour build_contour_main1(const SpectralDecomposition& d, int p) {
  if (p < 1 || p >= d.n()) throw InvalidArgument("need 1 <= p < n");
  const double gap = d.lambda(p) - d.lambda(p + 1);
  if (!(gap > 0)) throw InvalidArgument("degenerate gap: delta_p = 0");
  const double sigma1 = d.sigma(1);
  return RectContour::Make(d.lambda(p) - gap / 2.0, 2.0 * sigma1, 2.0 * sigma1);
}

struct LowRankContours {
  RectContour positive;                 // encloses lambda_1..lambda_k
  std::optional<RectContour> negative;  // encloses lambda_{n-(p-k)+1}..lambda_n
};

// a0 = lambda_k - delta_k / 2, a1 = 2 lambda_1; b0 = lambda_m + delta_{m-1} / 2,
// b1 = 2 lambda_n with m = n - (p - k) + 1; T = 2 sigma_1 for both. The
// negative rectangle is stored with x_left = b1, x_right = b0.
inline LowRankContours build_contours_lowrank(const SpectralDecomposition& d, int p, int k) {
  const int n = d.n();
  if (p < 1 || p >= n) throw InvalidArgument("need 1 <= p < n");
  const SignSplit split = sign_split(d, p);
  if (!split.valid || split.k != k) {
    throw InvalidArgument("invalid sign split for the leading-p singular set");
  }
  const double t = 2.0 * d.sigma(1);
  const double delta_k = d.lambda(k) - d.lambda(k + 1);
  if (!(delta_k > 0)) throw InvalidArgument("degenerate gap: delta_k = 0");
  LowRankContours out;
  out.positive = RectContour::Make(d.lambda(k) - delta_k / 2.0, 2.0 * d.lambda(1), t);
  IndexSet want(k);
  for (int i = 0; i < k; ++i) want[i] = i;
  if (out.positive.enclosed_indices(d.eigenvalues) != want) {
    throw InvalidArgument("positive contour does not isolate lambda_1..lambda_k");
  }
  if (k < p) {
    const int m = n - (p - k) + 1;
    const double delta_neg = d.lambda(m - 1) - d.lambda(m);
    if (!(delta_neg > 0)) throw InvalidArgument("degenerate gap: delta_{n-(p-k)} = 0");
    const double b0 = d.lambda(m) + delta_neg / 2.0;
    const double b1 = 2.0 * d.lambda(n);
    if (!(b1 < b0)) throw InvalidArgument("negative block must be strictly negative");
    out.negative = RectContour::Make(b1, b0, t);
    IndexSet want_neg;
    for (int i = m - 1; i < n; ++i) want_neg.push_back(i);
    if (out.negative->enclosed_indices(d.eigenvalues) != want_neg) {
      throw InvalidArgument("negative contour does not isolate the negative block");
    }
  }
  return out;
}

struct ClearanceReport {
  double min_distance = 0.0;
  double required = 0.0;
  bool satisfied = false;
  IndexSet inside_original;
  IndexSet inside_perturbed;
};

// Clearance of A's spectrum from the contour against the 2 ||E|| requirement.
inline ClearanceReport clearance(const RectContour& c, const Vector& eigs_original,
                                 const Vector& eigs_perturbed, double noise_norm) {
  ClearanceReport r;
  r.min_distance = c.min_distance(eigs_original);
  r.required = 2.0 * noise_norm;
  r.satisfied = r.min_distance >= r.required;
  r.inside_original = c.enclosed_indices(eigs_original);
  r.inside_perturbed = c.enclosed_indices(eigs_perturbed);
  return r;
}

// (zI - A)^{-1} = sum_i u_i u_i^T / (z - lambda_i).
inline CMatrix resolvent(const SpectralDecomposition& d, Complex z) {
  const double guard = 1e-12 * std::max(1.0, d.spectral_norm());
  CVector w(d.n());
  for (int i = 0; i < d.n(); ++i) {
    const Complex gap = z - d.eigenvalues(i);
    if (std::abs(gap) <= guard) {
      throw InvalidArgument("resolvent evaluated at an eigenvalue");
    }
    w(i) = 1.0 / gap;
  }
  const CMatrix u = d.eigenvectors.cast<Complex>();
  return u * w.asDiagonal() * u.transpose();
}

inline CMatrix resolvent(const SymmetricMatrix& a, Complex z) {
  return resolvent(eigendecompose(a), z);
}

// z^m, usable both on real eigenvalues and complex contour nodes. The
// bounds module knows its exact maximum modulus on a rectangle.
struct Monomial {
  int power = 0;
  template <class T>
  T operator()(T z) const {
    T out(1);
    for (int i = 0; i < power; ++i) out *= z;
    return out;
  }
};

namespace internal {

inline void CheckNodeGuard(const SpectralDecomposition& d, const RectContour& c) {
  const double guard = 1e-10 * d.spectral_norm();
  const double dist = c.min_distance(d.eigenvalues);
  if (dist <= guard) {
    std::ostringstream os;
    os << "eigenvalue within " << dist << " of the contour";
    throw ClearanceError(os.str());
  }
}

inline int PanelCap(const QuadratureOptions& opts) {
  return static_cast<int>(std::max<std::size_t>(1, opts.max_total_nodes / 4));
}

inline QuadratureOptions NormIntegralDefaults() {
  QuadratureOptions q;
  q.relative_tolerance = 1e-4;
  q.scale_floor = 0.0;
  return q;
}

// Integral of g(z) |dz| over each segment.
template <class G>
std::array<Quadrature<double>, 4> ArcLengthIntegrals(const RectContour& c, G&& g,
                                                     const QuadratureOptions& opts) {
  std::array<Quadrature<double>, 4> out;
  const auto segs = c.segments();
  for (int k = 0; k < 4; ++k) {
    const Segment& seg = segs[k];
    auto q = trapezoid_unit([&](double s) -> double { return g(seg.at(s)); }, opts,
                            PanelCap(opts));
    q.value *= seg.length();
    q.last_change *= seg.length();
    out[k] = q;
  }
  return out;
}

}  // namespace internal

struct ContourIntegral {
  SymmetricMatrix value;
  // Per-eigenvalue weights (1 / 2 pi i) \oint f(z) / (z - lambda_i) dz.
  CVector weights;
  double imaginary_residue = 0.0;
  std::array<int, 4> panels{};
};

// f maps Complex -> Complex and must be analytic on and inside the contour;
// only finiteness at the nodes is checked.
template <class F>
ContourIntegral contour_f_S(const SpectralDecomposition& d, const RectContour& c, F&& f,
                            const QuadratureOptions& opts = {}) {
  internal::CheckNodeGuard(d, c);
  const int n = d.n();
  CVector total = CVector::Zero(n);
  ContourIntegral out;
  const auto segs = c.segments();
  for (int k = 0; k < 4; ++k) {
    const Segment& seg = segs[k];
    auto q = trapezoid_unit(
        [&](double s) -> CVector {
          const Complex z = seg.at(s);
          const Complex fz = f(z);
          if (!std::isfinite(fz.real()) || !std::isfinite(fz.imag())) {
            throw InvalidArgument("f is not finite on the contour");
          }
          CVector v(n);
          for (int i = 0; i < n; ++i) v(i) = fz / (z - d.eigenvalues(i));
          return v;
        },
        opts, internal::PanelCap(opts));
    total += q.value * seg.delta();
    out.panels[k] = q.panels;
  }
  const Complex two_pi_i(0.0, 2.0 * std::numbers::pi);
  out.weights = total / two_pi_i;
  Matrix acc = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    acc.noalias() += out.weights(i).real() * d.eigenvectors.col(i) *
                     d.eigenvectors.col(i).transpose();
  }
  out.value = SymmetricMatrix::Symmetrize(acc);
  out.imaginary_residue = out.weights.imag().cwiseAbs().maxCoeff();
  const double result_norm = out.weights.real().cwiseAbs().maxCoeff();
  if (out.imaginary_residue > 1e-7 * (1.0 + result_norm)) {
    std::ostringstream os;
    os << "contour integral has imaginary residue " << out.imaginary_residue;
    throw ConvergenceError(os.str(), out.imaginary_residue);
  }
  return out;
}

template <class F>
ContourIntegral contour_f_S(const SymmetricMatrix& a, const RectContour& c, F&& f,
                            const QuadratureOptions& opts = {}) {
  return contour_f_S(eigendecompose(a), c, std::forward<F>(f), opts);
}

// (1 / 2 pi i) \oint f(z) [(z - A~)^{-1} - (z - A)^{-1}] dz, integrated as a
// single matrix-valued integrand (not as a difference of two integrals).
template <class F>
SymmetricMatrix contour_difference(const SpectralDecomposition& da,
                                   const SpectralDecomposition& dp, const RectContour& c,
                                   F&& f, const QuadratureOptions& opts = {}) {
  internal::CheckNodeGuard(da, c);
  internal::CheckNodeGuard(dp, c);
  const int n = da.n();
  const Matrix w = da.eigenvectors.transpose() * dp.eigenvectors;
  CMatrix total = CMatrix::Zero(n, n);
  for (const Segment& seg : c.segments()) {
    auto q = trapezoid_unit(
        [&](double s) -> CMatrix {
          const Complex z = seg.at(s);
          const Complex fz = f(z);
          Vector re(n), im(n);
          for (int i = 0; i < n; ++i) {
            const Complex g = 1.0 / (z - dp.eigenvalues(i));
            re(i) = g.real();
            im(i) = g.imag();
          }
          CMatrix g(n, n);
          g.real() = w * re.asDiagonal() * w.transpose();
          g.imag() = w * im.asDiagonal() * w.transpose();
          for (int i = 0; i < n; ++i) g(i, i) -= 1.0 / (z - da.eigenvalues(i));
          return fz * g;
        },
        opts, internal::PanelCap(opts));
    total += q.value * seg.delta();
  }
  const Complex two_pi_i(0.0, 2.0 * std::numbers::pi);
  const CMatrix in_basis = total / two_pi_i;
  const Matrix back = da.eigenvectors * in_basis.real() * da.eigenvectors.transpose();
  return SymmetricMatrix::Symmetrize(back);
}

struct SegmentIntegrals {
  std::array<double, 4> values{};
  std::array<int, 4> panels{};
  double sum() const { return values[0] + values[1] + values[2] + values[3]; }
};

// M_k = \int_{Gamma_k} || f(z) (z - A)^{-1} E (z - A)^{-1} || |dz|. Requires
// every eigenvalue of A to be at least 2 ||E|| from the contour.
template <class F>
SegmentIntegrals segment_integrals_M(const SpectralDecomposition& d, const SymmetricMatrix& e,
                                     const RectContour& c, F&& f,
                                     QuadratureOptions opts = internal::NormIntegralDefaults()) {
  if (e.n() != d.n()) throw InvalidArgument("dimension mismatch");
  internal::CheckNodeGuard(d, c);
  const double noise_norm = spectral_norm(e);
  const double dist = c.min_distance(d.eigenvalues);
  if (dist < 2.0 * noise_norm) {
    std::ostringstream os;
    os << "clearance " << dist << " is below 2||E|| = " << 2.0 * noise_norm;
    throw ClearanceError(os.str());
  }
  const int n = d.n();
  const CMatrix rotated = rotate_to_eigenbasis(d, e).cast<Complex>();
  auto integrand = [&](Complex z) -> double {
    CVector w(n);
    for (int i = 0; i < n; ++i) w(i) = 1.0 / (z - d.eigenvalues(i));
    const CMatrix b = f(z) * (w.asDiagonal() * rotated * w.asDiagonal());
    return spectral_norm(b);
  };
  const auto q = internal::ArcLengthIntegrals(c, integrand, opts);
  SegmentIntegrals out;
  for (int k = 0; k < 4; ++k) {
    out.values[k] = q[k].value;
    out.panels[k] = q[k].panels;
  }
  return out;
}

// N_l = \int_{Gamma_l} |z| / min_i |z - lambda_i|^2 |dz|.
inline SegmentIntegrals segment_integrals_N(
    const SpectralDecomposition& d, const RectContour& c,
    QuadratureOptions opts = internal::NormIntegralDefaults()) {
  internal::CheckNodeGuard(d, c);
  auto integrand = [&](Complex z) -> double {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d.n(); ++i) best = std::min(best, std::norm(z - d.eigenvalues(i)));
    return std::abs(z) / best;
  };
  const auto q = internal::ArcLengthIntegrals(c, integrand, opts);
  SegmentIntegrals out;
  for (int k = 0; k < 4; ++k) {
    out.values[k] = q[k].value;
    out.panels[k] = q[k].panels;
  }
  return out;
}

// ||(z - A)^{-1} E||, as the square root of the largest eigenvalue of the
// positive semidefinite E' diag(1/|z - lambda|^2) E'.
inline double resolvent_noise_norm(const SpectralDecomposition& d, const Matrix& rotated_noise,
                                   Complex z) {
  const int n = d.n();
  Vector w(n);
  for (int i = 0; i < n; ++i) w(i) = 1.0 / std::norm(z - d.eigenvalues(i));
  const Matrix k = rotated_noise * w.asDiagonal() * rotated_noise;
  return std::sqrt(spectral_norm(k));
}

struct BootstrapIntegrals {
  double f_integral = 0.0;   // F(f, S)
  double f1_integral = 0.0;  // F_1(f, S)
  double max_resolvent_noise = 0.0;
  SegmentIntegrals m_segments;
};

// Quantities in ||f_S(A~) - f_S(A)|| <= F <= 2 F_1, together with the
// sampled maximum of ||(z - A)^{-1} E|| over the contour. `samples_per_side`
// sample points per side include both corners and the side midpoint.
template <class F>
BootstrapIntegrals bootstrap_integrals(const SpectralDecomposition& da,
                                       const SpectralDecomposition& dp,
                                       const SymmetricMatrix& e, const RectContour& c, F&& f,
                                       int samples_per_side = 1024,
                                       QuadratureOptions opts = internal::NormIntegralDefaults()) {
  BootstrapIntegrals out;
  if (e.n() != da.n() || dp.n() != da.n()) throw InvalidArgument("dimension mismatch");
  // A~ = A: every quantity vanishes, and relative quadrature on rounding
  // residue would never settle.
  if (e.dense().isZero(0.0)) return out;
  out.m_segments = segment_integrals_M(da, e, c, f, opts);
  out.f1_integral = out.m_segments.sum() / (2.0 * std::numbers::pi);

  internal::CheckNodeGuard(dp, c);
  const int n = da.n();
  const Matrix w = da.eigenvectors.transpose() * dp.eigenvectors;
  auto integrand = [&](Complex z) -> double {
    Vector re(n), im(n);
    for (int i = 0; i < n; ++i) {
      const Complex g = 1.0 / (z - dp.eigenvalues(i));
      re(i) = g.real();
      im(i) = g.imag();
    }
    CMatrix g(n, n);
    g.real() = w * re.asDiagonal() * w.transpose();
    g.imag() = w * im.asDiagonal() * w.transpose();
    for (int i = 0; i < n; ++i) g(i, i) -= 1.0 / (z - da.eigenvalues(i));
    return std::abs(f(z)) * spectral_norm(g);
  };
  const auto q = internal::ArcLengthIntegrals(c, integrand, opts);
  for (const auto& side : q) out.f_integral += side.value;
  out.f_integral /= 2.0 * std::numbers::pi;

  const Matrix rotated = rotate_to_eigenbasis(da, e);
  const int samples = std::max(2, samples_per_side + (samples_per_side % 2));
  for (const Segment& seg : c.segments()) {
    for (int j = 0; j <= samples; ++j) {
      const Complex z = seg.at(static_cast<double>(j) / samples);
      out.max_resolvent_noise =
          std::max(out.max_resolvent_noise, resolvent_noise_norm(da, rotated, z));
    }
  }
  return out;
}

struct IntegralLemmaCheck {
  double numeric = 0.0;
  double closed_form = 0.0;
  double bound = 0.0;
  bool holds = false;
};

// \int_{-T}^{T} dt / (t^2 + a^2) against 4 / a for 0 < a <= T.
inline IntegralLemmaCheck integral_lemma_check(double a, double t) {
  if (!(a > 0) || !(t > 0)) throw InvalidArgument("need a > 0 and T > 0");
  if (a > t) throw InvalidArgument("need a <= T");
  QuadratureOptions opts;
  opts.relative_tolerance = 1e-11;
  opts.scale_floor = 0.0;
  const auto q = integrate_real([a](double x) { return 1.0 / (x * x + a * a); }, -t, t, opts);
  IntegralLemmaCheck out;
  out.numeric = q.value;
  out.closed_form = 2.0 / a * std::atan(t / a);
  out.bound = 4.0 / a;
  out.holds = out.numeric <= out.bound + 1e-9;
  return out;
}

}  // namespace cbpert

#endif  // CBPERT_CONTOUR_HPP_
