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

// Composite trapezoid rule with panel doubling.

#ifndef CBPERT_QUADRATURE_HPP_
#define CBPERT_QUADRATURE_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>

#include <Eigen/Dense>

#include "cbpert/matcore.hpp"

namespace cbpert {

struct QuadratureOptions {
  int initial_panels = 64;
  double relative_tolerance = 1e-8;
  // Node budget for one whole contour; each of the four segments gets a
  // quarter of it.
  std::size_t max_total_nodes = std::size_t{1} << 20;
  // Floor for the relative test. 1.0 makes the test absolute for values
  // below one, which suits integrals whose exact value may be zero.
  double scale_floor = 1.0;
};

template <class T>
struct Quadrature {
  T value;
  int panels = 0;
  double last_change = 0.0;
};

namespace internal {

inline double Magnitude(double v) { return std::abs(v); }
inline double Magnitude(const Complex& v) { return std::abs(v); }
template <class Derived>
double Magnitude(const Eigen::MatrixBase<Derived>& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace internal

// Integral of eval(s) over s in [0, 1]. The panel count doubles from
// opts.initial_panels until successive trapezoid estimates T_h, T_{h/2}
// differ by at most relative_tolerance * max(scale_floor, |T_{h/2}|). The
// returned value is the Richardson extrapolation T_{h/2} + (T_{h/2} - T_h) / 3,
// which cancels the h^2 error term; last_change is |T_{h/2} - T_h|.
// Summation order is fixed, so the result depends only on the inputs.
template <class Eval>
auto trapezoid_unit(Eval&& eval, const QuadratureOptions& opts, int max_panels)
    -> Quadrature<std::decay_t<decltype(eval(0.0))>> {
  using T = std::decay_t<decltype(eval(0.0))>;
  int panels = std::max(1, opts.initial_panels);
  T sum = eval(0.0) * 0.5;
  sum += eval(1.0) * 0.5;
  for (int j = 1; j < panels; ++j) sum += eval(static_cast<double>(j) / panels);
  T estimate = sum / static_cast<double>(panels);
  while (true) {
    if (2 * static_cast<long long>(panels) > max_panels) {
      std::ostringstream os;
      os << "trapezoid rule did not converge within " << max_panels << " panels";
      throw ConvergenceError(os.str(), internal::Magnitude(estimate));
    }
    T mid = eval(0.5 / panels);
    for (int j = 1; j < panels; ++j) mid += eval((2.0 * j + 1.0) / (2.0 * panels));
    sum += mid;
    panels *= 2;
    T next = sum / static_cast<double>(panels);
    T diff = next - estimate;
    const double change = internal::Magnitude(diff);
    estimate = std::move(next);
    const double scale = std::max(opts.scale_floor, internal::Magnitude(estimate));
    if (change <= opts.relative_tolerance * scale) {
      T extrapolated = estimate + diff / 3.0;
      return {std::move(extrapolated), panels, change};
    }
  }
}

// Real integral over [a, b].
template <class F>
Quadrature<double> integrate_real(F&& f, double a, double b, const QuadratureOptions& opts) {
  const int max_panels = static_cast<int>(std::min<std::size_t>(opts.max_total_nodes, 1u << 30));
  auto q = trapezoid_unit([&](double s) -> double { return f(a + s * (b - a)); }, opts,
                          max_panels);
  q.value *= (b - a);
  q.last_change *= std::abs(b - a);
  return q;
}

}  // namespace cbpert

#endif  // CBPERT_QUADRATURE_HPP_
