#pragma once

// Linearly implicit Rosenbrock pair of orders 2(3) for small dense autonomous systems.
//
// Tableau (Shampine & Reichelt, the formula behind MATLAB's ode23s):
//   d = 1 / (2 + sqrt 2), e32 = 6 + sqrt 2, W = I - h d J
//   k1 = W^-1 F0
//   F1 = f(y + h/2 k1);           k2 = W^-1 (F1 - k1) + k1
//   y1 = y + h k2;   F2 = f(y1);  k3 = W^-1 (F2 - e32 (k2 - F1) - 2 (k1 - F0))
//   err = h/6 (k1 - 2 k2 + k3)
// The second-order solution is L-stable; the embedded error estimate is third order.
// J must be the exact Jacobian for linear invariants to be preserved.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>

#include "roadozone/error.hpp"

namespace roadozone {

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
using Mat = std::array<std::array<double, N>, N>;

/// In-place LU with partial pivoting for small dense systems.
template <std::size_t N>
class DenseLU {
 public:
  /// Returns false when the matrix is numerically singular.
  bool factor(const Mat<N>& a) {
    lu_ = a;
    for (std::size_t k = 0; k < N; ++k) {
      std::size_t p = k;
      double best = std::abs(lu_[k][k]);
      for (std::size_t i = k + 1; i < N; ++i) {
        if (std::abs(lu_[i][k]) > best) {
          best = std::abs(lu_[i][k]);
          p = i;
        }
      }
      if (best == 0.0 || !std::isfinite(best)) return false;
      perm_[k] = p;
      if (p != k) std::swap(lu_[p], lu_[k]);
      const double inv = 1.0 / lu_[k][k];
      for (std::size_t i = k + 1; i < N; ++i) {
        const double m = lu_[i][k] * inv;
        lu_[i][k] = m;
        if (m == 0.0) continue;
        for (std::size_t j = k + 1; j < N; ++j) lu_[i][j] -= m * lu_[k][j];
      }
    }
    return true;
  }

  Vec<N> solve(Vec<N> b) const {
    for (std::size_t k = 0; k < N; ++k) {
      if (perm_[k] != k) std::swap(b[k], b[perm_[k]]);
      for (std::size_t i = k + 1; i < N; ++i) b[i] -= lu_[i][k] * b[k];
    }
    for (std::size_t k = N; k-- > 0;) {
      for (std::size_t j = k + 1; j < N; ++j) b[k] -= lu_[k][j] * b[j];
      b[k] /= lu_[k][k];
    }
    return b;
  }

 private:
  Mat<N> lu_{};
  std::array<std::size_t, N> perm_{};
};

struct RosenbrockOptions {
  double rtol = 1e-6;
  double atol = 1.0;
  double h_init = 0.0;  ///< 0 selects an initial step from the local derivative
  double h_min = 1e-12;
  double h_max = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 10'000'000;
  /// Reject steps that overshoot below -atol; clip smaller negative excursions to zero.
  bool nonnegative = true;
};

struct RosenbrockStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double next_h = 0.0;  ///< proposed step for a warm restart
};

namespace detail {
struct NoObserver {
  template <class V>
  void operator()(double, const V&) const {}
};
}  // namespace detail

/// Advances y from t0 to t1. `rhs(y)` returns dy/dt; `jac(y)` returns the Jacobian.
/// `observe(t, y)` is invoked after every accepted step.
template <std::size_t N, class Rhs, class Jac, class Observer = detail::NoObserver>
RosenbrockStats rosenbrock23(Rhs&& rhs, Jac&& jac, Vec<N>& y, double t0, double t1, const RosenbrockOptions& opt,
                             Observer&& observe = {}) {
  static const double d = 1.0 / (2.0 + std::sqrt(2.0));
  static const double e32 = 6.0 + std::sqrt(2.0);

  RosenbrockStats stats;
  const double span = t1 - t0;
  if (!(span > 0.0)) {
    stats.next_h = opt.h_init;
    return stats;
  }

  Vec<N> f0 = rhs(y);
  Mat<N> j = jac(y);

  double h = opt.h_init;
  if (!(h > 0.0)) {
    const double threshold = opt.atol / opt.rtol;
    double rh = 0.0;
    for (std::size_t i = 0; i < N; ++i) rh = std::max(rh, std::abs(f0[i]) / std::max(std::abs(y[i]), threshold));
    rh /= 0.8 * std::cbrt(opt.rtol);
    h = span;
    if (h * rh > 1.0) h = 1.0 / rh;
  }
  h = std::min({h, opt.h_max, span});

  double t = t0;
  DenseLU<N> lu;
  while (t < t1) {
    if (stats.accepted + stats.rejected >= opt.max_steps) throw NumericalError("rosenbrock23: step budget exhausted");
    const double remaining = t1 - t;
    const double h_natural = h;
    bool last = false;
    if (h >= remaining * (1.0 - 1e-12) || 1.1 * h >= remaining) {
      h = remaining;
      last = true;
    }

    Mat<N> w{};
    for (std::size_t r = 0; r < N; ++r) {
      for (std::size_t c = 0; c < N; ++c) w[r][c] = (r == c ? 1.0 : 0.0) - h * d * j[r][c];
    }
    if (!lu.factor(w)) throw NumericalError("rosenbrock23: singular iteration matrix");

    const Vec<N> k1 = lu.solve(f0);
    Vec<N> tmp;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    const Vec<N> f1 = rhs(tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = f1[i] - k1[i];
    Vec<N> k2 = lu.solve(tmp);
    Vec<N> ynew;
    for (std::size_t i = 0; i < N; ++i) {
      k2[i] += k1[i];
      ynew[i] = y[i] + h * k2[i];
    }
    const Vec<N> f2 = rhs(ynew);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = f2[i] - e32 * (k2[i] - f1[i]) - 2.0 * (k1[i] - f0[i]);
    const Vec<N> k3 = lu.solve(tmp);

    double err = 0.0;
    bool negative = false;
    for (std::size_t i = 0; i < N; ++i) {
      const double e = h / 6.0 * (k1[i] - 2.0 * k2[i] + k3[i]);
      const double scale = std::max(opt.atol, opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i])));
      err = std::max(err, std::abs(e) / scale);
      if (opt.nonnegative && ynew[i] < -opt.atol) negative = true;
    }
    if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();

    if (err <= 1.0 && !negative) {
      t = last ? t1 : t + h;
      bool clipped = false;
      if (opt.nonnegative) {
        for (auto& v : ynew) {
          if (v < 0.0) {
            v = 0.0;
            clipped = true;
          }
        }
      }
      y = ynew;
      f0 = clipped ? rhs(y) : f2;
      j = jac(y);
      ++stats.accepted;
      observe(t, y);
      const double grow = err > 0.0 ? 0.8 * std::pow(err, -1.0 / 3.0) : 5.0;
      h = std::min(h * std::min(5.0, grow), opt.h_max);
      if (last) h = std::max(h, h_natural);
    } else {
      ++stats.rejected;
      const double shrink = negative ? 0.5 : std::max(0.2, 0.8 * std::pow(err, -1.0 / 3.0));
      h *= shrink;
      if (h < opt.h_min) {
        std::ostringstream os;
        os << "rosenbrock23: step size underflow (h=" << h << " s at t=" << t << " s); problem too stiff";
        throw NumericalError(os.str());
      }
    }
  }
  stats.next_h = h;
  return stats;
}

}  // namespace roadozone
