#ifndef BII_OPTIM_HPP
#define BII_OPTIM_HPP

#include <cmath>
#include <functional>

#include "bii/core.hpp"

namespace bii {

struct BfgsSettings {
  int max_iter = 500;
  double grad_tol = 1e-8;  // on max |gradient|
  double step_tol = 1e-14;
};

struct BfgsResult {
  Vector x;
  double value = kInf;
  int iterations = 0;
  bool converged = false;
};

/// Minimise a smooth function with BFGS and Armijo backtracking.
/// `value` may return +inf to signal an infeasible point.
inline BfgsResult minimize_bfgs(const std::function<double(const Vector&)>& value,
                                const std::function<Vector(const Vector&)>& gradient, Vector x,
                                const BfgsSettings& settings = {}) {
  const Eigen::Index n = x.size();
  Matrix h = Matrix::Identity(n, n);  // inverse Hessian approximation
  double f = value(x);
  if (!std::isfinite(f)) throw NumericalError("bfgs: starting point is infeasible");
  Vector g = gradient(x);
  BfgsResult out;
  for (int it = 0; it < settings.max_iter; ++it) {
    out.iterations = it;
    if (g.cwiseAbs().maxCoeff() < settings.grad_tol) {
      out.converged = true;
      break;
    }
    Vector dir = -h * g;
    if (dir.dot(g) >= 0.0) {
      h.setIdentity();
      dir = -g;
    }
    double step = 1.0;
    double f_new = kInf;
    Vector x_new;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      x_new = x + step * dir;
      f_new = value(x_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * g.dot(dir)) break;
    }
    if (!std::isfinite(f_new) || f_new > f) break;
    const Vector g_new = gradient(x_new);
    const Vector s = x_new - x;
    const Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Matrix i_rsy = Matrix::Identity(n, n) - rho * s * y.transpose();
      h = i_rsy * h * i_rsy.transpose() + rho * s * s.transpose();
    }
    const bool tiny = s.cwiseAbs().maxCoeff() < settings.step_tol * (1.0 + x.cwiseAbs().maxCoeff());
    x = x_new;
    f = f_new;
    g = g_new;
    if (tiny) break;
  }
  out.x = x;
  out.value = f;
  out.converged = out.converged || g.cwiseAbs().maxCoeff() < settings.grad_tol;
  return out;
}

}  // namespace bii

#endif  // BII_OPTIM_HPP
