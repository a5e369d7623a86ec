#pragma once

// Reference computations for the tests. Nothing here calls into the library's
// numerical routines; each function is the textbook definition evaluated the
// slow way.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Composite trapezoid rule with `n` panels.
inline double trapezoid(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + i * h);
  return s * h;
}

/// Fourth-order central difference.
inline double derivative(const std::function<double(double)>& f, double x, double h = 1e-4) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

/// Central-difference gradient of a multivariate function.
inline Eigen::VectorXd gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd a = x, b = x;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

/// B_{i,k}(u) by the recursive definition on the full knot sequence `t`
/// (degree k), with the right end point assigned to the last basis function.
inline double bspline(const std::vector<double>& t, int i, int k, double u) {
  if (k == 0) {
    const bool last = u == t.back() && t[i] < t[i + 1] && t[i + 1] == t.back();
    return (t[i] <= u && u < t[i + 1]) || last ? 1.0 : 0.0;
  }
  double left = 0.0, right = 0.0;
  if (t[i + k] > t[i]) left = (u - t[i]) / (t[i + k] - t[i]) * bspline(t, i, k - 1, u);
  if (t[i + k + 1] > t[i + 1]) {
    right = (t[i + k + 1] - u) / (t[i + k + 1] - t[i + 1]) * bspline(t, i + 1, k - 1, u);
  }
  return left + right;
}

/// Clamped knot sequence: lower and upper each repeated degree+1 times.
inline std::vector<double> clamped(int degree, double lower, double upper,
                                   const std::vector<double>& interior) {
  std::vector<double> t(static_cast<std::size_t>(degree + 1), lower);
  t.insert(t.end(), interior.begin(), interior.end());
  t.insert(t.end(), static_cast<std::size_t>(degree + 1), upper);
  return t;
}

/// SCAD value by the closed form of each piece.
inline double scad(double lambda, double a, double w) {
  w = std::abs(w);
  if (w <= lambda) return lambda * w;
  if (w <= a * lambda) return (2 * a * lambda * w - w * w - lambda * lambda) / (2 * (a - 1));
  return (a + 1) * lambda * lambda / 2;
}

/// Dense least squares by normal equations on an explicitly built design.
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& w, const Eigen::VectorXd& y) {
  return (w.transpose() * w).ldlt().solve(w.transpose() * y);
}

}  // namespace oracle
