#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace cvtele::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b].
Rule gauss_legendre(int n, double a, double b);

/// n-point Gauss-Laguerre rule for  int_0^inf e^{-u} f(u) du.
Rule gauss_laguerre(int n);

struct Estimate {
  std::complex<double> value;
  double error = 0.0;
  int nodes = 0;
  bool converged = false;
};

/// int over the disc |z| <= radius of f(x, y) dx dy, polar coordinates with
/// Gauss-Legendre in radius and the trapezoid rule in angle. Node counts are
/// doubled until two successive estimates agree within `tol`.
Estimate disc_integral(const std::function<std::complex<double>(double, double)>& f, double radius,
                       double tol, int start_nodes = 24, int max_nodes = 768);

}  // namespace cvtele::quad
