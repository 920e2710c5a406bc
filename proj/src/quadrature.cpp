#include "cvtele/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace cvtele::quad {

namespace {

// Gauss-Legendre on [-1, 1] by Newton iteration on P_n.
Rule legendre_unit(int n) {
  // P_n(x) and P_n'(x)
  auto legendre = [n](double x) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double dp = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return r;
}

const Rule& cached_legendre(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<Rule>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Rule>(legendre_unit(n));
  return *slot;
}

}  // namespace

Rule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  if (n == 1) return Rule{{0.5 * (a + b)}, {b - a}};
  const Rule& unit = cached_legendre(n);
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = mid + half * unit.nodes[i];
    r.weights[i] = half * unit.weights[i];
  }
  return r;
}

Rule gauss_laguerre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_laguerre: n must be positive");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<Rule>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    // Golub-Welsch on the Jacobi matrix of the Laguerre recurrence.
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      J(i, i) = 2.0 * i + 1.0;
      if (i + 1 < n) J(i, i + 1) = J(i + 1, i) = i + 1.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    auto rule = std::make_unique<Rule>();
    rule->nodes.resize(n);
    rule->weights.resize(n);
    for (int i = 0; i < n; ++i) {
      rule->nodes[i] = es.eigenvalues()(i);
      const double v0 = es.eigenvectors()(0, i);
      rule->weights[i] = v0 * v0;
    }
    slot = std::move(rule);
  }
  return *slot;
}

Estimate disc_integral(const std::function<std::complex<double>(double, double)>& f, double radius,
                       double tol, int start_nodes, int max_nodes) {
  auto at = [&](int n) {
    const Rule radial = gauss_legendre(n, 0.0, radius);
    const int n_angle = 2 * n;
    const double dtheta = 2.0 * std::numbers::pi / n_angle;
    std::complex<double> sum{};
    for (int i = 0; i < n; ++i) {
      const double r = radial.nodes[i];
      std::complex<double> ring{};
      for (int j = 0; j < n_angle; ++j) {
        const double th = j * dtheta;
        ring += f(r * std::cos(th), r * std::sin(th));
      }
      sum += radial.weights[i] * r * dtheta * ring;
    }
    return sum;
  };
  Estimate est;
  int n = start_nodes;
  std::complex<double> prev = at(n);
  while (2 * n <= max_nodes) {
    n *= 2;
    const std::complex<double> cur = at(n);
    est.value = cur;
    est.error = std::abs(cur - prev);
    est.nodes = n;
    if (est.error < tol) {
      est.converged = true;
      return est;
    }
    prev = cur;
  }
  return est;
}

}  // namespace cvtele::quad
