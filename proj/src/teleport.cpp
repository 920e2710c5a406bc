#include "cvtele/teleport.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "cvtele/quadrature.hpp"

namespace cvtele {

namespace {

constexpr double kImagTol = 1e-10;
// Quadrature nodes whose weight is below this are skipped: 0 <= F <= 1 bounds
// their total contribution.
constexpr double kNegligibleWeight = 1e-18;

double real_checked(cplx v, const char* where) {
  if (std::abs(v.imag()) > kImagTol * std::max(1.0, std::abs(v.real()))) {
    std::ostringstream os;
    os << where << ": imaginary residue " << v.imag() << " on value " << v.real();
    throw AlgebraError(os.str());
  }
  return v.real();
}

// exponent of exp(-1/2 |cosh(r) xi + e^{i phi} sinh(r) xi*|^2) as a 2x2 form
Eigen::Matrix2cd squeezed_form(cplx s) {
  const double r = std::abs(s);
  const double c = std::cosh(r);
  const cplx w = std::polar(std::sinh(r), std::arg(s));
  Eigen::Matrix2cd S;
  S(0, 0) = -c * std::conj(w);
  S(1, 1) = -c * w;
  S(0, 1) = S(1, 0) = -0.5 * (c * c + std::norm(w));
  return S;
}

double double_factorial_odd(int n) {  // (n - 1)!! for even n, with (-1)!! = 1
  double v = 1.0;
  for (int k = n - 1; k > 1; k -= 2) v *= k;
  return v;
}

double binom(int n, int k) {
  double v = 1.0;
  for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
  return v;
}

double factorial(int n) {
  double v = 1.0;
  for (int i = 2; i <= n; ++i) v *= i;
  return v;
}

// E[xi^p xi*^q] for a zero-mean formal Gaussian with covariance C.
cplx wick_moment(int p, int q, const Eigen::Matrix2cd& C) {
  cplx sum = 0.0;
  for (int k = 0; k <= std::min(p, q); ++k) {
    if ((p - k) % 2 != 0 || (q - k) % 2 != 0) continue;
    const double comb = binom(p, k) * binom(q, k) * factorial(k) * double_factorial_odd(p - k) *
                        double_factorial_odd(q - k);
    sum += comb * std::pow(C(0, 1), k) * std::pow(C(0, 0), (p - k) / 2) * std::pow(C(1, 1), (q - k) / 2);
  }
  return sum;
}

// (1/pi) int d^2 xi  G(xi) * K(-xi), with K the one-mode teleport kernel and G a
// zero-mean Gaussian given by its 2x2 form. Falls back to the generic integral
// when K carries a linear exponent.
class OverlapEvaluator {
 public:
  explicit OverlapEvaluator(const PolyGaussianCF& kernel) : flipped_(negate_args(kernel)) {
    const QuadForm& q = flipped_.exponent();
    zero_mean_ = q.linear.cwiseAbs().maxCoeff() == 0.0;
    base_ << q.quadratic(0, 0), q.quadratic(0, 1), q.quadratic(1, 0), q.quadratic(1, 1);
    const_factor_ = std::exp(q.constant);
    for (const Term& t : flipped_.poly().terms()) terms_.push_back({t.exps[0], t.exps[1], t.coeff});
  }

  cplx overlap(const Eigen::Matrix2cd& gauss) const {
    if (!zero_mean_) {
      QuadForm g = QuadForm::zero(2);
      g.quadratic = gauss;
      return integrate_all(multiply(flipped_, PolyGaussianCF::gaussian(g)));
    }
    const Eigen::Matrix2cd S = base_ + gauss;
    const cplx base = gaussian_mode_integral(S);
    const Eigen::Matrix2cd C = -S.inverse();
    cplx sum = 0.0;
    for (const auto& t : terms_) sum += t.coeff * wick_moment(t.p, t.q, C);
    return const_factor_ * base * sum;
  }

  cplx overlap_generic(const QuadForm& gauss) const {
    return integrate_all(multiply(flipped_, PolyGaussianCF::gaussian(gauss)));
  }

 private:
  struct Mono {
    int p, q;
    cplx coeff;
  };
  PolyGaussianCF flipped_;
  bool zero_mean_ = false;
  Eigen::Matrix2cd base_;
  cplx const_factor_;
  std::vector<Mono> terms_;
};

template <class F>
FidelityResult polar_average(double sigma, const QuadratureOptions& opts, F&& single) {
  // s = sqrt(sigma u) e^{i phi};  P(s) d^2 s = e^{-u} du dphi / (2 pi)
  FidelityResult res;
  int nr = opts.start_radial;
  int na = opts.start_angular;
  double prev = std::nan("");
  while (true) {
    const quad::Rule& lag = quad::gauss_laguerre(nr);
    const quad::Rule leg = quad::gauss_legendre(na, 0.0, 2.0 * std::numbers::pi);
    double sum = 0.0;
    int used = 0;
    for (int i = 0; i < nr; ++i) {
      if (lag.weights[i] < kNegligibleWeight) continue;
      const double rad = std::sqrt(sigma * lag.nodes[i]);
      double ang = 0.0;
      for (int j = 0; j < na; ++j) ang += leg.weights[j] * single(std::polar(rad, leg.nodes[j]));
      sum += lag.weights[i] * ang;
      used += na;
    }
    const double est = sum / (2.0 * std::numbers::pi);
    res.mean_fidelity = est;
    res.nodes = used;
    if (!std::isnan(prev)) {
      res.error_estimate = std::abs(est - prev);
      if (res.error_estimate < opts.tol) {
        res.converged = true;
        return res;
      }
    }
    if (nr * 2 > opts.max_radial || na * 2 > opts.max_angular) {
      res.converged = false;
      if (std::isnan(prev)) res.error_estimate = std::numeric_limits<double>::infinity();
      return res;
    }
    prev = est;
    nr *= 2;
    na *= 2;
  }
}

}  // namespace

double TeleportParams::eta() const { return std::sqrt(eta2); }

void TeleportParams::validate() const {
  if (!(g >= 0.0) || !std::isfinite(g)) throw std::invalid_argument("gain must be a finite non-negative number");
  if (!(eta2 > 0.0 && eta2 <= 1.0)) throw std::invalid_argument("eta^2 must lie in (0, 1]");
}

void InputEnsemble::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("ensemble sigma must be positive");
}

PolyGaussianCF input_cf_coherent(cplx alpha) {
  QuadForm q = QuadForm::zero(2);
  q.quadratic(0, 1) = q.quadratic(1, 0) = -0.5;
  q.linear(0) = std::conj(alpha);
  q.linear(1) = -alpha;
  return PolyGaussianCF::gaussian(q);
}

PolyGaussianCF input_cf_squeezed(cplx s) {
  QuadForm q = QuadForm::zero(2);
  q.quadratic = squeezed_form(s);
  return PolyGaussianCF::gaussian(q);
}

PolyGaussianCF teleport_kernel(const PolyGaussianCF& resource_cf, const TeleportParams& tp) {
  tp.validate();
  if (resource_cf.n_modes() != 2) throw AlgebraError("teleport: resource must be a two-mode CF");
  const double ge = tp.g * tp.eta();
  Eigen::MatrixXcd holo(2, 1), anti(2, 1);
  holo << 1.0, 0.0;
  anti << 0.0, ge;
  const PolyGaussianCF on_line = substitute(resource_cf, LinearMap::from_modes(holo, anti));
  return multiply(on_line, PolyGaussianCF::modulus_weight(1, 0, -0.5 * tp.g * tp.g * (1.0 - tp.eta2)));
}

PolyGaussianCF teleport(const PolyGaussianCF& chi_in, const PolyGaussianCF& resource_cf, const TeleportParams& tp) {
  if (chi_in.n_modes() != 1) throw AlgebraError("teleport: input must be a one-mode CF");
  const PolyGaussianCF scaled_in = substitute(chi_in, LinearMap::scale_mode(1, 0, tp.g * tp.eta()));
  PolyGaussianCF out = multiply(scaled_in, teleport_kernel(resource_cf, tp));
  const cplx at0 = out.at_origin();
  if (std::abs(at0 - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "teleport: output CF at origin is " << at0.real() << (at0.imag() < 0 ? "" : "+") << at0.imag() << "i";
    throw AlgebraError(os.str());
  }
  return out;
}

PolyGaussianCF teleport(const PolyGaussianCF& chi_in, const ResourceState& resource, const TeleportParams& tp) {
  return teleport(chi_in, resource.cf, tp);
}

double fidelity(const PolyGaussianCF& chi_in, const PolyGaussianCF& chi_out) {
  if (chi_in.n_modes() != 1 || chi_out.n_modes() != 1) throw AlgebraError("fidelity: one-mode CFs expected");
  return real_checked(integrate_all(multiply(chi_in, negate_args(chi_out))), "fidelity");
}

FidelityResult mean_fidelity_coherent_closed_form(double sigma, const PolyGaussianCF& resource_cf,
                                                  const TeleportParams& tp) {
  if (!(sigma > 0.0)) throw std::invalid_argument("ensemble sigma must be positive");
  const double ge = tp.g * tp.eta();
  // modes: 0 = xi, 1 = alpha.  chi_alpha(xi) = exp(-|xi|^2/2 + xi alpha* - xi* alpha)
  QuadForm in = QuadForm::zero(4);
  in.quadratic(0, 1) = in.quadratic(1, 0) = -0.5;
  in.quadratic(0, 3) = in.quadratic(3, 0) = 1.0;
  in.quadratic(1, 2) = in.quadratic(2, 1) = -1.0;
  const PolyGaussianCF chi_in = PolyGaussianCF::gaussian(in);
  const PolyGaussianCF chi_in_out = substitute(chi_in, LinearMap::scale_mode(2, 0, -ge));
  const std::array<int, 1> at_xi{0};
  const PolyGaussianCF kernel = embed(negate_args(teleport_kernel(resource_cf, tp)), 2, at_xi);
  const PolyGaussianCF weight = PolyGaussianCF::modulus_weight(2, 1, -1.0 / sigma).scaled(1.0 / sigma);
  const PolyGaussianCF integrand = multiply(multiply(multiply(chi_in, chi_in_out), kernel), weight);
  const PolyGaussianCF over_alpha = integrate_mode(integrand, 1);
  FidelityResult res;
  res.mean_fidelity = real_checked(integrate_all(over_alpha), "mean_fidelity");
  return res;
}

FidelityResult mean_fidelity_quadrature(const InputEnsemble& ens, const PolyGaussianCF& resource_cf,
                                        const TeleportParams& tp, const QuadratureOptions& opts) {
  ens.validate();
  const OverlapEvaluator eval(teleport_kernel(resource_cf, tp));
  const double ge = tp.g * tp.eta();
  if (ens.kind == InputKind::Squeezed) {
    const double scale = 1.0 + ge * ge;
    return polar_average(ens.sigma, opts, [&](cplx s) {
      return real_checked(eval.overlap(scale * squeezed_form(s)), "mean_fidelity");
    });
  }
  return polar_average(ens.sigma, opts, [&](cplx alpha) {
    // chi_alpha(xi) chi_alpha(-ge xi)
    QuadForm g = QuadForm::zero(2);
    g.quadratic(0, 1) = g.quadratic(1, 0) = -0.5 * (1.0 + ge * ge);
    g.linear(0) = (1.0 - ge) * std::conj(alpha);
    g.linear(1) = -(1.0 - ge) * alpha;
    return real_checked(eval.overlap_generic(g), "mean_fidelity");
  });
}

FidelityResult mean_fidelity(const InputEnsemble& ens, const ResourceState& resource, const TeleportParams& tp,
                             const QuadratureOptions& opts) {
  ens.validate();
  if (ens.kind == InputKind::Coherent) return mean_fidelity_coherent_closed_form(ens.sigma, resource.cf, tp);
  return mean_fidelity_quadrature(ens, resource.cf, tp, opts);
}

double mean_squeezing(double sigma) { return 0.5 * std::sqrt(std::numbers::pi * sigma); }

double classical_limit(const InputEnsemble& ens) {
  ens.validate();
  if (ens.kind == InputKind::Coherent) return 0.5;
  const double e = std::exp(mean_squeezing(ens.sigma));
  return std::sqrt(e) / (1.0 + e);
}

}  // namespace cvtele
