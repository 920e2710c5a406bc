#pragma once

// Teleportation map on characteristic functions, input-state CFs, the overlap
// fidelity and its average over Gaussian input ensembles.

#include "cvtele/gaussian_poly.hpp"
#include "cvtele/resource.hpp"

namespace cvtele {

/// 1 dB homodyne inefficiency: eta^2 = 10^{-0.1}.
inline constexpr double kDefaultEta2 = 0.79432823472428150;

struct TeleportParams {
  double g = 1.0;
  double eta2 = kDefaultEta2;

  double eta() const;
  void validate() const;
};

enum class InputKind { Coherent, Squeezed };

struct InputEnsemble {
  InputKind kind = InputKind::Coherent;
  double sigma = 10.0;
  void validate() const;
};

struct FidelityResult {
  double mean_fidelity = 0.0;
  double error_estimate = 0.0;  // 0 for the closed-form path
  int nodes = 0;
  bool converged = true;
};

struct QuadratureOptions {
  double tol = 1e-5;
  int start_radial = 16;
  int start_angular = 16;
  int max_radial = 256;
  int max_angular = 256;
};

/// exp(-|xi|^2/2 + xi alpha* - xi* alpha)
PolyGaussianCF input_cf_coherent(cplx alpha);
/// exp(-1/2 |cosh(r) xi + e^{i phi} sinh(r) xi*|^2), s = r e^{i phi}
PolyGaussianCF input_cf_squeezed(cplx s);

/// chi_in(g eta xi) chi_AB(xi, g eta xi*) exp(-g^2 (1 - eta^2) |xi|^2 / 2)
PolyGaussianCF teleport(const PolyGaussianCF& chi_in, const ResourceState& resource, const TeleportParams& tp);
PolyGaussianCF teleport(const PolyGaussianCF& chi_in, const PolyGaussianCF& resource_cf, const TeleportParams& tp);

/// Resource-and-penalty factor chi_AB(xi, g eta xi*) exp(-g^2 (1 - eta^2) |xi|^2 / 2).
PolyGaussianCF teleport_kernel(const PolyGaussianCF& resource_cf, const TeleportParams& tp);

/// (1/pi) int d^2 xi chi_in(xi) chi_out(-xi)
double fidelity(const PolyGaussianCF& chi_in, const PolyGaussianCF& chi_out);

/// Coherent ensembles use the closed form; squeezed ensembles use polar
/// quadrature with node doubling.
FidelityResult mean_fidelity(const InputEnsemble& ens, const ResourceState& resource, const TeleportParams& tp,
                             const QuadratureOptions& opts = {});

/// Quadrature path for either ensemble kind (cross-check for the closed form).
FidelityResult mean_fidelity_quadrature(const InputEnsemble& ens, const PolyGaussianCF& resource_cf,
                                        const TeleportParams& tp, const QuadratureOptions& opts = {});

FidelityResult mean_fidelity_coherent_closed_form(double sigma, const PolyGaussianCF& resource_cf,
                                                  const TeleportParams& tp);

/// Mean of |s| under the ensemble density: sqrt(pi sigma) / 2.
double mean_squeezing(double sigma);

double classical_limit(const InputEnsemble& ens);

}  // namespace cvtele
