#pragma once

// Brute-force truncated Fock-basis construction of the resource states,
// channels and input states. Independent of the CF algebra; used to verify it.
// Two-mode operators are indexed |a, b> -> a * dim + b (A first).

#include <complex>
#include <functional>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>

#include "cvtele/quadrature.hpp"
#include "cvtele/resource.hpp"

namespace cvtele::oracle {

using cplx = std::complex<double>;

class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FockOperator {
  int n_modes = 1;
  int dim = 1;  // per mode, n_max + 1
  Eigen::MatrixXcd matrix;
  double success_probability = 1.0;  // trace before normalization

  cplx trace() const { return matrix.trace(); }
};

/// <m|D(xi)|n> for m, n < dim: the associated-Laguerre closed form with the
/// polynomials generated by recurrence.
Eigen::MatrixXcd displacement(cplx xi, int dim);
/// The same through std::assoc_laguerre per entry (slower; cross-check).
Eigen::MatrixXcd displacement_laguerre(cplx xi, int dim);

/// Smallest n_max whose TMSV tail population is below 1e-12, plus headroom
/// for added photons.
int default_n_max(const ResourceSpec& spec);

/// Resource state built from explicit operators: two-mode squeezing by matrix
/// exponential, beam splitters with ancilla photons and detection, loss Kraus
/// operators and a Gaussian average over displacements for the excess noise.
/// For QS the circuit transmissivity is chosen to realize the spec's gain.
FockOperator oracle_state(const ResourceSpec& spec, const ChannelParams& ch, int n_max);
FockOperator oracle_state(const ResourceSpec& spec, const ChannelParams& ch);

FockOperator coherent_state(cplx alpha, int n_max);
/// exp(1/2 (zeta* a^2 - zeta a^dagger^2)) |0>, zeta = s e^{i phase}.
FockOperator squeezed_vacuum(double s, double phase, int n_max);
FockOperator thermal_state(double nbar, int n_max);

/// Tr[rho D(xi_1) (x) D(xi_2) ...]
cplx oracle_cf(const FockOperator& op, std::span<const cplx> xi);
cplx oracle_cf(const FockOperator& op, cplx xi);
cplx oracle_cf(const FockOperator& op, cplx xi_a, cplx xi_b);

/// Gain |1>-amplitude / |0>-amplitude of the single-photon scissors circuit
/// with first beam-splitter transmissivity kappa (positive detection pattern).
double qs_circuit_gain(double kappa);
/// Circuit transmissivity giving `gain`.
double qs_circuit_kappa(double gain);

/// Photon-number distribution of a single-mode reduction of `op`.
Eigen::VectorXd photon_distribution(const FockOperator& op, int mode);

using CfCallable = std::function<cplx(cplx)>;

/// (1/pi) int d^2 xi chi_in(xi) chi_out(-xi) over the disc |xi| <= radius.
quad::Estimate oracle_fidelity(const CfCallable& chi_in, const CfCallable& chi_out, double radius = 8.0,
                               double tol = 1e-10);

/// Teleportation fidelity with the resource's CF taken from the Fock matrix.
quad::Estimate oracle_teleport_fidelity(const FockOperator& resource, const CfCallable& chi_in, double gain,
                                        double eta2, double radius = 8.0, double tol = 1e-10);

}  // namespace cvtele::oracle
