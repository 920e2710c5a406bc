#pragma once

// Two-mode entangled resource states: TMSV, the heralded single-photon
// operations PS/PA/PC/PS-PA/PA-PS (receiver side, after the channel), quantum
// scissors (transmitter side, before the channel) and squeezed Bell-like states.
// Mode 0 is A (kept by the receiver of the teleported state), mode 1 is B (sent
// through the channel).

#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "cvtele/gaussian_poly.hpp"

namespace cvtele {

enum class Family { TMSV, PS, PA, PC, PSPA, PAPS, QS, SB };

inline constexpr Family kAllFamilies[] = {Family::TMSV, Family::PS,   Family::PA, Family::PC,
                                          Family::PSPA, Family::PAPS, Family::QS, Family::SB};

std::string_view to_string(Family f);
/// Accepts the canonical names ("TMSV", "PS", ..., "PSPA"/"PS-PA", ...).
Family family_from_string(std::string_view name);

enum class Side { None, Transmitter, Receiver };
Side operation_side(Family f);

struct TMSVParams {
  double r = 0.0;
  double phi = std::numbers::pi;
};

struct ChannelParams {
  double T = 1.0;
  double eps = 0.0;
  void validate() const;
};

/// How the quantum-scissors gain depends on its beam-splitter transmissivity.
enum class QsGainConvention {
  AsPublished,  // g = sqrt(1 + kappa) / kappa
  Standard,     // g = sqrt((1 - kappa) / kappa)
};

double qs_gain(double kappa, QsGainConvention convention);

enum class KernelSign {
  Physical,   // CF of t^{n_B} rho t^{n_B}
  AsPrinted,  // cross term t / (t^2 - 1): the same CF evaluated at -xi_B
};

struct ResourceSpec {
  Family family = Family::TMSV;
  TMSVParams tmsv;
  double kappa = 0.5;   // operation beam-splitter transmissivity
  double delta = 0.0;   // SB superposition angle
  QsGainConvention qs_gain = QsGainConvention::AsPublished;
  KernelSign kernel = KernelSign::Physical;

  Side side() const { return operation_side(family); }
  void validate() const;
};

struct ResourceState {
  PolyGaussianCF cf;          // normalized
  double success_norm = 1.0;  // chi'(0,0) before normalization
  ResourceSpec spec;
  ChannelParams channel;
};

/// exp(-1/2 (|xi_A'|^2 + |xi_B'|^2)), xi_i' = cosh r xi_i + e^{i phi} sinh r xi_j*.
PolyGaussianCF tmsv_cf(const TMSVParams& p);

/// Pushes `mode` through a loss/excess-noise channel:
/// exp(-(eps + 1 - T)|xi|^2 / 2) * cf(..., sqrt(T) xi, ...).
PolyGaussianCF apply_channel(const PolyGaussianCF& cf, const ChannelParams& ch, int mode);

PolyGaussianCF sb_cf(const TMSVParams& p, double delta);

/// <m|D(xi)|n> as a one-mode poly-Gaussian.
PolyGaussianCF fock_matrix_cf(int m, int n);

/// The f-integral: Gaussian kernel over an auxiliary mode applied to mode 1 of
/// a two-mode CF. `amplitude` = 1 returns the input.
PolyGaussianCF attenuate_mode_b(const PolyGaussianCF& cf, double amplitude,
                                KernelSign sign = KernelSign::Physical);

/// Unnormalized CF chi' for the family; the channel is applied at the stage the
/// family prescribes.
PolyGaussianCF unnormalized_resource_cf(const ResourceSpec& spec, const ChannelParams& ch);

ResourceState build_resource(const ResourceSpec& spec, const ChannelParams& ch);

}  // namespace cvtele
