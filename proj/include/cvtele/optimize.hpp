#pragma once

// Per-channel-point maximization of the mean teleportation fidelity over a
// family's free parameters: a seeded Latin-hypercube scan followed by
// Nelder-Mead refinement in transformed unit coordinates.

#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvtele/resource.hpp"
#include "cvtele/teleport.hpp"

namespace cvtele {

enum class Param { R, G, Kappa, Delta };

std::string_view to_string(Param p);

struct ParamBound {
  Param name = Param::R;
  double lower = 0.0;
  double upper = 0.0;  // lower == upper fixes the parameter
};

struct ParamSpace {
  std::vector<ParamBound> params;

  /// Default bounds for the family's free parameters.
  static ParamSpace for_family(Family f);
  int size() const { return static_cast<int>(params.size()); }
  ParamBound* find(Param p);
  const ParamBound* find(Param p) const;
  void validate(Family f) const;
};

struct Problem {
  Family family = Family::TMSV;
  InputEnsemble ensemble;
  double eta2 = kDefaultEta2;
  double phi = std::numbers::pi;
  QsGainConvention qs_gain = QsGainConvention::AsPublished;
  KernelSign kernel = KernelSign::Physical;
  ParamSpace space;
  QuadratureOptions quadrature;

  static Problem make(Family f, InputEnsemble ens, double eta2 = kDefaultEta2);
};

struct OptimizerOptions {
  std::uint64_t seed = 0x5eed5eedULL;
  int scan_points = 64;
  int local_starts = 4;
  int max_evals_per_start = 1500;
  double simplex_tol = 1e-5;
  double initial_step = 0.08;
  int threads = 1;
};

struct OptResult {
  std::vector<double> params;  // ordered as Problem::space.params
  double mean_fidelity = 0.0;
  double error_estimate = 0.0;
  bool quadrature_converged = true;
  double success_norm = 0.0;
  int evaluations = 0;
  bool converged = false;
  double multistart_spread = 0.0;
  bool boundary_pinned = false;
  int failed_evaluations = 0;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Evaluation {
  FidelityResult fidelity;
  double success_norm = 0.0;
};

/// Builds the resource for `params` (ordered as problem.space) and averages.
Evaluation evaluate(const Problem& problem, const ChannelParams& ch, std::span<const double> params);

/// Throws NumericalError when no start yields a finite fidelity.
OptResult optimize_point(const Problem& problem, const ChannelParams& ch, const OptimizerOptions& opts,
                         const std::vector<std::vector<double>>& warm_starts = {});

/// Optimizes each point in order, appending the previous optimum to the next
/// point's start set when `warm_start` is set.
std::vector<OptResult> sweep(const Problem& problem, const std::vector<ChannelParams>& curve,
                             const OptimizerOptions& opts, bool warm_start = true);

/// Runs fn(i) for i in [0, n) on up to `threads` threads; fn must write only
/// to slot i of preallocated output.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace cvtele
