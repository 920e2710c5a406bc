#include "cvtele/optimize.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace cvtele {

namespace {

constexpr double kLogShift = 1e-3;
constexpr double kLogitClamp = 16.0;
constexpr double kPinTol = 1e-6;
constexpr double kInf = std::numeric_limits<double>::infinity();

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Monotone map between a parameter and the unit interval. The end points map
// exactly to the bounds.
struct Transform {
  ParamBound b;

  double lo_t() const {
    switch (b.name) {
      case Param::R: return std::log(b.lower + kLogShift);
      case Param::Kappa: return std::clamp(logit(b.lower), -kLogitClamp, kLogitClamp);
      default: return b.lower;
    }
  }
  double hi_t() const {
    switch (b.name) {
      case Param::R: return std::log(b.upper + kLogShift);
      case Param::Kappa: return b.upper >= 1.0 ? kLogitClamp : std::clamp(logit(b.upper), -kLogitClamp, kLogitClamp);
      default: return b.upper;
    }
  }
  double to_param(double u) const {
    if (u <= 0.0) return b.lower;
    if (u >= 1.0) return b.upper;
    const double t = lo_t() + u * (hi_t() - lo_t());
    double v = t;
    switch (b.name) {
      case Param::R: v = std::exp(t) - kLogShift; break;
      case Param::Kappa: v = sigmoid(t); break;
      default: break;
    }
    return std::clamp(v, b.lower, b.upper);
  }
  double to_unit(double v) const {
    v = std::clamp(v, b.lower, b.upper);
    double t = v;
    switch (b.name) {
      case Param::R: t = std::log(v + kLogShift); break;
      case Param::Kappa: t = v >= 1.0 ? kLogitClamp : std::clamp(logit(v), -kLogitClamp, kLogitClamp); break;
      default: break;
    }
    const double span = hi_t() - lo_t();
    return std::clamp((t - lo_t()) / span, 0.0, 1.0);
  }
};

double reflect(double x) {
  // fold into [0, 1]
  x = std::fmod(std::abs(x), 2.0);
  return x > 1.0 ? 2.0 - x : x;
}

class Objective {
 public:
  Objective(const Problem& pb, const ChannelParams& ch) : pb_(pb), ch_(ch) {
    for (int i = 0; i < pb.space.size(); ++i) {
      const ParamBound& b = pb.space.params[i];
      transforms_.push_back(Transform{b});
      if (b.lower < b.upper) free_.push_back(i);
    }
  }

  int dim() const { return static_cast<int>(free_.size()); }

  std::vector<double> params_of(std::span<const double> u) const {
    std::vector<double> p(transforms_.size());
    for (std::size_t i = 0; i < transforms_.size(); ++i) p[i] = transforms_[i].b.lower;
    for (int k = 0; k < dim(); ++k) p[free_[k]] = transforms_[free_[k]].to_param(u[k]);
    return p;
  }

  std::vector<double> unit_of(std::span<const double> params) const {
    std::vector<double> u(dim());
    for (int k = 0; k < dim(); ++k) u[k] = transforms_[free_[k]].to_unit(params[free_[k]]);
    return u;
  }

  // negative mean fidelity; +inf when the point is invalid
  double cost(std::span<const double> u, Evaluation* out = nullptr) const {
    const std::vector<double> p = params_of(u);
    try {
      Evaluation ev = evaluate(pb_, ch_, p);
      if (!std::isfinite(ev.fidelity.mean_fidelity)) return kInf;
      if (out) *out = ev;
      return -ev.fidelity.mean_fidelity;
    } catch (const AlgebraError&) {
      return kInf;
    } catch (const std::invalid_argument&) {
      return kInf;
    }
  }

  bool pinned(std::span<const double> params) const {
    for (int k : free_) {
      const ParamBound& b = transforms_[k].b;
      if (params[k] - b.lower < kPinTol || b.upper - params[k] < kPinTol) return true;
    }
    return false;
  }

 private:
  const Problem& pb_;
  ChannelParams ch_;
  std::vector<Transform> transforms_;
  std::vector<int> free_;
};

struct LocalResult {
  std::vector<double> u;
  double cost = kInf;
  int evals = 0;
  bool converged = false;
};

LocalResult nelder_mead(const Objective& obj, std::vector<double> start, const OptimizerOptions& opts) {
  const int n = obj.dim();
  LocalResult res;
  if (n == 0) {
    res.u = start;
    res.cost = obj.cost(start);
    res.evals = 1;
    res.converged = true;
    return res;
  }
  std::vector<std::vector<double>> simplex(n + 1, start);
  for (int k = 0; k < n; ++k) {
    double x = start[k] + opts.initial_step;
    if (x > 1.0) x = start[k] - opts.initial_step;
    simplex[k + 1][k] = reflect(x);
  }
  std::vector<double> f(n + 1);
  for (int i = 0; i <= n; ++i) f[i] = obj.cost(simplex[i]);
  res.evals = n + 1;

  auto eval = [&](std::vector<double>& x) {
    for (double& v : x) v = reflect(v);
    ++res.evals;
    return obj.cost(x);
  };
  std::vector<int> order(n + 1);
  while (res.evals < opts.max_evals_per_start) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
    const int best = order.front(), worst = order.back(), second = order[n - 1];
    double diam = 0.0;
    for (int i = 0; i <= n; ++i) {
      double d2 = 0.0;
      for (int k = 0; k < n; ++k) d2 += std::pow(simplex[i][k] - simplex[best][k], 2);
      diam = std::max(diam, std::sqrt(d2));
    }
    if (diam < opts.simplex_tol) {
      res.converged = true;
      break;
    }
    std::vector<double> centroid(n, 0.0);
    for (int i = 0; i <= n; ++i)
      if (i != worst)
        for (int k = 0; k < n; ++k) centroid[k] += simplex[i][k] / n;
    auto along = [&](double t) {
      std::vector<double> x(n);
      for (int k = 0; k < n; ++k) x[k] = centroid[k] + t * (simplex[worst][k] - centroid[k]);
      return x;
    };
    std::vector<double> xr = along(-1.0);
    const double fr = eval(xr);
    if (fr < f[best]) {
      std::vector<double> xe = along(-2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe, f[worst] = fe;
      } else {
        simplex[worst] = xr, f[worst] = fr;
      }
    } else if (fr < f[second]) {
      simplex[worst] = xr, f[worst] = fr;
    } else {
      const bool outside = fr < f[worst];
      std::vector<double> xc = along(outside ? -0.5 : 0.5);
      const double fc = eval(xc);
      if (fc < (outside ? fr : f[worst])) {
        simplex[worst] = xc, f[worst] = fc;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (int k = 0; k < n; ++k) simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
          f[i] = eval(simplex[i]);
        }
      }
    }
  }
  const int best = static_cast<int>(std::min_element(f.begin(), f.end()) - f.begin());
  res.u = simplex[best];
  res.cost = f[best];
  return res;
}

std::vector<std::vector<double>> latin_hypercube(int n_points, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> pts(n_points, std::vector<double>(dim));
  for (int k = 0; k < dim; ++k) {
    std::vector<int> perm(n_points);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n_points - 1; i > 0; --i) {
      std::uniform_int_distribution<int> pick(0, i);
      std::swap(perm[i], perm[pick(rng)]);
    }
    for (int i = 0; i < n_points; ++i) pts[i][k] = (perm[i] + unit(rng)) / n_points;
  }
  return pts;
}

}  // namespace

std::string_view to_string(Param p) {
  switch (p) {
    case Param::R: return "r";
    case Param::G: return "g";
    case Param::Kappa: return "kappa";
    case Param::Delta: return "delta";
  }
  return "?";
}

ParamSpace ParamSpace::for_family(Family f) {
  ParamSpace s;
  s.params.push_back({Param::R, 0.0, 2.5});
  s.params.push_back({Param::G, 1e-3, 3.0});
  switch (f) {
    case Family::TMSV: break;
    case Family::SB: s.params.push_back({Param::Delta, -std::numbers::pi / 2, std::numbers::pi / 2}); break;
    case Family::PC: s.params.push_back({Param::Kappa, 0.01, 1.0}); break;
    default: s.params.push_back({Param::Kappa, 0.01, 0.999}); break;
  }
  return s;
}

ParamBound* ParamSpace::find(Param p) {
  for (ParamBound& b : params)
    if (b.name == p) return &b;
  return nullptr;
}

const ParamBound* ParamSpace::find(Param p) const {
  for (const ParamBound& b : params)
    if (b.name == p) return &b;
  return nullptr;
}

void ParamSpace::validate(Family f) const {
  const ParamSpace ref = for_family(f);
  if (ref.size() != size()) throw std::invalid_argument("parameter space does not match the family");
  for (const ParamBound& b : ref.params) {
    const ParamBound* have = find(b.name);
    if (!have) throw std::invalid_argument("parameter space is missing '" + std::string(to_string(b.name)) + "'");
    if (!std::isfinite(have->lower) || !std::isfinite(have->upper) || have->lower > have->upper)
      throw std::invalid_argument("invalid bounds for '" + std::string(to_string(b.name)) + "'");
    if (have->lower < b.lower || have->upper > b.upper)
      throw std::invalid_argument("bounds for '" + std::string(to_string(b.name)) + "' exceed the admissible range");
  }
}

Problem Problem::make(Family f, InputEnsemble ens, double eta2) {
  Problem p;
  p.family = f;
  p.ensemble = ens;
  p.eta2 = eta2;
  p.space = ParamSpace::for_family(f);
  return p;
}

Evaluation evaluate(const Problem& problem, const ChannelParams& ch, std::span<const double> params) {
  ResourceSpec spec;
  spec.family = problem.family;
  spec.tmsv.phi = problem.phi;
  spec.qs_gain = problem.qs_gain;
  spec.kernel = problem.kernel;
  TeleportParams tp;
  tp.eta2 = problem.eta2;
  for (int i = 0; i < problem.space.size(); ++i) {
    const double v = params[i];
    switch (problem.space.params[i].name) {
      case Param::R: spec.tmsv.r = v; break;
      case Param::G: tp.g = v; break;
      case Param::Kappa: spec.kappa = v; break;
      case Param::Delta: spec.delta = v; break;
    }
  }
  const ResourceState st = build_resource(spec, ch);
  Evaluation ev;
  ev.fidelity = mean_fidelity(problem.ensemble, st, tp, problem.quadrature);
  ev.success_norm = st.success_norm;
  return ev;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

OptResult optimize_point(const Problem& problem, const ChannelParams& ch, const OptimizerOptions& opts,
                         const std::vector<std::vector<double>>& warm_starts) {
  problem.space.validate(problem.family);
  problem.ensemble.validate();
  ch.validate();
  const Objective obj(problem, ch);
  const int dim = obj.dim();

  // stage 1: scan
  const int n_scan = dim == 0 ? 1 : std::max(opts.scan_points, 64);
  std::vector<std::vector<double>> scan =
      dim == 0 ? std::vector<std::vector<double>>{{}} : latin_hypercube(n_scan, dim, opts.seed);
  std::vector<double> scan_cost(scan.size());
  parallel_for(static_cast<int>(scan.size()), opts.threads, [&](int i) { scan_cost[i] = obj.cost(scan[i]); });

  std::vector<int> order(scan.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scan_cost[a] < scan_cost[b]; });
  std::vector<std::vector<double>> starts;
  for (int i = 0; i < static_cast<int>(order.size()) && static_cast<int>(starts.size()) < opts.local_starts; ++i)
    if (std::isfinite(scan_cost[order[i]])) starts.push_back(scan[order[i]]);
  for (const auto& w : warm_starts) {
    if (static_cast<int>(w.size()) != problem.space.size()) throw std::invalid_argument("warm start size mismatch");
    starts.push_back(obj.unit_of(w));
  }
  if (starts.empty()) {
    std::ostringstream os;
    os << "optimize_point: no finite fidelity for " << to_string(problem.family) << " at T=" << ch.T
       << ", eps=" << ch.eps;
    throw NumericalError(os.str());
  }

  // stage 2: local refinement
  std::vector<LocalResult> local(starts.size());
  parallel_for(static_cast<int>(starts.size()), opts.threads,
               [&](int i) { local[i] = nelder_mead(obj, starts[i], opts); });

  OptResult out;
  out.evaluations = static_cast<int>(scan.size());
  for (double c : scan_cost) out.failed_evaluations += std::isfinite(c) ? 0 : 1;
  int best = -1;
  double worst_f = kInf, best_f = -kInf;
  for (int i = 0; i < static_cast<int>(local.size()); ++i) {
    out.evaluations += local[i].evals;
    if (!std::isfinite(local[i].cost)) continue;
    const double f = -local[i].cost;
    worst_f = std::min(worst_f, f);
    if (f > best_f) best_f = f, best = i;
  }
  if (best < 0) throw NumericalError("optimize_point: every local search failed");
  // the best scan point is never beaten by a worse refinement
  const double scan_best = -scan_cost[order.front()];
  std::vector<double> best_u = local[best].u;
  out.converged = local[best].converged;
  if (scan_best > best_f) best_u = scan[order.front()], out.converged = false;

  Evaluation ev;
  obj.cost(best_u, &ev);
  out.params = obj.params_of(best_u);
  out.mean_fidelity = ev.fidelity.mean_fidelity;
  out.error_estimate = ev.fidelity.error_estimate;
  out.quadrature_converged = ev.fidelity.converged;
  out.success_norm = ev.success_norm;
  out.multistart_spread = best_f - worst_f;
  out.boundary_pinned = obj.pinned(out.params);
  return out;
}

std::vector<OptResult> sweep(const Problem& problem, const std::vector<ChannelParams>& curve,
                             const OptimizerOptions& opts, bool warm_start) {
  if (curve.empty()) throw std::invalid_argument("sweep: empty channel curve");
  std::vector<OptResult> out;
  if (!warm_start) {
    // points are independent; each point runs single-threaded
    out.resize(curve.size());
    OptimizerOptions inner = opts;
    inner.threads = 1;
    parallel_for(static_cast<int>(curve.size()), opts.threads,
                 [&](int i) { out[i] = optimize_point(problem, curve[i], inner); });
    return out;
  }
  out.reserve(curve.size());
  for (const ChannelParams& ch : curve) {
    std::vector<std::vector<double>> warm;
    if (warm_start && !out.empty()) warm.push_back(out.back().params);
    out.push_back(optimize_point(problem, ch, opts, warm));
  }
  return out;
}

}  // namespace cvtele
