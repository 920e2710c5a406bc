#include "cvtele/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cvtele/fock_oracle.hpp"

namespace cvtele {

namespace {

std::string lower_alnum(std::string_view s) {
  std::string out;
  for (char c : s)
    if (c != '-' && c != '_' && c != ' ') out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

std::string_view qs_name(QsGainConvention c) { return c == QsGainConvention::Standard ? "standard" : "as-published"; }
std::string_view kernel_name(KernelSign k) { return k == KernelSign::AsPrinted ? "as-printed" : "physical"; }

// ---- config reading -------------------------------------------------------

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
    std::ostringstream os;
    os << source_;
    if (n.IsDefined() && n.Mark().line >= 0) os << ":" << n.Mark().line + 1;
    os << ": " << msg;
    throw ConfigError(os.str());
  }

  void expect_map(const YAML::Node& n, std::string_view what) const {
    if (!n.IsMap()) fail(n, std::string(what) + " must be a mapping");
  }

  void keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed, std::string_view section) const {
    expect_map(map, section);
    for (const auto& kv : map) {
      const std::string key = kv.first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        fail(kv.first, "unknown key '" + key + "' in " + std::string(section));
    }
  }

  double number(const YAML::Node& n, std::string_view what) const {
    if (!n.IsScalar()) fail(n, std::string(what) + " must be a number");
    const std::string s = n.Scalar();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
      fail(n, std::string(what) + " must be a finite number, got '" + s + "'");
    return v;
  }

  std::uint64_t unsigned_int(const YAML::Node& n, std::string_view what) const {
    if (!n.IsScalar()) fail(n, std::string(what) + " must be a non-negative integer");
    const std::string s = n.Scalar();
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      fail(n, std::string(what) + " must be a non-negative integer, got '" + s + "'");
    return v;
  }

  int positive_int(const YAML::Node& n, std::string_view what) const {
    const std::uint64_t v = unsigned_int(n, what);
    if (v == 0 || v > 1000000) fail(n, std::string(what) + " must be a positive integer");
    return static_cast<int>(v);
  }

  bool boolean(const YAML::Node& n, std::string_view what) const {
    bool b = false;
    if (!n.IsScalar() || !YAML::convert<bool>::decode(n, b)) fail(n, std::string(what) + " must be true or false");
    return b;
  }

  std::string text(const YAML::Node& n, std::string_view what) const {
    if (!n.IsScalar()) fail(n, std::string(what) + " must be a string");
    return n.Scalar();
  }

  std::vector<double> grid(const YAML::Node& n, std::string_view what) const {
    if (n.IsScalar()) return {number(n, what)};
    if (n.IsSequence()) {
      std::vector<double> out;
      for (const auto& e : n) out.push_back(number(e, what));
      if (out.empty()) fail(n, std::string(what) + " must not be empty");
      return out;
    }
    keys(n, {"start", "stop", "step"}, what);
    for (const char* k : {"start", "stop", "step"})
      if (!n[k]) fail(n, std::string(what) + " range needs '" + k + "'");
    const double a = number(n["start"], "start"), b = number(n["stop"], "stop"), h = number(n["step"], "step");
    if (!(h > 0.0) || b < a) fail(n, std::string(what) + " range needs step > 0 and stop >= start");
    if ((b - a) / h > 1e6) fail(n, std::string(what) + " range has too many points");
    return linear_grid(a, b, h);
  }

  std::pair<double, double> pair(const YAML::Node& n, std::string_view what) const {
    if (!n.IsSequence() || n.size() != 2) fail(n, std::string(what) + " must be a two-element list");
    return {number(n[0], what), number(n[1], what)};
  }

 private:
  std::string source_;
};

template <class Enum>
Enum choose(const Reader& rd, const YAML::Node& n, std::string_view what,
            std::initializer_list<std::pair<std::string_view, Enum>> options) {
  const std::string v = lower_alnum(rd.text(n, what));
  std::string names;
  for (const auto& [name, e] : options) {
    if (lower_alnum(name) == v) return e;
    names += (names.empty() ? "" : ", ") + std::string(name);
  }
  rd.fail(n, std::string(what) + " must be one of: " + names);
}

std::vector<Family> parse_families(const Reader& rd, const YAML::Node& n) {
  std::vector<Family> out;
  auto add = [&](const YAML::Node& e) {
    try {
      const Family f = family_from_string(rd.text(e, "family"));
      if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
    } catch (const std::invalid_argument& ex) {
      rd.fail(e, ex.what());
    }
  };
  if (n.IsSequence()) {
    for (const auto& e : n) add(e);
  } else {
    add(n);
  }
  if (out.empty()) rd.fail(n, "families must not be empty");
  return out;
}

// ---- running --------------------------------------------------------------

struct Variant {
  std::string mode = "optimized";
  double r_fixed = NAN;
};

Problem make_problem(const ExperimentConfig& cfg, Family f, const Variant& v) {
  Problem pb = cfg.problem(f);
  if (v.mode == "baseline") {
    const double g = 1.0 / std::sqrt(cfg.eta2);
    pb.space.find(Param::R)->lower = pb.space.find(Param::R)->upper = v.r_fixed;
    pb.space.find(Param::G)->lower = pb.space.find(Param::G)->upper = g;
  }
  return pb;
}

ResultRow make_row(const ExperimentConfig& cfg, const Problem& pb, const ChannelPoint& cp, const OptResult& res,
                   const Variant& v) {
  ResultRow row;
  row.family = pb.family;
  row.mode = v.mode;
  row.input = pb.ensemble.kind;
  row.sigma = pb.ensemble.sigma;
  row.eta2 = pb.eta2;
  row.channel = cfg.channel;
  row.distance_km = cfg.channel == ChannelModel::FixedGrid ? NAN : cp.distance_km;
  row.T = cp.params.T;
  row.eps = cp.params.eps;
  for (int i = 0; i < pb.space.size(); ++i) {
    const double x = res.params[i];
    switch (pb.space.params[i].name) {
      case Param::R: row.r = x; break;
      case Param::G: row.g = x; break;
      case Param::Kappa: row.kappa = x; break;
      case Param::Delta: row.delta = x; break;
    }
  }
  row.qs_gain = pb.qs_gain;
  row.kernel = pb.kernel;
  row.mean_fidelity = res.mean_fidelity;
  row.classical_limit = classical_limit(pb.ensemble);
  row.margin = row.mean_fidelity - row.classical_limit;
  row.error_estimate = res.error_estimate;
  row.quadrature_converged = res.quadrature_converged;
  row.success_norm = res.success_norm;
  row.evaluations = res.evaluations;
  row.failed_evaluations = res.failed_evaluations;
  row.converged = res.converged;
  row.multistart_spread = res.multistart_spread;
  row.boundary_pinned = res.boundary_pinned;
  return row;
}

OptimizerOptions inner_options(const ExperimentConfig& cfg, int jobs, int tasks) {
  OptimizerOptions o = cfg.optimizer;
  const int outer = std::max(1, std::min(jobs, tasks));
  o.threads = std::max(1, jobs / outer);
  return o;
}

std::vector<ResultRow> sweep_impl(const ExperimentConfig& cfg, const Variant& v, int jobs) {
  // one task per (family, eps row) for fixed grids, per family otherwise
  std::vector<std::vector<ChannelPoint>> curves;
  if (cfg.channel == ChannelModel::FixedGrid) {
    for (double eps : cfg.eps_grid) {
      std::vector<ChannelPoint> c;
      for (double T : cfg.T_grid) c.push_back({0.0, {T, eps}});
      curves.push_back(std::move(c));
    }
  } else {
    curves.push_back(cfg.channel_points());
  }
  const int n_tasks = static_cast<int>(cfg.families.size() * curves.size());
  const OptimizerOptions opts = inner_options(cfg, jobs, n_tasks);
  std::vector<std::vector<ResultRow>> out(n_tasks);
  parallel_for(n_tasks, jobs, [&](int t) {
    const Family f = cfg.families[t / curves.size()];
    const auto& curve = curves[t % curves.size()];
    const Problem pb = make_problem(cfg, f, v);
    std::vector<ChannelParams> chs;
    for (const auto& cp : curve) chs.push_back(cp.params);
    const auto res = sweep(pb, chs, opts, cfg.warm_start);
    for (std::size_t i = 0; i < curve.size(); ++i) out[t].push_back(make_row(cfg, pb, curve[i], res[i], v));
  });
  std::vector<ResultRow> rows;
  for (auto& block : out) rows.insert(rows.end(), block.begin(), block.end());
  return rows;
}

std::vector<CrossingRow> crossing_for(const ExperimentConfig& cfg, const Problem& pb, const Variant& v,
                                      const OptimizerOptions& opts, std::vector<ResultRow>& grid) {
  const std::vector<ChannelPoint> pts = cfg.channel_points();
  std::vector<ChannelParams> chs;
  for (const auto& cp : pts) chs.push_back(cp.params);
  const std::vector<OptResult> res = sweep(pb, chs, opts, cfg.warm_start);
  const double limit = classical_limit(pb.ensemble);
  std::vector<double> margin;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    grid.push_back(make_row(cfg, pb, pts[i], res[i], v));
    margin.push_back(res[i].mean_fidelity - limit);
  }

  CrossingRow base;
  base.family = pb.family;
  base.mode = v.mode;
  base.input = pb.ensemble.kind;
  base.sigma = pb.ensemble.sigma;
  base.eta2 = pb.eta2;
  base.channel = cfg.channel;
  base.r_fixed = v.r_fixed;
  base.margin_first = margin.front();
  base.margin_last = margin.back();
  for (std::size_t i = 1; i < margin.size(); ++i)
    if (margin[i] > margin[i - 1] + 1e-7) base.non_monotone = true;

  std::vector<CrossingRow> out;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const bool above = margin[i] > 0.0;
    if (above == (margin[i + 1] > 0.0)) continue;
    double lo = pts[i].distance_km, hi = pts[i + 1].distance_km;
    std::vector<double> p_lo = res[i].params, p_hi = res[i + 1].params;
    while (hi - lo > cfg.crossing_tol_km) {
      const double mid = 0.5 * (lo + hi);
      const OptResult m = optimize_point(pb, cfg.channel_at(mid).params, opts, {p_lo, p_hi});
      if ((m.mean_fidelity - limit > 0.0) == above) {
        lo = mid, p_lo = m.params;
      } else {
        hi = mid, p_hi = m.params;
      }
    }
    CrossingRow row = base;
    row.index = static_cast<int>(out.size());
    row.status = "crossing";
    row.crossing_km = 0.5 * (lo + hi);
    row.bracket_lo_km = lo;
    row.bracket_hi_km = hi;
    row.side = above ? "falling" : "rising";
    out.push_back(row);
  }
  if (out.empty()) {
    CrossingRow row = base;
    row.status = "none";
    row.side = margin.front() > 0.0 ? "above" : "below";
    out.push_back(row);
  }
  return out;
}

std::vector<CrossingRow> crossing_impl(const ExperimentConfig& cfg, const Variant& v, int jobs,
                                       std::vector<ResultRow>* grid_rows) {
  const int n = static_cast<int>(cfg.families.size());
  const OptimizerOptions opts = inner_options(cfg, jobs, n);
  std::vector<std::vector<CrossingRow>> out(n);
  std::vector<std::vector<ResultRow>> grids(n);
  parallel_for(n, jobs, [&](int t) {
    out[t] = crossing_for(cfg, make_problem(cfg, cfg.families[t], v), v, opts, grids[t]);
  });
  std::vector<CrossingRow> rows;
  for (int t = 0; t < n; ++t) {
    rows.insert(rows.end(), out[t].begin(), out[t].end());
    if (grid_rows) grid_rows->insert(grid_rows->end(), grids[t].begin(), grids[t].end());
  }
  return rows;
}

// ---- CSV helpers ----------------------------------------------------------

std::string fmt(double v) { return format_double(v); }
std::string fmt(bool b) { return b ? "1" : "0"; }
std::string fmt(int v) { return std::to_string(v); }

template <class... Ts>
void csv_line(std::ostream& os, const Ts&... fields) {
  bool first = true;
  ((os << (first ? "" : ",") << fields, first = false), ...);
  os << '\n';
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  if (s.empty()) return NAN;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("bad number in CSV: " + s);
  return v;
}

constexpr std::string_view kRowHeader =
    "family,mode,input,sigma,eta2,channel,distance_km,T,eps,r,g,kappa,delta,qs_gain,kernel,mean_fidelity,"
    "classical_limit,margin,error_estimate,quadrature_converged,success_norm,evaluations,failed_evaluations,"
    "converged,multistart_spread,boundary_pinned";

}  // namespace

// ---- names ----------------------------------------------------------------

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Sweep: return "sweep";
    case ExperimentKind::Surface: return "surface";
    case ExperimentKind::Crossing: return "crossing";
    case ExperimentKind::Baseline: return "baseline";
    case ExperimentKind::OracleCheck: return "oracle-check";
  }
  return "?";
}

std::string_view to_string(ChannelModel m) {
  switch (m) {
    case ChannelModel::FixedGrid: return "fixed-grid";
    case ChannelModel::Fiber: return "fiber";
    case ChannelModel::Satellite: return "satellite";
  }
  return "?";
}

std::string_view to_string(InputKind k) { return k == InputKind::Squeezed ? "squeezed" : "coherent"; }

ExperimentKind experiment_kind_from_string(std::string_view s) {
  const std::string v = lower_alnum(s);
  for (ExperimentKind k : {ExperimentKind::Sweep, ExperimentKind::Surface, ExperimentKind::Crossing,
                           ExperimentKind::Baseline, ExperimentKind::OracleCheck})
    if (lower_alnum(to_string(k)) == v) return k;
  throw std::invalid_argument("unknown experiment '" + std::string(s) + "'");
}

std::vector<double> linear_grid(double start, double stop, double step) {
  std::vector<double> out;
  const long n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(std::round((start + i * step) * 1e12) / 1e12);
  return out;
}

// ---- config ---------------------------------------------------------------

ExperimentConfig parse_config(const std::string& text, const std::string& source,
                              std::optional<ExperimentKind> kind) {
  const Reader rd(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsDefined() || root.IsNull()) throw ConfigError(source + ": empty configuration");
  rd.keys(root,
          {"experiment", "families", "input", "eta2", "resource", "channel", "optimizer", "crossing", "baseline",
           "oracle_check", "output"},
          "top level");

  ExperimentConfig cfg;
  if (root["experiment"]) {
    try {
      cfg.kind = experiment_kind_from_string(rd.text(root["experiment"], "experiment"));
    } catch (const std::invalid_argument& e) {
      rd.fail(root["experiment"], e.what());
    }
  }
  if (root["families"]) cfg.families = parse_families(rd, root["families"]);

  bool sigma_given = false;
  if (const YAML::Node in = root["input"]) {
    rd.keys(in, {"kind", "sigma"}, "input");
    if (in["kind"])
      cfg.ensemble.kind =
          choose<InputKind>(rd, in["kind"], "input.kind", {{"coherent", InputKind::Coherent}, {"squeezed", InputKind::Squeezed}});
    if (in["sigma"]) {
      cfg.ensemble.sigma = rd.number(in["sigma"], "input.sigma");
      sigma_given = true;
      if (!(cfg.ensemble.sigma > 0.0)) rd.fail(in["sigma"], "input.sigma must be positive");
    }
  }
  if (!sigma_given) cfg.ensemble.sigma = cfg.ensemble.kind == InputKind::Squeezed ? 1.0 : 10.0;

  if (root["eta2"]) {
    cfg.eta2 = rd.number(root["eta2"], "eta2");
    if (!(cfg.eta2 > 0.0 && cfg.eta2 <= 1.0)) rd.fail(root["eta2"], "eta2 must lie in (0, 1]");
  }

  if (const YAML::Node res = root["resource"]) {
    rd.keys(res, {"qs_gain", "kernel"}, "resource");
    if (res["qs_gain"])
      cfg.qs_gain = choose<QsGainConvention>(rd, res["qs_gain"], "resource.qs_gain",
                           {{"as-published", QsGainConvention::AsPublished}, {"standard", QsGainConvention::Standard}});
    if (res["kernel"])
      cfg.kernel = choose<KernelSign>(rd, res["kernel"], "resource.kernel",
                          {{"physical", KernelSign::Physical}, {"as-printed", KernelSign::AsPrinted}});
  }

  if (const YAML::Node ch = root["channel"]) {
    rd.keys(ch, {"model", "T", "eps", "L", "fiber", "satellite"}, "channel");
    if (ch["model"])
      cfg.channel = choose<ChannelModel>(rd, ch["model"], "channel.model",
                           {{"fixed-grid", ChannelModel::FixedGrid}, {"fiber", ChannelModel::Fiber},
                            {"satellite", ChannelModel::Satellite}});
    if (ch["T"]) cfg.T_grid = rd.grid(ch["T"], "channel.T");
    if (ch["eps"]) cfg.eps_grid = rd.grid(ch["eps"], "channel.eps");
    if (ch["L"]) cfg.L_grid = rd.grid(ch["L"], "channel.L");
    if (const YAML::Node f = ch["fiber"]) {
      rd.keys(f, {"loss_db_per_km", "eps_slope", "eps_intercept"}, "channel.fiber");
      if (f["loss_db_per_km"]) cfg.fiber.loss_db_per_km = rd.number(f["loss_db_per_km"], "loss_db_per_km");
      if (f["eps_slope"]) cfg.fiber.eps_slope = rd.number(f["eps_slope"], "eps_slope");
      if (f["eps_intercept"]) cfg.fiber.eps_intercept = rd.number(f["eps_intercept"], "eps_intercept");
      try {
        cfg.fiber.validate();
      } catch (const std::invalid_argument& e) {
        rd.fail(f, e.what());
      }
    }
    if (const YAML::Node s = ch["satellite"]) {
      rd.keys(s, {"altitude_km", "ground_height_km", "r_sat_cm", "r_gs_cm", "anchors", "eps_range"},
              "channel.satellite");
      SatelliteModel& m = cfg.satellite;
      if (s["altitude_km"]) m.altitude_km = rd.number(s["altitude_km"], "altitude_km");
      if (s["ground_height_km"]) m.ground_height_km = rd.number(s["ground_height_km"], "ground_height_km");
      if (s["r_sat_cm"]) m.r_sat_cm = rd.number(s["r_sat_cm"], "r_sat_cm");
      if (s["r_gs_cm"]) m.r_gs_cm = rd.number(s["r_gs_cm"], "r_gs_cm");
      if (const YAML::Node a = s["anchors"]) {
        if (!a.IsSequence()) rd.fail(a, "anchors must be a list of [L_km, mean_T] pairs");
        m.anchor_points.clear();
        for (const auto& e : a) m.anchor_points.push_back(rd.pair(e, "anchor"));
      }
      if (s["eps_range"]) m.eps_range = rd.pair(s["eps_range"], "eps_range");
      try {
        m.validate();
      } catch (const std::invalid_argument& e) {
        rd.fail(s, e.what());
      }
    }
  }

  if (const YAML::Node o = root["optimizer"]) {
    rd.keys(o, {"seed", "scan_points", "local_starts", "max_evals_per_start", "simplex_tol", "warm_start", "bounds"},
            "optimizer");
    if (o["seed"]) cfg.optimizer.seed = rd.unsigned_int(o["seed"], "optimizer.seed");
    if (o["scan_points"]) {
      cfg.optimizer.scan_points = rd.positive_int(o["scan_points"], "optimizer.scan_points");
      if (cfg.optimizer.scan_points < 64) rd.fail(o["scan_points"], "optimizer.scan_points must be at least 64");
    }
    if (o["local_starts"]) cfg.optimizer.local_starts = rd.positive_int(o["local_starts"], "optimizer.local_starts");
    if (o["max_evals_per_start"])
      cfg.optimizer.max_evals_per_start = rd.positive_int(o["max_evals_per_start"], "optimizer.max_evals_per_start");
    if (o["simplex_tol"]) {
      cfg.optimizer.simplex_tol = rd.number(o["simplex_tol"], "optimizer.simplex_tol");
      if (!(cfg.optimizer.simplex_tol > 0.0)) rd.fail(o["simplex_tol"], "optimizer.simplex_tol must be positive");
    }
    if (o["warm_start"]) cfg.warm_start = rd.boolean(o["warm_start"], "optimizer.warm_start");
    if (const YAML::Node b = o["bounds"]) {
      rd.keys(b, {"r", "g", "kappa", "delta"}, "optimizer.bounds");
      for (const auto& kv : b) {
        const std::string k = kv.first.as<std::string>();
        const Param p = k == "r" ? Param::R : k == "g" ? Param::G : k == "kappa" ? Param::Kappa : Param::Delta;
        const auto [lo, hi] = rd.pair(kv.second, "bound");
        if (lo > hi) rd.fail(kv.second, "bound for '" + k + "' has lower > upper");
        cfg.bounds.push_back({p, lo, hi});
      }
    }
  }

  if (const YAML::Node c = root["crossing"]) {
    rd.keys(c, {"tolerance_km"}, "crossing");
    if (c["tolerance_km"]) {
      cfg.crossing_tol_km = rd.number(c["tolerance_km"], "crossing.tolerance_km");
      if (!(cfg.crossing_tol_km > 0.0)) rd.fail(c["tolerance_km"], "crossing.tolerance_km must be positive");
    }
  }
  if (const YAML::Node b = root["baseline"]) {
    rd.keys(b, {"r_fixed"}, "baseline");
    if (b["r_fixed"]) cfg.baseline_r = rd.grid(b["r_fixed"], "baseline.r_fixed");
  }
  if (const YAML::Node oc = root["oracle_check"]) {
    rd.keys(oc, {"r", "kappa", "delta", "cf_tol", "fidelity_tol"}, "oracle_check");
    if (oc["r"]) cfg.oracle_r = rd.grid(oc["r"], "oracle_check.r");
    if (oc["kappa"]) cfg.oracle_kappa = rd.grid(oc["kappa"], "oracle_check.kappa");
    if (oc["delta"]) cfg.oracle_delta = rd.grid(oc["delta"], "oracle_check.delta");
    if (oc["cf_tol"]) cfg.oracle_cf_tol = rd.number(oc["cf_tol"], "oracle_check.cf_tol");
    if (oc["fidelity_tol"]) cfg.oracle_fidelity_tol = rd.number(oc["fidelity_tol"], "oracle_check.fidelity_tol");
  }
  if (const YAML::Node out = root["output"]) {
    rd.keys(out, {"path", "json"}, "output");
    if (out["path"]) cfg.output_path = rd.text(out["path"], "output.path");
    if (out["json"]) cfg.output_json = rd.boolean(out["json"], "output.json");
  }
  if (kind) cfg.kind = *kind;
  cfg.apply_defaults();
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::optional<ExperimentKind> kind) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), kind);
}

void ExperimentConfig::apply_defaults() {
  const bool oracle = kind == ExperimentKind::OracleCheck;
  if (T_grid.empty()) T_grid = oracle ? std::vector<double>{1.0, 0.7} : linear_grid(0.05, 1.0, 0.05);
  if (eps_grid.empty()) {
    if (oracle) {
      eps_grid = {0.0, 0.05};
    } else if (kind == ExperimentKind::Surface) {
      eps_grid = linear_grid(0.0, 0.1, 0.01);
    } else {
      eps_grid = {0.05};
    }
  }
  if (L_grid.empty()) {
    if (channel == ChannelModel::Fiber) L_grid = linear_grid(5.0, 250.0, 5.0);
    if (channel == ChannelModel::Satellite) L_grid = linear_grid(500.0, 1460.0, 20.0);
  }
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (families.empty()) fail("families must not be empty");
  if (!(ensemble.sigma > 0.0)) fail("input.sigma must be positive");
  if (!(eta2 > 0.0 && eta2 <= 1.0)) fail("eta2 must lie in (0, 1]");
  if (kind == ExperimentKind::Surface && channel != ChannelModel::FixedGrid)
    fail("surface experiments need channel.model: fixed-grid");
  if (kind == ExperimentKind::Crossing && channel == ChannelModel::FixedGrid)
    fail("crossing experiments need channel.model: fiber or satellite");
  if (channel == ChannelModel::FixedGrid || kind == ExperimentKind::OracleCheck) {
    for (double T : T_grid)
      if (!(T > 0.0 && T <= 1.0)) fail("channel.T values must lie in (0, 1]");
    for (double e : eps_grid)
      if (!(e >= 0.0)) fail("channel.eps values must be non-negative");
  }
  if (channel != ChannelModel::FixedGrid && kind != ExperimentKind::OracleCheck) {
    for (std::size_t i = 0; i < L_grid.size(); ++i) {
      if (!(L_grid[i] > 0.0)) fail("channel.L values must be positive");
      if (i > 0 && !(L_grid[i] > L_grid[i - 1])) fail("channel.L must be strictly increasing");
    }
    if (channel == ChannelModel::Satellite && !L_grid.empty()) {
      const double lo = satellite.anchor_points.front().first, hi = satellite.anchor_points.back().first;
      if (L_grid.front() < lo || L_grid.back() > hi) fail("channel.L lies outside the satellite anchor span");
    }
  }
  for (double r : baseline_r)
    if (!(r >= 0.0 && r <= 2.5)) fail("baseline.r_fixed values must lie in [0, 2.5]");
  if (kind == ExperimentKind::Baseline && 1.0 / std::sqrt(eta2) > 3.0) fail("baseline gain 1/eta exceeds 3");
  for (Family f : families) {
    try {
      problem(f).space.validate(f);
    } catch (const std::invalid_argument& e) {
      fail(std::string("optimizer.bounds for ") + std::string(to_string(f)) + ": " + e.what());
    }
  }
}

std::vector<ChannelPoint> ExperimentConfig::channel_points() const {
  std::vector<ChannelPoint> out;
  if (channel == ChannelModel::FixedGrid) {
    for (double e : eps_grid)
      for (double T : T_grid) out.push_back({0.0, {T, e}});
  } else {
    for (double L : L_grid) out.push_back(channel_at(L));
  }
  return out;
}

ChannelPoint ExperimentConfig::channel_at(double L_km) const {
  if (channel == ChannelModel::Fiber) return fiber_channel(L_km, fiber);
  if (channel == ChannelModel::Satellite) return satellite_channel(L_km, satellite);
  throw std::logic_error("channel_at needs a fiber or satellite model");
}

Problem ExperimentConfig::problem(Family f) const {
  Problem pb = Problem::make(f, ensemble, eta2);
  pb.qs_gain = qs_gain;
  pb.kernel = kernel;
  const ParamSpace ref = ParamSpace::for_family(f);
  for (const BoundOverride& b : bounds) {
    ParamBound* p = pb.space.find(b.name);
    if (!p) continue;
    // overrides are intersected with the family's admissible range
    const ParamBound* r = ref.find(b.name);
    p->lower = std::max(b.lower, r->lower);
    p->upper = std::min(b.upper, r->upper);
  }
  return pb;
}

// ---- experiments ----------------------------------------------------------

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg, int jobs) { return sweep_impl(cfg, Variant{}, jobs); }

std::vector<CrossingRow> find_crossing(const ExperimentConfig& cfg, int jobs, std::vector<ResultRow>* grid_rows) {
  if (cfg.channel == ChannelModel::FixedGrid) throw ConfigError("crossing needs a fiber or satellite channel model");
  return crossing_impl(cfg, Variant{}, jobs, grid_rows);
}

ExperimentResult run_fixed_param_baseline(const ExperimentConfig& cfg, double r_fixed, int jobs) {
  const Variant v{"baseline", r_fixed};
  ExperimentResult out;
  if (cfg.channel == ChannelModel::FixedGrid) {
    out.rows = sweep_impl(cfg, v, jobs);
  } else {
    out.crossings = crossing_impl(cfg, v, jobs, &out.rows);
  }
  return out;
}

std::vector<OracleRow> run_oracle_check(const ExperimentConfig& cfg, int jobs) {
  // fixed two-mode sample points
  static const std::array<std::array<cplx, 2>, 10> pts{{
      {cplx(0.0, 0.0), cplx(0.0, 0.0)},    {cplx(0.2, 0.0), cplx(0.0, 0.1)},
      {cplx(-0.3, 0.4), cplx(0.5, -0.2)},  {cplx(0.7, 0.1), cplx(-0.6, 0.3)},
      {cplx(0.0, -0.8), cplx(0.2, 0.9)},   {cplx(1.0, 0.5), cplx(0.4, 0.4)},
      {cplx(-0.5, -0.5), cplx(-1.0, 0.2)}, {cplx(0.1, 1.2), cplx(0.0, 0.0)},
      {cplx(0.0, 0.0), cplx(1.1, -0.6)},   {cplx(-1.3, 0.2), cplx(0.3, -1.0)},
  }};
  const cplx alpha(0.4, -0.3);
  const double gain = 0.9;

  std::vector<ResourceSpec> specs;
  std::vector<ChannelParams> chs;
  for (Family f : cfg.families) {
    std::vector<std::pair<double, double>> extra;  // (kappa, delta)
    if (f == Family::TMSV) {
      extra.push_back({NAN, NAN});
    } else if (f == Family::SB) {
      for (double d : cfg.oracle_delta) extra.push_back({NAN, d});
    } else {
      for (double k : cfg.oracle_kappa) extra.push_back({k, NAN});
    }
    for (double r : cfg.oracle_r)
      for (double T : cfg.T_grid)
        for (double e : cfg.eps_grid)
          for (auto [k, d] : extra) {
            ResourceSpec s;
            s.family = f;
            s.tmsv.r = r;
            if (!std::isnan(k)) s.kappa = k;
            if (!std::isnan(d)) s.delta = d;
            s.qs_gain = cfg.qs_gain;
            s.kernel = cfg.kernel;
            specs.push_back(s);
            chs.push_back({T, e});
          }
  }
  std::vector<OracleRow> rows(specs.size());
  parallel_for(static_cast<int>(specs.size()), jobs, [&](int i) {
    const ResourceSpec& s = specs[i];
    OracleRow& row = rows[i];
    row.family = s.family;
    row.r = s.tmsv.r;
    row.kappa = s.family == Family::TMSV || s.family == Family::SB ? NAN : s.kappa;
    row.delta = s.family == Family::SB ? s.delta : NAN;
    row.T = chs[i].T;
    row.eps = chs[i].eps;
    row.n_max = oracle::default_n_max(s);
    const ResourceState st = build_resource(s, chs[i]);
    const oracle::FockOperator op = oracle::oracle_state(s, chs[i], row.n_max);
    for (const auto& p : pts)
      row.cf_max_abs_diff = std::max(row.cf_max_abs_diff, std::abs(st.cf.evaluate(p) - oracle::oracle_cf(op, p[0], p[1])));
    const PolyGaussianCF chi_in = input_cf_coherent(alpha);
    const TeleportParams tp{gain, cfg.eta2};
    row.fidelity_pipeline = fidelity(chi_in, teleport(chi_in, st, tp));
    auto chi_in_fn = [&](cplx xi) {
      return std::exp(-0.5 * std::norm(xi) + xi * std::conj(alpha) - std::conj(xi) * alpha);
    };
    row.fidelity_oracle = oracle::oracle_teleport_fidelity(op, chi_in_fn, gain, cfg.eta2).value.real();
    row.fidelity_abs_diff = std::abs(row.fidelity_pipeline - row.fidelity_oracle);
    row.pass = row.cf_max_abs_diff < cfg.oracle_cf_tol && row.fidelity_abs_diff < cfg.oracle_fidelity_tol;
  });
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs) {
  ExperimentResult out;
  switch (cfg.kind) {
    case ExperimentKind::Sweep:
    case ExperimentKind::Surface: out.rows = run_sweep(cfg, jobs); break;
    case ExperimentKind::Crossing: out.crossings = find_crossing(cfg, jobs, &out.rows); break;
    case ExperimentKind::Baseline:
      for (double r : cfg.baseline_r) {
        ExperimentResult b = run_fixed_param_baseline(cfg, r, jobs);
        out.rows.insert(out.rows.end(), b.rows.begin(), b.rows.end());
        out.crossings.insert(out.crossings.end(), b.crossings.begin(), b.crossings.end());
      }
      break;
    case ExperimentKind::OracleCheck: out.oracle = run_oracle_check(cfg, jobs); break;
  }
  return out;
}

double reevaluate(const ResultRow& row) {
  Problem pb = Problem::make(row.family, {row.input, row.sigma}, row.eta2);
  pb.qs_gain = row.qs_gain;
  pb.kernel = row.kernel;
  std::vector<double> params;
  for (const ParamBound& b : pb.space.params) {
    switch (b.name) {
      case Param::R: params.push_back(row.r); break;
      case Param::G: params.push_back(row.g); break;
      case Param::Kappa: params.push_back(row.kappa); break;
      case Param::Delta: params.push_back(row.delta); break;
    }
  }
  return evaluate(pb, {row.T, row.eps}, params).fidelity.mean_fidelity;
}

// ---- output ---------------------------------------------------------------

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << kRowHeader << '\n';
  for (const ResultRow& r : rows)
    csv_line(os, to_string(r.family), r.mode, to_string(r.input), fmt(r.sigma), fmt(r.eta2), to_string(r.channel),
             fmt(r.distance_km), fmt(r.T), fmt(r.eps), fmt(r.r), fmt(r.g), fmt(r.kappa), fmt(r.delta),
             qs_name(r.qs_gain), kernel_name(r.kernel), fmt(r.mean_fidelity), fmt(r.classical_limit), fmt(r.margin),
             fmt(r.error_estimate), fmt(r.quadrature_converged), fmt(r.success_norm), fmt(r.evaluations),
             fmt(r.failed_evaluations), fmt(r.converged), fmt(r.multistart_spread), fmt(r.boundary_pinned));
}

void write_crossings_csv(std::ostream& os, const std::vector<CrossingRow>& rows) {
  os << "family,mode,input,sigma,eta2,channel,r_fixed,index,status,crossing_km,bracket_lo_km,bracket_hi_km,side,"
        "non_monotone,margin_first,margin_last\n";
  for (const CrossingRow& c : rows)
    csv_line(os, to_string(c.family), c.mode, to_string(c.input), fmt(c.sigma), fmt(c.eta2), to_string(c.channel),
             fmt(c.r_fixed), fmt(c.index), c.status, fmt(c.crossing_km), fmt(c.bracket_lo_km), fmt(c.bracket_hi_km),
             c.side, fmt(c.non_monotone), fmt(c.margin_first), fmt(c.margin_last));
}

void write_oracle_csv(std::ostream& os, const std::vector<OracleRow>& rows) {
  os << "family,r,kappa,delta,T,eps,n_max,cf_max_abs_diff,fidelity_pipeline,fidelity_oracle,fidelity_abs_diff,pass\n";
  for (const OracleRow& o : rows)
    csv_line(os, to_string(o.family), fmt(o.r), fmt(o.kappa), fmt(o.delta), fmt(o.T), fmt(o.eps), fmt(o.n_max),
             fmt(o.cf_max_abs_diff), fmt(o.fidelity_pipeline), fmt(o.fidelity_oracle), fmt(o.fidelity_abs_diff),
             fmt(o.pass));
}

std::vector<ResultRow> read_rows_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || split(line) != split(std::string(kRowHeader)))
    throw std::invalid_argument("unexpected result CSV header");
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != split(std::string(kRowHeader)).size()) throw std::invalid_argument("bad result CSV row");
    ResultRow r;
    r.family = family_from_string(f[0]);
    r.mode = f[1];
    r.input = f[2] == "squeezed" ? InputKind::Squeezed : InputKind::Coherent;
    r.sigma = parse_double(f[3]);
    r.eta2 = parse_double(f[4]);
    r.channel = f[5] == "fiber" ? ChannelModel::Fiber : f[5] == "satellite" ? ChannelModel::Satellite : ChannelModel::FixedGrid;
    r.distance_km = parse_double(f[6]);
    r.T = parse_double(f[7]);
    r.eps = parse_double(f[8]);
    r.r = parse_double(f[9]);
    r.g = parse_double(f[10]);
    r.kappa = parse_double(f[11]);
    r.delta = parse_double(f[12]);
    r.qs_gain = f[13] == "standard" ? QsGainConvention::Standard : QsGainConvention::AsPublished;
    r.kernel = f[14] == "as-printed" ? KernelSign::AsPrinted : KernelSign::Physical;
    r.mean_fidelity = parse_double(f[15]);
    r.classical_limit = parse_double(f[16]);
    r.margin = parse_double(f[17]);
    r.error_estimate = parse_double(f[18]);
    r.quadrature_converged = f[19] == "1";
    r.success_norm = parse_double(f[20]);
    r.evaluations = std::stoi(f[21]);
    r.failed_evaluations = std::stoi(f[22]);
    r.converged = f[23] == "1";
    r.multistart_spread = parse_double(f[24]);
    r.boundary_pinned = f[25] == "1";
    rows.push_back(r);
  }
  return rows;
}

std::uint64_t config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string result_json(const ExperimentConfig& cfg, const std::string& config_text, const ExperimentResult& res) {
  using nlohmann::ordered_json;
  auto num = [](double v) { return std::isnan(v) ? ordered_json(nullptr) : ordered_json(v); };
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << config_hash(config_text);

  ordered_json j;
  j["metadata"] = {
      {"schema_version", kSchemaVersion},
      {"cvtele_version", std::string(kVersion)},
      {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
      {"experiment", std::string(to_string(cfg.kind))},
      {"config_hash_fnv1a64", hash.str()},
      {"seed", cfg.optimizer.seed},
      {"eta2", cfg.eta2},
      {"input", std::string(to_string(cfg.ensemble.kind))},
      {"sigma", cfg.ensemble.sigma},
      {"channel", std::string(to_string(cfg.channel))},
  };
  ordered_json rows = ordered_json::array();
  for (const ResultRow& r : res.rows)
    rows.push_back({{"family", std::string(to_string(r.family))}, {"mode", r.mode}, {"distance_km", num(r.distance_km)},
                    {"T", r.T}, {"eps", r.eps}, {"r", num(r.r)}, {"g", num(r.g)}, {"kappa", num(r.kappa)},
                    {"delta", num(r.delta)}, {"mean_fidelity", r.mean_fidelity},
                    {"classical_limit", r.classical_limit}, {"margin", r.margin},
                    {"error_estimate", r.error_estimate}, {"success_norm", r.success_norm},
                    {"evaluations", r.evaluations}, {"converged", r.converged},
                    {"multistart_spread", r.multistart_spread}, {"boundary_pinned", r.boundary_pinned}});
  j["rows"] = rows;
  ordered_json cross = ordered_json::array();
  for (const CrossingRow& c : res.crossings)
    cross.push_back({{"family", std::string(to_string(c.family))}, {"mode", c.mode}, {"r_fixed", num(c.r_fixed)},
                     {"status", c.status}, {"crossing_km", num(c.crossing_km)}, {"side", c.side},
                     {"non_monotone", c.non_monotone}});
  j["crossings"] = cross;
  ordered_json orc = ordered_json::array();
  for (const OracleRow& o : res.oracle)
    orc.push_back({{"family", std::string(to_string(o.family))}, {"r", o.r}, {"kappa", num(o.kappa)},
                   {"delta", num(o.delta)}, {"T", o.T}, {"eps", o.eps}, {"cf_max_abs_diff", o.cf_max_abs_diff},
                   {"fidelity_abs_diff", o.fidelity_abs_diff}, {"pass", o.pass}});
  j["oracle"] = orc;
  return j.dump(2) + "\n";
}

}  // namespace cvtele
