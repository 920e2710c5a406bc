#pragma once

// Config-driven experiments: optimized sweeps over channel grids, (T, eps)
// surfaces, classical-limit crossing distances, the fixed-parameter baseline
// and the oracle cross-check, with CSV and JSON output.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvtele/channels.hpp"
#include "cvtele/optimize.hpp"

namespace cvtele {

inline constexpr std::string_view kVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Sweep, Surface, Crossing, Baseline, OracleCheck };
enum class ChannelModel { FixedGrid, Fiber, Satellite };

std::string_view to_string(ExperimentKind k);
std::string_view to_string(ChannelModel m);
std::string_view to_string(InputKind k);
ExperimentKind experiment_kind_from_string(std::string_view s);

struct BoundOverride {
  Param name;
  double lower, upper;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Sweep;
  std::vector<Family> families{Family::TMSV};
  InputEnsemble ensemble;
  double eta2 = kDefaultEta2;
  QsGainConvention qs_gain = QsGainConvention::AsPublished;
  KernelSign kernel = KernelSign::Physical;

  ChannelModel channel = ChannelModel::FixedGrid;
  FiberModel fiber;
  SatelliteModel satellite;
  std::vector<double> T_grid;    // fixed-grid model
  std::vector<double> eps_grid;  // fixed-grid model
  std::vector<double> L_grid;    // fiber / satellite models

  OptimizerOptions optimizer;
  bool warm_start = true;
  std::vector<BoundOverride> bounds;

  double crossing_tol_km = 1.0;
  std::vector<double> baseline_r{0.25, 0.5, 0.75, 1.0, 1.5};

  std::vector<double> oracle_r{0.2, 0.5};
  std::vector<double> oracle_kappa{0.5, 0.9};
  std::vector<double> oracle_delta{0.3};
  double oracle_cf_tol = 1e-5;
  double oracle_fidelity_tol = 1e-6;

  std::string output_path;
  bool output_json = false;

  /// Fills empty grids with the defaults for the experiment kind.
  void apply_defaults();
  void validate() const;
  /// Channel points of the grid: T-major within each eps for fixed-grid,
  /// in L order otherwise.
  std::vector<ChannelPoint> channel_points() const;
  ChannelPoint channel_at(double L_km) const;
  Problem problem(Family f) const;
};

/// Parses, fills defaults and validates. `kind` overrides the file's
/// experiment key. Errors carry the source name and line.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>",
                              std::optional<ExperimentKind> kind = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path, std::optional<ExperimentKind> kind = std::nullopt);

/// Evenly spaced grid start, start + step, ..., stop (inclusive within 1e-9 step),
/// rounded to 12 decimals.
std::vector<double> linear_grid(double start, double stop, double step);

struct ResultRow {
  Family family = Family::TMSV;
  std::string mode = "optimized";  // optimized | baseline
  InputKind input = InputKind::Coherent;
  double sigma = 0.0;
  double eta2 = 0.0;
  ChannelModel channel = ChannelModel::FixedGrid;
  double distance_km = NAN;
  double T = 1.0, eps = 0.0;
  double r = NAN, g = NAN, kappa = NAN, delta = NAN;
  QsGainConvention qs_gain = QsGainConvention::AsPublished;
  KernelSign kernel = KernelSign::Physical;
  double mean_fidelity = 0.0;
  double classical_limit = 0.0;
  double margin = 0.0;
  double error_estimate = 0.0;
  bool quadrature_converged = true;
  double success_norm = 0.0;
  int evaluations = 0;
  int failed_evaluations = 0;
  bool converged = false;
  double multistart_spread = 0.0;
  bool boundary_pinned = false;
};

struct CrossingRow {
  Family family = Family::TMSV;
  std::string mode = "optimized";
  InputKind input = InputKind::Coherent;
  double sigma = 0.0;
  double eta2 = 0.0;
  ChannelModel channel = ChannelModel::Fiber;
  double r_fixed = NAN;
  int index = 0;
  std::string status = "none";  // crossing | none
  double crossing_km = NAN;
  double bracket_lo_km = NAN, bracket_hi_km = NAN;
  std::string side;  // crossing: falling | rising; none: above | below
  bool non_monotone = false;
  double margin_first = NAN, margin_last = NAN;
};

struct OracleRow {
  Family family = Family::TMSV;
  double r = 0, kappa = NAN, delta = NAN, T = 1, eps = 0;
  int n_max = 0;
  double cf_max_abs_diff = 0;
  double fidelity_pipeline = 0, fidelity_oracle = 0, fidelity_abs_diff = 0;
  bool pass = false;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<CrossingRow> crossings;
  std::vector<OracleRow> oracle;
};

/// One row per (family, grid point), in family then grid order.
std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg, int jobs = 1);

/// Scan the L grid, then bisect every sign change of the margin to the
/// configured tolerance. Grid rows are appended to `grid_rows` when given.
std::vector<CrossingRow> find_crossing(const ExperimentConfig& cfg, int jobs = 1,
                                       std::vector<ResultRow>* grid_rows = nullptr);

/// g = 1/eta and r = r_fixed held fixed, kappa (or delta) optimized. For
/// fiber/satellite models crossings are returned as well.
ExperimentResult run_fixed_param_baseline(const ExperimentConfig& cfg, double r_fixed, int jobs = 1);

std::vector<OracleRow> run_oracle_check(const ExperimentConfig& cfg, int jobs = 1);

ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs = 1);

/// Re-evaluates the mean fidelity from a row's own columns.
double reevaluate(const ResultRow& row);

std::string format_double(double v);

void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows);
void write_crossings_csv(std::ostream& os, const std::vector<CrossingRow>& rows);
void write_oracle_csv(std::ostream& os, const std::vector<OracleRow>& rows);
std::vector<ResultRow> read_rows_csv(std::istream& is);

/// JSON mirror: metadata (config hash, seed, versions) plus all tables.
std::string result_json(const ExperimentConfig& cfg, const std::string& config_text, const ExperimentResult& res);

/// 64-bit FNV-1a, stable across platforms.
std::uint64_t config_hash(const std::string& text);

}  // namespace cvtele
