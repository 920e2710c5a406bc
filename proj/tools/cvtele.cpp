#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <tuple>

#include "cvtele/experiment.hpp"
#include "cvtele/fock_oracle.hpp"

using namespace cvtele;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string families;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Family> parse_family_list(const std::string& list) {
  std::vector<Family> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      const Family f = family_from_string(item);
      if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--families: ") + e.what());
    }
  }
  if (out.empty()) throw ConfigError("--families: empty list");
  return out;
}

void write_csv(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  fn(os);
}

int run(ExperimentKind kind, const Options& opt) {
  const std::string text = read_file(opt.config);
  ExperimentConfig cfg = parse_config(text, opt.config, kind);
  if (!opt.families.empty()) cfg.families = parse_family_list(opt.families);
  if (opt.seed) cfg.optimizer.seed = *opt.seed;
  if (!opt.out.empty()) cfg.output_path = opt.out;
  cfg.validate();
  if (opt.jobs < 1) throw ConfigError("--jobs must be at least 1");

  const ExperimentResult res = run_experiment(cfg, opt.jobs);
  const std::string& path = cfg.output_path;
  const std::filesystem::path p(path);
  switch (kind) {
    case ExperimentKind::OracleCheck:
      write_csv(path, [&](std::ostream& os) { write_oracle_csv(os, res.oracle); });
      break;
    case ExperimentKind::Sweep:
    case ExperimentKind::Surface:
      write_csv(path, [&](std::ostream& os) { write_rows_csv(os, res.rows); });
      break;
    case ExperimentKind::Crossing:
    case ExperimentKind::Baseline:
      if (res.crossings.empty()) {
        write_csv(path, [&](std::ostream& os) { write_rows_csv(os, res.rows); });
      } else {
        write_csv(path, [&](std::ostream& os) { write_crossings_csv(os, res.crossings); });
        if (!path.empty()) {
          std::filesystem::path grid = p;
          grid.replace_extension(".grid.csv");
          write_csv(grid.string(), [&](std::ostream& os) { write_rows_csv(os, res.rows); });
        }
      }
      break;
  }
  if (cfg.output_json && !path.empty()) {
    std::filesystem::path js = p;
    js.replace_extension(".json");
    std::ofstream os(js, std::ios::binary);
    os << result_json(cfg, text, res);
  }
  if (kind == ExperimentKind::OracleCheck) {
    int failed = 0;
    for (const OracleRow& r : res.oracle) failed += r.pass ? 0 : 1;
    if (failed > 0) {
      std::cerr << "oracle-check: " << failed << " of " << res.oracle.size() << " points outside tolerance\n";
      return kExitNumerical;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-variable teleportation fidelity with Gaussian and non-Gaussian resources"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Options opt;
  const std::tuple<const char*, const char*, ExperimentKind> subs[] = {
      {"sweep", "optimized fidelity along a channel grid", ExperimentKind::Sweep},
      {"surface", "optimized fidelity over a (T, eps) surface", ExperimentKind::Surface},
      {"crossing", "distance where the fidelity meets the classical limit", ExperimentKind::Crossing},
      {"baseline", "crossings with r and g held fixed", ExperimentKind::Baseline},
      {"oracle-check", "cross-check the CF pipeline against the Fock oracle", ExperimentKind::OracleCheck},
  };
  std::vector<std::pair<CLI::App*, ExperimentKind>> commands;
  for (const auto& [name, help, kind] : subs) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "experiment config (YAML)")->required();
    sub->add_option("--out", opt.out, "output CSV path (default: stdout)");
    sub->add_option("--seed", opt.seed, "optimizer seed (overrides the config)");
    sub->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--families", opt.families, "comma-separated families (overrides the config)");
    commands.emplace_back(sub, kind);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  ExperimentKind kind = ExperimentKind::Sweep;
  for (const auto& [sub, k] : commands)
    if (sub->parsed()) kind = k;
  try {
    return run(kind, opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const AlgebraError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const oracle::TruncationError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
