// Acceptance run: one PASS/FAIL line per criterion, indented detail lines
// above it. Optional arguments select criteria by name (e.g. "AC2 AC8").

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "cvtele/experiment.hpp"
#include "cvtele/quadrature.hpp"
#include "test_support.hpp"

using namespace cvtele;
using cvtele::testing::random_cplx;
using cvtele::testing::random_integrable_cf;

namespace {

int jobs() { return static_cast<int>(std::max(1u, std::min(8u, std::thread::hardware_concurrency()))); }

void detail(const char* fmt, auto... args) {
  std::printf("    ");
  std::printf(fmt, args...);
  std::printf("\n");
  std::fflush(stdout);
}

struct Verdict {
  bool pass = true;
  std::string summary;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      summary += (summary.empty() ? "" : "; ") + what;
    }
  }
};

// ---- shared runs ----------------------------------------------------------

ExperimentConfig family_sweep_config() {
  return parse_config("families: [TMSV, PS, PA, PC, PS-PA, PA-PS, QS, SB]\n", "family-sweep");
}

const std::vector<ResultRow>& family_sweep_rows() {
  // Four workers even on small machines so AC9 compares distinct worker counts.
  static const std::vector<ResultRow> rows = run_sweep(family_sweep_config(), std::max(4, jobs()));
  return rows;
}

std::map<Family, std::vector<const ResultRow*>> by_family(const std::vector<ResultRow>& rows) {
  std::map<Family, std::vector<const ResultRow*>> out;
  for (const auto& r : rows) out[r.family].push_back(&r);
  return out;
}

std::string km(double v) {
  if (std::isnan(v)) return "none";
  std::ostringstream os;
  os.precision(1);
  os << std::fixed << v << " km";
  return os.str();
}

struct CrossingSummary {
  double first_falling_km = NAN;
  double max_km = NAN;
  std::string status;
  std::string side;
  bool non_monotone = false;
};

std::map<Family, CrossingSummary> crossings(const std::string& yaml, int n_jobs) {
  const ExperimentConfig cfg = parse_config(yaml, "crossing", ExperimentKind::Crossing);
  std::map<Family, CrossingSummary> out;
  for (const CrossingRow& c : find_crossing(cfg, n_jobs)) {
    CrossingSummary& s = out[c.family];
    s.status = c.status;
    s.side = c.side;
    s.non_monotone = s.non_monotone || c.non_monotone;
    if (c.status != "crossing") continue;
    if (c.side == "falling" && std::isnan(s.first_falling_km)) s.first_falling_km = c.crossing_km;
    s.max_km = std::isnan(s.max_km) ? c.crossing_km : std::max(s.max_km, c.crossing_km);
  }
  return out;
}

void check_crossing(Verdict& v, const std::string& label, const CrossingSummary& s, double target, double tol) {
  detail("%-34s %-10s (target %.0f +- %.0f km)%s", label.c_str(), km(s.first_falling_km).c_str(), target, tol,
         s.non_monotone ? " [non-monotone margin]" : "");
  v.require(!std::isnan(s.first_falling_km) && std::abs(s.first_falling_km - target) <= tol,
            label + " = " + km(s.first_falling_km));
}

// ---- criteria -------------------------------------------------------------

Verdict ac1() {
  const ExperimentConfig cfg = parse_config(
      "families: [TMSV, PS, PA, PC, PS-PA, PA-PS, QS, SB]\n"
      "channel: {T: [1.0, 0.7], eps: [0.0, 0.05]}\n"
      "oracle_check: {r: [0.2, 0.5], kappa: [0.5, 0.9], delta: [0.3], cf_tol: 1.0e-5, fidelity_tol: 1.0e-6}\n",
      "ac1", ExperimentKind::OracleCheck);
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = run_oracle_check(cfg, jobs());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Verdict v;
  std::map<Family, std::pair<double, double>> worst;
  int failed = 0;
  for (const auto& r : rows) {
    auto& w = worst[r.family];
    w.first = std::max(w.first, r.cf_max_abs_diff);
    w.second = std::max(w.second, r.fidelity_abs_diff);
    failed += r.pass ? 0 : 1;
  }
  for (const auto& [f, w] : worst)
    detail("%-6s max |dchi| = %.2e  max |dF| = %.2e", std::string(to_string(f)).c_str(), w.first, w.second);
  detail("%d worker(s), %.1f s (target < 300 s)", jobs(), secs);
  v.require(failed == 0, std::to_string(failed) + " of " + std::to_string(rows.size()) + " points outside tolerance");
  v.require(secs < 300.0, "runtime " + std::to_string(secs) + " s");
  if (v.pass) v.summary = std::to_string(rows.size()) + " grid points within 1e-5 (CF) and 1e-6 (F)";
  return v;
}

Verdict ac2() {
  Verdict v;
  for (double r : {0.0, 0.25, 0.5, 1.0}) {
    ResourceSpec spec;
    spec.tmsv.r = r;
    const ResourceState st = build_resource(spec, {});
    const TeleportParams tp{1.0, 1.0};
    const double expected = 1.0 / (1.0 + std::exp(-2.0 * r));
    const PolyGaussianCF in = input_cf_coherent(cplx(0.7, -0.4));
    const double single = fidelity(in, teleport(in, st, tp));
    const double mean = mean_fidelity({InputKind::Coherent, 10.0}, st, tp).mean_fidelity;
    detail("r = %.2f  F = %.15f  mean F = %.15f  expected %.15f", r, single, mean, expected);
    v.require(std::abs(single - expected) < 1e-9 && std::abs(mean - expected) < 1e-9, "r = " + std::to_string(r));
    if (r == 0.0) v.require(std::abs(single - 0.5) < 1e-15, "r = 0 is not exactly 1/2");
  }
  if (v.pass) v.summary = "F = 1/(1+e^{-2r}) within 1e-9 for r in {0, 0.25, 0.5, 1}";
  return v;
}

Verdict ac3() {
  const auto fam = by_family(family_sweep_rows());
  Verdict v;
  double worst = 0.0, min_kappa = 1.0;
  bool pinned = true;
  for (std::size_t i = 0; i < fam.at(Family::PC).size(); ++i) {
    const ResultRow& pc = *fam.at(Family::PC)[i];
    const ResultRow& tm = *fam.at(Family::TMSV)[i];
    worst = std::max(worst, std::abs(pc.mean_fidelity - tm.mean_fidelity));
    min_kappa = std::min(min_kappa, pc.kappa);
    pinned = pinned && pc.boundary_pinned && pc.kappa >= 1.0 - 1e-6;
  }
  detail("max |F_PC - F_TMSV| = %.2e over %zu T points; min kappa_PC = %.9f", worst, fam.at(Family::PC).size(),
         min_kappa);
  v.require(worst <= 1e-4, "PC deviates from TMSV by " + std::to_string(worst));
  v.require(pinned, "kappa_PC not pinned at its upper bound");
  if (v.pass) v.summary = "PC equals TMSV within 1e-4 with kappa pinned at 1";
  return v;
}

Verdict ac4() {
  const auto fam = by_family(family_sweep_rows());
  const auto& tm = fam.at(Family::TMSV);
  const auto& ps = fam.at(Family::PS);
  const auto& pa = fam.at(Family::PA);
  const auto& sb = fam.at(Family::SB);
  const auto& paps = fam.at(Family::PAPS);
  const double tol = 1e-6;
  std::vector<std::string> bad_ps, bad_pa, bad_sb, bad_paps;
  auto t = [](const ResultRow* r) {
    std::ostringstream os;
    os << r->T;
    return os.str();
  };
  for (std::size_t i = 0; i < tm.size(); ++i) {
    if (ps[i]->mean_fidelity > tm[i]->mean_fidelity + tol) bad_ps.push_back(t(tm[i]));
    if (pa[i]->mean_fidelity < ps[i]->mean_fidelity - tol) bad_pa.push_back(t(tm[i]));
    if (sb[i]->margin > 0 && sb[i]->mean_fidelity < tm[i]->mean_fidelity - tol) bad_sb.push_back(t(tm[i]));
    if (paps[i]->margin > 0 && paps[i]->mean_fidelity < tm[i]->mean_fidelity - tol) bad_paps.push_back(t(tm[i]));
  }
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
    return s.empty() ? std::string("none") : s;
  };
  detail("PS > TMSV at T = %s", join(bad_ps).c_str());
  detail("PA < PS at T = %s", join(bad_pa).c_str());
  detail("SB < TMSV (above limit) at T = %s", join(bad_sb).c_str());
  detail("PA-PS < TMSV (above limit) at T = %s", join(bad_paps).c_str());

  std::vector<double> cross;
  for (std::size_t i = 0; i + 1 < tm.size(); ++i) {
    const double d0 = sb[i]->mean_fidelity - paps[i]->mean_fidelity;
    const double d1 = sb[i + 1]->mean_fidelity - paps[i + 1]->mean_fidelity;
    if ((d0 > 0) != (d1 > 0)) cross.push_back(tm[i]->T + (tm[i + 1]->T - tm[i]->T) * d0 / (d0 - d1));
  }
  std::string cs;
  for (double c : cross) cs += (cs.empty() ? "" : ", ") + std::to_string(c).substr(0, 5);
  detail("SB - PA-PS sign changes at T = %s (target 0.72 +- 0.05)", cs.empty() ? "none" : cs.c_str());

  Verdict v;
  v.require(bad_ps.empty(), "PS > TMSV at T=" + join(bad_ps));
  v.require(bad_pa.empty(), "PA < PS at T=" + join(bad_pa));
  v.require(bad_sb.empty(), "SB < TMSV at T=" + join(bad_sb));
  v.require(bad_paps.empty(), "PA-PS < TMSV at T=" + join(bad_paps));
  v.require(cross.size() == 1 && std::abs(cross[0] - 0.72) <= 0.05, "SB/PA-PS crossover at T=" + (cs.empty() ? "none" : cs));
  if (v.pass) v.summary = "orderings hold; SB/PA-PS crossover at T=" + cs;
  return v;
}

Verdict ac5() {
  Verdict v;
  const auto coh = crossings("families: [TMSV, PA-PS]\nchannel: {model: fiber}\n", jobs());
  check_crossing(v, "fiber coherent sigma=10 TMSV", coh.at(Family::TMSV), 100, 10);
  check_crossing(v, "fiber coherent sigma=10 PA-PS", coh.at(Family::PAPS), 140, 10);
  const auto sq = crossings("families: [TMSV, PA-PS]\ninput: {kind: squeezed, sigma: 1}\nchannel: {model: fiber}\n", jobs());
  check_crossing(v, "fiber squeezed sigma=1 TMSV", sq.at(Family::TMSV), 38, 5);
  check_crossing(v, "fiber squeezed sigma=1 PA-PS", sq.at(Family::PAPS), 65, 7);
  for (Family f : {Family::TMSV, Family::PAPS})
    if (sq.at(f).status == "none")
      detail("squeezed %s: margin stays %s the limit over 5-250 km", std::string(to_string(f)).c_str(),
             sq.at(f).side.c_str());
  if (v.pass) v.summary = "all four fiber crossings within tolerance";
  return v;
}

Verdict ac6() {
  Verdict v;
  const auto coh = crossings("families: [TMSV, PA-PS]\nchannel: {model: satellite}\n", jobs());
  check_crossing(v, "satellite coherent sigma=10 TMSV", coh.at(Family::TMSV), 700, 70);
  check_crossing(v, "satellite coherent sigma=10 PA-PS", coh.at(Family::PAPS), 1220, 120);
  const auto sq = crossings("families: [TMSV, PA-PS]\ninput: {kind: squeezed}\nchannel: {model: satellite}\n", jobs());
  for (Family f : {Family::TMSV, Family::PAPS}) {
    const CrossingSummary& s = sq.at(f);
    detail("satellite squeezed %-6s %s (margin %s the limit)", std::string(to_string(f)).c_str(),
           s.status == "none" ? "no crossing" : ("crossing at " + km(s.max_km)).c_str(), s.side.c_str());
    v.require(s.status == "none", std::string("squeezed ") + std::string(to_string(f)) + " crosses");
  }
  const auto ideal = crossings("families: [TMSV, PA-PS]\neta2: 1.0\nchannel: {model: satellite}\n", jobs());
  for (Family f : {Family::TMSV, Family::PAPS})
    detail("sensitivity eta2=1.0 coherent %-6s %s (%s)", std::string(to_string(f)).c_str(),
           km(ideal.at(f).first_falling_km).c_str(), ideal.at(f).side.c_str());
  if (v.pass) v.summary = "satellite crossings within tolerance; no squeezed crossing";
  return v;
}

Verdict ac7() {
  Verdict v;
  for (const auto& [model, limit] : {std::pair{"fiber", 92.0 + 5.0}, std::pair{"satellite", 610.0 + 60.0}}) {
    const ExperimentConfig cfg = parse_config(
        std::string("families: [PA-PS]\nchannel: {model: ") + model + "}\nbaseline: {r_fixed: [0.25, 0.5, 0.75, 1.0, 1.5]}\n",
        "ac7", ExperimentKind::Baseline);
    const ExperimentResult res = run_experiment(cfg, jobs());
    for (const CrossingRow& c : res.crossings) {
      const bool above_throughout = c.status == "none" && c.side == "above";
      const double dist = c.status == "crossing" ? c.crossing_km : NAN;
      detail("%-9s r = %.2f  %s%s", model, c.r_fixed,
             c.status == "crossing" ? km(dist).c_str() : ("no crossing, " + c.side).c_str(),
             c.status == "none" && c.side == "below" ? " (never above the limit)" : "");
      std::ostringstream os;
      os << model << " r=" << c.r_fixed << " crossing " << (above_throughout ? "beyond range" : km(dist));
      v.require(!above_throughout && (std::isnan(dist) || dist <= limit), os.str());
    }
  }
  if (v.pass) v.summary = "fixed-parameter PA-PS crossings stay below 97 km (fiber) and 670 km (satellite)";
  return v;
}

Verdict ac8() {
  Verdict v;
  std::mt19937_64 rng(20261016);

  // integrate_mode against quadrature
  double worst_int = 0.0;
  for (int trial = 0; trial < 16; ++trial) {
    const auto cf = random_integrable_cf(2, rng, 1 + trial % 4, 5);
    const int mode = trial % 2, keep = 1 - mode;
    const auto reduced = integrate_mode(cf, mode);
    for (int k = 0; k < 2; ++k) {
      const cplx other = random_cplx(rng, 0.6);
      std::vector<cplx> slots(4);
      slots[2 * keep] = other;
      slots[2 * keep + 1] = std::conj(other);
      auto f = [&](double x, double y) {
        std::vector<cplx> s = slots;
        s[2 * mode] = cplx(x, y);
        s[2 * mode + 1] = cplx(x, -y);
        return cf.evaluate_slots(s) / std::numbers::pi;
      };
      const cplx numeric = quad::disc_integral(f, 11.0, 1e-11, 32, 768).value;
      const std::vector<cplx> arg{other};
      worst_int = std::max(worst_int, std::abs(reduced.evaluate(arg) - numeric) / (1.0 + std::abs(numeric)));
    }
  }
  detail("integrate_mode vs quadrature: max rel. error %.2e (32 cases)", worst_int);
  v.require(worst_int <= 1e-7, "integrate_mode error " + std::to_string(worst_int));

  // differentiate against central differences
  double worst_diff = 0.0;
  const double h = 1e-4;
  for (int trial = 0; trial < 16; ++trial) {
    const auto cf = random_integrable_cf(2, rng, 3, 3);
    for (int slot = 0; slot < 4; ++slot) {
      const auto d = differentiate(cf, VarIndex{slot / 2, slot % 2 == 1});
      for (int k = 0; k < 3; ++k) {
        std::vector<cplx> x(4);
        for (auto& s : x) s = random_cplx(rng, 0.7);
        auto plus = x, minus = x;
        plus[slot] += h;
        minus[slot] -= h;
        const cplx fd = (cf.evaluate_slots(plus) - cf.evaluate_slots(minus)) / (2 * h);
        worst_diff = std::max(worst_diff, std::abs(d.evaluate_slots(x) - fd) / (1.0 + std::abs(fd)));
      }
    }
  }
  detail("differentiate vs finite differences: max rel. error %.2e (192 cases)", worst_diff);
  v.require(worst_diff <= 1e-6, "differentiate error " + std::to_string(worst_diff));

  // randomized pipelines
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto pts = cvtele::testing::sample_points_2mode();
  double worst_herm = 0.0, worst_norm = 0.0, f_min = 1.0, f_max = 0.0;
  int runs = 0, resampled = 0;
  while (runs < 1000) {
    ResourceSpec spec;
    spec.family = kAllFamilies[static_cast<int>(u(rng) * 8) % 8];
    spec.tmsv.r = 1.5 * u(rng);
    spec.kappa = 0.05 + 0.9 * u(rng);
    spec.delta = std::numbers::pi * (u(rng) - 0.5);
    const ChannelParams ch{0.05 + 0.95 * u(rng), 0.1 * u(rng)};
    const TeleportParams tp{0.2 + 1.8 * u(rng), 0.5 + 0.5 * u(rng)};
    ResourceState st;
    try {
      st = build_resource(spec, ch);
    } catch (const VanishingNormError&) {
      ++resampled;
      continue;
    }
    ++runs;
    worst_norm = std::max(worst_norm, std::abs(st.cf.at_origin() - 1.0));
    for (int k = 0; k < 3; ++k) {
      const auto& p = pts[(runs + k) % pts.size()];
      const std::array<cplx, 2> neg{-p[0], -p[1]};
      worst_herm = std::max(worst_herm, std::abs(st.cf.evaluate(neg) - std::conj(st.cf.evaluate(p))));
    }
    const PolyGaussianCF in = u(rng) < 0.5 ? input_cf_coherent(random_cplx(rng, 1.5))
                                           : input_cf_squeezed(std::polar(u(rng), 2 * std::numbers::pi * u(rng)));
    const double f = fidelity(in, teleport(in, st, tp));
    f_min = std::min(f_min, f);
    f_max = std::max(f_max, f);
  }
  detail("%d pipelines (%d resampled for vanishing norm): max |chi(-x) - conj chi(x)| = %.2e, max |chi(0) - 1| = %.2e",
         runs, resampled, worst_herm, worst_norm);
  detail("fidelity range [%.6f, %.12f]", f_min, f_max);
  v.require(worst_herm <= 1e-10, "Hermitian symmetry " + std::to_string(worst_herm));
  v.require(worst_norm <= 1e-12, "normalization " + std::to_string(worst_norm));
  v.require(f_min >= 0.0 && f_max <= 1.0 + 1e-9, "fidelity outside [0, 1+1e-9]");
  if (v.pass) v.summary = "algebra and pipeline properties hold over 1000 random runs";
  return v;
}

Verdict ac9() {
  std::ostringstream a, b;
  write_rows_csv(a, family_sweep_rows());
  write_rows_csv(b, run_sweep(family_sweep_config(), 1));
  Verdict v;
  detail("%zu rows, %zu bytes; first run with %d workers, second single-threaded", family_sweep_rows().size(), a.str().size(), std::max(4, jobs()));
  v.require(a.str() == b.str(), "CSV differs between runs");
  if (v.pass) v.summary = "byte-identical CSV across runs and worker counts";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
      {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9},
  };
  std::set<std::string> selected(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    if (!selected.empty() && !selected.count(name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.pass = false;
      v.summary = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s (%.1f s) %s\n", name.c_str(), v.pass ? "PASS" : "FAIL", secs, v.summary.c_str());
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
