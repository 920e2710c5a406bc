#include "cvtele/resource.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cvtele {

namespace {

constexpr int kModeB = 1;

std::invalid_argument bad_spec(const std::string& what) { return std::invalid_argument(what); }

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// cf * exp(c |xi_B|^2)
PolyGaussianCF weight_b(const PolyGaussianCF& cf, double c) {
  return multiply(cf, PolyGaussianCF::modulus_weight(cf.n_modes(), kModeB, c));
}

PolyGaussianCF d_b(const PolyGaussianCF& cf) { return differentiate(cf, VarIndex{kModeB, false}); }
PolyGaussianCF dconj_b(const PolyGaussianCF& cf) { return differentiate(cf, VarIndex{kModeB, true}); }
PolyGaussianCF laplace_b(const PolyGaussianCF& cf) { return d_b(dconj_b(cf)); }

// e^{-|xi|^2/2} d d* [e^{|xi|^2/2} g]  ==  -CF of a g a^dagger
PolyGaussianCF subtract_core(const PolyGaussianCF& g) { return weight_b(laplace_b(weight_b(g, 0.5)), -0.5); }
// e^{|xi|^2/2} d d* [e^{-|xi|^2/2} g]  ==  -CF of a^dagger g a
PolyGaussianCF add_core(const PolyGaussianCF& g) { return weight_b(laplace_b(weight_b(g, -0.5)), 0.5); }

PolyGaussianCF bogoliubov(const PolyGaussianCF& primed, const TMSVParams& p) {
  Eigen::MatrixXcd holo = Eigen::MatrixXcd::Identity(2, 2) * std::cosh(p.r);
  Eigen::MatrixXcd anti = Eigen::MatrixXcd::Zero(2, 2);
  anti(0, 1) = anti(1, 0) = std::polar(std::sinh(p.r), p.phi);
  return substitute(primed, LinearMap::from_modes(holo, anti));
}

PolyGaussianCF photon_catalysis(const PolyGaussianCF& f, double kappa) {
  const double q = (kappa - 1.0) / kappa;
  const PolyGaussianCF inner = weight_b(f, 0.5);
  const PolyGaussianCF both = weight_b(laplace_b(weight_b(laplace_b(inner), -1.0)), 0.5).scaled(q * q);
  const PolyGaussianCF left = weight_b(d_b(weight_b(dconj_b(inner), -1.0)), 0.5).scaled(-q);
  const PolyGaussianCF right = weight_b(dconj_b(weight_b(d_b(inner), -1.0)), 0.5).scaled(-q);
  return add(add(add(both, left), right), f);
}

PolyGaussianCF quantum_scissors(const PolyGaussianCF& tmsv, double gain) {
  // Projects mode B onto span{|0>, |1>} with amplitude gain on |1>: the
  // B-block element <m|rho|n> multiplies the B-operator |m><n|.
  const std::array<int, 3> tmsv_pos{0, 2, 0};
  const PolyGaussianCF lifted = embed(tmsv, 3, std::span<const int>(tmsv_pos.data(), 2));
  PolyGaussianCF sum;
  bool first = true;
  for (int m = 0; m <= 1; ++m) {
    for (int n = 0; n <= 1; ++n) {
      const std::array<int, 1> at_aux{2};
      const std::array<int, 1> at_b{1};
      // Tr_B[rho |n><m|] pairs with <m|D(-xi)|n>; the B-operator |m><n| has CF <n|D|m>.
      const PolyGaussianCF probe = embed(negate_args(fock_matrix_cf(m, n)), 3, at_aux);
      const PolyGaussianCF out_b = embed(fock_matrix_cf(n, m), 3, at_b);
      const PolyGaussianCF term =
          integrate_mode(multiply(multiply(lifted, probe), out_b), 2).scaled(std::pow(gain, m + n));
      sum = first ? term : add(sum, term);
      first = false;
    }
  }
  return sum.scaled(1.0 / (1.0 + gain * gain));
}

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::TMSV: return "TMSV";
    case Family::PS: return "PS";
    case Family::PA: return "PA";
    case Family::PC: return "PC";
    case Family::PSPA: return "PS-PA";
    case Family::PAPS: return "PA-PS";
    case Family::QS: return "QS";
    case Family::SB: return "SB";
  }
  return "?";
}

Family family_from_string(std::string_view name) {
  std::string s;
  for (char c : name)
    if (c != '-' && c != '_') s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (s == "TMSV") return Family::TMSV;
  if (s == "PS") return Family::PS;
  if (s == "PA") return Family::PA;
  if (s == "PC") return Family::PC;
  if (s == "PSPA") return Family::PSPA;
  if (s == "PAPS") return Family::PAPS;
  if (s == "QS") return Family::QS;
  if (s == "SB") return Family::SB;
  throw std::invalid_argument("unknown resource family '" + std::string(name) + "'");
}

Side operation_side(Family f) {
  switch (f) {
    case Family::TMSV:
    case Family::SB: return Side::None;
    case Family::QS: return Side::Transmitter;
    default: return Side::Receiver;
  }
}

void ChannelParams::validate() const {
  if (!(T > 0.0 && T <= 1.0)) throw bad_spec("channel transmissivity must lie in (0, 1]");
  if (!(eps >= 0.0)) throw bad_spec("channel excess noise must be non-negative");
}

double qs_gain(double kappa, QsGainConvention convention) {
  switch (convention) {
    case QsGainConvention::AsPublished: return std::sqrt(1.0 + kappa) / kappa;
    case QsGainConvention::Standard: return std::sqrt((1.0 - kappa) / kappa);
  }
  return 0.0;
}

void ResourceSpec::validate() const {
  if (!(tmsv.r >= 0.0)) throw bad_spec("squeezing r must be non-negative");
  switch (family) {
    case Family::TMSV:
    case Family::SB: break;
    case Family::PC:
      if (!(kappa > 0.0 && kappa <= 1.0)) throw bad_spec("PC kappa must lie in (0, 1]");
      break;
    default:
      if (!(kappa > 0.0 && kappa < 1.0)) throw bad_spec("kappa must lie in (0, 1)");
  }
}

PolyGaussianCF tmsv_cf(const TMSVParams& p) { return bogoliubov(PolyGaussianCF::vacuum(2), p); }

PolyGaussianCF apply_channel(const PolyGaussianCF& cf, const ChannelParams& ch, int mode) {
  ch.validate();
  if (mode < 0 || mode >= cf.n_modes()) throw AlgebraError("apply_channel: mode out of range");
  const PolyGaussianCF shrunk = substitute(cf, LinearMap::scale_mode(cf.n_modes(), mode, std::sqrt(ch.T)));
  return multiply(shrunk, PolyGaussianCF::modulus_weight(cf.n_modes(), mode, -0.5 * (ch.eps + 1.0 - ch.T)));
}

PolyGaussianCF sb_cf(const TMSVParams& p, double delta) {
  const double c = std::cos(delta);
  const double s = std::sin(delta);
  // In primed variables: slots 0,1 = xi_A', xi_A'*; 2,3 = xi_B', xi_B'*.
  auto mono = [](std::initializer_list<int> slots, cplx coeff) {
    Term t;
    for (int k : slots) t.exps[k] += 1;
    t.coeff = coeff;
    return t;
  };
  std::vector<Term> terms{
      mono({}, c * c + s * s),
      mono({0, 2}, c * s),
      mono({1, 3}, c * s),
      mono({0, 1}, -s * s),
      mono({2, 3}, -s * s),
      mono({0, 1, 2, 3}, s * s),
  };
  const PolyGaussianCF vac = PolyGaussianCF::vacuum(2);
  const PolyGaussianCF primed(2, vac.exponent(), Polynomial::from_terms(4, std::move(terms)));
  return bogoliubov(primed, p);
}

PolyGaussianCF fock_matrix_cf(int m, int n) {
  if (m < 0 || n < 0) throw AlgebraError("fock_matrix_cf: negative photon number");
  // e^{-|xi|^2/2} sum_k sqrt(m! n!) / (k! (m-k)! (n-k)!) xi^{m-k} (-xi*)^{n-k}
  std::vector<Term> terms;
  for (int k = 0; k <= std::min(m, n); ++k) {
    Term t;
    t.exps[0] = static_cast<std::uint8_t>(m - k);
    t.exps[1] = static_cast<std::uint8_t>(n - k);
    const double sign = ((n - k) % 2 == 0) ? 1.0 : -1.0;
    t.coeff = sign * std::sqrt(factorial(m) * factorial(n)) / (factorial(k) * factorial(m - k) * factorial(n - k));
    terms.push_back(t);
  }
  return PolyGaussianCF(1, PolyGaussianCF::vacuum(1).exponent(), Polynomial::from_terms(2, std::move(terms)));
}

PolyGaussianCF attenuate_mode_b(const PolyGaussianCF& cf, double amplitude, KernelSign sign) {
  if (cf.n_modes() != 2) throw AlgebraError("attenuate_mode_b: expects a two-mode CF");
  if (amplitude == 1.0)
    return sign == KernelSign::Physical ? cf : substitute(cf, LinearMap::scale_mode(2, kModeB, -1.0));
  if (!(amplitude > 0.0 && amplitude < 1.0)) throw AlgebraError("attenuate_mode_b: amplitude must lie in (0, 1]");
  const double t = amplitude;
  const double t2 = t * t;
  // kernel over (A, xi_B, xi): mode 2 is the integration variable
  QuadForm k = QuadForm::zero(6);
  const double diag = (1.0 + t2) / (2.0 * (t2 - 1.0));
  const double cross = (sign == KernelSign::Physical ? -t : t) / (t2 - 1.0);
  k.quadratic(2, 3) = k.quadratic(3, 2) = diag;
  k.quadratic(4, 5) = k.quadratic(5, 4) = diag;
  k.quadratic(2, 5) = k.quadratic(5, 2) = cross;
  k.quadratic(3, 4) = k.quadratic(4, 3) = cross;
  const std::array<int, 2> pos{0, 2};
  const PolyGaussianCF integrand = multiply(embed(cf, 3, pos), PolyGaussianCF::gaussian(k));
  return integrate_mode(integrand, 2).scaled(1.0 / (1.0 - t2));
}

PolyGaussianCF unnormalized_resource_cf(const ResourceSpec& spec, const ChannelParams& ch) {
  spec.validate();
  ch.validate();
  const double kappa = spec.kappa;
  switch (spec.family) {
    case Family::TMSV: return apply_channel(tmsv_cf(spec.tmsv), ch, kModeB);
    case Family::SB: return apply_channel(sb_cf(spec.tmsv, spec.delta), ch, kModeB);
    case Family::QS: {
      const PolyGaussianCF qs = quantum_scissors(tmsv_cf(spec.tmsv), qs_gain(kappa, spec.qs_gain));
      return apply_channel(qs, ch, kModeB);
    }
    default: break;
  }
  const PolyGaussianCF noisy = apply_channel(tmsv_cf(spec.tmsv), ch, kModeB);
  switch (spec.family) {
    case Family::PS:
      return subtract_core(attenuate_mode_b(noisy, std::sqrt(kappa), spec.kernel)).scaled((kappa - 1.0) / kappa);
    case Family::PA:
      return add_core(attenuate_mode_b(noisy, std::sqrt(kappa), spec.kernel)).scaled(kappa - 1.0);
    case Family::PC:
      return photon_catalysis(attenuate_mode_b(noisy, std::sqrt(kappa), spec.kernel), kappa);
    case Family::PSPA: {
      const double q = (kappa - 1.0) / kappa;
      return add_core(subtract_core(attenuate_mode_b(noisy, kappa, spec.kernel))).scaled(q * q);
    }
    case Family::PAPS:
      return subtract_core(add_core(attenuate_mode_b(noisy, kappa, spec.kernel))).scaled((kappa - 1.0) * (kappa - 1.0));
    default: break;
  }
  throw std::logic_error("unnormalized_resource_cf: unhandled family");
}

ResourceState build_resource(const ResourceSpec& spec, const ChannelParams& ch) {
  const PolyGaussianCF raw = unnormalized_resource_cf(spec, ch);
  Normalized n = normalize(raw);
  if (!(n.norm > 0.0)) {
    std::ostringstream os;
    os << "build_resource: non-positive success norm " << n.norm << " for " << to_string(spec.family);
    throw VanishingNormError(os.str());
  }
  return ResourceState{std::move(n.cf), n.norm, spec, ch};
}

}  // namespace cvtele
