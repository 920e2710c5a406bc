#include "cvtele/fock_oracle.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace cvtele::oracle {

namespace {

constexpr double kTailLimit = 1e-9;
constexpr int kHeadroom = 4;
constexpr int kNoiseNodes = 8;

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// Beam splitter exp(theta (b^dag c - b c^dag)) restricted to n total photons.
// Basis index k = photons in the second mode; entry (k_out, k_in).
Eigen::MatrixXd beam_splitter_block(double theta, int n) {
  Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (int k = 0; k <= n; ++k) {
    if (k >= 1) gen(k - 1, k) += theta * std::sqrt(static_cast<double>((n - k + 1) * k));
    if (k < n) gen(k + 1, k) -= theta * std::sqrt(static_cast<double>((n - k) * (k + 1)));
  }
  return gen.exp();
}

double theta_of(double kappa) { return std::acos(std::sqrt(kappa)); }

// Heralded single-mode operators (ancilla prepared, ancilla detected).
Eigen::MatrixXcd subtraction_op(double kappa, int dim) {
  Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) op(n - 1, n) = beam_splitter_block(theta_of(kappa), n)(1, 0);
  return op;
}

Eigen::MatrixXcd addition_op(double kappa, int dim) {
  Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(dim, dim);
  for (int n = 0; n + 1 < dim; ++n) op(n + 1, n) = beam_splitter_block(theta_of(kappa), n + 1)(0, 1);
  return op;
}

Eigen::MatrixXcd catalysis_op(double kappa, int dim) {
  Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) op(n, n) = beam_splitter_block(theta_of(kappa), n + 1)(1, 1);
  return op;
}

// Scissors: |1>_C |0>_D through a kappa splitter, C meets the input on a 50:50
// splitter, one click is registered in the port selected by `pattern`, and D
// carries the output.
Eigen::MatrixXcd scissors_op(double kappa, int dim, int pattern) {
  const Eigen::MatrixXd prep = beam_splitter_block(theta_of(kappa), 1);  // (C, D), k = photons in D
  const Eigen::MatrixXd mix = beam_splitter_block(std::numbers::pi / 4.0, 1);  // (B, C), k = photons in C
  Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(dim, dim);
  for (int k = 0; k <= 1 && k < dim; ++k) {
    // input |n = k>_B |1 - k>_C: exactly one photon reaches the detectors
    const double amp = prep(k, 0) * mix(pattern, 1 - k);
    op(k, k) = amp;
  }
  return op;
}

int scissors_pattern(double kappa) {
  for (int pattern = 0; pattern <= 1; ++pattern) {
    const Eigen::MatrixXcd op = scissors_op(kappa, 2, pattern);
    if ((op(1, 1) / op(0, 0)).real() > 0.0) return pattern;
  }
  return 0;
}

// rho -> (I (x) K) rho (I (x) K)^dagger on mode B.
Eigen::MatrixXcd apply_on_b(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& k, int dim) {
  Eigen::MatrixXcd out(rho.rows(), rho.cols());
  const Eigen::MatrixXcd kd = k.adjoint();
  for (int a = 0; a < dim; ++a)
    for (int ap = 0; ap < dim; ++ap)
      out.block(a * dim, ap * dim, dim, dim) = k * rho.block(a * dim, ap * dim, dim, dim) * kd;
  return out;
}

Eigen::MatrixXcd apply_loss(const Eigen::MatrixXcd& rho, double T, int dim) {
  if (T == 1.0) return rho;
  // kraus(k)(n) = <n - k| K_k |n>
  Eigen::MatrixXd kraus = Eigen::MatrixXd::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) {
    for (int n = k; n < dim; ++n) {
      const double log_binom = log_factorial(n) - log_factorial(k) - log_factorial(n - k);
      kraus(k, n) = std::exp(0.5 * log_binom + 0.5 * (n - k) * std::log(T) +
                             (k == 0 ? 0.0 : 0.5 * k * std::log1p(-T)));
    }
  }
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
  for (int a = 0; a < dim; ++a) {
    for (int ap = 0; ap < dim; ++ap) {
      for (int b = 0; b < dim; ++b) {
        for (int bp = 0; bp < dim; ++bp) {
          cplx sum = 0.0;
          for (int k = 0; b + k < dim && bp + k < dim; ++k)
            sum += kraus(k, b + k) * kraus(k, bp + k) * rho(a * dim + b + k, ap * dim + bp + k);
          out(a * dim + b, ap * dim + bp) = sum;
        }
      }
    }
  }
  return out;
}

quad::Rule gauss_hermite(int n) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) jac(k, k - 1) = jac(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  quad::Rule rule;
  for (int k = 0; k < n; ++k) {
    rule.nodes.push_back(es.eigenvalues()(k));
    const double v = es.eigenvectors()(0, k);
    rule.weights.push_back(std::sqrt(std::numbers::pi) * v * v);
  }
  return rule;
}

// Average of D(beta) rho D(beta)^dagger with Re beta, Im beta ~ N(0, eps / 4).
// D(x + iy) = D(x) D(iy) up to a phase, so the two averages are done in turn.
Eigen::MatrixXcd apply_noise(const Eigen::MatrixXcd& rho, double eps, int dim) {
  if (eps == 0.0) return rho;
  const quad::Rule gh = gauss_hermite(kNoiseNodes);
  const double scale = std::sqrt(2.0 * eps / 4.0);
  Eigen::MatrixXcd cur = rho;
  for (cplx dir : {cplx(0.0, 1.0), cplx(1.0, 0.0)}) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
    for (int i = 0; i < kNoiseNodes; ++i)
      out += (gh.weights[i] / std::sqrt(std::numbers::pi)) *
             apply_on_b(cur, displacement(scale * gh.nodes[i] * dir, dim), dim);
    cur = std::move(out);
  }
  return cur;
}

Eigen::MatrixXcd apply_channel_b(const Eigen::MatrixXcd& rho, const ChannelParams& ch, int dim) {
  return apply_noise(apply_loss(rho, ch.T, dim), ch.eps, dim);
}

// exp(r (e^{-i phi} a b - e^{i phi} a^dag b^dag)) on span{|n, n>}.
Eigen::MatrixXcd two_mode_squeezer(const TMSVParams& p, int n) {
  Eigen::MatrixXcd gen = Eigen::MatrixXcd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    if (k >= 1) gen(k - 1, k) = p.r * std::polar(1.0, -p.phi) * static_cast<double>(k);
    if (k + 1 < n) gen(k + 1, k) = -p.r * std::polar(1.0, p.phi) * static_cast<double>(k + 1);
  }
  return gen.exp();
}

Eigen::VectorXcd squeezed_pair(const TMSVParams& p, double c00, double c11, int dim) {
  const int internal = dim + 16;
  Eigen::VectorXcd seed = Eigen::VectorXcd::Zero(internal);
  seed(0) = c00;
  seed(1) = c11;
  const Eigen::VectorXcd diag = two_mode_squeezer(p, internal) * seed;
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim * dim);
  for (int n = 0; n < dim; ++n) psi(n * dim + n) = diag(n);
  return psi;
}

double tmsv_tail(double r, int from) {
  const double lam2 = std::pow(std::tanh(r), 2);
  return std::pow(lam2, from);
}

FockOperator finish(Eigen::MatrixXcd rho, int n_modes, int dim) {
  FockOperator op;
  op.n_modes = n_modes;
  op.dim = dim;
  const double tr = rho.trace().real();
  op.success_probability = tr;
  op.matrix = std::move(rho) / tr;
  return op;
}

}  // namespace

Eigen::MatrixXcd displacement(cplx xi, int dim) {
  // Along each diagonal m - n = +-alpha the entries are
  // e^{-x/2} |xi|^alpha / sqrt(alpha!) l_k phase^alpha, k = min(m, n), with
  // l_k = sqrt(k! alpha! / (k + alpha)!) L_k^alpha(x) by the normalized
  // three-term recurrence.
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(dim, dim);
  const double x = std::norm(xi);
  const double mod = std::abs(xi);
  const cplx up = mod > 0.0 ? xi / mod : cplx(1.0);
  const cplx down = -std::conj(up);
  for (int alpha = 0; alpha < dim; ++alpha) {
    if (mod == 0.0 && alpha > 0) break;
    const double base =
        std::exp(-0.5 * x + (alpha > 0 ? alpha * std::log(mod) : 0.0) - 0.5 * log_factorial(alpha));
    const cplx pu = base * std::pow(up, alpha), pd = base * std::pow(down, alpha);
    double prev = 0.0, cur = 1.0;
    for (int k = 0; k + alpha < dim; ++k) {
      d(k + alpha, k) = pu * cur;
      if (alpha > 0) d(k, k + alpha) = pd * cur;
      const double next = ((2 * k + 1 + alpha - x) * cur - std::sqrt(static_cast<double>(k) * (k + alpha)) * prev) /
                          std::sqrt(static_cast<double>(k + 1) * (k + 1 + alpha));
      prev = cur;
      cur = next;
    }
  }
  return d;
}

Eigen::MatrixXcd displacement_laguerre(cplx xi, int dim) {
  Eigen::MatrixXcd d(dim, dim);
  const double x = std::norm(xi);
  const double gauss = std::exp(-0.5 * x);
  for (int m = 0; m < dim; ++m) {
    for (int n = 0; n < dim; ++n) {
      const int lo = std::min(m, n);
      const int diff = std::abs(m - n);
      const double pref = std::exp(0.5 * (log_factorial(lo) - log_factorial(lo + diff)));
      const double lag = std::assoc_laguerre(static_cast<unsigned>(lo), static_cast<unsigned>(diff), x);
      const cplx power = (m >= n) ? std::pow(xi, diff) : std::pow(-std::conj(xi), diff);
      d(m, n) = pref * gauss * lag * power;
    }
  }
  return d;
}

int default_n_max(const ResourceSpec& spec) {
  int n = 0;
  while (tmsv_tail(spec.tmsv.r, n + 1) >= 1e-12 && n < 200) ++n;
  return n + kHeadroom;
}

FockOperator oracle_state(const ResourceSpec& spec, const ChannelParams& ch) {
  return oracle_state(spec, ch, default_n_max(spec));
}

FockOperator oracle_state(const ResourceSpec& spec, const ChannelParams& ch, int n_max) {
  spec.validate();
  ch.validate();
  const double tail = tmsv_tail(spec.tmsv.r, std::max(n_max - kHeadroom + 1, 0));
  if (tail >= kTailLimit) {
    std::ostringstream os;
    os << "oracle_state: n_max " << n_max << " leaves tail population " << tail;
    throw TruncationError(os.str());
  }
  const int dim = n_max + 1;
  Eigen::VectorXcd psi;
  if (spec.family == Family::SB) {
    psi = squeezed_pair(spec.tmsv, std::cos(spec.delta), std::sin(spec.delta), dim);
  } else {
    psi = squeezed_pair(spec.tmsv, 1.0, 0.0, dim);
  }
  Eigen::MatrixXcd rho = psi * psi.adjoint();

  const double kappa = spec.kappa;
  switch (spec.family) {
    case Family::TMSV:
    case Family::SB: return finish(apply_channel_b(rho, ch, dim), 2, dim);
    case Family::QS: {
      const double kc = qs_circuit_kappa(qs_gain(kappa, spec.qs_gain));
      const Eigen::MatrixXcd op = scissors_op(kc, dim, scissors_pattern(kc));
      rho = apply_on_b(rho, op, dim);
      const double p = rho.trace().real();
      FockOperator out = finish(apply_channel_b(rho, ch, dim), 2, dim);
      out.success_probability = p;
      return out;
    }
    default: break;
  }
  rho = apply_channel_b(rho, ch, dim);
  Eigen::MatrixXcd op;
  switch (spec.family) {
    case Family::PS: op = subtraction_op(kappa, dim); break;
    case Family::PA: op = addition_op(kappa, dim); break;
    case Family::PC: op = catalysis_op(kappa, dim); break;
    case Family::PSPA: op = addition_op(kappa, dim) * subtraction_op(kappa, dim); break;
    case Family::PAPS: op = subtraction_op(kappa, dim) * addition_op(kappa, dim); break;
    default: throw std::logic_error("oracle_state: unhandled family");
  }
  return finish(apply_on_b(rho, op, dim), 2, dim);
}

FockOperator coherent_state(cplx alpha, int n_max) {
  const int dim = n_max + 1;
  Eigen::VectorXcd v(dim);
  for (int n = 0; n < dim; ++n)
    v(n) = std::exp(-0.5 * std::norm(alpha) - 0.5 * log_factorial(n)) * std::pow(alpha, n);
  return finish(v * v.adjoint(), 1, dim);
}

FockOperator squeezed_vacuum(double s, double phase, int n_max) {
  const int dim = n_max + 1;
  const int internal = dim + 24;
  Eigen::MatrixXcd gen = Eigen::MatrixXcd::Zero(internal, internal);
  const cplx zeta = std::polar(s, phase);
  for (int n = 0; n < internal; ++n) {
    if (n + 2 < internal) gen(n + 2, n) = -0.5 * zeta * std::sqrt(static_cast<double>((n + 1) * (n + 2)));
    if (n >= 2) gen(n - 2, n) = 0.5 * std::conj(zeta) * std::sqrt(static_cast<double>(n * (n - 1)));
  }
  const Eigen::VectorXcd full = gen.exp().col(0);
  const Eigen::VectorXcd v = full.head(dim);
  FockOperator op = finish(v * v.adjoint(), 1, dim);
  op.success_probability = 1.0;
  return op;
}

FockOperator thermal_state(double nbar, int n_max) {
  const int dim = n_max + 1;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) rho(n, n) = std::pow(nbar, n) / std::pow(1.0 + nbar, n + 1);
  return finish(rho, 1, dim);
}

cplx oracle_cf(const FockOperator& op, std::span<const cplx> xi) {
  if (static_cast<int>(xi.size()) != op.n_modes) throw std::invalid_argument("oracle_cf: argument count");
  const int dim = op.dim;
  if (op.n_modes == 1) return op.matrix.cwiseProduct(displacement(xi[0], dim).transpose()).sum();
  if (op.n_modes != 2) throw std::invalid_argument("oracle_cf: only one- and two-mode operators");
  const Eigen::MatrixXcd da = displacement(xi[0], dim);
  const Eigen::MatrixXcd dbt = displacement(xi[1], dim).transpose();
  cplx sum = 0.0;
  for (int a = 0; a < dim; ++a)
    for (int ap = 0; ap < dim; ++ap)
      sum += da(ap, a) * op.matrix.block(a * dim, ap * dim, dim, dim).cwiseProduct(dbt).sum();
  return sum;
}

cplx oracle_cf(const FockOperator& op, cplx xi) {
  const cplx args[1] = {xi};
  return oracle_cf(op, args);
}

cplx oracle_cf(const FockOperator& op, cplx xi_a, cplx xi_b) {
  const cplx args[2] = {xi_a, xi_b};
  return oracle_cf(op, args);
}

double qs_circuit_gain(double kappa) {
  const Eigen::MatrixXcd op = scissors_op(kappa, 2, scissors_pattern(kappa));
  return (op(1, 1) / op(0, 0)).real();
}

double qs_circuit_kappa(double gain) {
  if (!(gain > 0.0)) throw std::invalid_argument("qs_circuit_kappa: gain must be positive");
  // the circuit gain decreases monotonically in kappa
  double lo = 1e-12, hi = 1.0 - 1e-12;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (qs_circuit_gain(mid) > gain) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

Eigen::VectorXd photon_distribution(const FockOperator& op, int mode) {
  const int dim = op.dim;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(dim);
  if (op.n_modes == 1) return op.matrix.diagonal().real();
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) p(mode == 0 ? a : b) += op.matrix(a * dim + b, a * dim + b).real();
  return p;
}

quad::Estimate oracle_fidelity(const CfCallable& chi_in, const CfCallable& chi_out, double radius, double tol) {
  return quad::disc_integral(
      [&](double x, double y) {
        const cplx xi(x, y);
        return chi_in(xi) * chi_out(-xi) / std::numbers::pi;
      },
      radius, tol);
}

quad::Estimate oracle_teleport_fidelity(const FockOperator& resource, const CfCallable& chi_in, double gain,
                                        double eta2, double radius, double tol) {
  if (resource.n_modes != 2) throw std::invalid_argument("oracle_teleport_fidelity: two-mode resource required");
  const int dim = resource.dim;
  // perm((b, b'), (a, a')) = rho(a b, a' b'), so chi = vec(D_B^T)^T perm vec(D_A^T)
  Eigen::MatrixXcd perm(dim * dim, dim * dim);
  for (int a = 0; a < dim; ++a)
    for (int ap = 0; ap < dim; ++ap)
      for (int b = 0; b < dim; ++b)
        for (int bp = 0; bp < dim; ++bp) perm(b + bp * dim, a + ap * dim) = resource.matrix(a * dim + b, ap * dim + bp);
  const double geta = gain * std::sqrt(eta2);
  const double penalty = gain * gain * (1.0 - eta2);
  auto chi_out = [&](cplx xi) {
    const Eigen::MatrixXcd da = displacement(xi, dim).transpose();
    const Eigen::MatrixXcd db = displacement(geta * std::conj(xi), dim).transpose();
    const Eigen::Map<const Eigen::VectorXcd> va(da.data(), dim * dim), vb(db.data(), dim * dim);
    const cplx chi_ab = vb.transpose() * (perm * va);
    return chi_in(geta * xi) * chi_ab * std::exp(-0.5 * penalty * std::norm(xi));
  };
  return oracle_fidelity(chi_in, chi_out, radius, tol);
}

}  // namespace cvtele::oracle
