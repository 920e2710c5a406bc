#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cvtele/fock_oracle.hpp"

using namespace cvtele;
using namespace cvtele::oracle;

namespace {

void expect_physical(const FockOperator& op) {
  EXPECT_NEAR(op.trace().real(), 1.0, 1e-8);
  EXPECT_LT((op.matrix - op.matrix.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(op.matrix);
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);
}

}  // namespace

TEST(Oracle, TmsvPhotonDistribution) {
  ResourceSpec spec;
  spec.tmsv.r = 0.3;
  const FockOperator op = oracle_state(spec, ChannelParams{});
  expect_physical(op);
  const double lam2 = std::pow(std::tanh(0.3), 2);
  for (int n = 0; n < 8; ++n) {
    const double p = op.matrix(n * op.dim + n, n * op.dim + n).real();
    EXPECT_NEAR(p, (1 - lam2) * std::pow(lam2, n), 1e-12) << n;
  }
}

TEST(Oracle, SubtractionRaisesMeanPhotonNumber) {
  ResourceSpec tmsv;
  tmsv.tmsv.r = 0.4;
  ResourceSpec ps = tmsv;
  ps.family = Family::PS;
  ps.kappa = 0.9;
  auto mean = [](const FockOperator& op) {
    const Eigen::VectorXd p = photon_distribution(op, 1);
    double m = 0;
    for (int n = 0; n < p.size(); ++n) m += n * p(n);
    return m;
  };
  const FockOperator a = oracle_state(tmsv, ChannelParams{});
  const FockOperator b = oracle_state(ps, ChannelParams{});
  expect_physical(b);
  EXPECT_GT(mean(b), mean(a));
}

TEST(Oracle, BellLikeAtRightAngleIsTwoPhotons) {
  ResourceSpec spec;
  spec.family = Family::SB;
  spec.delta = std::numbers::pi / 2;
  const FockOperator op = oracle_state(spec, ChannelParams{}, 6);
  const int i11 = 1 * op.dim + 1;
  EXPECT_NEAR(op.matrix(i11, i11).real(), 1.0, 1e-14);
  EXPECT_NEAR(op.matrix.cwiseAbs().sum(), 1.0, 1e-14);
}

TEST(Oracle, VacuumAndCoherentCf) {
  const FockOperator vac = coherent_state(0.0, 10);
  EXPECT_NEAR(std::abs(oracle_cf(vac, 0.5) - std::exp(-0.125)), 0.0, 1e-14);
  const cplx alpha(0.5, 0.2);
  const FockOperator coh = coherent_state(alpha, 30);
  for (cplx xi : {cplx(0.1, 0), cplx(0.3, -0.7), cplx(-1.1, 0.4)}) {
    const cplx expect = std::exp(-0.5 * std::norm(xi) + xi * std::conj(alpha) - std::conj(xi) * alpha);
    EXPECT_LT(std::abs(oracle_cf(coh, xi) - expect), 1e-12);
  }
}

TEST(Oracle, SqueezedVacuumQuadratures) {
  // ħ = 2: Var(x) = e^{-2s} for phase 0
  const FockOperator sq = squeezed_vacuum(0.3, 0.0, 40);
  expect_physical(sq);
  const int d = sq.dim;
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  const Eigen::MatrixXcd x = a + a.adjoint();
  const Eigen::MatrixXcd p = cplx(0, -1) * (a - a.adjoint());
  EXPECT_NEAR((sq.matrix * x * x).trace().real(), std::exp(-0.6), 1e-9);
  EXPECT_NEAR((sq.matrix * p * p).trace().real(), std::exp(0.6), 1e-9);
}

TEST(Oracle, DisplacementIsUnitaryOnLowBlock) {
  const Eigen::MatrixXcd d = displacement(cplx(0.3, 0.2), 60);
  const Eigen::MatrixXcd prod = d.adjoint() * d;
  EXPECT_LT((prod.topLeftCorner(20, 20) - Eigen::MatrixXcd::Identity(20, 20)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Oracle, DisplacementRecurrenceMatchesLaguerre) {
  for (cplx xi : {cplx(0.0, 0.0), cplx(0.3, 0.2), cplx(-2.5, 1.1), cplx(4.0, -5.5)}) {
    const Eigen::MatrixXcd diff = displacement(xi, 35) - displacement_laguerre(xi, 35);
    EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-12) << xi;
  }
}

TEST(Oracle, LossAndNoiseMatchGaussianChannel) {
  // thermal output of a lossy noisy channel on vacuum: n̄ = eps / 4 per quadrature pair
  ResourceSpec spec;
  spec.tmsv.r = 0.0;
  const FockOperator op = oracle_state(spec, ChannelParams{0.6, 0.05}, 12);
  expect_physical(op);
  const cplx xi(0.7, -0.3);
  EXPECT_NEAR(std::abs(oracle_cf(op, 0.0, xi) - std::exp(-0.5 * (1 + 0.05) * std::norm(xi))), 0.0, 1e-9);
}

TEST(Oracle, ScissorsCircuitGain) {
  for (double k : {0.1, 0.3, 0.5, 0.8}) {
    EXPECT_NEAR(qs_circuit_gain(k), std::sqrt((1 - k) / k), 1e-12) << k;
    EXPECT_NEAR(qs_circuit_kappa(qs_circuit_gain(k)), k, 1e-10);
  }
}

TEST(Oracle, TruncationChecked) {
  ResourceSpec spec;
  spec.tmsv.r = 1.0;
  EXPECT_THROW(oracle_state(spec, ChannelParams{}, 10), TruncationError);
}

TEST(Oracle, StableUnderLargerTruncation) {
  ResourceSpec spec;
  spec.family = Family::PAPS;
  spec.tmsv.r = 0.5;
  spec.kappa = 0.5;
  const ChannelParams ch{0.7, 0.05};
  const int n = default_n_max(spec);
  const FockOperator a = oracle_state(spec, ch, n);
  const FockOperator b = oracle_state(spec, ch, n + 5);
  for (cplx xa : {cplx(0.2, 0.1), cplx(-0.5, 0.6)})
    for (cplx xb : {cplx(0.0, 0.3), cplx(0.8, -0.2)})
      EXPECT_LT(std::abs(oracle_cf(a, xa, xb) - oracle_cf(b, xa, xb)), 1e-7);
}

TEST(OracleFidelity, IdenticalCoherent) {
  const cplx alpha(0.4, -0.3);
  auto chi = [&](cplx xi) {
    return std::exp(-0.5 * std::norm(xi) + xi * std::conj(alpha) - std::conj(xi) * alpha);
  };
  const quad::Estimate e = oracle_fidelity(chi, chi);
  EXPECT_TRUE(e.converged);
  EXPECT_NEAR(e.value.real(), 1.0, 1e-7);
}

TEST(OracleFidelity, VacuumVersusThermal) {
  auto vac = [](cplx xi) { return std::exp(-0.5 * std::norm(xi)); };
  auto th = [](cplx xi) { return std::exp(-1.5 * std::norm(xi)); };
  EXPECT_NEAR(oracle_fidelity(vac, th).value.real(), 0.5, 1e-6);
}
