#include "cvtele/gaussian_poly.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cvtele/quadrature.hpp"
#include "test_support.hpp"

using namespace cvtele;
using cvtele::testing::random_cplx;
using cvtele::testing::random_integrable_cf;

namespace {

PolyGaussianCF single_monomial(int n_modes, std::initializer_list<std::pair<int, int>> slot_pows,
                               QuadForm q) {
  Term t;
  for (auto [slot, pow] : slot_pows) t.exps[slot] = static_cast<std::uint8_t>(pow);
  t.coeff = 1.0;
  return PolyGaussianCF(n_modes, std::move(q), Polynomial::from_terms(2 * n_modes, {t}));
}

// int d^2 xi / pi over `mode` with every other argument pinned, by quadrature.
cplx numeric_mode_integral(const PolyGaussianCF& cf, int mode, std::vector<cplx> slots,
                           double radius, double tol) {
  auto f = [&](double x, double y) {
    std::vector<cplx> v = slots;
    v[2 * mode] = cplx(x, y);
    v[2 * mode + 1] = cplx(x, -y);
    return cf.evaluate_slots(v) / M_PI;
  };
  const auto est = quad::disc_integral(f, radius, tol, 32, 768);
  EXPECT_TRUE(est.converged);
  return est.value;
}

}  // namespace

TEST(Evaluate, VacuumAtOriginAndUnit) {
  const auto vac = PolyGaussianCF::vacuum(1);
  const std::vector<cplx> zero{0.0};
  const std::vector<cplx> one{1.0};
  EXPECT_NEAR(std::abs(vac.evaluate(zero) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(vac.evaluate(one) - std::exp(-0.5)), 0.0, 1e-15);
}

TEST(Evaluate, DimensionMismatchThrows) {
  const auto vac = PolyGaussianCF::vacuum(2);
  const std::vector<cplx> one{1.0};
  EXPECT_THROW(vac.evaluate(one), AlgebraError);
}

TEST(Multiply, VacuumSquared) {
  const auto vac = PolyGaussianCF::vacuum(1);
  const auto sq = multiply(vac, vac);
  EXPECT_NEAR(std::abs(sq.exponent().quadratic(0, 1) + 1.0), 0.0, 1e-15);
  EXPECT_EQ(sq.poly().terms().size(), 1u);
}

TEST(Multiply, MonomialProduct) {
  const auto a = single_monomial(1, {{0, 1}}, QuadForm::zero(2));
  const auto b = single_monomial(1, {{1, 1}}, QuadForm::zero(2));
  const auto ab = multiply(a, b);
  ASSERT_EQ(ab.poly().terms().size(), 1u);
  EXPECT_EQ(ab.poly().terms()[0].exps[0], 1);
  EXPECT_EQ(ab.poly().terms()[0].exps[1], 1);
}

TEST(Multiply, PointwiseOnRandomInstances) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_integrable_cf(2, rng, 3, 5);
    const auto b = random_integrable_cf(2, rng, 3, 5);
    const auto ab = multiply(a, b);
    for (int k = 0; k < 10; ++k) {
      std::vector<cplx> args{random_cplx(rng, 0.8), random_cplx(rng, 0.8)};
      const cplx expect = a.evaluate(args) * b.evaluate(args);
      EXPECT_NEAR(std::abs(ab.evaluate(args) - expect), 0.0, 1e-12 * (1.0 + std::abs(expect)));
    }
  }
}

TEST(Substitute, ScalingVacuum) {
  const double T = 0.37;
  const auto out = substitute(PolyGaussianCF::vacuum(1), LinearMap::scale_mode(1, 0, std::sqrt(T)));
  const std::vector<cplx> arg{cplx(0.4, -0.7)};
  EXPECT_NEAR(std::abs(out.evaluate(arg) - std::exp(-T * std::norm(arg[0]) / 2)), 0.0, 1e-15);
}

TEST(Substitute, BogoliubovAtZeroSqueezingIsIdentity) {
  const auto vac = PolyGaussianCF::vacuum(2);
  Eigen::MatrixXcd holo = Eigen::MatrixXcd::Identity(2, 2);
  Eigen::MatrixXcd anti = Eigen::MatrixXcd::Zero(2, 2);
  anti(0, 1) = anti(1, 0) = std::polar(std::sinh(0.0), M_PI);
  const auto out = substitute(vac, LinearMap::from_modes(holo, anti));
  EXPECT_LT((out.exponent().quadratic - vac.exponent().quadratic).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Substitute, BogoliubovMatchesDirectFormula) {
  const double r = 0.5;
  const double phi = M_PI;
  Eigen::MatrixXcd holo = Eigen::MatrixXcd::Identity(2, 2) * std::cosh(r);
  Eigen::MatrixXcd anti = Eigen::MatrixXcd::Zero(2, 2);
  anti(0, 1) = anti(1, 0) = std::polar(std::sinh(r), phi);
  const auto tmsv = substitute(PolyGaussianCF::vacuum(2), LinearMap::from_modes(holo, anti));
  std::mt19937_64 rng(3);
  for (int k = 0; k < 10; ++k) {
    const cplx xa = random_cplx(rng, 1.0);
    const cplx xb = random_cplx(rng, 1.0);
    const cplx pa = std::cosh(r) * xa + std::polar(1.0, phi) * std::sinh(r) * std::conj(xb);
    const cplx pb = std::cosh(r) * xb + std::polar(1.0, phi) * std::sinh(r) * std::conj(xa);
    const double direct = std::exp(-0.5 * (std::norm(pa) + std::norm(pb)));
    const std::vector<cplx> args{xa, xb};
    EXPECT_NEAR(std::abs(tmsv.evaluate(args) - direct), 0.0, 1e-14);
  }
}

TEST(Substitute, RejectsInconsistentConjugation) {
  LinearMap m = LinearMap::identity(1);
  m.matrix(1, 1) = 2.0;
  EXPECT_THROW(substitute(PolyGaussianCF::vacuum(1), m), AlgebraError);
}

TEST(Substitute, CompositionIsAssociative) {
  std::mt19937_64 rng(5);
  auto random_map = [&](int n) {
    Eigen::MatrixXcd holo(n, n);
    Eigen::MatrixXcd anti(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        holo(i, j) = random_cplx(rng, 0.7);
        anti(i, j) = random_cplx(rng, 0.7);
      }
    return LinearMap::from_modes(holo, anti);
  };
  for (int trial = 0; trial < 10; ++trial) {
    const auto cf = random_integrable_cf(2, rng, 3, 4);
    const auto m1 = random_map(2);
    const auto m2 = random_map(2);
    const auto stepwise = substitute(substitute(cf, m1), m2);
    const auto composed = substitute(cf, m1.then(m2));
    for (int k = 0; k < 10; ++k) {
      std::vector<cplx> args{random_cplx(rng, 0.5), random_cplx(rng, 0.5)};
      const cplx a = stepwise.evaluate(args);
      EXPECT_NEAR(std::abs(a - composed.evaluate(args)), 0.0, 1e-10 * (1.0 + std::abs(a)));
    }
  }
}

TEST(Differentiate, FirstDerivativeOfGaussian) {
  const auto g = PolyGaussianCF::modulus_weight(1, 0, -1.0);
  const auto d = differentiate(g, VarIndex{0, false});
  ASSERT_EQ(d.poly().terms().size(), 1u);
  EXPECT_EQ(d.poly().terms()[0].exps[1], 1);
  EXPECT_NEAR(std::abs(d.poly().terms()[0].coeff + 1.0), 0.0, 1e-15);
}

TEST(Differentiate, MixedSecondDerivativeOfGaussian) {
  const auto g = PolyGaussianCF::modulus_weight(1, 0, -1.0);
  const auto d = differentiate(differentiate(g, VarIndex{0, false}), VarIndex{0, true});
  // (xi xi* - 1) exp(-xi xi*)
  ASSERT_EQ(d.poly().terms().size(), 2u);
  EXPECT_NEAR(std::abs(d.poly().constant_term() + 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(d.poly().terms()[1].coeff - 1.0), 0.0, 1e-15);
}

TEST(Differentiate, MatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  const double h = 1e-4;
  for (int trial = 0; trial < 20; ++trial) {
    const auto cf = random_integrable_cf(2, rng, 3, 3);
    for (int slot = 0; slot < 4; ++slot) {
      const auto d = differentiate(cf, VarIndex{slot / 2, slot % 2 == 1});
      for (int k = 0; k < 5; ++k) {
        std::vector<cplx> v(4);
        for (auto& x : v) x = random_cplx(rng, 0.7);
        auto plus = v;
        auto minus = v;
        plus[slot] += h;
        minus[slot] -= h;
        const cplx fd = (cf.evaluate_slots(plus) - cf.evaluate_slots(minus)) / (2 * h);
        EXPECT_NEAR(std::abs(d.evaluate_slots(v) - fd), 0.0, 1e-6 * (1.0 + std::abs(fd)));
      }
    }
  }
}

TEST(IntegrateMode, UnitGaussian) {
  EXPECT_NEAR(std::abs(integrate_all(PolyGaussianCF::modulus_weight(1, 0, -1.0)) - 1.0), 0.0, 1e-15);
}

TEST(IntegrateMode, ScaledGaussian) {
  EXPECT_NEAR(std::abs(integrate_all(PolyGaussianCF::modulus_weight(1, 0, -2.0)) - 0.5), 0.0, 1e-15);
}

TEST(IntegrateMode, SecondMoment) {
  QuadForm q = QuadForm::zero(2);
  q.quadratic(0, 1) = q.quadratic(1, 0) = -1.0;
  const auto cf = single_monomial(1, {{0, 1}, {1, 1}}, q);
  EXPECT_NEAR(std::abs(integrate_all(cf) - 1.0), 0.0, 1e-14);
}

TEST(IntegrateMode, LinearSourcesAgainstQuadrature) {
  const double a = 1.5;
  const cplx u(0.3, 0.0);
  const cplx v(0.2, -0.1);
  QuadForm q = QuadForm::zero(2);
  q.quadratic(0, 1) = q.quadratic(1, 0) = -a;
  q.linear(0) = u;
  q.linear(1) = v;
  const auto cf = PolyGaussianCF::gaussian(q);
  const cplx closed = integrate_all(cf);
  EXPECT_NEAR(std::abs(closed - std::exp(u * v / a) / a), 0.0, 1e-14);
  const auto est = quad::disc_integral(
      [&](double x, double y) {
        const std::vector<cplx> s{cplx(x, y), cplx(x, -y)};
        return cf.evaluate_slots(s) / M_PI;
      },
      9.0, 1e-12);
  EXPECT_NEAR(std::abs(closed - est.value), 0.0, 1e-8);
}

TEST(IntegrateMode, RandomInstancesAgainstQuadrature) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 12; ++trial) {
    const int degree = 1 + trial % 4;
    const auto cf = random_integrable_cf(2, rng, degree, 6);
    const int mode = trial % 2;
    const auto reduced = integrate_mode(cf, mode);
    ASSERT_EQ(reduced.n_modes(), 1);
    for (int k = 0; k < 3; ++k) {
      const cplx other = random_cplx(rng, 0.6);
      std::vector<cplx> slots(4);
      const int keep = 1 - mode;
      slots[2 * keep] = other;
      slots[2 * keep + 1] = std::conj(other);
      const cplx numeric = numeric_mode_integral(cf, mode, slots, 11.0, 1e-11);
      const std::vector<cplx> arg{other};
      EXPECT_NEAR(std::abs(reduced.evaluate(arg) - numeric), 0.0, 1e-7 * (1.0 + std::abs(numeric)))
          << "trial " << trial;
    }
  }
}

TEST(IntegrateMode, DivergentIntegralReportsForm) {
  const auto cf = PolyGaussianCF::modulus_weight(1, 0, 0.5);
  try {
    integrate_all(cf);
    FAIL() << "expected NonIntegrableError";
  } catch (const NonIntegrableError& e) {
    EXPECT_LT(e.form()(0, 0), 0.0);
  }
}

TEST(Embed, VacuumIntoSecondSlot) {
  const std::vector<int> pos{1};
  const auto e = embed(PolyGaussianCF::vacuum(1), 2, pos);
  const std::vector<cplx> args{cplx(5.0, 2.0), 0.3};
  EXPECT_NEAR(std::abs(e.evaluate(args) - std::exp(-0.09 / 2)), 0.0, 1e-15);
}

TEST(Embed, IntegrateUntouchedModeRecovers) {
  std::mt19937_64 rng(29);
  const auto cf = random_integrable_cf(1, rng, 2, 4);
  const std::vector<int> pos{0};
  const auto e = multiply(embed(cf, 2, pos), PolyGaussianCF::modulus_weight(2, 1, -1.0));
  const auto back = integrate_mode(e, 1);
  for (int k = 0; k < 5; ++k) {
    const std::vector<cplx> a{random_cplx(rng, 1.0)};
    EXPECT_NEAR(std::abs(back.evaluate(a) - cf.evaluate(a)), 0.0, 1e-13);
  }
}

TEST(Embed, CollisionThrows) {
  const std::vector<int> pos{1, 1};
  EXPECT_THROW(embed(PolyGaussianCF::vacuum(2), 3, pos), AlgebraError);
}

TEST(Normalize, AlreadyNormalized) {
  const auto n = normalize(PolyGaussianCF::vacuum(2));
  EXPECT_NEAR(n.norm, 1.0, 1e-15);
}

TEST(Normalize, ScaledVacuum) {
  const auto n = normalize(PolyGaussianCF::vacuum(1).scaled(2.0));
  EXPECT_NEAR(n.norm, 2.0, 1e-15);
  EXPECT_NEAR(std::abs(n.cf.at_origin() - 1.0), 0.0, 1e-15);
}

TEST(Normalize, VanishingNormThrows) {
  const auto d = differentiate(PolyGaussianCF::vacuum(1), VarIndex{0, false});
  EXPECT_THROW(normalize(d), VanishingNormError);
}

// Random pipelines of multiply / substitute / differentiate / integrate
// compared against step-by-step scalar evaluation.
TEST(Closure, RandomPipelinesMatchScalarEvaluation) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    const auto a = random_integrable_cf(2, rng, 2, 3);
    const auto b = random_integrable_cf(2, rng, 2, 3);
    const cplx s = random_cplx(rng, 1.0);
    Eigen::MatrixXcd holo = Eigen::MatrixXcd::Identity(2, 2);
    Eigen::MatrixXcd anti = Eigen::MatrixXcd::Zero(2, 2);
    anti(0, 1) = 0.2 * s;
    const LinearMap map = LinearMap::from_modes(holo, anti);
    const auto ab = multiply(a, b);
    const auto sub = substitute(ab, map);
    const auto d = differentiate(sub, VarIndex{1, true});
    const double h = 1e-5;
    for (int k = 0; k < 10; ++k) {
      const cplx x0 = random_cplx(rng, 0.5);
      const cplx x1 = random_cplx(rng, 0.5);
      // scalar route: mapped arguments, product, then a finite difference in xi_1*
      auto scalar = [&](cplx conj_shift) {
        const cplx y0 = x0 + 0.2 * s * std::conj(x1) + 0.2 * s * conj_shift;
        std::vector<cplx> slots{y0, std::conj(x0) + std::conj(0.2 * s) * x1, x1, std::conj(x1) + conj_shift};
        return a.evaluate_slots(slots) * b.evaluate_slots(slots);
      };
      const std::vector<cplx> args{x0, x1};
      const cplx direct = scalar(0.0);
      EXPECT_NEAR(std::abs(sub.evaluate(args) - direct), 0.0, 1e-9 * (1.0 + std::abs(direct)));
      const cplx fd = (scalar(h) - scalar(-h)) / (2 * h);
      EXPECT_NEAR(std::abs(d.evaluate(args) - fd), 0.0, 1e-6 * (1.0 + std::abs(fd)));
    }
  }
}
