#pragma once

// Characteristic functions of the closed form  P(xi, xi*) * exp(Q(xi, xi*)).
//
// Every mode i owns two formal variables ("slots"): slot 2i holds xi_i and
// slot 2i+1 holds xi_i*. The two are independent symbols for differentiation
// and integration; they are tied together only when a CF is evaluated at a
// physical argument or substituted through a conjugation-consistent map.

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cvtele {

using cplx = std::complex<double>;

inline constexpr int kMaxModes = 4;
inline constexpr int kMaxSlots = 2 * kMaxModes;

class AlgebraError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a Gaussian integral diverges. Carries the real 2x2 form
/// (Re of the x/y quadratic coefficient matrix) that failed the check.
class NonIntegrableError : public AlgebraError {
 public:
  NonIntegrableError(const std::string& what, Eigen::Matrix2d form)
      : AlgebraError(what), form_(form) {}
  const Eigen::Matrix2d& form() const { return form_; }

 private:
  Eigen::Matrix2d form_;
};

class VanishingNormError : public AlgebraError {
 public:
  using AlgebraError::AlgebraError;
};

struct VarIndex {
  int mode = 0;
  bool conjugated = false;
  int slot() const { return 2 * mode + (conjugated ? 1 : 0); }
};

using Exponents = std::array<std::uint8_t, kMaxSlots>;

struct Term {
  Exponents exps{};
  cplx coeff;
};

/// Sparse polynomial in 2n formal variables, terms kept sorted by exponent
/// vector. Coefficients that fall below kPruneRelative times the largest
/// coefficient are dropped after arithmetic.
class Polynomial {
 public:
  static constexpr double kPruneRelative = 1e-14;

  Polynomial() = default;
  explicit Polynomial(int n_slots) : n_slots_(n_slots) {}

  static Polynomial constant(int n_slots, cplx c);
  /// c0 + sum_k coeffs[k] * v_k
  static Polynomial linear(int n_slots, cplx c0, std::span<const cplx> coeffs);

  int n_slots() const { return n_slots_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  int total_degree() const;
  int degree_in(int slot) const;

  /// Coefficient of the constant monomial.
  cplx constant_term() const;

  cplx evaluate(std::span<const cplx> slots) const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial scaled(cplx s) const;
  Polynomial derivative(int slot) const;

  /// Re-label slots: new exps[map[k]] = old exps[k]; map[k] < 0 requires
  /// the old exponent to be zero.
  Polynomial relabeled(int new_n_slots, std::span<const int> map) const;

  /// Builds from unsorted terms, merging duplicates and pruning.
  static Polynomial from_terms(int n_slots, std::vector<Term> terms);

 private:
  void normalize_terms();

  int n_slots_ = 0;
  std::vector<Term> terms_;
};

/// Q(v) = constant + linear . v + 1/2 v^T quadratic v, quadratic symmetric.
struct QuadForm {
  cplx constant{0.0, 0.0};
  Eigen::VectorXcd linear;
  Eigen::MatrixXcd quadratic;

  static QuadForm zero(int n_slots);
  int n_slots() const { return static_cast<int>(linear.size()); }
  cplx evaluate(std::span<const cplx> slots) const;
  /// dQ/dv_slot as a degree-1 polynomial.
  Polynomial gradient(int slot) const;
  void symmetrize();
  QuadForm operator+(const QuadForm& o) const;
};

/// Linear change of variables: old slot k = sum_j matrix(k, j) * new slot j.
struct LinearMap {
  int n_old_modes = 0;
  int n_new_modes = 0;
  Eigen::MatrixXcd matrix;

  /// old xi_i = sum_j holo(i, j) xi_j + anti(i, j) xi_j*, with the xi_i* row
  /// filled in as the conjugate expression.
  static LinearMap from_modes(const Eigen::MatrixXcd& holo, const Eigen::MatrixXcd& anti);
  static LinearMap scale_mode(int n_modes, int mode, cplx factor);
  static LinearMap identity(int n_modes);

  bool conjugation_consistent(double tol = 1e-12) const;
  /// (this o inner): first apply `inner` to new variables then this.
  LinearMap then(const LinearMap& inner) const;
};

class PolyGaussianCF {
 public:
  PolyGaussianCF() = default;
  PolyGaussianCF(int n_modes, QuadForm exponent, Polynomial poly);

  /// exp(Q) with unit prefactor.
  static PolyGaussianCF gaussian(QuadForm exponent);
  /// Product of vacuum CFs exp(-|xi_i|^2/2) over all modes.
  static PolyGaussianCF vacuum(int n_modes);
  /// exp(c * xi_m xi_m*) on an n-mode space.
  static PolyGaussianCF modulus_weight(int n_modes, int mode, cplx c);

  int n_modes() const { return n_modes_; }
  int n_slots() const { return 2 * n_modes_; }
  const QuadForm& exponent() const { return exponent_; }
  const Polynomial& poly() const { return poly_; }
  bool is_zero() const { return poly_.empty(); }

  cplx evaluate(std::span<const cplx> args) const;
  cplx evaluate_slots(std::span<const cplx> slots) const;
  cplx at_origin() const;

  PolyGaussianCF scaled(cplx s) const;

 private:
  int n_modes_ = 0;
  QuadForm exponent_;
  Polynomial poly_;
};

cplx evaluate(const PolyGaussianCF& cf, std::span<const cplx> args);
PolyGaussianCF multiply(const PolyGaussianCF& a, const PolyGaussianCF& b);
/// Sum of two CFs sharing one exponent; throws if the exponents differ.
PolyGaussianCF add(const PolyGaussianCF& a, const PolyGaussianCF& b);
PolyGaussianCF substitute(const PolyGaussianCF& cf, const LinearMap& map);
PolyGaussianCF differentiate(const PolyGaussianCF& cf, VarIndex v);
/// int d^2 xi / pi  exp(1/2 v^T S v), v = (xi, xi*), for a symmetric 2x2 S.
cplx gaussian_mode_integral(const Eigen::Matrix2cd& S);
/// Closed-form  int d^2 xi_mode / pi  of cf, removing that mode.
PolyGaussianCF integrate_mode(const PolyGaussianCF& cf, int mode);
/// Integrates every mode; returns the scalar value.
cplx integrate_all(const PolyGaussianCF& cf);
/// positions[i] is the new index of old mode i.
PolyGaussianCF embed(const PolyGaussianCF& cf, int n_total, std::span<const int> positions);
/// cf(-xi_1, ..., -xi_n).
PolyGaussianCF negate_args(const PolyGaussianCF& cf);

cplx norm_at_origin(const PolyGaussianCF& cf);

struct Normalized {
  PolyGaussianCF cf;
  double norm = 0.0;
};
/// Scales so that cf(0) = 1. The imaginary part of cf(0) must be below
/// 1e-10 of its magnitude.
Normalized normalize(const PolyGaussianCF& cf);

}  // namespace cvtele
