#include "cvtele/gaussian_poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cvtele {

namespace {

bool exps_less(const Exponents& a, const Exponents& b) { return a < b; }

void require(bool ok, const char* msg) {
  if (!ok) throw AlgebraError(msg);
}

}  // namespace

// ---------------------------------------------------------------- Polynomial

Polynomial Polynomial::constant(int n_slots, cplx c) {
  Polynomial p(n_slots);
  if (c != cplx{}) p.terms_.push_back(Term{Exponents{}, c});
  return p;
}

Polynomial Polynomial::linear(int n_slots, cplx c0, std::span<const cplx> coeffs) {
  std::vector<Term> terms;
  terms.reserve(coeffs.size() + 1);
  terms.push_back(Term{Exponents{}, c0});
  for (int k = 0; k < static_cast<int>(coeffs.size()); ++k) {
    Term t;
    t.exps[k] = 1;
    t.coeff = coeffs[k];
    terms.push_back(t);
  }
  return from_terms(n_slots, std::move(terms));
}

Polynomial Polynomial::from_terms(int n_slots, std::vector<Term> terms) {
  Polynomial p(n_slots);
  p.terms_ = std::move(terms);
  p.normalize_terms();
  return p;
}

void Polynomial::normalize_terms() {
  std::sort(terms_.begin(), terms_.end(),
            [](const Term& a, const Term& b) { return exps_less(a.exps, b.exps); });
  std::vector<Term> merged;
  merged.reserve(terms_.size());
  for (const Term& t : terms_) {
    if (!merged.empty() && merged.back().exps == t.exps) {
      merged.back().coeff += t.coeff;
    } else {
      merged.push_back(t);
    }
  }
  double biggest = 0.0;
  for (const Term& t : merged) biggest = std::max(biggest, std::abs(t.coeff));
  const double cut = biggest * kPruneRelative;
  std::erase_if(merged, [cut](const Term& t) {
    return t.coeff == cplx{} || std::abs(t.coeff) < cut;
  });
  terms_ = std::move(merged);
}

int Polynomial::total_degree() const {
  int deg = 0;
  for (const Term& t : terms_) {
    int d = 0;
    for (int k = 0; k < n_slots_; ++k) d += t.exps[k];
    deg = std::max(deg, d);
  }
  return deg;
}

int Polynomial::degree_in(int slot) const {
  int deg = 0;
  for (const Term& t : terms_) deg = std::max<int>(deg, t.exps[slot]);
  return deg;
}

cplx Polynomial::constant_term() const {
  if (!terms_.empty() && terms_.front().exps == Exponents{}) return terms_.front().coeff;
  return {};
}

cplx Polynomial::evaluate(std::span<const cplx> slots) const {
  require(static_cast<int>(slots.size()) == n_slots_, "polynomial evaluate: slot count mismatch");
  if (terms_.empty()) return {};
  int max_deg = 0;
  for (const Term& t : terms_)
    for (int k = 0; k < n_slots_; ++k) max_deg = std::max<int>(max_deg, t.exps[k]);
  // powers[k][e] = v_k^e
  std::vector<cplx> powers(static_cast<std::size_t>(n_slots_) * (max_deg + 1));
  for (int k = 0; k < n_slots_; ++k) {
    cplx acc{1.0, 0.0};
    for (int e = 0; e <= max_deg; ++e) {
      powers[static_cast<std::size_t>(k) * (max_deg + 1) + e] = acc;
      acc *= slots[k];
    }
  }
  cplx sum{};
  for (const Term& t : terms_) {
    cplx m = t.coeff;
    for (int k = 0; k < n_slots_; ++k)
      if (t.exps[k] != 0) m *= powers[static_cast<std::size_t>(k) * (max_deg + 1) + t.exps[k]];
    sum += m;
  }
  return sum;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  require(n_slots_ == o.n_slots_, "polynomial add: slot count mismatch");
  std::vector<Term> terms = terms_;
  terms.insert(terms.end(), o.terms_.begin(), o.terms_.end());
  return from_terms(n_slots_, std::move(terms));
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  require(n_slots_ == o.n_slots_, "polynomial multiply: slot count mismatch");
  std::vector<Term> terms;
  terms.reserve(terms_.size() * o.terms_.size());
  for (const Term& a : terms_) {
    for (const Term& b : o.terms_) {
      Term t;
      for (int k = 0; k < n_slots_; ++k) {
        const int e = a.exps[k] + b.exps[k];
        require(e < 256, "polynomial multiply: exponent overflow");
        t.exps[k] = static_cast<std::uint8_t>(e);
      }
      t.coeff = a.coeff * b.coeff;
      terms.push_back(t);
    }
  }
  return from_terms(n_slots_, std::move(terms));
}

Polynomial Polynomial::scaled(cplx s) const {
  std::vector<Term> terms = terms_;
  for (Term& t : terms) t.coeff *= s;
  return from_terms(n_slots_, std::move(terms));
}

Polynomial Polynomial::derivative(int slot) const {
  std::vector<Term> terms;
  terms.reserve(terms_.size());
  for (const Term& t : terms_) {
    if (t.exps[slot] == 0) continue;
    Term d = t;
    d.coeff *= static_cast<double>(t.exps[slot]);
    d.exps[slot] -= 1;
    terms.push_back(d);
  }
  return from_terms(n_slots_, std::move(terms));
}

Polynomial Polynomial::relabeled(int new_n_slots, std::span<const int> map) const {
  require(static_cast<int>(map.size()) == n_slots_, "polynomial relabel: map size mismatch");
  std::vector<Term> terms;
  terms.reserve(terms_.size());
  for (const Term& t : terms_) {
    Term r;
    r.coeff = t.coeff;
    for (int k = 0; k < n_slots_; ++k) {
      if (map[k] < 0) {
        require(t.exps[k] == 0, "polynomial relabel: dropping a live variable");
      } else {
        r.exps[map[k]] = t.exps[k];
      }
    }
    terms.push_back(r);
  }
  return from_terms(new_n_slots, std::move(terms));
}

// ------------------------------------------------------------------ QuadForm

QuadForm QuadForm::zero(int n_slots) {
  QuadForm q;
  q.linear = Eigen::VectorXcd::Zero(n_slots);
  q.quadratic = Eigen::MatrixXcd::Zero(n_slots, n_slots);
  return q;
}

cplx QuadForm::evaluate(std::span<const cplx> slots) const {
  require(static_cast<int>(slots.size()) == n_slots(), "quadform evaluate: slot count mismatch");
  Eigen::Map<const Eigen::VectorXcd> v(slots.data(), n_slots());
  return constant + (linear.transpose() * v)(0) + 0.5 * (v.transpose() * quadratic * v)(0);
}

Polynomial QuadForm::gradient(int slot) const {
  std::vector<cplx> coeffs(n_slots());
  for (int j = 0; j < n_slots(); ++j) coeffs[j] = quadratic(slot, j);
  return Polynomial::linear(n_slots(), linear(slot), coeffs);
}

void QuadForm::symmetrize() { quadratic = (0.5 * (quadratic + quadratic.transpose())).eval(); }

QuadForm QuadForm::operator+(const QuadForm& o) const {
  require(n_slots() == o.n_slots(), "quadform add: slot count mismatch");
  QuadForm q;
  q.constant = constant + o.constant;
  q.linear = linear + o.linear;
  q.quadratic = quadratic + o.quadratic;
  return q;
}

// ----------------------------------------------------------------- LinearMap

LinearMap LinearMap::from_modes(const Eigen::MatrixXcd& holo, const Eigen::MatrixXcd& anti) {
  require(holo.rows() == anti.rows() && holo.cols() == anti.cols(),
          "linear map: holomorphic/antiholomorphic shape mismatch");
  LinearMap m;
  m.n_old_modes = static_cast<int>(holo.rows());
  m.n_new_modes = static_cast<int>(holo.cols());
  m.matrix = Eigen::MatrixXcd::Zero(2 * m.n_old_modes, 2 * m.n_new_modes);
  for (int i = 0; i < m.n_old_modes; ++i) {
    for (int j = 0; j < m.n_new_modes; ++j) {
      m.matrix(2 * i, 2 * j) = holo(i, j);
      m.matrix(2 * i, 2 * j + 1) = anti(i, j);
      m.matrix(2 * i + 1, 2 * j + 1) = std::conj(holo(i, j));
      m.matrix(2 * i + 1, 2 * j) = std::conj(anti(i, j));
    }
  }
  return m;
}

LinearMap LinearMap::identity(int n_modes) {
  LinearMap m;
  m.n_old_modes = m.n_new_modes = n_modes;
  m.matrix = Eigen::MatrixXcd::Identity(2 * n_modes, 2 * n_modes);
  return m;
}

LinearMap LinearMap::scale_mode(int n_modes, int mode, cplx factor) {
  LinearMap m = identity(n_modes);
  m.matrix(2 * mode, 2 * mode) = factor;
  m.matrix(2 * mode + 1, 2 * mode + 1) = std::conj(factor);
  return m;
}

bool LinearMap::conjugation_consistent(double tol) const {
  if (matrix.rows() != 2 * n_old_modes || matrix.cols() != 2 * n_new_modes) return false;
  const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
  for (int i = 0; i < n_old_modes; ++i) {
    for (int j = 0; j < n_new_modes; ++j) {
      if (std::abs(matrix(2 * i + 1, 2 * j + 1) - std::conj(matrix(2 * i, 2 * j))) > tol * scale)
        return false;
      if (std::abs(matrix(2 * i + 1, 2 * j) - std::conj(matrix(2 * i, 2 * j + 1))) > tol * scale)
        return false;
    }
  }
  return true;
}

LinearMap LinearMap::then(const LinearMap& inner) const {
  require(n_new_modes == inner.n_old_modes, "linear map compose: mode count mismatch");
  LinearMap m;
  m.n_old_modes = n_old_modes;
  m.n_new_modes = inner.n_new_modes;
  m.matrix = matrix * inner.matrix;
  return m;
}

// ------------------------------------------------------------ PolyGaussianCF

PolyGaussianCF::PolyGaussianCF(int n_modes, QuadForm exponent, Polynomial poly)
    : n_modes_(n_modes), exponent_(std::move(exponent)), poly_(std::move(poly)) {
  require(n_modes >= 0 && n_modes <= kMaxModes, "cf: unsupported mode count");
  require(exponent_.n_slots() == 2 * n_modes && exponent_.quadratic.rows() == 2 * n_modes &&
              exponent_.quadratic.cols() == 2 * n_modes,
          "cf: exponent dimension mismatch");
  require(poly_.n_slots() == 2 * n_modes, "cf: polynomial dimension mismatch");
  exponent_.symmetrize();
}

PolyGaussianCF PolyGaussianCF::gaussian(QuadForm exponent) {
  const int n_slots = exponent.n_slots();
  return PolyGaussianCF(n_slots / 2, std::move(exponent), Polynomial::constant(n_slots, 1.0));
}

PolyGaussianCF PolyGaussianCF::modulus_weight(int n_modes, int mode, cplx c) {
  QuadForm q = QuadForm::zero(2 * n_modes);
  q.quadratic(2 * mode, 2 * mode + 1) = c;
  q.quadratic(2 * mode + 1, 2 * mode) = c;
  return gaussian(std::move(q));
}

PolyGaussianCF PolyGaussianCF::vacuum(int n_modes) {
  QuadForm q = QuadForm::zero(2 * n_modes);
  for (int m = 0; m < n_modes; ++m) {
    q.quadratic(2 * m, 2 * m + 1) = -0.5;
    q.quadratic(2 * m + 1, 2 * m) = -0.5;
  }
  return gaussian(std::move(q));
}

cplx PolyGaussianCF::evaluate_slots(std::span<const cplx> slots) const {
  require(static_cast<int>(slots.size()) == n_slots(), "cf evaluate: slot count mismatch");
  if (poly_.empty()) return {};
  return poly_.evaluate(slots) * std::exp(exponent_.evaluate(slots));
}

cplx PolyGaussianCF::evaluate(std::span<const cplx> args) const {
  if (static_cast<int>(args.size()) != n_modes_) {
    std::ostringstream os;
    os << "cf evaluate: expected " << n_modes_ << " arguments, got " << args.size();
    throw AlgebraError(os.str());
  }
  std::array<cplx, kMaxSlots> slots{};
  for (int i = 0; i < n_modes_; ++i) {
    slots[2 * i] = args[i];
    slots[2 * i + 1] = std::conj(args[i]);
  }
  return evaluate_slots(std::span<const cplx>(slots.data(), n_slots()));
}

cplx PolyGaussianCF::at_origin() const {
  return poly_.constant_term() * std::exp(exponent_.constant);
}

PolyGaussianCF PolyGaussianCF::scaled(cplx s) const {
  return PolyGaussianCF(n_modes_, exponent_, poly_.scaled(s));
}

// ---------------------------------------------------------------- operations

cplx evaluate(const PolyGaussianCF& cf, std::span<const cplx> args) { return cf.evaluate(args); }

PolyGaussianCF multiply(const PolyGaussianCF& a, const PolyGaussianCF& b) {
  if (a.n_modes() != b.n_modes()) throw AlgebraError("multiply: mode count mismatch");
  return PolyGaussianCF(a.n_modes(), a.exponent() + b.exponent(), a.poly() * b.poly());
}

PolyGaussianCF add(const PolyGaussianCF& a, const PolyGaussianCF& b) {
  if (a.n_modes() != b.n_modes()) throw AlgebraError("add: mode count mismatch");
  const QuadForm& qa = a.exponent();
  const QuadForm& qb = b.exponent();
  const double scale = 1.0 + std::max({std::abs(qa.constant), qa.linear.cwiseAbs().maxCoeff(),
                                       qa.quadratic.cwiseAbs().maxCoeff()});
  const double tol = 1e-11 * scale;
  if (std::abs(qa.constant - qb.constant) > tol || (qa.linear - qb.linear).cwiseAbs().maxCoeff() > tol ||
      (qa.quadratic - qb.quadratic).cwiseAbs().maxCoeff() > tol) {
    throw AlgebraError("add: exponents differ; sum leaves the poly-Gaussian class");
  }
  return PolyGaussianCF(a.n_modes(), qa, a.poly() + b.poly());
}

PolyGaussianCF substitute(const PolyGaussianCF& cf, const LinearMap& map) {
  if (map.n_old_modes != cf.n_modes()) throw AlgebraError("substitute: map/cf mode mismatch");
  if (!map.conjugation_consistent()) {
    throw AlgebraError("substitute: map is not conjugation-consistent");
  }
  const int new_slots = 2 * map.n_new_modes;
  const Eigen::MatrixXcd& A = map.matrix;
  const QuadForm& q = cf.exponent();
  QuadForm nq;
  nq.constant = q.constant;
  nq.linear = A.transpose() * q.linear;
  nq.quadratic = A.transpose() * q.quadratic * A;

  // powers of the linear form each old slot maps to
  const int old_slots = cf.n_slots();
  std::vector<std::vector<Polynomial>> powers(old_slots);
  for (int k = 0; k < old_slots; ++k) {
    const int deg = cf.poly().degree_in(k);
    std::vector<cplx> row(new_slots);
    for (int j = 0; j < new_slots; ++j) row[j] = A(k, j);
    const Polynomial ell = Polynomial::linear(new_slots, 0.0, row);
    powers[k].push_back(Polynomial::constant(new_slots, 1.0));
    for (int e = 1; e <= deg; ++e) powers[k].push_back(powers[k].back() * ell);
  }
  Polynomial out(new_slots);
  std::vector<Term> acc;
  for (const Term& t : cf.poly().terms()) {
    Polynomial m = Polynomial::constant(new_slots, t.coeff);
    for (int k = 0; k < old_slots; ++k)
      if (t.exps[k] != 0) m = m * powers[k][t.exps[k]];
    acc.insert(acc.end(), m.terms().begin(), m.terms().end());
  }
  return PolyGaussianCF(map.n_new_modes, std::move(nq), Polynomial::from_terms(new_slots, std::move(acc)));
}

PolyGaussianCF differentiate(const PolyGaussianCF& cf, VarIndex v) {
  if (v.mode < 0 || v.mode >= cf.n_modes()) throw AlgebraError("differentiate: mode out of range");
  const int slot = v.slot();
  Polynomial p = cf.poly().derivative(slot) + cf.poly() * cf.exponent().gradient(slot);
  return PolyGaussianCF(cf.n_modes(), cf.exponent(), std::move(p));
}

namespace {

// Removes the two slots of `mode` from an exponent whose rows/cols there are
// no longer referenced.
QuadForm drop_mode(const QuadForm& q, int mode) {
  const int n = q.n_slots();
  QuadForm r = QuadForm::zero(n - 2);
  r.constant = q.constant;
  auto src = [mode](int k) { return k < 2 * mode ? k : k + 2; };
  for (int i = 0; i < n - 2; ++i) {
    r.linear(i) = q.linear(src(i));
    for (int j = 0; j < n - 2; ++j) r.quadratic(i, j) = q.quadratic(src(i), src(j));
  }
  return r;
}

std::vector<int> drop_mode_map(int n_slots, int mode) {
  std::vector<int> map(n_slots);
  for (int k = 0; k < n_slots; ++k) {
    if (k == 2 * mode || k == 2 * mode + 1) {
      map[k] = -1;
    } else {
      map[k] = k < 2 * mode ? k : k - 2;
    }
  }
  return map;
}

}  // namespace

cplx gaussian_mode_integral(const Eigen::Matrix2cd& Sww) {
  // xi = x + i y: (xi, xi*) = U (x, y); the real-plane form is -1/2 z^T M z.
  Eigen::Matrix2cd U;
  U << cplx(1, 0), cplx(0, 1), cplx(1, 0), cplx(0, -1);
  const Eigen::Matrix2cd M = -(U.transpose() * Sww * U);
  const Eigen::Matrix2d reM = M.real();
  const double scale = std::max(1.0, reM.cwiseAbs().maxCoeff());
  if (!(reM(0, 0) > 0.0 && reM(1, 1) > 0.0 && reM.determinant() > 1e-13 * scale * scale)) {
    std::ostringstream os;
    os << "divergent Gaussian integral; real form [[" << reM(0, 0) << ", " << reM(0, 1) << "], [" << reM(1, 0)
       << ", " << reM(1, 1) << "]]";
    throw NonIntegrableError(os.str(), reM);
  }
  // sqrt(det M) continued from the real positive-definite case: product of
  // principal roots of the eigenvalues, all of which lie in Re > 0.
  const cplx half_tr = 0.5 * (M(0, 0) + M(1, 1));
  const cplx disc = std::sqrt(half_tr * half_tr - M.determinant());
  const cplx sqrt_det = std::sqrt(half_tr + disc) * std::sqrt(half_tr - disc);
  return 2.0 / sqrt_det;
}

PolyGaussianCF integrate_mode(const PolyGaussianCF& cf, int mode) {
  const int n = cf.n_modes();
  if (mode < 0 || mode >= n) throw AlgebraError("integrate_mode: mode out of range");
  const int ns = cf.n_slots();
  const int i1 = 2 * mode;
  const int i2 = 2 * mode + 1;
  const QuadForm& q = cf.exponent();

  Eigen::Matrix2cd Sww;
  Sww << q.quadratic(i1, i1), q.quadratic(i1, i2), q.quadratic(i2, i1), q.quadratic(i2, i2);

  cplx prefactor;
  try {
    prefactor = gaussian_mode_integral(Sww);
  } catch (const NonIntegrableError& e) {
    std::ostringstream os;
    os << "integrate_mode: mode " << mode << ": " << e.what();
    throw NonIntegrableError(os.str(), e.form());
  }

  const Eigen::Matrix2cd Sinv = Sww.inverse();
  const Eigen::Vector2cd Lw(q.linear(i1), q.linear(i2));

  // Source vector J = Lw + P v, where the mode's own slots carry the source.
  Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(2, ns);
  for (int k = 0; k < ns; ++k) {
    if (k == i1 || k == i2) continue;
    P(0, k) = q.quadratic(i1, k);
    P(1, k) = q.quadratic(i2, k);
  }
  P(0, i1) = 1.0;
  P(1, i2) = 1.0;

  QuadForm g = q;
  g.linear(i1) = g.linear(i2) = 0.0;
  g.quadratic.row(i1).setZero();
  g.quadratic.row(i2).setZero();
  g.quadratic.col(i1).setZero();
  g.quadratic.col(i2).setZero();
  g.constant -= 0.5 * (Lw.transpose() * Sinv * Lw)(0);
  g.linear -= P.transpose() * (Sinv * Lw);
  g.quadratic -= P.transpose() * Sinv * P;
  g.symmetrize();

  // d^p/dJ1^p d^q/dJ2^q of exp(g), evaluated at zero source.
  const int max_p = cf.poly().degree_in(i1);
  const int max_q = cf.poly().degree_in(i2);
  const Polynomial grad1 = g.gradient(i1);
  const Polynomial grad2 = g.gradient(i2);
  std::vector<std::vector<Polynomial>> table(max_p + 1, std::vector<Polynomial>(max_q + 1));
  std::vector<std::vector<bool>> needed(max_p + 1, std::vector<bool>(max_q + 1, false));
  for (const Term& t : cf.poly().terms()) needed[t.exps[i1]][t.exps[i2]] = true;
  std::vector<std::vector<Polynomial>> at_zero(max_p + 1, std::vector<Polynomial>(max_q + 1));
  Polynomial col = Polynomial::constant(ns, 1.0);
  for (int p = 0; p <= max_p; ++p) {
    if (p > 0) col = col.derivative(i1) + col * grad1;
    Polynomial cur = col;
    for (int qq = 0; qq <= max_q; ++qq) {
      if (qq > 0) cur = cur.derivative(i2) + cur * grad2;
      if (!needed[p][qq]) continue;
      std::vector<Term> keep;
      for (const Term& t : cur.terms())
        if (t.exps[i1] == 0 && t.exps[i2] == 0) keep.push_back(t);
      at_zero[p][qq] = Polynomial::from_terms(ns, std::move(keep));
    }
  }

  std::vector<Term> acc;
  for (const Term& t : cf.poly().terms()) {
    const Polynomial& d = at_zero[t.exps[i1]][t.exps[i2]];
    Exponents rest = t.exps;
    rest[i1] = rest[i2] = 0;
    for (const Term& u : d.terms()) {
      Term r;
      for (int k = 0; k < ns; ++k) r.exps[k] = static_cast<std::uint8_t>(rest[k] + u.exps[k]);
      r.coeff = prefactor * t.coeff * u.coeff;
      acc.push_back(r);
    }
  }
  Polynomial result = Polynomial::from_terms(ns, std::move(acc));
  const std::vector<int> map = drop_mode_map(ns, mode);
  return PolyGaussianCF(n - 1, drop_mode(g, mode), result.relabeled(ns - 2, map));
}

cplx integrate_all(const PolyGaussianCF& cf) {
  PolyGaussianCF cur = cf;
  while (cur.n_modes() > 0) cur = integrate_mode(cur, cur.n_modes() - 1);
  return cur.at_origin();
}

PolyGaussianCF embed(const PolyGaussianCF& cf, int n_total, std::span<const int> positions) {
  const int n = cf.n_modes();
  if (static_cast<int>(positions.size()) != n) throw AlgebraError("embed: positions size mismatch");
  if (n_total < n || n_total > kMaxModes) throw AlgebraError("embed: invalid target mode count");
  std::vector<bool> used(n_total, false);
  for (int p : positions) {
    if (p < 0 || p >= n_total) throw AlgebraError("embed: position out of range");
    if (used[p]) throw AlgebraError("embed: position collision");
    used[p] = true;
  }
  std::vector<int> map(2 * n);
  for (int i = 0; i < n; ++i) {
    map[2 * i] = 2 * positions[i];
    map[2 * i + 1] = 2 * positions[i] + 1;
  }
  QuadForm q = QuadForm::zero(2 * n_total);
  q.constant = cf.exponent().constant;
  for (int a = 0; a < 2 * n; ++a) {
    q.linear(map[a]) = cf.exponent().linear(a);
    for (int b = 0; b < 2 * n; ++b) q.quadratic(map[a], map[b]) = cf.exponent().quadratic(a, b);
  }
  return PolyGaussianCF(n_total, std::move(q), cf.poly().relabeled(2 * n_total, map));
}

PolyGaussianCF negate_args(const PolyGaussianCF& cf) {
  QuadForm q = cf.exponent();
  q.linear = -q.linear;
  std::vector<Term> terms = cf.poly().terms();
  for (Term& t : terms) {
    int deg = 0;
    for (int k = 0; k < cf.n_slots(); ++k) deg += t.exps[k];
    if (deg % 2 == 1) t.coeff = -t.coeff;
  }
  return PolyGaussianCF(cf.n_modes(), std::move(q), Polynomial::from_terms(cf.n_slots(), std::move(terms)));
}

cplx norm_at_origin(const PolyGaussianCF& cf) { return cf.at_origin(); }

Normalized normalize(const PolyGaussianCF& cf) {
  const cplx norm = cf.at_origin();
  if (!(std::abs(norm) > 1e-14)) {
    throw VanishingNormError("normalize: vanishing norm (the operation annihilates the state)");
  }
  if (std::abs(norm.imag()) > 1e-10 * std::abs(norm)) {
    std::ostringstream os;
    os << "normalize: norm has non-negligible imaginary part " << norm;
    throw AlgebraError(os.str());
  }
  return Normalized{cf.scaled(1.0 / norm), norm.real()};
}

}  // namespace cvtele
