#include "hfq/bargmann.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "hfq/errors.hpp"
#include "hfq/pointwise.hpp"

namespace hfq::bargmann {

namespace {

const cplx kI(0.0, 1.0);

double opnorm(const MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<MatrixXcd> svd(m);
  return svd.singularValues()(0);
}

ModeLinear combine(cplx s, const ModeLinear& u, cplx t, const ModeLinear& v) {
  ModeLinear r;
  r.b = s * u.b + t * v.b;
  r.c = s * u.c + t * v.c;
  return r;
}

// annihilation and creation on levels 0..n-1
std::pair<MatrixXcd, MatrixXcd> ladder(int n) {
  MatrixXcd a = MatrixXcd::Zero(n, n);
  for (int j = 1; j < n; ++j) a(j - 1, j) = std::sqrt(static_cast<double>(j));
  return {a, a.adjoint()};
}

MatrixXcd hermitian_exp(const MatrixXcd& h, double s) {
  const MatrixXcd sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(sym);
  const VectorXcd ph = (kI * s * es.eigenvalues().cast<cplx>()).array().exp().matrix();
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

// (1,0) coefficient of d<dz + mu dzbar, K v>
cplx field_coefficient(const Matrix2d& kf, cplx mu) {
  const cplx xz(0.5 * kf(0, 0), -0.5 * kf(0, 1)), xzb(0.5 * kf(0, 0), 0.5 * kf(0, 1));
  const cplx yz(0.5 * kf(1, 0), -0.5 * kf(1, 1)), yzb(0.5 * kf(1, 0), 0.5 * kf(1, 1));
  // h = X^z + mu X^zbar with X^z = X^x + i X^y
  const cplx hz = (xz + kI * yz) + mu * (xz - kI * yz);
  const cplx hzb = (xzb + kI * yzb) + mu * (xzb - kI * yzb);
  return (hz - std::conj(mu) * hzb) / (1.0 - std::norm(mu));
}

cplx expm1c(cplx z) {
  return {std::expm1(z.real()) * std::cos(z.imag()) - 2.0 * std::pow(std::sin(0.5 * z.imag()), 2),
          std::exp(z.real()) * std::sin(z.imag())};
}

VectorXcd squeezed_derivative(cplx mu, int levels) {
  VectorXcd d = VectorXcd::Zero(levels);
  double c = 1.0;
  for (int j = 1; 2 * j < levels; ++j) {
    c *= std::sqrt((2.0 * j - 1.0) * (2.0 * j)) / (2.0 * j);
    d(2 * j) = -static_cast<double>(j) * c * std::pow(-mu, j - 1);
  }
  return d;
}

}  // namespace

VectorXcd squeezed_vacuum(cplx mu, int levels) {
  VectorXcd v = VectorXcd::Zero(levels);
  v(0) = 1.0;
  for (int n = 0; n + 2 < levels; n += 2) v(n + 2) = -mu * v(n) * std::sqrt((n + 1.0) / (n + 2.0));
  return v;
}

namespace {

double tail_mass(cplx mu, int cutoff) {
  const VectorXcd v = squeezed_vacuum(mu, cutoff + 1);
  // |xi|^2 = (1 - |mu|^2)^{-1/2} in full
  return std::max(0.0, 1.0 - v.squaredNorm() * std::sqrt(1.0 - std::norm(mu)));
}

}  // namespace

int required_cutoff(cplx mu, double tail) {
  int d = 8;
  while (tail_mass(mu, d) >= tail) d += 2;
  return d;
}

int FockSpace::window() const { return static_cast<int>(0.75 * cutoff) + 1; }

FockPtr fock_space(int k, cplx mu, int cutoff) {
  if (k < 1) throw ValidationError("k must be positive");
  if (!(std::abs(mu) <= 0.9)) throw ValidationError("|mu| must be at most 0.9");
  if (cutoff < 8) throw ValidationError("cutoff must be at least 8");
  const double tail = tail_mass(mu, cutoff);
  if (tail >= 1e-10) {
    const int need = required_cutoff(mu);
    throw CutoffError("cutoff too small; need at least " + std::to_string(need), need);
  }
  VectorXcd xi = squeezed_vacuum(mu, cutoff + 1);
  xi.normalize();
  return std::make_shared<FockSpace>(
      FockSpace{k, mu, cutoff, MatrixXcd::Identity(cutoff + 1, cutoff + 1), cutoff + 1, std::move(xi), tail});
}

MatrixXcd overlap(const FockSpace& a, const FockSpace& b) {
  if (a.cutoff != b.cutoff || a.k != b.k) throw ValidationError("spaces must share k and cutoff");
  return a.xi.dot(b.xi) * (a.basis.adjoint() * b.basis);
}

Matrix2d QuadraticHamiltonian::field() const {
  Matrix2d h;
  h << -q, -r, p, q;
  return h;
}

Matrix2d QuadraticHamiltonian::flow(double t) const {
  const Matrix2d h = field();
  const double disc = q * q - p * r;  // h^2 = disc * I
  double c, s;
  if (disc > 0.0) {
    const double w = std::sqrt(disc);
    c = std::cosh(w * t);
    s = std::sinh(w * t) / w;
  } else if (disc < 0.0) {
    const double w = std::sqrt(-disc);
    c = std::cos(w * t);
    s = std::sin(w * t) / w;
  } else {
    c = 1.0;
    s = t;
  }
  return c * Matrix2d::Identity() + s * h;
}

QuadraticHamiltonian poisson(const QuadraticHamiltonian& f, const QuadraticHamiltonian& g) {
  return {2.0 * (f.p * g.q - f.q * g.p), f.p * g.r - f.r * g.p, 2.0 * (f.q * g.r - f.r * g.q)};
}

ModeQuadratic ModeQuadratic::operator+(const ModeQuadratic& o) const {
  ModeQuadratic r;
  r.bb = bb + o.bb;
  r.cc = cc + o.cc;
  r.bc = bc + o.bc;
  r.constant = constant + o.constant;
  return r;
}

ModeQuadratic ModeQuadratic::operator*(cplx s) const {
  ModeQuadratic r;
  r.bb = s * bb;
  r.cc = s * cc;
  r.bc = s * bc;
  r.constant = s * constant;
  return r;
}

ModeQuadratic product(const ModeLinear& u, const ModeLinear& v) {
  ModeQuadratic r;
  r.bb = u.b * v.b.transpose();
  r.cc = u.c * v.c.transpose();
  r.bc = u.b * v.c.transpose() + v.b * u.c.transpose();
  return r;
}

ModeLinear coordinate_x(int k) {
  const double s = 1.0 / std::sqrt(2.0 * k);
  ModeLinear l;
  l.b << s, s;
  l.c << s, s;
  return l;
}

ModeLinear coordinate_y(int k) {
  const cplx s = kI / std::sqrt(2.0 * k);
  ModeLinear l;
  l.b << s, -s;
  l.c << -s, s;
  return l;
}

ModeLinear covariant_x(int k) {
  const double s = std::sqrt(0.5 * k);
  ModeLinear l;
  l.c << s, -s;
  return l;
}

ModeLinear covariant_y(int k) {
  const cplx s = -kI * std::sqrt(0.5 * k);
  ModeLinear l;
  l.c << s, s;
  return l;
}

namespace {

ModeQuadratic symbol(const QuadraticHamiltonian& f, int k) {
  const ModeLinear x = coordinate_x(k), y = coordinate_y(k);
  return (product(x, x) * f.p + (product(x, y) + product(y, x)) * f.q + product(y, y) * f.r) * 0.5;
}

}  // namespace

ModeQuadratic prequantum(const QuadraticHamiltonian& f, int k) {
  const ModeLinear x = coordinate_x(k), y = coordinate_y(k);
  const ModeLinear xx = combine(-f.q, x, -f.r, y);  // X^x = -f_y
  const ModeLinear xy = combine(f.p, x, f.q, y);    // X^y = f_x
  const ModeQuadratic nabla = product(xx, covariant_x(k)) + product(xy, covariant_y(k));
  return symbol(f, k) + nabla * (1.0 / (kI * static_cast<double>(k)));
}

cplx half_form_coefficient(const QuadraticHamiltonian& f, cplx mu) { return field_coefficient(f.field(), mu); }

MatrixXcd mode_matrix(const Matrix2cd& m, int levels) {
  auto [a, ad] = ladder(levels + 1);
  const MatrixXcd* o[2] = {&a, &ad};
  MatrixXcd r = MatrixXcd::Zero(levels + 1, levels + 1);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      if (m(i, j) != cplx(0.0)) r += m(i, j) * ((*o[i]) * (*o[j]));
  return r.topLeftCorner(levels, levels);
}

cplx mode_expectation(const Matrix2cd& m, const VectorXcd& v) {
  VectorXcd w = VectorXcd::Zero(v.size() + 2);
  w.head(v.size()) = v;
  return w.dot(mode_matrix(m, static_cast<int>(w.size())) * w);
}

namespace {

cplx linear_expectation(int which, const VectorXcd& v) {
  auto [a, ad] = ladder(static_cast<int>(v.size()) + 1);
  VectorXcd w = VectorXcd::Zero(v.size() + 1);
  w.head(v.size()) = v;
  return w.dot((which == 0 ? a : ad) * w);
}

MatrixXcd compress(const FockSpace& s, const ModeQuadratic& op) {
  const int n = s.cutoff + 1;
  MatrixXcd m = mode_matrix(op.bb, n);
  m.diagonal().array() += mode_expectation(op.cc, s.xi) + op.constant;
  const cplx c0 = linear_expectation(0, s.xi), c1 = linear_expectation(1, s.xi);
  if (std::abs(c0) + std::abs(c1) > 0.0) {
    auto [a, ad] = ladder(n + 1);
    const MatrixXcd bl[2] = {a.topLeftCorner(n, n), ad.topLeftCorner(n, n)};
    for (int i = 0; i < 2; ++i) m += (op.bc(i, 0) * c0 + op.bc(i, 1) * c1) * bl[i];
  }
  return m;
}

}  // namespace

OperatorMatrix qm_op(const FockPtr& space, const QuadraticHamiltonian& f, bool corrected) {
  const int k = space->k;
  ModeQuadratic op = corrected ? prequantum(f, k) : symbol(f, k);
  if (corrected) op.constant += half_form_coefficient(f, space->mu) / (2.0 * kI * static_cast<double>(k));
  return {space, space, compress(*space, op)};
}

void symplectic_ab(const Matrix2d& s, cplx& a, cplx& b) {
  a = 0.5 * cplx(s(0, 0) + s(1, 1), s(1, 0) - s(0, 1));
  b = 0.5 * cplx(s(0, 0) - s(1, 1), s(1, 0) + s(0, 1));
}

cplx act(const Matrix2d& s, cplx mu) {
  cplx a, b;
  symplectic_ab(s, a, b);
  return (b + mu * std::conj(a)) / (a + mu * std::conj(b));
}

cplx tangent(const QuadraticHamiltonian& f, cplx mu) {
  cplx a, b;
  symplectic_ab(f.field(), a, b);
  return b + mu * (std::conj(a) - a) - mu * mu * std::conj(b);
}

cplx line_factor(const Matrix2d& s, cplx base) {
  if (std::abs(s.determinant() - 1.0) > 1e-10) throw ValidationError("flow must have determinant 1");
  cplx a, b;
  symplectic_ab(s, a, b);
  const auto j = pointwise::ComplexStructure::scalar(base);
  return (a + base * std::conj(b)) * pointwise::psi_factor(pointwise::ComplexStructure::scalar(act(s, base)), j);
}

ExtensionElement extension_identity(cplx base) { return {Matrix2d::Identity(), 1.0, base}; }

ExtensionElement extension_along(const std::function<Matrix2d(double)>& path, cplx base, int samples) {
  const Matrix2d s0 = path(0.0);
  if ((s0 - Matrix2d::Identity()).cwiseAbs().maxCoeff() > 1e-12) throw ValidationError("path must start at the identity");
  const auto root = pointwise::continue_sqrt([&](double t) { return line_factor(path(t), base); }, samples);
  return {path(1.0), root.value, base};
}

ExtensionElement rotation(double theta, cplx base) {
  const QuadraticHamiltonian h = QuadraticHamiltonian::harmonic();
  const int samples = std::max(64, static_cast<int>(std::ceil(256.0 * std::abs(theta) / (2.0 * std::numbers::pi))));
  return extension_along([&](double t) { return h.flow(t * theta); }, base, samples);
}

ExtensionElement extension_compose(const ExtensionElement& e1, const ExtensionElement& e2) {
  if (e1.base != e2.base) throw DomainError("extension elements over different base structures");
  using pointwise::ComplexStructure;
  const Matrix2d s = e1.flow * e2.flow;
  const auto z = pointwise::zeta(ComplexStructure::scalar(act(s, e1.base)), ComplexStructure::scalar(act(e2.flow, e1.base)),
                                 ComplexStructure::scalar(e1.base));
  return {s, z.sqrt_zeta * e2.branch * e1.branch, e1.base};
}

double extension_square_defect(const ExtensionElement& e) {
  const cplx want = line_factor(e.flow, e.base);
  return std::abs(e.branch * e.branch - want) / std::abs(want);
}

SchrodingerResult schrodinger_detail(int k, const QuadraticHamiltonian& f, double t, int cutoff, cplx mu) {
  if (t < 0.0 || t > 2.0 * std::numbers::pi + 1e-12) throw ValidationError("t must lie in [0, 2 pi]");
  FockPtr s = fock_space(k, mu, cutoff);
  const int n = cutoff + 1, w = s->window();
  const double tk = t * k;

  const MatrixXcd q = qm_op(s, f).m;
  const MatrixXcd eq = hermitian_exp(q, tk);

  const ModeQuadratic pk = prequantum(f, k);
  const MatrixXcd eb = hermitian_exp(mode_matrix(pk.bb, n), tk);
  const VectorXcd moved = hermitian_exp(mode_matrix(pk.cc, n), tk) * s->xi;

  // compare only on leading levels whose evolution stays clear of the truncation edge
  double leak = moved.tail(n - w).norm();
  if (leak > 1e-8) throw CutoffError("flow leaks beyond the assertion window", 2 * cutoff);
  int we = 0;
  for (; we < w; ++we) {
    const double l = std::max(eq.col(we).tail(n - w).norm(), eb.col(we).tail(n - w).norm());
    if (l > 1e-8) break;
    leak = std::max(leak, l);
  }
  if (we < std::min(8, w)) throw CutoffError("flow leaks beyond the assertion window", 2 * cutoff);

  ExtensionElement e = t == 0.0 ? extension_identity(mu)
                                : extension_along([&](double u) { return f.flow(u * t); }, mu,
                                                  std::max(64, static_cast<int>(std::ceil(256.0 * t / (2.0 * std::numbers::pi)))));
  const cplx raw = s->xi.dot(moved) * e.branch;
  const cplx phase = raw / std::abs(raw);
  const cplx q0 = q(0, 0) - mode_matrix(pk.bb, n)(0, 0);

  const MatrixXcd v = phase * eb;
  const double defect = opnorm(window_block(eq - v, we));
  return {defect, leak, we, std::exp(kI * tk * q0), phase, e};
}

double schrodinger_vs_transport(int k, const QuadraticHamiltonian& f, double t, int cutoff, cplx mu) {
  return schrodinger_detail(k, f, t, cutoff, mu).defect;
}

cplx connection_coefficient(cplx mu, cplx dmu, int cutoff, bool half_form) {
  const VectorXcd v = squeezed_vacuum(mu, cutoff + 1);
  const VectorXcd d = squeezed_derivative(mu, cutoff + 1);
  cplx c = v.dot(d) / v.squaredNorm() * dmu;
  if (half_form) c += -0.5 * dmu * std::conj(mu) / (1.0 - std::norm(mu));
  return c;
}

namespace {

cplx loop_log_once(const cplx corners[5], int cutoff, bool half_form, int per_side) {
  cplx ell = 0.0;
  for (int side = 0; side < 4; ++side) {
    const cplx m0 = corners[side], dmu = corners[side + 1] - corners[side];
    auto rhs = [&](double u) { return -connection_coefficient(m0 + u * dmu, dmu, cutoff, half_form); };
    const double h = 1.0 / per_side;
    cplx seg = 0.0, left = rhs(0.0);
    for (int i = 0; i < per_side; ++i) {
      const cplx mid = rhs((i + 0.5) * h), right = rhs((i + 1.0) * h);
      seg += (h / 6.0) * (left + 4.0 * mid + right);
      left = right;
    }
    ell += seg;
  }
  return ell;
}

}  // namespace

cplx loop_holonomy_log(cplx center, cplx eta, cplx mu_dir, double eps, int cutoff, bool half_form, int min_steps,
                       int* steps_used) {
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  if (min_steps < 32) throw ValidationError("transport needs at least 32 steps");
  const cplx p0 = center - 0.5 * eps * (eta + mu_dir);
  const cplx corners[5] = {p0, p0 + eps * mu_dir, p0 + eps * mu_dir + eps * eta, p0 + eps * eta, p0};
  for (cplx c : corners)
    if (std::abs(c) > 0.9) throw ValidationError("loop leaves the |mu| <= 0.9 disk");
  cplx prev = loop_log_once(corners, cutoff, half_form, min_steps / 4);
  for (int n = 2 * min_steps; n <= (1 << 14); n *= 2) {
    const cplx next = loop_log_once(corners, cutoff, half_form, n / 4);
    if (std::abs(next - prev) <= 1e-14 * std::max(1.0, std::abs(next))) {
      if (steps_used) *steps_used = n;
      return next;
    }
    prev = next;
  }
  throw IntegrationError("ODE step rejection overflow");
}

CurvatureEstimate loop_curvature_richardson(cplx center, cplx eta, cplx mu_dir, double eps, int cutoff,
                                            bool half_form, int min_steps) {
  int s1 = 0, s2 = 0;
  const cplx r1 = expm1c(loop_holonomy_log(center, eta, mu_dir, eps, cutoff, half_form, min_steps, &s1)) / (eps * eps);
  const cplx r2 =
      expm1c(loop_holonomy_log(center, eta, mu_dir, 0.5 * eps, cutoff, half_form, min_steps, &s2)) / (0.25 * eps * eps);
  return {(4.0 * r2 - r1) / 3.0, std::abs(r2 - r1) / 3.0, std::max(s1, s2)};
}

MatrixXcd window_block(const MatrixXcd& m, int window) { return m.topLeftCorner(window, window); }

IdentityResidual commutator_curvature_identity(int k, const QuadraticHamiltonian& f, const QuadraticHamiltonian& g,
                                               int cutoff, double eps, cplx mu, int min_steps) {
  FockPtr s = fock_space(k, mu, cutoff);
  const int w = s->window();
  const MatrixXcd qf = qm_op(s, f).m, qg = qm_op(s, g).m, qh = qm_op(s, poisson(f, g)).m;
  const cplx ik = kI * static_cast<double>(k);
  const MatrixXcd lhs = window_block(ik * (qf * qg - qg * qf), w);
  const CurvatureEstimate r = loop_curvature_richardson(mu, tangent(f, mu), tangent(g, mu), eps, cutoff, true, min_steps);
  MatrixXcd rhs = window_block(qh, w);
  rhs.diagonal().array() += r.estimate / ik;
  const double lhs_norm = opnorm(lhs), pn = opnorm(window_block(qh, w));
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + lhs_norm + pn);
  return {opnorm(lhs - rhs), r.error + floor, r.error, lhs_norm, pn, r.estimate};
}

cplx dx_bracket_lhs(const QuadraticHamiltonian& f, const QuadraticHamiltonian& g, cplx mu) {
  const Matrix2d a = f.field(), b = g.field();
  return -0.5 * field_coefficient(b * a - a * b, mu);
}

cplx dx_bracket_rhs(const QuadraticHamiltonian& f, const QuadraticHamiltonian& g, cplx mu) {
  MatrixXcd e(1, 1), m(1, 1);
  e(0, 0) = tangent(f, mu);
  m(0, 0) = tangent(g, mu);
  return pointwise::curvature_P_integrand_at(pointwise::ComplexStructure::scalar(mu), e, m);
}

}  // namespace hfq::bargmann
