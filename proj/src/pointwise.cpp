#include "hfq/pointwise.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "hfq/errors.hpp"

namespace hfq::pointwise {

namespace {

double opnorm(const MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXcd> svd(m);
  return svd.singularValues()(0);
}

MatrixXcd lerp(const MatrixXcd& x, const MatrixXcd& y, double t) { return x + t * (y - x); }

constexpr int kMaxSamples = 1 << 14;

}  // namespace

SymplecticSpace::SymplecticSpace(int n_) : n(n_), omega(MatrixXd::Zero(2 * n_, 2 * n_)) {
  if (n < 1) throw ValidationError("symplectic space needs n >= 1");
  omega.topRightCorner(n, n) = MatrixXd::Identity(n, n);
  omega.bottomLeftCorner(n, n) = -MatrixXd::Identity(n, n);
}

SymplecticSpace::SymplecticSpace(int n_, MatrixXd omega_) : n(n_), omega(std::move(omega_)) {
  if (n < 1 || omega.rows() != 2 * n || omega.cols() != 2 * n)
    throw ValidationError("omega must be 2n x 2n");
  if ((omega + omega.transpose()).norm() > 1e-12 * (1.0 + omega.norm()))
    throw ValidationError("omega is not antisymmetric");
  if (std::abs(omega.determinant()) < 1e-12) throw ValidationError("omega is degenerate");
}

ComplexStructure::ComplexStructure(const MatrixXcd& mu) {
  if (mu.rows() != mu.cols() || mu.rows() == 0)
    throw ValidationError("mu must be a nonempty square matrix");
  if ((mu - mu.transpose()).norm() > 1e-12 * (1.0 + mu.norm()))
    throw ValidationError("mu must be symmetric");
  mu_ = 0.5 * (mu + mu.transpose());
  if (opnorm(mu_) >= 1.0 - 1e-8) throw ValidationError("mu is outside the Siegel disk");
}

ComplexStructure ComplexStructure::base(int n) { return ComplexStructure(MatrixXcd::Zero(n, n)); }

ComplexStructure ComplexStructure::scalar(cplx mu) {
  MatrixXcd m(1, 1);
  m(0, 0) = mu;
  return ComplexStructure(m);
}

bool ComplexStructure::same_as(const ComplexStructure& o, double tol) const {
  return dim() == o.dim() && (mu_ - o.mu_).norm() <= tol;
}

ComplexStructure random_structure(int n, std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (;;) {
    MatrixXcd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        cplx v(u(rng) * s, u(rng) * s);
        m(i, j) = v;
        m(j, i) = v;
      }
    if (opnorm(m) <= radius) return ComplexStructure(m);
  }
}

cplx pairing_det(const ComplexStructure& x, const ComplexStructure& y) {
  const int n = x.dim();
  if (y.dim() != n) throw ValidationError("dimension mismatch");
  MatrixXcd m = MatrixXcd::Identity(n, n) - y.mu() * x.mu().conjugate();
  cplx d = m.determinant();
  if (std::abs(d) < 1e-14) throw DegeneracyError("non-transverse pair");
  return d;
}

cplx psi_factor(const ComplexStructure& a, const ComplexStructure& b) {
  if (a.same_as(b, 0.0)) return 1.0;
  return pairing_det(a, a) / pairing_det(a, b);
}

cplx psi_factor(const ComplexStructure& a, const ComplexStructure& b, const SymplecticSpace& space) {
  if (a.dim() != space.n || b.dim() != space.n) throw ValidationError("structure does not match space");
  return psi_factor(a, b);
}

double psi_adjoint_check(const ComplexStructure& a, const ComplexStructure& b) {
  // line metrics |e_j|^2 = D(j,j) in the j0 frame identification
  const double ha = pairing_det(a, a).real();
  const double hb = pairing_det(b, b).real();
  const cplx lhs = psi_factor(a, b) * hb;
  const cplx rhs = std::conj(psi_factor(b, a)) * ha;
  return std::abs(lhs - rhs);
}

ContinuedRoot continue_sqrt(const std::function<cplx(double)>& f, int samples) {
  for (int n = std::max(samples, 1); n <= kMaxSamples; n *= 2) {
    std::vector<cplx> v(n + 1);
    for (int i = 0; i <= n; ++i) v[i] = f(static_cast<double>(i) / n);
    bool fine = true;
    for (int i = 0; i < n && fine; ++i)
      fine = std::abs(std::arg(v[i + 1] / v[i])) <= std::numbers::pi / 2;
    if (!fine) continue;
    cplx r = std::sqrt(v[0]);
    for (int i = 1; i <= n; ++i) {
      cplx s = std::sqrt(v[i]);
      r = std::abs(s - r) <= std::abs(s + r) ? s : -s;
    }
    return {r, n};
  }
  throw BranchError("branch resolution exceeded");
}

cplx zeta_value(const ComplexStructure& a, const ComplexStructure& b, const ComplexStructure& c) {
  if (b.same_as(c, 0.0) || a.same_as(b, 0.0)) return 1.0;
  return pairing_det(a, b) * pairing_det(b, c) / (pairing_det(a, c) * pairing_det(b, b));
}

ZetaBranch zeta(const ComplexStructure& a, const ComplexStructure& b, const ComplexStructure& c,
                Contraction path, int samples) {
  const cplx z = zeta_value(a, b, c);
  if (z == cplx(1.0)) return {z, 1.0, 0};
  std::function<cplx(double)> f;
  if (path == Contraction::TowardFirst) {
    f = [&](double t) {
      return zeta_value(a, ComplexStructure(lerp(a.mu(), b.mu(), t)),
                        ComplexStructure(lerp(a.mu(), c.mu(), t)));
    };
  } else {
    f = [&](double t) {
      return zeta_value(ComplexStructure(lerp(c.mu(), a.mu(), t)),
                        ComplexStructure(lerp(c.mu(), b.mu(), t)), c);
    };
  }
  ContinuedRoot r = continue_sqrt(f, samples);
  return {z, r.value, r.samples};
}

namespace {

MatrixXcd holo_frame(const ComplexStructure& j) {
  const int n = j.dim();
  MatrixXcd v(2 * n, n);
  v.topRows(n) = MatrixXcd::Identity(n, n);
  v.bottomRows(n) = -j.mu().conjugate().transpose();
  return v;
}

MatrixXcd antiholo_frame(const ComplexStructure& j) {
  const int n = j.dim();
  MatrixXcd v(2 * n, n);
  v.topRows(n) = -j.mu().transpose();
  v.bottomRows(n) = MatrixXcd::Identity(n, n);
  return v;
}

// projector onto span(V) along span(W)
MatrixXcd oblique(const MatrixXcd& V, const MatrixXcd& W) {
  const int n = static_cast<int>(V.cols());
  MatrixXcd basis(2 * n, 2 * n);
  basis << V, W;
  MatrixXcd lead = MatrixXcd::Zero(2 * n, 2 * n);
  lead.leftCols(n) = V;
  return lead * basis.partialPivLu().inverse();
}

cplx det_sum(const ComplexStructure& a, const ComplexStructure& b, const ComplexStructure& c) {
  MatrixXcd qcb = oblique(holo_frame(b), antiholo_frame(c));
  MatrixXcd qbar_ab = oblique(antiholo_frame(b), holo_frame(a));
  return (qcb + qbar_ab).determinant();
}

}  // namespace

ProjectionPair projections(const ComplexStructure& a, const ComplexStructure& b) {
  if (a.dim() != b.dim()) throw ValidationError("dimension mismatch");
  return {oblique(antiholo_frame(b), holo_frame(a)), oblique(holo_frame(b), antiholo_frame(a))};
}

DetHalfCheck det_half_identity(const ComplexStructure& a, const ComplexStructure& b,
                               const ComplexStructure& c) {
  const ZetaBranch z = zeta(a, b, c);
  const cplx inv = 1.0 / det_sum(a, b, c);
  DetHalfCheck out{std::abs(inv - z.zeta), 0.0};
  auto f = [&](double t) {
    return 1.0 / det_sum(a, ComplexStructure(lerp(a.mu(), b.mu(), t)),
                         ComplexStructure(lerp(a.mu(), c.mu(), t)));
  };
  out.branch = std::abs(continue_sqrt(f).value - z.sqrt_zeta);
  return out;
}

cplx morphism_square(const HalfFormTriple& source, const HalfFormTriple& target) {
  return psi_factor(source.j, target.j) * source.frame / target.frame;
}

HalfFormMorphism make_morphism(const HalfFormTriple& source, const HalfFormTriple& target, int sign) {
  if (source.frame == cplx(0.0) || target.frame == cplx(0.0)) throw ValidationError("zero frame");
  cplx s = std::sqrt(morphism_square(source, target));
  return {source, target, sign < 0 ? -s : s};
}

HalfFormMorphism identity_morphism(const HalfFormTriple& t) { return {t, t, 1.0}; }

double morphism_defect(const HalfFormMorphism& m) {
  const cplx want = morphism_square(m.source, m.target);
  return std::abs(m.scalar * m.scalar - want) / std::abs(want);
}

HalfFormMorphism halfform_compose(const HalfFormMorphism& psi2, const HalfFormMorphism& psi1) {
  if (!psi1.target.j.same_as(psi2.source.j, 1e-13) ||
      std::abs(psi1.target.frame - psi2.source.frame) > 1e-13 * std::abs(psi2.source.frame))
    throw DomainError("composition domain mismatch");
  const cplx r = zeta(psi1.source.j, psi1.target.j, psi2.target.j).sqrt_zeta;
  return {psi1.source, psi2.target, r * psi2.scalar * psi1.scalar};
}

HalfFormMorphism halfform_adjoint(const HalfFormMorphism& psi) {
  const double ha = std::abs(psi.source.frame) * std::sqrt(pairing_det(psi.source.j, psi.source.j).real());
  const double hb = std::abs(psi.target.frame) * std::sqrt(pairing_det(psi.target.j, psi.target.j).real());
  return {psi.target, psi.source, std::conj(psi.scalar) * hb / ha};
}

cplx curvature_P_integrand(const MatrixXcd& eta, const MatrixXcd& mu) {
  return 0.5 * (eta * mu.conjugate() - mu * eta.conjugate()).trace();
}

cplx curvature_P_integrand_at(const ComplexStructure& at, const MatrixXcd& eta, const MatrixXcd& mu) {
  const int n = at.dim();
  const MatrixXcd I = MatrixXcd::Identity(n, n);
  const MatrixXcd l = (I - at.mu() * at.mu().conjugate()).inverse();
  const MatrixXcd r = (I - at.mu().conjugate() * at.mu()).inverse();
  return 0.5 * (l * eta * r * mu.conjugate() - l * mu * r * eta.conjugate()).trace();
}

}  // namespace hfq::pointwise
