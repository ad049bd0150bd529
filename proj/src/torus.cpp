#include "hfq/torus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hfq/errors.hpp"

namespace hfq::torus {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);

// lattice indices l with |exp(i pi k tau s^2)| above 1e-20 for some s = y + l + m/k, y in [0,1)
std::pair<int, int> lattice_range(int k, cplx tau) {
  const double reach = std::sqrt(46.0 / (kPi * k * tau.imag()));
  return {static_cast<int>(std::floor(-reach)) - 1, static_cast<int>(std::ceil(reach)) + 1};
}

double half_form_weight(cplx tau) {
  const cplx mu = cayley(tau);
  return std::sqrt(1.0 - std::norm(mu));
}

}  // namespace

TorusStructure::TorusStructure(cplx t) : tau(t) {
  if (!(t.imag() > 0.0) || !std::isfinite(t.real()) || !std::isfinite(t.imag()))
    throw ValidationError("tau must lie in the upper half-plane");
}

cplx cayley(cplx tau) { return (kI - tau) / (kI + tau); }
cplx inverse_cayley(cplx mu) { return kI * (1.0 - mu) / (1.0 + mu); }

pointwise::ComplexStructure siegel(const TorusStructure& t) {
  return pointwise::ComplexStructure::scalar(cayley(t.tau));
}

int default_grid(int k) { return std::max(4 * k, 32); }

MatrixXcd theta_samples(int k, cplx tau, int grid, Sample what) {
  if (k < 1) throw ValidationError("k must be positive");
  TorusStructure{tau};
  const int n = grid;
  auto [lo, hi] = lattice_range(k, tau);
  const int nl = hi - lo + 1;
  MatrixXcd out(static_cast<Eigen::Index>(n) * n, k);
  MatrixXcd g(n, nl), e(nl, n);
  for (int m = 0; m < k; ++m) {
    for (int j = 0; j < n; ++j) {
      const double y = static_cast<double>(j) / n;
      for (int l = lo; l <= hi; ++l) {
        const double s = y + l + static_cast<double>(m) / k;
        cplx v = std::exp(kI * kPi * static_cast<double>(k) * tau * s * s);
        if (what == Sample::Dy) v *= 2.0 * kPi * kI * static_cast<double>(k) * tau * s;
        if (what == Sample::Dtau) v *= kI * kPi * static_cast<double>(k) * s * s;
        g(j, l - lo) = v;
      }
    }
    for (int l = lo; l <= hi; ++l) {
      const double freq = static_cast<double>(k) * l + m;
      for (int i = 0; i < n; ++i) {
        cplx v = std::polar(1.0, 2.0 * kPi * freq * i / n);
        if (what == Sample::Dx) v *= 2.0 * kPi * kI * freq;
        e(l - lo, i) = v;
      }
    }
    MatrixXcd col = g * e;  // rows iy, cols ix
    out.col(m) = Eigen::Map<VectorXcd>(col.data(), col.size());
  }
  return out;
}

MatrixXcd theta_basis(int k, cplx tau, int grid) {
  if (grid < 4 * k) throw ResolutionError("grid must be at least 4k");
  return theta_samples(k, tau, grid, Sample::Value);
}

cplx theta_eval(int k, cplx tau, int m, double x, double y) {
  // lattice sum centred on the nearest terms to y
  cplx sum = 0.0;
  const int l0 = static_cast<int>(std::floor(-y - static_cast<double>(m) / k));
  auto [lo, hi] = lattice_range(k, tau);
  for (int l = l0 + lo - 1; l <= l0 + hi + 1; ++l) {
    const double s = y + l + static_cast<double>(m) / k;
    sum += std::exp(kI * kPi * static_cast<double>(k) * tau * s * s) *
           std::polar(1.0, 2.0 * kPi * (static_cast<double>(k) * l + m) * x);
  }
  return sum;
}

VectorXd QuantumSpace::xs() const {
  VectorXd v(static_cast<Eigen::Index>(grid) * grid);
  for (int i = 0; i < grid; ++i) v.segment(static_cast<Eigen::Index>(i) * grid, grid).setConstant(static_cast<double>(i) / grid);
  return v;
}

VectorXd QuantumSpace::ys() const {
  VectorXd v(static_cast<Eigen::Index>(grid) * grid);
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) v(static_cast<Eigen::Index>(i) * grid + j) = static_cast<double>(j) / grid;
  return v;
}

SpacePtr quantum_space(int k, cplx tau, bool half_form, int grid) {
  if (grid == 0) grid = default_grid(k);
  TorusStructure t(tau);
  MatrixXcd raw = theta_basis(k, tau, grid);
  const double weight = (half_form ? half_form_weight(tau) : 1.0) / (static_cast<double>(grid) * grid);

  MatrixXcd gram = weight * raw.adjoint() * raw;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(gram, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
  const double cond = lmin > 0.0 ? lmax / lmin : INFINITY;
  if (!(cond < 1e8)) throw ResolutionError("theta Gram matrix is ill-conditioned; refine the grid");

  // modified Gram-Schmidt, two passes, tracking the triangular factor
  MatrixXcd q = raw;
  MatrixXcd r = MatrixXcd::Zero(k, k);
  for (int j = 0; j < k; ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i < j; ++i) {
        cplx h = weight * q.col(i).dot(q.col(j));
        q.col(j) -= h * q.col(i);
        r(i, j) += h;
      }
    double nrm = std::sqrt(weight * q.col(j).squaredNorm());
    r(j, j) = nrm;
    q.col(j) /= nrm;
  }
  MatrixXcd coeff = r.triangularView<Eigen::Upper>().solve(MatrixXcd::Identity(k, k));

  auto s = std::make_shared<QuantumSpace>(QuantumSpace{k, t, half_form, grid, std::move(q), std::move(coeff), cond, weight});
  return s;
}

SpacePtr SpaceCache::get(int k, cplx tau, bool half_form, int grid) {
  if (grid == 0) grid = default_grid(k);
  Key key{k, tau.real(), tau.imag(), half_form, grid};
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = spaces_.find(key);
    if (it != spaces_.end()) return it->second;
  }
  SpacePtr s = quantum_space(k, tau, half_form, grid);
  std::lock_guard<std::mutex> lock(mu_);
  return spaces_.emplace(key, s).first->second;
}

std::size_t SpaceCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return spaces_.size();
}

cplx torus_psi_scalar(cplx tau_a, cplx tau_b) {
  TorusStructure{tau_a};
  TorusStructure{tau_b};
  return (std::conj(tau_a) - tau_a) / (std::conj(tau_a) - tau_b);
}

cplx torus_zeta(cplx tau_a, cplx tau_b, cplx tau_c) {
  return torus_psi_scalar(tau_a, tau_c) / (torus_psi_scalar(tau_a, tau_b) * torus_psi_scalar(tau_b, tau_c));
}

double opnorm(const MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<MatrixXcd> svd(m);
  return svd.singularValues()(0);
}

MatrixXcd polar_unitary(const MatrixXcd& t) {
  Eigen::BDCSVD<MatrixXcd> svd(t, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-12 * sv(0)) throw DegeneracyError("operator is rank deficient");
  return svd.matrixU() * svd.matrixV().adjoint();
}

OperatorMatrix fio_unitary(const SpacePtr& from, const SpacePtr& to, cplx morphism_scalar) {
  if (from->k != to->k || from->grid != to->grid) throw ValidationError("spaces must share k and grid");
  const cplx want = torus_psi_scalar(from->tau.tau, to->tau.tau);
  if (std::abs(morphism_scalar * morphism_scalar - want) > 1e-10 * std::abs(want))
    throw ValidationError("scalar is not a half-form morphism between these structures");
  // dz^{1/2} frames to the fixed half-form frame
  const cplx frame = std::sqrt((kI + to->tau.tau) / (kI + from->tau.tau));
  MatrixXcd t = (to->weight * frame * std::abs(morphism_scalar)) * (to->basis.adjoint() * from->basis);
  return {from, to, (morphism_scalar / std::abs(morphism_scalar)) * polar_unitary(t)};
}

}  // namespace hfq::torus
