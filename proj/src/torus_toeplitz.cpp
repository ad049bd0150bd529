#include <cmath>
#include <numbers>

#include "hfq/errors.hpp"
#include "hfq/torus.hpp"

namespace hfq::torus {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);

}  // namespace

TrigPoly::TrigPoly(std::map<Mode, cplx> c) : c_(std::move(c)) {
  for (auto it = c_.begin(); it != c_.end();) it = it->second == cplx(0.0) ? c_.erase(it) : std::next(it);
}

TrigPoly TrigPoly::constant(cplx v) { return TrigPoly(std::map<Mode, cplx>{{{0, 0}, v}}); }
TrigPoly TrigPoly::cos_x() { return TrigPoly(std::map<Mode, cplx>{{{1, 0}, 0.5}, {{-1, 0}, 0.5}}); }
TrigPoly TrigPoly::cos_y() { return TrigPoly(std::map<Mode, cplx>{{{0, 1}, 0.5}, {{0, -1}, 0.5}}); }

TrigPoly TrigPoly::dx() const {
  std::map<Mode, cplx> r;
  for (auto& [m, v] : c_) r[m] = v * 2.0 * kPi * kI * static_cast<double>(m.first);
  return TrigPoly(r);
}

TrigPoly TrigPoly::dy() const {
  std::map<Mode, cplx> r;
  for (auto& [m, v] : c_) r[m] = v * 2.0 * kPi * kI * static_cast<double>(m.second);
  return TrigPoly(r);
}

TrigPoly TrigPoly::operator+(const TrigPoly& o) const {
  std::map<Mode, cplx> r = c_;
  for (auto& [m, v] : o.c_) r[m] += v;
  return TrigPoly(r);
}

TrigPoly TrigPoly::operator-(const TrigPoly& o) const { return *this + o * cplx(-1.0); }

TrigPoly TrigPoly::operator*(const TrigPoly& o) const {
  std::map<Mode, cplx> r;
  for (auto& [a, u] : c_)
    for (auto& [b, v] : o.c_) r[{a.first + b.first, a.second + b.second}] += u * v;
  return TrigPoly(r);
}

TrigPoly TrigPoly::operator*(cplx s) const {
  std::map<Mode, cplx> r;
  for (auto& [m, v] : c_) r[m] = v * s;
  return TrigPoly(r);
}

cplx TrigPoly::operator()(double x, double y) const {
  cplx s = 0.0;
  for (auto& [m, v] : c_) s += v * std::polar(1.0, 2.0 * kPi * (m.first * x + m.second * y));
  return s;
}

VectorXcd TrigPoly::samples(int grid) const {
  VectorXcd out = VectorXcd::Zero(static_cast<Eigen::Index>(grid) * grid);
  for (auto& [m, v] : c_) {
    VectorXcd ex(grid), ey(grid);
    for (int i = 0; i < grid; ++i) {
      ex(i) = std::polar(1.0, 2.0 * kPi * m.first * i / grid);
      ey(i) = std::polar(1.0, 2.0 * kPi * m.second * i / grid);
    }
    for (int i = 0; i < grid; ++i) out.segment(static_cast<Eigen::Index>(i) * grid, grid) += (v * ex(i)) * ey;
  }
  return out;
}

int TrigPoly::bandwidth() const {
  int b = 0;
  for (auto& [m, v] : c_) b = std::max({b, std::abs(m.first), std::abs(m.second)});
  return b;
}

bool TrigPoly::is_real(double tol) const {
  for (auto& [m, v] : c_) {
    auto it = c_.find({-m.first, -m.second});
    cplx partner = it == c_.end() ? cplx(0.0) : it->second;
    if (std::abs(v - std::conj(partner)) > tol * (1.0 + std::abs(v))) return false;
  }
  return true;
}

TrigPoly poisson(const TrigPoly& f, const TrigPoly& g) {
  return (f.dx() * g.dy() - f.dy() * g.dx()) * cplx(1.0 / (2.0 * kPi));
}

TrigPoly from_samples(const VectorXd& samples, int grid) {
  const int n = grid;
  if (samples.size() != static_cast<Eigen::Index>(n) * n) throw ValidationError("sample count does not match grid");
  // separable DFT, rows iy, cols ix
  Eigen::Map<const Eigen::MatrixXd> f(samples.data(), n, n);
  MatrixXcd w(n, n);
  for (int p = 0; p < n; ++p)
    for (int i = 0; i < n; ++i) w(p, i) = std::polar(1.0, -2.0 * kPi * p * i / n) / static_cast<double>(n);
  MatrixXcd c = w * f.cast<cplx>() * w.transpose();  // c(q, p)
  const double peak = c.cwiseAbs().maxCoeff();
  std::map<TrigPoly::Mode, cplx> modes;
  for (int pi = 0; pi < n; ++pi)
    for (int qi = 0; qi < n; ++qi) {
      const cplx v = c(qi, pi);
      if (std::abs(v) <= 1e-14 * peak) continue;
      const int p = pi < n / 2 ? pi : pi - n;
      const int q = qi < n / 2 ? qi : qi - n;
      if ((std::abs(p) > n / 4 || std::abs(q) > n / 4) && std::abs(v) > 1e-10 * peak)
        throw UnsupportedInput("symbol is not band-limited on this grid");
      if (std::abs(p) <= n / 4 && std::abs(q) <= n / 4) modes[{p, q}] = v;
    }
  return TrigPoly(modes);
}

namespace {

OperatorMatrix plain(const SpacePtr& s, const VectorXcd& f) {
  MatrixXcd fe = s->basis.array().colwise() * f.array();
  return {s, s, s->weight * (s->basis.adjoint() * fe)};
}

}  // namespace

OperatorMatrix toeplitz(const SpacePtr& space, const TrigPoly& f, Variant v) {
  const bool corrected = v == Variant::Corrected || (v == Variant::Automatic && space->half_form);
  const int n = space->grid;
  if (f.bandwidth() > n / 4) throw UnsupportedInput("symbol bandwidth exceeds the grid");
  if (!corrected) return plain(space, f.samples(n));

  const int k = space->k;
  const cplx tau = space->tau.tau;
  const TrigPoly xx = f.dy() * cplx(-1.0 / (2.0 * kPi));
  const TrigPoly xy = f.dx() * cplx(1.0 / (2.0 * kPi));
  const TrigPoly h = xx + xy * tau;
  const TrigPoly a = (h.dy() - h.dx() * std::conj(tau)) * (1.0 / (tau - std::conj(tau)));

  const VectorXd y = space->ys();
  MatrixXcd raw = theta_samples(k, tau, n, Sample::Value);
  MatrixXcd nx = theta_samples(k, tau, n, Sample::Dx) + (2.0 * kPi * k * kI) * (raw.array().colwise() * y.cast<cplx>().array()).matrix();
  MatrixXcd ny = theta_samples(k, tau, n, Sample::Dy);

  const cplx ik = kI * static_cast<double>(k);
  const VectorXcd fs = f.samples(n), xs = xx.samples(n) / ik, ysm = xy.samples(n) / ik, as = a.samples(n) / (2.0 * ik);
  MatrixXcd z = (raw.array().colwise() * (fs + as).array()).matrix();
  z += (nx.array().colwise() * xs.array()).matrix();
  nx.resize(0, 0);
  z += (ny.array().colwise() * ysm.array()).matrix();
  ny.resize(0, 0);
  MatrixXcd m = space->weight * (raw.adjoint() * z);
  return {space, space, space->coeff.adjoint() * m * space->coeff};
}

OperatorMatrix toeplitz(const SpacePtr& space, const VectorXd& samples, Variant v) {
  const bool corrected = v == Variant::Corrected || (v == Variant::Automatic && space->half_form);
  if (samples.size() != space->basis.rows()) throw ValidationError("samples do not match the space grid");
  if (corrected) return toeplitz(space, from_samples(samples, space->grid), Variant::Corrected);
  return plain(space, samples.cast<cplx>());
}

double commutator_defect(const SpacePtr& space, const TrigPoly& f, const TrigPoly& g) {
  if (!f.is_real() || !g.is_real()) throw ValidationError("symbols must be real");
  const MatrixXcd qf = toeplitz(space, f).m, qg = toeplitz(space, g).m;
  const MatrixXcd qh = toeplitz(space, poisson(f, g)).m;
  const cplx ik = kI * static_cast<double>(space->k);
  return opnorm(ik * (qf * qg - qg * qf) - qh);
}

}  // namespace hfq::torus
