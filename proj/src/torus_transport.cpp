#include <cmath>
#include <numbers>

#include "hfq/errors.hpp"
#include "hfq/torus.hpp"

namespace hfq::torus {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);
constexpr int kMaxSteps = 1 << 14;

std::pair<int, int> lattice_range(int k, cplx tau) {
  const double reach = std::sqrt(46.0 / (kPi * k * tau.imag()));
  return {static_cast<int>(std::floor(-reach)) - 1, static_cast<int>(std::ceil(reach)) + 1};
}

cplx dtau_dmu(cplx mu) { return -2.0 * kI / ((1.0 + mu) * (1.0 + mu)); }

struct Segment {
  cplx mu0, mu1;
  int steps;
};

std::vector<Segment> segments(const ModuliPath& path, int per_unit) {
  std::vector<Segment> out;
  for (std::size_t i = 0; i + 1 < path.samples.size(); ++i) {
    const double dt = path.times[i + 1] - path.times[i];
    const int steps = std::max(1, static_cast<int>(std::ceil(per_unit * dt - 1e-9)));
    out.push_back({cayley(path.samples[i].tau), cayley(path.samples[i + 1].tau), steps});
  }
  return out;
}

// log of the raw-basis coefficient map, one entry per theta sector; RK4 on a diagonal
// linear system in log form
VectorXcd integrate_log(const ModuliPath& path, int k, bool half_form, int grid, int per_unit) {
  VectorXcd ell = VectorXcd::Zero(k);
  for (const Segment& s : segments(path, per_unit)) {
    const cplx dmu = s.mu1 - s.mu0;
    auto rhs = [&](double t) -> VectorXcd {
      const cplx mu = s.mu0 + t * dmu;
      VectorXcd c = connection_diagonal(k, inverse_cayley(mu), grid) * (dtau_dmu(mu) * dmu);
      if (half_form) c.array() += -0.5 * dmu * std::conj(mu) / (1.0 - std::norm(mu));
      return -c;
    };
    const double h = 1.0 / s.steps;
    VectorXcd seg = VectorXcd::Zero(k);
    VectorXcd left = rhs(0.0);
    for (int i = 0; i < s.steps; ++i) {
      const double t = i * h;
      VectorXcd mid = rhs(t + 0.5 * h), right = rhs(t + h);
      seg += (h / 6.0) * (left + 4.0 * mid + right);
      left = std::move(right);
    }
    ell += seg;
  }
  return ell;
}

struct Integrated {
  VectorXcd ell;
  int per_unit;
};

Integrated integrate_converged(const ModuliPath& path, int k, bool half_form, int grid, int min_steps) {
  VectorXcd prev = integrate_log(path, k, half_form, grid, min_steps);
  for (int n = 2 * min_steps; n <= kMaxSteps; n *= 2) {
    VectorXcd next = integrate_log(path, k, half_form, grid, n);
    const double change = (next - prev).cwiseAbs().maxCoeff();
    if (change <= 1e-14 * std::max(1.0, next.cwiseAbs().maxCoeff())) return {next, n};
    prev = std::move(next);
  }
  throw IntegrationError("ODE step rejection overflow");
}

}  // namespace

ModuliPath::ModuliPath(std::vector<TorusStructure> s, std::vector<double> t)
    : samples(std::move(s)), times(std::move(t)) {
  if (samples.size() != times.size() || samples.empty()) throw ValidationError("path samples and times must match");
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    if (!(times[i + 1] > times[i])) throw ValidationError("path times must increase strictly");
  for (double v : times)
    if (v < 0.0 || v > 1.0) throw ValidationError("path times must lie in [0,1]");
}

ModuliPath ModuliPath::segment(cplx tau_a, cplx tau_b) {
  return ModuliPath({TorusStructure(tau_a), TorusStructure(tau_b)}, {0.0, 1.0});
}

ModuliPath ModuliPath::constant(cplx tau) { return ModuliPath({TorusStructure(tau)}, {0.0}); }

VectorXcd connection_diagonal(int k, cplx tau, int grid) {
  auto [lo, hi] = lattice_range(k, tau);
  VectorXcd c(k);
  for (int m = 0; m < k; ++m) {
    cplx g2 = 0.0, h = 0.0;
    for (int j = 0; j < grid; ++j)
      for (int l = lo; l <= hi; ++l) {
        const double s = static_cast<double>(j) / grid + l + static_cast<double>(m) / k;
        const cplx g = std::exp(kI * kPi * static_cast<double>(k) * tau * s * s);
        g2 += std::norm(g);
        h += std::norm(g) * (kI * kPi * static_cast<double>(k) * s * s);
      }
    c(m) = h / g2;
  }
  return c;
}

MatrixXcd connection_matrix(int k, cplx tau, int grid) {
  const MatrixXcd raw = theta_samples(k, tau, grid, Sample::Value);
  const MatrixXcd dt = theta_samples(k, tau, grid, Sample::Dtau);
  const MatrixXcd g = raw.adjoint() * raw;
  return g.ldlt().solve(raw.adjoint() * dt);
}

Transport transport(const ModuliPath& path, int k, bool half_form, int grid, int min_steps) {
  if (min_steps < 32) throw ValidationError("transport needs at least 32 steps");
  if (grid == 0) grid = default_grid(k);
  SpacePtr from = quantum_space(k, path.samples.front().tau, half_form, grid);
  SpacePtr to = path.samples.size() == 1 ? from : quantum_space(k, path.samples.back().tau, half_form, grid);
  if (path.samples.size() == 1) {
    MatrixXcd id = MatrixXcd::Identity(k, k);
    return {{from, to, id}, id, 0.0, 0};
  }
  Integrated r = integrate_converged(path, k, half_form, grid, min_steps);
  const VectorXcd a = r.ell.array().exp().matrix();
  MatrixXcd raw = to->coeff.triangularView<Eigen::Upper>().solve(a.asDiagonal() * from->coeff);
  const double defect = opnorm(raw.adjoint() * raw - MatrixXcd::Identity(k, k));
  return {{from, to, polar_unitary(raw)}, raw, defect, r.per_unit};
}

cplx path_morphism_scalar(const ModuliPath& path) {
  const cplx t0 = path.samples.front().tau;
  if (path.samples.size() == 1) return 1.0;
  auto f = [&](double t) {
    std::size_t i = 0;
    while (i + 2 < path.times.size() && t > path.times[i + 1]) ++i;
    const double u = (t - path.times[i]) / (path.times[i + 1] - path.times[i]);
    const cplx mu = cayley(path.samples[i].tau) + u * (cayley(path.samples[i + 1].tau) - cayley(path.samples[i].tau));
    return torus_psi_scalar(t0, inverse_cayley(mu));
  };
  return pointwise::continue_sqrt(f, 256).value;
}

namespace {

ModuliPath loop(cplx center, cplx eta, cplx mu_dir, double eps) {
  const cplx c = cayley(center);
  const cplx p0 = c - 0.5 * eps * (eta + mu_dir);
  const cplx p1 = p0 + eps * mu_dir, p2 = p1 + eps * eta, p3 = p2 - eps * mu_dir;
  for (cplx p : {p0, p1, p2, p3})
    if (std::abs(p) >= 1.0 - 1e-8) throw ValidationError("loop leaves the moduli space");
  return ModuliPath({TorusStructure(inverse_cayley(p0)), TorusStructure(inverse_cayley(p1)),
                     TorusStructure(inverse_cayley(p2)), TorusStructure(inverse_cayley(p3)),
                     TorusStructure(inverse_cayley(p0))},
                    {0.0, 0.25, 0.5, 0.75, 1.0});
}

}  // namespace

OperatorMatrix loop_curvature(cplx center, cplx eta, cplx mu_dir, double eps, int k, bool half_form, int grid) {
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  if (grid == 0) grid = default_grid(k);
  const ModuliPath path = loop(center, eta, mu_dir, eps);
  SpacePtr s = quantum_space(k, path.samples.front().tau, half_form, grid);
  const VectorXcd ell = integrate_converged(path, k, half_form, grid, 1024).ell;
  VectorXcd d(k);
  for (int m = 0; m < k; ++m) {
    // expm1 for complex arguments
    const cplx z = ell(m);
    d(m) = cplx(std::expm1(z.real()) * std::cos(z.imag()) - 2.0 * std::pow(std::sin(0.5 * z.imag()), 2),
                std::exp(z.real()) * std::sin(z.imag()));
  }
  MatrixXcd r = s->coeff.triangularView<Eigen::Upper>().solve(d.asDiagonal() * s->coeff) / (eps * eps);
  return {s, s, r};
}

CurvatureEstimate loop_curvature_richardson(cplx center, cplx eta, cplx mu_dir, double eps, int k,
                                            bool half_form, int grid) {
  const MatrixXcd r1 = loop_curvature(center, eta, mu_dir, eps, k, half_form, grid).m;
  const MatrixXcd r2 = loop_curvature(center, eta, mu_dir, 0.5 * eps, k, half_form, grid).m;
  return {(4.0 * r2 - r1) / 3.0, opnorm(r2 - r1) / 3.0};
}

}  // namespace hfq::torus
