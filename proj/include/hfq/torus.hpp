#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hfq/pointwise.hpp"

namespace hfq::torus {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct TorusStructure {
  cplx tau;
  explicit TorusStructure(cplx t);
};

// upper half-plane <-> unit disk, base point tau = i <-> mu = 0
cplx cayley(cplx tau);
cplx inverse_cayley(cplx mu);
pointwise::ComplexStructure siegel(const TorusStructure& t);

int default_grid(int k);

enum class Sample { Value, Dx, Dy, Dtau };

// raw theta sections at the N x N grid nodes, node index ix * N + iy
MatrixXcd theta_samples(int k, cplx tau, int grid, Sample what = Sample::Value);
MatrixXcd theta_basis(int k, cplx tau, int grid);
cplx theta_eval(int k, cplx tau, int m, double x, double y);

struct QuantumSpace {
  int k;
  TorusStructure tau;
  bool half_form;
  int grid;
  MatrixXcd basis;  // grid samples of an orthonormal basis
  MatrixXcd coeff;  // basis = theta_basis * coeff
  double gram_cond;
  double weight;  // quadrature weight of one node, half-form factor included

  VectorXd xs() const;
  VectorXd ys() const;
};

using SpacePtr = std::shared_ptr<const QuantumSpace>;

SpacePtr quantum_space(int k, cplx tau, bool half_form, int grid = 0);

// read-mostly cache keyed by (k, tau, half_form, grid)
class SpaceCache {
 public:
  SpacePtr get(int k, cplx tau, bool half_form, int grid = 0);
  std::size_t size() const;

 private:
  using Key = std::tuple<int, double, double, bool, int>;
  mutable std::mutex mu_;
  std::map<Key, SpacePtr> spaces_;
};

struct OperatorMatrix {
  SpacePtr from;
  SpacePtr to;
  MatrixXcd m;
};

cplx torus_psi_scalar(cplx tau_a, cplx tau_b);
// composition defect of the line maps: psi_ab psi_bc = psi_ac / zeta
cplx torus_zeta(cplx tau_a, cplx tau_b, cplx tau_c);

double opnorm(const MatrixXcd& m);
MatrixXcd polar_unitary(const MatrixXcd& t);

OperatorMatrix fio_unitary(const SpacePtr& from, const SpacePtr& to, cplx morphism_scalar);

// finite Fourier sum  sum c_pq exp(2 pi i (p x + q y))
class TrigPoly {
 public:
  using Mode = std::pair<int, int>;

  TrigPoly() = default;
  explicit TrigPoly(std::map<Mode, cplx> c);
  static TrigPoly constant(cplx v);
  static TrigPoly cos_x();
  static TrigPoly cos_y();

  const std::map<Mode, cplx>& coeffs() const { return c_; }
  TrigPoly dx() const;
  TrigPoly dy() const;
  TrigPoly operator+(const TrigPoly& o) const;
  TrigPoly operator-(const TrigPoly& o) const;
  TrigPoly operator*(const TrigPoly& o) const;
  TrigPoly operator*(cplx s) const;
  cplx operator()(double x, double y) const;
  VectorXcd samples(int grid) const;
  int bandwidth() const;
  bool is_real(double tol = 1e-14) const;

 private:
  std::map<Mode, cplx> c_;
};

TrigPoly poisson(const TrigPoly& f, const TrigPoly& g);
TrigPoly from_samples(const VectorXd& samples, int grid);

enum class Variant { Automatic, Plain, Corrected };

OperatorMatrix toeplitz(const SpacePtr& space, const TrigPoly& f, Variant v = Variant::Automatic);
OperatorMatrix toeplitz(const SpacePtr& space, const VectorXd& samples, Variant v = Variant::Automatic);

struct ModuliPath {
  std::vector<TorusStructure> samples;
  std::vector<double> times;

  ModuliPath(std::vector<TorusStructure> s, std::vector<double> t);
  static ModuliPath segment(cplx tau_a, cplx tau_b);
  static ModuliPath constant(cplx tau);
};

struct Transport {
  OperatorMatrix unitary;
  MatrixXcd raw;  // before the final polar correction
  double unitarity_defect;
  int steps;
};

// diagonal of the projected connection in the theta basis, per unit dtau
VectorXcd connection_diagonal(int k, cplx tau, int grid);
// same quantity from the full 2-D quadrature, for cross-checking
MatrixXcd connection_matrix(int k, cplx tau, int grid);

Transport transport(const ModuliPath& path, int k, bool half_form, int grid = 0, int min_steps = 256);

// continuous square root of torus_psi_scalar along the path
cplx path_morphism_scalar(const ModuliPath& path);

struct CurvatureEstimate {
  MatrixXcd estimate;
  double error;
};

OperatorMatrix loop_curvature(cplx center, cplx eta, cplx mu_dir, double eps, int k, bool half_form,
                              int grid = 0);
CurvatureEstimate loop_curvature_richardson(cplx center, cplx eta, cplx mu_dir, double eps, int k,
                                            bool half_form, int grid = 0);

double commutator_defect(const SpacePtr& space, const TrigPoly& f, const TrigPoly& g);

}  // namespace hfq::torus
