#pragma once

#include <complex>
#include <functional>
#include <memory>

#include <Eigen/Dense>

namespace hfq::bargmann {

using cplx = std::complex<double>;
using Eigen::Matrix2cd;
using Eigen::Matrix2d;
using Eigen::MatrixXcd;
using Eigen::Vector2cd;
using Eigen::VectorXcd;

// L^2(C) with the level-k prequantum connection splits as H_b (x) H_c:
//   b  = sqrt(2/k) (d_z + k zbar/4),   c  = sqrt(2/k) nabla_zbar,
//   z  = sqrt(2/k) (b^+ + c),          zbar = sqrt(2/k) (b + c^+).
// Holomorphic sections for mu are H_b (x) xi_mu with (c + mu c^+) xi_mu = 0.

struct FockSpace {
  int k;
  cplx mu;
  int cutoff;
  MatrixXcd basis;  // b-mode coefficients, identity block
  int dim_eff;
  VectorXcd xi;  // normalized squeezed vacuum of the c-mode, levels 0..cutoff
  double tail;   // normalized mass of xi beyond the cutoff

  int window() const;  // levels 0..window() - 1 are away from the truncation edge
};

using FockPtr = std::shared_ptr<const FockSpace>;

FockPtr fock_space(int k, cplx mu, int cutoff);
int required_cutoff(cplx mu, double tail = 1e-10);

// unnormalized squeezed vacuum coefficients, holomorphic in mu
VectorXcd squeezed_vacuum(cplx mu, int levels);

MatrixXcd overlap(const FockSpace& a, const FockSpace& b);

// f(x, y) = (p x^2 + 2 q x y + r y^2) / 2
struct QuadraticHamiltonian {
  double p = 0.0, q = 0.0, r = 0.0;

  static QuadraticHamiltonian harmonic() { return {1.0, 0.0, 1.0}; }
  double operator()(double x, double y) const { return 0.5 * (p * x * x + 2.0 * q * x * y + r * y * y); }
  // X_f = (-f_y, f_x) = H v
  Matrix2d field() const;
  Matrix2d flow(double t) const;
};

QuadraticHamiltonian poisson(const QuadraticHamiltonian& f, const QuadraticHamiltonian& g);

// linear combination of (a, a^+) in each mode
struct ModeLinear {
  Vector2cd b = Vector2cd::Zero();
  Vector2cd c = Vector2cd::Zero();
};

// sum bb(i,j) b_i b_j + cc(i,j) c_i c_j + bc(i,j) b_i c_j + constant, with b_0 = b, b_1 = b^+
struct ModeQuadratic {
  Matrix2cd bb = Matrix2cd::Zero();
  Matrix2cd cc = Matrix2cd::Zero();
  Matrix2cd bc = Matrix2cd::Zero();
  cplx constant = 0.0;

  ModeQuadratic operator+(const ModeQuadratic& o) const;
  ModeQuadratic operator*(cplx s) const;
};

ModeQuadratic product(const ModeLinear& u, const ModeLinear& v);
ModeLinear coordinate_x(int k);
ModeLinear coordinate_y(int k);
ModeLinear covariant_x(int k);
ModeLinear covariant_y(int k);

// f + (1/ik) nabla_X
ModeQuadratic prequantum(const QuadraticHamiltonian& f, int k);
// (1,0) coefficient A of d<dz + mu dzbar, X>; D_X = A/2 on the half-form frame
cplx half_form_coefficient(const QuadraticHamiltonian& f, cplx mu);

// one-mode operator sum m(i,j) o_i o_j on levels 0..levels-1
MatrixXcd mode_matrix(const Matrix2cd& m, int levels);
cplx mode_expectation(const Matrix2cd& m, const VectorXcd& v);

struct OperatorMatrix {
  FockPtr from;
  FockPtr to;
  MatrixXcd m;
};

OperatorMatrix qm_op(const FockPtr& space, const QuadraticHamiltonian& f, bool corrected = true);

// moduli action of a linear symplectic map
void symplectic_ab(const Matrix2d& s, cplx& a, cplx& b);
cplx act(const Matrix2d& s, cplx mu);
cplx tangent(const QuadraticHamiltonian& f, cplx mu);

struct ExtensionElement {
  Matrix2d flow;
  cplx branch;
  cplx base = 0.0;
};

// branch^2 for a flow over the base structure
cplx line_factor(const Matrix2d& s, cplx base);
ExtensionElement extension_identity(cplx base = 0.0);
ExtensionElement extension_along(const std::function<Matrix2d(double)>& path, cplx base = 0.0, int samples = 256);
ExtensionElement rotation(double theta, cplx base = 0.0);
ExtensionElement extension_compose(const ExtensionElement& e1, const ExtensionElement& e2);
double extension_square_defect(const ExtensionElement& e);

struct SchrodingerResult {
  double defect;
  double leak;
  int window;  // leading levels compared
  cplx quantum_phase;    // exp(itk <c-part>) from Q^m
  cplx transport_phase;  // phase of <xi|e^{itkA_c}xi> beta_t
  ExtensionElement element;
};

SchrodingerResult schrodinger_detail(int k, const QuadraticHamiltonian& f, double t, int cutoff, cplx mu = 0.0);
double schrodinger_vs_transport(int k, const QuadraticHamiltonian& f, double t, int cutoff, cplx mu = 0.0);

// projected connection coefficient on the c-mode frame, per unit dmu
cplx connection_coefficient(cplx mu, cplx dmu, int cutoff, bool half_form);

struct CurvatureEstimate {
  cplx estimate;  // scalar; the curvature acts as estimate * identity
  double error;
  int steps;
};

cplx loop_holonomy_log(cplx center, cplx eta, cplx mu_dir, double eps, int cutoff, bool half_form, int min_steps,
                       int* steps_used = nullptr);
CurvatureEstimate loop_curvature_richardson(cplx center, cplx eta, cplx mu_dir, double eps, int cutoff,
                                            bool half_form, int min_steps = 256);

struct IdentityResidual {
  double residual;
  double error_bar;
  double richardson_error;
  double lhs_norm;
  double poisson_norm;
  cplx curvature;
};

IdentityResidual commutator_curvature_identity(int k, const QuadraticHamiltonian& f, const QuadraticHamiltonian& g,
                                               int cutoff, double eps, cplx mu = 0.0, int min_steps = 256);

// -A_{[X,Y]}/2 against the P-curvature integrand on the flow tangents
cplx dx_bracket_lhs(const QuadraticHamiltonian& f, const QuadraticHamiltonian& g, cplx mu);
cplx dx_bracket_rhs(const QuadraticHamiltonian& f, const QuadraticHamiltonian& g, cplx mu);

MatrixXcd window_block(const MatrixXcd& m, int window);

}  // namespace hfq::bargmann
