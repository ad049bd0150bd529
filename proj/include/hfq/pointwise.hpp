#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hfq::pointwise {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;

struct SymplecticSpace {
  int n;
  MatrixXd omega;

  explicit SymplecticSpace(int n);
  SymplecticSpace(int n, MatrixXd omega);
};

// Siegel-disk point relative to the standard structure
class ComplexStructure {
 public:
  explicit ComplexStructure(const MatrixXcd& mu);
  static ComplexStructure base(int n);
  static ComplexStructure scalar(cplx mu);

  const MatrixXcd& mu() const { return mu_; }
  int dim() const { return static_cast<int>(mu_.rows()); }
  bool same_as(const ComplexStructure& o, double tol = 1e-13) const;

 private:
  MatrixXcd mu_;
};

ComplexStructure random_structure(int n, std::mt19937_64& rng, double radius = 0.9);

// det(I - mu_y conj(mu_x)); every determinant below is built from this
cplx pairing_det(const ComplexStructure& x, const ComplexStructure& y);

cplx psi_factor(const ComplexStructure& a, const ComplexStructure& b);
cplx psi_factor(const ComplexStructure& a, const ComplexStructure& b, const SymplecticSpace& space);

double psi_adjoint_check(const ComplexStructure& a, const ComplexStructure& b);

struct ContinuedRoot {
  cplx value;
  int samples;
};

// square root of f(1) continued from the principal root of f(0)
ContinuedRoot continue_sqrt(const std::function<cplx(double)>& f, int samples = 64);

enum class Contraction { TowardFirst, TowardLast };

struct ZetaBranch {
  cplx zeta;
  cplx sqrt_zeta;
  int path_samples;
};

cplx zeta_value(const ComplexStructure& a, const ComplexStructure& b, const ComplexStructure& c);
ZetaBranch zeta(const ComplexStructure& a, const ComplexStructure& b, const ComplexStructure& c,
                Contraction path = Contraction::TowardFirst, int samples = 64);

struct ProjectionPair {
  MatrixXcd qbar;  // onto T^{0,1}_b along T^{1,0}_a
  MatrixXcd q;     // onto T^{1,0}_b along T^{0,1}_a
};

ProjectionPair projections(const ComplexStructure& a, const ComplexStructure& b);

struct DetHalfCheck {
  double squared;
  double branch;
};

DetHalfCheck det_half_identity(const ComplexStructure& a, const ComplexStructure& b,
                               const ComplexStructure& c);

struct HalfFormTriple {
  ComplexStructure j;
  cplx frame{1.0, 0.0};
};

struct HalfFormMorphism {
  HalfFormTriple source;
  HalfFormTriple target;
  cplx scalar;
};

// what scalar^2 must equal for a morphism source -> target
cplx morphism_square(const HalfFormTriple& source, const HalfFormTriple& target);

HalfFormMorphism make_morphism(const HalfFormTriple& source, const HalfFormTriple& target,
                               int sign = 1);
HalfFormMorphism identity_morphism(const HalfFormTriple& t);
double morphism_defect(const HalfFormMorphism& m);

HalfFormMorphism halfform_compose(const HalfFormMorphism& psi2, const HalfFormMorphism& psi1);
HalfFormMorphism halfform_adjoint(const HalfFormMorphism& psi);

cplx curvature_P_integrand(const MatrixXcd& eta, const MatrixXcd& mu);
// same 2-form evaluated at a general point of the disk
cplx curvature_P_integrand_at(const ComplexStructure& at, const MatrixXcd& eta, const MatrixXcd& mu);

struct IdentityLine {
  std::string name;
  double tolerance = 0.0;
  double worst = 0.0;
  int worst_trial = -1;
  std::vector<MatrixXcd> sample;  // mu of the structures at the worst trial
  bool pass() const { return worst <= tolerance; }
};

struct SuiteReport {
  std::vector<IdentityLine> lines;
  std::vector<int> dims;                 // per trial
  std::vector<std::vector<double>> per_trial;  // per trial, one defect per line
  bool pass() const;
};

// random triples and quadruples, dimension 1 + trial % max_dim
SuiteReport identity_suite(int trials, int max_dim, std::uint64_t seed);

}  // namespace hfq::pointwise
