#include <cmath>

#include "hfq/errors.hpp"
#include "hfq/pointwise.hpp"

namespace hfq::pointwise {

namespace {

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

void record(IdentityLine& line, double v, int trial, std::initializer_list<const ComplexStructure*> s) {
  if (std::isnan(v)) v = INFINITY;
  if (line.worst_trial >= 0 && v <= line.worst) return;
  line.worst = v;
  line.worst_trial = trial;
  line.sample.clear();
  for (const ComplexStructure* p : s) line.sample.push_back(p->mu());
}

}  // namespace

bool SuiteReport::pass() const {
  for (const auto& l : lines)
    if (!l.pass()) return false;
  return true;
}

SuiteReport identity_suite(int trials, int max_dim, std::uint64_t seed) {
  if (trials < 1) throw ValidationError("trials must be at least 1");
  if (max_dim < 1 || max_dim > 4) throw ValidationError("max_dim must lie in 1..4");
  SuiteReport rep;
  std::vector<IdentityLine>& out = rep.lines;
  for (const auto& [name, tol] : std::initializer_list<std::pair<const char*, double>>{
           {"cocycle", 1e-10}, {"cocycle_sqrt", 1e-10}, {"zeta_degenerate", 1e-12}, {"conjugation", 1e-10},
           {"sqrt_squared", 1e-10}, {"det_half_squared", 1e-8}, {"det_half_branch", 1e-8}}) {
    IdentityLine l;
    l.name = name;
    l.tolerance = tol;
    out.push_back(std::move(l));
  }
  std::mt19937_64 rng(seed);
  for (int t = 0; t < trials; ++t) {
    const int n = 1 + t % max_dim;
    const ComplexStructure a = random_structure(n, rng), b = random_structure(n, rng), c = random_structure(n, rng),
                           d = random_structure(n, rng);
    const ZetaBranch bcd = zeta(b, c, d), acd = zeta(a, c, d), abd = zeta(a, b, d), abc = zeta(a, b, c);
    const DetHalfCheck h = det_half_identity(a, b, c);
    const std::vector<double> v = {
        std::abs(bcd.zeta / acd.zeta * abd.zeta / abc.zeta - 1.0),
        std::abs(bcd.sqrt_zeta / acd.sqrt_zeta * abd.sqrt_zeta / abc.sqrt_zeta - 1.0),
        std::max(std::abs(zeta_value(a, b, b) - 1.0), std::abs(zeta_value(a, a, b) - 1.0)),
        rel(std::conj(abc.zeta), zeta_value(c, b, a)),
        rel(abc.sqrt_zeta * abc.sqrt_zeta, abc.zeta),
        h.squared,
        h.branch,
    };
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i < 2) {
        record(out[i], v[i], t, {&a, &b, &c, &d});
      } else if (i == 2) {
        record(out[i], v[i], t, {&a, &b});
      } else {
        record(out[i], v[i], t, {&a, &b, &c});
      }
    }
    rep.dims.push_back(n);
    rep.per_trial.push_back(v);
  }
  return rep;
}

}  // namespace hfq::pointwise
