#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "bargmann_oracles.hpp"
#include "hfq/asymptotics.hpp"
#include "hfq/bargmann.hpp"
#include "hfq/errors.hpp"
#include "hfq/experiments.hpp"
#include "hfq/pointwise.hpp"
#include "hfq/torus.hpp"
#include "torus_oracles.hpp"

namespace as = hfq::asymptotics;
namespace bg = hfq::bargmann;
namespace ex = hfq::experiments;
namespace pw = hfq::pointwise;
namespace tr = hfq::torus;
namespace fs = std::filesystem;
using cplx = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;
const cplx I1(0.0, 1.0);

int failures = 0;

void report(int n, bool pass, const std::string& what) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << n << ": " << what << std::endl;
  if (!pass) ++failures;
}

std::string sci(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fit_text(const as::Verdict& v) {
  return "slope=" + sci(v.fit.slope) + " rms=" + sci(v.fit.residual_rms) + " (" + v.reason + ")";
}

void pointwise_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  const pw::SuiteReport r = pw::identity_suite(500, 3, 42);
  const double dt = seconds_since(t0);
  std::string worst;
  for (const auto& l : r.lines) worst += " " + l.name + "=" + sci(l.worst);
  report(1, r.pass() && dt < 30.0, "500 trials n<=3 in " + sci(dt) + " s;" + worst);
}

void cross_model() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> re(-1.0, 1.0), im(0.5, 2.5);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const cplx a(re(rng), im(rng)), b(re(rng), im(rng)), c(re(rng), im(rng));
    const auto sa = tr::siegel(tr::TorusStructure(a)), sb = tr::siegel(tr::TorusStructure(b)),
               sc = tr::siegel(tr::TorusStructure(c));
    const cplx psi = torus_oracle::psi(a, b);
    const cplx zeta = torus_oracle::psi(a, c) / (psi * torus_oracle::psi(b, c));
    worst = std::max(worst, std::abs(psi - pw::psi_factor(sa, sb) * (I1 + a) / (I1 + b)) / std::abs(psi));
    worst = std::max(worst, std::abs(zeta - pw::zeta(sa, sb, sc).zeta) / std::abs(zeta));
    worst = std::max(worst, std::abs(zeta - tr::torus_zeta(a, b, c)) / std::abs(zeta));
  }
  report(2, worst <= 1e-10, "100 random pairs/triples, worst relative gap " + sci(worst));
}

void torus_dimensions() {
  bool ok = true;
  double cond = 0.0;
  for (cplx tau : {I1, 2.0 * I1, cplx(0.3, 1.2)})
    for (int k = 1; k <= 40; ++k)
      for (bool hf : {true, false}) {
        const tr::SpacePtr s = tr::quantum_space(k, tau, hf);
        ok = ok && s->basis.cols() == k;
        cond = std::max(cond, s->gram_cond);
      }
  report(3, ok && cond < 1e8, std::string("dim = k for k <= 40 at three tau: ") + (ok ? "yes" : "no") +
                                  ", worst gram condition " + sci(cond));
}

struct Evaluated {
  ex::Outcome outcome;
  double seconds;
};

const Evaluated& find(const std::vector<Evaluated>& all, const ex::RunConfig& c, const std::string& id) {
  for (std::size_t i = 0; i < c.experiments.size(); ++i)
    if (c.experiments[i].experiment.id == id) return all[i];
  throw std::runtime_error("config lacks experiment " + id);
}

double diagnostic(const as::Row& r, const std::string& name) {
  for (const auto& [n, v] : r.diagnostics)
    if (n == name) return v;
  return NAN;
}

void asymptotic_criteria(const ex::RunConfig& c, const std::vector<Evaluated>& all) {
  const Evaluated& fun = find(all, c, "functoriality");
  report(4, fun.outcome.verdict.pass && fun.seconds < 300.0,
         fit_text(fun.outcome.verdict) + ", " + sci(fun.seconds) + " s");

  const Evaluated& tv = find(all, c, "transport_vs_fio");
  double unit = 0.0;
  for (const auto& r : tv.outcome.table.rows) unit = std::max(unit, diagnostic(r, "unitarity_defect"));
  report(5, tv.outcome.verdict.pass && unit <= 1e-8,
         "i -> 2i " + fit_text(tv.outcome.verdict) + ", unitarity defect " + sci(unit));

  const as::Verdict& hf = find(all, c, "curvature_half_form").outcome.verdict;
  const as::Verdict& pl = find(all, c, "curvature_plain").outcome.verdict;
  double lowest = INFINITY;
  for (const auto& r : find(all, c, "curvature_plain").outcome.table.rows) lowest = std::min(lowest, r.defect);
  report(6, hf.pass && pl.pass,
         "half-form " + fit_text(hf) + "; plain " + fit_text(pl) + ", smallest plain defect " + sci(lowest));

  const as::Verdict& cm = find(all, c, "commutator").outcome.verdict;
  report(7, cm.pass && cm.fit.slope <= -1.6, "tau=0.3+1.2i " + fit_text(cm));
}

void spectrum_criterion(const ex::RunConfig& c, const std::vector<Evaluated>& all) {
  const Evaluated& sp = find(all, c, "spectrum");
  double corrected = 0.0;
  for (const auto& r : sp.outcome.table.rows) corrected = std::max(corrected, r.defect);
  // the uncorrected operator sits one half higher
  double plain = 0.0;
  for (int k : {4, 8, 16, 32}) {
    const bg::FockPtr s = bg::fock_space(k, 0.0, 48);
    const auto q = static_cast<double>(k) * bg::qm_op(s, bg::QuadraticHamiltonian::harmonic(), false).m;
    const Eigen::VectorXd e =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(bg::window_block(q, s->window())).eigenvalues();
    for (int n = 0; n < e.size(); ++n) plain = std::max(plain, std::abs(e(n) - (n + 1.0)));
  }
  const auto g = bargmann_oracle::grid(8.0, 0.08);
  const Eigen::VectorXd o = 8.0 * bargmann_oracle::spectrum(bargmann_oracle::compress(8, 0.0, {1, 0, 1}, 16, true, g));
  double oracle = 0.0;
  for (int n = 0; n < 6; ++n) oracle = std::max(oracle, std::abs(o(n) - (n + 0.5)));
  report(8, sp.outcome.verdict.pass && corrected <= 1e-6 && plain <= 1e-6 && oracle <= 1e-6,
         "|eig - (n+1/2)| <= " + sci(corrected) + ", uncorrected |eig - (n+1)| <= " + sci(plain) +
             ", quadrature oracle " + sci(oracle));
}

void double_cover() {
  const cplx sign = bg::rotation(2.0 * kPi).branch;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto symplectic = [&] {
    Eigen::Matrix2d s;
    do s << 1.0 + 0.5 * u(rng), 0.7 * u(rng), 0.7 * u(rng), 0.0;
    while (std::abs(s(0, 0)) < 0.3);
    s(1, 1) = (1.0 + s(0, 1) * s(1, 0)) / s(0, 0);
    return s;
  };
  auto element = [&](cplx base) {
    const Eigen::Matrix2d s = symplectic();
    const cplx root = std::sqrt(bg::line_factor(s, base));
    return bg::ExtensionElement{s, u(rng) < 0.0 ? root : -root, base};
  };
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const cplx base(0.4 * u(rng), 0.4 * u(rng));
    const auto a = element(base), b = element(base), c = element(base);
    const auto ab = bg::extension_compose(a, b);
    worst = std::max(worst, bg::extension_square_defect(ab));
    worst = std::max(worst, std::abs(bg::extension_compose(ab, c).branch -
                                     bg::extension_compose(a, bg::extension_compose(b, c)).branch));
  }
  const bool minus = std::abs(sign + 1.0) < 1e-12;
  report(9, minus && worst <= 1e-10, "2pi rotation branch " + sci(sign.real()) + (sign.imag() < 0 ? "" : "+") +
                                         sci(sign.imag()) + "i, group law defect " + sci(worst));
}

void schrodinger_criterion(const ex::RunConfig& c, const std::vector<Evaluated>& all) {
  const as::Verdict& v = find(all, c, "schrodinger").outcome.verdict;
  report(10, v.pass, "t=pi/3 harmonic oscillator " + fit_text(v));
}

void identity_criterion() {
  const bg::QuadraticHamiltonian f{1.0, 0.0, 0.0}, g{0.0, 0.0, 1.0};
  const bg::IdentityResidual coarse = bg::commutator_curvature_identity(16, f, g, 60, 0.1, 0.0, 256);
  const bg::IdentityResidual fine = bg::commutator_curvature_identity(16, f, g, 60, 0.05, 0.0, 1024);
  const bool below = coarse.residual < 10.0 * coarse.error_bar && fine.residual < 10.0 * fine.error_bar;
  const bool decreases = fine.residual < coarse.residual;
  const bool fixed = std::abs(fine.lhs_norm - coarse.lhs_norm) <= 1e-12 * coarse.lhs_norm &&
                     std::abs(fine.poisson_norm - coarse.poisson_norm) <= 1e-12 * coarse.poisson_norm;
  report(11, below && decreases && fixed,
         "k=16 residual " + sci(coarse.residual) + " -> " + sci(fine.residual) + " under eps and ODE refinement (" +
             (decreases ? "decreasing" : "not decreasing") + "), error bar " + sci(coarse.error_bar) + " -> " +
             sci(fine.error_bar) + " (below 10x: " + (below ? "yes" : "no") + "), Richardson error " +
             sci(coarse.richardson_error) + " -> " + sci(fine.richardson_error) + ", compared terms fixed: " +
             (fixed ? "yes" : "no"));
}

void determinism(const ex::RunConfig& c, const fs::path& first) {
  const fs::path second = fs::temp_directory_path() / "hfq_acceptance_second";
  fs::remove_all(second);
  const std::string cmd = std::string("\"") + HFQ_CLI + "\" run --config \"" + HFQ_CONFIG + "\" --out \"" +
                          second.string() + "\" > /dev/null";
  const int status = std::system(cmd.c_str());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::vector<std::string> files;
  for (const auto& e : c.experiments) files.push_back(e.experiment.id + ".csv");
  files.push_back("verdicts.csv");
  bool same = code == 0 || code == 1;
  int compared = 0;
  for (const auto& f : files) {
    const bool exists = fs::exists(first / f) && fs::exists(second / f);
    same = same && exists && slurp(first / f) == slurp(second / f);
    compared += exists;
  }
  report(12, same, "in-process run vs cli run: " + std::to_string(compared) + " csv files " +
                       (same ? "bit-identical" : "differ") + " (cli exit " + std::to_string(code) + ")");
}

}  // namespace

int main() {
  try {
    pointwise_suite();
    cross_model();
    torus_dimensions();

    const ex::RunConfig c = ex::load_config(HFQ_CONFIG);
    const as::RunOptions opt{c.parallelism, c.seed, 1};
    std::vector<Evaluated> all;
    std::vector<ex::Outcome> outcomes;
    for (const auto& e : c.experiments) {
      const auto t0 = std::chrono::steady_clock::now();
      ex::Outcome o = ex::evaluate(e, opt);
      all.push_back({o, seconds_since(t0)});
      outcomes.push_back(std::move(o));
    }
    const fs::path first = fs::temp_directory_path() / "hfq_acceptance_first";
    fs::remove_all(first);
    ex::write_results(c, outcomes, first);

    asymptotic_criteria(c, all);
    spectrum_criterion(c, all);
    double_cover();
    schrodinger_criterion(c, all);
    identity_criterion();
    determinism(c, first);
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
  return failures ? 1 : 0;
}
