#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <numbers>
#include <random>
#include <thread>

#include "hfq/asymptotics.hpp"
#include "hfq/bargmann.hpp"
#include "hfq/errors.hpp"
#include "hfq/torus.hpp"

namespace hfq::asymptotics {

namespace {

using cplx = std::complex<double>;
using nlohmann::json;
namespace tr = hfq::torus;
namespace bg = hfq::bargmann;

constexpr int kMaxCutoff = 4096;

cplx complex_param(const json& p, const char* key, cplx fallback) {
  if (!p.contains(key)) return fallback;
  return {p[key][0].get<double>(), p[key][1].get<double>()};
}

template <class T>
T param(const json& p, const char* key, T fallback) {
  return p.contains(key) ? p[key].get<T>() : fallback;
}

tr::TrigPoly symbol(const std::string& name) { return name == "cos_x" ? tr::TrigPoly::cos_x() : tr::TrigPoly::cos_y(); }

double max_cond(std::initializer_list<tr::SpacePtr> s) {
  double c = 0.0;
  for (const auto& p : s) c = std::max(c, p->gram_cond);
  return c;
}

struct Triple {
  cplx a, b, c;
};

using Point = std::function<Row(int)>;

Point functoriality(const Experiment& e, const RunOptions& opt) {
  const json& p = e.params;
  const bool hf = param(p, "half_form", true);
  std::vector<Triple> triples;
  const int n_random = param(p, "random_triples", 0);
  if (n_random < 0) throw ConfigError("experiment '" + e.id + "': random_triples must be non-negative");
  if (n_random == 0) {
    triples.push_back({complex_param(p, "tau_a", {0.0, 1.0}), complex_param(p, "tau_b", {0.4, 1.5}),
                       complex_param(p, "tau_c", {-0.3, 0.8})});
  } else {
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> re(-0.5, 0.5), im(0.7, 2.0);
    for (int i = 0; i < n_random; ++i) triples.push_back({{re(rng), im(rng)}, {re(rng), im(rng)}, {re(rng), im(rng)}});
  }
  for (const Triple& t : triples)
    for (cplx tau : {t.a, t.b, t.c})
      if (!(tau.imag() > 0.0)) throw ConfigError("experiment '" + e.id + "': tau must lie in the upper half-plane");
  return [=](int k) {
    const int grid = tr::default_grid(k) * opt.refine;
    double defect = 0.0, cond = 0.0;
    for (const Triple& t : triples) {
      const tr::SpacePtr a = tr::quantum_space(k, t.a, hf, grid), b = tr::quantum_space(k, t.b, hf, grid),
                         c = tr::quantum_space(k, t.c, hf, grid);
      const cplx s1 = std::sqrt(tr::torus_psi_scalar(t.a, t.b)), s2 = std::sqrt(tr::torus_psi_scalar(t.b, t.c));
      const auto ja = tr::siegel(tr::TorusStructure(t.a)), jb = tr::siegel(tr::TorusStructure(t.b)),
                 jc = tr::siegel(tr::TorusStructure(t.c));
      const cplx s12 = pointwise::zeta(ja, jb, jc).sqrt_zeta * s2 * s1;
      const Eigen::MatrixXcd lhs = tr::fio_unitary(b, c, s2).m * tr::fio_unitary(a, b, s1).m;
      defect = std::max(defect, tr::opnorm(lhs - tr::fio_unitary(a, c, s12).m));
      cond = std::max(cond, max_cond({a, b, c}));
    }
    return Row{k, defect, {{"grid", double(grid)}, {"gram_cond", cond}}};
  };
}

Point transport_vs_fio(const Experiment& e, const RunOptions& opt) {
  const json& p = e.params;
  const cplx from = complex_param(p, "from", {0.0, 1.0}), to = complex_param(p, "to", {0.0, 2.0});
  const bool constant = param(p, "constant", false), hf = param(p, "half_form", true);
  const int min_steps = param(p, "min_steps", 256);
  if (!(from.imag() > 0.0) || !(to.imag() > 0.0))
    throw ConfigError("experiment '" + e.id + "': tau must lie in the upper half-plane");
  const tr::ModuliPath path = constant ? tr::ModuliPath::constant(from) : tr::ModuliPath::segment(from, to);
  return [=](int k) {
    const int grid = tr::default_grid(k) * opt.refine;
    const tr::Transport t = tr::transport(path, k, hf, grid, min_steps);
    const cplx s = tr::path_morphism_scalar(path);
    const double d = tr::opnorm(t.unitary.m - tr::fio_unitary(t.unitary.from, t.unitary.to, s).m);
    return Row{k,
               d,
               {{"grid", double(grid)},
                {"steps", double(t.steps)},
                {"unitarity_defect", t.unitarity_defect},
                {"gram_cond", max_cond({t.unitary.from, t.unitary.to})}}};
  };
}

Point curvature(const Experiment& e, const RunOptions& opt, bool half_form) {
  const json& p = e.params;
  const cplx tau = complex_param(p, "tau", {0.0, 1.0}), eta = complex_param(p, "eta", 1.0),
             mu = complex_param(p, "mu", {0.0, 1.0});
  const double eps = param(p, "eps", 0.1);
  if (!(tau.imag() > 0.0)) throw ConfigError("experiment '" + e.id + "': tau must lie in the upper half-plane");
  if (!(eps > 0.0)) throw ConfigError("experiment '" + e.id + "': eps must be positive");
  return [=](int k) {
    const int grid = tr::default_grid(k) * opt.refine;
    const tr::CurvatureEstimate c = tr::loop_curvature_richardson(tau, eta, mu, eps, k, half_form, grid);
    return Row{k, tr::opnorm(c.estimate), {{"grid", double(grid)}, {"richardson_error", c.error}}};
  };
}

Point commutator(const Experiment& e, const RunOptions& opt) {
  const json& p = e.params;
  const cplx tau = complex_param(p, "tau", {0.3, 1.2});
  const bool hf = param(p, "half_form", true);
  const tr::TrigPoly f = symbol(param<std::string>(p, "f", "cos_x")), g = symbol(param<std::string>(p, "g", "cos_y"));
  if (!(tau.imag() > 0.0)) throw ConfigError("experiment '" + e.id + "': tau must lie in the upper half-plane");
  return [=](int k) {
    const int grid = tr::default_grid(k) * opt.refine;
    const tr::SpacePtr s = tr::quantum_space(k, tau, hf, grid);
    return Row{k, tr::commutator_defect(s, f, g), {{"grid", double(grid)}, {"gram_cond", s->gram_cond}}};
  };
}

bg::QuadraticHamiltonian quadratic(const json& p) {
  if (!p.contains("f")) return bg::QuadraticHamiltonian::harmonic();
  return {p["f"][0].get<double>(), p["f"][1].get<double>(), p["f"][2].get<double>()};
}

Point schrodinger(const Experiment& e, const RunOptions& opt) {
  const json& p = e.params;
  const bg::QuadraticHamiltonian f = quadratic(p);
  const double t = param(p, "t", std::numbers::pi / 3.0);
  const cplx mu = complex_param(p, "mu", 0.0);
  const int cutoff = param(p, "cutoff", 40);
  if (cutoff < 8) throw ConfigError("experiment '" + e.id + "': cutoff must be at least 8");
  return [=](int k) {
    int d = cutoff * opt.refine;
    for (;;) {
      try {
        const bg::SchrodingerResult r = bg::schrodinger_detail(k, f, t, d, mu);
        return Row{k, r.defect, {{"cutoff", double(d)}, {"window", double(r.window)}, {"leak", r.leak}}};
      } catch (const CutoffError& err) {
        if (err.required <= d || err.required > kMaxCutoff) throw;
        d = err.required;
      }
    }
  };
}

Point spectrum(const Experiment& e, const RunOptions& opt) {
  const json& p = e.params;
  const cplx mu = complex_param(p, "mu", 0.0);
  const int cutoff = param(p, "cutoff", 48);
  const bool corrected = param(p, "corrected", true);
  if (cutoff < 8) throw ConfigError("experiment '" + e.id + "': cutoff must be at least 8");
  const double offset = corrected ? 0.5 : 1.0 + std::norm(mu) / (1.0 - std::norm(mu));
  return [=](int k) {
    const bg::FockPtr s = bg::fock_space(k, mu, cutoff * opt.refine);
    const Eigen::MatrixXcd q = static_cast<double>(k) * bg::qm_op(s, bg::QuadraticHamiltonian::harmonic(), corrected).m;
    const Eigen::VectorXd ev =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(bg::window_block(q, s->window())).eigenvalues();
    double d = 0.0;
    for (int n = 0; n < ev.size(); ++n) d = std::max(d, std::abs(ev(n) - (n + offset)));
    return Row{k, d, {{"cutoff", double(s->cutoff)}, {"window", double(s->window())}}};
  };
}

Point point_function(const Experiment& e, const RunOptions& opt) {
  switch (e.family) {
    case Family::Functoriality: return functoriality(e, opt);
    case Family::TransportVsFio: return transport_vs_fio(e, opt);
    case Family::CurvatureDecay: return curvature(e, opt, true);
    case Family::CurvatureNodecay: return curvature(e, opt, false);
    case Family::CommutatorDecay: return commutator(e, opt);
    case Family::Schrodinger: return schrodinger(e, opt);
    case Family::Spectrum: return spectrum(e, opt);
  }
  throw ValidationError("unknown family");
}

}  // namespace

Table run(const Experiment& e, const RunOptions& opt) {
  validate(e);
  if (opt.jobs < 1) throw ValidationError("jobs must be positive");
  if (opt.refine < 1) throw ValidationError("refine must be positive");
  const Point point = point_function(e, opt);

  const std::size_t n = e.k_list.size();
  std::vector<Row> rows(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        rows[i] = point(e.k_list[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(opt.jobs, static_cast<int>(n));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const PointError&) {
      throw;
    } catch (const std::exception& ex) {
      throw PointError(ex.what(), e.k_list[i]);
    }
  }
  return {e.id, e.family, std::move(rows)};
}

}  // namespace hfq::asymptotics
