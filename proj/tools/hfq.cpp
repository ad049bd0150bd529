#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hfq/errors.hpp"
#include "hfq/experiments.hpp"
#include "hfq/pointwise.hpp"

namespace ex = hfq::experiments;
namespace as = hfq::asymptotics;
namespace pw = hfq::pointwise;
namespace fs = std::filesystem;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;
constexpr const char* kOutEnv = "HFQ_OUT_DIR";

void dump_matrix(std::ostream& o, const Eigen::MatrixXcd& m) {
  o << "    [";
  for (int i = 0; i < m.rows(); ++i) {
    o << (i ? "; " : "");
    for (int j = 0; j < m.cols(); ++j)
      o << (j ? " " : "") << ex::format_double(m(i, j).real()) << (m(i, j).imag() < 0 ? "" : "+")
        << ex::format_double(m(i, j).imag()) << "i";
  }
  o << "]\n";
}

int verify_pointwise(int trials, int max_dim, std::uint64_t seed, const std::string& out_dir, ex::Format format) {
  if (trials < 1 || max_dim < 1 || max_dim > 4) {
    std::cerr << "usage error: need trials >= 1 and 1 <= max-dim <= 4\n";
    return kUsage;
  }
  const pw::SuiteReport rep = pw::identity_suite(trials, max_dim, seed);
  for (const auto& l : rep.lines) {
    std::cout << (l.pass() ? "PASS " : "FAIL ") << l.name << " worst=" << ex::format_double(l.worst)
              << " tol=" << ex::format_double(l.tolerance) << " trial=" << l.worst_trial << "\n";
    if (!l.pass()) {
      std::cerr << l.name << " violated at trial " << l.worst_trial << " (seed " << seed << ", max-dim " << max_dim
                << "); structures mu:\n";
      for (const auto& m : l.sample) dump_matrix(std::cerr, m);
    }
  }
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
      std::cerr << "cannot create " << out_dir << ": " << ec.message() << "\n";
      return kUsage;
    }
    const bool csv = format == ex::Format::Csv;
    std::ofstream o(fs::path(out_dir) / (csv ? "pointwise_report.csv" : "pointwise_report.json"), std::ios::binary);
    if (csv) {
      o << "trial,dim";
      for (const auto& l : rep.lines) o << ',' << l.name;
      o << '\n';
      for (std::size_t t = 0; t < rep.per_trial.size(); ++t) {
        o << t << ',' << rep.dims[t];
        for (double v : rep.per_trial[t]) o << ',' << ex::format_double(v);
        o << '\n';
      }
    } else {
      nlohmann::json j;
      j["seed"] = seed;
      j["rows"] = nlohmann::json::array();
      for (std::size_t t = 0; t < rep.per_trial.size(); ++t) {
        nlohmann::json r{{"trial", t}, {"dim", rep.dims[t]}};
        for (std::size_t i = 0; i < rep.lines.size(); ++i) r[rep.lines[i].name] = rep.per_trial[t][i];
        j["rows"].push_back(r);
      }
      o << j.dump(2) << '\n';
    }
  }
  std::cout << (rep.pass() ? "all identities within tolerance" : "identity violations found") << "\n";
  return rep.pass() ? kPass : kFail;
}

int run(const std::string& config, const std::optional<std::uint64_t>& seed, const std::string& out_flag,
        const std::optional<std::string>& format, const std::optional<int>& jobs) {
  ex::RunConfig c;
  try {
    c = ex::load_config(config);
  } catch (const hfq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  }
  if (seed) c.seed = *seed;
  if (format) c.format = *format == "json" ? ex::Format::Json : ex::Format::Csv;
  if (jobs) c.parallelism = *jobs;
  std::string out = c.output_dir;
  if (const char* env = std::getenv(kOutEnv); env && *env) out = env;
  if (!out_flag.empty()) out = out_flag;

  const as::RunOptions opt{c.parallelism, c.seed, 1};
  std::vector<ex::Outcome> results;
  bool all = true;
  for (const auto& e : c.experiments) {
    ex::Outcome o;
    try {
      o = ex::evaluate(e, opt);
    } catch (const hfq::ConfigError& err) {
      std::cerr << "config error: " << e.experiment.id << ": " << err.what() << "\n";
      return kUsage;
    } catch (const hfq::Error& err) {
      o.table = {e.experiment.id, e.experiment.family, {}};
      o.verdict = {false, false, std::string("error: ") + err.what(), {}, e.claim};
    }
    all = all && o.verdict.pass;
    std::cout << (o.verdict.pass ? "PASS " : "FAIL ") << e.experiment.id << " (" << as::family_name(e.experiment.family)
              << ") slope=" << ex::format_double(o.verdict.fit.slope) << " rms=" << ex::format_double(o.verdict.fit.residual_rms)
              << " " << o.verdict.reason << "\n";
    results.push_back(std::move(o));
  }
  try {
    for (const auto& p : ex::write_results(c, results, out)) std::cout << "wrote " << p.string() << "\n";
  } catch (const hfq::ConfigError& e) {
    std::cerr << "output error: " << e.what() << "\n";
    return kUsage;
  }
  return all ? kPass : kFail;
}

int export_plot(const std::string& in, const std::string& out) {
  try {
    ex::export_plot(in, out);
  } catch (const hfq::Error& e) {
    std::cerr << "export failed: " << e.what() << "\n";
    return kFail;
  }
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"half-form quantization laboratory"};
  app.require_subcommand(1);

  int trials = 500, max_dim = 3;
  std::uint64_t seed = 42;
  std::string out, config, format = "csv", table, plot_out;
  int jobs = 1;

  auto* vp = app.add_subcommand("verify-pointwise", "random identity suite for the pointwise algebra");
  vp->add_option("--trials", trials, "number of random trials");
  vp->add_option("--max-dim", max_dim, "largest complex dimension (at most 4)");
  vp->add_option("--seed", seed, "random seed");
  vp->add_option("--out", out, "directory for the per-trial report");
  vp->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  auto* rn = app.add_subcommand("run", "run the experiments of a config file");
  rn->add_option("--config", config, "config file")->required();
  auto* seed_opt = rn->add_option("--seed", seed, "override the config seed");
  rn->add_option("--out", out, "output directory (overrides " + std::string(kOutEnv) + " and the config)");
  auto* fmt_opt = rn->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  auto* jobs_opt = rn->add_option("--jobs", jobs, "parallel k-points")->check(CLI::PositiveNumber);

  auto* xp = app.add_subcommand("export-plot", "log-log columns for plotting");
  xp->add_option("table", table, "result table (csv or json)")->required();
  xp->add_option("out", plot_out, "output csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (*vp) return verify_pointwise(trials, max_dim, seed, out, format == "json" ? ex::Format::Json : ex::Format::Csv);
    if (*rn)
      return run(config, *seed_opt ? std::optional<std::uint64_t>(seed) : std::nullopt, out,
                 *fmt_opt ? std::optional<std::string>(format) : std::nullopt,
                 *jobs_opt ? std::optional<int>(jobs) : std::nullopt);
    if (*xp) return export_plot(table, plot_out);
  } catch (const hfq::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return kUsage;
}
