#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "hfq/asymptotics.hpp"
#include "hfq/errors.hpp"
#include "hfq/experiments.hpp"

using namespace hfq::asymptotics;
namespace ex = hfq::experiments;
namespace fs = std::filesystem;

namespace {

// least squares through Householder QR, independent of the closed-form normal equations
std::pair<double, double> ols(const std::vector<int>& k, const std::vector<double>& d) {
  Eigen::MatrixXd a(k.size(), 2);
  Eigen::VectorXd b(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = std::log(static_cast<double>(k[i]));
    b(i) = std::log(d[i]);
  }
  const Eigen::Vector2d x = a.householderQr().solve(b);
  return {x(1), x(0)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hfq_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Experiment experiment(Family f, std::vector<int> k, nlohmann::json params = nlohmann::json::object()) {
  return {family_name(f), f, std::move(params), std::move(k)};
}

const char* kSmallConfig = R"({
  "seed": 7,
  "experiments": [
    {"id": "fio_constant", "family": "transport_vs_fio", "k_list": [4, 6, 8, 10],
     "params": {"from": [0.3, 1.2], "constant": true}, "claim": {"slope_window": [null, null], "upper_bound": 1e-8}},
    {"id": "levels", "family": "spectrum", "k_list": [4, 6, 8, 10], "params": {"cutoff": 24}}
  ]
})";

}  // namespace

TEST_CASE("fit_rate is exact on power laws") {
  const std::vector<int> k = {8, 12, 16, 24, 32, 48, 64};
  std::vector<double> d1, d2;
  for (int v : k) {
    d1.push_back(3.0 / v);
    d2.push_back(5.0 / (double(v) * v));
  }
  const RateFit f1 = fit_rate(k, d1), f2 = fit_rate(k, d2);
  CHECK(std::abs(f1.slope + 1.0) < 1e-10);
  CHECK(std::abs(f1.intercept - std::log(3.0)) < 1e-10);
  CHECK(f1.residual_rms < 1e-12);
  CHECK(f1.slope_ci_halfwidth < 1e-10);
  CHECK(std::abs(f2.slope + 2.0) < 1e-10);
  CHECK(std::abs(f2.intercept - std::log(5.0)) < 1e-10);
  CHECK(!f1.exact);
  CHECK(f1.points == 7);
}

TEST_CASE("fit_rate detects non-decay") {
  std::vector<double> slopes;
  for (int scale : {1, 10, 100, 1000}) {
    const std::vector<int> k = {8 * scale, 16 * scale, 32 * scale, 64 * scale};
    std::vector<double> d;
    for (int v : k) d.push_back(2.0 + 1.0 / v);
    const RateFit f = fit_rate(k, d);
    const auto [slope, intercept] = ols(k, d);
    CHECK(std::abs(f.slope - slope) < 1e-10);
    CHECK(std::abs(f.intercept - intercept) < 1e-10);
    slopes.push_back(f.slope);
  }
  for (std::size_t i = 1; i < slopes.size(); ++i) CHECK(std::abs(slopes[i]) < std::abs(slopes[i - 1]));
  CHECK(std::abs(slopes.back()) < 1e-4);
}

TEST_CASE("slope confidence interval") {
  const std::vector<int> k = {8, 16, 32, 64};
  const std::vector<double> d = {0.11, 0.06, 0.024, 0.0135};
  const RateFit f = fit_rate(k, d);
  const auto [slope, intercept] = ols(k, d);
  CHECK(std::abs(f.slope - slope) < 1e-12);
  double ssr = 0.0, mx = 0.0, sxx = 0.0;
  for (int v : k) mx += std::log(double(v)) / 4.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double x = std::log(double(k[i])), r = std::log(d[i]) - intercept - slope * x;
    ssr += r * r;
    sxx += (x - mx) * (x - mx);
  }
  // Student t with 2 degrees of freedom has quantile (2a - 1) / sqrt(2a(1 - a))
  const double t975 = 0.95 / std::sqrt(2.0 * 0.975 * 0.025);
  CHECK(std::abs(f.slope_ci_halfwidth - t975 * std::sqrt(ssr / 2.0 / sxx)) < 1e-12);
  CHECK(std::abs(f.residual_rms - std::sqrt(ssr / 4.0)) < 1e-14);
}

TEST_CASE("fit_rate floors, exclusions and the exact sentinel") {
  const std::vector<int> k = {8, 16, 32, 64, 128};
  const RateFit z = fit_rate(k, {0.0, 0.0, 0.0, 0.0, 0.0});
  CHECK(z.exact);
  CHECK(z.warnings.size() == 5);
  const RateFit tiny = fit_rate(k, {1e-15, 3e-16, 0.0, 2e-14, 1e-13});
  CHECK(tiny.exact);
  CHECK(tiny.floored == 3);

  const RateFit one_zero = fit_rate(k, {0.1, 0.05, 0.0, 0.0125, 0.00625});
  CHECK(!one_zero.exact);
  CHECK(one_zero.points == 4);
  CHECK(one_zero.warnings.size() == 1);
  CHECK(std::abs(one_zero.slope + 1.0) < 1e-12);

  const RateFit floored = fit_rate(k, {1e-2, 1e-5, 1e-9, 1e-15, 1e-16});
  CHECK(floored.floored == 2);
  CHECK(!floored.exact);

  CHECK_THROWS_AS(fit_rate(k, {0.1, 0.0, 0.0, 0.1, 0.0}), hfq::InsufficientData);
  CHECK_THROWS_AS(fit_rate({8, 16, 32}, {0.1, 0.05, 0.02}), hfq::InsufficientData);
  CHECK_THROWS_AS(fit_rate(k, {0.1, 0.05, NAN, 0.01, 0.005}), hfq::ValidationError);
  CHECK_THROWS_AS(fit_rate(k, {0.1, 0.05}), hfq::ValidationError);
}

TEST_CASE("verdict examples") {
  Claim w;
  w.slope_lo = -1.4;
  w.slope_hi = -0.6;
  RateFit f;
  f.slope = -1.05;
  f.residual_rms = 0.1;
  CHECK(verdict(f, w).pass);
  f.slope = -0.2;
  CHECK(!verdict(f, w).pass);
  f.slope = -1.05;
  f.residual_rms = 0.36;
  CHECK(!verdict(f, w).pass);

  RateFit e;
  e.exact = true;
  e.slope = -kInf;
  Claim one_sided;
  one_sided.slope_hi = -0.6;
  const Verdict ve = verdict(e, one_sided);
  CHECK(ve.pass);
  CHECK(ve.exact);
  CHECK(!verdict(e, w).pass);
  CHECK(verdict(e, w).exact);

  Claim nodecay = default_claim(Family::CurvatureNodecay);
  RateFit flat;
  flat.slope = 0.01;
  flat.residual_rms = 0.01;
  CHECK(verdict(flat, nodecay, {0.9, 1.0, 1.0, 1.0}).pass);
  CHECK(!verdict(flat, nodecay, {0.9, 1.0, 1e-3, 1.0}).pass);

  Claim bound = default_claim(Family::Spectrum);
  CHECK(!bound.has_window());
  CHECK(verdict(e, bound, {1e-14, 1e-12}).pass);
  CHECK(!verdict(e, bound, {1e-14, 1e-5}).pass);
}

TEST_CASE("default claims follow the expected exponents") {
  CHECK(default_claim(Family::Functoriality).slope_lo == -1.4);
  CHECK(default_claim(Family::Functoriality).slope_hi == -0.6);
  CHECK(default_claim(Family::CommutatorDecay).slope_lo == -2.4);
  CHECK(default_claim(Family::CommutatorDecay).slope_hi == -1.6);
  CHECK(default_claim(Family::CurvatureDecay).slope_lo == -kInf);
  CHECK(default_claim(Family::Schrodinger).slope_hi == -0.6);
  CHECK(default_k_list(Family::Functoriality) == std::vector<int>{8, 12, 16, 24, 32, 48, 64});
  CHECK(default_k_list(Family::Spectrum) == std::vector<int>{4, 8, 12, 16, 24, 32});
  for (Family f : all_families()) CHECK(family_from_name(family_name(f)) == f);
  CHECK_THROWS_AS(family_from_name("nope"), hfq::ConfigError);
}

TEST_CASE("experiment validation") {
  CHECK_THROWS_AS(validate(experiment(Family::Spectrum, {4, 8, 12})), hfq::ConfigError);
  CHECK_THROWS_AS(validate(experiment(Family::Spectrum, {4, 8, 8, 12})), hfq::ConfigError);
  CHECK_THROWS_AS(validate(experiment(Family::Spectrum, {0, 8, 10, 12})), hfq::ConfigError);
  CHECK_THROWS_AS(validate(experiment(Family::Spectrum, {4, 8, 10, 12}, {{"tau", {0, 1}}})), hfq::ConfigError);
  CHECK_THROWS_AS(validate(experiment(Family::Spectrum, {4, 8, 10, 12}, {{"cutoff", 2.5}})), hfq::ConfigError);
  CHECK_THROWS_AS(validate(experiment(Family::CommutatorDecay, {4, 8, 10, 12}, {{"f", "sin_x"}})), hfq::ConfigError);
  CHECK_THROWS_AS(validate(experiment(Family::Schrodinger, {4, 8, 10, 12}, {{"f", {1, 0}}})), hfq::ConfigError);
  CHECK_NOTHROW(validate(experiment(Family::Schrodinger, {4, 8, 10, 12}, {{"f", {1, 0, 1}}, {"mu", {0.1, 0.2}}})));
}

TEST_CASE("run: transport along a constant path is the identity") {
  const Table t = run(experiment(Family::TransportVsFio, {4, 6, 8, 10}, {{"from", {0.3, 1.2}}, {"constant", true}}));
  REQUIRE(t.rows.size() == 4);
  for (const Row& r : t.rows) CHECK(r.defect <= 1e-8);
}

TEST_CASE("run: functoriality sweep") {
  const Table t = run(experiment(Family::Functoriality, {8, 12, 16, 24}));
  REQUIRE(t.rows.size() == 4);
  for (const Row& r : t.rows) {
    CHECK(r.defect > 0.0);
    // Heisenberg covariance makes the composition exact
    CHECK(r.defect < kDefectFloor);
    CHECK(r.diagnostics.at(0).first == "grid");
  }
}

TEST_CASE("run: the curvature without half-forms does not decay") {
  const Table t = run(experiment(Family::CurvatureNodecay, {4, 6, 8, 12}));
  REQUIRE(t.rows.size() == 4);
  for (const Row& r : t.rows) CHECK(r.defect > 0.5);
  const RateFit f = fit_rate(t);
  CHECK(std::abs(f.slope) < 0.05);
}

TEST_CASE("run: seeded random triples are reproducible") {
  const Experiment e = experiment(Family::Functoriality, {4, 6, 8, 10}, {{"random_triples", 3}});
  RunOptions a, b;
  a.seed = b.seed = 9;
  b.jobs = 3;
  const Table ta = run(e, a), tb = run(e, b);
  for (std::size_t i = 0; i < ta.rows.size(); ++i) {
    CHECK(ta.rows[i].k == tb.rows[i].k);
    CHECK(ta.rows[i].defect == tb.rows[i].defect);
    CHECK(ta.rows[i].diagnostics == tb.rows[i].diagnostics);
  }
}

TEST_CASE("run: model errors carry the failing k") {
  const Experiment e = experiment(Family::Spectrum, {4, 6, 8, 10}, {{"mu", {0.9, 0.0}}, {"cutoff", 40}});
  try {
    run(e);
    FAIL("expected a point error");
  } catch (const hfq::PointError& err) {
    CHECK(err.k == 4);
    CHECK(std::string(err.what()).find("k=4") == 0);
  }
}

TEST_CASE("run: refinement does not move the defects") {
  const std::vector<Experiment> es = {
      experiment(Family::CurvatureNodecay, {4, 6, 8, 10}),
      experiment(Family::CommutatorDecay, {8, 10, 12, 16}),
      experiment(Family::Schrodinger, {4, 6, 8, 10}),
      experiment(Family::Spectrum, {4, 6, 8, 10}, {{"cutoff", 24}}),
  };
  for (const Experiment& e : es) {
    RunOptions fine;
    fine.refine = 2;
    const Table a = run(e), b = run(e, fine);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      const double x = a.rows[i].defect, y = b.rows[i].defect;
      if (x <= kDefectFloor && y <= kDefectFloor) continue;
      CHECK(std::abs(x - y) < 0.1 * x);
    }
  }
}

TEST_CASE("config parsing") {
  const ex::RunConfig c = ex::parse_config(kSmallConfig);
  CHECK(c.seed == 7);
  CHECK(c.format == ex::Format::Csv);
  CHECK(c.output_dir == "results");
  REQUIRE(c.experiments.size() == 2);
  CHECK(c.experiments[0].claim.upper_bound == 1e-8);
  CHECK(!c.experiments[0].claim.has_window());
  CHECK(c.experiments[1].claim.upper_bound == 1e-6);

  const ex::RunConfig d = ex::parse_config(R"({"experiments": [{"id": "a", "family": "spectrum"}]})");
  CHECK(d.experiments[0].experiment.k_list == default_k_list(Family::Spectrum));

  auto fails = [](const std::string& text, const std::string& fragment) {
    try {
      ex::parse_config(text);
    } catch (const hfq::ConfigError& e) {
      const bool found = std::string(e.what()).find(fragment) != std::string::npos;
      if (!found) MESSAGE(e.what());
      return found;
    }
    return false;
  };
  CHECK(fails(R"({"experiments": []})", "empty"));
  CHECK(fails(R"({"experiments": [{"id": "a", "family": "spectrum"}], "colour": 1})", "unknown key 'colour'"));
  CHECK(fails(R"({"experiments": [{"id": "a", "family": "spectrum", "extra": 1}]})", "experiments[0]"));
  CHECK(fails(R"({"experiments": [{"id": "a", "family": "spectrum", "params": {"x": 1}}]})", "unknown parameter 'x'"));
  CHECK(fails(R"({"experiments": [{"id": "a", "family": "spectrum", "claim": {"window": 1}}]})", "experiments[0].claim"));
  CHECK(fails(R"({"experiments": [{"id": "a", "family": "bogus"}]})", "experiments[0].family"));
  CHECK(fails(R"({"experiments": [{"id": "a/b", "family": "spectrum"}]})", "experiments[0].id"));
  CHECK(fails(R"({"experiments": [{"id": "a", "family": "spectrum"}, {"id": "a", "family": "schrodinger"}]})", "duplicate"));
  CHECK(fails("{\n  \"experiments\": [\n    {\"id\": \"a\",, }\n  ]\n}", "line 3"));
  CHECK(fails(R"({"experiments": [{"id": "a", "family": "spectrum"}], "format": "xml"})", "format"));
  CHECK(fails(R"({"experiments": [{"id": "a", "family": "spectrum"}], "seed": -1})", "seed"));
}

TEST_CASE("config hash is stable and sensitive to the seed") {
  ex::RunConfig a = ex::parse_config(kSmallConfig), b = ex::parse_config(kSmallConfig);
  CHECK(ex::config_hash(a) == ex::config_hash(b));
  CHECK(ex::config_hash(a).size() == 16);
  b.output_dir = "elsewhere";
  b.parallelism = 4;
  CHECK(ex::config_hash(a) == ex::config_hash(b));
  b.seed = 8;
  CHECK(ex::config_hash(a) != ex::config_hash(b));
}

TEST_CASE("results round-trip through the writers and export") {
  const ex::RunConfig c = ex::parse_config(kSmallConfig);
  const RunOptions opt{1, c.seed, 1};
  std::vector<ex::Outcome> out;
  for (const auto& e : c.experiments) out.push_back(ex::evaluate(e, opt));
  CHECK(out[0].verdict.pass);
  CHECK(out[1].verdict.pass);

  const fs::path dir = scratch_dir("csv");
  const auto files = ex::write_results(c, out, dir);
  CHECK(files.size() == 4);
  const std::string csv = slurp(dir / "fio_constant.csv");
  CHECK(csv.rfind("k,defect,grid,steps,unitarity_defect,gram_cond\n", 0) == 0);
  CHECK(slurp(dir / "verdicts.csv").find("fio_constant,transport_vs_fio,true") != std::string::npos);

  // 17 significant digits survive a round trip
  std::istringstream lines(slurp(dir / "levels.csv"));
  std::string line;
  std::getline(lines, line);
  for (std::size_t i = 0; std::getline(lines, line); ++i) {
    const std::string cell = line.substr(line.find(',') + 1, line.find(',', line.find(',') + 1) - line.find(',') - 1);
    CHECK(std::stod(cell) == out[1].table.rows[i].defect);
  }

  const nlohmann::json m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["config_hash"] == ex::config_hash(c));
  CHECK(m["seed"] == 7);
  CHECK(m["tables"].size() == 2);

  const fs::path plot = dir / "plot.csv";
  ex::export_plot(dir / "levels.csv", plot);
  std::istringstream p(slurp(plot));
  std::getline(p, line);
  CHECK((line == "log10_k,log10_defect,fitted" || line == "log10_k,log10_defect,fitted,note"));
  int rows = 0;
  while (std::getline(p, line)) ++rows;
  CHECK(rows == 4);

  ex::RunConfig j = c;
  j.format = ex::Format::Json;
  const fs::path jdir = scratch_dir("json");
  ex::write_results(j, out, jdir);
  const nlohmann::json summary = nlohmann::json::parse(slurp(jdir / "verdicts.json"));
  CHECK(summary["verdicts"].size() == 2);
  CHECK(summary["verdicts"][0]["id"] == "fio_constant");
  CHECK(nlohmann::json::parse(slurp(jdir / "levels.json"))["rows"].size() == 4);
  ex::export_plot(jdir / "levels.json", jdir / "plot.csv");
}

TEST_CASE("export_plot contract") {
  const fs::path dir = scratch_dir("export");
  {
    std::ofstream(dir / "ok.csv") << "k,defect,grid\n8,0.125,32\n16,0.0625,64\n32,0.03125,128\n64,0.015625,256\n";
    std::ofstream(dir / "zero.csv") << "k,defect\n8,0.125\n16,0\n32,0.03125\n64,0.015625\n128,0.0078125\n";
    std::ofstream(dir / "nan.csv") << "k,defect\n8,0.125\n16,nan\n32,0.03125\n64,0.015625\n";
    std::ofstream(dir / "nocol.csv") << "k,value\n8,0.125\n16,0.1\n32,0.03125\n64,0.015625\n";
  }
  ex::export_plot(dir / "ok.csv", dir / "ok_plot.csv");
  std::istringstream ok(slurp(dir / "ok_plot.csv"));
  std::string line;
  std::getline(ok, line);
  CHECK(line == "log10_k,log10_defect,fitted");
  std::getline(ok, line);
  CHECK(std::count(line.begin(), line.end(), ',') == 2);
  const double lk = std::stod(line.substr(0, line.find(',')));
  CHECK(std::abs(lk - std::log10(8.0)) < 1e-15);
  const double fitted = std::stod(line.substr(line.rfind(',') + 1));
  CHECK(std::abs(fitted - std::log10(0.125)) < 1e-12);

  ex::export_plot(dir / "zero.csv", dir / "zero_plot.csv");
  const std::string z = slurp(dir / "zero_plot.csv");
  CHECK(z.rfind("log10_k,log10_defect,fitted,note\n", 0) == 0);
  CHECK(z.find(",-13,") != std::string::npos);
  CHECK(z.find("floored") != std::string::npos);
  CHECK(std::count(z.begin(), z.end(), '\n') == 6);

  CHECK_THROWS_AS(ex::export_plot(dir / "nan.csv", dir / "x.csv"), hfq::ValidationError);
  CHECK_THROWS_AS(ex::export_plot(dir / "nocol.csv", dir / "x.csv"), hfq::ValidationError);
  CHECK_THROWS_AS(ex::export_plot(dir / "missing.csv", dir / "x.csv"), hfq::ValidationError);
}
