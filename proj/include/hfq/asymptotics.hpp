#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace hfq::asymptotics {

enum class Family {
  Functoriality,
  TransportVsFio,
  CurvatureDecay,
  CurvatureNodecay,
  CommutatorDecay,
  Schrodinger,
  Spectrum,
};

std::string family_name(Family f);
Family family_from_name(const std::string& s);  // ConfigError on unknown names
const std::vector<Family>& all_families();

struct Experiment {
  std::string id;
  Family family;
  nlohmann::json params = nlohmann::json::object();
  std::vector<int> k_list;
};

std::vector<int> default_k_list(Family f);
// checks k_list and the parameter names and types of the family; ConfigError on failure
void validate(const Experiment& e);

struct Row {
  int k;
  double defect;
  std::vector<std::pair<std::string, double>> diagnostics;
};

struct Table {
  std::string id;
  Family family;
  std::vector<Row> rows;
};

struct RunOptions {
  int jobs = 1;
  std::uint64_t seed = 42;
  int refine = 1;  // multiplies quadrature grids and Fock cutoffs
};

Table run(const Experiment& e, const RunOptions& opt = {});

constexpr double kDefectFloor = 1e-13;

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  double slope_ci_halfwidth = 0.0;
  bool exact = false;  // every defect at or below the floor
  int points = 0;
  int floored = 0;
  std::vector<std::string> warnings;
};

RateFit fit_rate(const std::vector<int>& k, const std::vector<double>& defect);
RateFit fit_rate(const Table& t);

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxResidualRms = 0.35;

struct Claim {
  double slope_lo = -kInf;
  double slope_hi = kInf;
  std::optional<double> lower_bound;  // on every defect
  std::optional<double> upper_bound;
  bool has_window() const { return slope_lo > -kInf || slope_hi < kInf; }
};

Claim default_claim(Family f);

struct Verdict {
  bool pass;
  bool exact;
  std::string reason;
  RateFit fit;
  Claim claim;
};

Verdict verdict(const RateFit& fit, const Claim& claim, const std::vector<double>& defects = {});

}  // namespace hfq::asymptotics
