#include "hfq/asymptotics.hpp"

#include <cmath>
#include <map>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "hfq/errors.hpp"

namespace hfq::asymptotics {

namespace {

const std::vector<std::pair<Family, std::string>>& names() {
  static const std::vector<std::pair<Family, std::string>> n = {
      {Family::Functoriality, "functoriality"},         {Family::TransportVsFio, "transport_vs_fio"},
      {Family::CurvatureDecay, "curvature_decay"},      {Family::CurvatureNodecay, "curvature_nodecay"},
      {Family::CommutatorDecay, "commutator_decay"},    {Family::Schrodinger, "schrodinger"},
      {Family::Spectrum, "spectrum"},
  };
  return n;
}

enum class Kind { Number, Complex, Bool, Integer, String, Triple };

struct Param {
  Kind kind;
  std::vector<std::string> choices = {};
};

using Schema = std::map<std::string, Param>;

const Schema& schema(Family f) {
  static const std::map<Family, Schema> s = {
      {Family::Functoriality,
       {{"tau_a", {Kind::Complex}},
        {"tau_b", {Kind::Complex}},
        {"tau_c", {Kind::Complex}},
        {"half_form", {Kind::Bool}},
        {"random_triples", {Kind::Integer}}}},
      {Family::TransportVsFio,
       {{"from", {Kind::Complex}}, {"to", {Kind::Complex}}, {"constant", {Kind::Bool}}, {"half_form", {Kind::Bool}},
        {"min_steps", {Kind::Integer}}}},
      {Family::CurvatureDecay, {{"tau", {Kind::Complex}}, {"eta", {Kind::Complex}}, {"mu", {Kind::Complex}}, {"eps", {Kind::Number}}}},
      {Family::CurvatureNodecay,
       {{"tau", {Kind::Complex}}, {"eta", {Kind::Complex}}, {"mu", {Kind::Complex}}, {"eps", {Kind::Number}}}},
      {Family::CommutatorDecay,
       {{"tau", {Kind::Complex}},
        {"half_form", {Kind::Bool}},
        {"f", {Kind::String, {"cos_x", "cos_y"}}},
        {"g", {Kind::String, {"cos_x", "cos_y"}}}}},
      {Family::Schrodinger,
       {{"f", {Kind::Triple}}, {"t", {Kind::Number}}, {"mu", {Kind::Complex}}, {"cutoff", {Kind::Integer}}}},
      {Family::Spectrum, {{"mu", {Kind::Complex}}, {"cutoff", {Kind::Integer}}, {"corrected", {Kind::Bool}}}},
  };
  return s.at(f);
}

bool numeric_array(const nlohmann::json& v, std::size_t n) {
  if (!v.is_array() || v.size() != n) return false;
  for (const auto& x : v)
    if (!x.is_number()) return false;
  return true;
}

void check_param(const std::string& id, const std::string& key, const Param& p, const nlohmann::json& v) {
  bool ok = false;
  std::string want;
  switch (p.kind) {
    case Kind::Number: ok = v.is_number(); want = "a number"; break;
    case Kind::Complex: ok = numeric_array(v, 2); want = "[re, im]"; break;
    case Kind::Bool: ok = v.is_boolean(); want = "true or false"; break;
    case Kind::Integer: ok = v.is_number_integer(); want = "an integer"; break;
    case Kind::Triple: ok = numeric_array(v, 3); want = "[p, q, r]"; break;
    case Kind::String:
      ok = v.is_string() && std::set<std::string>(p.choices.begin(), p.choices.end()).count(v.get<std::string>());
      want = "one of";
      for (const auto& c : p.choices) want += " " + c;
      break;
  }
  if (!ok) throw ConfigError("experiment '" + id + "': params." + key + " must be " + want);
}

}  // namespace

std::string family_name(Family f) {
  for (const auto& [fam, n] : names())
    if (fam == f) return n;
  throw ValidationError("unknown family");
}

Family family_from_name(const std::string& s) {
  for (const auto& [fam, n] : names())
    if (n == s) return fam;
  throw ConfigError("unknown experiment family '" + s + "'");
}

const std::vector<Family>& all_families() {
  static const std::vector<Family> f = [] {
    std::vector<Family> v;
    for (const auto& p : names()) v.push_back(p.first);
    return v;
  }();
  return f;
}

std::vector<int> default_k_list(Family f) {
  if (f == Family::Schrodinger || f == Family::Spectrum) return {4, 8, 12, 16, 24, 32};
  return {8, 12, 16, 24, 32, 48, 64};
}

void validate(const Experiment& e) {
  if (e.id.empty()) throw ConfigError("experiment id must be non-empty");
  if (e.k_list.size() < 4) throw ConfigError("experiment '" + e.id + "': k_list needs at least 4 entries");
  for (std::size_t i = 0; i < e.k_list.size(); ++i) {
    if (e.k_list[i] < 1) throw ConfigError("experiment '" + e.id + "': k values must be positive");
    if (i > 0 && e.k_list[i] <= e.k_list[i - 1])
      throw ConfigError("experiment '" + e.id + "': k_list must be strictly increasing");
  }
  if (!e.params.is_object()) throw ConfigError("experiment '" + e.id + "': params must be an object");
  const Schema& s = schema(e.family);
  for (const auto& [key, v] : e.params.items()) {
    auto it = s.find(key);
    if (it == s.end())
      throw ConfigError("experiment '" + e.id + "': unknown parameter '" + key + "' for family " + family_name(e.family));
    check_param(e.id, key, it->second, v);
  }
}

RateFit fit_rate(const std::vector<int>& k, const std::vector<double>& defect) {
  if (k.size() != defect.size()) throw ValidationError("k and defect columns differ in length");
  RateFit fit;
  std::vector<double> x, y;
  bool all_floor = true;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double d = defect[i];
    if (!std::isfinite(d) || d < 0.0) throw ValidationError("defects must be finite and non-negative");
    if (k[i] < 1) throw ValidationError("k must be positive");
    if (d == 0.0) {
      fit.warnings.push_back("k=" + std::to_string(k[i]) + ": zero defect excluded");
      continue;
    }
    double v = d;
    if (v < kDefectFloor) {
      v = kDefectFloor;
      ++fit.floored;
    }
    if (v > kDefectFloor) all_floor = false;
    x.push_back(std::log(static_cast<double>(k[i])));
    y.push_back(std::log(v));
  }
  if (all_floor && k.size() >= 4) {
    fit.exact = true;
    fit.slope = -kInf;
    fit.intercept = std::log(kDefectFloor);
    fit.points = static_cast<int>(x.size());
    return fit;
  }
  const std::size_t n = x.size();
  if (n < 4) throw InsufficientData("fewer than 4 usable defects");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InsufficientData("k values do not vary");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ssr += r * r;
  }
  fit.residual_rms = std::sqrt(ssr / n);
  const boost::math::students_t dist(static_cast<double>(n - 2));
  fit.slope_ci_halfwidth = boost::math::quantile(boost::math::complement(dist, 0.025)) * std::sqrt(ssr / (n - 2) / sxx);
  fit.points = static_cast<int>(n);
  return fit;
}

RateFit fit_rate(const Table& t) {
  std::vector<int> k;
  std::vector<double> d;
  for (const Row& r : t.rows) {
    k.push_back(r.k);
    d.push_back(r.defect);
  }
  return fit_rate(k, d);
}

Claim default_claim(Family f) {
  Claim c;
  switch (f) {
    case Family::Functoriality:
    case Family::TransportVsFio:
      c.slope_lo = -1.4;
      c.slope_hi = -0.6;
      break;
    case Family::CurvatureDecay:
    case Family::Schrodinger:
      c.slope_hi = -0.6;
      break;
    case Family::CurvatureNodecay:
      c.slope_lo = -0.3;
      c.lower_bound = 1e-2;
      break;
    case Family::CommutatorDecay:
      c.slope_lo = -2.4;
      c.slope_hi = -1.6;
      break;
    case Family::Spectrum:
      c.upper_bound = 1e-6;
      break;
  }
  return c;
}

Verdict verdict(const RateFit& fit, const Claim& claim, const std::vector<double>& defects) {
  std::vector<std::string> why;
  if (claim.has_window()) {
    if (fit.exact) {
      if (claim.slope_lo > -kInf) why.push_back("exact defects but the slope window excludes -inf");
    } else {
      if (fit.slope < claim.slope_lo || fit.slope > claim.slope_hi) why.push_back("slope outside window");
      if (!(fit.residual_rms <= kMaxResidualRms)) why.push_back("residual_rms above 0.35");
    }
  }
  for (double d : defects) {
    if (claim.lower_bound && !(d >= *claim.lower_bound)) {
      why.push_back("defect below lower bound");
      break;
    }
  }
  for (double d : defects) {
    if (claim.upper_bound && !(d <= *claim.upper_bound)) {
      why.push_back("defect above upper bound");
      break;
    }
  }
  std::string reason = fit.exact ? "exact" : "fit";
  if (why.empty()) {
    reason += "; ok";
  } else {
    for (const auto& w : why) reason += "; " + w;
  }
  return {why.empty(), fit.exact, reason, fit, claim};
}

}  // namespace hfq::asymptotics
