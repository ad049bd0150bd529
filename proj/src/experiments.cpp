#include "hfq/experiments.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "hfq/errors.hpp"

namespace hfq::experiments {

namespace {

using nlohmann::json;
namespace as = hfq::asymptotics;

const char* kVersion = "1.0.0";

std::string where(const std::string& path, const std::string& msg) { return path + ": " + msg; }

void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw ConfigError(where(path, "unknown key '" + k + "'"));
}

double bound(const json& v, const std::string& path, double unbounded) {
  if (v.is_null()) return unbounded;
  if (!v.is_number()) throw ConfigError(where(path, "must be a number or null"));
  return v.get<double>();
}

as::Claim parse_claim(const json& j, const std::string& path, as::Family f) {
  as::Claim c = as::default_claim(f);
  if (!j.is_object()) throw ConfigError(where(path, "must be an object"));
  only_keys(j, path, {"slope_window", "lower_bound", "upper_bound"});
  if (j.contains("slope_window")) {
    const json& w = j["slope_window"];
    if (!w.is_array() || w.size() != 2) throw ConfigError(where(path + ".slope_window", "must be [lo, hi]"));
    c.slope_lo = bound(w[0], path + ".slope_window[0]", -as::kInf);
    c.slope_hi = bound(w[1], path + ".slope_window[1]", as::kInf);
    if (c.slope_lo > c.slope_hi) throw ConfigError(where(path + ".slope_window", "lo must not exceed hi"));
  }
  for (const char* key : {"lower_bound", "upper_bound"}) {
    if (!j.contains(key)) continue;
    const json& v = j[key];
    std::optional<double> b;
    if (!v.is_null()) {
      if (!v.is_number()) throw ConfigError(where(path + "." + key, "must be a number or null"));
      b = v.get<double>();
    }
    (std::string(key) == "lower_bound" ? c.lower_bound : c.upper_bound) = b;
  }
  return c;
}

ConfiguredExperiment parse_experiment(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(where(path, "must be an object"));
  only_keys(j, path, {"id", "family", "k_list", "params", "claim"});
  if (!j.contains("id") || !j["id"].is_string()) throw ConfigError(where(path + ".id", "required string"));
  if (!j.contains("family") || !j["family"].is_string()) throw ConfigError(where(path + ".family", "required string"));
  as::Experiment e;
  e.id = j["id"].get<std::string>();
  if (!std::regex_match(e.id, std::regex("[A-Za-z0-9_.-]+")))
    throw ConfigError(where(path + ".id", "use letters, digits, '_', '-' or '.'"));
  try {
    e.family = as::family_from_name(j["family"].get<std::string>());
  } catch (const ConfigError& err) {
    throw ConfigError(where(path + ".family", err.what()));
  }
  e.k_list = as::default_k_list(e.family);
  if (j.contains("k_list")) {
    const json& k = j["k_list"];
    if (!k.is_array()) throw ConfigError(where(path + ".k_list", "must be an array of integers"));
    e.k_list.clear();
    for (const auto& v : k) {
      if (!v.is_number_integer()) throw ConfigError(where(path + ".k_list", "must be an array of integers"));
      e.k_list.push_back(v.get<int>());
    }
  }
  if (j.contains("params")) e.params = j["params"];
  try {
    as::validate(e);
  } catch (const ConfigError& err) {
    throw ConfigError(where(path, err.what()));
  }
  as::Claim c = as::default_claim(e.family);
  if (j.contains("claim")) c = parse_claim(j["claim"], path + ".claim", e.family);
  return {std::move(e), c};
}

json claim_json(const as::Claim& c) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  j["slope_window"] = json::array({num(c.slope_lo), num(c.slope_hi)});
  j["lower_bound"] = c.lower_bound ? json(*c.lower_bound) : json(nullptr);
  j["upper_bound"] = c.upper_bound ? json(*c.upper_bound) : json(nullptr);
  return j;
}

std::string extension(Format f) { return f == Format::Csv ? ".csv" : ".json"; }

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
  if (!out) throw ConfigError("cannot write " + p.string());
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string r = "\"";
  for (char ch : s) r += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return r + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ValidationError(what + ": '" + s + "' is not a number");
  }
  if (used != s.size() || std::isnan(v)) throw ValidationError(what + ": '" + s + "' is not a number");
  return v;
}

void read_table(const std::filesystem::path& p, std::vector<int>& k, std::vector<double>& d) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (p.extension() == ".json") {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("table is not valid JSON: ") + e.what());
    }
    if (!j.contains("rows") || !j["rows"].is_array()) throw ValidationError("table has no rows array");
    for (const auto& r : j["rows"]) {
      if (!r.contains("k") || !r["k"].is_number() || !r.contains("defect") || !r["defect"].is_number())
        throw ValidationError("row without numeric k and defect");
      k.push_back(r["k"].get<int>());
      d.push_back(r["defect"].get<double>());
    }
    return;
  }
  std::istringstream lines(text);
  std::string line;
  if (!std::getline(lines, line)) throw ValidationError("empty table");
  const std::vector<std::string> head = split_csv_line(line);
  int ck = -1, cd = -1;
  for (std::size_t i = 0; i < head.size(); ++i) {
    if (head[i] == "k") ck = static_cast<int>(i);
    if (head[i] == "defect") cd = static_cast<int>(i);
  }
  if (ck < 0 || cd < 0) throw ValidationError("table needs k and defect columns");
  int row = 1;
  while (std::getline(lines, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) <= std::max(ck, cd))
      throw ValidationError("row " + std::to_string(row) + ": missing columns");
    const double kv = parse_number(cells[ck], "row " + std::to_string(row) + " k");
    if (kv != std::floor(kv) || kv < 1) throw ValidationError("row " + std::to_string(row) + ": k must be a positive integer");
    k.push_back(static_cast<int>(kv));
    d.push_back(parse_number(cells[cd], "row " + std::to_string(row) + " defect"));
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  only_keys(j, "config", {"experiments", "output_dir", "seed", "format", "parallelism"});
  RunConfig c;
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) throw ConfigError("output_dir: must be a string");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed: must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("format")) {
    const json& f = j["format"];
    if (f == "csv") {
      c.format = Format::Csv;
    } else if (f == "json") {
      c.format = Format::Json;
    } else {
      throw ConfigError("format: must be \"csv\" or \"json\"");
    }
  }
  if (j.contains("parallelism")) {
    if (!j["parallelism"].is_number_integer() || j["parallelism"].get<int>() < 1)
      throw ConfigError("parallelism: must be a positive integer");
    c.parallelism = j["parallelism"].get<int>();
  }
  if (!j.contains("experiments") || !j["experiments"].is_array()) throw ConfigError("experiments: required array");
  if (j["experiments"].empty()) throw ConfigError("experiments: list is empty");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j["experiments"].size(); ++i) {
    const std::string path = "experiments[" + std::to_string(i) + "]";
    c.experiments.push_back(parse_experiment(j["experiments"][i], path));
    if (!ids.insert(c.experiments.back().experiment.id).second)
      throw ConfigError(where(path + ".id", "duplicate id '" + c.experiments.back().experiment.id + "'"));
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string canonical(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["format"] = c.format == Format::Csv ? "csv" : "json";
  j["experiments"] = json::array();
  for (const auto& ce : c.experiments) {
    json e;
    e["id"] = ce.experiment.id;
    e["family"] = as::family_name(ce.experiment.family);
    e["k_list"] = ce.experiment.k_list;
    e["params"] = ce.experiment.params;
    e["claim"] = claim_json(ce.claim);
    j["experiments"].push_back(e);
  }
  return j.dump();
}

std::string config_hash(const RunConfig& c) {
  // 64-bit FNV-1a
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : canonical(c)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Outcome evaluate(const ConfiguredExperiment& e, const as::RunOptions& opt) {
  as::Table t = as::run(e.experiment, opt);
  std::vector<double> d;
  for (const auto& r : t.rows) d.push_back(r.defect);
  as::RateFit fit;
  try {
    fit = as::fit_rate(t);
  } catch (const InsufficientData& err) {
    fit.warnings.push_back(err.what());
    if (e.claim.has_window())
      return {std::move(t), {false, false, std::string("insufficient data: ") + err.what(), fit, e.claim}};
  }
  as::Verdict v = as::verdict(fit, e.claim, d);
  return {std::move(t), std::move(v)};
}

std::string table_csv(const as::Table& t) {
  std::ostringstream out;
  out << "k,defect";
  if (!t.rows.empty())
    for (const auto& [name, v] : t.rows.front().diagnostics) out << ',' << name;
  out << '\n';
  for (const auto& r : t.rows) {
    out << r.k << ',' << format_double(r.defect);
    for (const auto& [name, v] : r.diagnostics) out << ',' << format_double(v);
    out << '\n';
  }
  return out.str();
}

json table_json(const as::Table& t) {
  json j;
  j["id"] = t.id;
  j["family"] = as::family_name(t.family);
  j["rows"] = json::array();
  for (const auto& r : t.rows) {
    json row;
    row["k"] = r.k;
    row["defect"] = r.defect;
    for (const auto& [name, v] : r.diagnostics) row[name] = std::isfinite(v) ? json(v) : json(nullptr);
    j["rows"].push_back(row);
  }
  return j;
}

std::vector<std::filesystem::path> write_results(const RunConfig& c, const std::vector<Outcome>& out,
                                                 const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> files;
  const std::string ext = extension(c.format);

  json summary = json::array();
  std::ostringstream csv;
  csv << "id,family,pass,exact,slope,intercept,residual_rms,slope_ci_halfwidth,points,floored,slope_lo,slope_hi,"
         "lower_bound,upper_bound,reason\n";
  for (const Outcome& o : out) {
    const std::filesystem::path p = dir / (o.table.id + ext);
    write_file(p, c.format == Format::Csv ? table_csv(o.table) : table_json(o.table).dump(2) + "\n");
    files.push_back(p);

    const as::Verdict& v = o.verdict;
    auto opt = [](const std::optional<double>& b) { return b ? format_double(*b) : std::string(); };
    csv << csv_cell(o.table.id) << ',' << as::family_name(o.table.family) << ',' << (v.pass ? "true" : "false") << ','
        << (v.exact ? "true" : "false") << ',' << format_double(v.fit.slope) << ',' << format_double(v.fit.intercept)
        << ',' << format_double(v.fit.residual_rms) << ',' << format_double(v.fit.slope_ci_halfwidth) << ','
        << v.fit.points << ',' << v.fit.floored << ',' << format_double(v.claim.slope_lo) << ','
        << format_double(v.claim.slope_hi) << ',' << opt(v.claim.lower_bound) << ',' << opt(v.claim.upper_bound) << ','
        << csv_cell(v.reason) << '\n';

    json r;
    r["id"] = o.table.id;
    r["family"] = as::family_name(o.table.family);
    r["pass"] = v.pass;
    r["exact"] = v.exact;
    auto num = [](double x) { return std::isfinite(x) ? json(x) : json(x > 0 ? "inf" : "-inf"); };
    r["slope"] = num(v.fit.slope);
    r["intercept"] = num(v.fit.intercept);
    r["residual_rms"] = v.fit.residual_rms;
    r["slope_ci_halfwidth"] = v.fit.slope_ci_halfwidth;
    r["points"] = v.fit.points;
    r["floored"] = v.fit.floored;
    r["warnings"] = v.fit.warnings;
    r["claim"] = claim_json(v.claim);
    r["reason"] = v.reason;
    summary.push_back(r);
  }
  const std::filesystem::path sp = dir / ("verdicts" + ext);
  write_file(sp, c.format == Format::Csv ? csv.str() : json{{"verdicts", summary}}.dump(2) + "\n");
  files.push_back(sp);

  json m;
  m["tool"] = "hfq";
  m["version"] = kVersion;
  m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  m["json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
              std::to_string(NLOHMANN_JSON_VERSION_PATCH);
#ifdef __VERSION__
  m["compiler"] = __VERSION__;
#endif
  m["config_hash"] = config_hash(c);
  m["seed"] = c.seed;
  m["format"] = c.format == Format::Csv ? "csv" : "json";
  m["summary"] = sp.filename().string();
  m["tables"] = json::array();
  for (const Outcome& o : out)
    m["tables"].push_back({{"id", o.table.id}, {"family", as::family_name(o.table.family)}, {"file", o.table.id + ext}});
  const std::filesystem::path mp = dir / "manifest.json";
  write_file(mp, m.dump(2) + "\n");
  files.push_back(mp);
  return files;
}

void export_plot(const std::filesystem::path& table, const std::filesystem::path& out) {
  std::vector<int> k;
  std::vector<double> d;
  read_table(table, k, d);
  if (k.empty()) throw ValidationError("table has no rows");
  const as::RateFit fit = as::fit_rate(k, d);
  bool any_floor = false;
  for (double v : d) any_floor |= v < as::kDefectFloor;
  std::ostringstream o;
  o << "log10_k,log10_defect,fitted" << (any_floor ? ",note" : "") << '\n';
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double lk = std::log10(static_cast<double>(k[i]));
    const bool floored = d[i] < as::kDefectFloor;
    const double ld = std::log10(floored ? as::kDefectFloor : d[i]);
    const double fitted =
        fit.exact ? std::log10(as::kDefectFloor) : (fit.intercept + fit.slope * std::log(static_cast<double>(k[i]))) / std::log(10.0);
    o << format_double(lk) << ',' << format_double(ld) << ',' << format_double(fitted);
    if (any_floor) o << ',' << (floored ? "floored" : "");
    o << '\n';
  }
  write_file(out, o.str());
}

}  // namespace hfq::experiments
