#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hfq/asymptotics.hpp"

namespace hfq::experiments {

enum class Format { Csv, Json };

struct ConfiguredExperiment {
  asymptotics::Experiment experiment;
  asymptotics::Claim claim;
};

struct RunConfig {
  std::vector<ConfiguredExperiment> experiments;
  std::string output_dir = "results";
  std::uint64_t seed = 42;
  Format format = Format::Csv;
  int parallelism = 1;
};

// ConfigError carries line or field diagnostics
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// canonical form of the parsed config, seed included
std::string canonical(const RunConfig& c);
std::string config_hash(const RunConfig& c);

struct Outcome {
  asymptotics::Table table;
  asymptotics::Verdict verdict;
};

Outcome evaluate(const ConfiguredExperiment& e, const asymptotics::RunOptions& opt);

std::string table_csv(const asymptotics::Table& t);
nlohmann::json table_json(const asymptotics::Table& t);

// one file per experiment, a verdicts summary and a manifest; returns the files written
std::vector<std::filesystem::path> write_results(const RunConfig& c, const std::vector<Outcome>& out,
                                                 const std::filesystem::path& dir);

// k/defect table (csv or json) -> log10 k, log10 defect, fitted line; a note column flags floored rows
void export_plot(const std::filesystem::path& table, const std::filesystem::path& out);

std::string format_double(double v);

}  // namespace hfq::experiments
