#pragma once

// Experiment execution and persistence: builds client data from a config,
// runs the configured protocol for each repeat, and writes per-run JSON plus
// CSV aggregates.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "seqfed/config.hpp"
#include "seqfed/protocols.hpp"

namespace seqfed {

struct PreparedData {
  std::vector<ClientDataset> clients;
  ModelSpec spec;
};

// Loads or generates the dataset, partitions it across hp.num_clients
// clients, splits train/val/test and optionally standardizes features.
PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t seed);

// Runs config.protocol once with hp.seed replaced by `seed`.
RunResult run_protocol(const ExperimentConfig& config, const PreparedData& data,
                       std::uint64_t seed);

struct ReportRow {
  std::string protocol;
  std::uint64_t seed = 0;
  double global_test_accuracy = 0.0;
  std::size_t ledger_bytes = 0;
  std::size_t total_epochs = 0;
  double wall_time_s = 0.0;
};

struct ExperimentOutcome {
  std::vector<RunResult> results;
  std::vector<ReportRow> rows;
};

// Sample mean and standard deviation (n - 1); std is 0 for a single value.
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
MeanStd mean_std(std::span<const double> values);

// Document layout: see README ("Run result schema").
nlohmann::json run_result_to_json(const RunResult& result, const ExperimentConfig& config,
                                  std::uint64_t seed, double wall_time_s);

// Throws Error(kInvalidArgument) naming the first missing or mistyped field.
void validate_run_json(const nlohmann::json& doc);

// Repeats run with seeds hp.seed + k. Writes run_<protocol>_seed<seed>.json,
// runs.csv and summary.csv under config.output_dir. On failure the rows
// completed so far are written, the failed run is marked, and the error is
// rethrown.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

// Reads every run_*.json under the given directories and writes
// comparison.csv and plot_data.csv (protocol,metric,value) to `out_dir`.
// Throws if the runs were produced from different data configurations.
void emit_comparison(std::span<const std::filesystem::path> run_dirs,
                     const std::filesystem::path& out_dir);

// Per-client class histogram table for the configured partition.
std::string partition_preview(const ExperimentConfig& config);

}  // namespace seqfed
