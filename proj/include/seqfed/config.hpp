#pragma once

// Experiment configuration: a plain-text `key = value` document, one setting
// per line, `#` starts a comment. Keys are dotted paths (hp.alpha,
// data.partition, ...). Every key is optional except `protocol`.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seqfed/data.hpp"
#include "seqfed/model.hpp"
#include "seqfed/protocols.hpp"
#include "seqfed/training.hpp"

namespace seqfed {

enum class DataSource { kSynthetic, kIdx, kCsv };
enum class PartitionMode { kDirichlet, kDomainShift };

struct DataConfig {
  DataSource source = DataSource::kSynthetic;
  int classes = 10;
  std::size_t dims = 32;
  std::size_t samples_per_class = 400;
  double cluster_spread = 1.0;
  std::string idx_images;
  std::string idx_labels;
  std::string csv_path;
  PartitionMode partition = PartitionMode::kDirichlet;
  double dirichlet_beta = 0.5;
  double val_frac = 0.1;
  double test_frac = 0.2;
  // Label-skew only: false holds out a globally IID test pool, true gives
  // each client a test split drawn from its own skewed share.
  bool skewed_test = false;
  bool standardize = true;
  // Fixed data seed; unset means the data follows each run's seed.
  std::optional<std::uint64_t> seed;

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct ExperimentConfig {
  Protocol protocol = Protocol::kFedElmyOneShot;
  DataConfig data;
  std::vector<std::size_t> hidden{64};
  Activation activation = Activation::kRelu;
  HyperParams hp;
  bool random_order = true;
  std::vector<std::size_t> fixed_order;
  std::string output_dir = "results";
  std::size_t repeats = 1;
  std::size_t bytes_per_param = 8;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Throws Error(kConfig) whose message starts with the offending key path.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

// Constraint checks shared by parse_config and programmatic callers.
void validate_config(const ExperimentConfig& config);

// The data.* block plus hp.num_clients; equal fingerprints mean comparable runs.
std::string data_fingerprint(const ExperimentConfig& config);

}  // namespace seqfed
