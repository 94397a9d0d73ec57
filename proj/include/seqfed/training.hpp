#pragma once

// Local training: warm-up, one pool model with best-validation selection, and
// the per-client loop that grows a model pool.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seqfed/data.hpp"
#include "seqfed/diversity.hpp"
#include "seqfed/model.hpp"
#include "seqfed/optimizer.hpp"

namespace seqfed {

struct HyperParams {
  std::size_t num_clients = 10;
  std::size_t pool_models = 5;    // S
  std::size_t local_epochs = 200;  // E_local
  std::size_t warmup_epochs = 30;  // E_w
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::size_t batch_size = 32;
  std::size_t shots = 1;  // T; 1 is one-shot
  std::uint64_t seed = 0;
  // Return the epoch-end snapshot with the best validation accuracy; when off,
  // the last epoch's parameters.
  bool select_best_val = true;
  RegularizerConfig regularizer;

  // Throws Error(kConfig) naming the offending field as hp.<name>.
  void validate() const;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

struct EpochRecord {
  std::size_t epoch = 0;
  // Means over the epoch's mini-batches.
  double loss = 0.0;
  double d1_raw = 0.0;
  double d1_norm = 0.0;
  double d2_raw = 0.0;
  double d2_norm = 0.0;
  double total_loss = 0.0;
  double val_accuracy = 0.0;  // NaN for warm-up epochs

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

// One trained model's history. `model` is the pool slot it fills (0 for
// warm-up).
struct TrainLog {
  std::string phase;  // "warmup" or "pool"
  std::size_t round = 0;
  std::size_t client = 0;
  std::size_t model = 0;
  std::vector<EpochRecord> epochs;
  std::size_t selected_epoch = 0;
};

// Train rows visited in the order used for one epoch.
std::vector<std::size_t> epoch_order(std::span<const std::size_t> train, std::uint64_t seed);

// Seed of epoch `epoch` in a model's training stream.
std::uint64_t epoch_seed(std::uint64_t stream, std::size_t epoch);

// warmup_epochs of plain loss-only training on the train split.
ParamVector warm_up(const ModelSpec& spec, const ParamVector& params, const ClientDataset& data,
                    const HyperParams& hp, std::uint64_t stream, TrainLog* log = nullptr);

// local_epochs of mini-batch training on the regularized objective against
// `pool`, starting from `init` (normally pool_mean(pool)).
ParamVector train_pool_model(const ModelSpec& spec, const ParamVector& init,
                             const ModelPool& pool, const ClientDataset& data,
                             const HyperParams& hp, std::uint64_t stream,
                             TrainLog* log = nullptr);

struct ClientResult {
  ModelPool pool;
  ParamVector average;
};

// Seeds a pool with `seed_model`, trains pool_models models each initialized
// at the current pool mean, and returns the pool and its mean.
ClientResult train_client(const ModelSpec& spec, const ParamVector& seed_model,
                          const ClientDataset& data, const HyperParams& hp, std::uint64_t stream,
                          std::vector<TrainLog>* logs = nullptr, std::size_t client = 0,
                          std::size_t round = 0);

}  // namespace seqfed
