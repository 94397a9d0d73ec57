#pragma once

// Federated protocols over in-process clients: one-shot sequential FedELMY,
// its few-shot ring and decentralized variants, and two baselines.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "seqfed/data.hpp"
#include "seqfed/model.hpp"
#include "seqfed/training.hpp"

namespace seqfed {

enum class Protocol {
  kFedElmyOneShot,
  kFedElmyFewShot,
  kFedElmyDecentralized,
  kFedSeq,
  kParallelAvg,
};

std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view name);

// Permutation of client indices 0..N-1.
class ClientOrder {
 public:
  // Throws unless `order` is a permutation of 0..size-1.
  explicit ClientOrder(std::vector<std::size_t> order);

  static ClientOrder identity(std::size_t n);
  static ClientOrder random(std::size_t n, std::uint64_t seed);

  std::size_t size() const noexcept { return order_.size(); }
  std::size_t operator[](std::size_t position) const { return order_[position]; }
  const std::vector<std::size_t>& indices() const noexcept { return order_; }

  friend bool operator==(const ClientOrder&, const ClientOrder&) = default;

 private:
  std::vector<std::size_t> order_;
};

struct OrderMode {
  bool random = true;
  std::uint64_t seed = 0;
  std::vector<std::size_t> fixed;
};

ClientOrder make_order(std::size_t n, const OrderMode& mode);

// Record of model transfers. Endpoint -1 is the aggregation server.
class CommLedger {
 public:
  static constexpr std::int64_t kServer = -1;

  explicit CommLedger(std::size_t bytes_per_param = 8) : bytes_per_param_(bytes_per_param) {}

  struct Event {
    std::int64_t from = 0;
    std::int64_t to = 0;
    std::size_t param_count = 0;
    std::size_t bytes = 0;

    friend bool operator==(const Event&, const Event&) = default;
  };

  void record(std::int64_t from, std::int64_t to, std::size_t param_count);

  const std::vector<Event>& events() const noexcept { return events_; }
  std::size_t bytes_per_param() const noexcept { return bytes_per_param_; }
  std::size_t total_bytes() const;

  // CSV: from,to,param_count,bytes with SERVER for the aggregator endpoint.
  void write_csv(std::ostream& os) const;

  friend bool operator==(const CommLedger&, const CommLedger&) = default;

 private:
  std::size_t bytes_per_param_;
  std::vector<Event> events_;
};

struct RunOptions {
  std::size_t bytes_per_param = 8;
  // Overrides the per-client training streams (indexed by client id). Empty
  // derives them from hp.seed.
  std::vector<std::uint64_t> client_seeds;
  // Lets the decentralized protocol train clients concurrently.
  bool parallel_clients = true;
};

struct RunResult {
  Protocol protocol = Protocol::kFedElmyOneShot;
  ParamVector final_model;
  double global_test_accuracy = 0.0;
  std::vector<TrainLog> logs;
  CommLedger ledger;
  std::size_t total_epochs = 0;
  // Every model a client handed on, in send order (sequential protocols).
  std::vector<ParamVector> handoffs;
  // Final pool of each client in the last round, by client id.
  std::vector<std::optional<ModelPool>> pools;
};

// Concatenated test rows of all clients.
Dataset global_test_set(std::span<const ClientDataset> clients);

RunResult run_one_shot_sfl(const ModelSpec& spec, std::span<const ClientDataset> clients,
                           const HyperParams& hp, const ClientOrder& order,
                           const RunOptions& options = {});

// hp.shots ring traversals in `order` (identity when omitted).
RunResult run_few_shot_sfl(const ModelSpec& spec, std::span<const ClientDataset> clients,
                           const HyperParams& hp, std::optional<ClientOrder> order = std::nullopt,
                           const RunOptions& options = {});

RunResult run_decentralized_pfl(const ModelSpec& spec, std::span<const ClientDataset> clients,
                                const HyperParams& hp, const RunOptions& options = {});

// Plain sequential training: each client trains one model from the one it
// received and passes it on. hp.shots > 1 repeats the pass over `order`.
RunResult run_fedseq_baseline(const ModelSpec& spec, std::span<const ClientDataset> clients,
                              const HyperParams& hp, const ClientOrder& order,
                              const RunOptions& options = {});

RunResult run_parallel_average_baseline(const ModelSpec& spec,
                                        std::span<const ClientDataset> clients,
                                        const HyperParams& hp, const RunOptions& options = {});

}  // namespace seqfed
