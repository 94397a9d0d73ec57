#include "seqfed/protocols.hpp"

#include <algorithm>
#include <exception>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "seqfed/error.hpp"
#include "seqfed/seeding.hpp"

namespace seqfed {

namespace {

constexpr std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

void check_clients(const ModelSpec& spec, std::span<const ClientDataset> clients) {
  spec.validate();
  if (clients.empty()) throw Error(ErrorKind::kEmptyInput, "no clients");
  for (std::size_t i = 0; i < clients.size(); ++i) {
    if (clients[i].data.size() == 0 || clients[i].train.empty())
      throw Error(ErrorKind::kEmptyInput, "client " + std::to_string(i) + ": empty dataset");
    if (clients[i].data.dims() != spec.input_dim())
      throw_dimension_mismatch("client " + std::to_string(i) + " input_dim", spec.input_dim(),
                               clients[i].data.dims());
  }
}

std::uint64_t client_seed(const HyperParams& hp, const RunOptions& options, std::size_t client) {
  if (!options.client_seeds.empty()) {
    if (client >= options.client_seeds.size())
      throw Error(ErrorKind::kInvalidArgument, "client_seeds shorter than the client list");
    return options.client_seeds[client];
  }
  return derive_seed(hp.seed, {tag(StreamTag::kPoolTraining), client});
}

// Training stream of a client in a given round.
std::uint64_t round_stream(const HyperParams& hp, const RunOptions& options, std::size_t client,
                           std::size_t round) {
  return derive_seed(client_seed(hp, options, client), {round});
}

std::size_t count_epochs(const std::vector<TrainLog>& logs) {
  std::size_t n = 0;
  for (const auto& l : logs) n += l.epochs.size();
  return n;
}

void finish(RunResult& r, const ModelSpec& spec, std::span<const ClientDataset> clients) {
  r.total_epochs = count_epochs(r.logs);
  const Dataset test = global_test_set(clients);
  r.global_test_accuracy = evaluate_accuracy(spec, r.final_model, test);
}

void check_order(const ClientOrder& order, std::size_t n) {
  if (order.size() != n)
    throw_dimension_mismatch("client_order", n, order.size());
}

// Shared by one-shot (shots = 1) and few-shot.
RunResult run_ring(const ModelSpec& spec, std::span<const ClientDataset> clients,
                   const HyperParams& hp, const ClientOrder& order, std::size_t shots,
                   const RunOptions& options, Protocol protocol) {
  check_clients(spec, clients);
  check_order(order, clients.size());
  if (shots == 0) throw Error(ErrorKind::kInvalidArgument, "shots must be >= 1");
  const std::size_t n = clients.size();
  const std::size_t P = spec.param_count();

  RunResult r;
  r.protocol = protocol;
  r.ledger = CommLedger(options.bytes_per_param);
  r.pools.resize(n);

  const std::size_t first = order[0];
  TrainLog warm{"warmup", 0, first, 0, {}, 0};
  ParamVector current = warm_up(spec, init_params(spec, derive_seed(hp.seed, {tag(StreamTag::kModelInit)})),
                                clients[first], hp, derive_seed(hp.seed, {tag(StreamTag::kWarmup)}),
                                &warm);
  if (!warm.epochs.empty()) r.logs.push_back(std::move(warm));

  for (std::size_t round = 0; round < shots; ++round) {
    for (std::size_t pos = 0; pos < n; ++pos) {
      const std::size_t client = order[pos];
      auto result = train_client(spec, current, clients[client], hp,
                                 round_stream(hp, options, client, round), &r.logs, client, round);
      current = std::move(result.average);
      r.pools[client] = std::move(result.pool);
      const bool last = round + 1 == shots && pos + 1 == n;
      if (!last) {
        r.ledger.record(static_cast<std::int64_t>(client),
                        static_cast<std::int64_t>(order[(pos + 1) % n]), P);
        r.handoffs.push_back(current);
      }
    }
  }
  r.final_model = std::move(current);
  finish(r, spec, clients);
  return r;
}

HyperParams without_regularizers(HyperParams hp) {
  hp.regularizer.enable_d1 = false;
  hp.regularizer.enable_d2 = false;
  return hp;
}

}  // namespace

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::kFedElmyOneShot: return "fedelmy_oneshot";
    case Protocol::kFedElmyFewShot: return "fedelmy_fewshot";
    case Protocol::kFedElmyDecentralized: return "fedelmy_decentralized";
    case Protocol::kFedSeq: return "fedseq";
    case Protocol::kParallelAvg: return "parallel_avg";
  }
  return "unknown";
}

Protocol parse_protocol(std::string_view name) {
  for (auto p : {Protocol::kFedElmyOneShot, Protocol::kFedElmyFewShot,
                 Protocol::kFedElmyDecentralized, Protocol::kFedSeq, Protocol::kParallelAvg})
    if (to_string(p) == name) return p;
  throw Error(ErrorKind::kInvalidArgument, "unknown protocol '" + std::string(name) + "'");
}

ClientOrder::ClientOrder(std::vector<std::size_t> order) : order_(std::move(order)) {
  std::vector<bool> seen(order_.size(), false);
  for (auto i : order_) {
    if (i >= order_.size() || seen[i])
      throw Error(ErrorKind::kInvalidArgument, "client order is not a permutation of 0..N-1");
    seen[i] = true;
  }
}

ClientOrder ClientOrder::identity(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return ClientOrder(std::move(v));
}

ClientOrder ClientOrder::random(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {tag(StreamTag::kClientOrder)}));
  std::shuffle(v.begin(), v.end(), rng);
  return ClientOrder(std::move(v));
}

ClientOrder make_order(std::size_t n, const OrderMode& mode) {
  if (mode.random) return ClientOrder::random(n, mode.seed);
  if (mode.fixed.size() != n) throw_dimension_mismatch("client_order", n, mode.fixed.size());
  return ClientOrder(mode.fixed);
}

void CommLedger::record(std::int64_t from, std::int64_t to, std::size_t param_count) {
  events_.push_back({from, to, param_count, param_count * bytes_per_param_});
}

std::size_t CommLedger::total_bytes() const {
  std::size_t total = 0;
  for (const auto& e : events_) total += e.bytes;
  return total;
}

void CommLedger::write_csv(std::ostream& os) const {
  auto endpoint = [](std::int64_t id) { return id == kServer ? std::string("SERVER") : std::to_string(id); };
  os << "from,to,param_count,bytes\n";
  for (const auto& e : events_)
    os << endpoint(e.from) << ',' << endpoint(e.to) << ',' << e.param_count << ',' << e.bytes << '\n';
}

Dataset global_test_set(std::span<const ClientDataset> clients) {
  Dataset out;
  std::size_t rows = 0;
  for (const auto& c : clients) rows += c.test.size();
  if (rows == 0) throw Error(ErrorKind::kEmptyInput, "no client holds test data");
  out.class_count = 0;
  out.features = Matrix(rows, clients.front().data.dims());
  std::size_t r = 0;
  for (const auto& c : clients) {
    out.class_count = std::max(out.class_count, c.data.class_count);
    for (auto i : c.test) {
      const auto src = c.data.features.row(i);
      std::copy(src.begin(), src.end(), out.features.row(r++).begin());
      out.labels.push_back(c.data.labels[i]);
    }
  }
  return out;
}

RunResult run_one_shot_sfl(const ModelSpec& spec, std::span<const ClientDataset> clients,
                           const HyperParams& hp, const ClientOrder& order,
                           const RunOptions& options) {
  return run_ring(spec, clients, hp, order, 1, options, Protocol::kFedElmyOneShot);
}

RunResult run_few_shot_sfl(const ModelSpec& spec, std::span<const ClientDataset> clients,
                           const HyperParams& hp, std::optional<ClientOrder> order,
                           const RunOptions& options) {
  const ClientOrder o = order ? *order : ClientOrder::identity(clients.size());
  return run_ring(spec, clients, hp, o, hp.shots, options, Protocol::kFedElmyFewShot);
}

RunResult run_decentralized_pfl(const ModelSpec& spec, std::span<const ClientDataset> clients,
                                const HyperParams& hp, const RunOptions& options) {
  check_clients(spec, clients);
  const std::size_t n = clients.size();
  const std::size_t P = spec.param_count();

  RunResult r;
  r.protocol = Protocol::kFedElmyDecentralized;
  r.ledger = CommLedger(options.bytes_per_param);
  r.pools.resize(n);

  std::vector<std::vector<TrainLog>> logs(n);
  std::vector<ParamVector> averages(n);
  std::vector<std::exception_ptr> failures(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1) if (options.parallel_clients)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    const auto i = static_cast<std::size_t>(k);
    try {
      const std::uint64_t cs = client_seed(hp, options, i);
      TrainLog warm{"warmup", 0, i, 0, {}, 0};
      const ParamVector seed_model =
          warm_up(spec, init_params(spec, derive_seed(cs, {tag(StreamTag::kModelInit)})),
                  clients[i], hp, derive_seed(cs, {tag(StreamTag::kWarmup)}), &warm);
      if (!warm.epochs.empty()) logs[i].push_back(std::move(warm));
      auto result = train_client(spec, seed_model, clients[i], hp, derive_seed(cs, {0}), &logs[i],
                                 i, 0);
      averages[i] = std::move(result.average);
      r.pools[i] = std::move(result.pool);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  for (std::size_t i = 0; i < n; ++i) {
    for (auto& l : logs[i]) r.logs.push_back(std::move(l));
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) r.ledger.record(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j), P);
  }
  r.final_model = average_params(averages);
  finish(r, spec, clients);
  return r;
}

RunResult run_fedseq_baseline(const ModelSpec& spec, std::span<const ClientDataset> clients,
                              const HyperParams& hp, const ClientOrder& order,
                              const RunOptions& options) {
  check_clients(spec, clients);
  check_order(order, clients.size());
  const std::size_t n = clients.size();
  const HyperParams plain = without_regularizers(hp);

  RunResult r;
  r.protocol = Protocol::kFedSeq;
  r.ledger = CommLedger(options.bytes_per_param);
  r.pools.resize(n);

  ParamVector current = init_params(spec, derive_seed(hp.seed, {tag(StreamTag::kModelInit)}));
  const std::size_t rounds = hp.shots;
  for (std::size_t round = 0; round < rounds; ++round) {
    for (std::size_t pos = 0; pos < n; ++pos) {
      const std::size_t client = order[pos];
      const ModelPool received(current);
      TrainLog log{"pool", round, client, 1, {}, 0};
      // Stream matches the first pool model of the same client under FedELMY.
      current = train_pool_model(spec, current, received, clients[client], plain,
                                 derive_seed(round_stream(hp, options, client, round), {1}), &log);
      r.logs.push_back(std::move(log));
      if (round + 1 < rounds || pos + 1 < n) {
        r.ledger.record(static_cast<std::int64_t>(client),
                        static_cast<std::int64_t>(order[(pos + 1) % n]), spec.param_count());
        r.handoffs.push_back(current);
      }
    }
  }
  r.final_model = std::move(current);
  finish(r, spec, clients);
  return r;
}

RunResult run_parallel_average_baseline(const ModelSpec& spec,
                                        std::span<const ClientDataset> clients,
                                        const HyperParams& hp, const RunOptions& options) {
  check_clients(spec, clients);
  const std::size_t n = clients.size();
  const HyperParams plain = without_regularizers(hp);

  RunResult r;
  r.protocol = Protocol::kParallelAvg;
  r.ledger = CommLedger(options.bytes_per_param);
  r.pools.resize(n);

  const ParamVector init = init_params(spec, derive_seed(hp.seed, {tag(StreamTag::kModelInit)}));
  const ModelPool shared(init);
  std::vector<ParamVector> models;
  for (std::size_t i = 0; i < n; ++i) {
    TrainLog log{"pool", 0, i, 1, {}, 0};
    models.push_back(train_pool_model(spec, init, shared, clients[i], plain,
                                      derive_seed(round_stream(hp, options, i, 0), {1}), &log));
    r.logs.push_back(std::move(log));
    r.ledger.record(static_cast<std::int64_t>(i), CommLedger::kServer, spec.param_count());
  }
  r.final_model = average_params(models);
  finish(r, spec, clients);
  return r;
}

}  // namespace seqfed
