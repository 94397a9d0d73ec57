#include "seqfed/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "seqfed/error.hpp"
#include "seqfed/seeding.hpp"

namespace seqfed {

namespace {

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw Error(ErrorKind::kConfig, std::string(key) + ": " + what);
}

void require_splits(const ClientDataset& data, bool need_val) {
  if (data.train.empty()) throw Error(ErrorKind::kEmptyInput, "client train split is empty");
  if (need_val && data.val.empty())
    throw Error(ErrorKind::kEmptyInput, "client validation split is empty");
}

struct EpochSums {
  double loss = 0.0, d1_raw = 0.0, d1_norm = 0.0, d2_raw = 0.0, d2_norm = 0.0, total = 0.0;
  std::size_t batches = 0;

  EpochRecord finish(std::size_t epoch, double val_accuracy) const {
    const auto n = static_cast<double>(batches);
    return {epoch, loss / n, d1_raw / n, d1_norm / n, d2_raw / n, d2_norm / n, total / n,
            val_accuracy};
  }
};

// One pass over the train split. `pool` null means loss-only training.
EpochSums run_epoch(const ModelSpec& spec, ParamVector& params, Optimizer& opt,
                    const ModelPool* pool, const ClientDataset& data, const HyperParams& hp,
                    std::uint64_t seed) {
  const auto& cfg = hp.regularizer;
  const bool regularized = pool != nullptr && (cfg.enable_d1 || cfg.enable_d2);
  const auto order = epoch_order(data.train, seed);
  EpochSums sums;
  double fixed_s1 = 1.0;
  double fixed_s2 = 1.0;
  for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
    const std::size_t stop = std::min(order.size(), start + hp.batch_size);
    const Dataset chunk = gather(data.data, std::span(order).subspan(start, stop - start));
    const auto lg = backward(spec, params, Batch::of(chunk));

    double total = lg.loss;
    if (regularized) {
      RegularizerTerms terms;
      if (cfg.normalize_every_step || start == 0) {
        terms = evaluate_terms(params, *pool, cfg, lg.loss);
        fixed_s1 = terms.d1_scale;
        fixed_s2 = terms.d2_scale;
      } else {
        terms = evaluate_terms(params, *pool, cfg, fixed_s1, fixed_s2);
      }
      total = total_loss(lg.loss, terms.d1_normalized(), terms.d2_normalized(), cfg);
      sums.d1_raw += terms.d1_raw;
      sums.d1_norm += terms.d1_normalized();
      sums.d2_raw += terms.d2_raw;
      sums.d2_norm += terms.d2_normalized();
      opt.step(params, total_gradient(lg.grad, params, *pool, cfg, terms));
    } else {
      opt.step(params, lg.grad);
    }
    sums.loss += lg.loss;
    sums.total += total;
    ++sums.batches;
  }
  if (!params.all_finite())
    throw Error(ErrorKind::kInvalidArgument, "training diverged to non-finite parameters");
  return sums;
}

}  // namespace

void HyperParams::validate() const {
  require(num_clients >= 1, "hp.num_clients", "must be >= 1");
  require(pool_models >= 1, "hp.pool_models", "must be >= 1");
  require(local_epochs >= 1, "hp.local_epochs", "must be >= 1");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "hp.learning_rate",
          "must be finite and > 0");
  require(weight_decay >= 0.0, "hp.weight_decay", "must be >= 0");
  require(batch_size >= 1, "hp.batch_size", "must be >= 1");
  require(shots >= 1, "hp.shots", "must be >= 1");
  require(regularizer.alpha >= 0.0, "hp.alpha", "must be >= 0");
  require(regularizer.beta >= 0.0, "hp.beta", "must be >= 0");
  require(regularizer.epsilon > 0.0, "reg.epsilon", "must be > 0");
}

std::vector<std::size_t> epoch_order(std::span<const std::size_t> train, std::uint64_t seed) {
  std::vector<std::size_t> order(train.begin(), train.end());
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::uint64_t epoch_seed(std::uint64_t stream, std::size_t epoch) {
  return derive_seed(stream, {epoch});
}

ParamVector warm_up(const ModelSpec& spec, const ParamVector& params, const ClientDataset& data,
                    const HyperParams& hp, std::uint64_t stream, TrainLog* log) {
  if (hp.warmup_epochs == 0) return params;
  require_splits(data, false);
  ParamVector current = params;
  Optimizer opt(hp.optimizer, current.size(), hp.learning_rate, hp.weight_decay);
  for (std::size_t e = 0; e < hp.warmup_epochs; ++e) {
    const auto sums = run_epoch(spec, current, opt, nullptr, data, hp, epoch_seed(stream, e));
    if (log) log->epochs.push_back(sums.finish(e, std::numeric_limits<double>::quiet_NaN()));
  }
  if (log) log->selected_epoch = hp.warmup_epochs - 1;
  return current;
}

ParamVector train_pool_model(const ModelSpec& spec, const ParamVector& init,
                             const ModelPool& pool, const ClientDataset& data,
                             const HyperParams& hp, std::uint64_t stream, TrainLog* log) {
  require_splits(data, hp.select_best_val);
  if (init.size() != pool.width()) throw_dimension_mismatch("param_count", pool.width(), init.size());

  ParamVector current = init;
  ParamVector best = init;
  double best_acc = -1.0;
  std::size_t best_epoch = 0;
  Optimizer opt(hp.optimizer, current.size(), hp.learning_rate, hp.weight_decay);
  for (std::size_t e = 0; e < hp.local_epochs; ++e) {
    const auto sums = run_epoch(spec, current, opt, &pool, data, hp, epoch_seed(stream, e));
    const double acc = data.val.empty() ? std::numeric_limits<double>::quiet_NaN()
                                        : evaluate_accuracy(spec, current, data.data, data.val);
    if (log) log->epochs.push_back(sums.finish(e, acc));
    if (hp.select_best_val && acc > best_acc) {
      best_acc = acc;
      best = current;
      best_epoch = e;
    }
  }
  if (!hp.select_best_val) {
    best = std::move(current);
    best_epoch = hp.local_epochs - 1;
  }
  if (log) log->selected_epoch = best_epoch;
  return best;
}

ClientResult train_client(const ModelSpec& spec, const ParamVector& seed_model,
                          const ClientDataset& data, const HyperParams& hp, std::uint64_t stream,
                          std::vector<TrainLog>* logs, std::size_t client, std::size_t round) {
  ModelPool pool(seed_model);
  for (std::size_t j = 1; j <= hp.pool_models; ++j) {
    TrainLog log{"pool", round, client, j, {}, 0};
    const ParamVector init = pool_mean(pool);
    ParamVector trained = train_pool_model(spec, init, pool, data, hp, derive_seed(stream, {j}),
                                           logs ? &log : nullptr);
    pool.add(std::move(trained));
    if (logs) logs->push_back(std::move(log));
  }
  ParamVector average = pool_mean(pool);
  return {std::move(pool), std::move(average)};
}

}  // namespace seqfed
