// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// if any criterion fails. Pass criterion numbers as arguments to run a subset.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "seqfed/diversity.hpp"
#include "seqfed/error.hpp"
#include "seqfed/experiment.hpp"
#include "seqfed/protocols.hpp"
#include "seqfed/seeding.hpp"

using namespace seqfed;
namespace fs = std::filesystem;

namespace {

constexpr double kGradTol = 1e-5;
constexpr double kTotalGradTol = 1e-4;
constexpr double kOracleTol = 1e-12;
constexpr int kSeeds = 5;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double x, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << x;
  return os.str();
}

Dataset random_dataset(std::size_t n, std::size_t dims, int classes, std::mt19937_64& rng) {
  Dataset ds;
  ds.class_count = classes;
  ds.features = Matrix(n, dims);
  ds.features.data = oracle::random_vec(n * dims, rng);
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(int(rng() % std::uint64_t(classes)));
  return ds;
}

std::vector<oracle::Vec> rows_of(const Dataset& ds) {
  std::vector<oracle::Vec> rows;
  for (std::size_t r = 0; r < ds.size(); ++r)
    rows.emplace_back(ds.features.row(r).begin(), ds.features.row(r).end());
  return rows;
}

ModelPool pool_of(const std::vector<oracle::Vec>& members) {
  ModelPool pool{ParamVector(members.front())};
  for (std::size_t i = 1; i < members.size(); ++i) pool.add(ParamVector(members[i]));
  return pool;
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// 1. Gradient fidelity.
Outcome gradient_fidelity() {
  std::mt19937_64 rng(101);
  const std::vector<std::vector<std::size_t>> specs{{2, 2}, {3, 5, 2}, {4, 8, 3}};
  double worst = 0.0;
  for (auto act : {Activation::kTanh, Activation::kRelu})
    for (const auto& sizes : specs) {
      const ModelSpec spec{sizes, act};
      for (int point = 0; point < 20; ++point) {
        const auto ds = random_dataset(5, sizes.front(), int(sizes.back()), rng);
        const ParamVector params(oracle::random_vec(spec.param_count(), rng));
        const auto lg = backward(spec, params, Batch::of(ds));
        const auto fd = oracle::finite_difference(
            [&](const oracle::Vec& p) {
              return oracle::extended_cross_entropy(
                  oracle::naive_forward(sizes, act == Activation::kRelu, p, rows_of(ds)), ds.labels);
            },
            params.values());
        worst = std::max(worst, oracle::max_relative_error(lg.grad.values(), fd));
      }
    }

  // Full objective at points where the power-of-ten factors are locally constant.
  const std::vector<std::size_t> sizes{3, 4, 3};
  const ModelSpec spec{sizes, Activation::kTanh};
  double worst_total = 0.0;
  int checked = 0;
  for (int trial = 0; checked < 20 && trial < 500; ++trial) {
    const auto ds = random_dataset(6, 3, 3, rng);
    const auto rows = rows_of(ds);
    std::vector<oracle::Vec> members;
    for (int k = 0; k < 3; ++k) members.push_back(oracle::random_vec(spec.param_count(), rng, -3, 3));
    const auto pool = pool_of(members);
    const auto theta = oracle::random_vec(spec.param_count(), rng);
    RegularizerConfig cfg;
    cfg.alpha = 1.0;
    cfg.beta = 1.0;
    const auto lg = backward(spec, ParamVector(theta), Batch::of(ds));
    const auto terms = evaluate_terms(ParamVector(theta), pool, cfg, lg.loss);
    const auto loss_at = [&](const oracle::Vec& p) {
      return oracle::extended_cross_entropy(oracle::naive_forward(sizes, false, p, rows), ds.labels);
    };
    bool stable = true;
    for (std::size_t i = 0; i < theta.size() && stable; ++i)
      for (double h : {-1e-5, 1e-5}) {
        auto p = theta;
        p[i] += h;
        const double ell = loss_at(p);
        stable = stable && magnitude_scale(oracle::brute_d1(p, members), ell) == terms.d1_scale &&
                 magnitude_scale(oracle::brute_l2(p, members[0]), ell) == terms.d2_scale;
      }
    if (!stable) continue;
    ++checked;
    const auto fd = oracle::finite_difference(
        [&](const oracle::Vec& p) {
          return loss_at(p) - cfg.alpha * terms.d1_scale * oracle::brute_d1(p, members) +
                 cfg.beta * terms.d2_scale * oracle::brute_l2(p, members[0]);
        },
        theta);
    const auto got = total_gradient(lg.grad, ParamVector(theta), pool, cfg, lg.loss);
    worst_total = std::max(worst_total, oracle::max_relative_error(got.values(), fd));
  }
  return {worst < kGradTol && checked == 20 && worst_total < kTotalGradTol,
          "loss grad max rel err " + num(worst) + " < " + num(kGradTol) + " over 120 points; total grad " +
              num(worst_total) + " < " + num(kTotalGradTol) + " over " + std::to_string(checked) +
              " scale-stable points"};
}

// 2. Regularizer oracles.
Outcome regularizer_oracles() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  bool symmetric = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t width = 10 + rng() % 50;
    const std::size_t count = 1 + rng() % 8;
    std::vector<oracle::Vec> members;
    for (std::size_t k = 0; k < count; ++k) members.push_back(oracle::random_vec(width, rng));
    const auto pool = pool_of(members);
    const auto cur = oracle::random_vec(width, rng);
    worst = std::max(worst, rel_err(distance_d1(ParamVector(cur), pool), oracle::brute_d1(cur, members)));
    worst = std::max(worst, rel_err(distance_d2(ParamVector(cur), pool), oracle::brute_l2(cur, members[0])));
    const auto mean = pool_mean(pool);
    const auto want = oracle::brute_mean(members);
    for (std::size_t i = 0; i < width; ++i) worst = std::max(worst, rel_err(mean[i], want[i]));
    const auto m = pool_pairwise_distances(pool);
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = 0; j < count; ++j) {
        worst = std::max(worst, rel_err(m(i, j), i == j ? 0.0 : oracle::brute_l2(members[i], members[j])));
        symmetric = symmetric && m(i, j) == m(j, i) && m(i, i) == 0.0;
      }
  }
  const double example = magnitude_normalize(45.0, 6.02);
  return {worst < kOracleTol && symmetric && example == 0.45,
          "max rel err " + num(worst) + " < " + num(kOracleTol) + " over 100 instances; (45, 6.02) -> " +
              num(example, 17)};
}

std::vector<ClientDataset> tiny_clients(std::size_t n, std::size_t dims, int classes) {
  std::vector<ClientDataset> out;
  for (std::size_t i = 0; i < n; ++i) {
    SyntheticSpec s{classes, dims, 10, 0.3, 300 + i};
    ClientDataset c;
    c.data = gen_synthetic_classification(s);
    std::vector<std::size_t> all(c.data.size());
    for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
    auto split = train_val_test_split(all, 0.2, 0.2, i);
    c.train = split.train;
    c.val = split.val;
    c.test = split.test;
    out.push_back(std::move(c));
  }
  return out;
}

HyperParams tiny_hp() {
  HyperParams hp;
  hp.pool_models = 1;
  hp.local_epochs = 1;
  hp.warmup_epochs = 0;
  hp.learning_rate = 1e-2;
  hp.batch_size = 16;
  hp.seed = 3;
  return hp;
}

// 3. Protocol accounting.
Outcome protocol_accounting() {
  const ModelSpec spec{{4, 5, 3}, Activation::kRelu};
  std::string bad;
  for (std::size_t n : {1, 2, 4, 10}) {
    const auto clients = tiny_clients(n, 4, 3);
    const auto order = ClientOrder::random(n, 1);
    const auto hp = tiny_hp();
    const auto expect = [&](const char* what, std::size_t got, std::size_t want) {
      if (got != want)
        bad += std::string(what) + " N=" + std::to_string(n) + ": " + std::to_string(got) + " != " +
               std::to_string(want) + "; ";
    };
    expect("one-shot", run_one_shot_sfl(spec, clients, hp, order).ledger.events().size(), n - 1);
    expect("fedseq", run_fedseq_baseline(spec, clients, hp, order).ledger.events().size(), n - 1);
    expect("decentralized", run_decentralized_pfl(spec, clients, hp).ledger.events().size(), n * (n - 1));
    expect("parallel-average", run_parallel_average_baseline(spec, clients, hp).ledger.events().size(), n);
    for (std::size_t t : {1, 2, 3}) {
      auto few = hp;
      few.shots = t;
      expect("few-shot", run_few_shot_sfl(spec, clients, few, order).ledger.events().size(), t * n - 1);
    }
  }
  const ModelSpec small{{2, 2}, Activation::kRelu};
  RunOptions opts;
  opts.bytes_per_param = 46'200'000 / small.param_count();
  const auto r = run_one_shot_sfl(small, tiny_clients(10, 2, 2), tiny_hp(), ClientOrder::identity(10), opts);
  const std::size_t model_bytes = small.param_count() * opts.bytes_per_param;
  const bool mb_ok = model_bytes == 46'200'000 && r.ledger.total_bytes() == 415'800'000;
  return {bad.empty() && mb_ok,
          (bad.empty() ? std::string("all counts exact for N in {1,2,4,10}, T in {1,2,3}") : bad) +
              "; M = " + num(double(model_bytes) / 1e6) + " MB, N=10 sequential total = " +
              num(double(r.ledger.total_bytes()) / 1e6) + " MB"};
}

// 4. Structural invariants.
Outcome structural_invariants() {
  const ModelSpec spec{{4, 6, 3}, Activation::kTanh};
  const auto clients = tiny_clients(4, 4, 3);
  HyperParams hp = tiny_hp();
  hp.pool_models = 3;
  hp.local_epochs = 5;
  hp.warmup_epochs = 2;
  hp.regularizer.alpha = hp.regularizer.beta = 1.0;
  const auto order = ClientOrder::random(4, 8);
  std::string bad;

  const auto one = run_one_shot_sfl(spec, clients, hp, order);
  for (std::size_t pos = 0; pos < 4; ++pos) {
    const auto& pool = *one.pools[order[pos]];
    if (pool.size() != hp.pool_models + 1) bad += "pool size; ";
    if (pos > 0 && !(pool.seed() == one.handoffs[pos - 1])) bad += "seed not preserved; ";
  }
  auto dec_hp = hp;
  const auto dec = run_decentralized_pfl(spec, clients, dec_hp);
  for (const auto& p : dec.pools)
    if (p->size() != hp.pool_models + 1) bad += "decentralized pool size; ";

  auto t1 = hp;
  t1.shots = 1;
  const auto few = run_few_shot_sfl(spec, clients, t1, order);
  if (!(few.final_model == one.final_model && few.handoffs == one.handoffs && few.ledger == one.ledger))
    bad += "few-shot T=1 differs from one-shot; ";

  const auto again = run_one_shot_sfl(spec, clients, hp, order);
  bool same_logs = again.logs.size() == one.logs.size();
  for (std::size_t i = 0; same_logs && i < one.logs.size(); ++i)
    for (std::size_t e = 0; same_logs && e < one.logs[i].epochs.size(); ++e)
      same_logs = one.logs[i].epochs[e].total_loss == again.logs[i].epochs[e].total_loss;
  if (!(again.final_model == one.final_model && same_logs)) bad += "rerun not deterministic; ";
  const auto dec_again = run_decentralized_pfl(spec, clients, dec_hp);
  if (!(dec_again.final_model == dec.final_model)) bad += "decentralized rerun not deterministic; ";

  return {bad.empty(), bad.empty() ? "pool size S+1, seed preserved at index 0, T=1 == one-shot bitwise, "
                                     "reruns bitwise identical"
                                   : bad};
}

// Shared setup for the directional criteria.
ExperimentConfig directional_config() {
  ExperimentConfig c;
  c.data.classes = 10;
  c.data.dims = 32;
  c.data.samples_per_class = 400;
  c.data.cluster_spread = 0.25;
  c.data.dirichlet_beta = 0.5;
  c.hidden = {64};
  c.hp.num_clients = 5;
  c.hp.pool_models = 3;
  c.hp.local_epochs = 30;
  c.hp.warmup_epochs = 30;
  c.hp.regularizer.alpha = 1.0;
  c.hp.regularizer.beta = 1.0;
  return c;
}

struct Variant {
  double mean = 0.0;
  std::vector<double> accuracy;
  double seconds = 0.0;
};

Variant run_variant(const std::function<void(ExperimentConfig&)>& adjust) {
  Variant v;
  Timer t;
  for (int s = 0; s < kSeeds; ++s) {
    auto c = directional_config();
    adjust(c);
    const auto data = prepare_data(c, std::uint64_t(s));
    v.accuracy.push_back(run_protocol(c, data, std::uint64_t(s)).global_test_accuracy);
  }
  for (double a : v.accuracy) v.mean += a;
  v.mean /= kSeeds;
  v.seconds = t.seconds();
  return v;
}

std::map<std::string, Variant>& directional_cache() {
  static std::map<std::string, Variant> cache;
  return cache;
}

const Variant& variant(const std::string& name) {
  auto& cache = directional_cache();
  if (auto it = cache.find(name); it != cache.end()) return it->second;
  std::function<void(ExperimentConfig&)> adjust;
  if (name == "fedelmy") adjust = [](ExperimentConfig& c) { c.protocol = Protocol::kFedElmyOneShot; };
  if (name == "fedseq") adjust = [](ExperimentConfig& c) { c.protocol = Protocol::kFedSeq; };
  if (name == "parallel_avg") adjust = [](ExperimentConfig& c) { c.protocol = Protocol::kParallelAvg; };
  if (name == "pool_only")
    adjust = [](ExperimentConfig& c) {
      c.protocol = Protocol::kFedElmyOneShot;
      c.hp.regularizer.enable_d1 = c.hp.regularizer.enable_d2 = false;
    };
  if (name == "few_t1")
    adjust = [](ExperimentConfig& c) {
      c.protocol = Protocol::kFedElmyFewShot;
      c.hp.shots = 1;
    };
  if (name == "few_t3")
    adjust = [](ExperimentConfig& c) {
      c.protocol = Protocol::kFedElmyFewShot;
      c.hp.shots = 3;
    };
  return cache.emplace(name, run_variant(adjust)).first->second;
}

std::string means(std::initializer_list<const char*> names) {
  std::string out;
  for (const char* n : names) out += std::string(out.empty() ? "" : ", ") + n + " " + num(variant(n).mean);
  return out;
}

// 5. FedELMY > FedSeq > parallel average on means.
Outcome directional_baselines() {
  const double e = variant("fedelmy").mean, s = variant("fedseq").mean, p = variant("parallel_avg").mean;
  return {e > s && s > p && e > p, "means over " + std::to_string(kSeeds) + " seeds: " +
                                      means({"fedelmy", "fedseq", "parallel_avg"})};
}

// 6. Full regularized objective >= pool only.
Outcome directional_ablation() {
  return {variant("fedelmy").mean >= variant("pool_only").mean,
          "means over " + std::to_string(kSeeds) + " seeds: " + means({"fedelmy", "pool_only"})};
}

// 7. Few-shot T=3 >= T=1.
Outcome directional_few_shot() {
  return {variant("few_t3").mean >= variant("few_t1").mean,
          "means over " + std::to_string(kSeeds) + " seeds: " + means({"few_t3", "few_t1"})};
}

bool is_partition(const std::vector<std::vector<std::size_t>>& parts, std::size_t n, std::size_t covered) {
  std::vector<int> seen(n, 0);
  std::size_t total = 0;
  for (const auto& p : parts)
    for (auto i : p) {
      if (i >= n || seen[i]++) return false;
      ++total;
    }
  return total == covered;
}

// 8. Partitioner properties.
Outcome partitioner_properties() {
  std::mt19937_64 rng(808);
  int failures = 0;
  const double betas[] = {0.05, 0.1, 0.5, 1.0, 10.0};
  for (int trial = 0; trial < 200; ++trial) {
    const SyntheticSpec s{2 + int(rng() % 9), 4, 5 + rng() % 40, 1.0, rng()};
    const auto ds = gen_synthetic_classification(s);
    const std::size_t n = 1 + rng() % 10;
    const auto parts = dirichlet_label_partition(ds, n, betas[rng() % 5], rng());
    if (!is_partition(parts, ds.size(), ds.size())) ++failures;
    // Domain slices must each hold every class, so draw feasible sizes.
    const SyntheticSpec ds_spec{2 + int(rng() % 9), 4, 30 + rng() % 30, 1.0, rng()};
    const auto dd = gen_synthetic_classification(ds_spec);
    const std::size_t m = 2 + rng() % 5;
    if (!is_partition(domain_shift_slices(dd, m, rng()), dd.size(), (dd.size() / m) * m)) ++failures;
    std::vector<std::size_t> idx(20 + rng() % 200);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const auto sp = train_val_test_split(idx, 0.1, 0.2, rng());
    if (!is_partition({sp.train, sp.val, sp.test}, idx.size(), idx.size())) ++failures;
  }

  const auto big = gen_synthetic_classification({10, 8, 400, 1.0, 1});
  double skew_share = 0.0;
  int skew_clients = 0;
  bool uniform = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (auto row : class_histogram(big, dirichlet_label_partition(big, 10, 0.1, seed))) {
      std::sort(row.rbegin(), row.rend());
      double total = 0.0;
      for (auto c : row) total += double(c);
      skew_share += double(row[0] + row[1]) / total;
      ++skew_clients;
    }
    for (const auto& row : class_histogram(big, dirichlet_label_partition(big, 5, 1000.0, seed)))
      for (auto c : row) uniform = uniform && c >= 64 && c <= 96;
  }
  skew_share /= skew_clients;
  return {failures == 0 && skew_share > 0.6 && uniform,
          std::to_string(failures) + " conservation failures over 200 instances; beta=0.1 top-2 class share " +
              num(skew_share) + " > 0.6; beta=1000 per-class counts within 80 +-20%: " +
              (uniform ? "yes" : "no")};
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

std::vector<unsigned char> be32(std::initializer_list<std::uint32_t> words) {
  std::vector<unsigned char> b;
  for (auto w : words)
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<unsigned char>(w >> s));
  return b;
}

// 9. IDX ingestion.
Outcome idx_ingestion() {
  const fs::path dir = fs::temp_directory_path() / ("seqfed_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto images = be32({0x803, 2, 2, 2});
  for (unsigned char px : {0, 255, 128, 64, 255, 0, 1, 254}) images.push_back(px);
  auto labels = be32({0x801, 2});
  labels.push_back(1);
  labels.push_back(0);
  write_bytes(dir / "images", images);
  write_bytes(dir / "labels", labels);
  auto bad_magic = labels;
  bad_magic[3] = 0x03;
  write_bytes(dir / "bad_labels", bad_magic);

  const std::vector<double> want{0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0, 1.0, 0.0, 1.0 / 255.0, 254.0 / 255.0};
  const auto ds = load_idx(dir / "images", dir / "labels");
  const bool exact = ds.features.rows == 2 && ds.features.cols == 4 && ds.features.data == want &&
                     ds.labels == std::vector<int>{1, 0} && ds.class_count == 2;
  std::string error = "none";
  try {
    load_idx(dir / "images", dir / "bad_labels");
  } catch (const Error& e) {
    error = std::string(to_string(e.kind()));
  }
  fs::remove_all(dir);
  return {exact && error == "idx_magic_mismatch",
          std::string("2x2x2 fixture ") + (exact ? "round-trips exactly" : "MISMATCH") +
              "; corrupted magic -> " + error};
}

struct Criterion {
  int id;
  const char* title;
  double limit_s;
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  const Criterion criteria[] = {
      {1, "gradient fidelity", 10, gradient_fidelity},
      {2, "regularizer oracles", 5, regularizer_oracles},
      {3, "protocol accounting", 5, protocol_accounting},
      {4, "structural invariants", 120, structural_invariants},
      {5, "directional: FedELMY > FedSeq > parallel average", 600, directional_baselines},
      {6, "directional: pool + d1 + d2 >= pool only", 600, directional_ablation},
      {7, "directional: few-shot T=3 >= T=1", 900, directional_few_shot},
      {8, "partitioner properties", 10, partitioner_properties},
      {9, "IDX ingestion", 1, idx_ingestion},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    Timer timer;
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    // Directional criteria share runs; charge each the time of the runs it reads.
    double seconds = timer.seconds();
    if (c.id == 5) seconds = variant("fedelmy").seconds + variant("fedseq").seconds + variant("parallel_avg").seconds;
    if (c.id == 6) seconds = variant("fedelmy").seconds + variant("pool_only").seconds;
    if (c.id == 7) seconds = variant("few_t3").seconds + variant("few_t1").seconds;
    const bool in_time = seconds < c.limit_s;
    const bool pass = out.pass && in_time;
    if (!pass) ++failed;
    std::printf("[%s] criterion %d: %s -- %s; runtime %.2f s (limit %.0f s)\n", pass ? "PASS" : "FAIL", c.id,
                c.title, out.detail.c_str(), seconds, c.limit_s);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
