#include "seqfed/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "seqfed/error.hpp"
#include "seqfed/seeding.hpp"

namespace seqfed {

namespace {

using nlohmann::json;

constexpr const char* kSchema = "seqfed.run_result/1";

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// Smallest client size for which train_val_test_split leaves no split empty.
std::size_t min_client_size(double val_frac, double test_frac) {
  for (std::size_t m = 2;; ++m) {
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(m) * val_frac + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(m) * test_frac + 1e-9));
    if (n_val >= 1 && (test_frac == 0.0 || n_test >= 1) && n_val + n_test < m) return m;
  }
}

Dataset load_source(const DataConfig& d, std::uint64_t seed) {
  switch (d.source) {
    case DataSource::kSynthetic:
      return gen_synthetic_classification({d.classes, d.dims, d.samples_per_class, d.cluster_spread, seed});
    case DataSource::kIdx: return load_idx(d.idx_images, d.idx_labels);
    case DataSource::kCsv: return load_csv(d.csv_path);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown data source");
}

std::vector<ClientDataset> label_skew_clients(const Dataset& ds, const DataConfig& d,
                                              std::size_t n_clients, std::uint64_t seed) {
  const auto split_seed = [&](std::size_t k) {
    return derive_seed(seed, {static_cast<std::uint64_t>(StreamTag::kSplit), k});
  };
  std::vector<ClientDataset> clients(n_clients);
  if (d.skewed_test) {
    const auto parts = dirichlet_label_partition(ds, n_clients, d.dirichlet_beta, seed,
                                                 min_client_size(d.val_frac, d.test_frac));
    for (std::size_t k = 0; k < n_clients; ++k) {
      clients[k].data = gather(ds, parts[k]);
      auto s = train_val_test_split(iota_indices(parts[k].size()), d.val_frac, d.test_frac, split_seed(k));
      clients[k].train = std::move(s.train);
      clients[k].val = std::move(s.val);
      clients[k].test = std::move(s.test);
    }
    return clients;
  }

  // Globally IID test pool, dealt round-robin to the clients.
  auto all = iota_indices(ds.size());
  Rng rng(split_seed(n_clients));
  std::shuffle(all.begin(), all.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(ds.size()) * d.test_frac + 1e-9));
  if (n_test == 0) throw Error(ErrorKind::kEmptyInput, "global test pool is empty");
  std::vector<std::size_t> test_pool(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> rest(all.begin() + static_cast<std::ptrdiff_t>(n_test), all.end());
  std::sort(test_pool.begin(), test_pool.end());
  std::sort(rest.begin(), rest.end());

  const Dataset pool = gather(ds, rest);
  const auto parts = dirichlet_label_partition(pool, n_clients, d.dirichlet_beta, seed,
                                               min_client_size(d.val_frac, 0.0));
  for (std::size_t k = 0; k < n_clients; ++k) {
    std::vector<std::size_t> rows;
    for (auto i : parts[k]) rows.push_back(rest[i]);
    const std::size_t local = rows.size();
    for (std::size_t j = k; j < test_pool.size(); j += n_clients) rows.push_back(test_pool[j]);
    clients[k].data = gather(ds, rows);
    auto s = train_val_test_split(iota_indices(local), d.val_frac, 0.0, split_seed(k));
    clients[k].train = std::move(s.train);
    clients[k].val = std::move(s.val);
    for (std::size_t r = local; r < rows.size(); ++r) clients[k].test.push_back(r);
  }
  return clients;
}

json logs_to_json(const std::vector<TrainLog>& logs) {
  json out = json::array();
  for (const auto& l : logs) {
    json epochs = json::array();
    for (const auto& e : l.epochs)
      epochs.push_back({{"epoch", e.epoch},
                        {"loss", e.loss},
                        {"d1_raw", e.d1_raw},
                        {"d1_norm", e.d1_norm},
                        {"d2_raw", e.d2_raw},
                        {"d2_norm", e.d2_norm},
                        {"total_loss", e.total_loss},
                        {"val_accuracy", std::isnan(e.val_accuracy) ? json(nullptr) : json(e.val_accuracy)}});
    out.push_back({{"phase", l.phase},
                   {"round", l.round},
                   {"client", l.client},
                   {"model", l.model},
                   {"selected_epoch", l.selected_epoch},
                   {"epochs", std::move(epochs)}});
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

void write_rows(const std::filesystem::path& dir, const std::vector<ReportRow>& rows,
                const std::string& failure) {
  std::ostringstream runs;
  runs << "protocol,seed,global_test_accuracy,ledger_bytes,total_epochs,wall_time_s,status\n";
  for (const auto& r : rows)
    runs << r.protocol << ',' << r.seed << ',' << fmt(r.global_test_accuracy) << ','
         << r.ledger_bytes << ',' << r.total_epochs << ',' << fmt(r.wall_time_s) << ",ok\n";
  if (!failure.empty()) runs << failure;
  write_text(dir / "runs.csv", runs.str());

  std::vector<double> acc;
  std::vector<double> bytes;
  std::vector<double> epochs;
  for (const auto& r : rows) {
    acc.push_back(r.global_test_accuracy);
    bytes.push_back(static_cast<double>(r.ledger_bytes));
    epochs.push_back(static_cast<double>(r.total_epochs));
  }
  std::ostringstream summary;
  summary << "protocol,runs,accuracy_mean,accuracy_std,ledger_bytes_mean,total_epochs_mean,complete\n";
  if (!rows.empty()) {
    const auto a = mean_std(acc);
    summary << rows.front().protocol << ',' << rows.size() << ',' << fmt(a.mean) << ','
            << fmt(a.std) << ',' << fmt(mean_std(bytes).mean) << ',' << fmt(mean_std(epochs).mean)
            << ',' << (failure.empty() ? "true" : "false") << '\n';
  }
  write_text(dir / "summary.csv", summary.str());
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t seed) {
  const auto& d = config.data;
  const std::uint64_t data_seed = d.seed.value_or(seed);
  const Dataset ds = load_source(d, data_seed);

  PreparedData out;
  if (d.partition == PartitionMode::kDirichlet) {
    out.clients = label_skew_clients(ds, d, config.hp.num_clients, data_seed);
  } else {
    out.clients = domain_shift_partition(ds, config.hp.num_clients, data_seed,
                                         {d.val_frac, d.test_frac, false});
  }
  if (d.standardize) standardize(out.clients);

  out.spec.layer_sizes.push_back(ds.dims());
  out.spec.layer_sizes.insert(out.spec.layer_sizes.end(), config.hidden.begin(), config.hidden.end());
  out.spec.layer_sizes.push_back(static_cast<std::size_t>(ds.class_count));
  out.spec.activation = config.activation;
  out.spec.validate();
  return out;
}

RunResult run_protocol(const ExperimentConfig& config, const PreparedData& data,
                       std::uint64_t seed) {
  HyperParams hp = config.hp;
  hp.seed = seed;
  const std::size_t n = data.clients.size();
  const ClientOrder order = make_order(n, {config.random_order, seed, config.fixed_order});
  RunOptions options;
  options.bytes_per_param = config.bytes_per_param;
  switch (config.protocol) {
    case Protocol::kFedElmyOneShot: return run_one_shot_sfl(data.spec, data.clients, hp, order, options);
    case Protocol::kFedElmyFewShot: return run_few_shot_sfl(data.spec, data.clients, hp, order, options);
    case Protocol::kFedElmyDecentralized: return run_decentralized_pfl(data.spec, data.clients, hp, options);
    case Protocol::kFedSeq: return run_fedseq_baseline(data.spec, data.clients, hp, order, options);
    case Protocol::kParallelAvg: return run_parallel_average_baseline(data.spec, data.clients, hp, options);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown protocol");
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

json run_result_to_json(const RunResult& result, const ExperimentConfig& config,
                        std::uint64_t seed, double wall_time_s) {
  json events = json::array();
  for (const auto& e : result.ledger.events())
    events.push_back({{"from", e.from}, {"to", e.to}, {"param_count", e.param_count}, {"bytes", e.bytes}});
  return {
      {"schema", kSchema},
      {"protocol", std::string(to_string(result.protocol))},
      {"seed", seed},
      {"config", serialize_config(config)},
      {"data_fingerprint", data_fingerprint(config)},
      {"param_count", result.final_model.size()},
      {"final_model", result.final_model.values()},
      {"global_test_accuracy", result.global_test_accuracy},
      {"total_epochs", result.total_epochs},
      {"ledger",
       {{"bytes_per_param", result.ledger.bytes_per_param()},
        {"total_bytes", result.ledger.total_bytes()},
        {"events", std::move(events)}}},
      {"logs", logs_to_json(result.logs)},
      {"wall_time_s", wall_time_s},
  };
}

void validate_run_json(const json& doc) {
  auto need = [&](const json& obj, const char* key, auto check, const char* type) {
    if (!obj.is_object() || !obj.contains(key) || !check(obj.at(key)))
      throw Error(ErrorKind::kInvalidArgument,
                  std::string("run result: field '") + key + "' missing or not " + type);
  };
  const auto is_string = [](const json& j) { return j.is_string(); };
  const auto is_uint = [](const json& j) { return j.is_number_unsigned(); };
  const auto is_number = [](const json& j) { return j.is_number(); };
  const auto is_array = [](const json& j) { return j.is_array(); };
  const auto is_object = [](const json& j) { return j.is_object(); };

  need(doc, "schema", is_string, "a string");
  if (doc.at("schema") != kSchema)
    throw Error(ErrorKind::kInvalidArgument, "run result: unknown schema");
  need(doc, "protocol", is_string, "a string");
  parse_protocol(doc.at("protocol").get<std::string>());
  need(doc, "seed", is_uint, "an unsigned integer");
  need(doc, "config", is_string, "a string");
  need(doc, "data_fingerprint", is_string, "a string");
  need(doc, "param_count", is_uint, "an unsigned integer");
  need(doc, "final_model", is_array, "an array");
  if (doc.at("final_model").size() != doc.at("param_count").get<std::size_t>())
    throw Error(ErrorKind::kInvalidArgument, "run result: final_model length != param_count");
  need(doc, "global_test_accuracy", is_number, "a number");
  need(doc, "total_epochs", is_uint, "an unsigned integer");
  need(doc, "ledger", is_object, "an object");
  const auto& ledger = doc.at("ledger");
  need(ledger, "bytes_per_param", is_uint, "an unsigned integer");
  need(ledger, "total_bytes", is_uint, "an unsigned integer");
  need(ledger, "events", is_array, "an array");
  std::size_t total = 0;
  for (const auto& e : ledger.at("events")) {
    need(e, "from", is_number, "an integer");
    need(e, "to", is_number, "an integer");
    need(e, "param_count", is_uint, "an unsigned integer");
    need(e, "bytes", is_uint, "an unsigned integer");
    if (e.at("bytes").get<std::size_t>() !=
        e.at("param_count").get<std::size_t>() * ledger.at("bytes_per_param").get<std::size_t>())
      throw Error(ErrorKind::kInvalidArgument, "run result: event bytes != param_count * bytes_per_param");
    total += e.at("bytes").get<std::size_t>();
  }
  if (total != ledger.at("total_bytes").get<std::size_t>())
    throw Error(ErrorKind::kInvalidArgument, "run result: ledger total != sum of events");
  need(doc, "logs", is_array, "an array");
  for (const auto& l : doc.at("logs")) {
    need(l, "phase", is_string, "a string");
    need(l, "epochs", is_array, "an array");
  }
  need(doc, "wall_time_s", is_number, "a number");
}

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  const std::filesystem::path dir = config.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());

  ExperimentOutcome outcome;
  const std::string protocol(to_string(config.protocol));
  for (std::size_t k = 0; k < config.repeats; ++k) {
    const std::uint64_t seed = config.hp.seed + k;
    try {
      const auto start = std::chrono::steady_clock::now();
      const PreparedData data = prepare_data(config, seed);
      RunResult result = run_protocol(config, data, seed);
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const json doc = run_result_to_json(result, config, seed, wall);
      write_text(dir / ("run_" + protocol + "_seed" + std::to_string(seed) + ".json"), doc.dump(1) + "\n");
      outcome.rows.push_back({protocol, seed, result.global_test_accuracy,
                              result.ledger.total_bytes(), result.total_epochs, wall});
      outcome.results.push_back(std::move(result));
    } catch (const std::exception& e) {
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      write_rows(dir, outcome.rows, protocol + "," + std::to_string(seed) + ",,,,,failed: " + msg + "\n");
      throw;
    }
  }
  write_rows(dir, outcome.rows, "");
  return outcome;
}

void emit_comparison(std::span<const std::filesystem::path> run_dirs,
                     const std::filesystem::path& out_dir) {
  struct Group {
    std::vector<double> accuracy;
    std::vector<double> bytes;
  };
  std::map<std::string, Group> groups;
  std::optional<std::string> fingerprint;
  for (const auto& dir : run_dirs) {
    if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::kIo, "not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const auto name = entry.path().filename().string();
      if (name.rfind("run_", 0) == 0 && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      std::ifstream in(file);
      json doc;
      try {
        doc = json::parse(in);
      } catch (const json::exception& e) {
        throw Error(ErrorKind::kIo, file.string() + ": " + e.what());
      }
      validate_run_json(doc);
      const auto fp = doc.at("data_fingerprint").get<std::string>();
      if (fingerprint && *fingerprint != fp)
        throw Error(ErrorKind::kInvalidArgument,
                    "runs use different data configurations: " + file.string());
      fingerprint = fp;
      auto& g = groups[doc.at("protocol").get<std::string>()];
      g.accuracy.push_back(doc.at("global_test_accuracy").get<double>());
      g.bytes.push_back(static_cast<double>(doc.at("ledger").at("total_bytes").get<std::size_t>()));
    }
  }
  if (groups.size() < 2)
    throw Error(ErrorKind::kInvalidArgument, "comparison needs runs from at least two protocols");

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  std::ostringstream table;
  std::ostringstream plot;
  table << "protocol,runs,accuracy_mean,accuracy_std,ledger_bytes,ledger_mb\n";
  plot << "protocol,metric,value\n";
  for (const auto& [protocol, g] : groups) {
    const auto acc = mean_std(g.accuracy);
    const double bytes = mean_std(g.bytes).mean;
    table << protocol << ',' << g.accuracy.size() << ',' << fmt(acc.mean) << ',' << fmt(acc.std)
          << ',' << fmt(bytes) << ',' << fmt(bytes / 1e6) << '\n';
    plot << protocol << ",accuracy_mean," << fmt(acc.mean) << '\n'
         << protocol << ",accuracy_std," << fmt(acc.std) << '\n'
         << protocol << ",ledger_bytes," << fmt(bytes) << '\n';
  }
  write_text(out_dir / "comparison.csv", table.str());
  write_text(out_dir / "plot_data.csv", plot.str());
}

std::string partition_preview(const ExperimentConfig& config) {
  const PreparedData data = prepare_data(config, config.hp.seed);
  std::ostringstream os;
  const int classes = static_cast<int>(data.spec.class_count());
  os << "client  train  val  test |";
  for (int c = 0; c < classes; ++c) os << ' ' << "c" << c;
  os << '\n';
  for (std::size_t k = 0; k < data.clients.size(); ++k) {
    const auto& cl = data.clients[k];
    std::vector<std::size_t> hist(static_cast<std::size_t>(classes), 0);
    for (const auto* split : {&cl.train, &cl.val})
      for (auto i : *split) ++hist[static_cast<std::size_t>(cl.data.labels[i])];
    os << k << "  " << cl.train.size() << "  " << cl.val.size() << "  " << cl.test.size() << " |";
    for (auto h : hist) os << ' ' << h;
    os << '\n';
  }
  os << "(class counts cover train + val rows)\n";
  return os.str();
}

}  // namespace seqfed
