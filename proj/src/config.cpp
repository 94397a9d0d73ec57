#include "seqfed/config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "seqfed/error.hpp"

namespace seqfed {

namespace {

[[noreturn]] void fail(std::string_view key, const std::string& what) {
  throw Error(ErrorKind::kConfig, std::string(key) + ": " + what);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    fail(key, "expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

std::size_t parse_size(std::string_view key, std::string_view v) {
  return static_cast<std::size_t>(parse_u64(key, v));
}

double parse_real(std::string_view key, std::string_view v) {
  const std::string s(v);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    fail(key, "expected a real number, got '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(out)) fail(key, "expected a real number, got '" + s + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(key, "expected true or false, got '" + std::string(v) + "'");
}

std::vector<std::size_t> parse_list(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  if (trim(v).empty()) return out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const auto item = trim(v.substr(start, comma == std::string_view::npos ? v.npos : comma - start));
    out.push_back(parse_size(key, item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename F>
auto parse_enum(std::string_view key, std::string_view v, F&& parser) {
  try {
    return parser(v);
  } catch (const Error& e) {
    fail(key, e.what());
  }
}

// Shortest text that parses back to the same double.
std::string fmt_real(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::string fmt_list(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string_view to_string(DataSource s) {
  switch (s) {
    case DataSource::kSynthetic: return "synthetic";
    case DataSource::kIdx: return "idx";
    case DataSource::kCsv: return "csv";
  }
  return "synthetic";
}

DataSource parse_source(std::string_view v) {
  if (v == "synthetic") return DataSource::kSynthetic;
  if (v == "idx") return DataSource::kIdx;
  if (v == "csv") return DataSource::kCsv;
  throw Error(ErrorKind::kInvalidArgument, "unknown data source '" + std::string(v) + "'");
}

std::string_view to_string(PartitionMode m) {
  return m == PartitionMode::kDirichlet ? "dirichlet" : "domain_shift";
}

PartitionMode parse_partition(std::string_view v) {
  if (v == "dirichlet") return PartitionMode::kDirichlet;
  if (v == "domain_shift") return PartitionMode::kDomainShift;
  throw Error(ErrorKind::kInvalidArgument, "unknown partition '" + std::string(v) + "'");
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)> set;
  // Empty optional: omitted from the serialized form.
  std::function<std::optional<std::string>(const ExperimentConfig&)> get;
};

#define SIZE_FIELD(KEY, MEMBER)                                                           \
  Field { KEY, [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.MEMBER = parse_size(k, v); }, \
          [](const ExperimentConfig& c) -> std::optional<std::string> { return std::to_string(c.MEMBER); } }
#define REAL_FIELD(KEY, MEMBER)                                                           \
  Field { KEY, [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.MEMBER = parse_real(k, v); }, \
          [](const ExperimentConfig& c) -> std::optional<std::string> { return fmt_real(c.MEMBER); } }
#define BOOL_FIELD(KEY, MEMBER)                                                           \
  Field { KEY, [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.MEMBER = parse_bool(k, v); }, \
          [](const ExperimentConfig& c) -> std::optional<std::string> { return fmt_bool(c.MEMBER); } }
#define STRING_FIELD(KEY, MEMBER)                                                         \
  Field { KEY, [](ExperimentConfig& c, std::string_view, std::string_view v) { c.MEMBER = std::string(v); }, \
          [](const ExperimentConfig& c) -> std::optional<std::string> { return c.MEMBER; } }
#define ENUM_FIELD(KEY, MEMBER, PARSER)                                                   \
  Field { KEY, [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.MEMBER = parse_enum(k, v, PARSER); }, \
          [](const ExperimentConfig& c) -> std::optional<std::string> { return std::string(to_string(c.MEMBER)); } }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      ENUM_FIELD("protocol", protocol, parse_protocol),
      ENUM_FIELD("data.source", data.source, parse_source),
      Field{"data.classes",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              c.data.classes = static_cast<int>(parse_size(k, v));
            },
            [](const ExperimentConfig& c) -> std::optional<std::string> {
              return std::to_string(c.data.classes);
            }},
      SIZE_FIELD("data.dims", data.dims),
      SIZE_FIELD("data.samples_per_class", data.samples_per_class),
      REAL_FIELD("data.cluster_spread", data.cluster_spread),
      STRING_FIELD("data.idx_images", data.idx_images),
      STRING_FIELD("data.idx_labels", data.idx_labels),
      STRING_FIELD("data.csv_path", data.csv_path),
      ENUM_FIELD("data.partition", data.partition, parse_partition),
      REAL_FIELD("data.dirichlet_beta", data.dirichlet_beta),
      REAL_FIELD("data.val_frac", data.val_frac),
      REAL_FIELD("data.test_frac", data.test_frac),
      BOOL_FIELD("data.skewed_test", data.skewed_test),
      BOOL_FIELD("data.standardize", data.standardize),
      Field{"data.seed",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              c.data.seed = parse_u64(k, v);
            },
            [](const ExperimentConfig& c) -> std::optional<std::string> {
              if (!c.data.seed) return std::nullopt;
              return std::to_string(*c.data.seed);
            }},
      Field{"model.hidden",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              c.hidden = parse_list(k, v);
            },
            [](const ExperimentConfig& c) -> std::optional<std::string> { return fmt_list(c.hidden); }},
      ENUM_FIELD("model.activation", activation, parse_activation),
      SIZE_FIELD("hp.num_clients", hp.num_clients),
      SIZE_FIELD("hp.pool_models", hp.pool_models),
      SIZE_FIELD("hp.local_epochs", hp.local_epochs),
      SIZE_FIELD("hp.warmup_epochs", hp.warmup_epochs),
      REAL_FIELD("hp.alpha", hp.regularizer.alpha),
      REAL_FIELD("hp.beta", hp.regularizer.beta),
      REAL_FIELD("hp.learning_rate", hp.learning_rate),
      REAL_FIELD("hp.weight_decay", hp.weight_decay),
      ENUM_FIELD("hp.optimizer", hp.optimizer, parse_optimizer),
      SIZE_FIELD("hp.batch_size", hp.batch_size),
      SIZE_FIELD("hp.shots", hp.shots),
      Field{"hp.seed",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              c.hp.seed = parse_u64(k, v);
            },
            [](const ExperimentConfig& c) -> std::optional<std::string> {
              return std::to_string(c.hp.seed);
            }},
      BOOL_FIELD("hp.select_best_val", hp.select_best_val),
      BOOL_FIELD("reg.enable_d1", hp.regularizer.enable_d1),
      BOOL_FIELD("reg.enable_d2", hp.regularizer.enable_d2),
      ENUM_FIELD("reg.measure", hp.regularizer.measure, parse_distance_measure),
      REAL_FIELD("reg.epsilon", hp.regularizer.epsilon),
      BOOL_FIELD("reg.normalize", hp.regularizer.normalize),
      BOOL_FIELD("reg.normalize_every_step", hp.regularizer.normalize_every_step),
      Field{"order.mode",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              if (v == "random") c.random_order = true;
              else if (v == "fixed") c.random_order = false;
              else fail(k, "expected random or fixed, got '" + std::string(v) + "'");
            },
            [](const ExperimentConfig& c) -> std::optional<std::string> {
              return std::string(c.random_order ? "random" : "fixed");
            }},
      Field{"order.fixed",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              c.fixed_order = parse_list(k, v);
            },
            [](const ExperimentConfig& c) -> std::optional<std::string> {
              if (c.fixed_order.empty()) return std::nullopt;
              return fmt_list(c.fixed_order);
            }},
      STRING_FIELD("output_dir", output_dir),
      SIZE_FIELD("repeats", repeats),
      SIZE_FIELD("ledger.bytes_per_param", bytes_per_param),
  };
  return table;
}

#undef SIZE_FIELD
#undef REAL_FIELD
#undef BOOL_FIELD
#undef STRING_FIELD
#undef ENUM_FIELD

}  // namespace

void validate_config(const ExperimentConfig& c) {
  c.hp.validate();
  const auto& d = c.data;
  if (d.source == DataSource::kSynthetic) {
    if (d.classes < 2) fail("data.classes", "must be >= 2");
    if (d.dims < 2) fail("data.dims", "must be >= 2");
    if (d.samples_per_class == 0) fail("data.samples_per_class", "must be >= 1");
    if (d.cluster_spread < 0.0) fail("data.cluster_spread", "must be >= 0");
  } else if (d.source == DataSource::kIdx) {
    if (!std::filesystem::exists(d.idx_images)) fail("data.idx_images", "file not found");
    if (!std::filesystem::exists(d.idx_labels)) fail("data.idx_labels", "file not found");
  } else if (!std::filesystem::exists(d.csv_path)) {
    fail("data.csv_path", "file not found");
  }
  if (!(d.dirichlet_beta > 0.0)) fail("data.dirichlet_beta", "must be > 0");
  if (!(d.val_frac > 0.0 && d.val_frac < 1.0)) fail("data.val_frac", "must be in (0, 1)");
  if (!(d.test_frac > 0.0 && d.test_frac < 1.0)) fail("data.test_frac", "must be in (0, 1)");
  if (!(d.val_frac + d.test_frac < 1.0)) fail("data.test_frac", "val_frac + test_frac must be < 1");
  if (d.partition == PartitionMode::kDomainShift && c.hp.num_clients < 2)
    fail("hp.num_clients", "domain_shift needs >= 2 clients");
  for (auto h : c.hidden)
    if (h == 0) fail("model.hidden", "layer sizes must be positive");
  if (c.repeats == 0) fail("repeats", "must be >= 1");
  if (c.bytes_per_param == 0) fail("ledger.bytes_per_param", "must be >= 1");
  if (!c.random_order) {
    if (c.fixed_order.size() != c.hp.num_clients)
      fail("order.fixed", "must list exactly hp.num_clients clients");
    try {
      ClientOrder check(c.fixed_order);
    } catch (const Error& e) {
      fail("order.fixed", e.what());
    }
  }
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  bool saw_protocol = false;
  std::vector<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::kConfig, "line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end()) fail(key, "unknown key (line " + std::to_string(line_no) + ")");
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) fail(key, "set more than once");
    seen.emplace_back(key);
    it->set(c, key, value);
    if (key == "protocol") saw_protocol = true;
  }
  if (!saw_protocol) fail("protocol", "missing required key");
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& f : fields())
    if (auto v = f.get(config)) out += f.key + " = " + *v + "\n";
  return out;
}

std::string data_fingerprint(const ExperimentConfig& config) {
  std::string out;
  for (const auto& f : fields())
    if (f.key.rfind("data.", 0) == 0 || f.key == "hp.num_clients")
      if (auto v = f.get(config)) out += f.key + " = " + *v + "\n";
  return out;
}

}  // namespace seqfed
