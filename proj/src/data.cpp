#include "seqfed/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "seqfed/error.hpp"
#include "seqfed/seeding.hpp"

namespace seqfed {

namespace {

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

std::size_t floor_fraction(std::size_t n, double frac) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * frac + 1e-9));
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (bytes.size() < offset + 4)
    throw Error(ErrorKind::kIdxTruncated, "truncated IDX header in " + path.string());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

Dataset gen_synthetic_classification(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw Error(ErrorKind::kInvalidArgument, "synthetic data needs >= 2 classes");
  if (spec.dims < 2) throw Error(ErrorKind::kInvalidArgument, "synthetic data needs >= 2 dims");
  if (spec.samples_per_class == 0)
    throw Error(ErrorKind::kInvalidArgument, "samples_per_class must be positive");
  if (!(spec.cluster_spread >= 0.0) || !std::isfinite(spec.cluster_spread))
    throw Error(ErrorKind::kInvalidArgument, "cluster_spread must be finite and >= 0");

  constexpr double kMinSeparation = 0.5;
  constexpr int kMaxDraws = 1000;
  Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(StreamTag::kDataGen)}));
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto C = static_cast<std::size_t>(spec.classes);
  std::vector<std::vector<double>> means;
  while (means.size() < C) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxDraws && !placed; ++attempt) {
      std::vector<double> m(spec.dims);
      double norm = 0.0;
      for (double& x : m) {
        x = normal(rng);
        norm += x * x;
      }
      norm = std::sqrt(norm);
      if (norm == 0.0) continue;
      for (double& x : m) x /= norm;
      placed = std::all_of(means.begin(), means.end(), [&](const std::vector<double>& o) {
        double d = 0.0;
        for (std::size_t i = 0; i < spec.dims; ++i) d += (m[i] - o[i]) * (m[i] - o[i]);
        return std::sqrt(d) >= kMinSeparation;
      });
      if (placed) means.push_back(std::move(m));
    }
    if (!placed)
      throw Error(ErrorKind::kInvalidArgument,
                  "cannot place " + std::to_string(C) + " separated class means in " +
                      std::to_string(spec.dims) + " dims");
  }

  Dataset out;
  out.class_count = spec.classes;
  out.features = Matrix(C * spec.samples_per_class, spec.dims);
  out.labels.reserve(C * spec.samples_per_class);
  std::size_t r = 0;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++r) {
      auto row = out.features.row(r);
      for (std::size_t i = 0; i < spec.dims; ++i)
        row[i] = means[c][i] + spec.cluster_spread * normal(rng);
      out.labels.push_back(static_cast<int>(c));
    }
  return out;
}

std::vector<std::vector<std::size_t>> dirichlet_label_partition(const Dataset& dataset,
                                                                std::size_t num_clients,
                                                                double beta, std::uint64_t seed,
                                                                std::size_t min_client_size) {
  if (num_clients == 0) throw Error(ErrorKind::kInvalidArgument, "num_clients must be >= 1");
  if (!(beta > 0.0)) throw Error(ErrorKind::kInvalidArgument, "dirichlet beta must be > 0");
  if (num_clients * std::max<std::size_t>(min_client_size, 1) > dataset.size())
    throw Error(ErrorKind::kInvalidArgument, "more clients than samples to give them");

  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(StreamTag::kPartition)}));
  std::gamma_distribution<double> gamma(beta, 1.0);

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(dataset.class_count));
  for (std::size_t i = 0; i < dataset.size(); ++i)
    by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);

  std::vector<std::vector<std::size_t>> parts(num_clients);
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    std::vector<double> p(num_clients);
    double sum = 0.0;
    for (double& x : p) sum += (x = gamma(rng));
    if (sum == 0.0) {
      // Every draw underflowed; the mass goes to a single client.
      std::fill(p.begin(), p.end(), 0.0);
      p[std::uniform_int_distribution<std::size_t>(0, num_clients - 1)(rng)] = 1.0;
      sum = 1.0;
    }
    // Largest-remainder rounding of members.size() * p.
    const auto n = static_cast<double>(members.size());
    std::vector<std::size_t> counts(num_clients);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < num_clients; ++k) {
      const double exact = n * p[k] / sum;
      counts[k] = static_cast<std::size_t>(std::floor(exact));
      assigned += counts[k];
      remainders.emplace_back(exact - std::floor(exact), k);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < members.size(); ++r, ++assigned)
      ++counts[remainders[r % num_clients].second];

    std::size_t cursor = 0;
    for (std::size_t k = 0; k < num_clients; ++k)
      for (std::size_t c = 0; c < counts[k]; ++c) parts[k].push_back(members[cursor++]);
  }

  // Repair undersized clients from the largest one.
  const std::size_t floor_size = std::max<std::size_t>(min_client_size, 1);
  for (;;) {
    auto small = std::find_if(parts.begin(), parts.end(),
                              [&](const auto& p) { return p.size() < floor_size; });
    if (small == parts.end()) break;
    auto largest = std::max_element(parts.begin(), parts.end(),
                                    [](const auto& a, const auto& b) { return a.size() < b.size(); });
    small->push_back(largest->back());
    largest->pop_back();
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return parts;
}

std::vector<double> DomainTransform::apply(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  if (angle == 0.0 && scale == 1.0) return out;
  double a = 0.0;
  double b = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    a += u[i] * x[i];
    b += v[i] * x[i];
  }
  const double ra = a * std::cos(angle) - b * std::sin(angle);
  const double rb = a * std::sin(angle) + b * std::cos(angle);
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = scale * (x[i] + (ra - a) * u[i] + (rb - b) * v[i]);
  return out;
}

DomainTransform domain_transform(std::size_t dims, std::size_t client, std::size_t num_clients,
                                 std::uint64_t seed) {
  if (dims < 2) throw Error(ErrorKind::kInvalidArgument, "domain transform needs >= 2 dims");
  static constexpr double kScales[] = {1.0, 1.5, 2.0, 0.5};
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(StreamTag::kDomain), client}));
  std::normal_distribution<double> normal(0.0, 1.0);

  DomainTransform t;
  t.angle = 2.0 * std::numbers::pi * static_cast<double>(client) / static_cast<double>(num_clients);
  t.scale = kScales[client % 4];
  for (;;) {
    t.u.assign(dims, 0.0);
    t.v.assign(dims, 0.0);
    for (auto& x : t.u) x = normal(rng);
    for (auto& x : t.v) x = normal(rng);
    double nu = 0.0;
    for (double x : t.u) nu += x * x;
    nu = std::sqrt(nu);
    if (nu < 1e-9) continue;
    for (auto& x : t.u) x /= nu;
    double proj = 0.0;
    for (std::size_t i = 0; i < dims; ++i) proj += t.u[i] * t.v[i];
    for (std::size_t i = 0; i < dims; ++i) t.v[i] -= proj * t.u[i];
    double nv = 0.0;
    for (double x : t.v) nv += x * x;
    nv = std::sqrt(nv);
    if (nv < 1e-9) continue;
    for (auto& x : t.v) x /= nv;
    return t;
  }
}

std::vector<std::vector<std::size_t>> domain_shift_slices(const Dataset& dataset,
                                                          std::size_t num_clients,
                                                          std::uint64_t seed) {
  if (num_clients < 2) throw Error(ErrorKind::kInvalidArgument, "domain shift needs >= 2 clients");
  const std::size_t slice = dataset.size() / num_clients;
  if (slice == 0) throw Error(ErrorKind::kInvalidArgument, "more clients than samples");

  std::vector<bool> present(static_cast<std::size_t>(dataset.class_count), false);
  for (int y : dataset.labels) present[static_cast<std::size_t>(y)] = true;

  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(StreamTag::kPartition)}));
  auto order = iota_indices(dataset.size());
  constexpr int kMaxRetries = 100;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> parts(num_clients);
    bool complete = true;
    for (std::size_t k = 0; k < num_clients && complete; ++k) {
      parts[k].assign(order.begin() + static_cast<std::ptrdiff_t>(k * slice),
                      order.begin() + static_cast<std::ptrdiff_t>((k + 1) * slice));
      std::vector<bool> seen(present.size(), false);
      for (auto i : parts[k]) seen[static_cast<std::size_t>(dataset.labels[i])] = true;
      complete = seen == present;
    }
    if (complete) {
      for (auto& p : parts) std::sort(p.begin(), p.end());
      return parts;
    }
  }
  throw Error(ErrorKind::kInvalidArgument,
              "could not draw domain slices that each contain every class");
}

std::vector<ClientDataset> domain_shift_partition(const Dataset& dataset, std::size_t num_clients,
                                                  std::uint64_t seed,
                                                  const DomainShiftOptions& options) {
  const auto slices = domain_shift_slices(dataset, num_clients, seed);
  std::vector<ClientDataset> clients;
  clients.reserve(num_clients);
  for (std::size_t k = 0; k < num_clients; ++k) {
    ClientDataset c;
    c.data = gather(dataset, slices[k]);
    if (!options.identity_transforms) {
      const auto t = domain_transform(dataset.dims(), k, num_clients, seed);
      for (std::size_t r = 0; r < c.data.size(); ++r) {
        auto row = c.data.features.row(r);
        const auto mapped = t.apply(row);
        std::copy(mapped.begin(), mapped.end(), row.begin());
      }
    }
    const auto all = iota_indices(c.data.size());
    auto split = train_val_test_split(all, options.val_frac, options.test_frac,
                                      derive_seed(seed, {static_cast<std::uint64_t>(StreamTag::kSplit), k}));
    c.train = std::move(split.train);
    c.val = std::move(split.val);
    c.test = std::move(split.test);
    clients.push_back(std::move(c));
  }
  return clients;
}

Split train_val_test_split(std::span<const std::size_t> indices, double val_frac,
                           double test_frac, std::uint64_t seed) {
  if (!(val_frac > 0.0 && val_frac < 1.0))
    throw Error(ErrorKind::kInvalidArgument, "val_frac must be in (0, 1)");
  if (!(test_frac >= 0.0 && test_frac < 1.0))
    throw Error(ErrorKind::kInvalidArgument, "test_frac must be in [0, 1)");
  if (!(val_frac + test_frac < 1.0))
    throw Error(ErrorKind::kInvalidArgument, "val_frac + test_frac must be < 1");

  std::vector<std::size_t> shuffled(indices.begin(), indices.end());
  Rng rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const std::size_t n_val = floor_fraction(shuffled.size(), val_frac);
  const std::size_t n_test = floor_fraction(shuffled.size(), test_frac);
  if (n_val == 0) throw Error(ErrorKind::kEmptyInput, "validation split is empty");
  if (test_frac > 0.0 && n_test == 0) throw Error(ErrorKind::kEmptyInput, "test split is empty");
  if (n_val + n_test >= shuffled.size()) throw Error(ErrorKind::kEmptyInput, "train split is empty");

  Split s;
  const auto first = shuffled.begin();
  s.val.assign(first, first + static_cast<std::ptrdiff_t>(n_val));
  s.test.assign(first + static_cast<std::ptrdiff_t>(n_val),
                first + static_cast<std::ptrdiff_t>(n_val + n_test));
  s.train.assign(first + static_cast<std::ptrdiff_t>(n_val + n_test), shuffled.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

void standardize(std::span<ClientDataset> clients) {
  if (clients.empty()) return;
  const std::size_t d = clients.front().data.dims();
  std::vector<double> mean(d, 0.0);
  std::vector<double> sq(d, 0.0);
  std::size_t n = 0;
  for (const auto& c : clients)
    for (auto r : c.train) {
      const auto row = c.data.features.row(r);
      for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
      ++n;
    }
  if (n == 0) throw Error(ErrorKind::kEmptyInput, "standardize: no training rows");
  for (auto& m : mean) m /= static_cast<double>(n);
  for (const auto& c : clients)
    for (auto r : c.train) {
      const auto row = c.data.features.row(r);
      for (std::size_t j = 0; j < d; ++j) sq[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
    }
  std::vector<double> inv_std(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(sq[j] / static_cast<double>(n));
    inv_std[j] = sd > 0.0 ? 1.0 / sd : 1.0;
  }
  for (auto& c : clients)
    for (std::size_t r = 0; r < c.data.size(); ++r) {
      auto row = c.data.features.row(r);
      for (std::size_t j = 0; j < d; ++j) row[j] = (row[j] - mean[j]) * inv_std[j];
    }
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  constexpr std::uint32_t kImageMagic = 0x00000803;
  constexpr std::uint32_t kLabelMagic = 0x00000801;
  const auto img = read_file(images);
  const auto lab = read_file(labels);

  if (read_be32(img, 0, images) != kImageMagic)
    throw Error(ErrorKind::kIdxMagicMismatch, "bad IDX image magic in " + images.string());
  if (read_be32(lab, 0, labels) != kLabelMagic)
    throw Error(ErrorKind::kIdxMagicMismatch, "bad IDX label magic in " + labels.string());

  const std::size_t n = read_be32(img, 4, images);
  const std::size_t rows = read_be32(img, 8, images);
  const std::size_t cols = read_be32(img, 12, images);
  const std::size_t n_labels = read_be32(lab, 4, labels);
  if (n != n_labels)
    throw Error(ErrorKind::kIdxCountMismatch, "IDX image count " + std::to_string(n) +
                                                  " != label count " + std::to_string(n_labels));
  const std::size_t pixels = rows * cols;
  if (img.size() < 16 + n * pixels)
    throw Error(ErrorKind::kIdxTruncated, "truncated IDX image data in " + images.string());
  if (lab.size() < 8 + n)
    throw Error(ErrorKind::kIdxTruncated, "truncated IDX label data in " + labels.string());
  if (n == 0) throw Error(ErrorKind::kEmptyInput, "IDX files hold no samples");

  Dataset out;
  out.features = Matrix(n, pixels);
  out.labels.resize(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < pixels; ++p)
      out.features(i, p) = static_cast<double>(img[16 + i * pixels + p]) / 255.0;
    out.labels[i] = lab[8 + i];
    max_label = std::max(max_label, out.labels[i]);
  }
  out.class_count = max_label + 1;
  return out;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kEmptyInput, path.string() + " is empty");
  const auto header = split(line);
  const auto label_it = std::find(header.begin(), header.end(), "label");
  if (label_it == header.end())
    throw Error(ErrorKind::kInvalidArgument, path.string() + " has no `label` column");
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());

  std::vector<double> values;
  Dataset out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw Error(ErrorKind::kInvalidArgument,
                  path.string() + ":" + std::to_string(line_no) + ": wrong number of columns");
    try {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (c == label_col) {
          const int y = std::stoi(cells[c]);
          if (y < 0) throw std::invalid_argument("negative label");
          out.labels.push_back(y);
        } else {
          values.push_back(std::stod(cells[c]));
        }
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::kInvalidArgument,
                  path.string() + ":" + std::to_string(line_no) + ": unparsable value");
    }
  }
  if (out.labels.empty()) throw Error(ErrorKind::kEmptyInput, path.string() + " has no rows");
  out.features.rows = out.labels.size();
  out.features.cols = header.size() - 1;
  out.features.data = std::move(values);
  out.class_count = *std::max_element(out.labels.begin(), out.labels.end()) + 1;
  return out;
}

std::vector<std::vector<std::size_t>> class_histogram(
    const Dataset& dataset, std::span<const std::vector<std::size_t>> parts) {
  std::vector<std::vector<std::size_t>> hist(
      parts.size(), std::vector<std::size_t>(static_cast<std::size_t>(dataset.class_count), 0));
  for (std::size_t k = 0; k < parts.size(); ++k)
    for (auto i : parts[k]) ++hist[k][static_cast<std::size_t>(dataset.labels[i])];
  return hist;
}

}  // namespace seqfed
