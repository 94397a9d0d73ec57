#pragma once

// Synthetic data, non-IID partitioning, splitting and file ingestion.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "seqfed/tensor.hpp"

namespace seqfed {

// One client's local data. Index sets refer to rows of `data` and are disjoint.
struct ClientDataset {
  Dataset data;
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;

  friend bool operator==(const ClientDataset&, const ClientDataset&) = default;
};

struct SyntheticSpec {
  int classes = 10;
  std::size_t dims = 32;
  std::size_t samples_per_class = 400;
  double cluster_spread = 1.0;
  std::uint64_t seed = 0;
};

// Isotropic Gaussian clusters around seeded unit-norm class means. Means are
// re-drawn until every pair is at least 0.5 apart. Rows are grouped by class.
Dataset gen_synthetic_classification(const SyntheticSpec& spec);

// Per class, draws client proportions from Dirichlet(beta * 1_N) and splits
// the shuffled class indices by largest-remainder rounding. Clients left with
// fewer than `min_client_size` samples take one at a time from the currently
// largest client. Returns N disjoint index sets covering all rows.
std::vector<std::vector<std::size_t>> dirichlet_label_partition(const Dataset& dataset,
                                                                std::size_t num_clients,
                                                                double beta, std::uint64_t seed,
                                                                std::size_t min_client_size = 1);

// Invertible per-client feature map x -> scale * R x, where R rotates by
// `angle` in the plane spanned by orthonormal u, v.
struct DomainTransform {
  std::vector<double> u;
  std::vector<double> v;
  double angle = 0.0;
  double scale = 1.0;

  std::vector<double> apply(std::span<const double> x) const;
};

// Transform for client i of N: angle 2*pi*i/N, scale cycling 1.0, 1.5, 2.0, 0.5.
DomainTransform domain_transform(std::size_t dims, std::size_t client, std::size_t num_clients,
                                 std::uint64_t seed);

// Equal random slices (remainder rows dropped) each containing every class.
// Re-shuffles up to 100 times before giving up.
std::vector<std::vector<std::size_t>> domain_shift_slices(const Dataset& dataset,
                                                          std::size_t num_clients,
                                                          std::uint64_t seed);

struct DomainShiftOptions {
  double val_frac = 0.1;
  double test_frac = 0.2;
  bool identity_transforms = false;
};

// Domain-shifted clients: each client gets a slice with its own transform
// applied, split into train/val/test.
std::vector<ClientDataset> domain_shift_partition(const Dataset& dataset, std::size_t num_clients,
                                                  std::uint64_t seed,
                                                  const DomainShiftOptions& options = {});

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Seeded random split. val and test sizes round down; train keeps the rest.
// test_frac may be 0, in which case test is empty; train and val must not be.
Split train_val_test_split(std::span<const std::size_t> indices, double val_frac,
                           double test_frac, std::uint64_t seed);

// Per-dimension zero mean / unit variance, fitted on the union of the clients'
// train rows and applied to every row of every client.
void standardize(std::span<ClientDataset> clients);

// IDX (MNIST) pair: images magic 0x00000803, labels magic 0x00000801, all
// integers big-endian, unsigned-byte pixels scaled to [0, 1].
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

// CSV with a header row; the column named `label` holds class indices and
// every other column is a real feature.
Dataset load_csv(const std::filesystem::path& path);

// Per-client class counts (clients x classes) over the given rows.
std::vector<std::vector<std::size_t>> class_histogram(const Dataset& dataset,
                                                      std::span<const std::vector<std::size_t>> parts);

}  // namespace seqfed
