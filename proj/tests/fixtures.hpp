#pragma once

// Small deterministic datasets shared by the unit tests.

#include <cstdint>
#include <numeric>

#include "seqfed/data.hpp"

namespace fixture {

inline seqfed::ClientDataset client(std::uint64_t seed, int classes = 3, std::size_t dims = 4,
                                    std::size_t per_class = 30, double spread = 0.3) {
  seqfed::SyntheticSpec s;
  s.classes = classes;
  s.dims = dims;
  s.samples_per_class = per_class;
  s.cluster_spread = spread;
  s.seed = seed;
  seqfed::ClientDataset c;
  c.data = seqfed::gen_synthetic_classification(s);
  std::vector<std::size_t> all(c.data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  auto split = seqfed::train_val_test_split(all, 0.2, 0.2, seed + 1);
  c.train = split.train;
  c.val = split.val;
  c.test = split.test;
  return c;
}

}  // namespace fixture
