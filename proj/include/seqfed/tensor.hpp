#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace seqfed {

// Owning row-major real matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// Labelled samples: features (n x d) plus one class index per row.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int class_count = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dims() const noexcept { return features.cols; }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Copies the given rows, in order, into a new dataset.
Dataset gather(const Dataset& source, std::span<const std::size_t> rows);

// Non-owning view of a mini-batch.
struct Batch {
  std::span<const double> features;  // size() * input_dim values, row-major
  std::span<const int> labels;
  std::size_t input_dim = 0;

  std::size_t size() const noexcept { return labels.size(); }

  static Batch of(const Dataset& d) { return {d.features.data, d.labels, d.dims()}; }
};

}  // namespace seqfed
