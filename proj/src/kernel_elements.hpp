#pragma once

// Per-output-element bodies shared by the serial and OpenMP kernels. Keeping a
// single definition is what makes the two paths bitwise identical.

#include <cmath>
#include <cstddef>

namespace seqfed::kernels::detail {

inline double forward_elem(const double* in_row, const double* w_row, double bias,
                           std::size_t fan_in) {
  double acc = bias;
  for (std::size_t i = 0; i < fan_in; ++i) acc += in_row[i] * w_row[i];
  return acc;
}

// grad_w[o][i] = sum_b delta[b][o] * in[b][i]
inline double grad_weight_elem(const double* delta, const double* in, std::size_t o,
                               std::size_t i, std::size_t batch, std::size_t fan_in,
                               std::size_t fan_out) {
  double acc = 0.0;
  for (std::size_t b = 0; b < batch; ++b) acc += delta[b * fan_out + o] * in[b * fan_in + i];
  return acc;
}

inline double grad_bias_elem(const double* delta, std::size_t o, std::size_t batch,
                             std::size_t fan_out) {
  double acc = 0.0;
  for (std::size_t b = 0; b < batch; ++b) acc += delta[b * fan_out + o];
  return acc;
}

// grad_in[b][i] = sum_o delta[b][o] * w[o][i]
inline double grad_input_elem(const double* delta_row, const double* weights, std::size_t i,
                              std::size_t fan_in, std::size_t fan_out) {
  double acc = 0.0;
  for (std::size_t o = 0; o < fan_out; ++o) acc += delta_row[o] * weights[o * fan_in + i];
  return acc;
}

inline double mean_elem(const double* rows, std::size_t p, std::size_t count,
                        std::size_t width) {
  double acc = 0.0;
  for (std::size_t k = 0; k < count; ++k) acc += rows[k * width + p];
  return acc / static_cast<double>(count);
}

inline double distance_elem(const double* row, const double* x, std::size_t width) {
  double acc = 0.0;
  for (std::size_t p = 0; p < width; ++p) {
    const double d = row[p] - x[p];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace seqfed::kernels::detail
