#pragma once

// Dense data-parallel kernels behind the model and pool arithmetic.
//
// `serial` is the reference implementation kept for tests and the benchmark;
// `omp` is what the library calls. Both evaluate every output element with the
// same sequential inner loop, so results are bitwise identical for any thread
// count. Parallelism is only across independent output elements, never across
// a reduction.
//
// Matrices are row-major: in (batch x fan_in), weights (fan_out x fan_in),
// bias (fan_out), out and delta (batch x fan_out).

#include <cstddef>
#include <span>

namespace seqfed::kernels {

namespace serial {

// out = in * weights^T + bias
void dense_forward(std::span<const double> in, std::span<const double> weights,
                   std::span<const double> bias, std::span<double> out, std::size_t batch,
                   std::size_t fan_in, std::size_t fan_out);

// grad_w = delta^T * in, grad_b = column sums of delta (both overwritten)
void dense_backward_params(std::span<const double> delta, std::span<const double> in,
                           std::span<double> grad_w, std::span<double> grad_b,
                           std::size_t batch, std::size_t fan_in, std::size_t fan_out);

// grad_in = delta * weights
void dense_backward_input(std::span<const double> delta, std::span<const double> weights,
                          std::span<double> grad_in, std::size_t batch, std::size_t fan_in,
                          std::size_t fan_out);

// out[p] = mean over k of rows[k * width + p]
void mean_rows(std::span<const double> rows, std::span<double> out, std::size_t count,
               std::size_t width);

// out[k] = || rows[k] - x ||_2
void distances_to(std::span<const double> rows, std::span<const double> x,
                  std::span<double> out, std::size_t count, std::size_t width);

// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

}  // namespace serial

namespace omp {

// out = in * weights^T + bias
void dense_forward(std::span<const double> in, std::span<const double> weights,
                   std::span<const double> bias, std::span<double> out, std::size_t batch,
                   std::size_t fan_in, std::size_t fan_out);

// grad_w = delta^T * in, grad_b = column sums of delta (both overwritten)
void dense_backward_params(std::span<const double> delta, std::span<const double> in,
                           std::span<double> grad_w, std::span<double> grad_b,
                           std::size_t batch, std::size_t fan_in, std::size_t fan_out);

// grad_in = delta * weights
void dense_backward_input(std::span<const double> delta, std::span<const double> weights,
                          std::span<double> grad_in, std::size_t batch, std::size_t fan_in,
                          std::size_t fan_out);

// out[p] = mean over k of rows[k * width + p]
void mean_rows(std::span<const double> rows, std::span<double> out, std::size_t count,
               std::size_t width);

// out[k] = || rows[k] - x ||_2
void distances_to(std::span<const double> rows, std::span<const double> x,
                  std::span<double> out, std::size_t count, std::size_t width);

// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

}  // namespace omp

}  // namespace seqfed::kernels
