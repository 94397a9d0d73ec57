#include "kernel_elements.hpp"
#include "seqfed/kernels.hpp"

namespace seqfed::kernels::serial {

void dense_forward(std::span<const double> in, std::span<const double> weights,
                   std::span<const double> bias, std::span<double> out, std::size_t batch,
                   std::size_t fan_in, std::size_t fan_out) {
  const double* x = in.data();
  const double* w = weights.data();
  const double* bv = bias.data();
  double* y = out.data();
  const auto n = static_cast<std::ptrdiff_t>(batch * fan_out);
  for (std::ptrdiff_t e = 0; e < n; ++e) {
    const auto b = static_cast<std::size_t>(e) / fan_out;
    const auto o = static_cast<std::size_t>(e) % fan_out;
    y[e] = detail::forward_elem(x + b * fan_in, w + o * fan_in, bv[o], fan_in);
  }
}

void dense_backward_params(std::span<const double> delta, std::span<const double> in,
                           std::span<double> grad_w, std::span<double> grad_b,
                           std::size_t batch, std::size_t fan_in, std::size_t fan_out) {
  const double* d = delta.data();
  const double* x = in.data();
  double* gw = grad_w.data();
  double* gb = grad_b.data();
  const auto n = static_cast<std::ptrdiff_t>(fan_out * fan_in);
  for (std::ptrdiff_t e = 0; e < n; ++e) {
    const auto o = static_cast<std::size_t>(e) / fan_in;
    const auto i = static_cast<std::size_t>(e) % fan_in;
    gw[e] = detail::grad_weight_elem(d, x, o, i, batch, fan_in, fan_out);
  }
  for (std::size_t o = 0; o < fan_out; ++o) gb[o] = detail::grad_bias_elem(d, o, batch, fan_out);
}

void dense_backward_input(std::span<const double> delta, std::span<const double> weights,
                          std::span<double> grad_in, std::size_t batch, std::size_t fan_in,
                          std::size_t fan_out) {
  const double* d = delta.data();
  const double* w = weights.data();
  double* g = grad_in.data();
  const auto n = static_cast<std::ptrdiff_t>(batch * fan_in);
  for (std::ptrdiff_t e = 0; e < n; ++e) {
    const auto b = static_cast<std::size_t>(e) / fan_in;
    const auto i = static_cast<std::size_t>(e) % fan_in;
    g[e] = detail::grad_input_elem(d + b * fan_out, w, i, fan_in, fan_out);
  }
}

void mean_rows(std::span<const double> rows, std::span<double> out, std::size_t count,
               std::size_t width) {
  const double* r = rows.data();
  double* y = out.data();
  const auto n = static_cast<std::ptrdiff_t>(width);
  for (std::ptrdiff_t p = 0; p < n; ++p)
    y[p] = detail::mean_elem(r, static_cast<std::size_t>(p), count, width);
}

void distances_to(std::span<const double> rows, std::span<const double> x,
                  std::span<double> out, std::size_t count, std::size_t width) {
  const double* r = rows.data();
  double* y = out.data();
  const auto n = static_cast<std::ptrdiff_t>(count);
  for (std::ptrdiff_t k = 0; k < n; ++k)
    y[k] = detail::distance_elem(r + static_cast<std::size_t>(k) * width, x.data(), width);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  const double* xs = x.data();
  double* ys = y.data();
  const auto n = static_cast<std::ptrdiff_t>(y.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) ys[i] += a * xs[i];
}

}  // namespace seqfed::kernels::serial
