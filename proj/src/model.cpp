#include "seqfed/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "seqfed/error.hpp"
#include "seqfed/kernels.hpp"
#include "seqfed/seeding.hpp"

namespace seqfed {

namespace {

void check_batch(const ModelSpec& spec, const ParamVector& params, const Batch& batch) {
  if (params.size() != spec.param_count())
    throw_dimension_mismatch("param_count", spec.param_count(), params.size());
  if (batch.input_dim != spec.input_dim())
    throw_dimension_mismatch("input_dim", spec.input_dim(), batch.input_dim);
  if (batch.features.size() != batch.size() * batch.input_dim)
    throw_dimension_mismatch("batch_rows", batch.size() * batch.input_dim,
                             batch.features.size());
}

double activate(Activation a, double z) {
  return a == Activation::kRelu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

// Derivative expressed through the activation output.
double activate_grad(Activation a, double out) {
  return a == Activation::kRelu ? (out > 0.0 ? 1.0 : 0.0) : 1.0 - out * out;
}

// Per-layer outputs; acts[0] is the input, acts.back() the logits.
std::vector<std::vector<double>> forward_all(const ModelSpec& spec, const ParamVector& params,
                                             const Batch& batch) {
  const auto layers = spec.layers();
  const std::size_t B = batch.size();
  std::vector<std::vector<double>> acts;
  acts.reserve(layers.size() + 1);
  acts.emplace_back(batch.features.begin(), batch.features.end());
  const auto p = params.span();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    std::vector<double> out(B * L.fan_out);
    kernels::omp::dense_forward(acts.back(), p.subspan(L.weight_offset, L.fan_in * L.fan_out),
                                p.subspan(L.bias_offset, L.fan_out), out, B, L.fan_in,
                                L.fan_out);
    if (l + 1 < layers.size())
      for (double& v : out) v = activate(spec.activation, v);
    acts.push_back(std::move(out));
  }
  return acts;
}

}  // namespace

std::string_view to_string(Activation a) { return a == Activation::kRelu ? "relu" : "tanh"; }

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw Error(ErrorKind::kInvalidArgument, "unknown activation '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (layer_sizes.size() < 2)
    throw Error(ErrorKind::kInvalidArgument, "model needs at least an input and an output layer");
  for (auto s : layer_sizes)
    if (s == 0) throw Error(ErrorKind::kInvalidArgument, "layer sizes must be positive");
}

std::size_t ModelSpec::param_count() const {
  std::size_t p = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    p += (layer_sizes[l] + 1) * layer_sizes[l + 1];
  return p;
}

std::vector<LayerSlice> ModelSpec::layers() const {
  std::vector<LayerSlice> out;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    LayerSlice s;
    s.fan_in = layer_sizes[l];
    s.fan_out = layer_sizes[l + 1];
    s.weight_offset = offset;
    s.bias_offset = offset + s.fan_in * s.fan_out;
    offset = s.bias_offset + s.fan_out;
    out.push_back(s);
  }
  return out;
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamVector params(spec.param_count());
  Rng rng(seed);
  for (const auto& L : spec.layers()) {
    const double limit = std::sqrt(6.0 / static_cast<double>(L.fan_in + L.fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < L.fan_in * L.fan_out; ++i) params[L.weight_offset + i] = dist(rng);
  }
  return params;
}

Matrix forward(const ModelSpec& spec, const ParamVector& params, const Batch& batch) {
  check_batch(spec, params, batch);
  auto acts = forward_all(spec, params, batch);
  Matrix logits;
  logits.rows = batch.size();
  logits.cols = spec.class_count();
  logits.data = std::move(acts.back());
  return logits;
}

double cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (labels.empty()) throw Error(ErrorKind::kEmptyInput, "cross_entropy: empty batch");
  if (labels.size() != logits.rows)
    throw_dimension_mismatch("batch_rows", logits.rows, labels.size());
  double total = 0.0;
  for (std::size_t b = 0; b < logits.rows; ++b) {
    const auto row = logits.row(b);
    const int y = labels[b];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols)
      throw Error(ErrorKind::kInvalidArgument,
                  "label " + std::to_string(y) + " out of range for " +
                      std::to_string(logits.cols) + " classes");
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double z : row) sum += std::exp(z - mx);
    total += std::log(sum) - (row[static_cast<std::size_t>(y)] - mx);
  }
  return total / static_cast<double>(logits.rows);
}

LossAndGradient backward(const ModelSpec& spec, const ParamVector& params, const Batch& batch) {
  check_batch(spec, params, batch);
  if (batch.size() == 0) throw Error(ErrorKind::kEmptyInput, "backward: empty batch");
  const auto layers = spec.layers();
  const std::size_t B = batch.size();
  const std::size_t C = spec.class_count();
  auto acts = forward_all(spec, params, batch);

  Matrix logits;
  logits.rows = B;
  logits.cols = C;
  logits.data = acts.back();
  LossAndGradient result;
  result.loss = cross_entropy(logits, batch.labels);

  // dL/dz at the output: (softmax - onehot) / B
  std::vector<double> delta(B * C);
  const double inv_b = 1.0 / static_cast<double>(B);
  for (std::size_t b = 0; b < B; ++b) {
    const auto row = logits.row(b);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) sum += std::exp(row[c] - mx);
    for (std::size_t c = 0; c < C; ++c) {
      const double prob = std::exp(row[c] - mx) / sum;
      const double target = static_cast<std::size_t>(batch.labels[b]) == c ? 1.0 : 0.0;
      delta[b * C + c] = (prob - target) * inv_b;
    }
  }

  result.grad = Gradient(params.size());
  auto g = result.grad.span();
  const auto p = params.span();
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& L = layers[l];
    kernels::omp::dense_backward_params(delta, acts[l],
                                        g.subspan(L.weight_offset, L.fan_in * L.fan_out),
                                        g.subspan(L.bias_offset, L.fan_out), B, L.fan_in,
                                        L.fan_out);
    if (l == 0) break;
    std::vector<double> prev(B * L.fan_in);
    kernels::omp::dense_backward_input(delta, p.subspan(L.weight_offset, L.fan_in * L.fan_out),
                                       prev, B, L.fan_in, L.fan_out);
    const auto& a = acts[l];
    for (std::size_t i = 0; i < prev.size(); ++i) prev[i] *= activate_grad(spec.activation, a[i]);
    delta = std::move(prev);
  }
  return result;
}

double evaluate_accuracy(const ModelSpec& spec, const ParamVector& params, const Batch& batch) {
  if (batch.size() == 0) throw Error(ErrorKind::kEmptyInput, "evaluate_accuracy: empty dataset");
  const Matrix logits = forward(spec, params, batch);
  std::size_t correct = 0;
  for (std::size_t b = 0; b < logits.rows; ++b) {
    const auto row = logits.row(b);
    // max_element returns the first maximum, i.e. the lowest index on ties.
    const auto pred = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (pred == batch.labels[b]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows);
}

double evaluate_accuracy(const ModelSpec& spec, const ParamVector& params, const Dataset& data) {
  return evaluate_accuracy(spec, params, Batch::of(data));
}

double evaluate_accuracy(const ModelSpec& spec, const ParamVector& params, const Dataset& data,
                         std::span<const std::size_t> rows) {
  if (rows.empty()) throw Error(ErrorKind::kEmptyInput, "evaluate_accuracy: empty dataset");
  const Dataset subset = gather(data, rows);
  return evaluate_accuracy(spec, params, subset);
}

}  // namespace seqfed
