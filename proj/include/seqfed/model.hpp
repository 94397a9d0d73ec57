#pragma once

// Small multilayer perceptron over a flat parameter vector.
//
// Parameter layout (layer-major): for each layer l with fan_in = sizes[l] and
// fan_out = sizes[l+1], first the weight matrix (fan_out x fan_in, row-major),
// then the bias (fan_out). P = sum over layers of (fan_in + 1) * fan_out.
// Hidden layers apply the activation; the last layer emits raw logits.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "seqfed/param_vector.hpp"
#include "seqfed/tensor.hpp"

namespace seqfed {

enum class Activation { kRelu, kTanh };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct LayerSlice {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

struct ModelSpec {
  std::vector<std::size_t> layer_sizes;  // input dim, hidden dims..., class count
  Activation activation = Activation::kRelu;

  // Throws unless there are >= 2 positive sizes.
  void validate() const;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t class_count() const { return layer_sizes.back(); }
  std::size_t layer_count() const { return layer_sizes.size() - 1; }
  std::size_t param_count() const;
  std::vector<LayerSlice> layers() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Glorot-uniform weights, zero biases.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

// Logits for every row of the batch (B x classes).
Matrix forward(const ModelSpec& spec, const ParamVector& params, const Batch& batch);

// Mean negative log-softmax probability of the true class.
double cross_entropy(const Matrix& logits, std::span<const int> labels);

struct LossAndGradient {
  double loss = 0.0;
  Gradient grad;
};

// Cross-entropy loss and its analytic gradient with respect to params.
LossAndGradient backward(const ModelSpec& spec, const ParamVector& params, const Batch& batch);

// Top-1 accuracy; ties go to the lowest class index.
double evaluate_accuracy(const ModelSpec& spec, const ParamVector& params, const Batch& batch);
double evaluate_accuracy(const ModelSpec& spec, const ParamVector& params, const Dataset& data);
double evaluate_accuracy(const ModelSpec& spec, const ParamVector& params, const Dataset& data,
                         std::span<const std::size_t> rows);

}  // namespace seqfed
