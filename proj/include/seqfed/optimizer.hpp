#pragma once

#include <cstdint>
#include <string_view>

#include "seqfed/param_vector.hpp"

namespace seqfed {

enum class OptimizerKind { kSgd, kAdam };

std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view name);

// params -= lr * grad
void sgd_step(ParamVector& params, const Gradient& grad, double learning_rate);

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  ParamVector first_moment;
  ParamVector second_moment;
  std::uint64_t step = 0;

  static AdamState zeros(std::size_t size) { return {ParamVector(size), ParamVector(size), 0}; }
};

// Bias-corrected Adam. Weight decay is L2-style: grad + weight_decay * params
// feeds the moment estimates.
void adam_step(AdamState& state, ParamVector& params, const Gradient& grad, double learning_rate,
               double weight_decay);

// One optimizer instance per trained model; state starts at zero.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, std::size_t size, double learning_rate, double weight_decay);

  // SGD applies weight decay the same L2 way before stepping.
  void step(ParamVector& params, const Gradient& grad);

  const AdamState& adam_state() const noexcept { return adam_; }

 private:
  OptimizerKind kind_;
  double learning_rate_;
  double weight_decay_;
  AdamState adam_;
};

}  // namespace seqfed
