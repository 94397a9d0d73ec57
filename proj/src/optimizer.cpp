#include "seqfed/optimizer.hpp"

#include <cmath>
#include <string>

#include "seqfed/error.hpp"

namespace seqfed {

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::kSgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw Error(ErrorKind::kInvalidArgument, "unknown optimizer '" + std::string(name) + "'");
}

void sgd_step(ParamVector& params, const Gradient& grad, double learning_rate) {
  if (grad.size() != params.size()) throw_dimension_mismatch("gradient", params.size(), grad.size());
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= learning_rate * grad[i];
}

void adam_step(AdamState& state, ParamVector& params, const Gradient& grad, double learning_rate,
               double weight_decay) {
  if (grad.size() != params.size()) throw_dimension_mismatch("gradient", params.size(), grad.size());
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size())
    throw_dimension_mismatch("optimizer_state", params.size(), state.first_moment.size());

  ++state.step;
  const auto t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(AdamState::kBeta1, t);
  const double correction2 = 1.0 - std::pow(AdamState::kBeta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i] + weight_decay * params[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = AdamState::kBeta1 * m + (1.0 - AdamState::kBeta1) * g;
    v = AdamState::kBeta2 * v + (1.0 - AdamState::kBeta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + AdamState::kEpsilon);
  }
}

Optimizer::Optimizer(OptimizerKind kind, std::size_t size, double learning_rate,
                     double weight_decay)
    : kind_(kind), learning_rate_(learning_rate), weight_decay_(weight_decay) {
  if (kind_ == OptimizerKind::kAdam) adam_ = AdamState::zeros(size);
}

void Optimizer::step(ParamVector& params, const Gradient& grad) {
  if (kind_ == OptimizerKind::kAdam) {
    adam_step(adam_, params, grad, learning_rate_, weight_decay_);
    return;
  }
  if (weight_decay_ == 0.0) {
    sgd_step(params, grad, learning_rate_);
    return;
  }
  Gradient decayed = grad;
  for (std::size_t i = 0; i < decayed.size(); ++i) decayed[i] += weight_decay_ * params[i];
  sgd_step(params, decayed, learning_rate_);
}

}  // namespace seqfed
