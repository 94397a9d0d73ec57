#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace seqfed {

// Flat real-valued parameter vector. Every model, pool member and gradient in
// the library is one of these; the layer layout is owned by ModelSpec.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t size, double fill = 0.0) : values_(size, fill) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}
  ParamVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  const std::vector<double>& values() const noexcept { return values_; }

  bool all_finite() const noexcept;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

// Gradients share the parameter layout.
using Gradient = ParamVector;

// Elementwise arithmetic mean. Throws on an empty list or mixed lengths.
ParamVector average_params(std::span<const ParamVector> vectors);

// Euclidean norm of (a - b).
double l2_distance(const ParamVector& a, const ParamVector& b);

}  // namespace seqfed
