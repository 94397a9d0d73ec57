#include "seqfed/param_vector.hpp"

#include <cmath>

#include "seqfed/error.hpp"
#include "seqfed/kernels.hpp"

namespace seqfed {

bool ParamVector::all_finite() const noexcept {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

ParamVector average_params(std::span<const ParamVector> vectors) {
  if (vectors.empty()) throw Error(ErrorKind::kEmptyInput, "average_params: empty list");
  const std::size_t width = vectors.front().size();
  for (const auto& v : vectors)
    if (v.size() != width) throw_dimension_mismatch("param_count", width, v.size());

  // Lay the members out contiguously so the mean is one kernel call.
  std::vector<double> rows;
  rows.reserve(vectors.size() * width);
  for (const auto& v : vectors) rows.insert(rows.end(), v.begin(), v.end());
  ParamVector out(width);
  kernels::omp::mean_rows(rows, out.span(), vectors.size(), width);
  return out;
}

double l2_distance(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) throw_dimension_mismatch("param_count", a.size(), b.size());
  double d = 0.0;
  kernels::serial::distances_to(a.span(), b.span(), {&d, 1}, 1, a.size());
  return d;
}

}  // namespace seqfed
