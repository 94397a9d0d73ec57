#pragma once

// Model pool and the diversity-regularized local objective
//
//   L(m) = loss(m) - alpha * s1 * d1(m) + beta * s2 * d2(m)
//
// where d1 is the mean distance from m to every pool member (seed included),
// d2 the distance from m to the pool's seed model, and s1, s2 power-of-ten
// factors that put each distance one order of magnitude below the loss.

#include <cstddef>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "seqfed/param_vector.hpp"
#include "seqfed/tensor.hpp"

namespace seqfed {

enum class DistanceMeasure { kL2, kL1, kCosine };

std::string_view to_string(DistanceMeasure m);
DistanceMeasure parse_distance_measure(std::string_view name);

struct RegularizerConfig {
  double alpha = 0.06;
  double beta = 1.0;
  bool enable_d1 = true;
  bool enable_d2 = true;
  DistanceMeasure measure = DistanceMeasure::kL2;
  double epsilon = 1e-12;
  // Rescale distances to one order of magnitude below the loss.
  bool normalize = true;
  // When false the scale factors are fixed at the first step of each epoch.
  bool normalize_every_step = true;

  bool d1_active() const { return enable_d1 && alpha != 0.0; }
  bool d2_active() const { return enable_d2 && beta != 0.0; }

  friend bool operator==(const RegularizerConfig&, const RegularizerConfig&) = default;
};

// Ordered, never-empty list of same-length models. Index 0 is the seed model
// the client received (or warmed up); trained models are appended.
class ModelPool {
 public:
  explicit ModelPool(ParamVector seed);

  void add(ParamVector model);

  std::size_t size() const noexcept { return models_.size(); }
  std::size_t width() const noexcept { return models_.front().size(); }
  const ParamVector& seed() const noexcept { return models_.front(); }
  const ParamVector& operator[](std::size_t i) const { return models_[i]; }
  const std::vector<ParamVector>& models() const noexcept { return models_; }

  // Members laid out back to back (size() x width()).
  std::span<const double> flat() const noexcept { return flat_; }

 private:
  std::vector<ParamVector> models_;
  std::vector<double> flat_;
};

double distance(const ParamVector& a, const ParamVector& b, DistanceMeasure measure);

// Gradient of distance(current, other) with respect to current. Zero where the
// distance is not differentiable (coincident points, zero vectors for cosine).
Gradient distance_gradient(const ParamVector& current, const ParamVector& other,
                           DistanceMeasure measure, double epsilon);

ParamVector pool_mean(const ModelPool& pool);

double distance_d1(const ParamVector& current, const ModelPool& pool,
                   DistanceMeasure measure = DistanceMeasure::kL2);
double distance_d2(const ParamVector& current, const ModelPool& pool,
                   DistanceMeasure measure = DistanceMeasure::kL2);

// Power-of-ten factor 10^-k such that d * factor has order of magnitude
// floor(log10(ell)) - 1. Returns 1 for d == 0. Throws if ell <= 0.
double magnitude_scale(double d, double ell);
double magnitude_normalize(double d, double ell);

// floor(log10(x)) for x > 0, exact at powers of ten.
int order_of_magnitude(double x);

double total_loss(double ell, double d1_normalized, double d2_normalized,
                  const RegularizerConfig& cfg);

// Raw distances and the (detached) scale factors applied to them.
struct RegularizerTerms {
  double d1_raw = 0.0;
  double d2_raw = 0.0;
  double d1_scale = 1.0;
  double d2_scale = 1.0;

  double d1_normalized() const { return d1_raw * d1_scale; }
  double d2_normalized() const { return d2_raw * d2_scale; }
};

// Evaluates the active distances for `current`. With normalization on, the
// scales come from magnitude_scale against ell; a non-positive ell (a batch
// fitted exactly) zeroes both scales.
RegularizerTerms evaluate_terms(const ParamVector& current, const ModelPool& pool,
                                const RegularizerConfig& cfg, double ell);

// Same, but reusing previously fixed scale factors.
RegularizerTerms evaluate_terms(const ParamVector& current, const ModelPool& pool,
                                const RegularizerConfig& cfg, double d1_scale, double d2_scale);

Gradient total_gradient(const Gradient& grad_ell, const ParamVector& current,
                        const ModelPool& pool, const RegularizerConfig& cfg, double ell);
Gradient total_gradient(const Gradient& grad_ell, const ParamVector& current,
                        const ModelPool& pool, const RegularizerConfig& cfg,
                        const RegularizerTerms& terms);

// Symmetric |pool| x |pool| matrix of member distances, zero diagonal.
Matrix pool_pairwise_distances(const ModelPool& pool,
                               DistanceMeasure measure = DistanceMeasure::kL2);

// CSV with a header row of model indices and one row per model.
void write_distance_csv(std::ostream& os, const Matrix& distances);

}  // namespace seqfed
