#include "seqfed/diversity.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "seqfed/error.hpp"
#include "seqfed/kernels.hpp"

namespace seqfed {

namespace {

void check_width(const ParamVector& current, const ModelPool& pool) {
  if (current.size() != pool.width())
    throw_dimension_mismatch("param_count", pool.width(), current.size());
}

double dot(const ParamVector& a, const ParamVector& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double pow10i(int k) {
  double p = 1.0;
  for (int i = 0; i < (k < 0 ? -k : k); ++i) p *= 10.0;
  return k < 0 ? 1.0 / p : p;
}

// d scaled by 10^-k; dividing by an exact power of ten keeps 45 -> 0.45 exact.
double apply_shift(double d, int k) {
  return k >= 0 ? d / pow10i(k) : d * pow10i(-k);
}

}  // namespace

std::string_view to_string(DistanceMeasure m) {
  switch (m) {
    case DistanceMeasure::kL2: return "l2";
    case DistanceMeasure::kL1: return "l1";
    case DistanceMeasure::kCosine: return "cosine";
  }
  return "l2";
}

DistanceMeasure parse_distance_measure(std::string_view name) {
  if (name == "l2") return DistanceMeasure::kL2;
  if (name == "l1") return DistanceMeasure::kL1;
  if (name == "cosine") return DistanceMeasure::kCosine;
  throw Error(ErrorKind::kInvalidArgument, "unknown distance measure '" + std::string(name) + "'");
}

ModelPool::ModelPool(ParamVector seed) {
  if (seed.empty()) throw Error(ErrorKind::kEmptyInput, "model pool seed is empty");
  flat_.assign(seed.begin(), seed.end());
  models_.push_back(std::move(seed));
}

void ModelPool::add(ParamVector model) {
  if (model.size() != width()) throw_dimension_mismatch("param_count", width(), model.size());
  flat_.insert(flat_.end(), model.begin(), model.end());
  models_.push_back(std::move(model));
}

double distance(const ParamVector& a, const ParamVector& b, DistanceMeasure measure) {
  if (a.size() != b.size()) throw_dimension_mismatch("param_count", a.size(), b.size());
  switch (measure) {
    case DistanceMeasure::kL2: return l2_distance(a, b);
    case DistanceMeasure::kL1: {
      double acc = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
      return acc / static_cast<double>(a.size());
    }
    case DistanceMeasure::kCosine: {
      const double denom = std::sqrt(dot(a, a)) * std::sqrt(dot(b, b));
      if (denom < 1e-12) return 1.0;
      return 1.0 - dot(a, b) / denom;
    }
  }
  return 0.0;
}

Gradient distance_gradient(const ParamVector& current, const ParamVector& other,
                           DistanceMeasure measure, double epsilon) {
  if (current.size() != other.size())
    throw_dimension_mismatch("param_count", current.size(), other.size());
  const std::size_t n = current.size();
  Gradient g(n);
  switch (measure) {
    case DistanceMeasure::kL2: {
      const double norm = std::max(l2_distance(current, other), epsilon);
      for (std::size_t i = 0; i < n; ++i) g[i] = (current[i] - other[i]) / norm;
      break;
    }
    case DistanceMeasure::kL1: {
      const double inv = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double d = current[i] - other[i];
        g[i] = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
      }
      break;
    }
    case DistanceMeasure::kCosine: {
      const double na = std::sqrt(dot(current, current));
      const double nb = std::sqrt(dot(other, other));
      if (na * nb < epsilon) break;
      const double ab = dot(current, other);
      for (std::size_t i = 0; i < n; ++i)
        g[i] = -(other[i] / (na * nb) - ab * current[i] / (na * na * na * nb));
      break;
    }
  }
  return g;
}

ParamVector pool_mean(const ModelPool& pool) {
  ParamVector out(pool.width());
  kernels::omp::mean_rows(pool.flat(), out.span(), pool.size(), pool.width());
  return out;
}

double distance_d1(const ParamVector& current, const ModelPool& pool, DistanceMeasure measure) {
  check_width(current, pool);
  double acc = 0.0;
  if (measure == DistanceMeasure::kL2) {
    std::vector<double> d(pool.size());
    kernels::omp::distances_to(pool.flat(), current.span(), d, pool.size(), pool.width());
    for (double v : d) acc += v;
  } else {
    for (const auto& m : pool.models()) acc += distance(current, m, measure);
  }
  return acc / static_cast<double>(pool.size());
}

double distance_d2(const ParamVector& current, const ModelPool& pool, DistanceMeasure measure) {
  check_width(current, pool);
  return distance(current, pool.seed(), measure);
}

int order_of_magnitude(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw Error(ErrorKind::kInvalidArgument, "order_of_magnitude needs a finite positive value");
  int e = static_cast<int>(std::floor(std::log10(x)));
  // log10 may land one ulp off at exact powers of ten.
  if (pow10i(e) > x) --e;
  if (pow10i(e + 1) <= x) ++e;
  return e;
}

double magnitude_scale(double d, double ell) {
  if (!(ell > 0.0)) throw Error(ErrorKind::kInvalidArgument, "magnitude_normalize: loss must be > 0");
  if (d < 0.0) throw Error(ErrorKind::kInvalidArgument, "magnitude_normalize: distance must be >= 0");
  if (d == 0.0) return 1.0;
  const int target = order_of_magnitude(ell) - 1;
  const int k = order_of_magnitude(d) - target;
  return apply_shift(1.0, k);
}

double magnitude_normalize(double d, double ell) {
  if (!(ell > 0.0)) throw Error(ErrorKind::kInvalidArgument, "magnitude_normalize: loss must be > 0");
  if (d < 0.0) throw Error(ErrorKind::kInvalidArgument, "magnitude_normalize: distance must be >= 0");
  if (d == 0.0) return 0.0;
  const int target = order_of_magnitude(ell) - 1;
  return apply_shift(d, order_of_magnitude(d) - target);
}

double total_loss(double ell, double d1_normalized, double d2_normalized,
                  const RegularizerConfig& cfg) {
  double total = ell;
  if (cfg.enable_d1) total -= cfg.alpha * d1_normalized;
  if (cfg.enable_d2) total += cfg.beta * d2_normalized;
  return total;
}

RegularizerTerms evaluate_terms(const ParamVector& current, const ModelPool& pool,
                                const RegularizerConfig& cfg, double d1_scale, double d2_scale) {
  check_width(current, pool);
  RegularizerTerms t;
  if (cfg.enable_d1) t.d1_raw = distance_d1(current, pool, cfg.measure);
  if (cfg.enable_d2) t.d2_raw = distance_d2(current, pool, cfg.measure);
  t.d1_scale = d1_scale;
  t.d2_scale = d2_scale;
  return t;
}

RegularizerTerms evaluate_terms(const ParamVector& current, const ModelPool& pool,
                                const RegularizerConfig& cfg, double ell) {
  RegularizerTerms t = evaluate_terms(current, pool, cfg, 1.0, 1.0);
  if (!cfg.normalize) return t;
  if (!(ell > 0.0)) {
    t.d1_scale = 0.0;
    t.d2_scale = 0.0;
    return t;
  }
  t.d1_scale = magnitude_scale(t.d1_raw, ell);
  t.d2_scale = magnitude_scale(t.d2_raw, ell);
  return t;
}

Gradient total_gradient(const Gradient& grad_ell, const ParamVector& current,
                        const ModelPool& pool, const RegularizerConfig& cfg,
                        const RegularizerTerms& terms) {
  check_width(current, pool);
  if (grad_ell.size() != current.size())
    throw_dimension_mismatch("gradient", current.size(), grad_ell.size());
  Gradient g = grad_ell;
  if (cfg.d1_active() && terms.d1_scale != 0.0) {
    const double coef = -cfg.alpha * terms.d1_scale / static_cast<double>(pool.size());
    for (const auto& m : pool.models())
      kernels::omp::axpy(coef, distance_gradient(current, m, cfg.measure, cfg.epsilon).span(),
                         g.span());
  }
  if (cfg.d2_active() && terms.d2_scale != 0.0) {
    const double coef = cfg.beta * terms.d2_scale;
    kernels::omp::axpy(
        coef, distance_gradient(current, pool.seed(), cfg.measure, cfg.epsilon).span(), g.span());
  }
  return g;
}

Gradient total_gradient(const Gradient& grad_ell, const ParamVector& current,
                        const ModelPool& pool, const RegularizerConfig& cfg, double ell) {
  return total_gradient(grad_ell, current, pool, cfg, evaluate_terms(current, pool, cfg, ell));
}

Matrix pool_pairwise_distances(const ModelPool& pool, DistanceMeasure measure) {
  const std::size_t k = pool.size();
  Matrix out(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const double d = distance(pool[i], pool[j], measure);
      out(i, j) = d;
      out(j, i) = d;
    }
  return out;
}

void write_distance_csv(std::ostream& os, const Matrix& distances) {
  os << "model";
  for (std::size_t j = 0; j < distances.cols; ++j) os << ',' << j;
  os << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < distances.rows; ++i) {
    os << i;
    for (std::size_t j = 0; j < distances.cols; ++j) os << ',' << distances(i, j);
    os << '\n';
  }
}

}  // namespace seqfed
