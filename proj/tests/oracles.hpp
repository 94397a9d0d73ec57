#pragma once

// Independent reference computations for tests. Nothing here calls into the
// library's numeric paths; each oracle re-derives its result the slow way.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "seqfed/model.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline Vec random_vec(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vec v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Triple-loop MLP forward using the documented flat layout.
inline std::vector<Vec> naive_forward(const std::vector<std::size_t>& sizes, bool relu,
                                      const Vec& params, const std::vector<Vec>& inputs) {
  std::vector<Vec> out;
  for (const auto& x0 : inputs) {
    Vec a = x0;
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const std::size_t fi = sizes[l], fo = sizes[l + 1];
      Vec z(fo);
      for (std::size_t o = 0; o < fo; ++o) {
        long double acc = params[off + fo * fi + o];
        for (std::size_t i = 0; i < fi; ++i) acc += (long double)params[off + o * fi + i] * a[i];
        z[o] = (double)acc;
      }
      off += (fi + 1) * fo;
      if (l + 2 < sizes.size())
        for (auto& v : z) v = relu ? std::max(0.0, v) : std::tanh(v);
      a = z;
    }
    out.push_back(a);
  }
  return out;
}

// Softmax cross-entropy in extended precision without max-subtraction
// shortcuts beyond what long double needs.
inline double extended_cross_entropy(const std::vector<Vec>& logits, const std::vector<int>& labels) {
  long double total = 0.0L;
  for (std::size_t b = 0; b < logits.size(); ++b) {
    long double mx = *std::max_element(logits[b].begin(), logits[b].end());
    long double s = 0.0L;
    for (double z : logits[b]) s += expl((long double)z - mx);
    total += logl(s) + mx - (long double)logits[b][labels[b]];
  }
  return (double)(total / (long double)logits.size());
}

// Central finite differences of f at x.
inline Vec finite_difference(const std::function<double(const Vec&)>& f, Vec x, double h = 1e-5) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Max over coordinates of |a-b| / max(|a|, |b|, floor).
inline double max_relative_error(const Vec& a, const Vec& b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

// Neumaier-compensated Euclidean distance.
inline double compensated_l2(const Vec& a, const Vec& b) {
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double term = (a[i] - b[i]) * (a[i] - b[i]);
    const double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return std::sqrt(sum + comp);
}

inline double brute_l2(const Vec& a, const Vec& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += ((long double)a[i] - b[i]) * ((long double)a[i] - b[i]);
  return (double)sqrtl(s);
}

inline Vec brute_mean(const std::vector<Vec>& vs) {
  Vec m(vs.front().size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    long double s = 0.0L;
    for (const auto& v : vs) s += v[i];
    m[i] = (double)(s / (long double)vs.size());
  }
  return m;
}

inline double brute_d1(const Vec& cur, const std::vector<Vec>& pool) {
  long double s = 0.0L;
  for (const auto& m : pool) s += brute_l2(cur, m);
  return (double)(s / (long double)pool.size());
}

// Textbook Adam with L2 weight decay, written independently of the library.
struct ReferenceAdam {
  Vec m, v;
  int t = 0;
  void step(Vec& p, const Vec& g, double lr, double wd) {
    if (m.empty()) m.assign(p.size(), 0.0), v.assign(p.size(), 0.0);
    ++t;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] + wd * p[i];
      m[i] = 0.9 * m[i] + 0.1 * gi;
      v[i] = 0.999 * v[i] + 0.001 * gi * gi;
      const double mh = m[i] / (1.0 - std::pow(0.9, t));
      const double vh = v[i] / (1.0 - std::pow(0.999, t));
      p[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
  }
};

}  // namespace oracle
