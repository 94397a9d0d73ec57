#include <omp.h>

#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "seqfed/error.hpp"
#include "seqfed/kernels.hpp"
#include "seqfed/model.hpp"
#include "seqfed/param_vector.hpp"

using namespace seqfed;

namespace {

Dataset random_dataset(std::size_t n, std::size_t d, int classes, std::mt19937_64& rng) {
  Dataset ds;
  ds.class_count = classes;
  ds.features = Matrix(n, d);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> y(0, classes - 1);
  for (auto& x : ds.features.data) x = u(rng);
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(y(rng));
  return ds;
}

std::vector<oracle::Vec> rows_of(const Dataset& ds) {
  std::vector<oracle::Vec> rows;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const auto row = ds.features.row(r);
    rows.emplace_back(row.begin(), row.end());
  }
  return rows;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("omp kernels are bitwise equal to the serial reference across thread counts") {
    std::mt19937_64 rng(7);
    const std::size_t shapes[][3] = {{1, 1, 1}, {3, 5, 2}, {64, 32, 64}, {130, 70, 40}};
    for (int threads : {1, 3, 4}) {
      omp_set_num_threads(threads);
      for (const auto& s : shapes) {
        const std::size_t B = s[0], I = s[1], O = s[2];
        const auto in = oracle::random_vec(B * I, rng);
        const auto w = oracle::random_vec(O * I, rng);
        const auto b = oracle::random_vec(O, rng);
        const auto delta = oracle::random_vec(B * O, rng);

        std::vector<double> f1(B * O), f2(B * O);
        kernels::serial::dense_forward(in, w, b, f1, B, I, O);
        kernels::omp::dense_forward(in, w, b, f2, B, I, O);
        CHECK(f1 == f2);

        std::vector<double> gw1(O * I), gb1(O), gw2(O * I), gb2(O);
        kernels::serial::dense_backward_params(delta, in, gw1, gb1, B, I, O);
        kernels::omp::dense_backward_params(delta, in, gw2, gb2, B, I, O);
        CHECK(gw1 == gw2);
        CHECK(gb1 == gb2);

        std::vector<double> gi1(B * I), gi2(B * I);
        kernels::serial::dense_backward_input(delta, w, gi1, B, I, O);
        kernels::omp::dense_backward_input(delta, w, gi2, B, I, O);
        CHECK(gi1 == gi2);

        std::vector<double> m1(I), m2(I), d1(B), d2(B);
        kernels::serial::mean_rows(in, m1, B, I);
        kernels::omp::mean_rows(in, m2, B, I);
        CHECK(m1 == m2);
        const auto x = oracle::random_vec(I, rng);
        kernels::serial::distances_to(in, x, d1, B, I);
        kernels::omp::distances_to(in, x, d2, B, I);
        CHECK(d1 == d2);

        auto y1 = oracle::random_vec(B * I, rng);
        auto y2 = y1;
        kernels::serial::axpy(0.37, in, y1);
        kernels::omp::axpy(0.37, in, y2);
        CHECK(y1 == y2);
      }
    }
    omp_set_num_threads(1);
  }
}

TEST_SUITE("param_core") {
  TEST_CASE("param_count and layout") {
    ModelSpec spec{{4, 8, 3}, Activation::kRelu};
    CHECK(spec.param_count() == (4 + 1) * 8 + (8 + 1) * 3);
    const auto layers = spec.layers();
    REQUIRE(layers.size() == 2);
    CHECK(layers[0].weight_offset == 0);
    CHECK(layers[0].bias_offset == 32);
    CHECK(layers[1].weight_offset == 40);
    CHECK(layers[1].bias_offset == 64);
    CHECK_THROWS_AS(ModelSpec{{3}}.validate(), Error);
    CHECK_THROWS_AS((ModelSpec{{3, 0, 2}}.validate()), Error);
  }

  TEST_CASE("init_params is Glorot-uniform with zero bias and seeded") {
    ModelSpec spec{{4, 8, 3}, Activation::kRelu};
    const auto p = init_params(spec, 11);
    CHECK(p == init_params(spec, 11));
    CHECK(p != init_params(spec, 12));
    for (const auto& L : spec.layers()) {
      const double lim = std::sqrt(6.0 / double(L.fan_in + L.fan_out));
      for (std::size_t i = 0; i < L.fan_in * L.fan_out; ++i)
        CHECK(std::abs(p[L.weight_offset + i]) <= lim);
      for (std::size_t o = 0; o < L.fan_out; ++o) CHECK(p[L.bias_offset + o] == 0.0);
    }
  }

  TEST_CASE("forward: identity, zero and naive oracle") {
    ModelSpec linear{{2, 2}, Activation::kRelu};
    const ParamVector identity{1, 0, 0, 1, 0, 0};
    const std::vector<double> x{3, 4};
    const std::vector<int> y{0};
    const auto logits = forward(linear, identity, {x, y, 2});
    CHECK(logits.data == std::vector<double>{3, 4});

    std::mt19937_64 rng(3);
    ModelSpec spec{{2, 3, 2}, Activation::kRelu};
    const auto ds = random_dataset(6, 2, 2, rng);
    const auto zero = forward(spec, ParamVector(spec.param_count()), Batch::of(ds));
    for (double v : zero.data) CHECK(v == 0.0);

    for (auto act : {Activation::kRelu, Activation::kTanh}) {
      spec.activation = act;
      const auto params = init_params(spec, 99);
      const auto got = forward(spec, params, Batch::of(ds));
      const auto want = oracle::naive_forward(spec.layer_sizes, act == Activation::kRelu,
                                              params.values(), rows_of(ds));
      for (std::size_t b = 0; b < ds.size(); ++b)
        for (std::size_t c = 0; c < 2; ++c) CHECK(got(b, c) == doctest::Approx(want[b][c]).epsilon(1e-12));
      CHECK(got == forward(spec, params, Batch::of(ds)));
    }
  }

  TEST_CASE("forward dimension errors name the axis") {
    ModelSpec spec{{2, 3, 2}, Activation::kRelu};
    const std::vector<double> x{1, 2, 3};
    const std::vector<int> y{0};
    try {
      forward(spec, init_params(spec, 1), {x, y, 3});
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kDimensionMismatch);
      CHECK(std::string(e.what()).find("input_dim") != std::string::npos);
    }
    try {
      forward(spec, ParamVector(5), {std::span(x).first(2), y, 2});
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("param_count") != std::string::npos);
    }
  }

  TEST_CASE("cross_entropy values") {
    Matrix uniform(1, 2, 0.0);
    CHECK(cross_entropy(uniform, std::vector<int>{0}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    Matrix extreme(1, 2);
    extreme(0, 0) = 1000.0;
    extreme(0, 1) = -1000.0;
    const double l = cross_entropy(extreme, std::vector<int>{0});
    CHECK(std::isfinite(l));
    CHECK(l == doctest::Approx(0.0));
    CHECK_THROWS_AS(cross_entropy(Matrix(0, 2), std::vector<int>{}), Error);
    CHECK_THROWS_AS(cross_entropy(uniform, std::vector<int>{2}), Error);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      Matrix logits(4, 3);
      std::vector<oracle::Vec> rows(4, oracle::Vec(3));
      std::uniform_real_distribution<double> u(-20.0, 20.0);
      std::vector<int> labels;
      for (std::size_t b = 0; b < 4; ++b) {
        for (std::size_t c = 0; c < 3; ++c) rows[b][c] = logits(b, c) = u(rng);
        labels.push_back(static_cast<int>(rng() % 3));
      }
      CHECK(cross_entropy(logits, labels) ==
            doctest::Approx(oracle::extended_cross_entropy(rows, labels)).epsilon(1e-12));
    }
    for (std::size_t classes : {2u, 3u, 7u, 10u}) {
      Matrix flat(3, classes, 1.25);
      CHECK(cross_entropy(flat, std::vector<int>{0, 1, 1}) == std::log(double(classes)));
    }
  }

  TEST_CASE("backward matches central finite differences") {
    std::mt19937_64 rng(21);
    const std::vector<std::vector<std::size_t>> specs{{2, 2}, {2, 3, 2}, {4, 8, 3}};
    for (auto act : {Activation::kTanh, Activation::kRelu}) {
      for (const auto& sizes : specs) {
        ModelSpec spec{sizes, act};
        for (int point = 0; point < 20; ++point) {
          const auto ds = random_dataset(5, sizes.front(), int(sizes.back()), rng);
          const ParamVector params(oracle::random_vec(spec.param_count(), rng));
          const auto lg = backward(spec, params, Batch::of(ds));
          CHECK(lg.loss == cross_entropy(forward(spec, params, Batch::of(ds)), ds.labels));
          const auto fd = oracle::finite_difference(
              [&](const oracle::Vec& p) {
                return oracle::extended_cross_entropy(
                    oracle::naive_forward(sizes, act == Activation::kRelu, p, rows_of(ds)), ds.labels);
              },
              params.values());
          CHECK(oracle::max_relative_error(lg.grad.values(), fd) < 1e-5);
        }
      }
    }
  }

  TEST_CASE("backward edge cases") {
    ModelSpec spec{{2, 2}, Activation::kRelu};
    // One-hot saturated logits for the (identical) true class.
    const ParamVector saturated{0, 0, 0, 0, 50, -50};
    const std::vector<double> x{0.3, -0.2, 1.0, 0.5};
    const std::vector<int> y{0, 0};
    const auto lg = backward(spec, saturated, {x, y, 2});
    double norm = 0.0;
    for (double g : lg.grad) norm += g * g;
    CHECK(std::sqrt(norm) < 1e-30);

    ModelSpec deep{{3, 4, 2}, Activation::kTanh};
    const auto params = init_params(deep, 2);
    const std::vector<double> zeros(6, 0.0);
    const std::vector<int> labels{0, 1};
    const auto zg = backward(deep, params, {zeros, labels, 3});
    const auto first = deep.layers()[0];
    for (std::size_t i = 0; i < first.fan_in * first.fan_out; ++i) CHECK(zg.grad[first.weight_offset + i] == 0.0);
  }

  TEST_CASE("average_params") {
    const std::vector<ParamVector> three{{0, 0}, {2, 2}, {4, -2}};
    CHECK(average_params(three) == ParamVector{2, 0});
    const ParamVector v{1.5, -3.25, 7.0};
    CHECK(average_params(std::vector<ParamVector>{v}) == v);
    CHECK(average_params(std::vector<ParamVector>{v, v, v}) == v);
    CHECK_THROWS_AS(average_params(std::vector<ParamVector>{}), Error);
    CHECK_THROWS_AS(average_params(std::vector<ParamVector>{{1, 2}, {1}}), Error);

    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<ParamVector> vs;
      for (int k = 0; k < 5; ++k) vs.emplace_back(oracle::random_vec(12, rng));
      const auto avg = average_params(vs);
      auto shuffled = vs;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      const auto avg2 = average_params(shuffled);
      for (std::size_t i = 0; i < 12; ++i) {
        CHECK(avg[i] == doctest::Approx(avg2[i]).epsilon(1e-14));
        double lo = 1e300, hi = -1e300;
        for (const auto& x : vs) lo = std::min(lo, x[i]), hi = std::max(hi, x[i]);
        CHECK(avg[i] >= lo);
        CHECK(avg[i] <= hi);
      }
    }
  }

  TEST_CASE("l2_distance") {
    CHECK(l2_distance({0, 0}, {3, 4}) == 5.0);
    const ParamVector a{0.1, 0.2, 0.3};
    CHECK(l2_distance(a, a) == 0.0);
    CHECK_THROWS_AS(l2_distance({1}, {1, 2}), Error);

    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
      const auto x = oracle::random_vec(100, rng);
      const auto y = oracle::random_vec(100, rng);
      const auto z = oracle::random_vec(100, rng);
      const double dxy = l2_distance(ParamVector(x), ParamVector(y));
      CHECK(dxy == doctest::Approx(oracle::compensated_l2(x, y)).epsilon(1e-12));
      CHECK(dxy == l2_distance(ParamVector(y), ParamVector(x)));
      CHECK(dxy <= l2_distance(ParamVector(x), ParamVector(z)) +
                       l2_distance(ParamVector(z), ParamVector(y)) + 1e-12);
      CHECK(dxy > 0.0);
    }
  }

  TEST_CASE("evaluate_accuracy") {
    ModelSpec linear{{2, 2}, Activation::kRelu};
    const ParamVector identity{1, 0, 0, 1, 0, 0};
    Dataset sep;
    sep.class_count = 2;
    sep.features = Matrix(4, 2);
    sep.features.data = {2, 0, 3, 1, 0, 2, 1, 5};
    sep.labels = {0, 0, 1, 1};
    CHECK(evaluate_accuracy(linear, identity, sep) == 1.0);

    // Constant logits: every prediction is class 0.
    const ParamVector constant(linear.param_count(), 0.0);
    CHECK(evaluate_accuracy(linear, constant, sep) == 0.5);
    Dataset skewed = sep;
    skewed.labels = {0, 1, 1, 1};
    CHECK(evaluate_accuracy(linear, constant, skewed) == 0.25);

    Dataset empty;
    empty.class_count = 2;
    empty.features = Matrix(0, 2);
    CHECK_THROWS_AS(evaluate_accuracy(linear, identity, empty), Error);

    std::mt19937_64 rng(17);
    ModelSpec spec{{4, 6, 3}, Activation::kRelu};
    const auto ds = random_dataset(200, 4, 3, rng);
    const auto params = init_params(spec, 5);
    const auto logits = oracle::naive_forward(spec.layer_sizes, true, params.values(), rows_of(ds));
    std::size_t correct = 0;
    for (std::size_t b = 0; b < ds.size(); ++b) {
      int best = 0;
      for (int c = 1; c < 3; ++c)
        if (logits[b][c] > logits[b][best]) best = c;
      correct += best == ds.labels[b];
    }
    CHECK(evaluate_accuracy(spec, params, ds) == double(correct) / 200.0);
    std::vector<std::size_t> rows{3, 10, 50};
    CHECK(evaluate_accuracy(spec, params, ds, rows) == evaluate_accuracy(spec, params, gather(ds, rows)));
  }
}
