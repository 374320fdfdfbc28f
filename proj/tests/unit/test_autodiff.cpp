#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "tagrec/errors.hpp"
#include "tagrec/ops.hpp"

using namespace tagrec;

namespace {

using T = Tape<double>;
using Build = std::function<Var(T&, const std::vector<Var>&)>;

Tensor<double> randn(Shape shape, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sd);
  Tensor<double> t(shape);
  for (auto& x : t.data) x = d(rng);
  return t;
}

// Scalar probe sum(op(inputs) * w) with fixed random weights w.
double probe(const Build& build, const std::vector<Tensor<double>>& inputs, std::vector<Tensor<double>>* grads) {
  T tape(grads != nullptr);
  std::vector<Var> vars;
  for (const auto& x : inputs) vars.push_back(tape.leaf(x, grads != nullptr));
  const Var out = build(tape, vars);
  const auto& shape = tape.value(out).shape;
  const Var w = tape.constant(randn(shape, 99));
  const Var loss = ops::sum(tape, ops::mul(tape, out, w));
  if (grads) {
    tape.backward(loss);
    grads->clear();
    for (const Var v : vars) grads->push_back(tape.grad(v));
  }
  return tape.value(loss).data[0];
}

void check_op(const Build& build, std::vector<Tensor<double>> inputs, double h = 1e-6, double tol = 1e-6) {
  std::vector<Tensor<double>> analytic;
  probe(build, inputs, &analytic);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t j = 0; j < inputs[i].size(); ++j) {
      const double saved = inputs[i].data[j];
      inputs[i].data[j] = saved + h;
      const double up = probe(build, inputs, nullptr);
      inputs[i].data[j] = saved - h;
      const double down = probe(build, inputs, nullptr);
      inputs[i].data[j] = saved;
      const double numeric = (up - down) / (2 * h);
      INFO("input " << i << " entry " << j);
      CHECK(analytic[i].data[j] == doctest::Approx(numeric).epsilon(tol).scale(1.0));
    }
  }
}

}  // namespace

TEST_SUITE("autodiff") {
  TEST_CASE("matmul and matmul_bt") {
    check_op([](T& t, const std::vector<Var>& v) { return ops::matmul(t, v[0], v[1]); },
             {randn({3, 4}, 1), randn({4, 5}, 2)});
    check_op([](T& t, const std::vector<Var>& v) { return ops::matmul_bt(t, v[0], v[1]); },
             {randn({3, 4}, 3), randn({6, 4}, 4)});
  }

  TEST_CASE("add broadcasts a row; mul, scale and add_scalar") {
    check_op([](T& t, const std::vector<Var>& v) { return ops::add(t, v[0], v[1]); },
             {randn({4, 3}, 5), randn({3}, 6)});
    check_op([](T& t, const std::vector<Var>& v) { return ops::add(t, v[0], v[1]); },
             {randn({4, 3}, 5), randn({4, 3}, 7)});
    check_op([](T& t, const std::vector<Var>& v) { return ops::mul(t, v[0], v[1]); },
             {randn({2, 5}, 8), randn({2, 5}, 9)});
    check_op([](T& t, const std::vector<Var>& v) { return ops::add_scalar(t, ops::scale(t, v[0], -1.7), 0.3); },
             {randn({2, 5}, 10)});
  }

  TEST_CASE("softmax, layer norm, gelu, sigmoid") {
    check_op([](T& t, const std::vector<Var>& v) { return ops::softmax_rows(t, v[0]); }, {randn({3, 7}, 11)});
    check_op([](T& t, const std::vector<Var>& v) { return ops::layer_norm(t, v[0], v[1], v[2]); },
             {randn({3, 6}, 12), randn({6}, 13), randn({6}, 14)}, 1e-6, 1e-5);
    check_op([](T& t, const std::vector<Var>& v) { return ops::gelu(t, v[0]); }, {randn({4, 4}, 15, 2.0)});
    check_op([](T& t, const std::vector<Var>& v) { return ops::sigmoid(t, v[0]); }, {randn({4, 4}, 16, 3.0)});
  }

  TEST_CASE("log and clamp") {
    Tensor<double> x({2, 3}, {0.1, 0.5, 0.9, 0.2, 0.7, 0.05});
    check_op([](T& t, const std::vector<Var>& v) { return ops::log(t, v[0]); }, {x});
    // Clamped entries pass no gradient; keep probes clear of the bounds.
    Tensor<double> y({1, 4}, {-2.0, 0.3, 0.6, 2.0});
    std::vector<Tensor<double>> g;
    probe([](T& t, const std::vector<Var>& v) { return ops::clamp(t, v[0], 0.0, 1.0); }, {y}, &g);
    CHECK(g[0].data[0] == 0.0);
    CHECK(g[0].data[3] == 0.0);
    check_op([](T& t, const std::vector<Var>& v) { return ops::clamp(t, v[0], 0.0, 1.0); }, {y});
  }

  TEST_CASE("embedding accumulates repeated ids") {
    const std::vector<std::int32_t> ids = {2, 0, 2, 3};
    check_op([&](T& t, const std::vector<Var>& v) { return ops::embedding(t, v[0], ids); }, {randn({5, 3}, 17)});
  }

  TEST_CASE("masked pooling ignores masked rows") {
    const std::vector<std::uint8_t> mask = {1, 1, 0, 1, 0};
    check_op([&](T& t, const std::vector<Var>& v) { return ops::masked_mean(t, v[0], mask); }, {randn({5, 4}, 18)});
    check_op([&](T& t, const std::vector<Var>& v) { return ops::masked_max(t, v[0], mask); }, {randn({5, 4}, 19)});
    std::vector<Tensor<double>> g;
    probe([&](T& t, const std::vector<Var>& v) { return ops::masked_mean(t, v[0], mask); }, {randn({5, 4}, 18)}, &g);
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(g[0].at(2, c) == 0.0);
      CHECK(g[0].at(4, c) == 0.0);
    }
  }

  TEST_CASE("concat and slice") {
    check_op([](T& t, const std::vector<Var>& v) { return ops::concat_cols(t, {v[0], v[1], v[0]}); },
             {randn({2, 3}, 20), randn({2, 2}, 21)});
    check_op([](T& t, const std::vector<Var>& v) { return ops::concat_rows(t, {v[0], v[1]}); },
             {randn({2, 3}, 22), randn({4, 3}, 23)});
    check_op([](T& t, const std::vector<Var>& v) { return ops::slice_cols(t, v[0], 1, 3); }, {randn({3, 5}, 24)});
    check_op([](T& t, const std::vector<Var>& v) { return ops::slice_rows(t, v[0], 2, 4); }, {randn({5, 3}, 25)});
  }

  TEST_CASE("a value used twice receives both gradient contributions") {
    T tape;
    const Var x = tape.leaf(Tensor<double>({1, 1}, {3.0}));
    const Var y = ops::mul(tape, x, x);  // x^2
    const Var z = ops::add(tape, y, x);  // x^2 + x
    tape.backward(ops::sum(tape, z));
    CHECK(tape.grad(x).data[0] == doctest::Approx(7.0));
  }

  TEST_CASE("hand-differentiated gradients") {
    T tape;
    const Var x = tape.leaf(Tensor<double>({1, 2}, {1.0, 2.0}));
    tape.backward(ops::sum(tape, ops::mul(tape, x, x)));
    CHECK(tape.grad(x).data == std::vector<double>{2.0, 4.0});

    T fan;
    const Var y = fan.leaf(Tensor<double>({1, 1}, {5.0}));
    fan.backward(ops::sum(fan, ops::add(fan, y, y)));
    CHECK(fan.grad(y).data[0] == 2.0);

    T id;
    const Var a = id.leaf(randn({3, 3}, 30));
    const Var eye = id.constant(Tensor<double>({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
    const Var product = ops::matmul(id, a, eye);
    CHECK(id.value(product) == id.value(a));
  }

  TEST_CASE("backward needs a scalar") {
    T tape;
    const Var x = tape.leaf(Tensor<double>({1, 2}, {1.0, 2.0}));
    CHECK_THROWS_AS(tape.backward(ops::scale(tape, x, 2.0)), UsageError);
  }

  TEST_CASE("param leaves sum gradients into their sink") {
    const Tensor<double> w({1, 2}, {2.0, -1.0});
    Tensor<double> sink({1, 2}, {10.0, 10.0});
    T tape;
    const Var p = tape.param(w, &sink);
    tape.backward(ops::sum(tape, ops::scale(tape, p, 3.0)));
    CHECK(sink.data == std::vector<double>{13.0, 13.0});
  }

  TEST_CASE("shape mismatches are rejected") {
    T tape;
    const Var a = tape.constant(Tensor<double>({2, 3}));
    const Var b = tape.constant(Tensor<double>({2, 3}));
    CHECK_THROWS_AS(ops::matmul(tape, a, b), ShapeError);
    CHECK_THROWS_AS(ops::concat_rows(tape, {a, tape.constant(Tensor<double>({2, 2}))}), ShapeError);
    CHECK_THROWS_AS(ops::slice_cols(tape, a, 2, 4), ShapeError);
  }
}
