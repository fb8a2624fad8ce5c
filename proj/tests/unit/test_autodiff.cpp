#include <functional>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rim/autodiff.hpp"
#include "rim/conv.hpp"
#include "rim/error.hpp"

using namespace rim;

namespace {

using Builder = std::function<ad::Var(std::vector<ad::Var>&)>;

double evaluate(const Builder& f, const std::vector<Tensor>& inputs) {
  ad::Tape tape(ad::Mode::Inference);
  std::vector<ad::Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  return f(vars).value()[0];
}

// Max relative error between recorded and central-difference gradients.
double gradient_error(const Builder& f, std::vector<Tensor> inputs, double h = 1e-6) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.parameter(t));
  tape.backward(f(vars));
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor g = tape.gradient(vars[k]);
    double scale = 1e-8;
    for (std::size_t i = 0; i < g.numel(); ++i) scale = std::max(scale, std::abs(g[i]));
    for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
      const double keep = inputs[k][i];
      inputs[k][i] = keep + h;
      const double up = evaluate(f, inputs);
      inputs[k][i] = keep - h;
      const double down = evaluate(f, inputs);
      inputs[k][i] = keep;
      worst = std::max(worst, std::abs((up - down) / (2 * h) - g[i]) / scale);
    }
  }
  return worst;
}

// Contracts a tensor-valued node against fixed random weights.
ad::Var probe(const ad::Var& v, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  const Tensor w = oracle::random_tensor(v.value().shape(), rng);
  return ad::sum(ad::mul(v, v.tape().constant(w)));
}

}  // namespace

TEST_CASE("elementwise ops differentiate correctly") {
  std::mt19937_64 rng(11);
  const auto a = oracle::random_tensor({2, 3, 3}, rng);
  const auto b = oracle::random_tensor({2, 3, 3}, rng);
  CHECK(gradient_error([](auto& v) { return probe(ad::add(v[0], v[1])); }, {a, b}) < 1e-7);
  CHECK(gradient_error([](auto& v) { return probe(ad::sub(v[0], v[1])); }, {a, b}) < 1e-7);
  CHECK(gradient_error([](auto& v) { return probe(ad::mul(v[0], v[1])); }, {a, b}) < 1e-7);
  CHECK(gradient_error([](auto& v) { return probe(ad::scale(v[0], -2.5)); }, {a}) < 1e-7);
  CHECK(gradient_error([](auto& v) { return probe(ad::one_minus(v[0])); }, {a}) < 1e-7);
  CHECK(gradient_error([](auto& v) { return probe(ad::sigmoid(v[0])); }, {a}) < 1e-7);
  CHECK(gradient_error([](auto& v) { return probe(ad::tanh(v[0])); }, {a}) < 1e-7);
  CHECK(gradient_error([](auto& v) { return probe(ad::relu(v[0])); }, {a}) < 1e-6);
  CHECK(gradient_error([](auto& v) { return ad::sum_squares(v[0]); }, {a}) < 1e-7);
}

TEST_CASE("feature-stack ops differentiate correctly") {
  std::mt19937_64 rng(12);
  const auto x = oracle::random_tensor({3, 5, 4}, rng);
  const auto k = oracle::random_tensor({2, 3, 3, 3}, rng);
  const auto b = oracle::random_tensor({2}, rng);
  const auto wts = oracle::random_tensor({2, 3}, rng);
  const auto u = oracle::random_tensor({3}, rng);
  const auto y = oracle::random_tensor({2, 5, 4}, rng);
  CHECK(gradient_error([](auto& v) { return probe(ad::conv2d(v[0], v[1], v[2])); }, {x, k, b}) < 1e-7);
  CHECK(gradient_error([](auto& v) { return probe(ad::conv2d(v[0], v[1], ad::Var{})); }, {x, k}) < 1e-7);
  CHECK(gradient_error([](auto& v) { return probe(ad::dense(v[0], v[1], v[2])); }, {x, wts, b}) < 1e-7);
  CHECK(gradient_error([](auto& v) { return probe(ad::dense(v[0], v[1])); }, {x, wts}) < 1e-7);
  CHECK(gradient_error([](auto& v) { return probe(ad::channel_scale(v[0], v[1])); }, {u, x}) < 1e-7);
  CHECK(gradient_error([](auto& v) { return probe(ad::concat_channels(v[0], v[1])); }, {x, y}) < 1e-7);
}

TEST_CASE("loss reductions differentiate correctly") {
  std::mt19937_64 rng(13);
  const auto x = oracle::random_tensor({2, 4, 4}, rng);
  const auto ref = oracle::random_tensor({2, 4, 4}, rng);
  CHECK(gradient_error([&](auto& v) { return ad::weighted_squared_error(v[0], ref, 0.7); }, {x}) < 1e-7);
  CHECK(gradient_error([&](auto& v) { return ad::weighted_modulus_error(v[0], ref, 0.3); }, {x}) < 1e-6);
  ad::Tape tape(ad::Mode::Inference);
  const auto l = ad::weighted_squared_error(tape.constant(x), ref, 2.0);
  double expect = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) expect += 2.0 * (x[i] - ref[i]) * (x[i] - ref[i]);
  CHECK(l.value()[0] == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("modulus error has zero derivative at a zero residual") {
  const Tensor x({2, 1, 2}, std::vector<double>{1.0, 2.0, 3.0, 4.0});
  ad::Tape tape;
  const auto v = tape.parameter(x);
  tape.backward(ad::weighted_modulus_error(v, x, 1.0));
  const Tensor g = tape.gradient(v);
  for (double e : g.data()) CHECK(e == 0.0);
}

TEST_CASE("affine map uses the supplied adjoint") {
  std::mt19937_64 rng(14);
  const auto m = oracle::random_tensor({3, 4}, rng);
  const auto offset = oracle::random_tensor({3, 1, 1}, rng);
  const auto x = oracle::random_tensor({4, 1, 1}, rng);
  ad::LinearFn fwd = [&](const Tensor& in) {
    Tensor out = dense(in, m, Tensor{});
    out += offset;
    return out;
  };
  ad::LinearFn adj = [&](const Tensor& g) {
    Tensor mt({4, 3});
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 4; ++j) mt[j * 3 + i] = m[i * 4 + j];
    return dense(g, mt, Tensor{});
  };
  CHECK(gradient_error([&](auto& v) { return probe(ad::affine_map(v[0], fwd, adj)); }, {x}) < 1e-7);
}

TEST_CASE("gradients accumulate over shared subexpressions") {
  const Tensor x({1}, std::vector<double>{1.5});
  ad::Tape tape;
  const auto v = tape.parameter(x);
  const auto y = ad::mul(v, v);                 // x^2
  tape.backward(ad::sum(ad::add(y, ad::mul(y, v))));  // x^2 + x^3
  CHECK(tape.gradient(v)[0] == doctest::Approx(2 * 1.5 + 3 * 1.5 * 1.5));
}

TEST_CASE("tape contracts") {
  ad::Tape tape;
  const auto v = tape.parameter(Tensor({2}, 1.0));
  CHECK_THROWS_AS(tape.backward(v), Error);
  const auto s = ad::sum(v);
  tape.backward(s);
  CHECK_THROWS_AS(tape.backward(s), Error);

  ad::Tape inference(ad::Mode::Inference);
  const auto p = inference.parameter(Tensor({2}, 1.0));
  (void)ad::sum(ad::mul(p, p));
  CHECK(inference.recorded_nodes() == 0);
  CHECK_FALSE(p.requires_grad());
}

TEST_CASE("unused parameters receive exact zero gradients") {
  ad::Tape tape;
  const auto a = tape.parameter(Tensor({3}, 2.0));
  const auto b = tape.parameter(Tensor({3}, 5.0));
  tape.backward(ad::sum(a));
  const Tensor g = tape.gradient(b);
  for (double e : g.data()) CHECK(e == 0.0);
}
