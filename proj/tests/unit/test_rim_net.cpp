#include <filesystem>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rim/checkpoint.hpp"
#include "rim/error.hpp"
#include "rim/rim_net.hpp"
#include "rim/training.hpp"

using namespace rim;

namespace {

// out(o, p) = sum_i W(o, i) in(i, p)
Tensor mix(const Tensor& w, const Tensor& in) {
  const std::size_t O = w.dim(0), I = w.dim(1), P = in.dim(1) * in.dim(2);
  Tensor out({O, in.dim(1), in.dim(2)});
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t p = 0; p < P; ++p) out[o * P + p] += w[o * I + i] * in[i * P + p];
  return out;
}

Tensor oracle_cell(CellKind kind, const std::vector<Tensor>& p, const Tensor& a, const Tensor& h) {
  const std::size_t F = a.dim(0), P = a.dim(1) * a.dim(2);
  Tensor out(a.shape());
  if (kind == CellKind::IndRNN) {
    const Tensor wa = mix(p[0], a);
    for (std::size_t c = 0; c < F; ++c)
      for (std::size_t q = 0; q < P; ++q)
        out[c * P + q] = std::max(0.0, wa[c * P + q] + p[1][c] * h[c * P + q] + p[2][c]);
    return out;
  }
  if (kind == CellKind::MGU) {
    const Tensor fa = mix(p[0], a), fh = mix(p[1], h);
    Tensor f(a.shape()), fhh(a.shape());
    for (std::size_t c = 0; c < F; ++c)
      for (std::size_t q = 0; q < P; ++q) {
        const std::size_t i = c * P + q;
        f[i] = oracle::sigmoid(fa[i] + fh[i] + p[2][c]);
        fhh[i] = f[i] * h[i];
      }
    const Tensor ca = mix(p[3], a), ch = mix(p[4], fhh);
    for (std::size_t c = 0; c < F; ++c)
      for (std::size_t q = 0; q < P; ++q) {
        const std::size_t i = c * P + q;
        const double cand = std::tanh(ca[i] + ch[i] + p[5][c]);
        out[i] = (1.0 - f[i]) * h[i] + f[i] * cand;
      }
    return out;
  }
  const Tensor za = mix(p[0], a), zh = mix(p[1], h), ra = mix(p[3], a), rh = mix(p[4], h);
  Tensor z(a.shape()), rhh(a.shape());
  for (std::size_t c = 0; c < F; ++c)
    for (std::size_t q = 0; q < P; ++q) {
      const std::size_t i = c * P + q;
      z[i] = oracle::sigmoid(za[i] + zh[i] + p[2][c]);
      rhh[i] = oracle::sigmoid(ra[i] + rh[i] + p[5][c]) * h[i];
    }
  const Tensor ca = mix(p[6], a), ch = mix(p[7], rhh);
  for (std::size_t c = 0; c < F; ++c)
    for (std::size_t q = 0; q < P; ++q) {
      const std::size_t i = c * P + q;
      out[i] = (1.0 - z[i]) * h[i] + z[i] * std::tanh(ca[i] + ch[i] + p[8][c]);
    }
  return out;
}

std::vector<Tensor> random_cell_params(CellKind kind, std::size_t F, std::mt19937_64& rng) {
  std::vector<Tensor> p;
  const std::size_t gates = kind == CellKind::GRU ? 3 : kind == CellKind::MGU ? 2 : 0;
  if (gates == 0) return {oracle::random_tensor({F, F}, rng, 0.5), oracle::random_tensor({F}, rng),
                          oracle::random_tensor({F}, rng)};
  for (std::size_t g = 0; g < gates; ++g) {
    p.push_back(oracle::random_tensor({F, F}, rng, 0.5));
    p.push_back(oracle::random_tensor({F, F}, rng, 0.5));
    p.push_back(oracle::random_tensor({F}, rng));
  }
  return p;
}

CoilSet small_problem(std::size_t n, std::mt19937_64& rng, SamplingMask& mask) {
  const auto x = oracle::random_image(n, n, rng);
  mask = gaussian_mask(n, n, 2.0, rng());
  return acquire(x, synth_sensitivities(n, n, 2, rng()).sensitivities, mask);
}

}  // namespace

TEST_CASE("closed-form parameter count equals the allocated blocks") {
  for (CellKind cell : {CellKind::GRU, CellKind::MGU, CellKind::IndRNN}) {
    for (std::size_t f : {1u, 3u, 16u, 64u}) {
      const RimModel m({f, 4, cell});
      CHECK(m.parameter_count() == param_count({f, 4, cell}));
      CHECK(m.blocks().size() == 6 + 2 * cell_block_count(cell));
    }
  }
  CHECK(param_count({64, 8, CellKind::IndRNN}) == 52994);
  CHECK(param_count({64, 8, CellKind::GRU}) == 94082);
  // independent of the number of time steps
  CHECK(param_count({32, 2, CellKind::MGU}) == param_count({32, 16, CellKind::MGU}));
}

TEST_CASE("cell updates match loop oracles") {
  std::mt19937_64 rng(31);
  for (CellKind cell : {CellKind::GRU, CellKind::MGU, CellKind::IndRNN}) {
    CAPTURE(to_string(cell));
    const std::size_t F = 5;
    const auto p = random_cell_params(cell, F, rng);
    const auto a = oracle::random_tensor({F, 3, 4}, rng);
    const auto h = oracle::random_tensor({F, 3, 4}, rng);
    const Tensor got = cell_step(cell, p, a, h);
    const Tensor want = oracle_cell(cell, p, a, h);
    for (std::size_t i = 0; i < got.numel(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("cell_step rejects mismatched blocks") {
  std::mt19937_64 rng(32);
  const auto p = random_cell_params(CellKind::MGU, 3, rng);
  const auto a = oracle::random_tensor({3, 2, 2}, rng);
  CHECK_THROWS_AS(cell_step(CellKind::GRU, p, a, a), Error);
  CHECK_THROWS_AS(cell_step(CellKind::MGU, p, a, oracle::random_tensor({3, 2, 3}, rng)), Error);
}

TEST_CASE("initialization") {
  const auto m = RimModel::initialized({8, 4, CellKind::IndRNN}, 3);
  CHECK(m == RimModel::initialized({8, 4, CellKind::IndRNN}, 3));
  CHECK_FALSE(m == RimModel::initialized({8, 4, CellKind::IndRNN}, 4));
  for (const auto& b : m.blocks()) {
    if (b.name.ends_with(".u")) {
      for (double v : b.value.data()) CHECK((v >= 0.0 && v <= 1.0));
    }
    if (b.name.ends_with("bias") || b.name.ends_with(".b")) {
      for (double v : b.value.data()) CHECK(v == 0.0);
    }
  }
  // Xavier bound for conv1: sqrt(6 / (fan_in + fan_out))
  const double bound = std::sqrt(6.0 / (4.0 * 25.0 + 8.0 * 25.0));
  for (double v : m.block("conv1.weight").data()) CHECK(std::abs(v) <= bound);
  CHECK_THROWS_AS(RimModel({0, 4, CellKind::GRU}), Error);
  CHECK_THROWS_AS(RimModel({4, 0, CellKind::GRU}), Error);
}

TEST_CASE("a zero model leaves the zero-filled estimate unchanged") {
  std::mt19937_64 rng(33);
  SamplingMask mask;
  const auto coils = small_problem(8, rng, mask);
  const RimModel zero({4, 3, CellKind::GRU});
  const auto xs = rim_forward(zero, coils, mask, 1.0);
  REQUIRE(xs.size() == 3);
  const auto x0 = adjoint_op(*coils.measurements, coils, mask);
  for (const auto& x : xs) CHECK(x == x0);
}

TEST_CASE("unrolled inference equals repeated single steps") {
  std::mt19937_64 rng(34);
  SamplingMask mask;
  const auto coils = small_problem(8, rng, mask);
  const auto model = RimModel::initialized({4, 3, CellKind::MGU}, 7);
  const auto xs = rim_forward(model, coils, mask, 0.8);
  RimState s = initial_state(model, adjoint_op(*coils.measurements, coils, mask));
  for (std::size_t t = 0; t < 3; ++t) {
    s = rim_step(model, s, loglik_gradient(s.x, coils, mask, 0.8));
    CHECK(s.x == xs[t]);
  }
  CHECK(rim_forward(model, coils, mask, 0.8) == xs);
}

TEST_CASE("unrolled training gradient matches central differences on sampled entries") {
  std::mt19937_64 rng(35);
  SamplingMask mask;
  const auto coils = small_problem(6, rng, mask);
  const auto ref = oracle::random_image(6, 6, rng);
  for (CellKind cell : {CellKind::GRU, CellKind::IndRNN}) {
    RimModel model = RimModel::initialized({3, 2, cell}, 9);
    for (auto& b : model.blocks())
      for (auto& v : b.value.data()) v += 0.05 * std::normal_distribution<double>()(rng);
    const auto loss = LossSpec::make(LossNorm::L2, 2);
    std::vector<Tensor> grads;
    loss_and_gradients(model, coils, mask, 1.0, ref, loss, grads);
    auto value = [&](const RimModel& m) { return evaluate_loss(loss, rim_forward(m, coils, mask, 1.0), ref); };
    for (std::size_t b = 0; b < model.blocks().size(); ++b) {
      CAPTURE(model.blocks()[b].name);
      const std::size_t i = rng() % model.blocks()[b].value.numel();
      RimModel up = model, down = model;
      const double h = 1e-5;
      up.blocks()[b].value[i] += h;
      down.blocks()[b].value[i] -= h;
      const double fd = (value(up) - value(down)) / (2 * h);
      CHECK(std::abs(fd - grads[b][i]) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("checkpoint round trip and errors") {
  const auto m = RimModel::initialized({4, 5, CellKind::GRU}, 1);
  const auto bytes = encode_checkpoint(m);
  CHECK(decode_checkpoint(bytes) == m);
  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(decode_checkpoint(truncated), ParseError);

  const auto dir = std::filesystem::temp_directory_path() / "rim_unit_ckpt";
  std::filesystem::create_directories(dir);
  KeyValues meta;
  meta.set("note", "unit");
  write_checkpoint(dir / "m.rimc", m, meta);
  CHECK(read_checkpoint(dir / "m.rimc") == m);
  const auto side = read_key_values(sidecar_path(dir / "m.rimc"));
  CHECK(side.get("cell") == "gru");
  CHECK(side.get("note") == "unit");
  try {
    read_checkpoint(dir / "absent.rimc");
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("cell names parse") {
  CHECK(parse_cell_kind("gru") == CellKind::GRU);
  CHECK(parse_cell_kind("mgu") == CellKind::MGU);
  CHECK(parse_cell_kind("indrnn") == CellKind::IndRNN);
  CHECK_THROWS_AS(parse_cell_kind("lstm"), Error);
}
