#include "rim/rim_net.hpp"

#include <cmath>
#include <random>

#include "rim/error.hpp"

namespace rim {
namespace {

constexpr std::size_t kConv1Weight = 0;
constexpr std::size_t kConv1Bias = 1;
constexpr std::size_t kCell1 = 2;

struct Layout {
  std::size_t cell_blocks;
  std::size_t conv2_weight() const { return kCell1 + cell_blocks; }
  std::size_t conv2_bias() const { return conv2_weight() + 1; }
  std::size_t cell2() const { return conv2_bias() + 1; }
  std::size_t conv3_weight() const { return cell2() + cell_blocks; }
  std::size_t conv3_bias() const { return conv3_weight() + 1; }
  std::size_t total() const { return conv3_bias() + 1; }
};

std::vector<ParamBlock> cell_blocks(const std::string& prefix, CellKind kind, std::size_t f) {
  auto sq = [&](const char* n) { return ParamBlock{prefix + n, Tensor({f, f})}; };
  auto vec = [&](const char* n) { return ParamBlock{prefix + n, Tensor({f})}; };
  switch (kind) {
    case CellKind::GRU:
      return {sq("W_z"), sq("U_z"), vec("b_z"), sq("W_r"), sq("U_r"), vec("b_r"), sq("W_h"), sq("U_h"), vec("b_h")};
    case CellKind::MGU:
      return {sq("W_f"), sq("U_f"), vec("b_f"), sq("W_h"), sq("U_h"), vec("b_h")};
    case CellKind::IndRNN:
      return {sq("W"), vec("u"), vec("b")};
  }
  throw_error(ErrorKind::Config, "unknown cell kind");
}

void xavier_fill(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : t.data()) v = dist(rng);
}

}  // namespace

std::string_view to_string(CellKind kind) {
  switch (kind) {
    case CellKind::GRU: return "gru";
    case CellKind::MGU: return "mgu";
    case CellKind::IndRNN: return "indrnn";
  }
  return "unknown";
}

CellKind parse_cell_kind(std::string_view name) {
  if (name == "gru" || name == "GRU") return CellKind::GRU;
  if (name == "mgu" || name == "MGU") return CellKind::MGU;
  if (name == "indrnn" || name == "IndRNN" || name == "INDRNN") return CellKind::IndRNN;
  throw_error(ErrorKind::Config, "unknown cell kind '" + std::string(name) + "'");
}

void RimConfig::validate() const {
  if (features < 1) throw_error(ErrorKind::Config, "features must be at least 1");
  if (time_steps < 1) throw_error(ErrorKind::Config, "time steps must be at least 1");
}

std::size_t cell_block_count(CellKind kind) {
  switch (kind) {
    case CellKind::GRU: return 9;
    case CellKind::MGU: return 6;
    case CellKind::IndRNN: return 3;
  }
  return 0;
}

std::size_t param_count(const RimConfig& config) {
  const std::size_t f = config.features;
  const auto [k1, k2, k3] = RimConfig::kKernelSizes;
  const std::size_t conv = (RimConfig::kInputChannels * k1 * k1 * f + f) + (f * k2 * k2 * f + f) +
                           (f * k3 * k3 * RimConfig::kOutputChannels + RimConfig::kOutputChannels);
  std::size_t cell = 0;
  switch (config.cell) {
    case CellKind::GRU: cell = 3 * (2 * f * f + f); break;
    case CellKind::MGU: cell = 2 * (2 * f * f + f); break;
    case CellKind::IndRNN: cell = f * f + 2 * f; break;
  }
  return conv + 2 * cell;
}

RimModel::RimModel(RimConfig config) : config_(config) {
  config_.validate();
  const std::size_t f = config_.features;
  const auto [k1, k2, k3] = RimConfig::kKernelSizes;
  blocks_.push_back({"conv1.weight", Tensor({f, RimConfig::kInputChannels, k1, k1})});
  blocks_.push_back({"conv1.bias", Tensor({f})});
  for (auto& b : cell_blocks("cell1.", config_.cell, f)) blocks_.push_back(std::move(b));
  blocks_.push_back({"conv2.weight", Tensor({f, f, k2, k2})});
  blocks_.push_back({"conv2.bias", Tensor({f})});
  for (auto& b : cell_blocks("cell2.", config_.cell, f)) blocks_.push_back(std::move(b));
  blocks_.push_back({"conv3.weight", Tensor({RimConfig::kOutputChannels, f, k3, k3})});
  blocks_.push_back({"conv3.bias", Tensor({RimConfig::kOutputChannels})});
}

RimModel RimModel::initialized(RimConfig config, std::uint64_t seed) {
  RimModel model(config);
  std::mt19937_64 rng(seed);
  for (auto& b : model.blocks_) {
    Tensor& t = b.value;
    if (t.rank() == 4) {
      const std::size_t area = t.dim(2) * t.dim(3);
      xavier_fill(t, t.dim(1) * area, t.dim(0) * area, rng);
    } else if (t.rank() == 2) {
      xavier_fill(t, t.dim(1), t.dim(0), rng);
    } else if (b.name.ends_with(".u")) {
      std::uniform_real_distribution<double> dist(0.0, 1.0);
      for (auto& v : t.data()) v = dist(rng);
    }
  }
  return model;
}

const Tensor& RimModel::block(std::string_view name) const {
  for (const auto& b : blocks_)
    if (b.name == name) return b.value;
  throw_error(ErrorKind::Contract, "no parameter block named " + std::string(name));
}

Tensor& RimModel::block(std::string_view name) {
  return const_cast<Tensor&>(std::as_const(*this).block(name));
}

std::size_t RimModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += b.value.numel();
  return n;
}

namespace net {

ad::Var cell_step(CellKind kind, std::span<const ad::Var> p, const ad::Var& a, const ad::Var& h) {
  if (p.size() != cell_block_count(kind)) throw_error(ErrorKind::Contract, "wrong number of cell parameter blocks");
  if (a.value().shape() != h.value().shape()) throw_error(ErrorKind::InvalidShape, "cell input and hidden state differ in shape");
  auto gate = [&](std::size_t w, std::size_t u, std::size_t b) { return ad::add(ad::dense(a, p[w], p[b]), ad::dense(h, p[u])); };
  switch (kind) {
    case CellKind::GRU: {
      const ad::Var z = ad::sigmoid(gate(0, 1, 2));
      const ad::Var r = ad::sigmoid(gate(3, 4, 5));
      const ad::Var cand = ad::tanh(ad::add(ad::dense(a, p[6], p[8]), ad::dense(ad::mul(r, h), p[7])));
      return ad::add(h, ad::mul(z, ad::sub(cand, h)));
    }
    case CellKind::MGU: {
      const ad::Var f = ad::sigmoid(gate(0, 1, 2));
      const ad::Var cand = ad::tanh(ad::add(ad::dense(a, p[3], p[5]), ad::dense(ad::mul(f, h), p[4])));
      return ad::add(h, ad::mul(f, ad::sub(cand, h)));
    }
    case CellKind::IndRNN:
      return ad::relu(ad::add(ad::dense(a, p[0], p[2]), ad::channel_scale(p[1], h)));
  }
  throw_error(ErrorKind::Config, "unknown cell kind");
}

TapeState rim_step(const RimConfig& config, std::span<const ad::Var> p, const TapeState& state, const ad::Var& gradient) {
  const Layout L{cell_block_count(config.cell)};
  if (p.size() != L.total()) throw_error(ErrorKind::Contract, "wrong number of parameter blocks");
  if (state.x.value().shape() != gradient.value().shape())
    throw_error(ErrorKind::InvalidShape, "estimate and gradient differ in shape");
  const ad::Var in = ad::concat_channels(state.x, gradient);
  const ad::Var a1 = ad::relu(ad::conv2d(in, p[kConv1Weight], p[kConv1Bias]));
  const ad::Var s1 = cell_step(config.cell, p.subspan(kCell1, L.cell_blocks), a1, state.s1);
  const ad::Var a2 = ad::relu(ad::conv2d(s1, p[L.conv2_weight()], p[L.conv2_bias()]));
  const ad::Var s2 = cell_step(config.cell, p.subspan(L.cell2(), L.cell_blocks), a2, state.s2);
  const ad::Var dx = ad::conv2d(s2, p[L.conv3_weight()], p[L.conv3_bias()]);
  return {ad::add(state.x, dx), s1, s2};
}

ad::Var loglik_gradient(const ad::Var& x, const CoilSet& coils, const SamplingMask& mask, double sigma) {
  const double inv = 1.0 / (sigma * sigma);
  auto forward = [&coils, &mask, sigma](const Tensor& v) {
    return to_channels(rim::loglik_gradient(from_channels(v), coils, mask, sigma));
  };
  auto adjoint = [&coils, &mask, inv](const Tensor& g) {
    ComplexImage out = normal_op(from_channels(g), coils, mask);
    out *= inv;
    return to_channels(out);
  };
  return ad::affine_map(x, forward, adjoint);
}

std::vector<ad::Var> unroll(ad::Tape& tape, const RimConfig& config, std::span<const ad::Var> params,
                            const CoilSet& coils, const SamplingMask& mask, double sigma) {
  if (!coils.measurements) throw_error(ErrorKind::Contract, "reconstruction needs measurements");
  const ComplexImage x0 = adjoint_op(*coils.measurements, coils, mask);
  const std::size_t f = config.features;
  TapeState state{tape.constant(to_channels(x0)), tape.constant(Tensor({f, x0.height(), x0.width()})),
                  tape.constant(Tensor({f, x0.height(), x0.width()}))};
  std::vector<ad::Var> estimates;
  estimates.reserve(config.time_steps);
  for (std::size_t step = 0; step < config.time_steps; ++step) {
    const ad::Var grad = loglik_gradient(state.x, coils, mask, sigma);
    state = rim_step(config, params, state, grad);
    estimates.push_back(state.x);
  }
  return estimates;
}

std::vector<ad::Var> bind_parameters(ad::Tape& tape, const RimModel& model) {
  std::vector<ad::Var> vars;
  vars.reserve(model.blocks().size());
  for (const auto& b : model.blocks()) vars.push_back(tape.parameter(b.value));
  return vars;
}

}  // namespace net

RimState initial_state(const RimModel& model, const ComplexImage& x0) {
  const std::size_t f = model.config().features;
  return {x0, Tensor({f, x0.height(), x0.width()}), Tensor({f, x0.height(), x0.width()})};
}

Tensor cell_step(CellKind kind, std::span<const Tensor> params, const Tensor& input, const Tensor& hidden) {
  ad::Tape tape(ad::Mode::Inference);
  std::vector<ad::Var> p;
  for (const auto& t : params) p.push_back(tape.constant(t));
  return net::cell_step(kind, p, tape.constant(input), tape.constant(hidden)).value();
}

RimState rim_step(const RimModel& model, const RimState& state, const ComplexImage& gradient) {
  ad::Tape tape(ad::Mode::Inference);
  const auto params = net::bind_parameters(tape, model);
  const net::TapeState next = net::rim_step(
      model.config(), params,
      {tape.constant(to_channels(state.x)), tape.constant(state.s1), tape.constant(state.s2)},
      tape.constant(to_channels(gradient)));
  return {from_channels(next.x.value()), next.s1.value(), next.s2.value()};
}

std::vector<ComplexImage> rim_forward(const RimModel& model, const CoilSet& coils, const SamplingMask& mask,
                                      double sigma) {
  ad::Tape tape(ad::Mode::Inference);
  const auto params = net::bind_parameters(tape, model);
  const auto estimates = net::unroll(tape, model.config(), params, coils, mask, sigma);
  std::vector<ComplexImage> out;
  out.reserve(estimates.size());
  for (const auto& e : estimates) out.push_back(from_channels(e.value()));
  return out;
}

}  // namespace rim
