#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rim/autodiff.hpp"
#include "rim/mri_model.hpp"
#include "rim/sampling.hpp"
#include "rim/tensor.hpp"

namespace rim {

enum class CellKind : std::uint8_t { GRU = 0, MGU = 1, IndRNN = 2 };

std::string_view to_string(CellKind kind);
CellKind parse_cell_kind(std::string_view name);

struct RimConfig {
  static constexpr std::size_t kInputChannels = 4;   // Re x, Im x, Re grad, Im grad
  static constexpr std::size_t kOutputChannels = 2;  // Re dx, Im dx
  static constexpr std::array<std::size_t, 3> kKernelSizes{5, 3, 3};

  std::size_t features = 64;
  std::size_t time_steps = 8;
  CellKind cell = CellKind::IndRNN;

  void validate() const;
  friend bool operator==(const RimConfig&, const RimConfig&) = default;
};

/// Closed-form count of learnable scalars for a configuration.
std::size_t param_count(const RimConfig& config);

/// Number of parameter blocks in one recurrent cell.
std::size_t cell_block_count(CellKind kind);

struct ParamBlock {
  std::string name;
  Tensor value;

  friend bool operator==(const ParamBlock&, const ParamBlock&) = default;
};

/// Learnable parameters in their frozen checkpoint order:
/// conv1.{weight,bias}, cell1.*, conv2.{weight,bias}, cell2.*, conv3.{weight,bias}.
/// Cell blocks are GRU: W_z U_z b_z W_r U_r b_r W_h U_h b_h;
/// MGU: W_f U_f b_f W_h U_h b_h; IndRNN: W u b.
class RimModel {
 public:
  /// All-zero parameters.
  explicit RimModel(RimConfig config);
  /// Xavier-uniform input maps, IndRNN recurrent weights uniform in [0, 1], zero biases.
  static RimModel initialized(RimConfig config, std::uint64_t seed);

  const RimConfig& config() const noexcept { return config_; }
  std::vector<ParamBlock>& blocks() noexcept { return blocks_; }
  const std::vector<ParamBlock>& blocks() const noexcept { return blocks_; }
  const Tensor& block(std::string_view name) const;
  Tensor& block(std::string_view name);
  std::size_t parameter_count() const;

  friend bool operator==(const RimModel&, const RimModel&) = default;

 private:
  RimConfig config_;
  std::vector<ParamBlock> blocks_;
};

/// External state x and the two recurrent hidden states.
struct RimState {
  ComplexImage x;
  Tensor s1;
  Tensor s2;
};

RimState initial_state(const RimModel& model, const ComplexImage& x0);

/// One recurrent cell update on (F, H, W) fields. `params` holds the cell's
/// blocks in declared order.
Tensor cell_step(CellKind kind, std::span<const Tensor> params, const Tensor& input, const Tensor& hidden);

/// x_{t+1} = x_t + h(grad, x_t, s_{t+1}) for a given log-likelihood gradient.
RimState rim_step(const RimModel& model, const RimState& state, const ComplexImage& gradient);

/// Unrolled inference from the zero-filled estimate; returns x_1..x_t.
std::vector<ComplexImage> rim_forward(const RimModel& model, const CoilSet& coils, const SamplingMask& mask,
                                      double sigma);

/// Differentiable building blocks shared by inference and training.
namespace net {

struct TapeState {
  ad::Var x;  // (2, H, W)
  ad::Var s1;
  ad::Var s2;
};

ad::Var cell_step(CellKind kind, std::span<const ad::Var> params, const ad::Var& input, const ad::Var& hidden);

TapeState rim_step(const RimConfig& config, std::span<const ad::Var> params, const TapeState& state,
                   const ad::Var& gradient);

/// (1/sigma^2) A^H (A x - y) as a recorded affine node.
ad::Var loglik_gradient(const ad::Var& x, const CoilSet& coils, const SamplingMask& mask, double sigma);

/// Records the full unroll and returns the estimates x_1..x_t as (2, H, W) nodes.
std::vector<ad::Var> unroll(ad::Tape& tape, const RimConfig& config, std::span<const ad::Var> params,
                            const CoilSet& coils, const SamplingMask& mask, double sigma);

std::vector<ad::Var> bind_parameters(ad::Tape& tape, const RimModel& model);

}  // namespace net

}  // namespace rim
