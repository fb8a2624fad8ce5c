#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rim/autodiff.hpp"
#include "rim/rim_net.hpp"
#include "rim/tensor.hpp"

namespace rim {

enum class LossNorm { L1, L2 };

std::string_view to_string(LossNorm norm);
LossNorm parse_loss_norm(std::string_view name);

/// w_tau = 10^(-(t - tau) / (t - 1)) for tau = 1..t; (1) when t = 1.
std::vector<double> loss_weights(std::size_t time_steps);

struct LossSpec {
  LossNorm norm = LossNorm::L1;
  std::vector<double> weights;

  static LossSpec make(LossNorm norm, std::size_t time_steps) { return {norm, loss_weights(time_steps)}; }
};

/// (1 / (n t)) sum_tau w_tau ||x_tau - x||_2^2
double loss_l2(std::span<const ComplexImage> estimates, const ComplexImage& reference, std::span<const double> weights);
/// (1 / (n t)) sum_tau w_tau sum_p |x_tau(p) - x(p)|
double loss_l1(std::span<const ComplexImage> estimates, const ComplexImage& reference, std::span<const double> weights);
double evaluate_loss(const LossSpec& spec, std::span<const ComplexImage> estimates, const ComplexImage& reference);

/// Recorded multi-step loss over (2, H, W) estimate nodes.
ad::Var multi_step_loss(const LossSpec& spec, std::span<const ad::Var> estimates, const Tensor& reference);

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamMoments {
  std::vector<Tensor> first;
  std::vector<Tensor> second;
  std::uint64_t step = 0;

  static AdamMoments zeros_like(std::span<const Tensor> params);
};

/// Bias-corrected ADAM update of every block in place.
void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamMoments& moments, const AdamHyper& hyper);

/// A training example: the reference image and the coil maps that image is
/// acquired through.
struct Sample {
  ComplexImage reference;
  std::vector<ComplexImage> sensitivities;
};

struct AugmentToggles {
  bool crop = true;
  bool rotate = true;
  bool flip = true;    // reverse rows
  bool mirror = true;  // reverse columns
};

/// Element of the square's symmetry group: `rotation` quarter turns
/// counter-clockwise, then an optional row flip, then an optional column mirror.
struct Dihedral {
  int rotation = 0;
  bool flip = false;
  bool mirror = false;

  friend bool operator==(const Dihedral&, const Dihedral&) = default;
};

ComplexImage apply_dihedral(const ComplexImage& img, const Dihedral& d);
ComplexImage crop(const ComplexImage& img, std::size_t top, std::size_t left, std::size_t height, std::size_t width);

/// Random square crop of side min(patch, H, W) (central when cropping is off)
/// followed by a random dihedral transform, applied identically to the
/// reference and every coil map.
Sample augment(const Sample& sample, std::size_t patch, std::uint64_t seed, const AugmentToggles& toggles,
               Dihedral* applied = nullptr);

struct Dataset {
  std::string name;
  std::vector<ComplexImage> images;
};

/// Picks a dataset by weight, then an item uniformly inside it.
class WeightedSampler {
 public:
  WeightedSampler(std::vector<std::size_t> dataset_sizes, std::vector<double> weights, std::uint64_t seed);
  std::pair<std::size_t, std::size_t> next();

 private:
  std::vector<std::size_t> sizes_;
  std::vector<double> cumulative_;
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
};

struct TrainConfig {
  static constexpr std::size_t reference_patch = 190;

  double learning_rate = 1e-3;
  std::size_t batch_size = 1;
  std::size_t epochs = 10;
  std::size_t steps_per_epoch = 0;  // 0: one pass over the combined training images
  std::size_t patch = 64;
  AugmentToggles augment{};
  std::vector<double> dataset_weights;  // empty: equal proportions
  std::uint64_t seed = 0;

  double acceleration = 4.0;
  std::size_t coils = 4;
  double noise_fraction = 0.0;  // complex noise sigma relative to the mean reference magnitude
  double sigma = 1.0;           // log-likelihood scaling
  bool resample_masks = true;   // fresh mask per training draw

  std::size_t plateau_patience = 5;
  double plateau_decay = 0.1;
  AdamHyper adam{};

  std::optional<std::filesystem::path> diagnostic_checkpoint;

  void validate(std::size_t dataset_count) const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_ssim = 0.0;
  double val_psnr = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  RimModel best;
  RimModel last;
  std::vector<EpochRecord> curve;
  std::vector<double> step_losses;
};

/// Builds one acquisition for a reference: synthetic coils, a variable-density
/// mask, and optional noise, all derived from `seed`.
CoilSet simulate_sample(const Sample& sample, double acceleration, double noise_fraction, std::uint64_t mask_seed,
                        std::uint64_t noise_seed, SamplingMask* mask_out);

/// Loss and parameter gradients for one reconstructed sample.
double loss_and_gradients(const RimModel& model, const CoilSet& coils, const SamplingMask& mask, double sigma,
                          const ComplexImage& reference, const LossSpec& loss, std::vector<Tensor>& grads);

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(RimModel model, std::span<const Dataset> train_sets, std::span<const Dataset> val_sets,
                  const LossSpec& loss, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// "epoch,train_loss,val_loss,val_ssim,val_psnr"
std::string loss_curve_csv(std::span<const EpochRecord> curve);

}  // namespace rim
