#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rim/cs.hpp"
#include "rim/mri_model.hpp"
#include "rim/rim_net.hpp"
#include "rim/sampling.hpp"
#include "rim/tensor.hpp"
#include "rim/training.hpp"

namespace rim {

/// Runs fn(0..n-1) on up to `threads` workers; each index runs exactly once.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// Worker cap from RIM_THREADS (default 1; invalid values are a config error).
std::size_t env_thread_cap();

// ---- timing ---------------------------------------------------------------

struct TimingStats {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  std::size_t repetitions = 0;
};

/// Runs `fn` warmup + repetitions times on a monotonic clock and summarizes
/// the last `repetitions` wall-clock durations.
TimingStats time_repeated(const std::function<void()>& fn, std::size_t repetitions, std::size_t warmup = 5);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

struct BenchConfig {
  std::vector<std::size_t> time_steps{6, 8, 10, 12, 14, 16};
  std::vector<std::size_t> features{16, 32, 64, 128, 256};
  std::vector<CellKind> cells{CellKind::GRU, CellKind::MGU, CellKind::IndRNN};
  std::size_t repetitions = 300;
  std::size_t warmup = 5;
  std::size_t size = 64;
  std::size_t coils = 4;
  double acceleration = 4.0;
  double sigma = 1.0;
  bool include_cs = true;
  std::size_t cs_repetitions = 300;
  CsConfig cs{};
  std::uint64_t seed = 0;
};

struct BenchRow {
  std::string method;  // cell name or "cs"
  std::size_t time_steps = 0;
  std::size_t features = 0;
  TimingStats stats;
};

using BenchProgress = std::function<void(const BenchRow&)>;

/// Single-slice reconstruction timings over the (cell, t, F) grid plus the
/// compressed-sensing baseline (t and F reported as 0).
std::vector<BenchRow> bench_inference(const BenchConfig& config, const BenchProgress& progress = {});

/// "method,time_steps,features,repetitions,mean_ms,std_ms"
std::string bench_csv(std::span<const BenchRow> rows);

// ---- generalization evaluation ---------------------------------------------

/// A trained model under evaluation; `model` is empty when its checkpoint
/// could not be loaded, which yields explicit gap rows.
struct NamedModel {
  std::string name;
  std::string train_set;
  std::optional<RimModel> model;
  std::string status = "ok";
};

struct EvalConfig {
  std::vector<double> accelerations{4.0};
  std::size_t coils = 4;
  double noise_fraction = 0.0;
  double sigma = 1.0;
  bool include_cs = true;
  CsConfig cs{};
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct EvalRow {
  std::string method;
  std::string train_set;  // "-" for model-free baselines
  std::string eval_set;
  double acceleration = 0.0;
  std::size_t slice = 0;
  std::uint64_t seed = 0;
  double ssim = 0.0;
  double psnr = 0.0;
  std::string status = "ok";  // "missing" rows carry NaN scores
};

/// Min, lower quartile, median, upper quartile, max.
using Quantiles = std::array<double, 5>;
Quantiles quantiles(std::vector<double> values);

struct EvalCell {
  std::string method;
  std::string train_set;
  std::string eval_set;
  double acceleration = 0.0;
  std::size_t count = 0;
  std::string status = "ok";
  double mean_ssim = 0.0;
  double mean_psnr = 0.0;
  Quantiles ssim{};
  Quantiles psnr{};
};

struct EvalResult {
  std::vector<EvalRow> rows;
  std::vector<EvalCell> cells;
};

/// Scores zero-filled, optional CS, and every model on every image of every
/// evaluation set at every acceleration. Acquisitions depend only on
/// (seed, set, acceleration, slice), so all methods see identical data.
EvalResult eval_generalization(std::span<const NamedModel> models, std::span<const Dataset> eval_sets,
                               const EvalConfig& config);

/// "method,train_set,eval_set,acceleration,slice,seed,ssim,psnr,status"
std::string eval_rows_csv(std::span<const EvalRow> rows);
/// Per-cell means and box-plot quantiles.
std::string eval_cells_csv(std::span<const EvalCell> cells);

// ---- lesion simulation -----------------------------------------------------

struct LesionSpec {
  std::size_t row = 0;
  std::size_t col = 0;
  double sigma = 1.0;
  std::vector<double> factors{1.0, 1.25, 1.5, 1.75, 2.0};
  double noise_fraction = 0.05;
  std::vector<double> accelerations{4.0, 6.0, 8.0};
  bool include_full_sampling = true;
  std::size_t mask_seeds = 10;
  std::size_t coils = 4;
  double annulus_inner = 3.0;
  double annulus_outer = 6.0;
  std::uint64_t seed = 0;

  void validate(std::size_t height, std::size_t width) const;
};

/// Gaussian bump of unit peak whose spectrum is the continuous Gaussian
/// spectrum sampled on the grid's frequencies, hence band-limited.
RealImage bandlimited_gaussian(std::size_t height, std::size_t width, double row, double col, double sigma);

double annulus_mean(const RealImage& img, std::size_t row, std::size_t col, double inner, double outer);
/// Center value minus the annulus mean.
double lesion_intensity(const RealImage& img, std::size_t row, std::size_t col, double inner, double outer);

/// base + factor * surrounding_mean * bump, added along the base phase.
ComplexImage insert_lesion(const ComplexImage& base, const LesionSpec& spec, double factor);

/// Pixel with the smallest magnitude variance in a disc of `radius`, among
/// pixels whose magnitude exceeds `min_level` times the image maximum.
std::pair<std::size_t, std::size_t> homogeneous_center(const ComplexImage& img, double radius, double min_level = 0.3);

struct ReconMethod {
  std::string name;
  std::function<ComplexImage(const CoilSet&, const SamplingMask&)> reconstruct;
};

ReconMethod zero_filled_method();
ReconMethod cs_method(const CsConfig& config);
/// Keeps a copy of the model.
ReconMethod rim_method(std::string name, const RimModel& model, double sigma);

struct LesionRow {
  std::string method;
  double acceleration = 1.0;  // 1: fully sampled limb
  double factor = 0.0;
  double simulated = 0.0;
  double measured_mean = 0.0;
  double measured_std = 0.0;
  double bias = 0.0;  // measured_mean - simulated
  std::size_t count = 0;
};

struct LesionPanel {
  std::string name;
  RealImage image;
};

struct LesionResult {
  std::vector<LesionRow> rows;
  std::vector<LesionPanel> panels;  // reference and each method at the highest acceleration and factor, first seed
};

LesionResult lesion_study(const ComplexImage& base, const LesionSpec& spec, std::span<const ReconMethod> methods,
                          std::size_t threads = 1);

/// "method,acceleration,factor,simulated,measured_mean,measured_std,bias,count"
std::string lesion_csv(std::span<const LesionRow> rows);

/// Magnitude SSIM and PSNR against a reference, with the reference maximum as
/// dynamic range and peak.
std::pair<double, double> score(const ComplexImage& estimate, const ComplexImage& reference);

}  // namespace rim
