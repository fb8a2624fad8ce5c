#include "rim/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "rim/checkpoint.hpp"
#include "rim/error.hpp"
#include "rim/metrics.hpp"
#include "rim/random.hpp"

namespace rim {
namespace {

enum SeedStream : std::uint64_t {
  kSampler = 1,
  kAugment,
  kCoils,
  kMask,
  kNoise,
  kValCoils,
  kValMask,
  kValNoise,
  kInit,
};

void check_estimates(std::span<const ComplexImage> estimates, const ComplexImage& reference,
                     std::span<const double> weights) {
  if (estimates.empty()) throw_error(ErrorKind::Contract, "loss needs at least one estimate");
  if (weights.size() != estimates.size()) throw_error(ErrorKind::Contract, "one loss weight per time step required");
  for (const auto& e : estimates)
    if (!e.same_shape(reference)) throw_error(ErrorKind::InvalidShape, "estimate and reference differ in shape");
}

double mean_magnitude(const ComplexImage& img) {
  double acc = 0.0;
  for (const auto& v : img.data()) acc += std::abs(v);
  return acc / static_cast<double>(img.size());
}

}  // namespace

std::string_view to_string(LossNorm norm) { return norm == LossNorm::L1 ? "l1" : "l2"; }

LossNorm parse_loss_norm(std::string_view name) {
  if (name == "l1" || name == "L1") return LossNorm::L1;
  if (name == "l2" || name == "L2") return LossNorm::L2;
  throw_error(ErrorKind::Config, "unknown loss '" + std::string(name) + "'");
}

std::vector<double> loss_weights(std::size_t time_steps) {
  if (time_steps == 0) throw_error(ErrorKind::Config, "time steps must be at least 1");
  if (time_steps == 1) return {1.0};
  std::vector<double> w(time_steps);
  const double denom = static_cast<double>(time_steps - 1);
  for (std::size_t tau = 1; tau <= time_steps; ++tau)
    w[tau - 1] = std::pow(10.0, -static_cast<double>(time_steps - tau) / denom);
  return w;
}

double loss_l2(std::span<const ComplexImage> estimates, const ComplexImage& reference, std::span<const double> weights) {
  check_estimates(estimates, reference, weights);
  double total = 0.0;
  for (std::size_t t = 0; t < estimates.size(); ++t) {
    const double n = norm(estimates[t] - reference);
    total += weights[t] * n * n;
  }
  return total / static_cast<double>(reference.size() * estimates.size());
}

double loss_l1(std::span<const ComplexImage> estimates, const ComplexImage& reference, std::span<const double> weights) {
  check_estimates(estimates, reference, weights);
  double total = 0.0;
  for (std::size_t t = 0; t < estimates.size(); ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) acc += std::abs(estimates[t][i] - reference[i]);
    total += weights[t] * acc;
  }
  return total / static_cast<double>(reference.size() * estimates.size());
}

double evaluate_loss(const LossSpec& spec, std::span<const ComplexImage> estimates, const ComplexImage& reference) {
  return spec.norm == LossNorm::L1 ? loss_l1(estimates, reference, spec.weights)
                                   : loss_l2(estimates, reference, spec.weights);
}

ad::Var multi_step_loss(const LossSpec& spec, std::span<const ad::Var> estimates, const Tensor& reference) {
  if (estimates.empty() || spec.weights.size() != estimates.size())
    throw_error(ErrorKind::Contract, "one loss weight per time step required");
  const double n = static_cast<double>(reference.numel() / 2);
  const double norm = 1.0 / (n * static_cast<double>(estimates.size()));
  ad::Var total;
  for (std::size_t t = 0; t < estimates.size(); ++t) {
    const double w = spec.weights[t] * norm;
    ad::Var term = spec.norm == LossNorm::L1 ? ad::weighted_modulus_error(estimates[t], reference, w)
                                             : ad::weighted_squared_error(estimates[t], reference, w);
    total = total.defined() ? ad::add(total, term) : term;
  }
  return total;
}

AdamMoments AdamMoments::zeros_like(std::span<const Tensor> params) {
  AdamMoments m;
  for (const auto& p : params) {
    m.first.push_back(Tensor::zeros_like(p));
    m.second.push_back(Tensor::zeros_like(p));
  }
  return m;
}

void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamMoments& moments, const AdamHyper& hyper) {
  if (params.size() != grads.size() || params.size() != moments.first.size())
    throw_error(ErrorKind::InvalidShape, "ADAM block counts differ");
  ++moments.step;
  const double t = static_cast<double>(moments.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    Tensor& p = params[b];
    const Tensor& g = grads[b];
    Tensor& m = moments.first[b];
    Tensor& v = moments.second[b];
    if (p.shape() != g.shape() || p.shape() != m.shape()) throw_error(ErrorKind::InvalidShape, "ADAM block shapes differ");
    for (std::size_t i = 0; i < p.numel(); ++i) {
      m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
      v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= hyper.learning_rate * mhat / (std::sqrt(vhat) + hyper.epsilon);
    }
  }
}

ComplexImage apply_dihedral(const ComplexImage& img, const Dihedral& d) {
  ComplexImage cur = img;
  for (int k = 0; k < ((d.rotation % 4) + 4) % 4; ++k) {
    // counter-clockwise quarter turn: out(W-1-c, r) = in(r, c)
    ComplexImage rot(cur.width(), cur.height());
    for (std::size_t r = 0; r < cur.height(); ++r)
      for (std::size_t c = 0; c < cur.width(); ++c) rot(cur.width() - 1 - c, r) = cur(r, c);
    cur = std::move(rot);
  }
  if (d.flip) {
    ComplexImage out(cur.height(), cur.width());
    for (std::size_t r = 0; r < cur.height(); ++r)
      for (std::size_t c = 0; c < cur.width(); ++c) out(cur.height() - 1 - r, c) = cur(r, c);
    cur = std::move(out);
  }
  if (d.mirror) {
    ComplexImage out(cur.height(), cur.width());
    for (std::size_t r = 0; r < cur.height(); ++r)
      for (std::size_t c = 0; c < cur.width(); ++c) out(r, cur.width() - 1 - c) = cur(r, c);
    cur = std::move(out);
  }
  return cur;
}

ComplexImage crop(const ComplexImage& img, std::size_t top, std::size_t left, std::size_t height, std::size_t width) {
  if (top + height > img.height() || left + width > img.width())
    throw_error(ErrorKind::InvalidShape, "crop window exceeds the image");
  ComplexImage out(height, width);
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) out(r, c) = img(top + r, left + c);
  return out;
}

Sample augment(const Sample& sample, std::size_t patch, std::uint64_t seed, const AugmentToggles& toggles,
               Dihedral* applied) {
  const ComplexImage& ref = sample.reference;
  const std::size_t side = std::min({patch, ref.height(), ref.width()});
  std::mt19937_64 rng(seed);
  std::size_t top = (ref.height() - side) / 2, left = (ref.width() - side) / 2;
  if (toggles.crop) {
    top = std::uniform_int_distribution<std::size_t>(0, ref.height() - side)(rng);
    left = std::uniform_int_distribution<std::size_t>(0, ref.width() - side)(rng);
  }
  Dihedral d;
  std::bernoulli_distribution coin(0.5);
  if (toggles.rotate) d.rotation = std::uniform_int_distribution<int>(0, 3)(rng);
  if (toggles.flip) d.flip = coin(rng);
  if (toggles.mirror) d.mirror = coin(rng);
  if (applied) *applied = d;

  auto transform = [&](const ComplexImage& img) { return apply_dihedral(crop(img, top, left, side, side), d); };
  Sample out{transform(ref), {}};
  out.sensitivities.reserve(sample.sensitivities.size());
  for (const auto& s : sample.sensitivities) out.sensitivities.push_back(transform(s));
  return out;
}

WeightedSampler::WeightedSampler(std::vector<std::size_t> dataset_sizes, std::vector<double> weights,
                                 std::uint64_t seed)
    : sizes_(std::move(dataset_sizes)), seed_(seed) {
  if (sizes_.empty()) throw_error(ErrorKind::Config, "sampler needs at least one dataset");
  if (weights.empty()) weights.assign(sizes_.size(), 1.0 / static_cast<double>(sizes_.size()));
  if (weights.size() != sizes_.size()) throw_error(ErrorKind::Config, "one weight per dataset required");
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw_error(ErrorKind::Config, "dataset weights must be non-negative");
    if (weights[i] > 0.0 && sizes_[i] == 0)
      throw_error(ErrorKind::Config, "dataset " + std::to_string(i) + " is empty but has a nonzero weight");
    total += weights[i];
    cumulative_.push_back(total);
  }
  if (std::abs(total - 1.0) > 1e-9) throw_error(ErrorKind::Config, "dataset weights must sum to 1");
}

std::pair<std::size_t, std::size_t> WeightedSampler::next() {
  std::mt19937_64 rng(derive_seed(seed_, kSampler, draws_++));
  const double u = std::uniform_real_distribution<double>(0.0, cumulative_.back())(rng);
  // first dataset whose cumulative weight exceeds u; zero-weight sets are never selected
  auto d = static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
  d = std::min(d, cumulative_.size() - 1);
  const std::size_t item = std::uniform_int_distribution<std::size_t>(0, sizes_[d] - 1)(rng);
  return {d, item};
}

void TrainConfig::validate(std::size_t dataset_count) const {
  if (!(learning_rate >= 0.0)) throw_error(ErrorKind::Config, "learning rate must be non-negative");
  if (batch_size == 0 || epochs == 0) throw_error(ErrorKind::Config, "batch size and epochs must be positive");
  if (patch == 0) throw_error(ErrorKind::Config, "patch size must be positive");
  if (!(acceleration > 1.0)) throw_error(ErrorKind::Config, "acceleration must exceed 1");
  if (coils == 0) throw_error(ErrorKind::Config, "coil count must be positive");
  if (!(sigma > 0.0)) throw_error(ErrorKind::Config, "sigma must be positive");
  if (noise_fraction < 0.0) throw_error(ErrorKind::Config, "noise fraction must be non-negative");
  if (!dataset_weights.empty()) {
    if (dataset_weights.size() != dataset_count) throw_error(ErrorKind::Config, "one weight per training dataset required");
    const double total = std::accumulate(dataset_weights.begin(), dataset_weights.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) throw_error(ErrorKind::Config, "dataset weights must sum to 1");
  }
}

CoilSet simulate_sample(const Sample& sample, double acceleration, double noise_fraction, std::uint64_t mask_seed,
                        std::uint64_t noise_seed, SamplingMask* mask_out) {
  const auto& ref = sample.reference;
  SamplingMask mask = gaussian_mask(ref.height(), ref.width(), acceleration, mask_seed);
  const NoiseSpec noise{noise_fraction * mean_magnitude(ref), noise_seed};
  CoilSet coils = acquire(ref, sample.sensitivities, mask, noise);
  if (mask_out) *mask_out = std::move(mask);
  return coils;
}

double loss_and_gradients(const RimModel& model, const CoilSet& coils, const SamplingMask& mask, double sigma,
                          const ComplexImage& reference, const LossSpec& loss, std::vector<Tensor>& grads) {
  ad::Tape tape;
  const auto params = net::bind_parameters(tape, model);
  const auto estimates = net::unroll(tape, model.config(), params, coils, mask, sigma);
  const ad::Var l = multi_step_loss(loss, estimates, to_channels(reference));
  tape.backward(l);
  grads.clear();
  grads.reserve(params.size());
  for (const auto& p : params) grads.push_back(tape.gradient(p));
  return l.value()[0];
}

namespace {

struct ValidationItem {
  ComplexImage reference;
  CoilSet coils;
  SamplingMask mask;
};

std::vector<ValidationItem> build_validation(std::span<const Dataset> val_sets, const TrainConfig& cfg) {
  std::vector<ValidationItem> items;
  std::uint64_t j = 0;
  for (const auto& ds : val_sets) {
    for (const auto& img : ds.images) {
      Sample s{img, synth_sensitivities(img.height(), img.width(), cfg.coils, derive_seed(cfg.seed, kValCoils, j))
                        .sensitivities};
      SamplingMask mask;
      CoilSet coils = simulate_sample(s, cfg.acceleration, cfg.noise_fraction, derive_seed(cfg.seed, kValMask, j),
                                      derive_seed(cfg.seed, kValNoise, j), &mask);
      items.push_back({img, std::move(coils), std::move(mask)});
      ++j;
    }
  }
  return items;
}

void write_diagnostic(const TrainConfig& cfg, const RimModel& model, std::size_t step) {
  if (!cfg.diagnostic_checkpoint) return;
  KeyValues meta;
  meta.set("status", "diverged");
  meta.set("step", std::to_string(step));
  write_checkpoint(*cfg.diagnostic_checkpoint, model, meta);
}

}  // namespace

TrainResult train(RimModel model, std::span<const Dataset> train_sets, std::span<const Dataset> val_sets,
                  const LossSpec& loss, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate(train_sets.size());
  if (loss.weights.size() != model.config().time_steps)
    throw_error(ErrorKind::Config, "loss weights do not match the model's time steps");
  std::vector<std::size_t> sizes;
  for (const auto& ds : train_sets) sizes.push_back(ds.images.size());
  WeightedSampler sampler(sizes, config.dataset_weights, config.seed);
  const std::size_t total_images = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  const std::size_t steps_per_epoch = config.steps_per_epoch ? config.steps_per_epoch
                                                             : std::max<std::size_t>(1, total_images / config.batch_size);
  const auto validation = build_validation(val_sets, config);

  std::vector<Tensor> params;
  for (const auto& b : model.blocks()) params.push_back(b.value);
  AdamMoments moments = AdamMoments::zeros_like(params);
  AdamHyper hyper = config.adam;
  hyper.learning_rate = config.learning_rate;

  TrainResult result{model, model, {}, {}};
  double best_score = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::uint64_t draw = 0;
  std::vector<Tensor> grads, batch_grads;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      double step_loss = 0.0;
      batch_grads.clear();
      for (std::size_t b = 0; b < config.batch_size; ++b, ++draw) {
        const auto [d, item] = sampler.next();
        const ComplexImage& img = train_sets[d].images[item];
        // coil maps belong to the image, as for a scanned subject
        const std::uint64_t coil_seed = derive_seed(derive_seed(config.seed, kCoils, d), item);
        Sample base{img, synth_sensitivities(img.height(), img.width(), config.coils, coil_seed).sensitivities};
        const Sample s = augment(base, config.patch, derive_seed(config.seed, kAugment, draw), config.augment);
        const std::uint64_t mask_seed = config.resample_masks ? derive_seed(config.seed, kMask, draw)
                                                              : derive_seed(config.seed, kMask);
        SamplingMask mask;
        const CoilSet coils = simulate_sample(s, config.acceleration, config.noise_fraction, mask_seed,
                                              derive_seed(config.seed, kNoise, draw), &mask);
        const double l = loss_and_gradients(model, coils, mask, config.sigma, s.reference, loss, grads);
        if (!std::isfinite(l)) {
          write_diagnostic(config, model, result.step_losses.size());
          throw_error(ErrorKind::Numerical, "training loss diverged at epoch " + std::to_string(epoch));
        }
        step_loss += l / static_cast<double>(config.batch_size);
        if (batch_grads.empty()) {
          batch_grads = std::move(grads);
        } else {
          for (std::size_t i = 0; i < grads.size(); ++i) batch_grads[i] += grads[i];
        }
      }
      if (config.batch_size > 1)
        for (auto& g : batch_grads) g *= 1.0 / static_cast<double>(config.batch_size);
      adam_step(params, batch_grads, moments, hyper);
      for (std::size_t i = 0; i < params.size(); ++i) model.blocks()[i].value = params[i];
      result.step_losses.push_back(step_loss);
      epoch_loss += step_loss;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(steps_per_epoch);
    rec.learning_rate = hyper.learning_rate;
    if (!validation.empty()) {
      for (const auto& v : validation) {
        const auto est = rim_forward(model, v.coils, v.mask, config.sigma);
        rec.val_loss += evaluate_loss(loss, est, v.reference);
        const RealImage a = magnitude(est.back()), b = magnitude(v.reference);
        const double peak = *std::max_element(b.data.begin(), b.data.end());
        rec.val_ssim += ssim(a, b, peak);
        rec.val_psnr += psnr(a, b, peak);
      }
      const double n = static_cast<double>(validation.size());
      rec.val_loss /= n;
      rec.val_ssim /= n;
      rec.val_psnr /= n;
    } else {
      rec.val_loss = rec.train_loss;
    }
    if (!std::isfinite(rec.val_loss)) {
      write_diagnostic(config, model, result.step_losses.size());
      throw_error(ErrorKind::Numerical, "validation loss diverged at epoch " + std::to_string(epoch));
    }
    result.curve.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_loss < best_score) {
      best_score = rec.val_loss;
      result.best = model;
      since_best = 0;
    } else if (++since_best >= config.plateau_patience) {
      hyper.learning_rate *= config.plateau_decay;
      since_best = 0;
    }
  }
  result.last = std::move(model);
  return result;
}

std::string loss_curve_csv(std::span<const EpochRecord> curve) {
  std::ostringstream out;
  out.precision(10);
  out << "epoch,train_loss,val_loss,val_ssim,val_psnr\n";
  for (const auto& r : curve)
    out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_ssim << ',' << r.val_psnr << '\n';
  return out.str();
}

}  // namespace rim
