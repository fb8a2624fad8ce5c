#include <algorithm>
#include <cmath>

#include "commands.hpp"
#include "rim/binary_io.hpp"
#include "rim/checkpoint.hpp"
#include "rim/error.hpp"
#include "rim/experiments.hpp"
#include "rim/metrics.hpp"
#include "rim/mri_model.hpp"
#include "rim/random.hpp"

namespace rim::cli {

namespace fs = std::filesystem;

namespace {

struct Acquisition {
  CoilSet coils;
  SamplingMask mask;
  std::optional<ComplexImage> reference;
};

class ReconstructCommand final : public Command {
 public:
  explicit ReconstructCommand(CLI::App& parent)
      : Command(parent, "reconstruct", "Reconstruct every slice of a volume") {
    bind("--method", method_, "rim, zero-filled or cs")->check(CLI::IsMember({"rim", "zero-filled", "cs"}));
    bind("--checkpoint", checkpoint_, "Trained model (method rim)");
    bind("--input", input_, "Reference image volume (simulated acquisition) or multi-coil k-space volume")
        ->required();
    bind("--sensitivities", sensitivities_, "Multi-coil image-domain coil maps for k-space input");
    bind("--mask", mask_file_, "Mask file applied to every slice (default: a fresh mask per slice)");
    bind("--accel", accel_, "Acceleration of generated masks");
    bind("--mask-seed", mask_seed_, "Base seed of generated masks");
    bind("--fwhm", mask_options_.fwhm_fraction, "Gaussian FWHM of generated masks");
    bind("--ellipse", mask_options_.ellipse_fraction, "Calibration ellipse fraction of generated masks");
    bind("--coils", coils_, "Synthesized receiver coils for image input");
    bind("--coil-seed", coil_seed_, "Base seed of synthesized coil maps");
    bind("--noise", noise_, "Complex noise sigma relative to the mean reference magnitude");
    bind("--noise-seed", noise_seed_, "Base seed of the noise");
    bind("--sigma", sigma_, "Log-likelihood noise scale for the RIM gradient");
    bind("--cs-lambda", cs_.lambda, "Wavelet l1 weight");
    bind("--cs-iters", cs_.max_iters, "FISTA iterations");
    bind("--cs-levels", cs_.levels, "Wavelet levels");
    bind("--cs-power-iters", cs_.power_iters, "Power iterations for the step size");
    bind("--out", out_, "Output image volume")->required();
    bind("--png-dir", png_dir_, "Optional directory for per-slice magnitude PNGs");
    bind("--metrics", metrics_, "Optional CSV scoring each slice against the reference (image input)");
  }

  void execute(const RunContext& ctx) override {
    std::optional<RimModel> model;
    if (method_ == "rim") {
      if (checkpoint_.empty()) throw_error(ErrorKind::Config, "--method rim needs --checkpoint");
      if (!fs::exists(checkpoint_)) throw_error(ErrorKind::Config, "checkpoint not found: " + checkpoint_);
      model = read_checkpoint(checkpoint_);
    }
    cs_.validate();
    std::optional<SamplingMask> fixed_mask;
    if (!mask_file_.empty()) fixed_mask = read_mask(mask_file_);

    double scale = 1.0;
    const std::vector<Acquisition> acq = prepare(fixed_mask, scale);
    if (!metrics_.empty() && !acq.front().reference)
      throw_error(ErrorKind::Config, "--metrics needs a reference image volume as --input");

    std::vector<ComplexImage> recon(acq.size());
    const ReconMethod method = method_ == "rim" ? rim_method("rim", *model, sigma_)
                               : method_ == "cs" ? cs_method(cs_)
                                                 : zero_filled_method();
    parallel_for(acq.size(), env_thread_cap(),
                 [&](std::size_t i) { recon[i] = method.reconstruct(acq[i].coils, acq[i].mask); });
    for (const auto& r : recon)
      if (!all_finite(r)) throw_error(ErrorKind::Numerical, "reconstruction produced non-finite values");

    std::vector<MetricsRecord> records;
    if (!metrics_.empty()) {
      const std::string label = method_ == "rim" ? fs::path(checkpoint_).stem().string() : method_;
      for (std::size_t i = 0; i < acq.size(); ++i) {
        const auto [s, p] = score(recon[i], *acq[i].reference);
        records.push_back({label, fs::path(input_).stem().string(), acq[i].mask.acceleration, i, acq[i].mask.seed, s, p});
      }
    }

    std::vector<ComplexImage> scaled = recon;
    for (auto& r : scaled) r *= cdouble(scale);
    KeyValues meta;
    meta.set("modality", "reconstruction-" + method_);
    meta.set("normalization", toml_value(scale));
    meta.set("provenance", "reconstruct " + input_);
    Outputs outputs;
    write_volume(outputs.stage(out_), stack_slices(scaled, meta));
    if (!png_dir_.empty())
      for (std::size_t i = 0; i < recon.size(); ++i)
        write_magnitude_png(outputs.stage(fs::path(png_dir_) / ("slice_" + std::to_string(i) + ".png")), recon[i]);
    if (!metrics_.empty()) io::write_text(outputs.stage(metrics_), to_csv(records));
    stage_manifest(outputs, out_, ctx, {"slices: " + std::to_string(acq.size()), "input scale: " + toml_value(scale)});
    outputs.commit();
    *ctx.out << "reconstruct " << out_ << ": " << acq.size() << " slices with " << method_ << "\n";
  }

 private:
  std::vector<Acquisition> prepare(const std::optional<SamplingMask>& fixed_mask, double& scale) {
    const Volume head = read_volume(input_);
    return head.domain == Domain::Image ? simulate(fixed_mask, scale) : measured(head, fixed_mask, scale);
  }

  std::vector<Acquisition> simulate(const std::optional<SamplingMask>& fixed_mask, double& scale) {
    if (!sensitivities_.empty()) throw_error(ErrorKind::Config, "--sensitivities applies to k-space input only");
    ReferenceSet refs = load_references(input_);
    scale = refs.normalization;
    std::vector<Acquisition> out;
    for (std::size_t i = 0; i < refs.images.size(); ++i) {
      const ComplexImage& ref = refs.images[i];
      const std::size_t h = ref.height(), w = ref.width();
      SamplingMask mask = fixed_mask ? *fixed_mask : gaussian_mask(h, w, accel_, derive_seed(mask_seed_, 0, i), mask_options_);
      check_mask_shape(mask, h, w);
      auto sens = synth_sensitivities(h, w, coils_, derive_seed(coil_seed_, 0, i)).sensitivities;
      const NoiseSpec noise{noise_ * mean_magnitude(ref), derive_seed(noise_seed_, 0, i)};
      CoilSet coils = acquire(ref, std::move(sens), mask, noise);
      out.push_back({std::move(coils), std::move(mask), ref});
    }
    return out;
  }

  std::vector<Acquisition> measured(const Volume& volume, const std::optional<SamplingMask>& fixed_mask, double& scale) {
    if (sensitivities_.empty()) throw_error(ErrorKind::Config, "k-space input needs --sensitivities");
    const Volume sens_vol = read_volume(sensitivities_);
    if (sens_vol.domain != Domain::Image || sens_vol.coils != volume.coils || sens_vol.dims != volume.dims ||
        sens_vol.readout_axis != volume.readout_axis)
      throw_error(ErrorKind::InvalidShape, "coil maps must be an image-domain volume matching the k-space volume");
    const auto data = slice_ingest(volume);
    const auto maps = slice_ingest(sens_vol);
    std::vector<Acquisition> out;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& y = data[i].coils;
      const std::size_t h = y.front().height(), w = y.front().width();
      SamplingMask mask;
      if (fixed_mask) {
        mask = *fixed_mask;
        check_mask_shape(mask, h, w);
      } else {
        // sampled positions are the nonzero ones
        mask = SamplingMask::full(h, w);
        for (std::size_t p = 0; p < h * w; ++p)
          mask.pattern[p] = std::any_of(y.begin(), y.end(), [p](const ComplexImage& c) { return c[p] != cdouble{}; });
        mask.acceleration = static_cast<double>(h * w) / static_cast<double>(std::max<std::size_t>(1, mask.count()));
      }
      CoilSet coils{maps[i].coils, y};
      coils.validate();
      out.push_back({std::move(coils), std::move(mask), std::nullopt});
    }
    double peak = 0.0;
    for (const auto& a : out) {
      const ComplexImage x0 = adjoint_op(*a.coils.measurements, a.coils, a.mask);
      for (const auto& v : x0.data()) peak = std::max(peak, std::abs(v));
    }
    if (!(peak > 0.0)) throw_error(ErrorKind::Numerical, "k-space volume has no signal");
    scale = peak;
    for (auto& a : out)
      for (auto& y : *a.coils.measurements) y *= cdouble(1.0 / peak);
    return out;
  }

  std::string method_ = "rim";
  std::string checkpoint_;
  std::string input_;
  std::string sensitivities_;
  std::string mask_file_;
  double accel_ = 4.0;
  std::uint64_t mask_seed_ = 0;
  MaskOptions mask_options_{};
  std::size_t coils_ = 4;
  std::uint64_t coil_seed_ = 0;
  double noise_ = 0.0;
  std::uint64_t noise_seed_ = 0;
  double sigma_ = 1.0;
  CsConfig cs_{};
  std::string out_;
  std::string png_dir_;
  std::string metrics_;
};

}  // namespace

std::unique_ptr<Command> make_reconstruct_command(CLI::App& app) { return std::make_unique<ReconstructCommand>(app); }

}  // namespace rim::cli
