#include <cmath>
#include <limits>

#include "commands.hpp"
#include "rim/binary_io.hpp"
#include "rim/error.hpp"
#include "rim/experiments.hpp"
#include "rim/fft.hpp"
#include "rim/metrics.hpp"
#include "rim/phantom.hpp"
#include "rim/png_writer.hpp"
#include "rim/sampling.hpp"

namespace rim::cli {

namespace fs = std::filesystem;

namespace {

class MaskCommand final : public Command {
 public:
  explicit MaskCommand(CLI::App& parent) : Command(parent, "mask", "Generate a variable-density sampling mask") {
    bind("--size", size_, "Mask height and width")->expected(2);
    bind("--accel", accel_, "Acceleration factor R");
    bind("--seed", seed_, "Random seed");
    bind("--fwhm", fwhm_, "Gaussian FWHM as a fraction of each axis");
    bind("--ellipse", ellipse_, "Calibration ellipse half-axes as a fraction of the half-size");
    bind("--out", out_, "Output mask file")->required();
    bind("--png", png_, "Optional PNG rendering of the mask");
  }

  void execute(const RunContext& ctx) override {
    const SamplingMask mask = gaussian_mask(size_.at(0), size_.at(1), accel_, seed_, {fwhm_, ellipse_});
    Outputs outputs;
    write_mask(outputs.stage(out_), mask);
    if (!png_.empty()) {
      RealImage img(mask.height, mask.width);
      for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = mask.pattern[i];
      write_png(outputs.stage(png_), img, 0.0, 1.0);
    }
    stage_manifest(outputs, out_, ctx, {"samples kept: " + std::to_string(mask.count())});
    outputs.commit();
    *ctx.out << "mask " << out_ << ": " << mask.count() << " of " << mask.pattern.size() << " samples\n";
  }

 private:
  std::vector<std::size_t> size_{64, 64};
  double accel_ = 4.0;
  std::uint64_t seed_ = 0;
  double fwhm_ = 0.7;
  double ellipse_ = 0.02;
  std::string out_;
  std::string png_;
};

class PhantomCommand final : public Command {
 public:
  explicit PhantomCommand(CLI::App& parent)
      : Command(parent, "phantom", "Generate a stack of synthetic phantom slices") {
    bind("--kind", kind_, "shepp-logan, ellipses or textured")
        ->check(CLI::IsMember({"shepp-logan", "ellipses", "textured"}));
    bind("--size", size_, "Side length in pixels (at least 32)");
    bind("--seed", seed_, "Seed of the first slice; slice i uses seed + i");
    bind("--count", count_, "Number of slices");
    bind("--out", out_, "Output volume file")->required();
    bind("--png-dir", png_dir_, "Optional directory for per-slice magnitude PNGs");
  }

  void execute(const RunContext& ctx) override {
    if (count_ == 0) throw_error(ErrorKind::Config, "--count must be positive");
    const PhantomKind kind = parse_phantom_kind(kind_);
    std::vector<ComplexImage> images;
    for (std::size_t i = 0; i < count_; ++i) images.push_back(gen_phantom(kind, size_, seed_ + i));
    KeyValues meta;
    meta.set("modality", "synthetic-" + kind_);
    meta.set("normalization", "1");
    meta.set("provenance", "phantom kind=" + kind_ + " seed=" + std::to_string(seed_));
    Outputs outputs;
    write_volume(outputs.stage(out_), stack_slices(images, meta));
    if (!png_dir_.empty())
      for (std::size_t i = 0; i < count_; ++i)
        write_magnitude_png(outputs.stage(fs::path(png_dir_) / ("slice_" + std::to_string(i) + ".png")), images[i]);
    stage_manifest(outputs, out_, ctx);
    outputs.commit();
    *ctx.out << "phantom " << out_ << ": " << count_ << " x " << size_ << " x " << size_ << "\n";
  }

 private:
  std::string kind_ = "textured";
  std::size_t size_ = 64;
  std::uint64_t seed_ = 0;
  std::size_t count_ = 1;
  std::string out_;
  std::string png_dir_;
};

class MetricsCommand final : public Command {
 public:
  explicit MetricsCommand(CLI::App& parent)
      : Command(parent, "metrics", "Score reconstructed slices against reference slices") {
    bind("--reference", reference_, "Reference volume")->required();
    bind("--estimate", estimate_, "Reconstructed volume")->required();
    bind("--model", model_, "Label for the model column");
    bind("--dataset", dataset_, "Label for the dataset column");
    bind("--accel", accel_, "Label for the acceleration column");
    bind("--seed", seed_, "Label for the seed column");
    bind("--snr-patch", snr_patch_, "Side of the k-space corner patch for the noise level");
    bind("--out", out_, "Output CSV")->required();
  }

  void execute(const RunContext& ctx) override {
    const ReferenceSet ref = load_references(reference_);
    const Volume est_vol = read_volume(estimate_);
    if (est_vol.coils != 1 || est_vol.domain != Domain::Image)
      throw_error(ErrorKind::Config, "estimate must be a single-coil image-domain volume");
    const auto est = slice_ingest(est_vol);
    if (est.size() != ref.images.size())
      throw_error(ErrorKind::InvalidShape, "reference has " + std::to_string(ref.images.size()) +
                                               " slices, estimate has " + std::to_string(est.size()));
    std::vector<MetricsRecord> records;
    for (std::size_t i = 0; i < est.size(); ++i) {
      // the estimate shares the reference's scale
      ComplexImage e = est[i].coils.front();
      if (!e.same_shape(ref.images[i])) throw_error(ErrorKind::InvalidShape, "slice shapes differ");
      e *= cdouble(1.0 / ref.normalization);
      const auto [s, p] = score(e, ref.images[i]);
      MetricsRecord r{model_, dataset_, accel_, i, seed_, s, p, std::numeric_limits<double>::quiet_NaN()};
      if (e.height() >= 2 * snr_patch_ && e.width() >= 2 * snr_patch_) {
        try {
          r.snr = snr_estimate(magnitude(e), fft2_centered(e), snr_patch_);
        } catch (const Error& err) {
          if (err.kind() != ErrorKind::Numerical) throw;
        }
      }
      records.push_back(std::move(r));
    }
    Outputs outputs;
    io::write_text(outputs.stage(out_), to_csv(records));
    stage_manifest(outputs, out_, ctx);
    outputs.commit();
    double ms = 0, mp = 0;
    for (const auto& r : records) ms += r.ssim, mp += r.psnr;
    *ctx.out << "metrics " << out_ << ": mean ssim " << ms / records.size() << ", mean psnr " << mp / records.size()
             << " dB over " << records.size() << " slices\n";
  }

 private:
  std::string reference_;
  std::string estimate_;
  std::string model_ = "estimate";
  std::string dataset_ = "reference";
  double accel_ = 0.0;
  std::uint64_t seed_ = 0;
  std::size_t snr_patch_ = 32;
  std::string out_;
};

}  // namespace

std::unique_ptr<Command> make_mask_command(CLI::App& app) { return std::make_unique<MaskCommand>(app); }
std::unique_ptr<Command> make_phantom_command(CLI::App& app) { return std::make_unique<PhantomCommand>(app); }
std::unique_ptr<Command> make_metrics_command(CLI::App& app) { return std::make_unique<MetricsCommand>(app); }

}  // namespace rim::cli
