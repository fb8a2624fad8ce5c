#include <cstdio>

#include "commands.hpp"
#include "rim/binary_io.hpp"
#include "rim/checkpoint.hpp"
#include "rim/error.hpp"
#include "rim/experiments.hpp"
#include "rim/phantom.hpp"
#include "rim/png_writer.hpp"

namespace rim::cli {

namespace fs = std::filesystem;

namespace {

fs::path with_suffix(const std::string& prefix, const std::string& suffix) { return fs::path(prefix + suffix); }

void bind_cs(Command& cmd, CsConfig& cs, auto&& bind) {
  (void)cmd;
  bind("--cs-lambda", cs.lambda, "Wavelet l1 weight");
  bind("--cs-iters", cs.max_iters, "FISTA iterations");
  bind("--cs-levels", cs.levels, "Wavelet levels");
  bind("--cs-power-iters", cs.power_iters, "Power iterations for the step size");
}

class BenchCommand final : public Command {
 public:
  explicit BenchCommand(CLI::App& parent)
      : Command(parent, "bench", "Time single-slice inference over a (cell, t, F) grid") {
    bind("--time-steps", config_.time_steps, "Time-step grid");
    bind("--features", config_.features, "Feature grid");
    bind("--cells", cells_, "Cells to time")->check(CLI::IsMember({"gru", "mgu", "indrnn"}));
    bind("--repetitions", config_.repetitions, "Timed repetitions per setting");
    bind("--warmup", config_.warmup, "Discarded runs per setting");
    bind("--size", config_.size, "Slice side in pixels");
    bind("--coils", config_.coils, "Receiver coils");
    bind("--accel", config_.acceleration, "Acceleration");
    bind("--sigma", config_.sigma, "Log-likelihood noise scale");
    bind_switch("cs", config_.include_cs, "Also time the compressed-sensing baseline");
    bind("--cs-repetitions", config_.cs_repetitions, "Timed repetitions for the baseline");
    bind_cs(*this, config_.cs, [this](auto&&... a) { return bind(a...); });
    bind("--seed", config_.seed, "Seed of phantom, coils, mask and model weights");
    bind("--out", out_, "Output CSV")->required();
  }

  void execute(const RunContext& ctx) override {
    config_.cells.clear();
    for (const auto& c : cells_) config_.cells.push_back(parse_cell_kind(c));
    const auto rows = bench_inference(config_, [&](const BenchRow& r) {
      char line[160];
      std::snprintf(line, sizeof line, "%-7s t=%-3zu F=%-4zu %9.3f ms +- %.3f\n", r.method.c_str(), r.time_steps,
                    r.features, r.stats.mean_ms, r.stats.std_ms);
      *ctx.out << line << std::flush;
    });
    Outputs outputs;
    io::write_text(outputs.stage(out_), bench_csv(rows));
    stage_manifest(outputs, out_, ctx, {"timings are wall-clock and differ between runs"});
    outputs.commit();
  }

 private:
  BenchConfig config_{};
  std::vector<std::string> cells_{"gru", "mgu", "indrnn"};
  std::string out_;
};

class EvalCommand final : public Command {
 public:
  explicit EvalCommand(CLI::App& parent)
      : Command(parent, "eval", "Score models and baselines on evaluation datasets") {
    bind("--model", models_, "NAME,TRAIN_SET,CHECKPOINT (repeatable)");
    bind("--dataset", datasets_, "NAME,VOLUME (repeatable)")->required();
    bind("--accel", config_.accelerations, "Accelerations");
    bind("--coils", config_.coils, "Synthesized receiver coils");
    bind("--noise", config_.noise_fraction, "Complex noise sigma relative to the mean reference magnitude");
    bind("--sigma", config_.sigma, "Log-likelihood noise scale");
    bind_switch("cs", config_.include_cs, "Include the compressed-sensing baseline");
    bind_cs(*this, config_.cs, [this](auto&&... a) { return bind(a...); });
    bind("--seed", config_.seed, "Seed of coils, masks and noise");
    bind("--out", out_, "Output prefix for <prefix>.rows.csv and <prefix>.cells.csv")->required();
  }

  void execute(const RunContext& ctx) override {
    std::vector<Dataset> sets;
    for (const auto& spec : datasets_) {
      const auto f = split_fields(spec, 2, "--dataset");
      sets.push_back({f[0], load_references(f[1]).images});
    }
    std::vector<NamedModel> models;
    std::vector<std::string> notes;
    for (const auto& spec : models_) {
      const auto f = split_fields(spec, 3, "--model");
      NamedModel m{f[0], f[1], std::nullopt, "ok"};
      if (!fs::exists(f[2])) {
        m.status = "missing";
      } else {
        try {
          m.model = read_checkpoint(f[2]);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::Parse && e.kind() != ErrorKind::Io) throw;
          m.status = "unreadable";
        }
      }
      if (m.status != "ok") {
        *ctx.err << "rim: warning: model " << f[0] << " (" << f[2] << ") is " << m.status << "; its cells are gaps\n";
        notes.push_back("model " + f[0] + ": " + m.status);
      }
      models.push_back(std::move(m));
    }
    config_.threads = env_thread_cap();
    const EvalResult res = eval_generalization(models, sets, config_);
    Outputs outputs;
    io::write_text(outputs.stage(with_suffix(out_, ".rows.csv")), eval_rows_csv(res.rows));
    io::write_text(outputs.stage(with_suffix(out_, ".cells.csv")), eval_cells_csv(res.cells));
    stage_manifest(outputs, out_, ctx, notes);
    outputs.commit();
    for (const auto& c : res.cells) {
      char line[200];
      std::snprintf(line, sizeof line, "%-12s %-10s %-10s R=%-4g ssim %.4f psnr %.2f %s\n", c.method.c_str(),
                    c.train_set.c_str(), c.eval_set.c_str(), c.acceleration, c.mean_ssim, c.mean_psnr,
                    c.status == "ok" ? "" : c.status.c_str());
      *ctx.out << line;
    }
  }

 private:
  std::vector<std::string> models_;
  std::vector<std::string> datasets_;
  EvalConfig config_{};
  std::string out_;
};

class LesionCommand final : public Command {
 public:
  explicit LesionCommand(CLI::App& parent)
      : Command(parent, "lesion-sim", "Insert simulated lesions and measure reconstructed intensity") {
    bind("--input", input_, "Base image volume (default: a generated phantom)");
    bind("--slice", slice_, "Slice of the base volume");
    bind("--phantom", phantom_, "Phantom kind when no input is given")
        ->check(CLI::IsMember({"shepp-logan", "ellipses", "textured"}));
    bind("--size", size_, "Phantom side when no input is given");
    bind("--phantom-seed", phantom_seed_, "Phantom seed when no input is given");
    bind("--center", center_, "Lesion row and column (default: most homogeneous bright region)")->expected(2);
    bind("--lesion-sigma", spec_.sigma, "Gaussian lesion width in voxels");
    bind("--factors", spec_.factors, "Lesion intensities relative to the surrounding mean");
    bind("--noise", spec_.noise_fraction, "Complex noise sigma relative to the mean magnitude");
    bind("--accel", spec_.accelerations, "Accelerations");
    bind_switch("full-sampling", spec_.include_full_sampling, "Also reconstruct fully sampled data");
    bind("--mask-seeds", spec_.mask_seeds, "Masks per acceleration");
    bind("--coils", spec_.coils, "Synthesized receiver coils");
    bind("--annulus-inner", spec_.annulus_inner, "Inner radius of the surrounding annulus");
    bind("--annulus-outer", spec_.annulus_outer, "Outer radius of the surrounding annulus");
    bind("--seed", spec_.seed, "Seed of coils, masks and noise");
    bind("--model", models_, "NAME,CHECKPOINT (repeatable)");
    bind("--sigma", sigma_, "Log-likelihood noise scale for RIM models");
    bind_switch("cs", include_cs_, "Include the compressed-sensing baseline");
    bind_cs(*this, cs_, [this](auto&&... a) { return bind(a...); });
    bind("--homogeneity-radius", homogeneity_radius_, "Disc radius for the automatic center search");
    bind("--out", out_, "Output prefix for <prefix>.csv and image panels")->required();
  }

  void execute(const RunContext& ctx) override {
    std::vector<ReconMethod> methods{zero_filled_method()};
    if (include_cs_) {
      cs_.validate();
      methods.push_back(cs_method(cs_));
    }
    for (const auto& spec : models_) {
      const auto f = split_fields(spec, 2, "--model");
      if (!fs::exists(f[1])) throw_error(ErrorKind::Config, "checkpoint not found: " + f[1]);
      methods.push_back(rim_method(f[0], read_checkpoint(f[1]), sigma_));
    }

    ComplexImage base;
    if (input_.empty()) {
      base = gen_phantom(parse_phantom_kind(phantom_), size_, phantom_seed_);
    } else {
      auto refs = load_references(input_);
      if (slice_ >= refs.images.size()) throw_error(ErrorKind::Config, "--slice outside the volume");
      base = std::move(refs.images[slice_]);
    }
    std::vector<std::string> notes;
    if (center_.empty()) {
      const auto [r, c] = homogeneous_center(base, homogeneity_radius_);
      center_ = {r, c};
      notes.push_back("center chosen automatically");
    }
    spec_.row = center_.at(0);
    spec_.col = center_.at(1);
    spec_.validate(base.height(), base.width());

    const LesionResult res = lesion_study(base, spec_, methods, env_thread_cap());
    Outputs outputs;
    io::write_text(outputs.stage(with_suffix(out_, ".csv")), lesion_csv(res.rows));
    for (const auto& p : res.panels) {
      // shared display range so panels compare directly
      const auto& ref = res.panels.front().image.data;
      const double hi = *std::max_element(ref.begin(), ref.end());
      write_png(outputs.stage(with_suffix(out_, "." + p.name + ".png")), p.image, 0.0, hi);
      write_float_dump(outputs.stage(with_suffix(out_, "." + p.name + ".f64")), p.image);
    }
    stage_manifest(outputs, out_, ctx, notes);
    outputs.commit();
    for (const auto& r : res.rows) {
      char line[200];
      std::snprintf(line, sizeof line, "%-12s R=%-3g factor %-5g simulated %8.4f measured %8.4f +- %.4f bias %+.4f\n",
                    r.method.c_str(), r.acceleration, r.factor, r.simulated, r.measured_mean, r.measured_std, r.bias);
      *ctx.out << line;
    }
  }

 private:
  std::string input_;
  std::size_t slice_ = 0;
  std::string phantom_ = "textured";
  std::size_t size_ = 64;
  std::uint64_t phantom_seed_ = 0;
  std::vector<std::size_t> center_;
  LesionSpec spec_{};
  std::vector<std::string> models_;
  double sigma_ = 1.0;
  bool include_cs_ = true;
  CsConfig cs_{};
  double homogeneity_radius_ = 6.0;
  std::string out_;
};

}  // namespace

std::unique_ptr<Command> make_bench_command(CLI::App& app) { return std::make_unique<BenchCommand>(app); }
std::unique_ptr<Command> make_eval_command(CLI::App& app) { return std::make_unique<EvalCommand>(app); }
std::unique_ptr<Command> make_lesion_command(CLI::App& app) { return std::make_unique<LesionCommand>(app); }

}  // namespace rim::cli
