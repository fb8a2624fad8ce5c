#include <cstdio>

#include "commands.hpp"
#include "rim/binary_io.hpp"
#include "rim/checkpoint.hpp"
#include "rim/error.hpp"
#include "rim/training.hpp"

namespace rim::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) { return toml_value(v); }

class TrainCommand final : public Command {
 public:
  explicit TrainCommand(CLI::App& parent) : Command(parent, "train", "Train a recurrent inference machine") {
    bind("--train", train_, "Training volumes (one dataset per file)")->required();
    bind("--val", val_, "Validation volumes");
    bind("--weights", weights_, "Sampling proportion per training volume (default equal)");
    bind("--cell", cell_, "gru, mgu or indrnn")->check(CLI::IsMember({"gru", "mgu", "indrnn"}));
    bind("--features", features_, "Hidden feature count F");
    bind("--time-steps", time_steps_, "Unrolled time steps t");
    bind("--loss", loss_, "l1 or l2")->check(CLI::IsMember({"l1", "l2"}));
    bind("--epochs", config_.epochs, "Epochs");
    bind("--steps-per-epoch", config_.steps_per_epoch, "Optimizer steps per epoch (0: one pass)");
    bind("--batch-size", config_.batch_size, "Samples per optimizer step");
    bind("--lr", config_.learning_rate, "Initial learning rate");
    bind("--adam-beta1", config_.adam.beta1, "ADAM first-moment decay");
    bind("--adam-beta2", config_.adam.beta2, "ADAM second-moment decay");
    bind("--adam-epsilon", config_.adam.epsilon, "ADAM epsilon");
    bind("--plateau-patience", config_.plateau_patience, "Epochs without improvement before decay");
    bind("--plateau-decay", config_.plateau_decay, "Learning-rate factor on plateau");
    bind("--patch", config_.patch, "Square training crop side");
    bind_switch("augment-crop", config_.augment.crop, "Random crops (central crop when off)");
    bind_switch("augment-rotate", config_.augment.rotate, "Random quarter turns");
    bind_switch("augment-flip", config_.augment.flip, "Random row flips");
    bind_switch("augment-mirror", config_.augment.mirror, "Random column mirrors");
    bind("--accel", config_.acceleration, "Simulated acceleration");
    bind("--coils", config_.coils, "Synthesized receiver coils");
    bind("--noise", config_.noise_fraction, "Complex noise sigma relative to the mean reference magnitude");
    bind("--sigma", config_.sigma, "Log-likelihood noise scale");
    bind_switch("resample-masks", config_.resample_masks, "Fresh mask for every training draw");
    bind("--seed", config_.seed, "Seed for sampling, augmentation, masks and noise");
    bind("--init-seed", init_seed_, "Seed of the parameter initialization");
    bind("--init", init_, "Start from this checkpoint instead of a fresh initialization");
    bind("--out", out_, "Output checkpoint")->required();
  }

  void execute(const RunContext& ctx) override {
    std::vector<Dataset> train_sets, val_sets;
    for (const auto& p : train_) train_sets.push_back({fs::path(p).stem().string(), load_references(p).images});
    for (const auto& p : val_) val_sets.push_back({fs::path(p).stem().string(), load_references(p).images});
    config_.dataset_weights = weights_;
    config_.validate(train_sets.size());

    RimModel model = init_.empty() ? RimModel::initialized({features_, time_steps_, parse_cell_kind(cell_)}, init_seed_)
                                   : read_checkpoint(init_);
    if (!init_.empty()) {
      // the starting checkpoint defines the architecture
      features_ = model.config().features;
      time_steps_ = model.config().time_steps;
      cell_ = std::string(to_string(model.config().cell));
    }
    const LossSpec loss = LossSpec::make(parse_loss_norm(loss_), model.config().time_steps);

    Outputs outputs;
    const fs::path out(out_);
    const fs::path curve_path = out.string() + ".curve.csv";
    // survives a failed run on purpose
    config_.diagnostic_checkpoint = out.string() + ".diverged";

    const TrainResult result = train(model, train_sets, val_sets, loss, config_, [&](const EpochRecord& e) {
      char line[160];
      std::snprintf(line, sizeof line, "epoch %zu train %.6g val %.6g ssim %.4f psnr %.2f lr %.3g\n", e.epoch,
                    e.train_loss, e.val_loss, e.val_ssim, e.val_psnr, e.learning_rate);
      *ctx.out << line << std::flush;
    });

    KeyValues meta;
    meta.set("cell", cell_);
    meta.set("features", std::to_string(features_));
    meta.set("time_steps", std::to_string(time_steps_));
    meta.set("loss", loss_);
    meta.set("epochs", std::to_string(result.curve.size()));
    meta.set("steps", std::to_string(result.step_losses.size()));
    meta.set("selected", val_sets.empty() ? "lowest-training-loss-epoch" : "lowest-validation-loss-epoch");
    meta.set("final_train_loss", fmt(result.curve.back().train_loss));
    meta.set("final_learning_rate", fmt(result.curve.back().learning_rate));
    meta.set("seed", std::to_string(config_.seed));
    write_checkpoint(outputs.stage(out), result.best, meta);
    io::write_text(outputs.stage(curve_path), loss_curve_csv(result.curve));
    stage_manifest(outputs, out, ctx, {"parameters: " + std::to_string(result.best.parameter_count())});
    outputs.commit();
    *ctx.out << "checkpoint " << out_ << " (" << result.best.parameter_count() << " parameters)\n";
  }

 private:
  std::vector<std::string> train_;
  std::vector<std::string> val_;
  std::vector<double> weights_;
  std::string cell_ = "indrnn";
  std::size_t features_ = 64;
  std::size_t time_steps_ = 8;
  std::string loss_ = "l1";
  TrainConfig config_{};
  std::uint64_t init_seed_ = 0;
  std::string init_;
  std::string out_;
};

}  // namespace

std::unique_ptr<Command> make_train_command(CLI::App& app) { return std::make_unique<TrainCommand>(app); }

}  // namespace rim::cli
