#pragma once

#include <memory>

#include "common.hpp"

namespace rim::cli {

std::unique_ptr<Command> make_mask_command(CLI::App& app);
std::unique_ptr<Command> make_phantom_command(CLI::App& app);
std::unique_ptr<Command> make_metrics_command(CLI::App& app);
std::unique_ptr<Command> make_train_command(CLI::App& app);
std::unique_ptr<Command> make_reconstruct_command(CLI::App& app);
std::unique_ptr<Command> make_bench_command(CLI::App& app);
std::unique_ptr<Command> make_eval_command(CLI::App& app);
std::unique_ptr<Command> make_lesion_command(CLI::App& app);

}  // namespace rim::cli
