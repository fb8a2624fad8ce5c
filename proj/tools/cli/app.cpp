#include <iostream>
#include <memory>
#include <sstream>

#include "cli.hpp"
#include "commands.hpp"
#include "rim/error.hpp"
#include "rim/version.hpp"

namespace rim::cli {

namespace {

/// `rim <sub> ... --config F` is accepted as `rim --config F <sub> ...`.
std::vector<std::string> hoist_config(const std::vector<std::string>& args) {
  std::vector<std::string> head, rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      head.push_back(args[i]);
      head.push_back(args[++i]);
    } else if (args[i].rfind("--config=", 0) == 0) {
      head.push_back(args[i]);
    } else {
      rest.push_back(args[i]);
    }
  }
  head.insert(head.end(), rest.begin(), rest.end());
  return head;
}

std::string quote_arg(const std::string& a) {
  if (!a.empty() && a.find_first_of(" \t\"'\\$") == std::string::npos) return a;
  std::string q = "'";
  for (char c : a) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Infeasible:
    case ErrorKind::InvalidShape: return kConfig;
    case ErrorKind::Numerical: return kNumerical;
    case ErrorKind::Parse:
    case ErrorKind::Io: return kData;
    case ErrorKind::Contract: return kFailure;
  }
  return kFailure;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Recurrent inference machines for accelerated MRI reconstruction", "rim"};
  app.set_version_flag("--version", std::string(version()));
  app.set_config("--config", "", "Read options from a TOML file such as a run manifest");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Command>> commands;
  commands.push_back(make_mask_command(app));
  commands.push_back(make_phantom_command(app));
  commands.push_back(make_train_command(app));
  commands.push_back(make_reconstruct_command(app));
  commands.push_back(make_bench_command(app));
  commands.push_back(make_eval_command(app));
  commands.push_back(make_lesion_command(app));
  commands.push_back(make_metrics_command(app));

  const std::vector<std::string> args = hoist_config(raw_args);
  std::string command_line = "rim";
  for (const auto& a : raw_args) command_line += " " + quote_arg(a);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << "\n" << dependency_versions() << "\n";
    return kOk;
  } catch (const CLI::ConfigError& e) {
    err << "rim: error [config]: " << e.what() << "\n";
    return kConfig;
  } catch (const CLI::FileError& e) {
    err << "rim: error [config]: " << e.what() << "\n";
    return kConfig;
  } catch (const CLI::ParseError& e) {
    err << "rim: error [usage]: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (const auto& c : commands)
      if (c->app().parsed()) failing = &c->app();
    err << failing->help();
    return kUsage;
  }

  Command* selected = nullptr;
  for (const auto& c : commands)
    if (c->app().parsed()) selected = c.get();
  if (!selected) {
    err << "rim: error [usage]: no subcommand\n\n" << app.help();
    return kUsage;
  }

  try {
    selected->execute({command_line, &out, &err});
  } catch (const Error& e) {
    err << "rim: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::bad_alloc&) {
    err << "rim: error [resources]: out of memory\n";
    return kFailure;
  } catch (const std::exception& e) {
    err << "rim: error [internal]: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace rim::cli
