#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "rim/keyvalue.hpp"
#include "rim/tensor.hpp"
#include "rim/volume.hpp"

namespace rim::cli {

// ---- TOML value rendering for manifests -------------------------------------

std::string toml_value(bool v);
std::string toml_value(double v);
std::string toml_value(const std::string& v);
template <class T>
  requires std::is_integral_v<T>
std::string toml_value(T v) {
  return std::to_string(v);
}
template <class T>
std::optional<std::string> toml_entry(const T& v) {
  return toml_value(v);
}
template <class T>
std::optional<std::string> toml_entry(const std::vector<T>& v) {
  if (v.empty()) return std::nullopt;
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + toml_value(v[i]);
  return s + "]";
}

// ---- outputs that appear only when a command succeeds ---------------------

class Outputs {
 public:
  Outputs() = default;
  Outputs(const Outputs&) = delete;
  Outputs& operator=(const Outputs&) = delete;
  ~Outputs();
  /// Temporary path to write instead of `final_path`; sidecars written next
  /// to it follow it on commit.
  std::filesystem::path stage(const std::filesystem::path& final_path);
  void commit();

 private:
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;
  bool committed_ = false;
};

// ---- subcommand base ---------------------------------------------------------

struct RunContext {
  std::string command_line;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
};

class Command {
 public:
  Command(CLI::App& parent, std::string name, std::string description);
  virtual ~Command() = default;
  Command(const Command&) = delete;
  Command& operator=(const Command&) = delete;

  CLI::App& app() { return *app_; }
  const std::string& name() const { return name_; }
  virtual void execute(const RunContext& ctx) = 0;
  /// Section with every bound option in declaration order; empty lists are
  /// listed as comments.
  std::string manifest_section() const;

 protected:
  template <class T>
  CLI::Option* bind(const std::string& flags, T& var, const std::string& help) {
    remember(flags, [&var] { return toml_entry(var); });
    return app_->add_option(flags, var, help)->capture_default_str();
  }
  /// `--name,!--no-name` style switch.
  CLI::Option* bind_switch(const std::string& name, bool& var, const std::string& help);
  /// Stages `<stem>.manifest.toml` into `outputs`.
  void stage_manifest(Outputs& outputs, const std::filesystem::path& stem, const RunContext& ctx,
                      const std::vector<std::string>& notes = {}) const;

 private:
  void remember(const std::string& flags, std::function<std::optional<std::string>()> render);
  CLI::App* app_;
  std::string name_;
  std::vector<std::pair<std::string, std::function<std::optional<std::string>()>>> entries_;
};

std::filesystem::path manifest_path(const std::filesystem::path& stem);

// ---- data helpers ------------------------------------------------------------

/// Single-coil reference slices of a volume, scaled so the largest magnitude
/// in the volume is 1.
struct ReferenceSet {
  std::vector<ComplexImage> images;
  double normalization = 1.0;
  Volume header;  // dims, domain and metadata; samples cleared
};
ReferenceSet load_references(const std::filesystem::path& path);

/// Stacks equally shaped slices into an image-domain volume along axis 0.
Volume stack_slices(const std::vector<ComplexImage>& images, KeyValues meta);

/// Splits "a,b,c" into exactly `parts` fields.
std::vector<std::string> split_fields(const std::string& spec, std::size_t parts, const std::string& what);

double mean_magnitude(const ComplexImage& img);

/// Magnitude PNG scaled to [0, max] of the image.
void write_magnitude_png(const std::filesystem::path& path, const ComplexImage& img);

}  // namespace rim::cli
