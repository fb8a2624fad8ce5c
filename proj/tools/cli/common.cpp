#include "common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <system_error>

#include "rim/binary_io.hpp"
#include "rim/error.hpp"
#include "rim/experiments.hpp"
#include "rim/png_writer.hpp"
#include "rim/version.hpp"

namespace rim::cli {

namespace fs = std::filesystem;

std::string toml_value(bool v) { return v ? "true" : "false"; }

std::string toml_value(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  // keep it a float literal
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string toml_value(const std::string& v) {
  if (v.find_first_of("\"\\") == std::string::npos) return '"' + v + '"';
  return '\'' + v + '\'';
}

// ---- Outputs -----------------------------------------------------------------

Outputs::~Outputs() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& [tmp, final_path] : staged_) {
    fs::remove(tmp, ec);
    fs::remove(sidecar_path(tmp), ec);
  }
}

fs::path Outputs::stage(const fs::path& final_path) {
  if (final_path.empty()) throw_error(ErrorKind::Config, "empty output path");
  const fs::path parent = final_path.parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) throw_error(ErrorKind::Io, "cannot create directory " + parent.string() + ": " + ec.message());
  }
  fs::path tmp = parent / ("." + final_path.filename().string() + ".partial");
  staged_.emplace_back(tmp, final_path);
  return tmp;
}

void Outputs::commit() {
  for (const auto& [tmp, final_path] : staged_) {
    std::error_code ec;
    fs::rename(tmp, final_path, ec);
    if (ec) throw_error(ErrorKind::Io, "cannot write " + final_path.string() + ": " + ec.message());
    if (fs::exists(sidecar_path(tmp))) {
      fs::rename(sidecar_path(tmp), sidecar_path(final_path), ec);
      if (ec) throw_error(ErrorKind::Io, "cannot write " + sidecar_path(final_path).string());
    }
  }
  committed_ = true;
}

// ---- Command -------------------------------------------------------------------

Command::Command(CLI::App& parent, std::string name, std::string description)
    : app_(parent.add_subcommand(name, std::move(description))), name_(std::move(name)) {}

void Command::remember(const std::string& flags, std::function<std::optional<std::string>()> render) {
  std::string key;
  std::istringstream in(flags);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.rfind("--", 0) == 0) {
      key = tok.substr(2);
      break;
    }
  }
  if (key.empty()) throw std::logic_error("option without a long name: " + flags);
  entries_.emplace_back(std::move(key), std::move(render));
}

CLI::Option* Command::bind_switch(const std::string& name, bool& var, const std::string& help) {
  remember("--" + name, [&var] { return std::optional<std::string>(toml_value(var)); });
  return app_->add_flag("--" + name + ",!--no-" + name, var, help)->capture_default_str();
}

std::string Command::manifest_section() const {
  std::string s = "[" + name_ + "]\n";
  for (const auto& [key, render] : entries_) {
    const auto v = render();
    if (v)
      s += key + " = " + *v + "\n";
    else
      s += "# " + key + " = []  (empty)\n";
  }
  return s;
}

fs::path manifest_path(const fs::path& stem) { return fs::path(stem.string() + ".manifest.toml"); }

void Command::stage_manifest(Outputs& outputs, const fs::path& stem, const RunContext& ctx,
                             const std::vector<std::string>& notes) const {
  const fs::path path = manifest_path(stem);
  std::string text = "# rim " + std::string(version()) + " run manifest\n";
  text += "# command: " + ctx.command_line + "\n";
  text += "# working directory: " + fs::current_path().string() + "\n";
  text += "# rerun: rim --config " + path.filename().string() + " " + name_ + "\n";
  std::istringstream deps(dependency_versions());
  for (std::string line; std::getline(deps, line);) text += "# " + line + "\n";
  const char* threads = std::getenv("RIM_THREADS");
  text += "# RIM_THREADS = " + std::string(threads ? threads : "unset") + " (worker cap " +
          std::to_string(env_thread_cap()) + ", results do not depend on it)\n";
  for (const auto& n : notes) text += "# " + n + "\n";
  text += "\n" + manifest_section();
  io::write_text(outputs.stage(path), text);
}

// ---- data helpers --------------------------------------------------------------

ReferenceSet load_references(const fs::path& path) {
  Volume vol = read_volume(path);
  if (vol.coils != 1)
    throw_error(ErrorKind::Config, path.string() + ": reference volumes must be single-coil, found " +
                                       std::to_string(vol.coils) + " coils");
  auto slices = slice_ingest(vol);
  ReferenceSet set;
  double peak = 0.0;
  for (const auto& s : slices)
    for (const auto& v : s.coils.front().data()) peak = std::max(peak, std::abs(v));
  if (!(peak > 0.0) || !std::isfinite(peak))
    throw_error(ErrorKind::Numerical, path.string() + ": volume has no finite nonzero magnitude");
  set.normalization = peak;
  for (auto& s : slices) {
    ComplexImage img = std::move(s.coils.front());
    if (peak != 1.0) img *= cdouble(1.0 / peak);
    set.images.push_back(std::move(img));
  }
  vol.samples.clear();
  set.header = std::move(vol);
  return set;
}

Volume stack_slices(const std::vector<ComplexImage>& images, KeyValues meta) {
  if (images.empty()) throw_error(ErrorKind::Contract, "no slices to write");
  Volume vol;
  vol.dims = {images.size(), images.front().height(), images.front().width()};
  vol.coils = 1;
  vol.domain = Domain::Image;
  vol.readout_axis = 0;
  vol.samples.reserve(images.size() * images.front().size());
  for (const auto& img : images) {
    if (!img.same_shape(images.front())) throw_error(ErrorKind::InvalidShape, "slices differ in shape");
    for (const auto& v : img.data()) vol.samples.emplace_back(static_cast<float>(v.real()), static_cast<float>(v.imag()));
  }
  vol.meta = std::move(meta);
  return vol;
}

std::vector<std::string> split_fields(const std::string& spec, std::size_t parts, const std::string& what) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = spec.find(',', start);
    out.push_back(spec.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (out.size() != parts || std::any_of(out.begin(), out.end(), [](const auto& s) { return s.empty(); }))
    throw_error(ErrorKind::Config, what + " expects " + std::to_string(parts) + " comma-separated fields, got '" +
                                       spec + "'");
  return out;
}

double mean_magnitude(const ComplexImage& img) {
  double s = 0.0;
  for (const auto& v : img.data()) s += std::abs(v);
  return img.size() ? s / static_cast<double>(img.size()) : 0.0;
}

void write_magnitude_png(const fs::path& path, const ComplexImage& img) { write_png(path, magnitude(img)); }

}  // namespace rim::cli
