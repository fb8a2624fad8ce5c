#include "rim/keyvalue.hpp"

#include <fstream>
#include <sstream>

#include "rim/binary_io.hpp"
#include "rim/error.hpp"

namespace rim {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void KeyValues::set(std::string key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

std::optional<std::string> KeyValues::get(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

std::string KeyValues::require(std::string_view key) const {
  auto v = get(key);
  if (!v) throw_error(ErrorKind::Parse, "missing key '" + std::string(key) + "'");
  return *v;
}

std::string KeyValues::to_string() const {
  std::ostringstream out;
  for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
  return out.str();
}

KeyValues KeyValues::parse(std::string_view text) {
  KeyValues kv;
  std::size_t pos = 0, line_start = 0;
  while (line_start < text.size()) {
    pos = text.find('\n', line_start);
    if (pos == std::string_view::npos) pos = text.size();
    const std::string_view line = trim(text.substr(line_start, pos - line_start));
    if (!line.empty() && line.front() != '#') {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_start);
      kv.set(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
    }
    line_start = pos + 1;
  }
  return kv;
}

void write_key_values(const std::filesystem::path& path, const KeyValues& kv) { io::write_text(path, kv.to_string()); }

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return KeyValues::parse(buf.str());
}

std::filesystem::path sidecar_path(const std::filesystem::path& file) {
  auto p = file;
  p += ".meta";
  return p;
}

}  // namespace rim
