#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rim {

/// Ordered `key = value` records, one per line; `#` starts a comment line.
class KeyValues {
 public:
  void set(std::string key, std::string value);
  std::optional<std::string> get(std::string_view key) const;
  std::string require(std::string_view key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

  std::string to_string() const;
  static KeyValues parse(std::string_view text);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

void write_key_values(const std::filesystem::path& path, const KeyValues& kv);
KeyValues read_key_values(const std::filesystem::path& path);

/// Sidecar path convention: `<file>.meta`.
std::filesystem::path sidecar_path(const std::filesystem::path& file);

}  // namespace rim
