#pragma once

#include <string>
#include <string_view>

namespace rim {

std::string_view version();
/// One line per linked numerical dependency, "name version".
std::string dependency_versions();

}  // namespace rim
