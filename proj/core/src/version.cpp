#include "rim/version.hpp"

#include <fftw3.h>
#include <png.h>

#include <Eigen/Core>

namespace rim {

std::string_view version() { return RIM_VERSION_STRING; }

std::string dependency_versions() {
  std::string out = "fftw ";
  out += fftw_version;
  out += "\neigen " + std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
  out += "\nlibpng " PNG_LIBPNG_VER_STRING;
  return out;
}

}  // namespace rim
