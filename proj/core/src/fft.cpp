#include "rim/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "rim/error.hpp"

namespace rim {
namespace {

// FFTW planning is not thread-safe; execution of an existing plan on new arrays is.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t h, std::size_t w, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(h, w, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<cdouble> scratch(h * w);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = (h == 1)
        ? fftw_plan_dft_1d(static_cast<int>(w), buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED)
        : fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), buf, buf, sign,
                           FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

void centered_transform(const cdouble* in, cdouble* out, std::size_t h, std::size_t w, int sign) {
  std::vector<cdouble> buf(h * w);
  const std::size_t sh = h / 2, sw = w / 2;
  // ifftshift into the buffer
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t src_r = (r + sh) % h;
    for (std::size_t c = 0; c < w; ++c) buf[r * w + c] = in[src_r * w + (c + sw) % w];
  }
  auto* p = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_execute_dft(PlanCache::instance().get(h, w, sign), p, p);
  const double scale = 1.0 / std::sqrt(static_cast<double>(h * w));
  // fftshift out
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t dst_r = (r + sh) % h;
    for (std::size_t c = 0; c < w; ++c) out[dst_r * w + (c + sw) % w] = buf[r * w + c] * scale;
  }
}

ComplexImage transform2(const ComplexImage& img, int sign) {
  if (img.height() == 0 || img.width() == 0) throw_error(ErrorKind::InvalidShape, "FFT of an empty image");
  ComplexImage out(img.height(), img.width());
  centered_transform(img.data().data(), out.data().data(), img.height(), img.width(), sign);
  return out;
}

void transform1(std::span<cdouble> line, int sign) {
  if (line.empty()) throw_error(ErrorKind::InvalidShape, "FFT of an empty line");
  std::vector<cdouble> copy(line.begin(), line.end());
  centered_transform(copy.data(), line.data(), 1, line.size(), sign);
}

}  // namespace

ComplexImage fft2_centered(const ComplexImage& img) { return transform2(img, FFTW_FORWARD); }
ComplexImage ifft2_centered(const ComplexImage& img) { return transform2(img, FFTW_BACKWARD); }
void fft1_centered(std::span<cdouble> line) { transform1(line, FFTW_FORWARD); }
void ifft1_centered(std::span<cdouble> line) { transform1(line, FFTW_BACKWARD); }

}  // namespace rim
