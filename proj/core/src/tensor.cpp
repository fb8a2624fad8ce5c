#include "rim/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "rim/error.hpp"

namespace rim {

ComplexImage::ComplexImage(std::size_t height, std::size_t width, cdouble fill)
    : height_(height), width_(width), data_(height * width, fill) {
  if (height == 0 || width == 0) throw_error(ErrorKind::InvalidShape, "image dimensions must be positive");
}

ComplexImage::ComplexImage(std::size_t height, std::size_t width, std::vector<cdouble> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height == 0 || width == 0) throw_error(ErrorKind::InvalidShape, "image dimensions must be positive");
  if (data_.size() != height * width) throw_error(ErrorKind::InvalidShape, "sample count does not match height*width");
}

ComplexImage& ComplexImage::operator+=(const ComplexImage& other) {
  if (!same_shape(other)) throw_error(ErrorKind::InvalidShape, "image shapes differ");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

ComplexImage& ComplexImage::operator-=(const ComplexImage& other) {
  if (!same_shape(other)) throw_error(ErrorKind::InvalidShape, "image shapes differ");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

ComplexImage& ComplexImage::operator*=(cdouble s) {
  for (auto& v : data_) v *= s;
  return *this;
}

ComplexImage operator+(ComplexImage a, const ComplexImage& b) { return a += b; }
ComplexImage operator-(ComplexImage a, const ComplexImage& b) { return a -= b; }
ComplexImage operator*(ComplexImage a, cdouble s) { return a *= s; }

cdouble inner(const ComplexImage& a, const ComplexImage& b) {
  if (!a.same_shape(b)) throw_error(ErrorKind::InvalidShape, "image shapes differ");
  cdouble acc{};
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * std::conj(b[i]);
  return acc;
}

double norm(const ComplexImage& a) {
  double acc = 0.0;
  for (const auto& v : a.data()) acc += std::norm(v);
  return std::sqrt(acc);
}

bool all_finite(const ComplexImage& a) {
  for (const auto& v : a.data())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

RealImage magnitude(const ComplexImage& img) {
  RealImage out(img.height(), img.width());
  for (std::size_t i = 0; i < img.size(); ++i) out.data[i] = std::abs(img[i]);
  return out;
}

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_numel(shape_)) throw_error(ErrorKind::InvalidShape, "tensor data does not match shape");
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (shape_ != other.shape_) throw_error(ErrorKind::InvalidShape, "tensor shapes differ");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

Tensor to_channels(const ComplexImage& img) {
  const std::size_t n = img.size();
  Tensor t({2, img.height(), img.width()});
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = img[i].real();
    t[n + i] = img[i].imag();
  }
  return t;
}

ComplexImage from_channels(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 2) throw_error(ErrorKind::InvalidShape, "expected a (2, H, W) stack");
  const std::size_t n = t.dim(1) * t.dim(2);
  ComplexImage img(t.dim(1), t.dim(2));
  for (std::size_t i = 0; i < n; ++i) img[i] = {t[i], t[n + i]};
  return img;
}

}  // namespace rim
