#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace rim {

using cdouble = std::complex<double>;

/// Row-major 2-D grid of complex samples; used for both image and k-space data.
class ComplexImage {
 public:
  ComplexImage() = default;
  ComplexImage(std::size_t height, std::size_t width, cdouble fill = {});
  ComplexImage(std::size_t height, std::size_t width, std::vector<cdouble> data);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  cdouble& operator()(std::size_t r, std::size_t c) { return data_[r * width_ + c]; }
  const cdouble& operator()(std::size_t r, std::size_t c) const { return data_[r * width_ + c]; }
  cdouble& operator[](std::size_t i) { return data_[i]; }
  const cdouble& operator[](std::size_t i) const { return data_[i]; }

  std::span<cdouble> data() noexcept { return data_; }
  std::span<const cdouble> data() const noexcept { return data_; }

  bool same_shape(const ComplexImage& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  ComplexImage& operator+=(const ComplexImage& other);
  ComplexImage& operator-=(const ComplexImage& other);
  ComplexImage& operator*=(cdouble s);

  friend bool operator==(const ComplexImage&, const ComplexImage&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<cdouble> data_;
};

ComplexImage operator+(ComplexImage a, const ComplexImage& b);
ComplexImage operator-(ComplexImage a, const ComplexImage& b);
ComplexImage operator*(ComplexImage a, cdouble s);

/// Sum of a_i * conj(b_i).
cdouble inner(const ComplexImage& a, const ComplexImage& b);
double norm(const ComplexImage& a);
bool all_finite(const ComplexImage& a);

/// Row-major real 2-D grid (magnitude images, metrics input).
struct RealImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  RealImage() = default;
  RealImage(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), data(h * w, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * width + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * width + c]; }
  bool same_shape(const RealImage& o) const noexcept { return height == o.height && width == o.width; }
};

RealImage magnitude(const ComplexImage& img);

/// Dense real array with an explicit shape, outermost dimension first.
/// Feature stacks are (channels, height, width); convolution kernels are
/// (out, in, kh, kw).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t numel() const noexcept { return data_.size(); }

  double* ptr() noexcept { return data_.data(); }
  const double* ptr() const noexcept { return data_.data(); }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Element access for (C, H, W) stacks.
  double& at(std::size_t c, std::size_t r, std::size_t col) {
    return data_[(c * shape_[1] + r) * shape_[2] + col];
  }
  double at(std::size_t c, std::size_t r, std::size_t col) const {
    return data_[(c * shape_[1] + r) * shape_[2] + col];
  }

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(double s);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);

/// Two-channel (real, imaginary) stack from a complex image, and back.
Tensor to_channels(const ComplexImage& img);
ComplexImage from_channels(const Tensor& t);

}  // namespace rim
