#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uda {

// Raised for violated preconditions on user-supplied data (shapes, ranges,
// malformed files). Programming errors use std::logic_error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Round half away from zero. Used for every float->level conversion.
double round_half_away(double v);

// Single-channel raster, row-major.
class Image2D {
 public:
  Image2D() = default;
  Image2D(int height, int width, double fill = 0.0);
  Image2D(int height, int width, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int row, int col) { return data_[index(row, col)]; }
  double at(int row, int col) const { return data_[index(row, col)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool same_shape(const Image2D& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  Image2D& operator+=(const Image2D& rhs);
  Image2D& operator-=(const Image2D& rhs);
  Image2D& operator*=(double s);

  double min() const;
  double max() const;
  // Throws Error if any value is NaN or infinite.
  void check_finite() const;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

Image2D operator+(Image2D lhs, const Image2D& rhs);
Image2D operator-(Image2D lhs, const Image2D& rhs);
Image2D operator*(double s, Image2D img);

double max_abs_diff(const Image2D& a, const Image2D& b);

// Cyclic shift: out(r, c) = in(r - dy, c - dx) with wrap-around.
Image2D cyclic_shift(const Image2D& img, int dy, int dx);

// Integer class labels, row-major.
class LabelMask {
 public:
  LabelMask() = default;
  LabelMask(int height, int width, int fill = 0);
  LabelMask(int height, int width, std::vector<int> labels);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return labels_.size(); }

  int& at(int row, int col) { return labels_[index(row, col)]; }
  int at(int row, int col) const { return labels_[index(row, col)]; }
  int& operator[](std::size_t i) { return labels_[i]; }
  int operator[](std::size_t i) const { return labels_[i]; }

  std::span<const int> labels() const { return labels_; }

  bool same_shape(const LabelMask& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool same_shape(const Image2D& img) const {
    return height_ == img.height() && width_ == img.width();
  }

  // Largest label + 1 (0 for an empty mask).
  int label_bound() const;
  // Throws Error unless every label lies in [0, n_classes).
  void check_labels(int n_classes) const;

  bool operator==(const LabelMask&) const = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<int> labels_;
};

LabelMask cyclic_shift(const LabelMask& mask, int dy, int dx);

void require_same_shape(const Image2D& a, const Image2D& b, const char* what);

}  // namespace uda
