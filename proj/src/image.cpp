#include "uda/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace uda {

double round_half_away(double v) { return std::round(v); }

namespace {

void check_dims(int height, int width) {
  if (height <= 0 || width <= 0) {
    throw Error("image dimensions must be positive, got " +
                std::to_string(height) + "x" + std::to_string(width));
  }
}

std::size_t area(int height, int width) {
  return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
}

int wrap(int v, int n) {
  int r = v % n;
  return r < 0 ? r + n : r;
}

}  // namespace

Image2D::Image2D(int height, int width, double fill)
    : height_(height), width_(width) {
  check_dims(height, width);
  data_.assign(area(height, width), fill);
}

Image2D::Image2D(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  check_dims(height, width);
  if (data_.size() != area(height, width)) {
    throw Error("image data length " + std::to_string(data_.size()) +
                " does not match " + std::to_string(height) + "x" +
                std::to_string(width));
  }
}

Image2D& Image2D::operator+=(const Image2D& rhs) {
  require_same_shape(*this, rhs, "image addition");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
  return *this;
}

Image2D& Image2D::operator-=(const Image2D& rhs) {
  require_same_shape(*this, rhs, "image subtraction");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
  return *this;
}

Image2D& Image2D::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

double Image2D::min() const {
  return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end());
}

double Image2D::max() const {
  return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

void Image2D::check_finite() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw Error("non-finite value at pixel " + std::to_string(i));
    }
  }
}

Image2D operator+(Image2D lhs, const Image2D& rhs) { return lhs += rhs; }
Image2D operator-(Image2D lhs, const Image2D& rhs) { return lhs -= rhs; }
Image2D operator*(double s, Image2D img) { return img *= s; }

double max_abs_diff(const Image2D& a, const Image2D& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

Image2D cyclic_shift(const Image2D& img, int dy, int dx) {
  Image2D out(img.height(), img.width());
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      out.at(wrap(r + dy, img.height()), wrap(c + dx, img.width())) =
          img.at(r, c);
    }
  }
  return out;
}

LabelMask::LabelMask(int height, int width, int fill)
    : height_(height), width_(width) {
  check_dims(height, width);
  labels_.assign(area(height, width), fill);
}

LabelMask::LabelMask(int height, int width, std::vector<int> labels)
    : height_(height), width_(width), labels_(std::move(labels)) {
  check_dims(height, width);
  if (labels_.size() != area(height, width)) {
    throw Error("label data length does not match mask dimensions");
  }
}

int LabelMask::label_bound() const {
  if (labels_.empty()) return 0;
  return *std::max_element(labels_.begin(), labels_.end()) + 1;
}

void LabelMask::check_labels(int n_classes) const {
  for (int v : labels_) {
    if (v < 0 || v >= n_classes) {
      throw Error("label " + std::to_string(v) + " outside [0, " +
                  std::to_string(n_classes) + ")");
    }
  }
}

LabelMask cyclic_shift(const LabelMask& mask, int dy, int dx) {
  LabelMask out(mask.height(), mask.width());
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      out.at(wrap(r + dy, mask.height()), wrap(c + dx, mask.width())) =
          mask.at(r, c);
    }
  }
  return out;
}

void require_same_shape(const Image2D& a, const Image2D& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(std::string(what) + ": shape mismatch " +
                std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                " vs " + std::to_string(b.height()) + "x" +
                std::to_string(b.width()));
  }
}

}  // namespace uda
