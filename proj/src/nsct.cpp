#include "uda/nsct.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace uda::nsct {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMaxImagResidue = 1e-9;
// Angles closer than this to a wedge boundary count as on it.
constexpr double kAngleSnap = 1e-12;

void check_level(int level) {
  if (level < 1 || level > kLevels) {
    throw Error("pyramid level " + std::to_string(level) + " outside [1, 3]");
  }
}

void check_size(const Image2D& img) {
  if (img.height() < kMinSide || img.width() < kMinSide) {
    throw Error("image too small for a three-level decomposition: " +
                std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                " (minimum " + std::to_string(kMinSide) + ")");
  }
}

// 1-D response of [1 4 6 4 1]/16 at taps -2d..2d: ((1 + cos(d w)) / 2)^2.
double binomial_1d(int k, int n, int dilation) {
  const double w = 2.0 * kPi * k / n;
  const double c = 0.5 * (1.0 + std::cos(dilation * w));
  return c * c;
}

std::vector<Image2D> split_spectrum(const Spectrum& band,
                                    const WedgeMaskSet& masks) {
  std::vector<Image2D> out;
  out.reserve(masks.masks().size());
  for (const Image2D& m : masks.masks()) {
    double residue = 0.0;
    out.push_back(ifft2_real(multiply(band, m), &residue));
    if (residue > kMaxImagResidue) {
      throw std::logic_error("directional component not real: residue " +
                             std::to_string(residue));
    }
  }
  return out;
}

}  // namespace

Image2D binomial_lowpass_spectrum(int height, int width, int level) {
  check_level(level);
  if (height <= 0 || width <= 0) throw Error("invalid grid shape");
  const int dilation = 1 << (level - 1);
  std::vector<double> rows(static_cast<std::size_t>(height));
  std::vector<double> cols(static_cast<std::size_t>(width));
  for (int k = 0; k < height; ++k) rows[k] = binomial_1d(k, height, dilation);
  for (int k = 0; k < width; ++k) cols[k] = binomial_1d(k, width, dilation);
  Image2D resp(height, width);
  for (int ky = 0; ky < height; ++ky) {
    for (int kx = 0; kx < width; ++kx) resp.at(ky, kx) = rows[ky] * cols[kx];
  }
  return resp;
}

PyramidBands nsp_decompose(const Image2D& img) {
  return NsctPlan(img.height(), img.width()).pyramid(img);
}

WedgeMaskSet::WedgeMaskSet(int height, int width, int n_dirs, double feather)
    : height_(height), width_(width), feather_(feather) {
  if (n_dirs != 2 && n_dirs != 4 && n_dirs != 8) {
    throw Error("n_dirs must be 2, 4 or 8, got " + std::to_string(n_dirs));
  }
  const double wedge = kPi / n_dirs;
  if (!(feather >= 0.0) || feather >= wedge) {
    throw Error("feather must lie in [0, pi/n_dirs)");
  }
  if (height <= 0 || width <= 0) throw Error("invalid grid shape");

  masks_.assign(static_cast<std::size_t>(n_dirs), Image2D(height, width));
  const double half = feather / 2.0;

  for (int ky = 0; ky < height; ++ky) {
    for (int kx = 0; kx < width; ++kx) {
      // Copy from the antipodal bin when it was already filled, so the
      // symmetry is exact even on the Nyquist row and column.
      const int ay = (height - ky) % height;
      const int ax = (width - kx) % width;
      if (ay * width + ax < ky * width + kx) {
        for (auto& m : masks_) m.at(ky, kx) = m.at(ay, ax);
        continue;
      }
      if (ky == 0 && kx == 0) {
        masks_[0].at(0, 0) = 1.0;
        continue;
      }
      const double fy = static_cast<double>(signed_frequency(ky, height)) / height;
      const double fx = static_cast<double>(signed_frequency(kx, width)) / width;
      double psi = std::fmod(std::atan2(fy, fx) + wedge / 2.0, kPi);
      if (psi < 0.0) psi += kPi;
      int j = static_cast<int>(std::floor(psi / wedge));
      double u = psi - j * wedge;
      if (wedge - u < kAngleSnap) {
        ++j;
        u = 0.0;
      }
      j %= n_dirs;
      const int prev = (j + n_dirs - 1) % n_dirs;
      const int next = (j + 1) % n_dirs;

      if (feather == 0.0) {
        const int owner = u < kAngleSnap ? std::min(prev, j) : j;
        masks_[owner].at(ky, kx) = 1.0;
      } else if (u < half) {
        const double t = (u + half) / feather;
        const double w = 0.5 * (1.0 - std::cos(kPi * t));
        masks_[j].at(ky, kx) = w;
        masks_[prev].at(ky, kx) = 1.0 - w;
      } else if (u > wedge - half) {
        const double t = (u - (wedge - half)) / feather;
        const double w = 0.5 * (1.0 - std::cos(kPi * t));
        masks_[next].at(ky, kx) = w;
        masks_[j].at(ky, kx) = 1.0 - w;
      } else {
        masks_[j].at(ky, kx) = 1.0;
      }
    }
  }
}

WedgeMaskSet make_wedge_masks(int height, int width, int n_dirs,
                              double feather) {
  return WedgeMaskSet(height, width, n_dirs, feather);
}

std::vector<Image2D> nsdfb_decompose(const Image2D& band,
                                     const WedgeMaskSet& masks) {
  if (band.height() != masks.height() || band.width() != masks.width()) {
    throw Error("band and mask set differ in shape");
  }
  return split_spectrum(fft2(band), masks);
}

NsctPlan::NsctPlan(int height, int width, double feather)
    : height_(height), width_(width) {
  if (height < kMinSide || width < kMinSide) {
    throw Error("image too small for a three-level decomposition: " +
                std::to_string(height) + "x" + std::to_string(width) +
                " (minimum " + std::to_string(kMinSide) + ")");
  }
  for (int l = 1; l <= kLevels; ++l) {
    lowpass_[static_cast<std::size_t>(l - 1)] =
        binomial_lowpass_spectrum(height, width, l);
    const int dirs = layer_directions(l);
    masks_.emplace_back(height, width, dirs,
                        feather < 0.0 ? default_feather(dirs) : feather);
  }
}

PyramidBands NsctPlan::pyramid(const Image2D& img) const {
  check_size(img);
  if (img.height() != height_ || img.width() != width_) {
    throw Error("image shape does not match the transform plan");
  }
  img.check_finite();
  PyramidBands out;
  Image2D prev = img;
  for (int l = 0; l < kLevels; ++l) {
    Image2D low = ifft2_real(multiply(fft2(prev), lowpass_[l]));
    out.bands[l] = prev - low;
    prev = std::move(low);
  }
  out.lowpass = std::move(prev);
  return out;
}

FcStack NsctPlan::forward(const Image2D& img) const {
  PyramidBands p = pyramid(img);
  FcStack stack;
  stack[0] = std::move(p.lowpass);
  for (int l = 1; l <= kLevels; ++l) {
    auto comps = nsdfb_decompose(p.bands[l - 1], masks(l));
    for (int k = 0; k < layer_directions(l); ++k) {
      stack[layer_offset(l) + k] = std::move(comps[k]);
    }
  }
  return stack;
}

Image2D NsctPlan::component_response(int k) const {
  if (k < 0 || k >= kComponentCount) {
    throw Error("component index " + std::to_string(k) + " outside [0, 14]");
  }
  Image2D resp(height_, width_, 1.0);
  const int layer = layer_of(k);
  const int coarse = layer == 0 ? kLevels : layer - 1;
  for (int l = 1; l <= coarse; ++l) {
    for (std::size_t i = 0; i < resp.size(); ++i) resp[i] *= lowpass(l)[i];
  }
  if (layer > 0) {
    const Image2D& m = masks(layer).mask(k - layer_offset(layer));
    for (std::size_t i = 0; i < resp.size(); ++i) {
      resp[i] *= (1.0 - lowpass(layer)[i]) * m[i];
    }
  }
  return resp;
}

FcStack nsct_forward(const Image2D& img, double feather) {
  check_size(img);
  return NsctPlan(img.height(), img.width(), feather).forward(img);
}

Image2D nsct_inverse(const FcStack& stack) {
  return reconstruct_subset(stack, ComponentSet::all());
}

Image2D reconstruct_subset(const FcStack& stack, const ComponentSet& keep) {
  stack.check_shape();
  Image2D out(stack.height(), stack.width());
  for (int k = 0; k < kComponentCount; ++k) {
    if (keep.contains(k)) out += stack[k];
  }
  return out;
}

}  // namespace uda::nsct
