#pragma once

#include <array>
#include <numbers>
#include <vector>

#include "uda/fcstack.hpp"
#include "uda/fft.hpp"
#include "uda/image.hpp"

namespace uda::nsct {

// Smallest side accepted by the three-level pyramid.
inline constexpr int kMinSide = 16;

// Frequency response of the separable 5-tap binomial kernel
// [1 4 6 4 1]/16 (x) itself, dilated a trous by 2^(level-1), under periodic
// convolution on an height x width grid. Real, with value 1 at DC.
Image2D binomial_lowpass_spectrum(int height, int width, int level);

struct PyramidBands {
  Image2D lowpass;                // LS_3
  std::array<Image2D, 3> bands;   // BS_1 (finest) .. BS_3
};

// Additive non-subsampled pyramid: LS_0 = img, LS_l = lowpass_l(LS_{l-1}),
// BS_l = LS_{l-1} - LS_l.
PyramidBands nsp_decompose(const Image2D& img);

// Angular partition of the DFT grid into n_dirs antipodally symmetric fans.
// Wedge k is centred on orientation k*pi/n_dirs, measured from the
// horizontal-frequency axis. Masks sum to one at every bin.
class WedgeMaskSet {
 public:
  WedgeMaskSet(int height, int width, int n_dirs, double feather);

  int height() const { return height_; }
  int width() const { return width_; }
  int n_dirs() const { return static_cast<int>(masks_.size()); }
  double feather() const { return feather_; }
  const Image2D& mask(int k) const { return masks_[static_cast<std::size_t>(k)]; }
  const std::vector<Image2D>& masks() const { return masks_; }

 private:
  int height_;
  int width_;
  double feather_;
  std::vector<Image2D> masks_;
};

inline double default_feather(int n_dirs) {
  return std::numbers::pi / n_dirs / 4.0;
}

WedgeMaskSet make_wedge_masks(int height, int width, int n_dirs,
                              double feather);

// component_k = real(IDFT(mask_k * DFT(band))). Throws std::logic_error if
// the discarded imaginary part exceeds 1e-9.
std::vector<Image2D> nsdfb_decompose(const Image2D& band,
                                     const WedgeMaskSet& masks);

// Precomputed lowpass responses and mask sets for one image shape. Build
// once and reuse when transforming many images of the same size.
class NsctPlan {
 public:
  // feather < 0 selects default_feather for each layer.
  NsctPlan(int height, int width, double feather = -1.0);

  int height() const { return height_; }
  int width() const { return width_; }

  PyramidBands pyramid(const Image2D& img) const;
  FcStack forward(const Image2D& img) const;
  const WedgeMaskSet& masks(int layer) const {
    return masks_[static_cast<std::size_t>(layer - 1)];
  }
  const Image2D& lowpass(int level) const {
    return lowpass_[static_cast<std::size_t>(level - 1)];
  }

  // Real frequency response whose inverse DFT against an image spectrum
  // yields component k directly; the 15 responses sum to one.
  Image2D component_response(int k) const;

 private:
  int height_;
  int width_;
  std::array<Image2D, 3> lowpass_;
  std::vector<WedgeMaskSet> masks_;
};

// f(0) = LS_3, f(1..2) = directions of BS_1, f(3..6) of BS_2, f(7..14) of
// BS_3. feather < 0 selects the per-layer default.
FcStack nsct_forward(const Image2D& img, double feather = -1.0);

// Sum of all 15 components.
Image2D nsct_inverse(const FcStack& stack);

// Sum of the kept components only.
Image2D reconstruct_subset(const FcStack& stack, const ComponentSet& keep);

}  // namespace uda::nsct
