#pragma once

#include "uda/fcstack.hpp"
#include "uda/image.hpp"
#include "uda/nsct.hpp"

namespace uda::freqtransfer {

// Indices of the domain-invariant components kept from the source image.
using DifSet = ComponentSet;

// The lowpass plane plus the coarsest directional layer: {0} U {7..14}.
DifSet default_dif();

// Plane k comes from src when k is in dif, from tgt otherwise.
FcStack transfer_stack(const FcStack& src, const FcStack& tgt,
                       const DifSet& dif);

// Inverse transform of the swapped stack. Values are not clamped.
Image2D freq_transfer_image(const Image2D& src, const Image2D& tgt,
                            const DifSet& dif, double feather = -1.0);

// Same, reusing a precomputed plan for the image shape.
Image2D freq_transfer_image(const nsct::NsctPlan& plan, const Image2D& src,
                            const Image2D& tgt, const DifSet& dif);

// Single-pass spectral form of the transfer: with R the summed response of
// the kept components, out = IDFT(R * DFT(src) + (1 - R) * DFT(tgt)).
// Equal to freq_transfer_image up to rounding; used by the trainer.
class TransferFilter {
 public:
  TransferFilter(const nsct::NsctPlan& plan, const DifSet& dif);

  const DifSet& dif() const { return dif_; }
  Image2D apply(const Image2D& src, const Image2D& tgt) const;
  // Spectrum-level variant for a precomputed target spectrum.
  Image2D apply(const Image2D& src, const Spectrum& tgt_spectrum) const;

 private:
  DifSet dif_;
  Image2D keep_response_;
};

}  // namespace uda::freqtransfer
