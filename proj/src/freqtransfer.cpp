#include "uda/freqtransfer.hpp"

namespace uda::freqtransfer {

DifSet default_dif() { return DifSet{0} | DifSet::range(7, 14); }

FcStack transfer_stack(const FcStack& src, const FcStack& tgt,
                       const DifSet& dif) {
  src.check_shape();
  tgt.check_shape();
  if (!src.same_shape(tgt)) {
    throw Error("transfer_stack: source and target stacks differ in shape");
  }
  FcStack out;
  for (int k = 0; k < kComponentCount; ++k) {
    out[k] = dif.contains(k) ? src[k] : tgt[k];
  }
  return out;
}

Image2D freq_transfer_image(const Image2D& src, const Image2D& tgt,
                            const DifSet& dif, double feather) {
  require_same_shape(src, tgt, "freq_transfer_image");
  const nsct::NsctPlan plan(src.height(), src.width(), feather);
  return freq_transfer_image(plan, src, tgt, dif);
}

Image2D freq_transfer_image(const nsct::NsctPlan& plan, const Image2D& src,
                            const Image2D& tgt, const DifSet& dif) {
  require_same_shape(src, tgt, "freq_transfer_image");
  return nsct::nsct_inverse(
      transfer_stack(plan.forward(src), plan.forward(tgt), dif));
}

TransferFilter::TransferFilter(const nsct::NsctPlan& plan, const DifSet& dif)
    : dif_(dif), keep_response_(plan.height(), plan.width()) {
  for (int k = 0; k < kComponentCount; ++k) {
    if (dif.contains(k)) keep_response_ += plan.component_response(k);
  }
}

Image2D TransferFilter::apply(const Image2D& src, const Image2D& tgt) const {
  require_same_shape(src, tgt, "TransferFilter::apply");
  return apply(src, fft2(tgt));
}

Image2D TransferFilter::apply(const Image2D& src, const Spectrum& tgt) const {
  if (src.height() != keep_response_.height() ||
      src.width() != keep_response_.width() || tgt.height != src.height() ||
      tgt.width != src.width()) {
    throw Error("TransferFilter::apply: shape mismatch");
  }
  Spectrum s = fft2(src);
  for (std::size_t i = 0; i < s.bins.size(); ++i) {
    const double r = keep_response_[i];
    s.bins[i] = r * s.bins[i] + (1.0 - r) * tgt.bins[i];
  }
  return ifft2_real(s);
}

}  // namespace uda::freqtransfer
