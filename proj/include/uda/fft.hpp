#pragma once

#include <complex>
#include <vector>

#include "uda/image.hpp"

namespace uda {

// Full complex 2-D spectrum on the DFT grid of an image, row-major.
struct Spectrum {
  int height = 0;
  int width = 0;
  std::vector<std::complex<double>> bins;

  std::complex<double>& at(int ky, int kx) {
    return bins[static_cast<std::size_t>(ky) * width + kx];
  }
  std::complex<double> at(int ky, int kx) const {
    return bins[static_cast<std::size_t>(ky) * width + kx];
  }
};

// Unnormalized forward DFT: X[k] = sum_n x[n] exp(-2 pi i k.n / N).
Spectrum fft2(const Image2D& img);

// Inverse DFT including the 1/(H*W) factor. Returns the real part; the
// largest absolute imaginary part is written to *imag_residue when given.
Image2D ifft2_real(const Spectrum& spec, double* imag_residue = nullptr);

// Elementwise product of a spectrum with a real response over the same grid.
Spectrum multiply(const Spectrum& spec, const Image2D& response);

// Signed frequency index for bin k of an n-point DFT: k for k <= n/2,
// k - n otherwise.
inline int signed_frequency(int k, int n) { return k <= n / 2 ? k : k - n; }

}  // namespace uda
