#pragma once

// Slow reference implementations used only by the test programs.

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "uda/image.hpp"
#include "uda/rng.hpp"

namespace oracle {

using cplx = std::complex<double>;

// O(N^2) two-dimensional DFT straight from the definition.
std::vector<cplx> naive_dft(const std::vector<cplx>& x, int h, int w, bool inverse);

std::vector<cplx> naive_dft(const uda::Image2D& img);

// Real part of the naive inverse of (response .* DFT(img)).
uda::Image2D naive_filter(const uda::Image2D& img, const uda::Image2D& response);

// Direct periodic convolution of img with a (2r+1)x(2r+1) kernel centred
// on its middle tap.
uda::Image2D circular_convolve(const uda::Image2D& img,
                               const std::vector<std::vector<double>>& kernel);

// 5x5 binomial kernel dilated by d (taps every d pixels), as a dense
// (4d+1)x(4d+1) grid.
std::vector<std::vector<double>> dilated_binomial(int d);

// Exact rational with int64 numerator and positive denominator.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;
};
Fraction add(Fraction a, Fraction b);
Fraction scale(Fraction a, std::int64_t k);
// Round half away from zero of a non-negative fraction.
std::int64_t round_half_away(Fraction f);

// Histogram-equalization map computed with exact fractions: p(j) = n_j / N,
// mu_k = round((L - 1) * sum_{j<=k} p(j)).
std::vector<int> equalize(const std::vector<int>& levels, int L);

// Full matching by exhaustive search: T from src, G from tgt, then for each
// k the smallest t minimising |G(t) - T(k)| over all t.
std::vector<int> matching_table(const std::vector<int>& src, const std::vector<int>& tgt, int L);

// Min-max affine map onto [0, L-1] with round half away; constants to 0.
std::vector<int> quantize(const std::vector<double>& v, int L);

// Pixels of class c with a 4-neighbour outside the class (or outside the
// image), by direct inspection.
std::vector<std::pair<int, int>> boundary(const uda::LabelMask& m, int c);

// Average symmetric surface distance by exhaustive pairwise distances.
std::optional<double> asd(const uda::LabelMask& pred, const uda::LabelMask& gt, int c);

// 100 * 2|P n G| / (|P| + |G|), 100 when both are empty.
double dice(const uda::LabelMask& pred, const uda::LabelMask& gt, int c);

// Central difference of f with respect to x[i].
double central_difference(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x, std::size_t i, double step);

// Largest per-coordinate gap between an analytic gradient and central
// differences of f at x, relative to the largest finite-difference entry.
double gradient_error(const std::function<double(const std::vector<double>&)>& f,
                      const std::vector<double>& x, const std::vector<double>& analytic,
                      double step);

uda::Image2D random_image(uda::Rng& rng, int h, int w, double lo = 0.0, double hi = 255.0);
uda::LabelMask random_mask(uda::Rng& rng, int h, int w, int n_classes);
// Mask made of a few random axis-aligned rectangles over background.
uda::LabelMask random_blobs(uda::Rng& rng, int h, int w, int n_classes);

}  // namespace oracle
