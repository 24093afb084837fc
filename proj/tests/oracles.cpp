#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace oracle {

std::vector<cplx> naive_dft(const std::vector<cplx>& x, int h, int w, bool inverse) {
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<cplx> out(x.size());
  for (int ky = 0; ky < h; ++ky) {
    for (int kx = 0; kx < w; ++kx) {
      cplx s = 0.0;
      for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
          const double a = 2.0 * std::numbers::pi *
                           (static_cast<double>(ky) * r / h + static_cast<double>(kx) * c / w);
          s += x[static_cast<std::size_t>(r) * w + c] * cplx(std::cos(a), sign * std::sin(a));
        }
      }
      out[static_cast<std::size_t>(ky) * w + kx] = inverse ? s / static_cast<double>(h * w) : s;
    }
  }
  return out;
}

std::vector<cplx> naive_dft(const uda::Image2D& img) {
  std::vector<cplx> x(img.values().begin(), img.values().end());
  return naive_dft(x, img.height(), img.width(), false);
}

uda::Image2D naive_filter(const uda::Image2D& img, const uda::Image2D& response) {
  auto spec = naive_dft(img);
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= response[i];
  const auto back = naive_dft(spec, img.height(), img.width(), true);
  uda::Image2D out(img.height(), img.width());
  for (std::size_t i = 0; i < back.size(); ++i) out[i] = back[i].real();
  return out;
}

uda::Image2D circular_convolve(const uda::Image2D& img,
                               const std::vector<std::vector<double>>& kernel) {
  const int h = img.height(), w = img.width();
  const int r = static_cast<int>(kernel.size() / 2);
  uda::Image2D out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int yy = ((y - dy) % h + h) % h;
          const int xx = ((x - dx) % w + w) % w;
          s += kernel[dy + r][dx + r] * img.at(yy, xx);
        }
      }
      out.at(y, x) = s;
    }
  }
  return out;
}

std::vector<std::vector<double>> dilated_binomial(int d) {
  const double taps[5] = {1, 4, 6, 4, 1};
  const int n = 4 * d + 1;
  std::vector<std::vector<double>> k(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) k[i * d][j * d] = taps[i] * taps[j] / 256.0;
  }
  return k;
}

Fraction add(Fraction a, Fraction b) {
  Fraction f{a.num * b.den + b.num * a.den, a.den * b.den};
  const auto g = std::gcd(f.num, f.den);
  if (g > 1) {
    f.num /= g;
    f.den /= g;
  }
  return f;
}

Fraction scale(Fraction a, std::int64_t k) {
  Fraction f{a.num * k, a.den};
  const auto g = std::gcd(f.num, f.den);
  if (g > 1) {
    f.num /= g;
    f.den /= g;
  }
  return f;
}

std::int64_t round_half_away(Fraction f) {
  // floor(f) plus one when the remainder is at least one half
  const std::int64_t q = f.num / f.den;
  const std::int64_t rem = f.num - q * f.den;
  return 2 * rem >= f.den ? q + 1 : q;
}

std::vector<int> equalize(const std::vector<int>& levels, int L) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(L), 0);
  for (int v : levels) ++counts[static_cast<std::size_t>(v)];
  const auto n = static_cast<std::int64_t>(levels.size());
  std::vector<int> mu(static_cast<std::size_t>(L));
  Fraction cum{0, 1};
  for (int k = 0; k < L; ++k) {
    cum = add(cum, Fraction{counts[static_cast<std::size_t>(k)], n});
    mu[static_cast<std::size_t>(k)] = static_cast<int>(round_half_away(scale(cum, L - 1)));
  }
  return mu;
}

std::vector<int> matching_table(const std::vector<int>& src, const std::vector<int>& tgt, int L) {
  const auto T = equalize(src, L);
  const auto G = equalize(tgt, L);
  std::vector<int> table(static_cast<std::size_t>(L));
  for (int k = 0; k < L; ++k) {
    int best = 0;
    int best_d = std::numeric_limits<int>::max();
    for (int t = 0; t < L; ++t) {
      const int d = std::abs(G[static_cast<std::size_t>(t)] - T[static_cast<std::size_t>(k)]);
      if (d < best_d) {
        best_d = d;
        best = t;
      }
    }
    table[static_cast<std::size_t>(k)] = best;
  }
  return table;
}

std::vector<int> quantize(const std::vector<double>& v, int L) {
  double lo = v[0], hi = v[0];
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  std::vector<int> out(v.size(), 0);
  if (hi == lo) return out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<int>(std::round((v[i] - lo) / (hi - lo) * (L - 1)));
  }
  return out;
}

std::vector<std::pair<int, int>> boundary(const uda::LabelMask& m, int c) {
  std::vector<std::pair<int, int>> out;
  const int h = m.height(), w = m.width();
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      if (m.at(r, col) != c) continue;
      const bool edge = r == 0 || col == 0 || r == h - 1 || col == w - 1 ||
                        m.at(r - 1, col) != c || m.at(r + 1, col) != c ||
                        m.at(r, col - 1) != c || m.at(r, col + 1) != c;
      if (edge) out.emplace_back(r, col);
    }
  }
  return out;
}

std::optional<double> asd(const uda::LabelMask& pred, const uda::LabelMask& gt, int c) {
  const auto bp = boundary(pred, c);
  const auto bg = boundary(gt, c);
  if (bp.empty() && bg.empty()) return 0.0;
  if (bp.empty() || bg.empty()) return std::nullopt;
  auto nearest = [](std::pair<int, int> a, const std::vector<std::pair<int, int>>& set) {
    double best = std::numeric_limits<double>::infinity();
    for (auto b : set) {
      const double dy = a.first - b.first, dx = a.second - b.second;
      best = std::min(best, std::sqrt(dy * dy + dx * dx));
    }
    return best;
  };
  double to_gt = 0.0, to_pred = 0.0;
  for (auto p : bp) to_gt += nearest(p, bg);
  for (auto g : bg) to_pred += nearest(g, bp);
  return (to_gt + to_pred) / static_cast<double>(bp.size() + bg.size());
}

double dice(const uda::LabelMask& pred, const uda::LabelMask& gt, int c) {
  double inter = 0, p = 0, g = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool a = pred[i] == c, b = gt[i] == c;
    inter += a && b;
    p += a;
    g += b;
  }
  if (p + g == 0) return 100.0;
  return 100.0 * 2.0 * inter / (p + g);
}

double central_difference(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x, std::size_t i, double step) {
  const double x0 = x[i];
  x[i] = x0 + step;
  const double up = f(x);
  x[i] = x0 - step;
  const double down = f(x);
  return (up - down) / (2.0 * step);
}

double gradient_error(const std::function<double(const std::vector<double>&)>& f,
                      const std::vector<double>& x, const std::vector<double>& analytic,
                      double step) {
  double gap = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fd = central_difference(f, x, i, step);
    gap = std::max(gap, std::abs(fd - analytic[i]));
    scale = std::max(scale, std::abs(fd));
  }
  return scale > 0.0 ? gap / scale : gap;
}

uda::Image2D random_image(uda::Rng& rng, int h, int w, double lo, double hi) {
  uda::Image2D img(h, w);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = rng.uniform(lo, hi);
  return img;
}

uda::LabelMask random_mask(uda::Rng& rng, int h, int w, int n_classes) {
  uda::LabelMask m(h, w);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<int>(rng.index(n_classes));
  return m;
}

uda::LabelMask random_blobs(uda::Rng& rng, int h, int w, int n_classes) {
  uda::LabelMask m(h, w);
  const int blobs = 1 + static_cast<int>(rng.index(4));
  for (int b = 0; b < blobs; ++b) {
    const int c = 1 + static_cast<int>(rng.index(n_classes - 1));
    const int r0 = static_cast<int>(rng.index(h)), c0 = static_cast<int>(rng.index(w));
    const int bh = 1 + static_cast<int>(rng.index(h / 2)), bw = 1 + static_cast<int>(rng.index(w / 2));
    for (int r = r0; r < std::min(h, r0 + bh); ++r) {
      for (int col = c0; col < std::min(w, c0 + bw); ++col) m.at(r, col) = c;
    }
  }
  return m;
}

}  // namespace oracle
