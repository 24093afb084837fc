#include "uda/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

namespace uda {

namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Plans plus their own aligned buffers for one grid shape.
class FftPlan {
 public:
  FftPlan(int height, int width)
      : n_(static_cast<std::size_t>(height) * width),
        buf_(fftw_alloc_complex(n_)) {
    std::lock_guard lock(planner_mutex());
    // FFTW_ESTIMATE keeps the algorithm choice, and thus the bits, stable
    // between runs.
    forward_ = fftw_plan_dft_2d(height, width, buf_, buf_, FFTW_FORWARD,
                                FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_2d(height, width, buf_, buf_, FFTW_BACKWARD,
                                 FFTW_ESTIMATE);
  }
  ~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(buf_);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  std::complex<double>* buffer() {
    return reinterpret_cast<std::complex<double>*>(buf_);
  }
  void forward() { fftw_execute(forward_); }
  void backward() { fftw_execute(backward_); }

 private:
  std::size_t n_;
  fftw_complex* buf_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

FftPlan& plan_for(int height, int width) {
  thread_local std::map<std::pair<int, int>, std::unique_ptr<FftPlan>> cache;
  auto& slot = cache[{height, width}];
  if (!slot) slot = std::make_unique<FftPlan>(height, width);
  return *slot;
}

}  // namespace

Spectrum fft2(const Image2D& img) {
  auto& plan = plan_for(img.height(), img.width());
  auto* buf = plan.buffer();
  for (std::size_t i = 0; i < img.size(); ++i) buf[i] = {img[i], 0.0};
  plan.forward();
  Spectrum s{img.height(), img.width(), {}};
  s.bins.assign(buf, buf + img.size());
  return s;
}

Image2D ifft2_real(const Spectrum& spec, double* imag_residue) {
  auto& plan = plan_for(spec.height, spec.width);
  auto* buf = plan.buffer();
  std::copy(spec.bins.begin(), spec.bins.end(), buf);
  plan.backward();
  const double scale = 1.0 / static_cast<double>(spec.bins.size());
  Image2D out(spec.height, spec.width);
  double residue = 0.0;
  for (std::size_t i = 0; i < spec.bins.size(); ++i) {
    out[i] = buf[i].real() * scale;
    residue = std::max(residue, std::abs(buf[i].imag() * scale));
  }
  if (imag_residue) *imag_residue = residue;
  return out;
}

Spectrum multiply(const Spectrum& spec, const Image2D& response) {
  if (spec.height != response.height() || spec.width != response.width()) {
    throw Error("spectrum and response differ in shape");
  }
  Spectrum out = spec;
  for (std::size_t i = 0; i < out.bins.size(); ++i) out.bins[i] *= response[i];
  return out;
}

}  // namespace uda
