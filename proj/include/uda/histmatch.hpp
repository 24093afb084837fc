#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "uda/image.hpp"
#include "uda/rng.hpp"

namespace uda::histmatch {

inline constexpr int kDefaultLevels = 256;
inline constexpr double kDefaultEta = 0.7;

// Integer image with values in [0, levels - 1].
struct QuantImage {
  int height = 0;
  int width = 0;
  int levels = 0;
  std::vector<int> values;

  Image2D to_image() const;
};

// Affine map of [min, max] onto [0, levels - 1], rounded half away from
// zero. A constant image maps to all zeros.
QuantImage quantize(const Image2D& img, int levels);

// Pixel counts per level. Probabilities are n_k / total.
class Histogram {
 public:
  Histogram(int levels, std::vector<std::uint64_t> counts);
  static Histogram of(const QuantImage& q);

  int levels() const { return static_cast<int>(counts_.size()); }
  std::uint64_t count(int k) const { return counts_[static_cast<std::size_t>(k)]; }
  std::uint64_t total() const { return total_; }
  double p(int k) const {
    return static_cast<double>(count(k)) / static_cast<double>(total_);
  }
  std::vector<double> probabilities() const;

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// Level -> level lookup table.
using LevelMap = std::vector<int>;

// mu_k = round((L - 1) * sum_{j<=k} p(j)), evaluated in exact integer
// arithmetic on the counts.
LevelMap equalization_transform(const Histogram& h);

// Maps each source level s_k to the smallest t_q whose equalized value
// G(t_q) is nearest to T(s_k).
LevelMap build_matching(const Histogram& src, const Histogram& tgt);

QuantImage apply_matching(const QuantImage& q, const LevelMap& map);

// Matches src against the histogram of the quantized reference image and
// returns the result as levels in [0, levels - 1].
Image2D match_histogram(const Image2D& src, const Image2D& reference,
                        int levels);

// Elementwise mean of a non-empty batch of equally shaped images.
Image2D batch_mean(std::span<const Image2D> images);

// Running target average: the first batch initializes it, later batches
// are folded in as eta * batch_mean + (1 - eta) * previous.
class MomentumAverage {
 public:
  explicit MomentumAverage(double eta = kDefaultEta);

  double eta() const { return eta_; }
  std::uint64_t batch_index() const { return batch_index_; }
  bool initialized() const { return batch_index_ > 0; }
  // Throws Error when no batch has been folded in yet.
  const Image2D& mean() const;

  void update(std::span<const Image2D> batch);

  void save(const std::filesystem::path& path) const;
  static MomentumAverage load(const std::filesystem::path& path);

 private:
  double eta_;
  std::uint64_t batch_index_ = 0;
  Image2D mean_;
};

MomentumAverage momentum_update(MomentumAverage state,
                                std::span<const Image2D> batch);

// Histogram-matches src against the current momentum average.
Image2D spatial_transfer(const Image2D& src, const MomentumAverage& state,
                         int levels);

// How the reference image for matching is chosen.
enum class Strategy {
  kEntire,    // mean of the whole target pool
  kSingle,    // one random target image per source image
  kBatch,     // mean of the current target batch
  kMomentum,  // momentum average of target batch means
};

Strategy parse_strategy(std::string_view name);
std::string_view strategy_name(Strategy s);

// Stateful spatial transfer over a stream of source batches. Each call
// draws a target batch of the same size from the pool, updates the
// reference (batch-granular; the batch is folded in before matching) and
// matches every source image against it.
class SpatialTransfer {
 public:
  SpatialTransfer(Strategy strategy, std::vector<Image2D> target_pool,
                  std::uint64_t seed, double eta = kDefaultEta,
                  int levels = kDefaultLevels);

  std::vector<Image2D> transfer_batch(std::span<const Image2D> sources);

  const MomentumAverage& momentum() const { return momentum_; }

 private:
  std::vector<Image2D> draw_target_batch(std::size_t n);

  Strategy strategy_;
  std::vector<Image2D> pool_;
  Rng rng_;
  int levels_;
  MomentumAverage momentum_;
  std::optional<Image2D> entire_mean_;
};

}  // namespace uda::histmatch
