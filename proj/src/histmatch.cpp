#include "uda/histmatch.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <cstdlib>
#include <fstream>
#include <string>

#include "uda/binio.hpp"

namespace uda::histmatch {

namespace {

void check_levels(int levels) {
  if (levels < 2) {
    throw Error("levels must be >= 2, got " + std::to_string(levels));
  }
}

constexpr binio::Magic kMomentumMagic = {'U', 'D', 'A', 'M', 'O', 'M', 'T', '\0'};

}  // namespace

Image2D QuantImage::to_image() const {
  std::vector<double> data(values.begin(), values.end());
  return Image2D(height, width, std::move(data));
}

QuantImage quantize(const Image2D& img, int levels) {
  check_levels(levels);
  img.check_finite();
  QuantImage q{img.height(), img.width(), levels,
               std::vector<int>(img.size(), 0)};
  const double lo = img.min();
  const double hi = img.max();
  if (hi > lo) {
    const double scale = static_cast<double>(levels - 1) / (hi - lo);
    for (std::size_t i = 0; i < img.size(); ++i) {
      q.values[i] = static_cast<int>(round_half_away((img[i] - lo) * scale));
    }
  }
  return q;
}

Histogram::Histogram(int levels, std::vector<std::uint64_t> counts)
    : counts_(std::move(counts)) {
  check_levels(levels);
  if (counts_.size() != static_cast<std::size_t>(levels)) {
    throw Error("histogram has " + std::to_string(counts_.size()) +
                " bins, expected " + std::to_string(levels));
  }
  for (auto c : counts_) total_ += c;
  if (total_ == 0) throw Error("histogram is empty and cannot be normalized");
}

Histogram Histogram::of(const QuantImage& q) {
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(q.levels), 0);
  for (int v : q.values) {
    if (v < 0 || v >= q.levels) {
      throw Error("level " + std::to_string(v) + " outside [0, " +
                  std::to_string(q.levels) + ")");
    }
    ++counts[static_cast<std::size_t>(v)];
  }
  return Histogram(q.levels, std::move(counts));
}

std::vector<double> Histogram::probabilities() const {
  std::vector<double> p(counts_.size());
  for (std::size_t k = 0; k < counts_.size(); ++k) p[k] = this->p(static_cast<int>(k));
  return p;
}

LevelMap equalization_transform(const Histogram& h) {
  const std::uint64_t n = h.total();
  const std::uint64_t top = static_cast<std::uint64_t>(h.levels() - 1);
  LevelMap mu(static_cast<std::size_t>(h.levels()));
  std::uint64_t cum = 0;
  for (int k = 0; k < h.levels(); ++k) {
    cum += h.count(k);
    // round((L-1) * cum / n), halves away from zero
    mu[static_cast<std::size_t>(k)] =
        static_cast<int>((2 * top * cum + n) / (2 * n));
  }
  return mu;
}

LevelMap build_matching(const Histogram& src, const Histogram& tgt) {
  if (src.levels() != tgt.levels()) {
    throw Error("histograms have different level counts (" +
                std::to_string(src.levels()) + " vs " +
                std::to_string(tgt.levels()) + ")");
  }
  const LevelMap t = equalization_transform(src);
  const LevelMap g = equalization_transform(tgt);
  const int levels = src.levels();

  // G is non-decreasing: the nearest value is either the first entry >= mu
  // or the largest entry below it. Equal values are resolved to their first
  // index, and a distance tie goes to the smaller value (smaller index).
  std::vector<int> mu_to_t(static_cast<std::size_t>(levels));
  for (int mu = 0; mu < levels; ++mu) {
    auto above = std::lower_bound(g.begin(), g.end(), mu);
    int best = -1;
    if (above != g.begin()) {
      const int below_value = *std::prev(above);
      best = static_cast<int>(
          std::lower_bound(g.begin(), g.end(), below_value) - g.begin());
    }
    if (above != g.end() &&
        (best < 0 || *above - mu < mu - g[static_cast<std::size_t>(best)])) {
      best = static_cast<int>(above - g.begin());
    }
    mu_to_t[static_cast<std::size_t>(mu)] = best;
  }

  LevelMap out(static_cast<std::size_t>(levels));
  for (int k = 0; k < levels; ++k) out[k] = mu_to_t[t[k]];
  return out;
}

QuantImage apply_matching(const QuantImage& q, const LevelMap& map) {
  if (map.size() != static_cast<std::size_t>(q.levels)) {
    throw Error("level map has " + std::to_string(map.size()) +
                " entries, image has " + std::to_string(q.levels) + " levels");
  }
  QuantImage out = q;
  for (int& v : out.values) {
    if (v < 0 || v >= q.levels) {
      throw Error("level " + std::to_string(v) + " outside the table range");
    }
    v = map[static_cast<std::size_t>(v)];
  }
  return out;
}

Image2D match_histogram(const Image2D& src, const Image2D& reference,
                        int levels) {
  const QuantImage sq = quantize(src, levels);
  const QuantImage rq = quantize(reference, levels);
  const LevelMap m = build_matching(Histogram::of(sq), Histogram::of(rq));
  return apply_matching(sq, m).to_image();
}

Image2D batch_mean(std::span<const Image2D> images) {
  if (images.empty()) throw Error("batch_mean: empty batch");
  Image2D sum(images[0].height(), images[0].width());
  for (const Image2D& img : images) {
    require_same_shape(sum, img, "batch_mean");
    sum += img;
  }
  sum *= 1.0 / static_cast<double>(images.size());
  return sum;
}

MomentumAverage::MomentumAverage(double eta) : eta_(eta) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw Error("momentum eta must lie in (0, 1], got " + std::to_string(eta));
  }
}

const Image2D& MomentumAverage::mean() const {
  if (!initialized()) throw Error("momentum average is not initialized");
  return mean_;
}

void MomentumAverage::update(std::span<const Image2D> batch) {
  Image2D m = batch_mean(batch);
  if (batch_index_ == 0) {
    mean_ = std::move(m);
  } else {
    require_same_shape(mean_, m, "momentum_update");
    for (std::size_t i = 0; i < m.size(); ++i) {
      mean_[i] = eta_ * m[i] + (1.0 - eta_) * mean_[i];
    }
  }
  ++batch_index_;
}

void MomentumAverage::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  binio::write_magic(out, kMomentumMagic);
  binio::write_u32(out, static_cast<std::uint32_t>(mean_.height()));
  binio::write_u32(out, static_cast<std::uint32_t>(mean_.width()));
  binio::write_u32(out, initialized() ? 1u : 0u);
  binio::write_f64(out, eta_);
  binio::write_u64(out, batch_index_);
  for (double v : mean_.data()) binio::write_f64(out, v);
  if (!out) throw Error(path.string() + ": write failed");
}

MomentumAverage MomentumAverage::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing file: " + path.string());
  const std::string what = path.string();
  binio::expect_magic(in, kMomentumMagic, what);
  const auto h = binio::read_u32(in, what);
  const auto w = binio::read_u32(in, what);
  const auto count = binio::read_u32(in, what);
  MomentumAverage state(binio::read_f64(in, what));
  state.batch_index_ = binio::read_u64(in, what);
  if (count > 1 || (count == 1) != (state.batch_index_ > 0)) {
    throw Error(what + ": inconsistent plane count");
  }
  if (count == 1) {
    if (h == 0 || w == 0 || h > (1u << 16) || w > (1u << 16)) {
      throw Error(what + ": implausible plane shape");
    }
    std::vector<double> data(static_cast<std::size_t>(h) * w);
    for (double& v : data) v = binio::read_f64(in, what);
    state.mean_ = Image2D(static_cast<int>(h), static_cast<int>(w), std::move(data));
  }
  binio::expect_eof(in, what);
  return state;
}

MomentumAverage momentum_update(MomentumAverage state,
                                std::span<const Image2D> batch) {
  state.update(batch);
  return state;
}

Image2D spatial_transfer(const Image2D& src, const MomentumAverage& state,
                         int levels) {
  return match_histogram(src, state.mean(), levels);
}

Strategy parse_strategy(std::string_view name) {
  if (name == "entire") return Strategy::kEntire;
  if (name == "single") return Strategy::kSingle;
  if (name == "batch") return Strategy::kBatch;
  if (name == "momentum") return Strategy::kMomentum;
  throw Error("unknown histogram strategy '" + std::string(name) +
              "' (expected entire|single|batch|momentum)");
}

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kEntire: return "entire";
    case Strategy::kSingle: return "single";
    case Strategy::kBatch: return "batch";
    case Strategy::kMomentum: return "momentum";
  }
  return "?";
}

SpatialTransfer::SpatialTransfer(Strategy strategy,
                                 std::vector<Image2D> target_pool,
                                 std::uint64_t seed, double eta, int levels)
    : strategy_(strategy),
      pool_(std::move(target_pool)),
      rng_(seed),
      levels_(levels),
      momentum_(eta) {
  check_levels(levels);
  if (pool_.empty()) throw Error("spatial transfer needs target images");
  if (strategy_ == Strategy::kEntire) entire_mean_ = batch_mean(pool_);
}

std::vector<Image2D> SpatialTransfer::draw_target_batch(std::size_t n) {
  std::vector<Image2D> batch;
  batch.reserve(n);
  if (n <= pool_.size()) {
    auto perm = rng_.permutation(pool_.size());
    for (std::size_t i = 0; i < n; ++i) batch.push_back(pool_[perm[i]]);
  } else {
    for (std::size_t i = 0; i < n; ++i) batch.push_back(pool_[rng_.index(pool_.size())]);
  }
  return batch;
}

std::vector<Image2D> SpatialTransfer::transfer_batch(
    std::span<const Image2D> sources) {
  std::vector<Image2D> out;
  out.reserve(sources.size());
  if (sources.empty()) return out;

  switch (strategy_) {
    case Strategy::kEntire:
      for (const auto& s : sources) out.push_back(match_histogram(s, *entire_mean_, levels_));
      break;
    case Strategy::kSingle:
      for (const auto& s : sources) {
        out.push_back(match_histogram(s, pool_[rng_.index(pool_.size())], levels_));
      }
      break;
    case Strategy::kBatch: {
      const auto batch = draw_target_batch(sources.size());
      const Image2D ref = batch_mean(batch);
      for (const auto& s : sources) out.push_back(match_histogram(s, ref, levels_));
      break;
    }
    case Strategy::kMomentum: {
      const auto batch = draw_target_batch(sources.size());
      momentum_.update(batch);
      for (const auto& s : sources) {
        out.push_back(spatial_transfer(s, momentum_, levels_));
      }
      break;
    }
  }
  return out;
}

}  // namespace uda::histmatch
