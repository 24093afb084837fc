#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uda/freqtransfer.hpp"
#include "uda/histmatch.hpp"
#include "uda/image.hpp"
#include "uda/imagio.hpp"
#include "uda/losses.hpp"
#include "uda/metrics.hpp"

namespace uda::toytrain {

inline constexpr int kFeatureCount = 6;

// Per-pixel features, feature-major (value(f, i) for pixel index i):
// intensity, 3x3 mean, 3x3 standard deviation, Gaussian blur (sigma 2,
// 9x9, periodic), row / (H - 1), column / (W - 1). Intensities are first
// mapped affinely from [min, max] of the image onto [0, 1] (a constant
// image maps to 0), so raw, transferred and histogram-matched inputs share
// one scale.
struct FeatureMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  std::size_t pixels() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  double operator()(int f, std::size_t i) const {
    return values[static_cast<std::size_t>(f) * pixels() + i];
  }
  double& operator()(int f, std::size_t i) {
    return values[static_cast<std::size_t>(f) * pixels() + i];
  }
};

FeatureMap extract_features(const Image2D& img);

// Per-pixel linear softmax segmenter: logits = W * feature + b.
class ToyModel {
 public:
  ToyModel() = default;
  ToyModel(int n_classes, int n_features = kFeatureCount);

  int n_classes() const { return n_classes_; }
  int n_features() const { return n_features_; }

  double& weight(int c, int f) { return params_[index(c, f)]; }
  double weight(int c, int f) const { return params_[index(c, f)]; }
  double& bias(int c) { return params_[bias_index(c)]; }
  double bias(int c) const { return params_[bias_index(c)]; }

  // Weights (row-major n_classes x n_features) followed by the biases.
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  bool operator==(const ToyModel&) const = default;

  // "UDAMODL\0", u32 n_features, u32 n_classes, float64 weights then biases.
  void save(const std::filesystem::path& path) const;
  static ToyModel load(const std::filesystem::path& path);

 private:
  std::size_t index(int c, int f) const {
    return static_cast<std::size_t>(c) * static_cast<std::size_t>(n_features_) +
           static_cast<std::size_t>(f);
  }
  std::size_t bias_index(int c) const {
    return static_cast<std::size_t>(n_classes_) * static_cast<std::size_t>(n_features_) +
           static_cast<std::size_t>(c);
  }

  int n_classes_ = 0;
  int n_features_ = 0;
  std::vector<double> params_;
};

losses::LogitMap predict(const ToyModel& model, const FeatureMap& features);

// Accumulates dL/dparams for one image into grad (same layout as
// ToyModel::parameters()).
void accumulate_param_grad(const FeatureMap& features,
                           const losses::LogitMap& dlogits,
                           std::span<double> grad);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

// Bias-corrected Adam update in place.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& cfg);

enum class Transfer { kNone, kFrequency, kSpatial, kMixed };

Transfer parse_transfer(std::string_view name);
std::string_view transfer_name(Transfer t);

struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  AdamConfig adam;
  std::uint64_t seed = 0;
  Transfer transfer = Transfer::kNone;
  losses::LossConfig loss;
  freqtransfer::DifSet dif = freqtransfer::default_dif();
  double feather = -1.0;
  double eta = histmatch::kDefaultEta;
  int levels = histmatch::kDefaultLevels;
  histmatch::Strategy strategy = histmatch::Strategy::kMomentum;
  int threads = 1;

  void validate() const;
  std::string to_json() const;
};

// Manifest contents loaded into memory. Target-train carries no masks.
struct Dataset {
  int n_classes = 0;
  int levels = 256;
  std::vector<Image2D> source_train;
  std::vector<LabelMask> source_train_masks;
  std::vector<Image2D> source_test;
  std::vector<LabelMask> source_test_masks;
  std::vector<Image2D> target_train;
  std::vector<Image2D> target_test;
  std::vector<LabelMask> target_test_masks;

  int height() const { return source_train.empty() ? 0 : source_train[0].height(); }
  int width() const { return source_train.empty() ? 0 : source_train[0].width(); }
  void validate() const;
};

Dataset load_dataset(const imagio::DatasetManifest& manifest);

struct TrainResult {
  ToyModel model;
  std::vector<std::string> log;  // JSON lines
};

// Trains one teacher: each epoch visits the source set in seeded
// random batches, applies the chosen transfer to every image and takes one
// Adam step on the batch-mean teacher loss.
TrainResult train_teacher(const Dataset& data, Transfer transfer,
                          const TrainConfig& cfg);

// Distills both teachers into a student. teacher_f sees
// frequency-transferred inputs, teacher_s spatially transferred inputs and
// the student the raw source image. Only the student is updated.
TrainResult train_student(const Dataset& data, const ToyModel& teacher_f,
                          const ToyModel& teacher_s, const TrainConfig& cfg);

LabelMask segment(const ToyModel& model, const Image2D& img);

metrics::EvalReport evaluate(const ToyModel& model,
                             std::span<const Image2D> images,
                             std::span<const LabelMask> masks, int n_classes);

struct FcSearchRow {
  std::string label;
  ComponentSet keep;
  double source_val_dice = 0.0;
  double target_val_dice = 0.0;
};

struct FcSearchReport {
  std::vector<FcSearchRow> rows;
  std::string to_json() const;
  std::string to_table() const;
};

// Keep-sets in the order of the reference table: {0}, {1,2}, {3..6},
// {7..14}, {0,1,2}, {0,3..6}, {0,7..14}.
std::vector<ComponentSet> default_fc_combos();

// Synthetic target validation set: each source-test image histogram-matched
// to the mean target-train image.
std::vector<Image2D> synthetic_target(const Dataset& data, int levels);

// Trains one untransferred teacher per keep-set on subset-reconstructed
// source images, plus a baseline on all components, and scores each on the
// raw source-test split and on the synthetic target split.
FcSearchReport fc_search(const Dataset& data,
                         const std::vector<ComponentSet>& combos,
                         const TrainConfig& cfg);

}  // namespace uda::toytrain
