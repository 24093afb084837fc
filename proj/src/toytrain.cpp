#include "uda/toytrain.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "uda/binio.hpp"
#include "uda/nsct.hpp"
#include "uda/parallel.hpp"
#include "uda/rng.hpp"

namespace uda::toytrain {

using json = nlohmann::json;
using losses::LogitMap;

namespace {

constexpr binio::Magic kModelMagic = {'U', 'D', 'A', 'M', 'O', 'D', 'L', '\0'};

constexpr std::uint64_t kStreamOrder = 1;
constexpr std::uint64_t kStreamPartner = 2;
constexpr std::uint64_t kStreamSpatial = 3;

constexpr double kBlurSigma = 2.0;
constexpr int kBlurRadius = 4;

int wrap(int i, int n) {
  const int r = i % n;
  return r < 0 ? r + n : r;
}

// Separable periodic filter with a symmetric odd kernel.
std::vector<double> filter_periodic(const std::vector<double>& x, int h, int w,
                                    const std::vector<double>& kernel) {
  const int radius = static_cast<int>(kernel.size() / 2);
  std::vector<double> tmp(x.size(), 0.0), out(x.size(), 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double s = 0.0;
      for (int d = -radius; d <= radius; ++d) {
        s += kernel[static_cast<std::size_t>(d + radius)] *
             x[static_cast<std::size_t>(r) * w + wrap(c + d, w)];
      }
      tmp[static_cast<std::size_t>(r) * w + c] = s;
    }
  }
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double s = 0.0;
      for (int d = -radius; d <= radius; ++d) {
        s += kernel[static_cast<std::size_t>(d + radius)] *
             tmp[static_cast<std::size_t>(wrap(r + d, h)) * w + c];
      }
      out[static_cast<std::size_t>(r) * w + c] = s;
    }
  }
  return out;
}

const std::vector<double>& gaussian_kernel() {
  static const std::vector<double> k = [] {
    std::vector<double> v;
    double sum = 0.0;
    for (int d = -kBlurRadius; d <= kBlurRadius; ++d) {
      v.push_back(std::exp(-(d * d) / (2.0 * kBlurSigma * kBlurSigma)));
      sum += v.back();
    }
    for (double& x : v) x /= sum;
    return v;
  }();
  return k;
}

const std::vector<double>& box_kernel() {
  static const std::vector<double> k(3, 1.0 / 3.0);
  return k;
}

void check_model(const ToyModel& model, const FeatureMap& f) {
  if (model.n_features() != kFeatureCount ||
      f.values.size() != f.pixels() * kFeatureCount) {
    throw Error("feature count " + std::to_string(f.values.size() / std::max<std::size_t>(1, f.pixels())) +
                " does not match the model (" + std::to_string(model.n_features()) + ")");
  }
}

// Per-image work slot for one optimisation step.
struct Slot {
  std::vector<double> grad;
  double loss = 0.0;
  double ce = 0.0;
  double dice = 0.0;
  losses::MkdDiagnostics mkd;
};

struct StepStats {
  double loss = 0.0;
  double ce = 0.0;
  double dice = 0.0;
};

// Serial, fixed-order reduction of the slots into the batch-mean gradient.
std::vector<double> reduce_grad(const std::vector<Slot>& slots, std::size_t n_params) {
  std::vector<double> g(n_params, 0.0);
  for (const Slot& s : slots) {
    for (std::size_t p = 0; p < n_params; ++p) g[p] += s.grad[p];
  }
  const double inv = 1.0 / static_cast<double>(slots.size());
  for (double& v : g) v *= inv;
  return g;
}

// Frequency-transfer machinery shared by teacher and student training.
class FrequencyTransfer {
 public:
  FrequencyTransfer(const Dataset& data, const TrainConfig& cfg)
      : plan_(data.height(), data.width(), cfg.feather),
        filter_(plan_, cfg.dif),
        partner_(derive_seed(cfg.seed, kStreamPartner)) {
    if (data.target_train.empty()) throw Error("frequency transfer needs target images");
    spectra_.resize(data.target_train.size());
    parallel_for(spectra_.size(), cfg.threads,
                 [&](std::size_t i) { spectra_[i] = fft2(data.target_train[i]); });
  }

  // Partner indices are drawn serially so the stream does not depend on
  // the thread count.
  std::size_t draw_partner() { return partner_.index(spectra_.size()); }

  Image2D apply(const Image2D& src, std::size_t partner) const {
    return filter_.apply(src, spectra_[partner]);
  }

 private:
  nsct::NsctPlan plan_;
  freqtransfer::TransferFilter filter_;
  Rng partner_;
  std::vector<Spectrum> spectra_;
};

std::vector<FeatureMap> raw_features(const std::vector<Image2D>& images, int threads) {
  std::vector<FeatureMap> out(images.size());
  parallel_for(images.size(), threads,
               [&](std::size_t i) { out[i] = extract_features(images[i]); });
  return out;
}

std::string fmt_json(const json& j) { return j.dump(); }

}  // namespace

FeatureMap extract_features(const Image2D& img) {
  img.check_finite();
  const int h = img.height(), w = img.width();
  FeatureMap f;
  f.height = h;
  f.width = w;
  const std::size_t n = f.pixels();
  f.values.assign(n * kFeatureCount, 0.0);

  const double lo = img.min();
  const double span = img.max() - lo;
  std::vector<double> x(n), x2(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = span > 0.0 ? (img[i] - lo) / span : 0.0;
    x2[i] = x[i] * x[i];
  }
  const auto mean = filter_periodic(x, h, w, box_kernel());
  const auto mean_sq = filter_periodic(x2, h, w, box_kernel());
  const auto blur = filter_periodic(x, h, w, gaussian_kernel());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      f(0, i) = x[i];
      f(1, i) = mean[i];
      f(2, i) = std::sqrt(std::max(0.0, mean_sq[i] - mean[i] * mean[i]));
      f(3, i) = blur[i];
      f(4, i) = h > 1 ? static_cast<double>(r) / (h - 1) : 0.0;
      f(5, i) = w > 1 ? static_cast<double>(c) / (w - 1) : 0.0;
    }
  }
  return f;
}

ToyModel::ToyModel(int n_classes, int n_features)
    : n_classes_(n_classes), n_features_(n_features) {
  if (n_classes < 2) throw Error("model needs at least two classes");
  if (n_features < 1) throw Error("model needs at least one feature");
  params_.assign(static_cast<std::size_t>(n_classes) * (n_features + 1), 0.0);
}

void ToyModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model: " + path.string());
  binio::write_magic(out, kModelMagic);
  binio::write_u32(out, static_cast<std::uint32_t>(n_features_));
  binio::write_u32(out, static_cast<std::uint32_t>(n_classes_));
  for (double v : params_) binio::write_f64(out, v);
  if (!out) throw Error("write failed: " + path.string());
}

ToyModel ToyModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing file: " + path.string());
  binio::expect_magic(in, kModelMagic, "model");
  const auto f = binio::read_u32(in, "model");
  const auto c = binio::read_u32(in, "model");
  if (f != static_cast<std::uint32_t>(kFeatureCount)) {
    throw Error("model: expected " + std::to_string(kFeatureCount) + " features, found " +
                std::to_string(f));
  }
  if (c < 2 || c > 255) throw Error("model: invalid class count " + std::to_string(c));
  ToyModel m(static_cast<int>(c), static_cast<int>(f));
  for (double& v : m.params_) {
    v = binio::read_f64(in, "model");
    if (!std::isfinite(v)) throw Error("model: non-finite parameter");
  }
  binio::expect_eof(in, "model");
  return m;
}

LogitMap predict(const ToyModel& model, const FeatureMap& features) {
  check_model(model, features);
  const std::size_t n = features.pixels();
  LogitMap z(model.n_classes(), features.height, features.width);
  for (int c = 0; c < model.n_classes(); ++c) {
    const double b = model.bias(c);
    for (std::size_t i = 0; i < n; ++i) z(c, i) = b;
    for (int f = 0; f < model.n_features(); ++f) {
      const double wcf = model.weight(c, f);
      const double* src = features.values.data() + static_cast<std::size_t>(f) * n;
      double* dst = z.values.data() + static_cast<std::size_t>(c) * n;
      for (std::size_t i = 0; i < n; ++i) dst[i] += wcf * src[i];
    }
  }
  return z;
}

void accumulate_param_grad(const FeatureMap& features, const LogitMap& dlogits,
                           std::span<double> grad) {
  const int nc = dlogits.n_classes;
  const std::size_t n = features.pixels();
  if (dlogits.pixels() != n ||
      grad.size() != static_cast<std::size_t>(nc) * (kFeatureCount + 1)) {
    throw Error("gradient shape mismatch");
  }
  for (int c = 0; c < nc; ++c) {
    const double* dz = dlogits.values.data() + static_cast<std::size_t>(c) * n;
    for (int f = 0; f < kFeatureCount; ++f) {
      const double* x = features.values.data() + static_cast<std::size_t>(f) * n;
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += dz[i] * x[i];
      grad[static_cast<std::size_t>(c) * kFeatureCount + f] += s;
    }
    double sb = 0.0;
    for (std::size_t i = 0; i < n; ++i) sb += dz[i];
    grad[static_cast<std::size_t>(nc) * kFeatureCount + c] += sb;
  }
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw Error("adam: parameter/gradient size mismatch");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error("adam: state size mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

Transfer parse_transfer(std::string_view name) {
  if (name == "none") return Transfer::kNone;
  if (name == "frequency") return Transfer::kFrequency;
  if (name == "spatial") return Transfer::kSpatial;
  if (name == "mixed") return Transfer::kMixed;
  throw Error("unknown transfer '" + std::string(name) + "'");
}

std::string_view transfer_name(Transfer t) {
  switch (t) {
    case Transfer::kNone: return "none";
    case Transfer::kFrequency: return "frequency";
    case Transfer::kSpatial: return "spatial";
    case Transfer::kMixed: return "mixed";
  }
  return "none";
}

void TrainConfig::validate() const {
  if (epochs < 0) throw Error("epochs must be non-negative");
  if (batch_size <= 0) throw Error("batch size must be positive");
  if (!(adam.lr > 0.0) || !(adam.eps > 0.0)) throw Error("learning rate and eps must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw Error("Adam betas must lie in [0, 1)");
  }
  if (!(eta > 0.0 && eta <= 1.0)) throw Error("eta must lie in (0, 1]");
  if (levels < 2) throw Error("levels must be at least 2");
  if (threads < 1) throw Error("threads must be at least 1");
  loss.validate();
}

std::string TrainConfig::to_json() const {
  json j;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["lr"] = adam.lr;
  j["beta1"] = adam.beta1;
  j["beta2"] = adam.beta2;
  j["adam_eps"] = adam.eps;
  j["seed"] = seed;
  j["transfer"] = std::string(transfer_name(transfer));
  j["alpha"] = loss.alpha;
  j["tau"] = loss.tau;
  j["dice_eps"] = loss.dice_eps;
  j["entropy_reduction"] =
      loss.entropy_reduction == losses::EntropyReduction::kMean ? "mean" : "sum";
  j["kd_tau_squared"] = loss.kd_tau_squared;
  j["dif"] = dif.to_string();
  j["feather"] = feather;
  j["eta"] = eta;
  j["levels"] = levels;
  j["strategy"] = std::string(histmatch::strategy_name(strategy));
  j["threads"] = threads;
  return j.dump();
}

void Dataset::validate() const {
  if (n_classes < 2) throw Error("dataset: n_classes must be at least 2");
  if (source_train.empty()) throw Error("dataset: empty source_train split");
  if (source_train_masks.size() != source_train.size() ||
      source_test_masks.size() != source_test.size()) {
    throw Error("dataset: every source image needs a mask");
  }
  if (!target_test_masks.empty() && target_test_masks.size() != target_test.size()) {
    throw Error("dataset: target_test masks incomplete");
  }
  const int h = height(), w = width();
  auto check = [&](const std::vector<Image2D>& v, const char* split) {
    for (const auto& img : v) {
      if (img.height() != h || img.width() != w) {
        throw Error(std::string("dataset: image shape mismatch in ") + split);
      }
    }
  };
  auto check_masks = [&](const std::vector<LabelMask>& v, const char* split) {
    for (const auto& m : v) {
      if (m.height() != h || m.width() != w) {
        throw Error(std::string("dataset: mask shape mismatch in ") + split);
      }
    }
  };
  check(source_train, "source_train");
  check(source_test, "source_test");
  check(target_train, "target_train");
  check(target_test, "target_test");
  check_masks(source_train_masks, "source_train");
  check_masks(source_test_masks, "source_test");
  check_masks(target_test_masks, "target_test");
}

Dataset load_dataset(const imagio::DatasetManifest& manifest) {
  Dataset d;
  d.n_classes = manifest.n_classes;
  d.levels = manifest.levels;
  for (const auto& e : manifest.source_train) {
    d.source_train.push_back(imagio::load_image(e.image));
    d.source_train_masks.push_back(imagio::load_mask(*e.mask, d.n_classes));
  }
  for (const auto& e : manifest.source_test) {
    d.source_test.push_back(imagio::load_image(e.image));
    d.source_test_masks.push_back(imagio::load_mask(*e.mask, d.n_classes));
  }
  for (const auto& e : manifest.target_train) {
    d.target_train.push_back(imagio::load_image(e.image));
  }
  bool all_masks = true;
  for (const auto& e : manifest.target_test) {
    d.target_test.push_back(imagio::load_image(e.image));
    all_masks = all_masks && e.mask.has_value();
  }
  if (all_masks) {
    for (const auto& e : manifest.target_test) {
      d.target_test_masks.push_back(imagio::load_mask(*e.mask, d.n_classes));
    }
  }
  d.validate();
  return d;
}

TrainResult train_teacher(const Dataset& data, Transfer transfer,
                          const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  if (transfer != Transfer::kNone && data.target_train.empty()) {
    throw Error("transfer '" + std::string(transfer_name(transfer)) +
                "' needs a non-empty target_train split");
  }
  TrainResult res{ToyModel(data.n_classes), {}};
  if (cfg.epochs == 0) return res;

  const bool use_freq = transfer == Transfer::kFrequency || transfer == Transfer::kMixed;
  const bool use_spatial = transfer == Transfer::kSpatial || transfer == Transfer::kMixed;
  std::optional<FrequencyTransfer> freq;
  if (use_freq) freq.emplace(data, cfg);
  std::optional<histmatch::SpatialTransfer> spatial;
  if (use_spatial) {
    spatial.emplace(cfg.strategy, data.target_train, derive_seed(cfg.seed, kStreamSpatial),
                    cfg.eta, cfg.levels);
  }
  std::vector<FeatureMap> cached;
  if (transfer == Transfer::kNone) cached = raw_features(data.source_train, cfg.threads);

  Rng order(derive_seed(cfg.seed, kStreamOrder));
  AdamState adam;
  ToyModel& model = res.model;
  const std::size_t n = data.source_train.size();
  const std::size_t n_params = model.parameters().size();
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  std::uint64_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto perm = order.permutation(n);
    StepStats epoch_sum;
    std::size_t epoch_steps = 0;
    for (std::size_t b0 = 0; b0 < n; b0 += batch) {
      const std::size_t bn = std::min(batch, n - b0);
      std::vector<std::size_t> idx(perm.begin() + b0, perm.begin() + b0 + bn);

      // Transfer plan for this batch: mixed sends even positions through
      // the frequency route and odd positions through the spatial one.
      std::vector<Image2D> inputs(bn);
      std::vector<std::size_t> partners(bn, 0);
      std::vector<std::size_t> spatial_pos;
      for (std::size_t i = 0; i < bn; ++i) {
        const bool freq_here = transfer == Transfer::kFrequency ||
                               (transfer == Transfer::kMixed && i % 2 == 0);
        const bool spatial_here = transfer == Transfer::kSpatial ||
                                  (transfer == Transfer::kMixed && i % 2 == 1);
        if (freq_here) partners[i] = freq->draw_partner();
        if (spatial_here) spatial_pos.push_back(i);
      }
      if (!spatial_pos.empty()) {
        std::vector<Image2D> srcs;
        srcs.reserve(spatial_pos.size());
        for (std::size_t i : spatial_pos) srcs.push_back(data.source_train[idx[i]]);
        auto out = spatial->transfer_batch(srcs);
        for (std::size_t k = 0; k < spatial_pos.size(); ++k) {
          inputs[spatial_pos[k]] = std::move(out[k]);
        }
      }

      std::vector<Slot> slots(bn);
      parallel_for(bn, cfg.threads, [&](std::size_t i) {
        const std::size_t s = idx[i];
        FeatureMap feat;
        const FeatureMap* fp = nullptr;
        if (transfer == Transfer::kNone) {
          fp = &cached[s];
        } else {
          const bool freq_here = transfer == Transfer::kFrequency ||
                                 (transfer == Transfer::kMixed && i % 2 == 0);
          if (freq_here) inputs[i] = freq->apply(data.source_train[s], partners[i]);
          feat = extract_features(inputs[i]);
          fp = &feat;
        }
        const LogitMap z = predict(model, *fp);
        const auto ce = losses::cross_entropy_grad(z, data.source_train_masks[s]);
        const auto dc = losses::dice_grad(z, data.source_train_masks[s], cfg.loss.dice_eps);
        LogitMap dz = ce.grad;
        for (std::size_t k = 0; k < dz.values.size(); ++k) dz.values[k] += dc.grad.values[k];
        Slot& slot = slots[i];
        slot.grad.assign(n_params, 0.0);
        accumulate_param_grad(*fp, dz, slot.grad);
        slot.ce = ce.value;
        slot.dice = dc.value;
        slot.loss = ce.value + dc.value;
      });

      StepStats st;
      for (const Slot& s : slots) {
        st.loss += s.loss;
        st.ce += s.ce;
        st.dice += s.dice;
      }
      st.loss /= static_cast<double>(bn);
      st.ce /= static_cast<double>(bn);
      st.dice /= static_cast<double>(bn);
      const auto g = reduce_grad(slots, n_params);
      adam_step(model.parameters(), g, adam, cfg.adam);

      res.log.push_back(fmt_json({{"phase", "teacher"},
                                  {"transfer", std::string(transfer_name(transfer))},
                                  {"epoch", epoch},
                                  {"step", step},
                                  {"loss", st.loss},
                                  {"ce", st.ce},
                                  {"dice", st.dice}}));
      epoch_sum.loss += st.loss;
      epoch_sum.ce += st.ce;
      epoch_sum.dice += st.dice;
      ++epoch_steps;
      ++step;
    }
    const double k = static_cast<double>(epoch_steps);
    res.log.push_back(fmt_json({{"phase", "teacher"},
                                {"event", "epoch"},
                                {"epoch", epoch},
                                {"mean_loss", epoch_sum.loss / k},
                                {"mean_ce", epoch_sum.ce / k},
                                {"mean_dice", epoch_sum.dice / k}}));
  }
  return res;
}

TrainResult train_student(const Dataset& data, const ToyModel& teacher_f,
                          const ToyModel& teacher_s, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.target_train.empty()) throw Error("distillation needs a non-empty target_train split");
  if (teacher_f.n_classes() != data.n_classes || teacher_s.n_classes() != data.n_classes) {
    throw Error("teacher class count does not match the dataset");
  }
  TrainResult res{ToyModel(data.n_classes), {}};
  if (cfg.epochs == 0) return res;

  FrequencyTransfer freq(data, cfg);
  histmatch::SpatialTransfer spatial(cfg.strategy, data.target_train,
                                     derive_seed(cfg.seed, kStreamSpatial), cfg.eta,
                                     cfg.levels);
  const auto cached = raw_features(data.source_train, cfg.threads);

  Rng order(derive_seed(cfg.seed, kStreamOrder));
  AdamState adam;
  ToyModel& model = res.model;
  const std::size_t n = data.source_train.size();
  const std::size_t n_params = model.parameters().size();
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  std::uint64_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto perm = order.permutation(n);
    double epoch_total = 0.0, epoch_sup = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t b0 = 0; b0 < n; b0 += batch) {
      const std::size_t bn = std::min(batch, n - b0);
      std::vector<std::size_t> idx(perm.begin() + b0, perm.begin() + b0 + bn);
      std::vector<std::size_t> partners(bn);
      for (std::size_t i = 0; i < bn; ++i) partners[i] = freq.draw_partner();
      std::vector<Image2D> srcs;
      srcs.reserve(bn);
      for (std::size_t s : idx) srcs.push_back(data.source_train[s]);
      const auto spatial_in = spatial.transfer_batch(srcs);

      std::vector<Slot> slots(bn);
      parallel_for(bn, cfg.threads, [&](std::size_t i) {
        const std::size_t s = idx[i];
        const LogitMap zf =
            predict(teacher_f, extract_features(freq.apply(data.source_train[s], partners[i])));
        const LogitMap zs = predict(teacher_s, extract_features(spatial_in[i]));
        const LogitMap z = predict(model, cached[s]);
        auto g = losses::mkd_grad(z, zf, zs, data.source_train_masks[s], cfg.loss);
        Slot& slot = slots[i];
        slot.grad.assign(n_params, 0.0);
        accumulate_param_grad(cached[s], g.grad, slot.grad);
        slot.mkd = g.diagnostics;
      });

      losses::MkdDiagnostics mean;
      mean.weights = {0.0, 0.0};
      for (const Slot& s : slots) {
        mean.total += s.mkd.total;
        mean.cross_entropy += s.mkd.cross_entropy;
        mean.dice += s.mkd.dice;
        mean.supervised += s.mkd.supervised;
        mean.kd_f += s.mkd.kd_f;
        mean.kd_s += s.mkd.kd_s;
        mean.entropy_f += s.mkd.entropy_f;
        mean.entropy_s += s.mkd.entropy_s;
        mean.weights.teacher_f += s.mkd.weights.teacher_f;
        mean.weights.teacher_s += s.mkd.weights.teacher_s;
      }
      const double inv = 1.0 / static_cast<double>(bn);
      const auto g = reduce_grad(slots, n_params);
      adam_step(model.parameters(), g, adam, cfg.adam);

      res.log.push_back(fmt_json({{"phase", "student"},
                                  {"epoch", epoch},
                                  {"step", step},
                                  {"loss", mean.total * inv},
                                  {"supervised", mean.supervised * inv},
                                  {"ce", mean.cross_entropy * inv},
                                  {"dice", mean.dice * inv},
                                  {"kd_f", mean.kd_f * inv},
                                  {"kd_s", mean.kd_s * inv},
                                  {"entropy_f", mean.entropy_f * inv},
                                  {"entropy_s", mean.entropy_s * inv},
                                  {"w_f", mean.weights.teacher_f * inv},
                                  {"w_s", mean.weights.teacher_s * inv}}));
      epoch_total += mean.total * inv;
      epoch_sup += mean.supervised * inv;
      ++epoch_steps;
      ++step;
    }
    const double k = static_cast<double>(epoch_steps);
    res.log.push_back(fmt_json({{"phase", "student"},
                                {"event", "epoch"},
                                {"epoch", epoch},
                                {"mean_loss", epoch_total / k},
                                {"mean_supervised", epoch_sup / k}}));
  }
  return res;
}

LabelMask segment(const ToyModel& model, const Image2D& img) {
  return losses::argmax(predict(model, extract_features(img)));
}

metrics::EvalReport evaluate(const ToyModel& model, std::span<const Image2D> images,
                             std::span<const LabelMask> masks, int n_classes) {
  if (images.size() != masks.size()) throw Error("evaluate: image/mask count mismatch");
  if (images.empty()) throw Error("evaluate: empty split");
  if (model.n_classes() != n_classes) throw Error("evaluate: model class count mismatch");
  metrics::Evaluator ev(n_classes);
  for (std::size_t i = 0; i < images.size(); ++i) ev.add(segment(model, images[i]), masks[i]);
  return ev.report();
}

std::vector<ComponentSet> default_fc_combos() {
  return {ComponentSet{0},
          ComponentSet::range(1, 2),
          ComponentSet::range(3, 6),
          ComponentSet::range(7, 14),
          ComponentSet::range(0, 2),
          ComponentSet{0} | ComponentSet::range(3, 6),
          ComponentSet{0} | ComponentSet::range(7, 14)};
}

std::vector<Image2D> synthetic_target(const Dataset& data, int levels) {
  if (data.target_train.empty()) throw Error("synthetic target needs target_train images");
  const Image2D ref = histmatch::batch_mean(data.target_train);
  std::vector<Image2D> out;
  out.reserve(data.source_test.size());
  for (const auto& img : data.source_test) {
    out.push_back(histmatch::match_histogram(img, ref, levels));
  }
  return out;
}

std::string FcSearchReport::to_json() const {
  json rows_j = json::array();
  for (const auto& r : rows) {
    rows_j.push_back({{"label", r.label},
                      {"keep", r.keep.to_string()},
                      {"source_val_dice", r.source_val_dice},
                      {"target_val_dice", r.target_val_dice}});
  }
  return json{{"rows", rows_j}}.dump(2);
}

std::string FcSearchReport::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(10) << "No." << std::setw(14) << "FCs" << std::right
     << std::setw(10) << "src val" << std::setw(10) << "trgt val" << '\n';
  os << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    os << std::left << std::setw(10) << r.label << std::setw(14) << r.keep.to_string()
       << std::right << std::setw(10) << r.source_val_dice << std::setw(10)
       << r.target_val_dice << '\n';
  }
  return os.str();
}

FcSearchReport fc_search(const Dataset& data, const std::vector<ComponentSet>& combos,
                         const TrainConfig& cfg) {
  if (combos.empty()) throw Error("fc_search: empty combo list");
  cfg.validate();
  data.validate();
  if (data.source_test.empty()) throw Error("fc_search: empty source_test split");
  const auto synth = synthetic_target(data, cfg.levels);
  const nsct::NsctPlan plan(data.height(), data.width(), cfg.feather);

  std::vector<FcStack> stacks(data.source_train.size());
  parallel_for(stacks.size(), cfg.threads,
               [&](std::size_t i) { stacks[i] = plan.forward(data.source_train[i]); });

  auto run = [&](const std::string& label, const ComponentSet& keep) {
    Dataset d = data;
    for (std::size_t i = 0; i < stacks.size(); ++i) {
      d.source_train[i] = nsct::reconstruct_subset(stacks[i], keep);
    }
    const auto model = train_teacher(d, Transfer::kNone, cfg).model;
    FcSearchRow row;
    row.label = label;
    row.keep = keep;
    row.source_val_dice =
        evaluate(model, data.source_test, data.source_test_masks, data.n_classes).mean_dice;
    row.target_val_dice =
        evaluate(model, synth, data.source_test_masks, data.n_classes).mean_dice;
    return row;
  };

  FcSearchReport report;
  report.rows.push_back(run("Baseline", ComponentSet::all()));
  for (std::size_t i = 0; i < combos.size(); ++i) {
    if (combos[i].empty()) throw Error("fc_search: empty keep-set");
    report.rows.push_back(run(std::to_string(i + 1), combos[i]));
  }
  return report;
}

}  // namespace uda::toytrain
