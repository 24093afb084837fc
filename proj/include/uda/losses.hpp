#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "uda/image.hpp"

namespace uda::losses {

// n_classes x height x width, class-major: value(c, i) for pixel index i.
struct ClassMap {
  int n_classes = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  ClassMap() = default;
  ClassMap(int n_classes, int height, int width, double fill = 0.0);

  std::size_t pixels() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  double& operator()(int c, std::size_t i) {
    return values[static_cast<std::size_t>(c) * pixels() + i];
  }
  double operator()(int c, std::size_t i) const {
    return values[static_cast<std::size_t>(c) * pixels() + i];
  }
  bool same_shape(const ClassMap& o) const {
    return n_classes == o.n_classes && height == o.height && width == o.width;
  }
};

// Raw per-class scores (pre-softmax).
struct LogitMap : ClassMap {
  using ClassMap::ClassMap;
};

// Per-pixel class distributions.
struct ProbMap : ClassMap {
  using ClassMap::ClassMap;
  static ProbMap one_hot(const LabelMask& y, int n_classes);
  static ProbMap uniform(int n_classes, int height, int width);
  // Throws Error unless every pixel is a distribution (sum 1 within 1e-9).
  void check() const;
};

enum class EntropyReduction { kMean, kSum };

struct LossConfig {
  double alpha = 10.0;       // supervised weight in the distillation loss
  double tau = 2.0;          // distillation temperature
  double dice_eps = 1e-5;
  EntropyReduction entropy_reduction = EntropyReduction::kMean;
  bool kd_tau_squared = false;  // scale KD terms by tau^2

  void validate() const;
};

// p_c = exp(z_c / tau) / sum exp(z_c' / tau), max-subtracted.
ProbMap softmax(const LogitMap& z, double tau = 1.0);

// Pixelwise argmax of a class map (first index wins ties).
LabelMask argmax(const ClassMap& m);

// -(1/HW) sum log max(p[y], 1e-12).
double cross_entropy(const ProbMap& p, const LabelMask& y);

// 1 - (1/n_c) sum_c (2 sum p_c g_c + eps) / (sum p_c + sum g_c + eps).
double soft_dice_loss(const ProbMap& p, const LabelMask& y, double eps = 1e-5);

// Mean (or summed) per-pixel entropy with 0 ln 0 = 0.
double mean_entropy(const ProbMap& p,
                    EntropyReduction reduction = EntropyReduction::kMean);

struct KdWeights {
  double teacher_f = 0.5;
  double teacher_s = 0.5;
};

// w_F = 1 - H_F / (H_F + H_S): the less uncertain teacher gets more weight.
// Both zero gives (0.5, 0.5).
KdWeights kd_weights(double entropy_f, double entropy_s);

// (1/HW) sum KL(softmax(teacher/tau) || softmax(student/tau)).
double kd_loss(const LogitMap& teacher, const LogitMap& student, double tau);

// CE + soft Dice with unit weights.
double teacher_loss(const ProbMap& p, const LabelMask& y, const LossConfig& cfg);

struct MkdDiagnostics {
  double total = 0.0;
  double cross_entropy = 0.0;
  double dice = 0.0;
  double supervised = 0.0;  // alpha * (CE + Dice)
  double kd_f = 0.0;
  double kd_s = 0.0;
  double entropy_f = 0.0;
  double entropy_s = 0.0;
  KdWeights weights;
};

// alpha (CE + Dice)(student) + w_F KD(teacher_f, student) +
// w_S KD(teacher_s, student), with weights from the tempered teacher
// entropies. Student probabilities for the supervised part use tau = 1.
MkdDiagnostics mkd_loss(const LogitMap& student, const LogitMap& teacher_f,
                        const LogitMap& teacher_s, const LabelMask& y,
                        const LossConfig& cfg);

// Loss values paired with their gradient with respect to the student logits.
struct LossGrad {
  double value = 0.0;
  LogitMap grad;
};

LossGrad cross_entropy_grad(const LogitMap& z, const LabelMask& y);
LossGrad dice_grad(const LogitMap& z, const LabelMask& y, double eps);
LossGrad teacher_loss_grad(const LogitMap& z, const LabelMask& y,
                           const LossConfig& cfg);
LossGrad kd_grad(const LogitMap& teacher, const LogitMap& student, double tau);

struct MkdGrad {
  MkdDiagnostics diagnostics;
  LogitMap grad;
};
MkdGrad mkd_grad(const LogitMap& student, const LogitMap& teacher_f,
                 const LogitMap& teacher_s, const LabelMask& y,
                 const LossConfig& cfg);

enum class LossKind { kCrossEntropy, kDice, kTeacher, kKd, kMkd };

LossKind parse_loss_kind(std::string_view name);

// Uniform entry point. Teachers are only read for kKd (teacher_f) and kMkd.
LossGrad loss_and_grad(LossKind kind, const LogitMap& student,
                       const LabelMask& y, const LossConfig& cfg,
                       const LogitMap* teacher_f = nullptr,
                       const LogitMap* teacher_s = nullptr);

}  // namespace uda::losses
