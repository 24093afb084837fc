#include "uda/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace uda::losses {

namespace {

constexpr double kProbFloor = 1e-12;

void require_labels(const ClassMap& m, const LabelMask& y, const char* what) {
  if (m.height != y.height() || m.width != y.width()) {
    throw Error(std::string(what) + ": label mask shape does not match");
  }
  y.check_labels(m.n_classes);
}

void require_same(const ClassMap& a, const ClassMap& b, const char* what) {
  if (!a.same_shape(b)) throw Error(std::string(what) + ": shape mismatch");
}

// Per-pixel log-softmax of z / tau.
std::vector<double> log_softmax(const LogitMap& z, double tau) {
  const std::size_t n = z.pixels();
  std::vector<double> out(z.values.size());
  for (std::size_t i = 0; i < n; ++i) {
    double mx = z(0, i) / tau;
    for (int c = 1; c < z.n_classes; ++c) mx = std::max(mx, z(c, i) / tau);
    double sum = 0.0;
    for (int c = 0; c < z.n_classes; ++c) sum += std::exp(z(c, i) / tau - mx);
    const double lse = mx + std::log(sum);
    for (int c = 0; c < z.n_classes; ++c) {
      out[static_cast<std::size_t>(c) * n + i] = z(c, i) / tau - lse;
    }
  }
  return out;
}

// dL/dz from dL/dp through p = softmax(z) (tau = 1).
LogitMap softmax_backward(const ProbMap& p, const ClassMap& dp) {
  LogitMap g(p.n_classes, p.height, p.width);
  for (std::size_t i = 0; i < p.pixels(); ++i) {
    double dot = 0.0;
    for (int c = 0; c < p.n_classes; ++c) dot += p(c, i) * dp(c, i);
    for (int c = 0; c < p.n_classes; ++c) g(c, i) = p(c, i) * (dp(c, i) - dot);
  }
  return g;
}

void check_tau(double tau) {
  if (!(tau > 0.0)) throw Error("temperature must be positive");
}

}  // namespace

ClassMap::ClassMap(int n, int h, int w, double fill)
    : n_classes(n), height(h), width(w) {
  if (n <= 0 || h <= 0 || w <= 0) throw Error("invalid class map shape");
  values.assign(static_cast<std::size_t>(n) * pixels(), fill);
}

ProbMap ProbMap::one_hot(const LabelMask& y, int n_classes) {
  y.check_labels(n_classes);
  ProbMap p(n_classes, y.height(), y.width());
  for (std::size_t i = 0; i < y.size(); ++i) p(y[i], i) = 1.0;
  return p;
}

ProbMap ProbMap::uniform(int n_classes, int height, int width) {
  return ProbMap(n_classes, height, width, 1.0 / n_classes);
}

void ProbMap::check() const {
  for (std::size_t i = 0; i < pixels(); ++i) {
    double s = 0.0;
    for (int c = 0; c < n_classes; ++c) {
      const double v = (*this)(c, i);
      if (!(v >= 0.0)) throw Error("negative or NaN probability");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) {
      throw Error("probabilities at pixel " + std::to_string(i) +
                  " sum to " + std::to_string(s));
    }
  }
}

void LossConfig::validate() const {
  if (!(alpha > 0.0)) throw Error("alpha must be positive");
  if (!(tau > 0.0)) throw Error("tau must be positive");
  if (!(dice_eps > 0.0)) throw Error("dice epsilon must be positive");
}

ProbMap softmax(const LogitMap& z, double tau) {
  check_tau(tau);
  for (double v : z.values) {
    if (!std::isfinite(v)) throw Error("softmax: non-finite logit");
  }
  ProbMap p(z.n_classes, z.height, z.width);
  const auto logp = log_softmax(z, tau);
  for (std::size_t k = 0; k < logp.size(); ++k) p.values[k] = std::exp(logp[k]);
  return p;
}

LabelMask argmax(const ClassMap& m) {
  LabelMask out(m.height, m.width);
  for (std::size_t i = 0; i < m.pixels(); ++i) {
    int best = 0;
    for (int c = 1; c < m.n_classes; ++c) {
      if (m(c, i) > m(best, i)) best = c;
    }
    out[i] = best;
  }
  return out;
}

double cross_entropy(const ProbMap& p, const LabelMask& y) {
  require_labels(p, y, "cross_entropy");
  double s = 0.0;
  for (std::size_t i = 0; i < p.pixels(); ++i) {
    s -= std::log(std::max(p(y[i], i), kProbFloor));
  }
  return s / static_cast<double>(p.pixels());
}

double soft_dice_loss(const ProbMap& p, const LabelMask& y, double eps) {
  require_labels(p, y, "soft_dice_loss");
  double acc = 0.0;
  for (int c = 0; c < p.n_classes; ++c) {
    double inter = 0.0, psum = 0.0, gsum = 0.0;
    for (std::size_t i = 0; i < p.pixels(); ++i) {
      const double g = y[i] == c ? 1.0 : 0.0;
      inter += p(c, i) * g;
      psum += p(c, i);
      gsum += g;
    }
    acc += (2.0 * inter + eps) / (psum + gsum + eps);
  }
  return 1.0 - acc / p.n_classes;
}

double mean_entropy(const ProbMap& p, EntropyReduction reduction) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.pixels(); ++i) {
    for (int c = 0; c < p.n_classes; ++c) {
      const double v = p(c, i);
      if (v > 0.0) s -= v * std::log(v);
    }
  }
  return reduction == EntropyReduction::kSum
             ? s
             : s / static_cast<double>(p.pixels());
}

KdWeights kd_weights(double entropy_f, double entropy_s) {
  if (!(entropy_f >= 0.0) || !(entropy_s >= 0.0)) {
    throw Error("entropies must be non-negative");
  }
  const double total = entropy_f + entropy_s;
  if (total == 0.0) return {0.5, 0.5};
  const double wf = 1.0 - entropy_f / total;
  return {wf, 1.0 - wf};
}

double kd_loss(const LogitMap& teacher, const LogitMap& student, double tau) {
  return kd_grad(teacher, student, tau).value;
}

double teacher_loss(const ProbMap& p, const LabelMask& y,
                    const LossConfig& cfg) {
  return cross_entropy(p, y) + soft_dice_loss(p, y, cfg.dice_eps);
}

MkdDiagnostics mkd_loss(const LogitMap& student, const LogitMap& teacher_f,
                        const LogitMap& teacher_s, const LabelMask& y,
                        const LossConfig& cfg) {
  return mkd_grad(student, teacher_f, teacher_s, y, cfg).diagnostics;
}

LossGrad cross_entropy_grad(const LogitMap& z, const LabelMask& y) {
  const ProbMap p = softmax(z, 1.0);
  LossGrad out{cross_entropy(p, y), LogitMap(z.n_classes, z.height, z.width)};
  const double inv_n = 1.0 / static_cast<double>(z.pixels());
  for (std::size_t i = 0; i < z.pixels(); ++i) {
    if (p(y[i], i) < kProbFloor) continue;  // clamp active: flat
    for (int c = 0; c < z.n_classes; ++c) {
      out.grad(c, i) = (p(c, i) - (y[i] == c ? 1.0 : 0.0)) * inv_n;
    }
  }
  return out;
}

LossGrad dice_grad(const LogitMap& z, const LabelMask& y, double eps) {
  const ProbMap p = softmax(z, 1.0);
  LossGrad out{soft_dice_loss(p, y, eps), {}};
  ClassMap dp(z.n_classes, z.height, z.width);
  for (int c = 0; c < z.n_classes; ++c) {
    double inter = 0.0, psum = 0.0, gsum = 0.0;
    for (std::size_t i = 0; i < p.pixels(); ++i) {
      const double g = y[i] == c ? 1.0 : 0.0;
      inter += p(c, i) * g;
      psum += p(c, i);
      gsum += g;
    }
    const double num = 2.0 * inter + eps;
    const double den = psum + gsum + eps;
    // d/dp of -(num/den)/n_c
    for (std::size_t i = 0; i < p.pixels(); ++i) {
      const double g = y[i] == c ? 1.0 : 0.0;
      dp(c, i) = -(2.0 * g * den - num) / (den * den) / z.n_classes;
    }
  }
  out.grad = softmax_backward(p, dp);
  return out;
}

LossGrad teacher_loss_grad(const LogitMap& z, const LabelMask& y,
                           const LossConfig& cfg) {
  LossGrad ce = cross_entropy_grad(z, y);
  LossGrad dice = dice_grad(z, y, cfg.dice_eps);
  for (std::size_t k = 0; k < ce.grad.values.size(); ++k) {
    ce.grad.values[k] += dice.grad.values[k];
  }
  ce.value += dice.value;
  return ce;
}

LossGrad kd_grad(const LogitMap& teacher, const LogitMap& student, double tau) {
  check_tau(tau);
  require_same(teacher, student, "kd_loss");
  const auto lq = log_softmax(teacher, tau);
  const auto lp = log_softmax(student, tau);
  const std::size_t n = student.pixels();
  LossGrad out{0.0, LogitMap(student.n_classes, student.height, student.width)};
  double s = 0.0;
  const double scale = 1.0 / (tau * static_cast<double>(n));
  for (std::size_t k = 0; k < lq.size(); ++k) {
    const double q = std::exp(lq[k]);
    if (q > 0.0) s += q * (lq[k] - lp[k]);
    out.grad.values[k] = (std::exp(lp[k]) - q) * scale;
  }
  // Gibbs' inequality holds exactly; rounding can leave a tiny negative.
  out.value = std::max(0.0, s / static_cast<double>(n));
  return out;
}

MkdGrad mkd_grad(const LogitMap& student, const LogitMap& teacher_f,
                 const LogitMap& teacher_s, const LabelMask& y,
                 const LossConfig& cfg) {
  cfg.validate();
  require_same(student, teacher_f, "mkd_loss");
  require_same(student, teacher_s, "mkd_loss");

  MkdGrad out;
  auto& d = out.diagnostics;
  d.entropy_f = mean_entropy(softmax(teacher_f, cfg.tau), cfg.entropy_reduction);
  d.entropy_s = mean_entropy(softmax(teacher_s, cfg.tau), cfg.entropy_reduction);
  d.weights = kd_weights(d.entropy_f, d.entropy_s);

  LossGrad ce = cross_entropy_grad(student, y);
  LossGrad dice = dice_grad(student, y, cfg.dice_eps);
  LossGrad kf = kd_grad(teacher_f, student, cfg.tau);
  LossGrad ks = kd_grad(teacher_s, student, cfg.tau);
  const double kd_scale = cfg.kd_tau_squared ? cfg.tau * cfg.tau : 1.0;

  d.cross_entropy = ce.value;
  d.dice = dice.value;
  d.supervised = cfg.alpha * (ce.value + dice.value);
  d.kd_f = kd_scale * kf.value;
  d.kd_s = kd_scale * ks.value;
  d.total = d.supervised + d.weights.teacher_f * d.kd_f +
            d.weights.teacher_s * d.kd_s;

  out.grad = LogitMap(student.n_classes, student.height, student.width);
  const double wf = d.weights.teacher_f * kd_scale;
  const double ws = d.weights.teacher_s * kd_scale;
  for (std::size_t k = 0; k < out.grad.values.size(); ++k) {
    out.grad.values[k] = cfg.alpha * (ce.grad.values[k] + dice.grad.values[k]) +
                         wf * kf.grad.values[k] + ws * ks.grad.values[k];
  }
  return out;
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "ce") return LossKind::kCrossEntropy;
  if (name == "dice") return LossKind::kDice;
  if (name == "teacher") return LossKind::kTeacher;
  if (name == "kd") return LossKind::kKd;
  if (name == "mkd") return LossKind::kMkd;
  throw Error("unknown loss kind '" + std::string(name) + "'");
}

LossGrad loss_and_grad(LossKind kind, const LogitMap& student,
                       const LabelMask& y, const LossConfig& cfg,
                       const LogitMap* teacher_f, const LogitMap* teacher_s) {
  switch (kind) {
    case LossKind::kCrossEntropy:
      return cross_entropy_grad(student, y);
    case LossKind::kDice:
      return dice_grad(student, y, cfg.dice_eps);
    case LossKind::kTeacher:
      return teacher_loss_grad(student, y, cfg);
    case LossKind::kKd:
      if (!teacher_f) throw Error("kd loss needs a teacher");
      return kd_grad(*teacher_f, student, cfg.tau);
    case LossKind::kMkd: {
      if (!teacher_f || !teacher_s) throw Error("mkd loss needs two teachers");
      MkdGrad g = mkd_grad(student, *teacher_f, *teacher_s, y, cfg);
      return {g.diagnostics.total, std::move(g.grad)};
    }
  }
  throw Error("unknown loss kind");
}

}  // namespace uda::losses
