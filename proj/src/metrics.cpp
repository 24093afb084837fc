#include "uda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace uda::metrics {

namespace {

void require_same(const LabelMask& a, const LabelMask& b, const char* what) {
  if (!a.same_shape(b)) throw Error(std::string(what) + ": shape mismatch");
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D lower envelope of parabolas (Felzenszwalb & Huttenlocher). Infinite
// samples contribute no parabola.
void edt_1d(const double* f, double* d, int n, std::vector<int>& v,
            std::vector<double>& z) {
  int first = 0;
  while (first < n && !std::isfinite(f[first])) ++first;
  if (first == n) {
    std::fill(d, d + n, kInf);
    return;
  }
  auto cross = [&](int q, int p) {
    return ((f[q] + static_cast<double>(q) * q) -
            (f[p] + static_cast<double>(p) * p)) /
           (2.0 * (q - p));
  };
  int k = 0;
  v[0] = first;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = first + 1; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    double s = cross(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = cross(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

double sum_nearest(const std::vector<Point>& from, const std::vector<double>& dt,
                   int width) {
  double s = 0.0;
  for (const Point& p : from) {
    s += std::sqrt(dt[static_cast<std::size_t>(p.row) * width + p.col]);
  }
  return s;
}

}  // namespace

std::vector<double> dice_score(const LabelMask& pred, const LabelMask& gt,
                               int n_classes) {
  require_same(pred, gt, "dice_score");
  pred.check_labels(n_classes);
  gt.check_labels(n_classes);
  std::vector<long> inter(static_cast<std::size_t>(n_classes), 0);
  std::vector<long> np(static_cast<std::size_t>(n_classes), 0);
  std::vector<long> ng(static_cast<std::size_t>(n_classes), 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++np[pred[i]];
    ++ng[gt[i]];
    if (pred[i] == gt[i]) ++inter[pred[i]];
  }
  std::vector<double> out(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) {
    const long denom = np[c] + ng[c];
    out[c] = denom == 0 ? 100.0 : 100.0 * 2.0 * inter[c] / denom;
  }
  return out;
}

std::vector<Point> boundary_pixels(const LabelMask& mask, int c) {
  std::vector<Point> out;
  const int h = mask.height(), w = mask.width();
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      if (mask.at(r, col) != c) continue;
      const bool edge = r == 0 || col == 0 || r == h - 1 || col == w - 1 ||
                        mask.at(r - 1, col) != c || mask.at(r + 1, col) != c ||
                        mask.at(r, col - 1) != c || mask.at(r, col + 1) != c;
      if (edge) out.push_back({r, col});
    }
  }
  return out;
}

std::vector<double> squared_distance_transform(int height, int width,
                                               const std::vector<Point>& seeds) {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  std::vector<double> grid(n, kInf);
  for (const Point& p : seeds) grid[static_cast<std::size_t>(p.row) * width + p.col] = 0.0;

  const int len = std::max(height, width);
  std::vector<double> f(static_cast<std::size_t>(len)), d(static_cast<std::size_t>(len));
  std::vector<int> v(static_cast<std::size_t>(len));
  std::vector<double> z(static_cast<std::size_t>(len) + 1);

  for (int c = 0; c < width; ++c) {
    for (int r = 0; r < height; ++r) f[r] = grid[static_cast<std::size_t>(r) * width + c];
    edt_1d(f.data(), d.data(), height, v, z);
    for (int r = 0; r < height; ++r) grid[static_cast<std::size_t>(r) * width + c] = d[r];
  }
  for (int r = 0; r < height; ++r) {
    double* row = grid.data() + static_cast<std::size_t>(r) * width;
    std::copy(row, row + width, f.begin());
    edt_1d(f.data(), d.data(), width, v, z);
    std::copy(d.begin(), d.begin() + width, row);
  }
  return grid;
}

std::optional<double> asd(const LabelMask& pred, const LabelMask& gt, int c) {
  require_same(pred, gt, "asd");
  const auto bp = boundary_pixels(pred, c);
  const auto bg = boundary_pixels(gt, c);
  if (bp.empty() && bg.empty()) return 0.0;
  if (bp.empty() || bg.empty()) return std::nullopt;
  const int h = pred.height(), w = pred.width();
  const auto to_gt = squared_distance_transform(h, w, bg);
  const auto to_pred = squared_distance_transform(h, w, bp);
  const double total = sum_nearest(bp, to_gt, w) + sum_nearest(bg, to_pred, w);
  return total / static_cast<double>(bp.size() + bg.size());
}

Evaluator::Evaluator(int n_classes)
    : n_classes_(n_classes),
      dice_sum_(static_cast<std::size_t>(n_classes), 0.0),
      asd_sum_(static_cast<std::size_t>(n_classes), 0.0),
      asd_count_(static_cast<std::size_t>(n_classes), 0),
      asd_undefined_(static_cast<std::size_t>(n_classes), 0) {
  if (n_classes < 2) throw Error("evaluation needs at least two classes");
}

void Evaluator::add(const LabelMask& pred, const LabelMask& gt) {
  const auto dice = dice_score(pred, gt, n_classes_);
  for (int c = 1; c < n_classes_; ++c) {
    dice_sum_[c] += dice[c];
    if (auto a = asd(pred, gt, c)) {
      asd_sum_[c] += *a;
      ++asd_count_[c];
    } else {
      ++asd_undefined_[c];
    }
  }
  ++cases_;
}

EvalReport Evaluator::report() const {
  EvalReport r;
  r.n_classes = n_classes_;
  r.cases = cases_;
  r.dice.assign(static_cast<std::size_t>(n_classes_), 0.0);
  r.asd.assign(static_cast<std::size_t>(n_classes_), 0.0);
  r.asd_undefined = asd_undefined_;
  int asd_classes = 0;
  for (int c = 1; c < n_classes_; ++c) {
    r.dice[c] = cases_ ? dice_sum_[c] / cases_ : 0.0;
    r.mean_dice += r.dice[c];
    if (asd_count_[c] > 0) {
      r.asd[c] = asd_sum_[c] / asd_count_[c];
      r.mean_asd += r.asd[c];
      ++asd_classes;
    } else {
      r.asd[c] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  r.mean_dice /= (n_classes_ - 1);
  r.mean_asd = asd_classes ? r.mean_asd / asd_classes
                           : std::numeric_limits<double>::quiet_NaN();
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["cases"] = cases;
  j["n_classes"] = n_classes;
  nlohmann::json classes = nlohmann::json::array();
  for (int c = 1; c < n_classes; ++c) {
    nlohmann::json e;
    e["class"] = c;
    e["dice"] = dice[c];
    e["asd"] = std::isnan(asd[c]) ? nlohmann::json(nullptr) : nlohmann::json(asd[c]);
    e["asd_undefined"] = asd_undefined[c];
    classes.push_back(e);
  }
  j["classes"] = classes;
  j["average"] = {
      {"dice", mean_dice},
      {"asd", std::isnan(mean_asd) ? nlohmann::json(nullptr) : nlohmann::json(mean_asd)}};
  return j.dump(2);
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1);
  os << std::left << std::setw(8) << "Metric";
  for (int c = 1; c < n_classes; ++c) {
    os << std::right << std::setw(10) << ("class" + std::to_string(c));
  }
  os << std::setw(10) << "Average" << '\n';
  auto row = [&](const char* name, const std::vector<double>& v, double avg) {
    os << std::left << std::setw(8) << name << std::right;
    for (int c = 1; c < n_classes; ++c) {
      if (std::isnan(v[c])) {
        os << std::setw(10) << "-";
      } else {
        os << std::setw(10) << v[c];
      }
    }
    if (std::isnan(avg)) {
      os << std::setw(10) << "-";
    } else {
      os << std::setw(10) << avg;
    }
    os << '\n';
  };
  row("Dice", dice, mean_dice);
  row("ASD", asd, mean_asd);
  return os.str();
}

}  // namespace uda::metrics
