#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uda/image.hpp"

namespace uda::metrics {

struct Point {
  int row = 0;
  int col = 0;
  bool operator==(const Point&) const = default;
};

// Per-class Dice in percent, indexed by class (entry 0 is background and is
// left out of reports). A class absent from both masks scores 100.
std::vector<double> dice_score(const LabelMask& pred, const LabelMask& gt,
                               int n_classes);

// Pixels of class c with a 4-neighbour of another class; the image border
// counts as another class. Row-major order.
std::vector<Point> boundary_pixels(const LabelMask& mask, int c);

// Average symmetric surface distance between the class-c boundaries, in
// pixels. nullopt when exactly one boundary is empty, 0 when both are.
// Nearest-boundary distances come from an exact Euclidean distance
// transform.
std::optional<double> asd(const LabelMask& pred, const LabelMask& gt, int c);

// Squared Euclidean distance from every pixel to the nearest seed pixel,
// exact on the integer grid. Empty seed sets give +infinity everywhere.
std::vector<double> squared_distance_transform(int height, int width,
                                               const std::vector<Point>& seeds);

struct EvalReport {
  int n_classes = 0;
  int cases = 0;
  // Indexed by foreground class 1..n_classes-1 (entry 0 unused).
  std::vector<double> dice;         // mean over cases, percent
  std::vector<double> asd;          // mean over cases with a defined value
  std::vector<int> asd_undefined;   // cases excluded from the ASD mean
  double mean_dice = 0.0;           // macro average over foreground classes
  double mean_asd = 0.0;            // macro over classes with any defined ASD

  std::string to_json() const;
  // Aligned table: one column per class then "Average", Dice row and ASD row.
  std::string to_table() const;
};

// Accumulates per-case Dice and ASD over a set of prediction/ground-truth
// pairs.
class Evaluator {
 public:
  explicit Evaluator(int n_classes);
  void add(const LabelMask& pred, const LabelMask& gt);
  EvalReport report() const;

 private:
  int n_classes_;
  int cases_ = 0;
  std::vector<double> dice_sum_;
  std::vector<double> asd_sum_;
  std::vector<int> asd_count_;
  std::vector<int> asd_undefined_;
};

}  // namespace uda::metrics
