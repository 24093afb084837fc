#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uda/image.hpp"
#include "uda/imagio.hpp"

namespace uda::synth {

enum class Style { kA, kB };

// Two-modality phantom generator. Geometry (background plus n_classes - 1
// elliptic organs) is shared between the styles; only the intensity model
// differs.
struct SynthSpec {
  int height = 64;
  int width = 64;
  int n_classes = 3;
  int train_per_domain = 200;
  int test_per_domain = 50;
  std::uint64_t seed = 1;

  // Style A: base intensity per class (0..255), smooth shading amplitude,
  // white noise sigma.
  std::vector<double> intensities_a = {50.0, 110.0, 170.0};
  double shading_a = 8.0;
  double noise_a = 3.0;

  // Style B: gamma applied to the noiseless style-A image on [0, 1],
  // optional inversion, then an additive fine-grained noise texture.
  double gamma_b = 0.5;
  bool invert_b = false;
  double texture_b = 24.0;
  double texture_corr = 0.7;  // blend of white noise and its 3x3 average

  // Organ placement jitter and size range, as fractions of the image side.
  double jitter = 0.04;
  double radius_min = 0.16;
  double radius_max = 0.22;

  // Calibration pixels shared by both styles and exempt from noise: a
  // one-pixel frame at 0 and the top-left corner at 255. They pin every
  // image, and every mean of images, to the full [0, 255] range. Labelled
  // background.
  bool calibration = true;

  void validate() const;
  std::string to_json() const;
  static SynthSpec from_json(const std::string& text);
};

struct SynthCase {
  Image2D image;
  LabelMask mask;
};

// One phantom. The same case seed yields the same mask for both styles.
SynthCase generate_case(const SynthSpec& spec, std::uint64_t case_seed,
                        Style style);

// Case seed for the index-th image of a split; source and target draw
// from disjoint streams.
std::uint64_t case_seed(std::uint64_t seed, Style domain, bool train, int index);

// Writes source (style A, with masks) and target (style B) splits plus
// manifest.json into out_dir and returns the manifest path. Target-train
// masks are written under target_masks/ for evaluation only and are not
// listed in the manifest; target-test masks are listed.
std::filesystem::path synth_dataset(const SynthSpec& spec,
                                    const std::filesystem::path& out_dir);

}  // namespace uda::synth
