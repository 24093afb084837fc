#include "uda/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

#include "uda/rng.hpp"

namespace uda::synth {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

struct Ellipse {
  double cy, cx, ry, rx, angle;
  bool contains(double y, double x) const {
    const double dy = y - cy, dx = x - cx;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = c * dx + s * dy;
    const double v = -s * dx + c * dy;
    return (u * u) / (rx * rx) + (v * v) / (ry * ry) <= 1.0;
  }
};

// Canonical organ centres spread on a diagonal through the image centre.
std::pair<double, double> anchor(int organ, int organs) {
  const double t = organs == 1 ? 0.5 : 0.36 + 0.28 * organ / (organs - 1);
  return {t, t};
}

}  // namespace

void SynthSpec::validate() const {
  if (height < 16 || width < 16) throw Error("synth: image side must be >= 16");
  if (n_classes < 2) throw Error("synth: n_classes must be >= 2");
  if (train_per_domain <= 0 || test_per_domain <= 0) {
    throw Error("synth: split sizes must be positive");
  }
  if (static_cast<int>(intensities_a.size()) != n_classes) {
    throw Error("synth: intensities_a needs one entry per class");
  }
  for (double v : intensities_a) {
    if (v < 0.0 || v > 255.0) throw Error("synth: intensities must lie in [0, 255]");
  }
  if (!(gamma_b > 0.0)) throw Error("synth: gamma_b must be positive");
  if (noise_a < 0.0 || texture_b < 0.0 || shading_a < 0.0) {
    throw Error("synth: noise amplitudes must be non-negative");
  }
  if (texture_corr < 0.0 || texture_corr > 1.0) {
    throw Error("synth: texture_corr must lie in [0, 1]");
  }
  if (!(radius_min > 0.0) || radius_max < radius_min) {
    throw Error("synth: invalid radius range");
  }
}

std::string SynthSpec::to_json() const {
  json j;
  j["height"] = height;
  j["width"] = width;
  j["n_classes"] = n_classes;
  j["train_per_domain"] = train_per_domain;
  j["test_per_domain"] = test_per_domain;
  j["seed"] = seed;
  j["intensities_a"] = intensities_a;
  j["shading_a"] = shading_a;
  j["noise_a"] = noise_a;
  j["gamma_b"] = gamma_b;
  j["invert_b"] = invert_b;
  j["texture_b"] = texture_b;
  j["texture_corr"] = texture_corr;
  j["jitter"] = jitter;
  j["radius_min"] = radius_min;
  j["radius_max"] = radius_max;
  j["calibration"] = calibration;
  return j.dump(2);
}

SynthSpec SynthSpec::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("synth spec: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error("synth spec: expected an object");
  SynthSpec s;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    get("height", s.height);
    get("width", s.width);
    get("n_classes", s.n_classes);
    get("train_per_domain", s.train_per_domain);
    get("test_per_domain", s.test_per_domain);
    get("seed", s.seed);
    get("intensities_a", s.intensities_a);
    get("shading_a", s.shading_a);
    get("noise_a", s.noise_a);
    get("gamma_b", s.gamma_b);
    get("invert_b", s.invert_b);
    get("texture_b", s.texture_b);
    get("texture_corr", s.texture_corr);
    get("jitter", s.jitter);
    get("radius_min", s.radius_min);
    get("radius_max", s.radius_max);
    get("calibration", s.calibration);
  } catch (const json::exception& e) {
    throw Error(std::string("synth spec: ") + e.what());
  }
  if (j.contains("n_classes") && !j.contains("intensities_a")) {
    // Evenly spaced default levels for other class counts.
    s.intensities_a.clear();
    for (int c = 0; c < s.n_classes; ++c) {
      s.intensities_a.push_back(50.0 + 120.0 * c / std::max(1, s.n_classes - 1));
    }
  }
  s.validate();
  return s;
}

std::uint64_t case_seed(std::uint64_t seed, Style domain, bool train, int index) {
  const std::uint64_t tag = (domain == Style::kA ? 1u : 2u) * 2 + (train ? 1u : 0u);
  return mix(mix(seed) ^ mix(tag * 0x100000001B3ull + static_cast<std::uint64_t>(index)));
}

SynthCase generate_case(const SynthSpec& spec, std::uint64_t seed, Style style) {
  spec.validate();
  const int h = spec.height, w = spec.width;
  const int organs = spec.n_classes - 1;
  const double side = std::min(h, w);

  Rng geo(seed);
  std::vector<Ellipse> shapes;
  for (int o = 0; o < organs; ++o) {
    auto [ay, ax] = anchor(o, organs);
    Ellipse e;
    e.cy = (ay + geo.uniform(-spec.jitter, spec.jitter)) * h;
    e.cx = (ax + geo.uniform(-spec.jitter, spec.jitter)) * w;
    e.ry = geo.uniform(spec.radius_min, spec.radius_max) * side;
    e.rx = geo.uniform(spec.radius_min, spec.radius_max) * side;
    e.angle = geo.uniform(0.0, kPi);
    shapes.push_back(e);
  }
  const double shade_phase = geo.uniform(0.0, 2.0 * kPi);
  const double shade_dir = geo.uniform(0.0, 2.0 * kPi);

  LabelMask mask(h, w);
  Image2D clean(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      int label = 0;
      for (int o = 0; o < organs; ++o) {
        if (shapes[o].contains(r + 0.5, c + 0.5)) label = o + 1;
      }
      mask.at(r, c) = label;
      const double proj = (std::cos(shade_dir) * c / w + std::sin(shade_dir) * r / h);
      clean.at(r, c) = spec.intensities_a[label] +
                       spec.shading_a * std::sin(2.0 * kPi * proj + shade_phase);
    }
  }

  Rng noise(mix(seed ^ (style == Style::kA ? 0xA11CEull : 0xB0Bull)));
  Image2D img(h, w);
  if (style == Style::kA) {
    for (std::size_t i = 0; i < img.size(); ++i) {
      img[i] = clean[i] + spec.noise_a * noise.normal();
    }
  } else {
    Image2D white(h, w);
    for (std::size_t i = 0; i < white.size(); ++i) white[i] = noise.normal();
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double avg = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            avg += white.at((r + dy + h) % h, (c + dx + w) % w);
          }
        }
        // Unit-variance blend of white noise and its local average.
        const double a = 1.0 - spec.texture_corr;
        const double b = spec.texture_corr;
        const double t = (a * white.at(r, c) + b * avg / 3.0) /
                         std::sqrt(a * a + b * b + 2.0 * a * b / 3.0);
        double v = std::clamp(clean.at(r, c) / 255.0, 0.0, 1.0);
        v = std::pow(v, spec.gamma_b);
        if (spec.invert_b) v = 1.0 - v;
        img.at(r, c) = 255.0 * v + spec.texture_b * t;
      }
    }
  }
  for (std::size_t i = 0; i < img.size(); ++i) {
    img[i] = std::clamp(round_half_away(img[i]), 0.0, 255.0);
  }
  if (spec.calibration) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (r == 0 || c == 0 || r == h - 1 || c == w - 1) {
          img.at(r, c) = 0.0;
          mask.at(r, c) = 0;
        }
      }
    }
    img.at(0, 0) = 255.0;
  }
  return {std::move(img), std::move(mask)};
}

fs::path synth_dataset(const SynthSpec& spec, const fs::path& out_dir) {
  spec.validate();
  fs::create_directories(out_dir / "source");
  fs::create_directories(out_dir / "target");
  fs::create_directories(out_dir / "target_masks");

  imagio::DatasetManifest m;
  m.n_classes = spec.n_classes;
  m.levels = 256;

  auto emit = [&](Style domain, bool train, int count,
                  std::vector<imagio::DatasetEntry>& list) {
    const std::string split = train ? "train" : "test";
    for (int i = 0; i < count; ++i) {
      const SynthCase sc = generate_case(spec, case_seed(spec.seed, domain, train, i), domain);
      char name[64];
      std::snprintf(name, sizeof name, "%s_%04d", split.c_str(), i);
      imagio::DatasetEntry e;
      if (domain == Style::kA) {
        e.image = out_dir / "source" / (std::string(name) + ".pgm");
        e.mask = out_dir / "source" / (std::string(name) + "_mask.pgm");
        imagio::save_mask(sc.mask, *e.mask);
      } else {
        e.image = out_dir / "target" / (std::string(name) + ".pgm");
        const fs::path mask_path = out_dir / "target_masks" / (std::string(name) + "_mask.pgm");
        imagio::save_mask(sc.mask, mask_path);
        if (!train) e.mask = mask_path;
      }
      imagio::save_image(sc.image, e.image, 8);
      list.push_back(std::move(e));
    }
  };
  emit(Style::kA, true, spec.train_per_domain, m.source_train);
  emit(Style::kA, false, spec.test_per_domain, m.source_test);
  emit(Style::kB, true, spec.train_per_domain, m.target_train);
  emit(Style::kB, false, spec.test_per_domain, m.target_test);

  const fs::path manifest = out_dir / "manifest.json";
  imagio::save_manifest(m, manifest);
  return manifest;
}

}  // namespace uda::synth
