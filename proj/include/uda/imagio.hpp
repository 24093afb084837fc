#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "uda/fcstack.hpp"
#include "uda/image.hpp"

namespace uda::imagio {

namespace fs = std::filesystem;

// Binary PGM ("P5") reader. 8-bit files give values in [0,255], 16-bit
// (maxval > 255, big-endian samples) in [0,65535].
Image2D load_image(const fs::path& path);

// Writes P5 at depth 8 or 16 after round-half-away-from-zero. Throws if a
// rounded value falls outside [0, 2^depth - 1]; nothing is written then.
void save_image(const Image2D& img, const fs::path& path, int depth);

// Masks are 8-bit P5 files whose sample values are the class labels.
LabelMask load_mask(const fs::path& path, int n_classes);
void save_mask(const LabelMask& mask, const fs::path& path);

struct DatasetEntry {
  fs::path image;
  std::optional<fs::path> mask;
};

struct DatasetManifest {
  int n_classes = 0;
  int levels = 256;
  std::vector<DatasetEntry> source_train;
  std::vector<DatasetEntry> source_test;
  std::vector<DatasetEntry> target_train;
  std::vector<DatasetEntry> target_test;
};

// Reads and validates a JSON manifest. Relative paths are resolved against
// the manifest's directory and every referenced file must exist. Source
// entries need masks; target_train entries must not carry one.
DatasetManifest load_manifest(const fs::path& path);

// Paths are written relative to the manifest directory when possible.
void save_manifest(const DatasetManifest& manifest, const fs::path& path);

// Frequency-component stack container: "NSCTFCS\0", u32 height, u32 width,
// u32 count (=15), then 15 row-major little-endian float64 planes.
void write_fcs(const FcStack& stack, const fs::path& path);
FcStack read_fcs(const fs::path& path);

}  // namespace uda::imagio
