#include "uda/imagio.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "uda/binio.hpp"

namespace uda::imagio {

namespace {

using json = nlohmann::json;

struct PgmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
};

void skip_space_and_comments(std::istream& in) {
  for (;;) {
    int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (ch != EOF && std::isspace(ch)) {
      in.get();
    } else {
      return;
    }
  }
}

int read_header_int(std::istream& in, const fs::path& path) {
  skip_space_and_comments(in);
  std::string digits;
  while (std::isdigit(in.peek())) digits.push_back(static_cast<char>(in.get()));
  if (digits.empty() || digits.size() > 9) {
    throw Error(path.string() + ": malformed PGM header");
  }
  return std::stoi(digits);
}

PgmHeader read_pgm_header(std::istream& in, const fs::path& path) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (in.gcount() != 2 || magic[0] != 'P') {
    throw Error(path.string() + ": malformed PGM header");
  }
  if (magic[1] != '5') {
    throw Error(path.string() + ": unsupported format P" +
                std::string(1, magic[1]));
  }
  PgmHeader h;
  h.width = read_header_int(in, path);
  h.height = read_header_int(in, path);
  h.maxval = read_header_int(in, path);
  if (h.width <= 0 || h.height <= 0) {
    throw Error(path.string() + ": malformed PGM header");
  }
  if (h.maxval <= 0 || h.maxval > 65535) {
    throw Error(path.string() + ": unsupported depth (maxval " +
                std::to_string(h.maxval) + ")");
  }
  int sep = in.get();
  if (sep == EOF || !std::isspace(sep)) {
    throw Error(path.string() + ": malformed PGM header");
  }
  return h;
}

std::vector<std::uint16_t> read_pgm_samples(const fs::path& path,
                                            PgmHeader& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path.string() + ": cannot open");
  header = read_pgm_header(in, path);
  const std::size_t n = static_cast<std::size_t>(header.width) *
                        static_cast<std::size_t>(header.height);
  const std::size_t bytes_per = header.maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(n * bytes_per);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw Error(path.string() + ": truncated PGM data");
  }
  std::vector<std::uint16_t> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    samples[i] = bytes_per == 1
                     ? raw[i]
                     : static_cast<std::uint16_t>((raw[2 * i] << 8) |
                                                  raw[2 * i + 1]);
  }
  return samples;
}

void write_pgm(const fs::path& path, int height, int width, int maxval,
               const std::vector<std::uint16_t>& samples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << "P5\n" << width << ' ' << height << '\n' << maxval << '\n';
  std::vector<unsigned char> raw;
  raw.reserve(samples.size() * (maxval > 255 ? 2 : 1));
  for (std::uint16_t s : samples) {
    if (maxval > 255) raw.push_back(static_cast<unsigned char>(s >> 8));
    raw.push_back(static_cast<unsigned char>(s & 0xFF));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw Error(path.string() + ": write failed");
}

}  // namespace

Image2D load_image(const fs::path& path) {
  PgmHeader h;
  auto samples = read_pgm_samples(path, h);
  std::vector<double> data(samples.begin(), samples.end());
  return Image2D(h.height, h.width, std::move(data));
}

void save_image(const Image2D& img, const fs::path& path, int depth) {
  if (depth != 8 && depth != 16) {
    throw Error("unsupported depth " + std::to_string(depth));
  }
  const int maxval = depth == 8 ? 255 : 65535;
  std::vector<std::uint16_t> samples(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    double r = round_half_away(img[i]);
    if (!(r >= 0.0 && r <= maxval)) {
      throw Error(path.string() + ": value " + std::to_string(img[i]) +
                  " at pixel " + std::to_string(i) + " out of range for " +
                  std::to_string(depth) + "-bit output");
    }
    samples[i] = static_cast<std::uint16_t>(r);
  }
  write_pgm(path, img.height(), img.width(), maxval, samples);
}

LabelMask load_mask(const fs::path& path, int n_classes) {
  PgmHeader h;
  auto samples = read_pgm_samples(path, h);
  std::vector<int> labels(samples.begin(), samples.end());
  LabelMask mask(h.height, h.width, std::move(labels));
  try {
    mask.check_labels(n_classes);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return mask;
}

void save_mask(const LabelMask& mask, const fs::path& path) {
  std::vector<std::uint16_t> samples(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] < 0 || mask[i] > 255) {
      throw Error(path.string() + ": label out of 8-bit range");
    }
    samples[i] = static_cast<std::uint16_t>(mask[i]);
  }
  write_pgm(path, mask.height(), mask.width(), 255, samples);
}

// ---- manifest ----

namespace {

const char* const kSplits[] = {"source_train", "source_test", "target_train",
                               "target_test"};

std::vector<DatasetEntry>& split_ref(DatasetManifest& m, std::string_view n) {
  if (n == "source_train") return m.source_train;
  if (n == "source_test") return m.source_test;
  if (n == "target_train") return m.target_train;
  return m.target_test;
}

const std::vector<DatasetEntry>& split_ref(const DatasetManifest& m,
                                           std::string_view n) {
  return split_ref(const_cast<DatasetManifest&>(m), n);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw Error("missing file: " + p.string());
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": invalid JSON: " + e.what());
  }
  auto schema = [&](const std::string& msg) {
    return Error(path.string() + ": schema violation: " + msg);
  };
  if (!doc.is_object()) throw schema("top level must be an object");

  DatasetManifest m;
  if (!doc.contains("n_classes") || !doc["n_classes"].is_number_integer()) {
    throw schema("'n_classes' must be an integer");
  }
  m.n_classes = doc["n_classes"].get<int>();
  if (m.n_classes < 2) throw schema("'n_classes' must be >= 2");
  if (doc.contains("levels")) {
    if (!doc["levels"].is_number_integer() || doc["levels"].get<int>() < 2) {
      throw schema("'levels' must be an integer >= 2");
    }
    m.levels = doc["levels"].get<int>();
  }

  const fs::path base = path.parent_path();
  for (const char* split : kSplits) {
    auto& entries = split_ref(m, split);
    if (!doc.contains(split)) continue;
    const json& list = doc[split];
    if (!list.is_array()) throw schema(std::string("'") + split + "' must be a list");
    for (const json& item : list) {
      if (!item.is_object() || !item.contains("image") ||
          !item["image"].is_string()) {
        throw schema(std::string("entries of '") + split +
                     "' need a string 'image'");
      }
      DatasetEntry e;
      e.image = resolve(base, item["image"].get<std::string>());
      if (item.contains("mask") && !item["mask"].is_null()) {
        if (!item["mask"].is_string()) throw schema("'mask' must be a string");
        e.mask = resolve(base, item["mask"].get<std::string>());
      }
      const bool is_source = split[0] == 's';
      if (is_source && !e.mask) {
        throw schema(std::string("source entry without mask in '") + split +
                     "': " + e.image.string());
      }
      if (std::string_view(split) == "target_train" && e.mask) {
        throw Error(path.string() + ": labels forbidden in target: " +
                    e.image.string());
      }
      require_file(e.image);
      if (e.mask) require_file(*e.mask);
      entries.push_back(std::move(e));
    }
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const fs::path base = path.parent_path();
  auto rel = [&](const fs::path& p) {
    std::error_code ec;
    fs::path r = fs::relative(p, base.empty() ? fs::path(".") : base, ec);
    return (ec || r.empty()) ? p.generic_string() : r.generic_string();
  };
  json doc;
  doc["n_classes"] = manifest.n_classes;
  doc["levels"] = manifest.levels;
  for (const char* split : kSplits) {
    json list = json::array();
    for (const auto& e : split_ref(manifest, split)) {
      json item;
      item["image"] = rel(e.image);
      if (e.mask) item["mask"] = rel(*e.mask);
      list.push_back(item);
    }
    doc[split] = list;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << doc.dump(2) << '\n';
}

// ---- FcsFile ----

namespace {
constexpr binio::Magic kFcsMagic = {'N', 'S', 'C', 'T', 'F', 'C', 'S', '\0'};
}

void write_fcs(const FcStack& stack, const fs::path& path) {
  stack.check_shape();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  binio::write_magic(out, kFcsMagic);
  binio::write_u32(out, static_cast<std::uint32_t>(stack.height()));
  binio::write_u32(out, static_cast<std::uint32_t>(stack.width()));
  binio::write_u32(out, kComponentCount);
  for (const auto& plane : stack.planes) {
    for (double v : plane.data()) binio::write_f64(out, v);
  }
  if (!out) throw Error(path.string() + ": write failed");
}

FcStack read_fcs(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing file: " + path.string());
  const std::string what = path.string();
  binio::expect_magic(in, kFcsMagic, what);
  const auto height = binio::read_u32(in, what);
  const auto width = binio::read_u32(in, what);
  const auto count = binio::read_u32(in, what);
  if (count != kComponentCount) {
    throw Error(what + ": expected 15 components, found " +
                std::to_string(count));
  }
  if (height == 0 || width == 0 || height > (1u << 16) || width > (1u << 16)) {
    throw Error(what + ": implausible plane shape");
  }
  FcStack stack;
  const std::size_t n = static_cast<std::size_t>(height) * width;
  for (auto& plane : stack.planes) {
    std::vector<double> data(n);
    for (double& v : data) v = binio::read_f64(in, what);
    plane = Image2D(static_cast<int>(height), static_cast<int>(width),
                    std::move(data));
  }
  binio::expect_eof(in, what);
  return stack;
}

}  // namespace uda::imagio
