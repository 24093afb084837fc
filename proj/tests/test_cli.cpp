#include <doctest.h>

#include <json.hpp>

#include "oracles.hpp"
#include "support.hpp"
#include "uda/cli.hpp"
#include "uda/imagio.hpp"
#include "uda/nsct.hpp"
#include "uda/synth.hpp"

using namespace uda;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "uda");
  return cli::run(args);
}

std::string p(const fs::path& path) { return path.string(); }

fs::path tiny_dataset(const TempDir& dir) {
  synth::SynthSpec spec;
  spec.height = spec.width = 32;
  spec.train_per_domain = 6;
  spec.test_per_domain = 2;
  write_bytes(dir / "spec.json", spec.to_json());
  REQUIRE(run({"synth", "--spec", p(dir / "spec.json"), "-o", p(dir / "data")}) == 0);
  return dir / "data" / "manifest.json";
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}) == cli::kExitUsage);
  CHECK(run({"frobnicate"}) == cli::kExitUsage);
  CHECK(run({"decompose"}) == cli::kExitUsage);
  CHECK(run({"reconstruct", "x.fcs", "-o", "y.pgm", "--depth", "abc"}) == cli::kExitUsage);
  CHECK(run({"--help"}) == cli::kExitOk);
}

TEST_CASE("runtime errors exit with 1") {
  TempDir dir;
  CHECK(run({"decompose", p(dir / "missing.pgm"), "-o", p(dir / "x.fcs")}) == cli::kExitFailure);
  CHECK(run({"reconstruct", p(dir / "missing.fcs"), "-o", p(dir / "x.pgm")}) == cli::kExitFailure);
}

TEST_CASE("decompose then reconstruct recovers the image") {
  TempDir dir;
  Rng rng(1);
  Image2D img = oracle::random_image(rng, 32, 32);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = round_half_away(img[i]);
  imagio::save_image(img, dir / "x.pgm", 8);
  REQUIRE(run({"decompose", p(dir / "x.pgm"), "-o", p(dir / "x.fcs")}) == 0);
  REQUIRE(run({"reconstruct", p(dir / "x.fcs"), "--keep", "0-14", "--depth", "16", "-o", p(dir / "y.pgm")}) == 0);
  CHECK(max_abs_diff(imagio::load_image(dir / "y.pgm"), img) < 1e-6);
  CHECK(fs::exists(dir / "run.json"));
  const auto rj = nlohmann::json::parse(read_bytes(dir / "run.json"));
  CHECK(rj["command"] == "reconstruct");
  CHECK(rj["deterministic"] == true);

  REQUIRE(run({"reconstruct", p(dir / "x.fcs"), "--keep", "0", "-o", p(dir / "low.pgm"), "--clamp"}) == 0);
  const Image2D low = imagio::load_image(dir / "low.pgm");
  CHECK(low.same_shape(img));
}

TEST_CASE("frequency transfer of an image with itself") {
  TempDir dir;
  Rng rng(2);
  Image2D img = oracle::random_image(rng, 16, 16);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = round_half_away(img[i]);
  imagio::save_image(img, dir / "a.pgm", 8);
  REQUIRE(run({"freq-transfer", p(dir / "a.pgm"), p(dir / "a.pgm"), "-o", p(dir / "b.pgm"),
               "--run-json", p(dir / "meta" / "r.json")}) == 0);
  CHECK(imagio::load_image(dir / "b.pgm").values() == img.values());
  CHECK(fs::exists(dir / "meta" / "r.json"));
  CHECK_FALSE(fs::exists(dir / "run.json"));
}

TEST_CASE("histogram matching output is reproducible") {
  TempDir dir;
  const fs::path manifest = tiny_dataset(dir);
  const auto m = imagio::load_manifest(manifest);
  std::vector<std::string> sources;
  for (const auto& e : m.source_train) sources.push_back(p(e.image));
  fs::create_directories(dir / "pool");
  for (const auto& e : m.target_train) fs::copy_file(e.image, dir / "pool" / e.image.filename());
  auto args = [&](const fs::path& out) {
    std::vector<std::string> a = {"--seed", "5", "--eta", "0.7", "hist-match"};
    a.insert(a.end(), sources.begin(), sources.end());
    a.insert(a.end(), {"--target-dir", p(dir / "pool"), "--strategy", "momentum",
                       "--batch-size", "2", "-o", p(out)});
    return a;
  };
  REQUIRE(run(args(dir / "m1")) == 0);
  REQUIRE(run(args(dir / "m2")) == 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir / "m1")) {
    if (e.path().extension() != ".pgm") continue;
    ++files;
    CHECK(read_bytes(e.path()) == read_bytes(dir / "m2" / e.path().filename()));
  }
  CHECK(files == static_cast<int>(sources.size()));
  CHECK(fs::exists(dir / "m1" / "run.json"));
}

TEST_CASE("train, distill, evaluate and search through the command line") {
  TempDir dir;
  const fs::path manifest = tiny_dataset(dir);
  const std::vector<std::string> train = {"--epochs", "2", "--batch-size", "3", "--lr", "0.05"};
  auto with = [&](std::vector<std::string> a) {
    a.insert(a.end(), train.begin(), train.end());
    return a;
  };
  REQUIRE(run(with({"--seed", "3", "train-teachers", "--data", p(manifest), "--transfer", "frequency", "-o",
                    p(dir / "tf.bin")})) == 0);
  REQUIRE(run(with({"--seed", "3", "train-teachers", "--data", p(manifest), "--transfer", "spatial", "-o",
                    p(dir / "ts.bin")})) == 0);
  CHECK(fs::exists(dir / "tf.bin.log.jsonl"));
  REQUIRE(run(with({"distill", "--data", p(manifest), "--teacher-f", p(dir / "tf.bin"), "--teacher-s",
                    p(dir / "ts.bin"), "-o", p(dir / "st.bin")})) == 0);
  REQUIRE(run({"evaluate", "--data", p(manifest), "--model", p(dir / "st.bin"), "-o", p(dir / "eval.json")}) == 0);
  const auto report = nlohmann::json::parse(read_bytes(dir / "eval.json"));
  CHECK(report["cases"] == 2);

  write_bytes(dir / "combos.json", R"(["0", [0, 7, 8, 9, 10, 11, 12, 13, 14]])");
  REQUIRE(run(with({"fc-search", "--data", p(manifest), "--combos", p(dir / "combos.json"), "-o",
                    p(dir / "fc.json")})) == 0);
  const auto fc = nlohmann::json::parse(read_bytes(dir / "fc.json"));
  CHECK(fc["rows"].size() == 3);
  write_bytes(dir / "bad.json", R"({"nope": 1})");
  CHECK(run(with({"fc-search", "--data", p(manifest), "--combos", p(dir / "bad.json"), "-o",
                  p(dir / "fc2.json")})) == cli::kExitFailure);
  CHECK(run({"train-teachers", "--data", p(manifest), "--transfer", "sideways", "-o", p(dir / "x.bin")}) != 0);
}
