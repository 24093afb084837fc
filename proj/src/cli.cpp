#include "uda/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "uda/freqtransfer.hpp"
#include "uda/histmatch.hpp"
#include "uda/imagio.hpp"
#include "uda/nsct.hpp"
#include "uda/synth.hpp"
#include "uda/toytrain.hpp"

namespace uda::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  double tau = 2.0;
  double alpha = 10.0;
  double eta = histmatch::kDefaultEta;
  int levels = histmatch::kDefaultLevels;
  std::string run_json;
};

struct TrainFlags {
  int epochs = 50;
  int batch_size = 32;
  double lr = 1e-4;
  std::string dif = "0,7-14";
  double feather = -1.0;
  std::string strategy = "momentum";
  std::string log;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  write_text(path, text);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ComponentSet parse_set(const std::string& text, const char* flag) {
  try {
    return ComponentSet::parse(text);
  } catch (const Error& e) {
    throw CLI::ValidationError(flag, e.what());
  }
}

Image2D clamp_for_depth(Image2D img, int depth) {
  const double hi = depth == 8 ? 255.0 : 65535.0;
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = std::clamp(img[i], 0.0, hi);
  return img;
}

void check_depth(int depth) {
  if (depth != 8 && depth != 16) throw CLI::ValidationError("--depth", "must be 8 or 16");
}

toytrain::TrainConfig make_train_config(const Globals& g, const TrainFlags& t) {
  toytrain::TrainConfig cfg;
  cfg.epochs = t.epochs;
  cfg.batch_size = t.batch_size;
  cfg.adam.lr = t.lr;
  cfg.seed = g.seed;
  cfg.loss.alpha = g.alpha;
  cfg.loss.tau = g.tau;
  cfg.dif = parse_set(t.dif, "--dif");
  cfg.feather = t.feather;
  cfg.eta = g.eta;
  cfg.levels = g.levels;
  try {
    cfg.strategy = histmatch::parse_strategy(t.strategy);
  } catch (const Error& e) {
    throw CLI::ValidationError("--strategy", e.what());
  }
  cfg.threads = g.threads;
  return cfg;
}

void add_train_flags(CLI::App* sub, TrainFlags& t) {
  sub->add_option("--epochs", t.epochs, "Training epochs")->capture_default_str();
  sub->add_option("--batch-size", t.batch_size, "Mini-batch size")->capture_default_str();
  sub->add_option("--lr", t.lr, "Adam learning rate")->capture_default_str();
  sub->add_option("--dif", t.dif, "Components kept from the source in frequency transfer")
      ->capture_default_str();
  sub->add_option("--feather", t.feather, "Wedge feather in radians (<0: default)")
      ->capture_default_str();
  sub->add_option("--strategy", t.strategy, "Spatial reference strategy")
      ->check(CLI::IsMember({"entire", "single", "batch", "momentum"}))
      ->capture_default_str();
  sub->add_option("--log", t.log, "JSON-lines training log (default <output>.log.jsonl)");
}

fs::path log_path(const TrainFlags& t, const fs::path& out) {
  return t.log.empty() ? fs::path(out.string() + ".log.jsonl") : fs::path(t.log);
}

std::vector<fs::path> list_pgm(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("missing directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ComponentSet> parse_combos(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("--combos: invalid JSON: ") + e.what());
  }
  if (j.is_object() && j.contains("combos")) j = j["combos"];
  if (!j.is_array()) throw Error("--combos: expected an array of keep-sets");
  std::vector<ComponentSet> out;
  for (const auto& item : j) {
    if (item.is_string()) {
      out.push_back(ComponentSet::parse(item.get<std::string>()));
    } else if (item.is_array()) {
      ComponentSet s;
      for (const auto& v : item) {
        if (!v.is_number_integer()) throw Error("--combos: indices must be integers");
        s.insert(v.get<int>());
      }
      out.push_back(s);
    } else {
      throw Error("--combos: each keep-set must be a string or an index array");
    }
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Frequency and spatial domain transfer toolkit for segmentation"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Global random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (1 = deterministic reductions)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--tau", g.tau, "Distillation temperature")->capture_default_str();
  app.add_option("--alpha", g.alpha, "Supervised weight in the distillation loss")
      ->capture_default_str();
  app.add_option("--eta", g.eta, "Momentum coefficient")->capture_default_str();
  app.add_option("--levels", g.levels, "Histogram levels")->capture_default_str();
  app.add_option("--run-json", g.run_json, "Where to write run.json (default: output directory)");

  json options = json::object();
  fs::path out;
  fs::path run_dir;  // run.json goes here unless --run-json is given
  std::function<void()> action;

  // decompose
  std::string in_path;
  double feather = -1.0;
  auto* decompose = app.add_subcommand("decompose", "Forward transform of a PGM into an FCS stack");
  decompose->add_option("image", in_path, "Input PGM")->required();
  decompose->add_option("-o,--output", out, "Output .fcs file")->required();
  decompose->add_option("--feather", feather, "Wedge feather in radians (<0: default)");
  decompose->callback([&] {
    options = {{"image", in_path}, {"feather", feather}};
    run_dir = out.parent_path();
    action = [&] {
      imagio::write_fcs(nsct::nsct_forward(imagio::load_image(in_path), feather), out);
    };
  });

  // reconstruct
  std::string keep = "0-14";
  int depth = 8;
  bool clamp = false;
  auto* reconstruct = app.add_subcommand("reconstruct", "Sum a subset of FCS components into a PGM");
  reconstruct->add_option("stack", in_path, "Input .fcs file")->required();
  reconstruct->add_option("--keep", keep, "Components to keep, e.g. 0,7-14")->capture_default_str();
  reconstruct->add_option("-o,--output", out, "Output PGM")->required();
  reconstruct->add_option("--depth", depth, "Output bit depth (8 or 16)")->capture_default_str();
  reconstruct->add_flag("--clamp", clamp, "Clip values to the output range before saving");
  reconstruct->callback([&] {
    check_depth(depth);
    const ComponentSet k = parse_set(keep, "--keep");
    options = {{"stack", in_path}, {"keep", k.to_string()}, {"depth", depth}, {"clamp", clamp}};
    run_dir = out.parent_path();
    action = [&, k] {
      Image2D img = nsct::reconstruct_subset(imagio::read_fcs(in_path), k);
      if (clamp) img = clamp_for_depth(std::move(img), depth);
      imagio::save_image(img, out, depth);
    };
  });

  // freq-transfer
  std::string tgt_path, dif = "0,7-14";
  auto* ftransfer = app.add_subcommand("freq-transfer", "Swap domain-variant components with a target image");
  ftransfer->add_option("source", in_path, "Source PGM")->required();
  ftransfer->add_option("target", tgt_path, "Target PGM")->required();
  ftransfer->add_option("--dif", dif, "Components kept from the source")->capture_default_str();
  ftransfer->add_option("-o,--output", out, "Output PGM")->required();
  ftransfer->add_option("--feather", feather, "Wedge feather in radians (<0: default)");
  ftransfer->add_option("--depth", depth, "Output bit depth (8 or 16)")->capture_default_str();
  ftransfer->add_flag("--clamp", clamp, "Clip values to the output range before saving");
  ftransfer->callback([&] {
    check_depth(depth);
    const ComponentSet d = parse_set(dif, "--dif");
    options = {{"source", in_path}, {"target", tgt_path}, {"dif", d.to_string()},
               {"feather", feather}, {"depth", depth}, {"clamp", clamp}};
    run_dir = out.parent_path();
    action = [&, d] {
      Image2D img = freqtransfer::freq_transfer_image(imagio::load_image(in_path),
                                                      imagio::load_image(tgt_path), d, feather);
      if (clamp) img = clamp_for_depth(std::move(img), depth);
      imagio::save_image(img, out, depth);
    };
  });

  // hist-match
  std::vector<std::string> sources;
  std::string target_dir, strategy = "momentum";
  int batch_size = 32;
  auto* hmatch = app.add_subcommand("hist-match", "Histogram-match source images to a target pool");
  hmatch->add_option("sources", sources, "Source PGMs")->required();
  hmatch->add_option("--target-dir", target_dir, "Directory of target PGMs")->required();
  hmatch->add_option("--strategy", strategy, "entire | single | batch | momentum")
      ->check(CLI::IsMember({"entire", "single", "batch", "momentum"}))
      ->capture_default_str();
  hmatch->add_option("--batch-size", batch_size, "Sources per batch")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  hmatch->add_option("-o,--output", out, "Output directory")->required();
  hmatch->callback([&] {
    options = {{"sources", sources}, {"target_dir", target_dir}, {"strategy", strategy},
               {"batch_size", batch_size}};
    run_dir = out;
    action = [&] {
      std::vector<Image2D> pool;
      for (const auto& p : list_pgm(target_dir)) pool.push_back(imagio::load_image(p));
      if (pool.empty()) throw Error("no .pgm files in " + target_dir);
      histmatch::SpatialTransfer st(histmatch::parse_strategy(strategy), std::move(pool),
                                    g.seed, g.eta, g.levels);
      fs::create_directories(out);
      const int out_depth = g.levels <= 256 ? 8 : 16;
      for (std::size_t b0 = 0; b0 < sources.size(); b0 += static_cast<std::size_t>(batch_size)) {
        const std::size_t bn = std::min<std::size_t>(batch_size, sources.size() - b0);
        std::vector<Image2D> batch;
        for (std::size_t i = 0; i < bn; ++i) batch.push_back(imagio::load_image(sources[b0 + i]));
        const auto matched = st.transfer_batch(batch);
        for (std::size_t i = 0; i < bn; ++i) {
          imagio::save_image(matched[i], out / fs::path(sources[b0 + i]).filename(), out_depth);
        }
      }
    };
  });

  // synth
  std::string spec_path;
  auto* synth_cmd = app.add_subcommand("synth", "Generate the two-style synthetic dataset");
  synth_cmd->add_option("--spec", spec_path, "Generator spec JSON (defaults when omitted)");
  synth_cmd->add_option("-o,--output", out, "Output directory")->required();
  synth_cmd->callback([&] {
    run_dir = out;
    synth::SynthSpec spec;
    if (!spec_path.empty()) spec = synth::SynthSpec::from_json(read_text(spec_path));
    if (app.count("--seed") > 0) spec.seed = g.seed;
    spec.validate();
    options = {{"spec", spec_path}, {"resolved_spec", json::parse(spec.to_json())}};
    action = [&, spec] { synth::synth_dataset(spec, out); };
  });

  // train-teachers
  std::string data_path, transfer = "none";
  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train-teachers", "Train one teacher under a transfer mode");
  train_cmd->add_option("--data", data_path, "Dataset manifest")->required();
  train_cmd->add_option("--transfer", transfer, "frequency | spatial | mixed | none")
      ->check(CLI::IsMember({"frequency", "spatial", "mixed", "none"}))
      ->capture_default_str();
  train_cmd->add_option("-o,--output", out, "Output checkpoint")->required();
  add_train_flags(train_cmd, tf);
  train_cmd->callback([&] {
    run_dir = out.parent_path();
    auto cfg = make_train_config(g, tf);
    cfg.transfer = toytrain::parse_transfer(transfer);
    cfg.validate();
    options = {{"data", data_path}, {"train", json::parse(cfg.to_json())},
               {"log", log_path(tf, out).string()}};
    action = [&, cfg] {
      const auto data = toytrain::load_dataset(imagio::load_manifest(data_path));
      const auto res = toytrain::train_teacher(data, cfg.transfer, cfg);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      res.model.save(out);
      write_lines(log_path(tf, out), res.log);
    };
  });

  // distill
  std::string teacher_f, teacher_s;
  TrainFlags df;
  auto* distill = app.add_subcommand("distill", "Distill a student from two frozen teachers");
  distill->add_option("--data", data_path, "Dataset manifest")->required();
  distill->add_option("--teacher-f", teacher_f, "Frequency-transfer teacher checkpoint")->required();
  distill->add_option("--teacher-s", teacher_s, "Spatial-transfer teacher checkpoint")->required();
  distill->add_option("-o,--output", out, "Output checkpoint")->required();
  add_train_flags(distill, df);
  distill->callback([&] {
    run_dir = out.parent_path();
    const auto cfg = make_train_config(g, df);
    cfg.validate();
    options = {{"data", data_path}, {"teacher_f", teacher_f}, {"teacher_s", teacher_s},
               {"train", json::parse(cfg.to_json())}, {"log", log_path(df, out).string()}};
    action = [&, cfg] {
      const auto data = toytrain::load_dataset(imagio::load_manifest(data_path));
      const auto tf_model = toytrain::ToyModel::load(teacher_f);
      const auto ts_model = toytrain::ToyModel::load(teacher_s);
      const auto res = toytrain::train_student(data, tf_model, ts_model, cfg);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      res.model.save(out);
      write_lines(log_path(df, out), res.log);
    };
  });

  // evaluate
  std::string model_path, split = "target_test";
  auto* eval_cmd = app.add_subcommand("evaluate", "Dice and ASD of a checkpoint on a labeled split");
  eval_cmd->add_option("--data", data_path, "Dataset manifest")->required();
  eval_cmd->add_option("--model", model_path, "Model checkpoint")->required();
  eval_cmd->add_option("--split", split, "target_test | source_test")
      ->check(CLI::IsMember({"target_test", "source_test"}))
      ->capture_default_str();
  eval_cmd->add_option("-o,--output", out, "Report JSON")->required();
  eval_cmd->callback([&] {
    run_dir = out.parent_path();
    options = {{"data", data_path}, {"model", model_path}, {"split", split}};
    action = [&] {
      const auto data = toytrain::load_dataset(imagio::load_manifest(data_path));
      const auto model = toytrain::ToyModel::load(model_path);
      const bool target = split == "target_test";
      if (target && data.target_test_masks.empty()) {
        throw Error("target_test split has no masks in " + data_path);
      }
      const auto report =
          target ? toytrain::evaluate(model, data.target_test, data.target_test_masks, data.n_classes)
                 : toytrain::evaluate(model, data.source_test, data.source_test_masks, data.n_classes);
      write_text(out, report.to_json() + "\n");
      std::cout << report.to_table();
    };
  });

  // fc-search
  std::string combos_path;
  TrainFlags sf;
  auto* search = app.add_subcommand("fc-search", "Score teachers trained on component subsets");
  search->add_option("--data", data_path, "Dataset manifest")->required();
  search->add_option("--combos", combos_path, "JSON array of keep-sets (default: reference rows)");
  search->add_option("-o,--output", out, "Report JSON")->required();
  add_train_flags(search, sf);
  search->callback([&] {
    run_dir = out.parent_path();
    const auto cfg = make_train_config(g, sf);
    cfg.validate();
    options = {{"data", data_path}, {"combos", combos_path}, {"train", json::parse(cfg.to_json())}};
    action = [&, cfg] {
      const auto combos =
          combos_path.empty() ? toytrain::default_fc_combos() : parse_combos(read_text(combos_path));
      const auto data = toytrain::load_dataset(imagio::load_manifest(data_path));
      const auto report = toytrain::fc_search(data, combos, cfg);
      write_text(out, report.to_json() + "\n");
      std::cout << report.to_table();
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  std::string command;
  for (const auto* sub : app.get_subcommands()) command = sub->get_name();

  try {
    json run_json;
    run_json["command"] = command;
    run_json["argv"] = std::vector<std::string>(argv, argv + argc);
    run_json["seed"] = g.seed;
    run_json["threads"] = g.threads;
    run_json["deterministic"] = g.threads == 1;
    run_json["tau"] = g.tau;
    run_json["alpha"] = g.alpha;
    run_json["eta"] = g.eta;
    run_json["levels"] = g.levels;
    run_json["output"] = out.string();
    run_json["options"] = options;
    action();
    const fs::path rj = g.run_json.empty() ? run_dir / "run.json" : fs::path(g.run_json);
    write_text(rj, run_json.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace uda::cli
