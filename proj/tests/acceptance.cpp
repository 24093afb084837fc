// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "oracles.hpp"
#include "support.hpp"
#include "uda/cli.hpp"
#include "uda/freqtransfer.hpp"
#include "uda/histmatch.hpp"
#include "uda/losses.hpp"
#include "uda/metrics.hpp"
#include "uda/nsct.hpp"

using namespace uda;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Runs the command-line tool in process with its console output discarded.
int tool(std::vector<std::string> args) {
  args.insert(args.begin(), "uda");
  std::ostringstream sink;
  auto* out = std::cout.rdbuf(sink.rdbuf());
  auto* err = std::cerr.rdbuf(sink.rdbuf());
  const int code = cli::run(args);
  std::cout.rdbuf(out);
  std::cerr.rdbuf(err);
  if (code != 0) throw std::runtime_error("command failed (" + std::to_string(code) + "): " + args[1] + "\n" + sink.str());
  return code;
}

json read_json(const fs::path& p) { return json::parse(read_bytes(p)); }

Outcome c1_reconstruction() {
  Rng rng(101);
  std::vector<Image2D> imgs;
  for (int i = 0; i < 50; ++i) imgs.push_back(oracle::random_image(rng, 64, 64));
  Stopwatch sw;
  double worst = 0.0;
  for (const auto& x : imgs) worst = std::max(worst, max_abs_diff(nsct::nsct_inverse(nsct::nsct_forward(x)), x));
  const double t = sw.seconds();
  return {worst < 1e-9 && t < 10.0, "max error " + fmt("%.2e", worst) + ", " + fmt("%.2f", t) + " s"};
}

Outcome c2_partition() {
  double worst = 0.0;
  int sets = 0;
  for (auto [h, w] : {std::pair{8, 8}, {9, 9}, {16, 16}, {17, 23}, {64, 64}, {128, 96}, {256, 256}}) {
    for (int n : {2, 4, 8}) {
      for (double feather : {0.0, nsct::default_feather(n)}) {
        const nsct::WedgeMaskSet set(h, w, n, feather);
        ++sets;
        for (std::size_t i = 0; i < set.mask(0).size(); ++i) {
          double s = 0.0;
          for (int k = 0; k < n; ++k) s += set.mask(k)[i];
          worst = std::max(worst, std::abs(s - 1.0));
        }
      }
    }
  }
  return {worst <= 1e-12, std::to_string(sets) + " mask sets, max |sum - 1| " + fmt("%.2e", worst)};
}

Outcome c3_dft_oracle() {
  Rng rng(103);
  double worst = 0.0;
  for (int trial = 0; trial < 4; ++trial) {
    for (int n : {2, 4, 8}) {
      for (double feather : {0.0, nsct::default_feather(n)}) {
        const Image2D band = oracle::random_image(rng, 8, 8, -100.0, 100.0);
        const nsct::WedgeMaskSet set(8, 8, n, feather);
        const auto comps = nsct::nsdfb_decompose(band, set);
        for (int k = 0; k < n; ++k) {
          worst = std::max(worst, max_abs_diff(comps[static_cast<std::size_t>(k)],
                                               oracle::naive_filter(band, set.mask(k))));
        }
      }
    }
  }
  return {worst < 1e-9, "max deviation from naive DFT " + fmt("%.2e", worst)};
}

Outcome c4_transfer_identities() {
  Rng rng(104);
  double all = 0.0, none = 0.0, self = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Image2D s = oracle::random_image(rng, 32, 32), t = oracle::random_image(rng, 32, 32);
    all = std::max(all, max_abs_diff(freqtransfer::freq_transfer_image(s, t, ComponentSet::all()), s));
    none = std::max(none, max_abs_diff(freqtransfer::freq_transfer_image(s, t, ComponentSet::none()), t));
    for (const auto& d : {freqtransfer::default_dif(), ComponentSet{1, 2}, ComponentSet{0}}) {
      self = std::max(self, max_abs_diff(freqtransfer::freq_transfer_image(s, s, d), s));
    }
  }
  return {all < 1e-9 && none < 1e-9 && self < 1e-9,
          "all->src " + fmt("%.1e", all) + ", none->tgt " + fmt("%.1e", none) + ", src=tgt " + fmt("%.1e", self)};
}

Outcome c5_matching_oracle() {
  using namespace histmatch;
  const QuantImage src{2, 2, 4, {0, 1, 2, 3}}, tgt{2, 2, 4, {0, 0, 0, 3}};
  const bool worked =
      apply_matching(src, build_matching(Histogram::of(src), Histogram::of(tgt))).values == std::vector<int>{0, 0, 0, 3};
  Rng rng(105);
  int agree = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int L = 2 + static_cast<int>(rng.index(7));
    const int h = 1 + static_cast<int>(rng.index(4)), w = 1 + static_cast<int>(rng.index(4));
    std::vector<int> s(static_cast<std::size_t>(h * w)), t(s.size());
    for (int& x : s) x = static_cast<int>(rng.index(static_cast<std::size_t>(L)));
    for (int& x : t) x = static_cast<int>(rng.index(static_cast<std::size_t>(L)));
    const QuantImage qs{h, w, L, s}, qt{h, w, L, t};
    const auto table = oracle::matching_table(s, t, L);
    const auto out = apply_matching(qs, build_matching(Histogram::of(qs), Histogram::of(qt)));
    bool ok = true;
    for (std::size_t i = 0; i < s.size(); ++i) ok = ok && out.values[i] == table[static_cast<std::size_t>(s[i])];
    agree += ok;
  }
  return {worked && agree == 100,
          std::string("worked example ") + (worked ? "ok" : "wrong") + ", " + std::to_string(agree) + "/100 random cases exact"};
}

Outcome c6_momentum() {
  const double eta = 0.7, m = 20.0;
  histmatch::MomentumAverage avg(eta);
  avg.update(std::vector<Image2D>{Image2D(4, 4, 3.0)});
  const double first = std::abs(avg.mean()[0] - m);
  double worst = 0.0;
  for (int k = 2; k <= 40; ++k) {
    avg.update(std::vector<Image2D>{Image2D(4, 4, m)});
    for (std::size_t i = 0; i < avg.mean().size(); ++i) {
      worst = std::max(worst, std::abs(std::abs(avg.mean()[i] - m) - std::pow(1.0 - eta, k - 1) * first));
    }
  }
  return {worst <= 1e-12, "40 batches, max recurrence error " + fmt("%.2e", worst)};
}

Outcome c7_losses() {
  using namespace losses;
  const KdWeights w = kd_weights(1.0, 3.0);
  const bool example = std::abs(w.teacher_f - 0.75) < 1e-15 && std::abs(w.teacher_s - 0.25) < 1e-15;
  Rng rng(107);
  double wsum = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const KdWeights r = kd_weights(rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0));
    wsum = std::max(wsum, std::abs(r.teacher_f + r.teacher_s - 1.0));
  }
  auto logits = [&](double scale) {
    LogitMap z(3, 4, 4);
    for (double& v : z.values) v = scale * rng.normal();
    return z;
  };
  bool kl_ok = true;
  for (int i = 0; i < 100; ++i) {
    const LogitMap a = logits(3.0), b = logits(3.0);
    kl_ok = kl_ok && kd_loss(a, b, 2.0) >= 0.0 && kd_loss(a, a, 2.0) == 0.0;
  }
  double grad_err = 0.0;
  const LossConfig cfg;
  for (int inst = 0; inst < 20; ++inst) {
    const LabelMask y = oracle::random_mask(rng, 4, 4, 3);
    const LogitMap z = logits(2.0), tf = logits(2.0), ts = logits(2.0);
    for (auto kind : {LossKind::kCrossEntropy, LossKind::kDice, LossKind::kTeacher, LossKind::kKd, LossKind::kMkd}) {
      auto f = [&](const std::vector<double>& v) {
        LogitMap zz = z;
        zz.values = v;
        return loss_and_grad(kind, zz, y, cfg, &tf, &ts).value;
      };
      const auto g = loss_and_grad(kind, z, y, cfg, &tf, &ts);
      grad_err = std::max(grad_err, oracle::gradient_error(f, z.values, g.grad.values, 1e-5));
    }
  }
  return {example && wsum < 1e-12 && kl_ok && grad_err < 1e-4,
          std::string("kd_weights(1,3) ") + (example ? "ok" : "wrong") + ", max |w sum - 1| " + fmt("%.1e", wsum) +
              ", KL " + (kl_ok ? "ok" : "violated") + ", max gradient rel. error " + fmt("%.2e", grad_err)};
}

Outcome c8_metrics() {
  Rng rng(108);
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const LabelMask p = trial % 2 ? oracle::random_blobs(rng, 16, 16, 3) : oracle::random_mask(rng, 16, 16, 3);
    const LabelMask g = oracle::random_blobs(rng, 16, 16, 3);
    const auto d = metrics::dice_score(p, g, 3);
    bool ok = true;
    for (int c = 1; c < 3; ++c) {
      ok = ok && d[static_cast<std::size_t>(c)] == oracle::dice(p, g, c);
      const auto a = metrics::asd(p, g, c), b = oracle::asd(p, g, c);
      ok = ok && a.has_value() == b.has_value() && (!a || *a == *b);
    }
    exact += ok;
  }
  const LabelMask same = oracle::random_blobs(rng, 16, 16, 3);
  bool identical = true;
  for (int c = 1; c < 3; ++c) {
    identical = identical && metrics::dice_score(same, same, 3)[static_cast<std::size_t>(c)] == 100.0 &&
                metrics::asd(same, same, c) == 0.0;
  }
  return {exact == 100 && identical, std::to_string(exact) + "/100 pairs exact, identical masks " +
                                         (identical ? "Dice 100 / ASD 0" : "wrong")};
}

// Benchmark: default synthetic spec (seed 1, 64x64, 3 classes, 200/50 per
// domain) and teachers/student trained for 50 epochs at lr 0.05, seed 7.
const std::vector<std::string> kTrain = {"--epochs", "50", "--batch-size", "32", "--lr", "0.05"};
const std::vector<std::string> kGlobal = {"--seed", "7", "--threads", "1"};

std::vector<std::string> cmd(std::vector<std::string> head, const std::vector<std::string>& tail = kTrain) {
  std::vector<std::string> out = kGlobal;
  out.insert(out.end(), head.begin(), head.end());
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

void synth_into(const fs::path& dir) {
  fs::remove_all(dir);
  tool({"synth", "-o", (dir / "data").string()});
}

double target_dice(const fs::path& dir, const std::string& model) {
  const fs::path report = dir / (model + ".eval.json");
  tool({"evaluate", "--data", (dir / "data" / "manifest.json").string(), "--model", (dir / (model + ".bin")).string(),
        "--split", "target_test", "-o", report.string()});
  return read_json(report)["average"]["dice"].get<double>();
}

Outcome c9_benchmark(const fs::path& dir) {
  Stopwatch sw;
  synth_into(dir);
  const std::string manifest = (dir / "data" / "manifest.json").string();
  for (auto [name, mode] : {std::pair{"base", "none"}, {"teacher_f", "frequency"}, {"teacher_s", "spatial"}}) {
    tool(cmd({"train-teachers", "--data", manifest, "--transfer", mode, "-o", (dir / (std::string(name) + ".bin")).string()}));
  }
  tool(cmd({"distill", "--data", manifest, "--teacher-f", (dir / "teacher_f.bin").string(), "--teacher-s",
            (dir / "teacher_s.bin").string(), "-o", (dir / "student.bin").string()}));
  const double base = target_dice(dir, "base"), f = target_dice(dir, "teacher_f"), s = target_dice(dir, "teacher_s"),
               st = target_dice(dir, "student");
  const double t = sw.seconds();
  const bool margin_f = f - base >= 10.0, margin_s = s - base >= 10.0;
  const bool student = st >= std::max(f, s) - 2.0;
  const bool fast = t < 600.0;
  std::string detail = "target Dice none " + fmt("%.2f", base) + ", frequency " + fmt("%.2f", f) + " (" +
                       (margin_f ? "ok" : "FAIL") + "), spatial " + fmt("%.2f", s) + " (" + (margin_s ? "ok" : "FAIL") +
                       "), student " + fmt("%.2f", st) + " vs required >= " + fmt("%.2f", std::max(f, s) - 2.0) + " (" +
                       (student ? "ok" : "FAIL") + "), " + fmt("%.0f", t) + " s";
  return {margin_f && margin_s && student && fast, detail};
}

Outcome c10_fc_search(const fs::path& dir) {
  Stopwatch sw;
  if (!fs::exists(dir / "data" / "manifest.json")) synth_into(dir);
  tool(cmd({"fc-search", "--data", (dir / "data" / "manifest.json").string(), "-o", (dir / "fc_search.json").string()}));
  const double t = sw.seconds();
  std::map<std::string, double> by_keep;
  const json report = read_json(dir / "fc_search.json");
  for (const auto& row : report["rows"]) {
    by_keep[row["keep"].get<std::string>()] = row["target_val_dice"].get<double>();
  }
  const double best = by_keep.at("0,7-14"), low = by_keep.at("0"), fine = by_keep.at("1-2");
  const bool ok = best > low && best > fine && t < 900.0;
  return {ok, "synthetic-target Dice {0,7-14} " + fmt("%.2f", best) + " vs {0} " + fmt("%.2f", low) + " and {1,2} " +
                  fmt("%.2f", fine) + ", " + fmt("%.0f", t) + " s"};
}

// Every log, report and checkpoint; run.json records absolute paths and is
// left out.
std::map<std::string, std::string> artifacts(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "run.json") continue;
    out[e.path().filename().string()] = read_bytes(e.path());
  }
  return out;
}

Outcome c11_determinism(const fs::path& first, const fs::path& second) {
  const auto a = artifacts(first);
  if (a.empty()) return {false, "no artifacts from the first run"};
  c9_benchmark(second);
  c10_fc_search(second);
  const auto b = artifacts(second);
  std::vector<std::string> differ;
  for (const auto& [name, bytes] : a) {
    auto it = b.find(name);
    if (it == b.end() || it->second != bytes) differ.push_back(name);
  }
  if (a.size() != b.size()) differ.push_back("(file set)");
  std::string detail = std::to_string(a.size()) + " logs/reports/checkpoints compared";
  if (!differ.empty()) {
    detail += ", differing:";
    for (const auto& d : differ) detail += " " + d;
  } else {
    detail += ", all byte-identical";
  }
  return {differ.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  fs::path work = fs::temp_directory_path() / "uda_acceptance";
  std::vector<std::string> expect_fail, only;
  app.add_option("--work-dir", work, "Scratch directory for the benchmark runs");
  app.add_option("--expect-fail", expect_fail, "Criteria known to fail (reported, not fatal)");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);
  const std::set<std::string> xfail(expect_fail.begin(), expect_fail.end());
  const std::set<std::string> selected(only.begin(), only.end());

  const fs::path run_a = work / "run_a", run_b = work / "run_b";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"C1", c1_reconstruction},
      {"C2", c2_partition},
      {"C3", c3_dft_oracle},
      {"C4", c4_transfer_identities},
      {"C5", c5_matching_oracle},
      {"C6", c6_momentum},
      {"C7", c7_losses},
      {"C8", c8_metrics},
      {"C9", [&] { return c9_benchmark(run_a); }},
      {"C10", [&] { return c10_fc_search(run_a); }},
      {"C11", [&] { return c11_determinism(run_a, run_b); }},
  };

  fs::create_directories(work);
  std::ofstream report(work / "report.txt");
  auto emit = [&](const std::string& line) {
    std::cout << line << std::endl;
    report << line << '\n';
  };
  int unexpected = 0, passed = 0, expected_failures = 0;
  for (const auto& [id, fn] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::string line = id + (o.pass ? " PASS " : " FAIL ") + o.detail;
    if (xfail.count(id)) {
      if (o.pass) {
        line += " [marked as expected failure but passed]";
        ++unexpected;
      } else {
        line += " [expected failure, see ledger]";
        ++expected_failures;
      }
    } else if (!o.pass) {
      ++unexpected;
    }
    passed += o.pass;
    emit(line);
  }
  emit("summary: " + std::to_string(passed) + " passed, " + std::to_string(expected_failures) +
       " expected failures, " + std::to_string(unexpected) + " unexpected results");
  return unexpected == 0 ? 0 : 1;
}
