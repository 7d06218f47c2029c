/*
 * Copyright 2026 The distinf Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "distinf.hpp"
#include "../pnm_decoder.hpp"

namespace {

using namespace distinf;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kClasses = 4;
constexpr std::size_t kHidden = 128;
constexpr std::size_t kSeeds = 5;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Same shape and the same bit patterns, so -0.0 and 0.0 differ.
bool BitEqual(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0;
}

int failures = 0;

void Report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::cout << "CRITERION " << id << " " << name << ": " << (pass ? "PASS" : "FAIL")
            << " (" << detail << ")" << std::endl;
  if (!pass) ++failures;
}

// --- 1 ---------------------------------------------------------------------

void AxiomSuite() {
  const auto start = Clock::now();
  const std::vector<AxiomReport> reports = CheckAllAxioms(50, 7);
  const double secs = Seconds(start);
  bool pass = reports.size() == 6 && secs < 60.0;
  for (const AxiomReport& r : reports) {
    std::cout << "  " << FormatReport(r) << "\n";
    pass = pass && r.pass && r.trials >= 50;
  }
  Report(1, "axiom-suite", pass, "6 checks, " + FormatDouble(secs) + " s");
}

// --- 2 ---------------------------------------------------------------------

void GradientOracle() {
  const auto start = Clock::now();
  Rng rng(2026);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Network net = RandomConvNet(rng, 2 + rng.Below(3));
    Tensor x;
    do {
      x = RandomTensor(rng, net.input_shape(), -1.0, 1.0);
    } while (NearKink(net, x, 1e-3));
    const std::size_t cut = rng.Below(net.layer_count());
    const std::size_t i = rng.Below(net.output_dim());
    const std::size_t j = (i + 1) % net.output_dim();
    QuantityOfInterest q = trial % 2 ? QuantityOfInterest::Class(i)
                                     : QuantityOfInterest::Compare(i, j);
    if (trial % 3 == 0) q = q.Logits();
    const Slice slice(net, cut);
    const Tensor z = slice.H(x);
    const Tensor analytic = SliceGradient(slice, q, x);
    const Tensor fd = FiniteDiffGradient(
        [&](const Tensor& t) { return EvaluateQuantityAt(net, cut, q, t); }, z);
    double scale = 1e-3;
    for (double v : fd.values()) scale = std::max(scale, std::abs(v));
    worst = std::max(worst, MaxAbsDiff(analytic, fd) / scale);
  }
  const double secs = Seconds(start);
  Report(2, "gradient-oracle", worst < 1e-5 && secs < 60.0,
         "100 nets, max rel err " + FormatDouble(worst) + ", " + FormatDouble(secs) + " s");
}

// --- 3 ---------------------------------------------------------------------

void IdentityCompression(const Network& net) {
  Rng rng(3);
  bool pass = true;
  for (std::size_t cut = 0; cut <= net.layer_count(); ++cut) {
    const Slice slice(net, cut);
    const ExpertMask all = ExpertMask::AllOnes(slice.z_shape());
    for (int n = 0; n < 100 && pass; ++n) {
      const Tensor x = RandomTensor(rng, net.input_shape(), 0.0, 1.0);
      pass = BitEqual(SliceCompression(slice, all, x), net.Forward(x));
    }
  }
  Report(3, "identity-compression", pass, "100 inputs at every cut, bitwise");
}

// --- 4 ---------------------------------------------------------------------

struct Trained {
  LabeledDataset train, test;
  TrainResult result;
  double seconds = 0.0;
};

Trained TrainSeed(std::uint64_t seed) {
  LabeledDataset train = SynthDataset(seed, 100, kClasses);
  LabeledDataset test = SynthDataset(seed + 1000, 50, kClasses, "test");
  TrainOptions o;
  o.epochs = 30;
  o.learning_rate = 0.05;
  o.batch = 16;
  o.seed = seed;
  const auto start = Clock::now();
  TrainResult r = TrainSgd(
      InitializeWeights(ConvNet({1, 8, 8}, kClasses, kHidden), seed), train, o);
  const double secs = Seconds(start);
  return {std::move(train), std::move(test), std::move(r), secs};
}

// --- 5, 6 ------------------------------------------------------------------

std::vector<Tensor> CorrectOfClass(const Network& net, const LabeledDataset& ds,
                                   std::size_t cls, std::size_t count) {
  std::vector<Tensor> out;
  for (std::size_t n = 0; n < ds.size() && out.size() < count; ++n) {
    if (ds.labels[n] == cls && PredictClass(net, ds.instances[n]) == cls) {
      out.push_back(ds.instances[n]);
    }
  }
  return out;
}

struct DropoffAreas {
  double input_ind = 0, input_mean = 0, input_rand = 0;
  double internal_ind = 0, internal_mean = 0, internal_rand = 0;
};

// Areas averaged over the classes, 20 correctly classified instances each.
DropoffAreas Dropoff(const Network& net, const LabeledDataset& test) {
  DropoffAreas a;
  const Slice input(net, 0), internal(net, kConvNetFcCut);
  const double w = 1.0 / kClasses;
  for (std::size_t cls = 0; cls < kClasses; ++cls) {
    const std::vector<Tensor> inst = CorrectOfClass(net, test, cls, 20);
    if (inst.size() < 20) {
      throw Error(ErrorKind::kInvalidArgument,
                  "fewer than 20 correct instances of class " + std::to_string(cls));
    }
    auto area = [&](const Slice& s, DropoffMode m, RankingKind r, std::uint64_t seed = 0) {
      return CurveArea(ComputeDropoffCurve(s, m, r, inst, {}, seed));
    };
    a.input_ind += w * area(input, DropoffMode::kInput, RankingKind::kIndividual);
    a.input_mean += w * area(input, DropoffMode::kInput, RankingKind::kMean);
    a.internal_ind += w * area(internal, DropoffMode::kInternal, RankingKind::kIndividual);
    a.internal_mean += w * area(internal, DropoffMode::kInternal, RankingKind::kMean);
    for (std::uint64_t k = 0; k < 10; ++k) {
      a.input_rand += w / 10 * area(input, DropoffMode::kInput, RankingKind::kRandom, k);
      a.internal_rand +=
          w / 10 * area(internal, DropoffMode::kInternal, RankingKind::kRandom, k);
    }
  }
  return a;
}

bool DropoffHolds(const DropoffAreas& a) {
  return a.internal_ind <= a.input_ind && a.input_ind < a.input_rand &&
         a.internal_ind < a.internal_rand &&
         std::abs(a.internal_mean - a.internal_ind) <=
             0.5 * std::abs(a.input_mean - a.input_ind);
}

struct ExpertTally {
  std::size_t experts = 0;  // classes with a qualifying influence expert
  std::size_t beats = 0;    // classes where influence recall >= activation recall
  std::string detail;
};

ExpertTally Experts(const Network& net, const LabeledDataset& test) {
  const Slice fc(net, kConvNetFcCut);
  const std::size_t units = fc.unit_count();
  std::vector<std::size_t> grid;
  for (std::size_t g = 0; g <= units / 4; g += std::max<std::size_t>(1, units / 32)) {
    grid.push_back(g);
  }
  ExpertTally t;
  for (std::size_t cls = 0; cls < kClasses; ++cls) {
    const SweepResult sw = ExpertSweep(fc, cls, test, grid, grid, 0.01);
    const SweepCell* best = nullptr;
    for (const SweepCell& c : sw.grid) {
      if (4 * (c.alpha + c.beta) > units) continue;
      if (c.metrics.precision < sw.precision_floor) continue;
      if (!best || c.metrics.recall > best->metrics.recall) best = &c;
    }
    const double infl = best ? best->metrics.recall : 0.0;
    double act = 0.0;
    if (best) {
      const ExpertMask m = BuildMaskActivation(fc, Empirical::Uniform(test.OfClass(cls)),
                                               best->mask.alpha + best->mask.beta);
      const BinaryMetrics bm = EvaluateMask(fc, m, cls, test);
      // Below the precision floor it is not an expert at all.
      act = bm.precision >= sw.precision_floor ? bm.recall : 0.0;
    }
    if (best && infl >= sw.original.recall) ++t.experts;
    if (infl >= act) ++t.beats;
    std::ostringstream s;
    s << " c" << cls << ":orig=" << FormatDouble(sw.original.recall)
      << ",infl=" << FormatDouble(infl) << ",act=" << FormatDouble(act);
    t.detail += s.str();
  }
  return t;
}

// --- 7 ---------------------------------------------------------------------

void Localization(const Network& net, const LabeledDataset& test) {
  Rng rng(7);
  std::size_t tested = 0;
  bool inside = true;
  for (; tested < 24; ++tested) {
    const std::size_t cut = 1 + rng.Below(4);  // conv and relu outputs
    const std::size_t unit = rng.Below(ShapeSize(net.activation_shape(cut)));
    const Tensor& x = test.instances[rng.Below(test.size())];
    const ReceptiveBox box = ReceptiveField(net, cut, unit);
    const Tensor m = UnitInterpretation(net, cut, unit, x);
    const Shape& s = m.shape();
    for (std::size_t c = 0; c < s[0]; ++c)
      for (std::size_t r = 0; r < s[1]; ++r)
        for (std::size_t col = 0; col < s[2]; ++col)
          if (m.at(c, r, col) != 0.0 && !box.Contains(r, col)) inside = false;
  }
  double anti = 0.0;
  for (int n = 0; n < 20; ++n) {
    const Tensor& x = test.instances[rng.Below(test.size())];
    const std::size_t i = rng.Below(kClasses), j = (i + 1 + rng.Below(kClasses - 1)) % kClasses;
    const std::size_t cut = rng.Below(net.layer_count());
    const Explanation ij = ComparativeExplanation(net, cut, x, i, j, 1, Granularity::kNeuron);
    const Explanation ji = ComparativeExplanation(net, cut, x, j, i, 1, Granularity::kNeuron);
    anti = std::max(anti, MaxAbsDiff(ij.influence.values, -1.0 * ji.influence.values));
  }
  Report(7, "explanation-localization", inside && anti <= 1e-12,
         std::to_string(tested) + " conv units, support inside box: " +
             (inside ? "yes" : "no") + ", antisymmetry err " + FormatDouble(anti));
}

// --- 8 ---------------------------------------------------------------------

int RunCli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(DISTINF_CLI_PATH) + " " + args + " >" +
                          log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::size_t> HashTree(const fs::path& dir) {
  std::map<std::string, std::size_t> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) {
      out[fs::relative(e.path(), dir).string()] = std::hash<std::string>{}(Slurp(e.path()));
    }
  }
  return out;
}

void Determinism(const fs::path& work) {
  const fs::path data = work / "data";
  auto d = [&](const std::string& split) {
    return "--images " + (data / (split + "-images.idx")).string() + " --labels " +
           (data / (split + "-labels.idx")).string();
  };
  if (RunCli("synth --seed 5 --per-class 30 --out " + data.string(), work / "log") != 0 ||
      RunCli("synth --seed 6 --per-class 10 --split test --out " + data.string(),
             work / "log") != 0 ||
      RunCli("train " + d("train") + " --seed 5 --epochs 10 --hidden 32 --out " +
                 (work / "model").string(),
             work / "log") != 0) {
    Report(8, "determinism", false, "setup failed: " + Slurp(work / "log"));
    return;
  }
  const std::string m = "--model " + (work / "model").string() + " " + d("test");
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "synth --seed 9 --per-class 5"},
      {"train", "train " + d("train") + " --seed 3 --epochs 3 --hidden 16"},
      {"influence", "influence " + m + " --cut 4 --qoi class:1 --dist class:1"},
      {"influence-path", "influence " + m + " --cut 0 --qoi comparative:0,2 --dist path:0,3,16"},
      {"expert", "expert " + m + " --split test --cut 7 --class 0 --slack 0.05"},
      {"dropoff", "dropoff " + m + " --cut 7 --count 5 --steps 20"},
      {"explain", "explain " + m + " --index 2 --cut 2 --k 2"},
      {"explain-channel", "explain " + m + " --index 4 --cut 3 --k 2 --granularity channel"},
      {"verify-axioms", "verify-axioms --seed 11 --trials 5"},
  };
  bool pass = true;
  std::string bad;
  for (const auto& [name, args] : commands) {
    std::vector<std::map<std::string, std::size_t>> hashes;
    std::vector<std::string> stdouts;
    for (int run = 0; run < 3; ++run) {
      const fs::path out = work / (name + "_" + std::to_string(run));
      const fs::path log = work / (name + "_" + std::to_string(run) + ".log");
      RunCli(args + " --out " + out.string(), log);
      hashes.push_back(fs::exists(out) ? HashTree(out) : std::map<std::string, std::size_t>{});
      stdouts.push_back(Slurp(log));
    }
    const bool same = !hashes[0].empty() && hashes[0] == hashes[1] &&
                      hashes[0] == hashes[2] && stdouts[0] == stdouts[1] &&
                      stdouts[0] == stdouts[2];
    if (!same) {
      pass = false;
      bad += " " + name;
    }
  }
  Report(8, "determinism", pass,
         std::to_string(commands.size()) + " commands x 3 runs" +
             (bad.empty() ? "" : ", differing:" + bad));
}

// --- 9 ---------------------------------------------------------------------

void RoundTrips(const Network& net, const LabeledDataset& test, const fs::path& work) {
  SaveModel(net, work / "rt_model");
  const Network back = LoadModel(work / "rt_model");
  bool model_ok = true;
  for (const Tensor& x : test.instances) {
    model_ok = model_ok && BitEqual(back.Forward(x), net.Forward(x));
  }

  Rng rng(9);
  double pix_err = 0.0;
  bool decoded = true;
  for (std::size_t channels : {1u, 3u}) {
    const Tensor t = RandomTensor(rng, {channels, 5, 7}, 0.0, 1.0);
    const fs::path p = work / (channels == 1 ? "rt.pgm" : "rt.ppm");
    EmitImage(t, p.string());
    const auto img = pnm::DecodeFile(p.string());
    if (!img || img->channels != channels || img->width != 7 || img->height != 5) {
      decoded = false;
      continue;
    }
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t col = 0; col < 7; ++col)
          pix_err = std::max(pix_err, std::abs(img->at(c, r, col) - t.at(c, r, col)));
  }

  const fs::path fx = DISTINF_TEST_FIXTURES;
  const LabeledDataset idx = LoadIdx(fx / "three-images.idx", fx / "three-labels.idx", "test");
  const std::vector<std::vector<double>> bytes = {
      {0, 255, 0, 255, 128, 64}, {255, 255, 255, 0, 0, 0}, {1, 2, 3, 4, 5, 6}};
  bool idx_ok = idx.size() == 3 && idx.labels == std::vector<std::size_t>{7, 0, 3};
  for (std::size_t n = 0; idx_ok && n < 3; ++n) {
    idx_ok = idx.instances[n].shape() == Shape{1, 2, 3};
    for (std::size_t i = 0; idx_ok && i < 6; ++i) {
      idx_ok = idx.instances[n][i] == bytes[n][i] / 255.0;
    }
  }
  Report(9, "format-round-trips", model_ok && decoded && pix_err <= 1.0 / 255 && idx_ok,
         std::string("model bitwise ") + (model_ok ? "yes" : "no") + ", pnm max err " +
             FormatDouble(pix_err) + ", idx fixtures " + (idx_ok ? "yes" : "no"));
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() /
                        ("distinf_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(work);
  try {
    AxiomSuite();
    GradientOracle();

    std::vector<Trained> runs;
    for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) runs.push_back(TrainSeed(seed));
    const Trained& first = runs.front();
    const Network& model = first.result.network;

    IdentityCompression(model);
    Report(4, "desk-scale-training", first.result.accuracy >= 0.9 && first.seconds < 300.0,
           "seed 1 train accuracy " + FormatDouble(first.result.accuracy) + " in " +
               FormatDouble(first.seconds) + " s");

    std::size_t held5 = 0, held6 = 0;
    for (std::size_t s = 0; s < runs.size(); ++s) {
      const Network& net = runs[s].result.network;
      const DropoffAreas a = Dropoff(net, runs[s].test);
      const bool p5 = DropoffHolds(a);
      held5 += p5;
      std::cout << "  seed " << s + 1 << " dropoff input ind/mean/rand "
                << FormatDouble(a.input_ind) << "/" << FormatDouble(a.input_mean) << "/"
                << FormatDouble(a.input_rand) << " internal ind/mean/rand "
                << FormatDouble(a.internal_ind) << "/" << FormatDouble(a.internal_mean)
                << "/" << FormatDouble(a.internal_rand) << (p5 ? " holds" : " fails") << "\n";
      const ExpertTally t = Experts(net, runs[s].test);
      const bool p6 = t.experts >= 3 && t.beats >= 3;
      held6 += p6;
      std::cout << "  seed " << s + 1 << " experts " << t.experts << "/4 beats " << t.beats
                << "/4" << t.detail << (p6 ? " holds" : " fails") << "\n";
    }
    Report(5, "dropoff-property", held5 >= 4,
           "holds for " + std::to_string(held5) + " of 5 seeds");
    Report(6, "expert-property", held6 >= 4,
           "holds for " + std::to_string(held6) + " of 5 seeds");

    Localization(model, first.test);
    Determinism(work);
    RoundTrips(model, first.test, work);
  } catch (const std::exception& e) {
    std::cout << "acceptance aborted: " << e.what() << std::endl;
    ++failures;
  }
  fs::remove_all(work);
  std::cout << (failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL") << std::endl;
  return failures == 0 ? 0 : 1;
}
