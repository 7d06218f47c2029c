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

// distinf: command-line pipelines over the library. Every command reads its
// inputs from files and flags, writes only under --out, and exits 0 on
// success, 1 on a computation error (the error kind is printed), 2 on usage.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "distinf.hpp"

namespace fs = std::filesystem;
using namespace distinf;

namespace {

// Thrown while turning flags into a run configuration; maps to exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataFlags {
  std::string images, labels, split = "train";
};

void AddData(CLI::App* cmd, DataFlags& d, bool need_split = false) {
  cmd->add_option("--images", d.images, "IDX image file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--labels", d.labels, "IDX label file")
      ->required()
      ->check(CLI::ExistingFile);
  auto* split = cmd->add_option("--split", d.split, "name of the dataset split");
  if (need_split) split->required();
}

LabeledDataset Load(const DataFlags& d) {
  return LoadIdx(d.images, d.labels, d.split);
}

fs::path PrepareOut(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::kIOFailure, "cannot create " + out);
  return fs::path(out);
}

void WriteText(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIOFailure, "cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw Error(ErrorKind::kIOFailure, "write failed: " + path.string());
}

Granularity ParseGranularity(const std::string& s) {
  return s == "channel" ? Granularity::kChannel : Granularity::kNeuron;
}

template <class F>
auto Usage(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

// ---- synth ----------------------------------------------------------------

struct SynthCmd {
  std::uint64_t seed = 0;
  std::size_t per_class = 100, classes = 4;
  std::string split = "train", out;

  void Register(CLI::App& app, std::function<void()>& run) {
    auto* c = app.add_subcommand("synth", "write the synthetic 8x8 dataset as IDX");
    c->add_option("--seed", seed, "generator seed")->required();
    c->add_option("--per-class", per_class, "instances per class");
    c->add_option("--classes", classes, "number of classes (2..8)");
    c->add_option("--split", split, "split name, used as the file prefix");
    c->add_option("--out", out, "output directory")->required();
    c->callback([this, &run] { run = [this] { Run(); }; });
  }

  void Run() const {
    const LabeledDataset ds = SynthDataset(seed, per_class, classes, split);
    const fs::path dir = PrepareOut(out);
    WriteIdx(ds, dir / (split + "-images.idx"), dir / (split + "-labels.idx"));
  }
};

// ---- train ----------------------------------------------------------------

struct TrainCmd {
  DataFlags data;
  std::uint64_t seed = 0;
  std::size_t epochs = 30, batch = 16, hidden = 128;
  double lr = 0.05;
  std::string out;

  void Register(CLI::App& app, std::function<void()>& run) {
    auto* c = app.add_subcommand(
        "train", "train the 2-conv + fc network; writes the model and train_report.csv");
    AddData(c, data);
    c->add_option("--seed", seed, "initialization and shuffling seed")->required();
    c->add_option("--epochs", epochs, "training epochs");
    c->add_option("--lr", lr, "learning rate");
    c->add_option("--batch", batch, "minibatch size");
    c->add_option("--hidden", hidden, "width of the hidden fc layer");
    c->add_option("--out", out, "model output directory")->required();
    c->callback([this, &run] { run = [this] { Run(); }; });
  }

  void Run() const {
    const LabeledDataset ds = Load(data);
    if (ds.empty()) throw Error(ErrorKind::kEmptyBatch, "training set is empty");
    const std::size_t classes =
        std::max<std::size_t>(2, *std::max_element(ds.labels.begin(), ds.labels.end()) + 1);
    const Network init =
        InitializeWeights(ConvNet(ds.instances.front().shape(), classes, hidden), seed);
    const TrainResult r = TrainSgd(init, ds, {epochs, lr, batch, seed});
    const fs::path dir = PrepareOut(out);
    SaveModel(r.network, dir);
    WriteText(dir / "train_report.csv", [&](std::ostream& o) { WriteTrainReport(r, o); });
    std::cout << "train_accuracy=" << FormatDouble(r.accuracy) << '\n';
  }
};

// ---- influence ------------------------------------------------------------

struct InfluenceCmd {
  std::string model, qoi_text, dist_text, granularity = "neuron", out;
  DataFlags data;
  std::size_t cut = 0;

  void Register(CLI::App& app, std::function<void()>& run) {
    auto* c = app.add_subcommand("influence", "distributional influence at a slice");
    c->add_option("--model", model, "model directory")->required()->check(CLI::ExistingDirectory);
    AddData(c, data);
    c->add_option("--cut", cut, "slice boundary (0 = input)")->required();
    c->add_option("--qoi", qoi_text,
                  "class:<i> | comparative:<i>,<j> | unit:<layer>,<flat>, optional @logits")
        ->required();
    c->add_option("--dist", dist_text,
                  "point:<idx> | class:<label> | path:<baseline>,<idx>,<steps>")
        ->required();
    c->add_option("--granularity", granularity, "neuron or channel")
        ->check(CLI::IsMember({"neuron", "channel"}));
    c->add_option("--out", out, "output directory")->required();
    c->callback([this, &run] {
      const QuantityOfInterest q = Usage([&] { return ParseQuantity(qoi_text); });
      const DistributionSpec d = Usage([&] { return ParseDistribution(dist_text); });
      run = [this, q, d] { Run(q, d); };
    });
  }

  void Run(const QuantityOfInterest& q, const DistributionSpec& d) const {
    const Network net = LoadModel(model);
    const LabeledDataset ds = Load(data);
    const Slice slice(net, cut);
    InfluenceVector iv = Influence(slice, q, MakeDistribution(d, ds));
    if (ParseGranularity(granularity) == Granularity::kChannel) iv = ChannelAggregate(iv);
    const fs::path dir = PrepareOut(out);
    WriteText(dir / "influence.csv", [&](std::ostream& o) { WriteInfluenceCsv(iv, o); });
  }
};

// ---- expert ---------------------------------------------------------------

struct ExpertCmd {
  std::string model, alpha_text, beta_text, out;
  DataFlags data;
  std::size_t cut = 0, cls = 0;
  double slack = 0.0;

  void Register(CLI::App& app, std::function<void()>& run) {
    auto* c = app.add_subcommand("expert", "alpha/beta expert sweep for one class");
    c->add_option("--model", model, "model directory")->required()->check(CLI::ExistingDirectory);
    AddData(c, data, /*need_split=*/true);
    c->add_option("--cut", cut, "slice boundary")->required();
    c->add_option("--class", cls, "class to extract")->required();
    c->add_option("--alpha", alpha_text, "comma-separated alpha grid (default: percent ladder)");
    c->add_option("--beta", beta_text, "comma-separated beta grid (default: percent ladder)");
    c->add_option("--slack", slack, "allowed precision loss against the original model")
        ->check(CLI::NonNegativeNumber);
    c->add_option("--out", out, "output directory")->required();
    c->callback([this, &run] {
      std::optional<std::vector<std::size_t>> a, b;
      if (!alpha_text.empty()) a = Usage([&] { return ParseIndexList(alpha_text); });
      if (!beta_text.empty()) b = Usage([&] { return ParseIndexList(beta_text); });
      run = [this, a, b] { Run(a, b); };
    });
  }

  static void Row(std::ostream& o, const std::string& source, std::size_t a,
                  std::size_t b, const BinaryMetrics& m) {
    o << source << ',' << a << ',' << b << ',' << FormatDouble(m.precision) << ','
      << FormatDouble(m.recall) << ',' << FormatDouble(m.f1) << '\n';
  }

  void Run(const std::optional<std::vector<std::size_t>>& a,
           const std::optional<std::vector<std::size_t>>& b) const {
    const Network net = LoadModel(model);
    const LabeledDataset ds = Load(data);
    const Slice slice(net, cut);
    const auto grid = DefaultSweepGrid(slice.unit_count());
    const SweepResult r = ExpertSweep(slice, cls, ds, a.value_or(grid), b.value_or(grid), slack);
    const fs::path dir = PrepareOut(out);
    WriteText(dir / "sweep.csv", [&](std::ostream& o) { WriteSweepCsv(r, o); });
    if (!r.best) {
      throw Error(ErrorKind::kNoFeasibleExpert,
                  "no grid cell reaches precision " + FormatDouble(r.precision_floor));
    }
    const SweepCell& best = r.grid[*r.best];
    WriteText(dir / "mask.txt", [&](std::ostream& o) { WriteMask(best.mask, o); });
    const ExpertMask act = BuildMaskActivation(
        slice, Empirical::Uniform(ds.OfClass(cls)), best.mask.alpha + best.mask.beta);
    const BinaryMetrics am = EvaluateMask(slice, act, cls, ds);
    WriteText(dir / "comparison.csv", [&](std::ostream& o) {
      o << "# split=" << ds.split << ";class=" << cls << ";cut=" << cut << '\n';
      o << "source,alpha,beta,precision,recall,f1\n";
      Row(o, "original", 0, 0, r.original);
      Row(o, "influence", best.mask.alpha, best.mask.beta, best.metrics);
      Row(o, "activation", act.alpha, act.beta, am);
    });
  }
};

// ---- dropoff --------------------------------------------------------------

struct DropoffCmd {
  std::string model, out;
  DataFlags data;
  std::size_t cut = 0, count = 20, steps = 100;

  void Register(CLI::App& app, std::function<void()>& run) {
    auto* c = app.add_subcommand(
        "dropoff", "input and internal dropoff curves, individual and mean rankings");
    c->add_option("--model", model, "model directory")->required()->check(CLI::ExistingDirectory);
    AddData(c, data);
    c->add_option("--cut", cut, "internal slice boundary (> 0)")->required();
    c->add_option("--count", count, "correctly classified instances to use, in dataset order");
    c->add_option("--steps", steps, "fraction grid resolution")->check(CLI::PositiveNumber);
    c->add_option("--out", out, "output directory")->required();
    c->callback([this, &run] { run = [this] { Run(); }; });
  }

  void Run() const {
    const Network net = LoadModel(model);
    const LabeledDataset ds = Load(data);
    std::vector<Tensor> chosen;
    for (std::size_t n = 0; n < ds.size() && chosen.size() < count; ++n) {
      if (PredictClass(net, ds.instances[n]) == ds.labels[n]) chosen.push_back(ds.instances[n]);
    }
    DropoffOptions opt;
    opt.fractions = UniformFractions(steps);
    const Slice input(net, 0), internal(net, cut);
    std::vector<DropoffCurve> curves;
    for (RankingKind rk : {RankingKind::kIndividual, RankingKind::kMean}) {
      curves.push_back(ComputeDropoffCurve(input, DropoffMode::kInput, rk, chosen, opt));
      curves.push_back(ComputeDropoffCurve(internal, DropoffMode::kInternal, rk, chosen, opt));
    }
    const fs::path dir = PrepareOut(out);
    for (const DropoffCurve& c : curves) {
      const std::string name =
          "dropoff_" + DropoffModeName(c.mode) + "_" + RankingName(c.ranking) + ".csv";
      WriteText(dir / name, [&](std::ostream& o) { WriteCurveCsv(c, o); });
    }
    WriteText(dir / "dropoff.dat", [&](std::ostream& o) { WriteCurvesGnuplot(curves, o); });
    WriteText(dir / "areas.csv", [&](std::ostream& o) {
      o << "mode,ranking,area\n";
      for (const DropoffCurve& c : curves) {
        o << DropoffModeName(c.mode) << ',' << RankingName(c.ranking) << ','
          << FormatDouble(CurveArea(c)) << '\n';
      }
    });
  }
};

// ---- explain --------------------------------------------------------------

struct ExplainCmd {
  std::string model, qoi_text, granularity = "neuron", scaling = "summed", out;
  DataFlags data;
  std::size_t cut = 0, index = 0, k = 2;

  void Register(CLI::App& app, std::function<void()>& run) {
    auto* c = app.add_subcommand("explain", "top units for one instance with pixel interpretations");
    c->add_option("--model", model, "model directory")->required()->check(CLI::ExistingDirectory);
    AddData(c, data);
    c->add_option("--index", index, "instance index in the dataset")->required();
    c->add_option("--cut", cut, "slice boundary (> 0)")->required();
    c->add_option("--k", k, "number of units")->check(CLI::PositiveNumber);
    c->add_option("--qoi", qoi_text,
                  "class:<i> or comparative:<i>,<j> (default: class of the prediction)");
    c->add_option("--granularity", granularity, "neuron or channel")
        ->check(CLI::IsMember({"neuron", "channel"}));
    c->add_option("--scaling", scaling, "summed or per-channel")
        ->check(CLI::IsMember({"summed", "per-channel"}));
    c->add_option("--out", out, "output directory")->required();
    c->callback([this, &run] {
      std::optional<QuantityOfInterest> q;
      if (!qoi_text.empty()) q = Usage([&] { return ParseQuantity(qoi_text); });
      run = [this, q] { Run(q); };
    });
  }

  void Run(std::optional<QuantityOfInterest> q) const {
    const Network net = LoadModel(model);
    const LabeledDataset ds = Load(data);
    if (index >= ds.size()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "instance " + std::to_string(index) + " outside dataset");
    }
    const Tensor& x = ds.instances[index];
    if (!q) q = QuantityOfInterest::Class(PredictClass(net, x));
    const Explanation e =
        ExplainWith(net, cut, x, *q, k, ParseGranularity(granularity),
                    scaling == "summed" ? ChannelScaling::kSummed : ChannelScaling::kPerChannel);
    const fs::path dir = PrepareOut(out);
    WriteText(dir / "top_units.csv", [&](std::ostream& o) {
      o << "# qoi=" << QuantityToString(e.qoi) << ";cut=" << cut
        << ";instance=" << index << ";granularity=" << granularity << '\n';
      o << "rank,index,neuron,influence,image\n";
      for (std::size_t n = 0; n < e.top_units.size(); ++n) {
        const Tensor& img = e.interpretations[n];
        const std::string file =
            "unit_" + std::to_string(n) + (img.shape()[0] == 3 ? ".ppm" : ".pgm");
        EmitImage(img, (dir / file).string());
        const RankedUnit& u = e.top_units[n];
        o << n << ',' << u.index << ',' << u.neuron << ',' << FormatDouble(u.influence)
          << ',' << file << '\n';
      }
    });
  }
};

// ---- verify-axioms --------------------------------------------------------

struct VerifyCmd {
  std::uint64_t seed = 0;
  std::size_t trials = 50;
  std::string out;
  bool* all_pass = nullptr;

  void Register(CLI::App& app, std::function<void()>& run, bool& pass) {
    all_pass = &pass;
    auto* c = app.add_subcommand("verify-axioms", "numerical checks of the influence axioms");
    c->add_option("--seed", seed, "construction seed")->required();
    c->add_option("--trials", trials, "trials per axiom")->check(CLI::PositiveNumber);
    c->add_option("--out", out, "optional directory for axioms.txt");
    c->callback([this, &run] { run = [this] { Run(); }; });
  }

  void Run() const {
    std::string text;
    for (const AxiomReport& r : CheckAllAxioms(trials, seed)) {
      text += FormatReport(r) + '\n';
      if (!r.pass) *all_pass = false;
    }
    std::cout << text;
    if (!out.empty()) {
      const fs::path dir = PrepareOut(out);
      WriteText(dir / "axioms.txt", [&](std::ostream& o) { o << text; });
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distinf: distributional influence over network slices"};
  app.require_subcommand(1);
  std::function<void()> run;
  bool all_pass = true;

  SynthCmd synth;
  TrainCmd train;
  InfluenceCmd influence;
  ExpertCmd expert;
  DropoffCmd dropoff;
  ExplainCmd explain;
  VerifyCmd verify;
  synth.Register(app, run);
  train.Register(app, run);
  influence.Register(app, run);
  expert.Register(app, run);
  dropoff.Register(app, run);
  explain.Register(app, run);
  verify.Register(app, run, all_pass);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    run();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return all_pass ? 0 : 1;
}
