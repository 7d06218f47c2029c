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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "distinf/influence.hpp"
#include "distinf/network.hpp"
#include "distinf/random.hpp"
#include "distinf/text.hpp"

namespace distinf {

// Central differences of a scalar function, one coordinate at a time.
inline Tensor FiniteDiffGradient(const std::function<double(const Tensor&)>& fn,
                                 const Tensor& x, double step = 1e-5) {
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double up = fn(probe);
    probe[i] = x[i] - step;
    const double down = fn(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Random networks and distributions.

enum class Activation { kSigmoid, kReLU };

inline Layer ActivationLayer(Activation a) {
  return a == Activation::kSigmoid ? Layer{Sigmoid{}} : Layer{ReLU{}};
}

inline Tensor RandomTensor(Rng& rng, Shape shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.Uniform(lo, hi);
  return t;
}

inline Dense RandomDense(Rng& rng, std::size_t in, std::size_t out) {
  return {RandomTensor(rng, {out, in}, -1.0, 1.0),
          RandomTensor(rng, {out}, -0.5, 0.5)};
}

// dense(hidden) act dense(hidden2) act dense(classes) softmax.
inline Network RandomMlp(Rng& rng, std::size_t inputs, std::size_t classes,
                         Activation act = Activation::kSigmoid) {
  const std::size_t h1 = 2 + rng.Below(5);
  const std::size_t h2 = 2 + rng.Below(5);
  return Network({inputs}, {RandomDense(rng, inputs, h1), ActivationLayer(act),
                            RandomDense(rng, h1, h2), ActivationLayer(act),
                            RandomDense(rng, h2, classes), Softmax{}});
}

// conv3x3 act [maxpool2x2] conv2x2 act flatten dense(classes) softmax over a
// random 1..2 x H x W input with H, W in 6..8.
inline Network RandomConvNet(Rng& rng, std::size_t classes,
                             Activation act = Activation::kReLU,
                             bool with_pool = true) {
  const std::size_t c = 1 + rng.Below(2);
  const Shape input{c, 6 + rng.Below(3), 6 + rng.Below(3)};
  const std::size_t c1 = 2 + rng.Below(2), c2 = 2 + rng.Below(2);
  std::vector<Layer> layers = {
      Conv2D{RandomTensor(rng, {c1, c, 3, 3}, -1.0, 1.0),
             RandomTensor(rng, {c1}, -0.3, 0.3), 1},
      ActivationLayer(act)};
  if (with_pool) layers.push_back(MaxPool2D{2, 2});
  layers.push_back(Conv2D{RandomTensor(rng, {c2, c1, 2, 2}, -1.0, 1.0),
                          RandomTensor(rng, {c2}, -0.3, 0.3), 1});
  layers.push_back(ActivationLayer(act));
  layers.push_back(Flatten{});
  Shape s = input;
  for (const Layer& l : layers) s = OutputShape(l, s);
  layers.push_back(RandomDense(rng, s[0], classes));
  layers.push_back(Softmax{});
  return Network(input, std::move(layers));
}

// True when some ReLU preactivation is within `margin` of 0 or some pooling
// window's two largest entries are within `margin`, i.e. where finite
// differences straddle a kink.
inline bool NearKink(const Network& net, const Tensor& x, double margin = 1e-3) {
  const std::vector<Tensor> acts = net.ForwardRecorded(x);
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    const Layer& layer = net.layers()[k];
    const Tensor& in = acts[k];
    if (std::holds_alternative<ReLU>(layer)) {
      for (double v : in.values())
        if (std::abs(v) < margin) return true;
    } else if (const auto* p = std::get_if<MaxPool2D>(&layer)) {
      const Shape& out = net.activation_shape(k + 1);
      for (std::size_t ch = 0; ch < out[0]; ++ch)
        for (std::size_t r = 0; r < out[1]; ++r)
          for (std::size_t col = 0; col < out[2]; ++col) {
            std::vector<double> w;
            for (std::size_t a = 0; a < p->window; ++a)
              for (std::size_t b = 0; b < p->window; ++b)
                w.push_back(in.at(ch, r * p->stride + a, col * p->stride + b));
            std::sort(w.rbegin(), w.rend());
            if (w.size() > 1 && w[0] - w[1] < margin) return true;
          }
    }
  }
  return false;
}

inline Empirical RandomEmpirical(Rng& rng, const Shape& shape, std::size_t n,
                                 double lo = -1.0, double hi = 1.0) {
  Empirical e;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    e.instances.push_back(RandomTensor(rng, shape, lo, hi));
    e.weights.push_back(rng.Uniform(0.1, 1.0));
    total += e.weights.back();
  }
  for (double& w : e.weights) w /= total;
  return e;
}

// Points at which a distribution's expectation evaluates its field.
inline std::vector<Tensor> SupportPoints(const DistributionOfInterest& dist) {
  return std::visit(
      [](const auto& d) -> std::vector<Tensor> {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return {d.x};
        } else if constexpr (std::is_same_v<T, Empirical>) {
          return d.instances;
        } else if constexpr (std::is_same_v<T, LinearPath>) {
          std::vector<Tensor> pts;
          const Tensor delta = d.target - d.baseline;
          for (std::size_t k = 1; k <= d.steps; ++k) {
            Tensor p = d.baseline;
            Axpy(static_cast<double>(k) / static_cast<double>(d.steps), delta, p);
            pts.push_back(std::move(p));
          }
          return pts;
        } else {
          std::vector<Tensor> pts;
          for (const auto& c : d.components) {
            for (Tensor& p : SupportPoints(*c.dist)) pts.push_back(std::move(p));
          }
          return pts;
        }
      },
      dist.variant());
}

// One of: empirical, linear path, or a two-part mixture of those.
inline DistributionOfInterest RandomDistribution(Rng& rng, const Shape& shape) {
  switch (rng.Below(3)) {
    case 0:
      return RandomEmpirical(rng, shape, 1 + rng.Below(5));
    case 1:
      return LinearPath{RandomTensor(rng, shape, -1.0, 1.0),
                        RandomTensor(rng, shape, -1.0, 1.0), 1 + rng.Below(6)};
    default: {
      const double a = rng.Uniform(0.1, 0.9);
      return DistributionOfInterest::Mix(
          {{a, RandomEmpirical(rng, shape, 1 + rng.Below(3))},
           {1.0 - a, LinearPath{RandomTensor(rng, shape, -1.0, 1.0),
                                RandomTensor(rng, shape, -1.0, 1.0),
                                1 + rng.Below(4)}}});
    }
  }
}

// ---------------------------------------------------------------------------
// Axiom checks.

enum class AxiomId {
  kLinearAgreement,
  kDistributionalMarginality,
  kDistributionLinearity,
  kSliceInvariance,
  kPreprocessing,
  kPushforwardLemma,
};

inline std::string AxiomName(AxiomId id) {
  switch (id) {
    case AxiomId::kLinearAgreement: return "LinearAgreement";
    case AxiomId::kDistributionalMarginality: return "DistributionalMarginality";
    case AxiomId::kDistributionLinearity: return "DistributionLinearity";
    case AxiomId::kSliceInvariance: return "SliceInvariance";
    case AxiomId::kPreprocessing: return "Preprocessing";
    case AxiomId::kPushforwardLemma: return "PushforwardLemma";
  }
  return "";
}

struct AxiomReport {
  AxiomId id = AxiomId::kLinearAgreement;
  std::size_t trials = 0;
  double max_abs_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline std::string FormatReport(const AxiomReport& r) {
  return "AXIOM " + AxiomName(r.id) + " trials=" + std::to_string(r.trials) +
         " max_err=" + FormatDouble(r.max_abs_error) +
         " tol=" + FormatDouble(r.tolerance) + (r.pass ? " PASS" : " FAIL");
}

namespace detail {

inline AxiomReport Finish(AxiomId id, std::size_t trials, double err, double tol) {
  return {id, trials, err, tol, err <= tol};
}

inline void RequireTrials(std::size_t trials) {
  if (trials == 0) throw Error(ErrorKind::kInvalidArgument, "trials must be >= 1");
}

}  // namespace detail

inline constexpr double kExactSumTolerance = 1e-10;
inline constexpr double kMarginalityTolerance = 1e-8;
inline constexpr double kSliceTolerance = 1e-9;

// f(x) = sum_i alpha_i x_i, read as a logit: influence must equal alpha
// under every distribution.
inline AxiomReport CheckLinearAgreement(std::size_t trials, std::uint64_t seed) {
  detail::RequireTrials(trials);
  Rng rng(seed);
  double err = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t d = 1 + rng.Below(6);
    Tensor alpha = RandomTensor(rng, {1, d}, -3.0, 3.0);
    if (t == 0) alpha = Tensor({1, d});  // all-zero coefficients
    const Network net({d}, {Dense{alpha, Tensor({1})}, Softmax{}});
    const auto dist = RandomDistribution(rng, {d});
    const Tensor chi = Influence(Slice(net, 0),
                                 QuantityOfInterest::Class(0).Logits(), dist)
                           .values;
    err = std::max(err, MaxAbsDiff(chi, alpha.Reshaped({d})));
  }
  return detail::Finish(AxiomId::kLinearAgreement, trials, err, kExactSumTolerance);
}

// chi(f, a P1 + (1-a) P2) against a chi(f, P1) + (1-a) chi(f, P2).
inline AxiomReport CheckDistributionLinearity(std::size_t trials,
                                              std::uint64_t seed) {
  detail::RequireTrials(trials);
  Rng rng(seed);
  double err = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const bool conv = t % 2 == 1;
    const Network net = conv ? RandomConvNet(rng, 3, Activation::kSigmoid, false)
                             : RandomMlp(rng, 1 + rng.Below(5), 3);
    const Slice slice(net, rng.Below(net.layer_count() - 1));
    const auto qoi = QuantityOfInterest::Class(rng.Below(3));
    const auto p1 = RandomDistribution(rng, net.input_shape());
    const auto p2 = RandomDistribution(rng, net.input_shape());
    const double a = t == 0 ? 1.0 : rng.Uniform(0.01, 0.99);
    const Tensor mixed =
        Influence(slice, qoi, DistributionOfInterest::Mix({{a, p1}, {1.0 - a, p2}}))
            .values;
    Tensor expected = a * Influence(slice, qoi, p1).values;
    Axpy(1.0 - a, Influence(slice, qoi, p2).values, expected);
    err = std::max(err, MaxAbsDiff(mixed, expected));
  }
  return detail::Finish(AxiomId::kDistributionLinearity, trials, err,
                        kExactSumTolerance);
}

// f2 = f1 + c (prod_k (x_{s_k} - p^k_{s_k}))^2 + c' sin(x_j), j != i, where
// p^k are the support points: the squared product and its gradient vanish on
// the support and sin(x_j) never moves d/dx_i, so d f1/dx_i == d f2/dx_i on
// the support while f1 != f2 elsewhere. chi_i must agree.
inline AxiomReport CheckDistributionalMarginality(std::size_t trials,
                                                  std::uint64_t seed,
                                                  Activation act = Activation::kSigmoid) {
  detail::RequireTrials(trials);
  Rng rng(seed);
  double err = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t d = 2 + rng.Below(4);
    const Network net = RandomMlp(rng, d, 3, act);
    const Slice slice(net, 0);
    const auto qoi = QuantityOfInterest::Class(rng.Below(3));
    const auto dist = RandomDistribution(rng, {d});
    const std::vector<Tensor> support = SupportPoints(dist);
    std::vector<std::size_t> coord;
    for (std::size_t k = 0; k < support.size(); ++k) coord.push_back(rng.Below(d));
    const double c = t == 0 ? 0.0 : rng.Uniform(-2.0, 2.0);
    const double c_sin = t == 0 ? 0.0 : rng.Uniform(-2.0, 2.0);
    const std::size_t i = rng.Below(d);
    const std::size_t j = (i + 1 + rng.Below(d - 1)) % d;

    auto grad_f1 = [&](const Tensor& x) { return SliceGradient(slice, qoi, x); };
    auto grad_f2 = [&](const Tensor& x) {
      Tensor g = SliceGradient(slice, qoi, x);
      // d/dx of c * P^2 is 2 c P dP/dx.
      std::vector<double> factors;
      double prod = 1.0;
      for (std::size_t k = 0; k < support.size(); ++k) {
        factors.push_back(x[coord[k]] - support[k][coord[k]]);
        prod *= factors.back();
      }
      for (std::size_t k = 0; k < support.size(); ++k) {
        double others = 1.0;
        for (std::size_t m = 0; m < support.size(); ++m)
          if (m != k) others *= factors[m];
        g[coord[k]] += 2.0 * c * prod * others;
      }
      g[j] += c_sin * std::cos(x[j]);
      return g;
    };
    const Tensor chi1 = Expectation(grad_f1, dist, {d});
    const Tensor chi2 = Expectation(grad_f2, dist, {d});
    err = std::max(err, std::abs(chi1[i] - chi2[i]));

    // Network form: one hidden layer, and f2 adds a hidden unit that reads
    // only x_j and feeds the read logit, so d/dx_i agrees everywhere.
    const std::size_t h = 2 + rng.Below(4);
    const std::size_t cls = rng.Below(3);
    const Dense in = RandomDense(rng, d, h), out = RandomDense(rng, h, 3);
    Dense in2{Tensor({h + 1, d}), Tensor({h + 1})};
    Dense out2{Tensor({3, h + 1}), out.bias};
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t k = 0; k < d; ++k) in2.weights[r * d + k] = in.weights[r * d + k];
      in2.bias[r] = in.bias[r];
    }
    in2.weights[h * d + j] = rng.Uniform(-2.0, 2.0);
    in2.bias[h] = rng.Uniform(-0.5, 0.5);
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t k = 0; k < h; ++k) out2.weights[r * (h + 1) + k] = out.weights[r * h + k];
    }
    out2.weights[cls * (h + 1) + h] = c_sin == 0.0 ? 1.0 : c_sin;
    const Network n1({d}, {in, ActivationLayer(act), out, Softmax{}});
    const Network n2({d}, {in2, ActivationLayer(act), out2, Softmax{}});
    const auto logit = QuantityOfInterest::Class(cls).Logits();
    const Tensor a = Influence(Slice(n1, 0), logit, dist).values;
    const Tensor b = Influence(Slice(n2, 0), logit, dist).values;
    err = std::max(err, std::abs(a[i] - b[i]));
  }
  return detail::Finish(AxiomId::kDistributionalMarginality, trials, err,
                        kMarginalityTolerance);
}

// Two j-equivalent slicings of one function: the second permutes and rescales
// every coordinate of Z except j, and g undoes it in its first dense layer.
inline AxiomReport CheckSliceInvariance(std::size_t trials, std::uint64_t seed) {
  detail::RequireTrials(trials);
  Rng rng(seed);
  double err = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t d = 1 + rng.Below(5);
    const Network f1 = RandomMlp(rng, d, 3);
    const auto& first = std::get<Dense>(f1.layers()[0]);
    const auto& second = std::get<Dense>(f1.layers()[2]);
    const std::size_t width = first.out_features();
    const std::size_t j = rng.Below(width);

    std::vector<std::size_t> perm;  // z2_k = scale_k * z1_{perm_k}
    for (std::size_t k = 0; k < width; ++k)
      if (k != j) perm.push_back(k);
    if (t % 3 != 0) rng.Shuffle(perm);
    perm.insert(perm.begin() + static_cast<std::ptrdiff_t>(j), j);
    std::vector<double> scale(width, 1.0);
    for (std::size_t k = 0; k < width; ++k)
      if (k != j && t % 3 != 1) scale[k] = rng.Uniform(0.5, 2.0);

    Dense h_first{Tensor(first.weights.shape()), Tensor(first.bias.shape())};
    Dense diag{Tensor({width, width}), Tensor({width})};
    Dense g_first{Tensor(second.weights.shape()), second.bias};
    for (std::size_t k = 0; k < width; ++k) {
      for (std::size_t m = 0; m < d; ++m)
        h_first.weights[k * d + m] = first.weights[perm[k] * d + m];
      h_first.bias[k] = first.bias[perm[k]];
      diag.weights[k * width + k] = scale[k];
      for (std::size_t o = 0; o < second.out_features(); ++o)
        g_first.weights[o * width + k] = second.weights[o * width + perm[k]] / scale[k];
    }
    const Network f2({d}, {h_first, Sigmoid{}, diag, g_first, Sigmoid{},
                           f1.layers()[4], Softmax{}});
    const auto qoi = QuantityOfInterest::Class(rng.Below(3));
    const auto dist = RandomDistribution(rng, {d});
    const double chi1 = Influence(Slice(f1, 2), qoi, dist).values[j];
    const double chi2 = Influence(Slice(f2, 3), qoi, dist).values[j];
    err = std::max(err, std::abs(chi1 - chi2));
  }
  return detail::Finish(AxiomId::kSliceInvariance, trials, err, kSliceTolerance);
}

// x_i = a . x_{-i} + b on the support. Input influence of x_i in f1 against
// the slice influence of the neuron computing it inside
// f2(x_{-i}) = f1(x_{-i}, a . x_{-i} + b).
inline AxiomReport CheckPreprocessing(std::size_t trials, std::uint64_t seed) {
  detail::RequireTrials(trials);
  Rng rng(seed);
  double err = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t d = 2 + rng.Below(4);
    const std::size_t i = rng.Below(d);
    Network f1 = RandomMlp(rng, d, 3);
    std::vector<double> a(d - 1, 0.0);
    double b = 0.0;
    if (t % 3 == 0) {
      a[rng.Below(d - 1)] = 1.0;  // duplicate of another input
    } else if (t % 3 == 1) {
      b = rng.Uniform(-1.0, 1.0);  // constant feature that f1 ignores
      std::vector<Layer> layers = f1.layers();
      auto& w = std::get<Dense>(layers[0]).weights;
      const std::size_t rows = w.shape()[0];
      for (std::size_t r = 0; r < rows; ++r) w[r * d + i] = 0.0;
      f1 = Network({d}, std::move(layers));
    } else {
      for (double& v : a) v = rng.Uniform(-1.0, 1.0);
      b = rng.Uniform(-1.0, 1.0);
    }

    // Support of P over x_{-i}, lifted to full x for f1.
    const std::size_t n = 1 + rng.Below(5);
    Empirical reduced = RandomEmpirical(rng, {d - 1}, n);
    Empirical full{{}, reduced.weights};
    for (const Tensor& xr : reduced.instances) {
      Tensor x({d});
      double feature = b;
      for (std::size_t m = 0, r = 0; m < d; ++m) {
        if (m == i) continue;
        x[m] = xr[r];
        feature += a[r] * xr[r];
        ++r;
      }
      x[i] = feature;
      full.instances.push_back(std::move(x));
    }

    Dense lift{Tensor({d, d - 1}), Tensor({d})};
    for (std::size_t m = 0, r = 0; m < d; ++m) {
      if (m == i) {
        for (std::size_t q = 0; q < d - 1; ++q) lift.weights[m * (d - 1) + q] = a[q];
        lift.bias[m] = b;
      } else {
        lift.weights[m * (d - 1) + r] = 1.0;
        ++r;
      }
    }
    std::vector<Layer> layers2 = {lift};
    layers2.insert(layers2.end(), f1.layers().begin(), f1.layers().end());
    const Network f2({d - 1}, std::move(layers2));

    const auto qoi = QuantityOfInterest::Class(rng.Below(3));
    const double input_chi = Influence(Slice(f1, 0), qoi, full).values[i];
    const double slice_chi = Influence(Slice(f2, 1), qoi, reduced).values[i];
    err = std::max(err, std::abs(input_chi - slice_chi));
  }
  return detail::Finish(AxiomId::kPreprocessing, trials, err, kSliceTolerance);
}

// Slice influence under P_X against input influence of g under the pushforward
// P_Z = {h(x)} with the same weights.
inline AxiomReport CheckPushforward(std::size_t trials, std::uint64_t seed) {
  detail::RequireTrials(trials);
  Rng rng(seed);
  double err = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const Network net = t % 2 ? RandomConvNet(rng, 3, Activation::kReLU, true)
                              : RandomMlp(rng, 1 + rng.Below(5), 3);
    const std::size_t cut = rng.Below(net.layer_count() - 1);
    const Slice slice(net, cut);
    const auto qoi = QuantityOfInterest::Class(rng.Below(3));
    const Empirical px = t == 0
        ? Empirical{{RandomTensor(rng, net.input_shape(), -1.0, 1.0)}, {1.0}}
        : RandomEmpirical(rng, net.input_shape(), 1 + rng.Below(6));
    Empirical pz{{}, px.weights};
    for (const Tensor& x : px.instances) pz.instances.push_back(slice.H(x));
    const Network g = net.Tail(cut);
    const Tensor via_input = Influence(slice, qoi, px).values;
    const Tensor via_slice = Influence(Slice(g, 0), qoi, pz).values;
    err = std::max(err, MaxAbsDiff(via_input, via_slice));
  }
  return detail::Finish(AxiomId::kPushforwardLemma, trials, err,
                        kExactSumTolerance);
}

// All six checks; each uses its own seed derived from `seed`.
inline std::vector<AxiomReport> CheckAllAxioms(std::size_t trials,
                                               std::uint64_t seed) {
  return {CheckLinearAgreement(trials, seed),
          CheckDistributionLinearity(trials, seed + 1),
          CheckDistributionalMarginality(trials, seed + 2),
          CheckSliceInvariance(trials, seed + 3),
          CheckPreprocessing(trials, seed + 4),
          CheckPushforward(trials, seed + 5)};
}

}  // namespace distinf
