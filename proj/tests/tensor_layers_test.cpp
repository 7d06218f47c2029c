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

#include <cmath>
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "distinf.hpp"
#include "test_util.hpp"

namespace distinf {
namespace {

using testing::FdLayerGradient;
using testing::KindOf;
using testing::RelErr;

TEST(TensorTest, RejectsZeroDimsAndBadData) {
  EXPECT_EQ(KindOf([] { Tensor t({2, 0}); }), ErrorKind::kShapeMismatch);
  EXPECT_EQ(KindOf([] { Tensor t({2}, {1.0, 2.0, 3.0}); }), ErrorKind::kShapeMismatch);
  EXPECT_EQ(KindOf([] { Tensor::Vector({1.0}).Reshaped({2}); }), ErrorKind::kShapeMismatch);
}

TEST(TensorTest, ArithmeticChecksShapes) {
  const Tensor a = Tensor::Vector({1.0, 2.0});
  const Tensor b = Tensor::Vector({3.0, 5.0});
  EXPECT_EQ(a + b, Tensor::Vector({4.0, 7.0}));
  EXPECT_EQ(b - a, Tensor::Vector({2.0, 3.0}));
  EXPECT_EQ(Hadamard(a, b), Tensor::Vector({3.0, 10.0}));
  EXPECT_EQ(2.0 * a, Tensor::Vector({2.0, 4.0}));
  EXPECT_EQ(KindOf([&] { return a + Tensor::Vector({1.0}); }), ErrorKind::kShapeMismatch);
}

TEST(TensorTest, RowMajorChannelIndexing) {
  Tensor t({2, 2, 3});
  t.at(1, 0, 2) = 7.0;
  EXPECT_EQ(t[1 * 6 + 0 * 3 + 2], 7.0);
}

TEST(LayerForwardTest, ReluClampsNegatives) {
  EXPECT_EQ(LayerForward(ReLU{}, Tensor::Vector({-1.0, 0.0, 2.0})),
            Tensor::Vector({0.0, 0.0, 2.0}));
}

TEST(LayerForwardTest, SoftmaxOfEqualLogitsIsUniform) {
  EXPECT_EQ(LayerForward(Softmax{}, Tensor::Vector({0.0, 0.0})),
            Tensor::Vector({0.5, 0.5}));
}

TEST(LayerForwardTest, DenseHandProduct) {
  const Dense d{Tensor({2, 2}, {1, 2, 3, 4}), Tensor::Vector({0, 0})};
  EXPECT_EQ(LayerForward(d, Tensor::Vector({1.0, 1.0})), Tensor::Vector({3.0, 7.0}));
}

TEST(LayerForwardTest, ConvValidPaddingHandValue) {
  // 1x3x3 ramp, one 2x2 kernel of ones: each output sums a 2x2 window.
  const Conv2D c{Tensor::Filled({1, 1, 2, 2}, 1.0), Tensor::Vector({0.5}), 1};
  const Tensor x({1, 3, 3}, {0, 1, 2, 3, 4, 5, 6, 7, 8});
  EXPECT_EQ(LayerForward(c, x), Tensor({1, 2, 2}, {8.5, 12.5, 20.5, 24.5}));
  const Conv2D strided{c.kernels, c.bias, 2};
  EXPECT_EQ(LayerForward(strided, x), Tensor({1, 1, 1}, {8.5}));
}

TEST(LayerForwardTest, MaxPoolPicksWindowMaximum) {
  const Tensor x({1, 2, 4}, {1, 5, 2, 0, 3, 4, 9, 8});
  EXPECT_EQ(LayerForward(MaxPool2D{2, 2}, x), Tensor({1, 1, 2}, {5, 9}));
}

TEST(LayerForwardTest, ShapeMismatchNamesBothShapes) {
  const Dense d{Tensor({2, 3}), Tensor({2})};
  try {
    LayerForward(d, Tensor::Vector({1.0, 2.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShapeMismatch);
    EXPECT_NE(std::string(e.what()).find("[3]"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("[2]"), std::string::npos) << e.what();
  }
}

TEST(LayerForwardTest, NonFiniteInputRejected) {
  EXPECT_EQ(KindOf([] { LayerForward(ReLU{}, Tensor::Vector({NAN})); }),
            ErrorKind::kNonFinite);
}

TEST(LayerBackwardTest, SoftmaxAtEqualLogits) {
  EXPECT_EQ(LayerBackward(Softmax{}, Tensor::Vector({0.0, 0.0}),
                          Tensor::Vector({1.0, 0.0})),
            Tensor::Vector({0.25, -0.25}));
}

TEST(LayerBackwardTest, ReluMasksNegativeInputs) {
  EXPECT_EQ(LayerBackward(ReLU{}, Tensor::Vector({-1.0, 2.0}),
                          Tensor::Vector({5.0, 5.0})),
            Tensor::Vector({0.0, 5.0}));
  // The derivative at exactly zero is taken as zero.
  EXPECT_EQ(LayerBackward(ReLU{}, Tensor::Vector({0.0}), Tensor::Vector({1.0})),
            Tensor::Vector({0.0}));
}

TEST(LayerBackwardTest, MaxPoolTieGoesToFirstIndex) {
  const Tensor x({1, 2, 2}, {3, 3, 3, 3});
  EXPECT_EQ(LayerBackward(MaxPool2D{2, 2}, x, Tensor({1, 1, 1}, {1.0})),
            Tensor({1, 2, 2}, {1, 0, 0, 0}));
}

TEST(LayerBackwardTest, UpstreamShapeChecked) {
  EXPECT_EQ(KindOf([] {
              LayerBackward(ReLU{}, Tensor::Vector({1.0, 2.0}), Tensor::Vector({1.0}));
            }),
            ErrorKind::kShapeMismatch);
}

// Random layer of each kind paired with an input generator that stays away
// from that layer's kinks.
struct LayerCase {
  const char* name;
  std::function<Layer(Rng&)> make;
  std::function<Tensor(Rng&, const Layer&)> input;
};

bool PoolTied(const MaxPool2D& p, const Tensor& x) {
  const Shape out = OutputShape(p, x.shape());
  for (std::size_t ch = 0; ch < out[0]; ++ch)
    for (std::size_t r = 0; r < out[1]; ++r)
      for (std::size_t c = 0; c < out[2]; ++c) {
        std::vector<double> w;
        for (std::size_t a = 0; a < p.window; ++a)
          for (std::size_t b = 0; b < p.window; ++b)
            w.push_back(x.at(ch, r * p.stride + a, c * p.stride + b));
        std::sort(w.rbegin(), w.rend());
        if (w[0] - w[1] < 1e-3) return true;
      }
  return false;
}

std::vector<LayerCase> LayerCases() {
  auto any = [](Shape s) {
    return [s](Rng& rng, const Layer&) { return RandomTensor(rng, s, -2.0, 2.0); };
  };
  return {
      {"dense", [](Rng& rng) -> Layer { return RandomDense(rng, 5, 3); }, any({5})},
      {"conv", [](Rng& rng) -> Layer {
         return Conv2D{RandomTensor(rng, {3, 2, 3, 2}, -1, 1), RandomTensor(rng, {3}, -1, 1), 1};
       }, any({2, 5, 6})},
      {"conv_stride2", [](Rng& rng) -> Layer {
         return Conv2D{RandomTensor(rng, {2, 1, 2, 2}, -1, 1), RandomTensor(rng, {2}, -1, 1), 2};
       }, any({1, 6, 5})},
      {"relu", [](Rng&) -> Layer { return ReLU{}; },
       [](Rng& rng, const Layer&) {
         while (true) {
           Tensor x = RandomTensor(rng, {2, 3, 3}, -2.0, 2.0);
           if (std::none_of(x.values().begin(), x.values().end(),
                            [](double v) { return std::abs(v) < 1e-3; }))
             return x;
         }
       }},
      {"maxpool", [](Rng&) -> Layer { return MaxPool2D{2, 2}; },
       [](Rng& rng, const Layer& l) {
         while (true) {
           Tensor x = RandomTensor(rng, {2, 4, 5}, -2.0, 2.0);
           if (!PoolTied(std::get<MaxPool2D>(l), x)) return x;
         }
       }},
      {"maxpool_overlap", [](Rng&) -> Layer { return MaxPool2D{3, 1}; },
       [](Rng& rng, const Layer& l) {
         while (true) {
           Tensor x = RandomTensor(rng, {1, 4, 4}, -2.0, 2.0);
           if (!PoolTied(std::get<MaxPool2D>(l), x)) return x;
         }
       }},
      {"flatten", [](Rng&) -> Layer { return Flatten{}; }, any({2, 2, 3})},
      {"softmax", [](Rng&) -> Layer { return Softmax{}; }, any({6})},
      {"sigmoid", [](Rng&) -> Layer { return Sigmoid{}; }, any({7})},
  };
}

TEST(LayerBackwardTest, MatchesFiniteDifferencesForEveryKind) {
  for (const LayerCase& lc : LayerCases()) {
    Rng rng(11);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const Layer layer = lc.make(rng);
      const Tensor x = lc.input(rng, layer);
      const Tensor up = RandomTensor(rng, OutputShape(layer, x.shape()), -1.0, 1.0);
      worst = std::max(worst, RelErr(LayerBackward(layer, x, up),
                                     FdLayerGradient(layer, x, up)));
    }
    EXPECT_LT(worst, 1e-5) << lc.name;
  }
}

TEST(LayerBackwardTest, ParameterGradientsMatchFiniteDifferences) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Dense d = RandomDense(rng, 4, 3);
    Conv2D c{RandomTensor(rng, {2, 1, 2, 2}, -1, 1), RandomTensor(rng, {2}, -1, 1), 1};
    const Tensor xd = RandomTensor(rng, {4}, -1, 1);
    const Tensor xc = RandomTensor(rng, {1, 3, 4}, -1, 1);
    const Tensor ud = RandomTensor(rng, {3}, -1, 1);
    const Tensor uc = RandomTensor(rng, {2, 2, 3}, -1, 1);

    const LayerGradients gd = LayerBackwardFull(d, xd, ud, true);
    const Tensor fw = FiniteDiffGradient(
        [&](const Tensor& w) { return testing::Dot(ud, LayerForward(Dense{w, d.bias}, xd)); },
        d.weights);
    const Tensor fb = FiniteDiffGradient(
        [&](const Tensor& b) { return testing::Dot(ud, LayerForward(Dense{d.weights, b}, xd)); },
        d.bias);
    EXPECT_LT(RelErr(*gd.weights, fw), 1e-5);
    EXPECT_LT(RelErr(*gd.bias, fb), 1e-5);

    const LayerGradients gc = LayerBackwardFull(c, xc, uc, true);
    const Tensor fk = FiniteDiffGradient(
        [&](const Tensor& k) {
          return testing::Dot(uc, LayerForward(Conv2D{k, c.bias, 1}, xc));
        },
        c.kernels);
    const Tensor fcb = FiniteDiffGradient(
        [&](const Tensor& b) {
          return testing::Dot(uc, LayerForward(Conv2D{c.kernels, b, 1}, xc));
        },
        c.bias);
    EXPECT_LT(RelErr(*gc.weights, fk), 1e-5);
    EXPECT_LT(RelErr(*gc.bias, fcb), 1e-5);
  }
}

TEST(SoftmaxProperty, SumsToOneInsideOpenInterval) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const double spread = trial < 100 ? 5.0 : 30.0;
    const Tensor s = LayerForward(Softmax{}, RandomTensor(rng, {1 + rng.Below(9)}, -spread, spread));
    double total = 0.0;
    for (double v : s.values()) {
      total += v;
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0 + 1e-15);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(SoftmaxProperty, LargeLogitsStayFinite) {
  const Tensor s = LayerForward(Softmax{}, Tensor::Vector({1000.0, 0.0, -1000.0}));
  EXPECT_TRUE(s.AllFinite());
  EXPECT_NEAR(s[0], 1.0, 1e-12);
}

TEST(LayerForwardTest, Deterministic) {
  for (const LayerCase& lc : LayerCases()) {
    Rng rng(2);
    const Layer layer = lc.make(rng);
    const Tensor x = lc.input(rng, layer);
    EXPECT_EQ(LayerForward(layer, x), LayerForward(layer, x)) << lc.name;
  }
}

}  // namespace
}  // namespace distinf
