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

#include <vector>

#include <gtest/gtest.h>

#include "distinf.hpp"
#include "test_util.hpp"

namespace distinf {
namespace {

using testing::KindOf;
using testing::KinkFreeInput;
using testing::RelErr;

TEST(NetworkTest, MustEndWithSoftmax) {
  EXPECT_EQ(KindOf([] { Network({2}, {ReLU{}}); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(KindOf([] { Network({2}, {Dense{Tensor({2, 3}), Tensor({2})}, Softmax{}}); }),
            ErrorKind::kShapeMismatch);
}

TEST(NetworkTest, SoftmaxOnlyRecordsBothActivations) {
  const Network net({2}, {Softmax{}});
  const auto acts = net.ForwardRecorded(Tensor::Vector({0.0, 0.0}));
  ASSERT_EQ(acts.size(), 2u);
  EXPECT_EQ(acts[0], Tensor::Vector({0.0, 0.0}));
  EXPECT_EQ(acts[1], Tensor::Vector({0.5, 0.5}));
}

TEST(NetworkTest, IdentityDenseRecordsThreeActivations) {
  const Network net({2}, {Dense{Tensor({2, 2}, {1, 0, 0, 1}), Tensor({2})}, Softmax{}});
  const Tensor x = Tensor::Vector({1.0, 3.0});
  const auto acts = net.ForwardRecorded(x);
  ASSERT_EQ(acts.size(), 3u);
  EXPECT_EQ(acts[0], x);
  EXPECT_EQ(acts[1], x);
  EXPECT_EQ(acts[2], LayerForward(Softmax{}, x));
  EXPECT_EQ(KindOf([&] { net.ForwardRecorded(Tensor::Vector({1.0})); }),
            ErrorKind::kShapeMismatch);
}

TEST(SliceProperty, RecompositionIsBitIdenticalAtEveryCut) {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const Network net = RandomConvNet(rng, 3, Activation::kReLU, trial % 2 == 0);
    const Tensor x = RandomTensor(rng, net.input_shape(), -1.0, 1.0);
    const Tensor full = net.Forward(x);
    for (std::size_t cut = 0; cut <= net.layer_count(); ++cut) {
      const Slice s(net, cut);
      EXPECT_EQ(s.G(s.H(x)), full) << "cut " << cut;
      if (cut < net.layer_count()) {
        EXPECT_EQ(net.Tail(cut).Forward(s.H(x)), full) << "cut " << cut;
      }
    }
  }
  const Network net = RandomMlp(rng, 3, 2);
  EXPECT_EQ(KindOf([&] { Slice(net, net.layer_count() + 1); }), ErrorKind::kInvalidArgument);
}

TEST(SliceGradientTest, LinearSingleOutputModel) {
  const Network net({2}, {Dense{Tensor({1, 2}, {2.0, 3.0}), Tensor({1})}, Softmax{}});
  const auto q = QuantityOfInterest::Class(0).Logits();
  Rng rng(1);
  for (int t = 0; t < 5; ++t) {
    EXPECT_EQ(SliceGradient(Slice(net, 0), q, RandomTensor(rng, {2}, -5, 5)),
              Tensor::Vector({2.0, 3.0}));
  }
}

TEST(SliceGradientTest, ComparativeIsExactDifference) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Network net = RandomConvNet(rng, 4);
    const Tensor x = RandomTensor(rng, net.input_shape(), -1, 1);
    for (std::size_t cut : {std::size_t{0}, std::size_t{2}, net.layer_count() - 1}) {
      const Slice s(net, cut);
      for (bool post : {true, false}) {
        auto qi = QuantityOfInterest::Class(1), qj = QuantityOfInterest::Class(3);
        auto qc = QuantityOfInterest::Compare(1, 3);
        qi.post_softmax = qj.post_softmax = qc.post_softmax = post;
        EXPECT_EQ(SliceGradient(s, qc, x), SliceGradient(s, qi, x) - SliceGradient(s, qj, x));
      }
    }
  }
}

TEST(SliceGradientTest, MatchesFiniteDifferencesOnZ) {
  Rng rng(8);
  double worst = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const Network net = RandomConvNet(rng, 3, Activation::kReLU, trial % 2 == 0);
    const Tensor x = KinkFreeInput(rng, net);
    const auto q = trial % 3 == 0 ? QuantityOfInterest::Compare(0, 2)
                                  : QuantityOfInterest::Class(rng.Below(3));
    for (std::size_t cut = 0; cut < net.layer_count(); ++cut) {
      const Slice s(net, cut);
      const Tensor fd = FiniteDiffGradient(
          [&](const Tensor& z) { return EvaluateQuantityAt(net, cut, q, z); }, s.H(x));
      worst = std::max(worst, RelErr(SliceGradient(s, q, x), fd));
    }
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(SliceGradientTest, ChainRuleClosureAcrossCuts) {
  // Pulling a deeper slice's gradient back through the prefix layers must
  // reproduce the cut-0 gradient.
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Network net = RandomConvNet(rng, 3);
    const Tensor x = KinkFreeInput(rng, net);
    const auto q = QuantityOfInterest::Class(1);
    const Tensor at_input = SliceGradient(Slice(net, 0), q, x);
    const auto acts = net.ForwardRecorded(x);
    for (std::size_t cut = 1; cut < net.layer_count(); ++cut) {
      Tensor g = SliceGradient(Slice(net, cut), q, x);
      for (std::size_t k = cut; k > 0; --k) g = LayerBackward(net.layers()[k - 1], acts[k - 1], g);
      EXPECT_LT(RelErr(g, at_input), 1e-10);
    }
  }
}

TEST(SliceGradientTest, UnitProjectionReadsInternalActivation) {
  Rng rng(10);
  const Network net = RandomConvNet(rng, 2, Activation::kSigmoid);
  const Tensor x = RandomTensor(rng, net.input_shape(), -1, 1);
  const auto q = QuantityOfInterest::Unit(2, 3);
  EXPECT_EQ(EvaluateQuantity(net, q, x), net.ForwardRange(x, 0, 2)[3]);
  const Tensor fd = FiniteDiffGradient([&](const Tensor& t) { return EvaluateQuantity(net, q, t); }, x);
  EXPECT_LT(RelErr(SliceGradient(Slice(net, 0), q, x), fd), 1e-5);
  // A unit upstream of the cut is not a function of z.
  EXPECT_EQ(KindOf([&] { SliceGradient(Slice(net, 3), q, x); }), ErrorKind::kInvalidArgument);
}

TEST(SliceGradientTest, RejectsBadQuantities) {
  Rng rng(12);
  const Network net = RandomMlp(rng, 3, 2);
  const Tensor x = RandomTensor(rng, {3}, -1, 1);
  EXPECT_EQ(KindOf([&] { SliceGradient(Slice(net, 1), QuantityOfInterest::Class(2), x); }),
            ErrorKind::kInvalidClassIndex);
  EXPECT_EQ(KindOf([&] { SliceGradient(Slice(net, 1), QuantityOfInterest::Compare(1, 1), x); }),
            ErrorKind::kInvalidClassIndex);
  EXPECT_EQ(KindOf([&] { SliceGradient(Slice(net, 1), QuantityOfInterest::Unit(1, 99), x); }),
            ErrorKind::kInvalidUnit);
  EXPECT_EQ(KindOf([&] { SliceGradient(Slice(net, 1), QuantityOfInterest::Class(0), Tensor({4})); }),
            ErrorKind::kShapeMismatch);
}

TEST(QuantityTest, TextForm) {
  EXPECT_EQ(QuantityToString(QuantityOfInterest::Class(3)), "class:3");
  EXPECT_EQ(QuantityToString(QuantityOfInterest::Compare(1, 2).Logits()), "comparative:1,2@logits");
  EXPECT_EQ(QuantityToString(QuantityOfInterest::Unit(4, 17)), "unit:4,17");
}

TEST(PredictTest, ArgmaxTiesGoToLowestIndex) {
  const std::vector<double> v{0.2, 0.4, 0.4};
  EXPECT_EQ(Argmax(v), 1u);
}

}  // namespace
}  // namespace distinf
