#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "stairmod/loss.hpp"
#include "test_support.hpp"

using namespace stairmod;
using namespace stairmod::loss;
using stairmod::testing::random_unit;

namespace {

// Naive binary cross-entropy in extended precision, independent of the
// log-sum-exp form used by the library.
long double naive_bce(long double x, int y) {
  const long double s = 1.0L / (1.0L + std::exp(-x));
  return -(y * std::log(s) + (1 - y) * std::log(1.0L - s));
}

LossInput random_instance(Rng& rng, std::size_t n, int steps = 3) {
  LossInput in;
  for (int s = 0; s < steps; ++s) in.gt_step_normals.push_back(random_unit(rng));
  if (steps > 1) in.gt_step_normals[1] = std::nullopt;  // one step without a ground-truth normal
  for (std::size_t j = 0; j < n; ++j) {
    in.logits.push_back(rng.normal(0.0, 2.0));
    in.gt_labels.push_back(static_cast<int>(rng.index(2)));
    in.point_normals.push_back(random_unit(rng));
    if (rng.bernoulli(0.85)) {
      in.step_of_point.push_back(1 + static_cast<int>(rng.index(steps)));
    } else {
      in.step_of_point.push_back(std::nullopt);
    }
  }
  in.epoch = 5;
  in.gate_epoch = 3;
  return in;
}

// Central differences computed here, independently of the library helper.
std::vector<double> fd_gradient(const LossInput& in, const LossOptions& opt, double h) {
  std::vector<double> g;
  for (std::size_t j = 0; j < in.logits.size(); ++j) {
    LossInput up = in, down = in;
    up.logits[j] += h;
    down.logits[j] -= h;
    g.push_back((csce(up, opt).total - csce(down, opt).total) / (2 * h));
  }
  return g;
}

LossInput single_point(const Vec3& gt, const Vec3& pred, double logit = 3.0) {
  LossInput in;
  in.logits = {logit};
  in.gt_labels = {1};
  in.point_normals = {pred};
  in.step_of_point = {1};
  in.gt_step_normals = {gt};
  return in;
}

}  // namespace

TEST(CrossEntropy, SaturatedCorrect) {
  const std::vector<double> x{100.0};
  const std::vector<int> y{1};
  EXPECT_LE(cross_entropy(x, y), 1e-40);
  EXPECT_GE(cross_entropy(x, y), 0.0);
}

TEST(CrossEntropy, ZeroLogit) {
  const std::vector<double> x{0.0};
  for (int label : {0, 1}) {
    const std::vector<int> y{label};
    EXPECT_NEAR(cross_entropy(x, y), std::numbers::ln2, 1e-15);
  }
}

TEST(CrossEntropy, NoOverflowAtExtremes) {
  const std::vector<double> x{500.0, -500.0, 500.0, -500.0};
  const std::vector<int> y{0, 1, 1, 0};
  EXPECT_NEAR(cross_entropy(x, y), 500.0 / 2, 1e-9);
}

TEST(CrossEntropy, MatchesExtendedPrecisionOracle) {
  Rng rng(31);
  std::vector<double> x;
  std::vector<int> y;
  long double sum = 0;
  for (int i = 0; i < 64; ++i) {
    x.push_back(rng.normal(0.0, 4.0));
    y.push_back(static_cast<int>(rng.index(2)));
    sum += naive_bce(x.back(), y.back());
  }
  EXPECT_NEAR(cross_entropy(x, y), static_cast<double>(sum / 64), 1e-10);
}

TEST(CrossEntropy, AllLabelPatternsOfEightPoints) {
  Rng rng(32);
  std::vector<double> x;
  for (int i = 0; i < 8; ++i) x.push_back(rng.normal(0.0, 3.0));
  for (int mask = 0; mask < 256; ++mask) {
    std::vector<int> y;
    long double sum = 0;
    for (int i = 0; i < 8; ++i) {
      y.push_back((mask >> i) & 1);
      sum += naive_bce(x[i], y.back());
    }
    ASSERT_NEAR(cross_entropy(x, y), static_cast<double>(sum / 8), 1e-12);
  }
}

TEST(CrossEntropy, EmptyInput) {
  try {
    cross_entropy({}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyInput);
  }
}

TEST(CurvatureSuppression, AnalyticAngles) {
  const Vec3 gt = kUp;
  EXPECT_NEAR(curvature_suppression(single_point(gt, kUp)), 0.0, 1e-12);
  EXPECT_NEAR(curvature_suppression(single_point(gt, -kUp)), 0.0, 1e-12);
  EXPECT_NEAR(curvature_suppression(single_point(gt, kTowardCamera)), 1.0, 1e-12);
  const Vec3 deg45 = Vec3(0, -1, -1).normalized();
  EXPECT_NEAR(curvature_suppression(single_point(gt, deg45)), 0.5, 1e-12);
}

TEST(CurvatureSuppression, HardRuleCountsOnlyPositives) {
  auto in = single_point(kUp, kTowardCamera, -2.0);
  EXPECT_EQ(curvature_suppression(in), 0.0);
  in.logits[0] = 0.1;
  EXPECT_EQ(curvature_suppression(in), 1.0);
}

TEST(CurvatureSuppression, SoftRuleWeightsBySigmoid) {
  const auto in = single_point(kUp, kTowardCamera, 0.7);
  EXPECT_NEAR(curvature_suppression(in, {PositiveRule::Soft}), sigmoid(0.7), 1e-15);
}

TEST(CurvatureSuppression, MissingStepNormalGatesTermOff) {
  auto in = single_point(kUp, kTowardCamera);
  in.gt_step_normals[0] = std::nullopt;
  EXPECT_EQ(curvature_suppression(in), 0.0);
}

TEST(CurvatureSuppression, InvalidAssignment) {
  auto in = single_point(kUp, kTowardCamera);
  in.step_of_point[0] = 2;
  try {
    curvature_suppression(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidAssignment);
  }
}

TEST(CurvatureSuppression, MissingPointNormal) {
  auto in = single_point(kUp, kTowardCamera);
  in.point_normals[0] = std::nullopt;
  EXPECT_THROW(curvature_suppression(in), Error);
}

TEST(CurvatureSuppression, RawSumVersusNormalized) {
  LossInput in = single_point(kUp, kTowardCamera);
  in.logits.push_back(1.0);
  in.gt_labels.push_back(1);
  in.point_normals.push_back(kUp);
  in.step_of_point.push_back(1);
  EXPECT_NEAR(curvature_suppression(in), 1.0, 1e-15);
  EXPECT_NEAR(curvature_suppression(in, {PositiveRule::Hard, true}), 0.5, 1e-15);
}

TEST(CurvatureSuppression, NonNegativeAndSignFlipInvariant) {
  Rng rng(40);
  for (int trial = 0; trial < 200; ++trial) {
    auto in = random_instance(rng, 24);
    for (auto rule : {PositiveRule::Hard, PositiveRule::Soft}) {
      const double cs = curvature_suppression(in, {rule});
      ASSERT_GE(cs, 0.0);
      auto flipped = in;
      for (std::size_t j = 0; j < flipped.point_normals.size(); j += 2) flipped.point_normals[j] = -*flipped.point_normals[j];
      ASSERT_NEAR(curvature_suppression(flipped, {rule}), cs, 1e-12);
    }
  }
}

TEST(CurvatureSuppression, ZeroIffAligned) {
  Rng rng(41);
  auto in = random_instance(rng, 20);
  for (std::size_t j = 0; j < in.logits.size(); ++j) {
    if (in.step_of_point[j] && in.gt_step_normals[*in.step_of_point[j] - 1]) {
      in.point_normals[j] = (j % 2 ? 1.0 : -1.0) * *in.gt_step_normals[*in.step_of_point[j] - 1];
    }
  }
  EXPECT_NEAR(curvature_suppression(in, {PositiveRule::Soft}), 0.0, 1e-12);
  // one counted misaligned point makes it positive
  for (std::size_t j = 0; j < in.logits.size(); ++j) {
    if (in.step_of_point[j] && in.gt_step_normals[*in.step_of_point[j] - 1]) {
      in.point_normals[j] = in.gt_step_normals[*in.step_of_point[j] - 1]->unitOrthogonal();
      break;
    }
  }
  EXPECT_GT(curvature_suppression(in, {PositiveRule::Soft}), 0.0);
}

TEST(CurvatureSuppression, SoftMonotoneInMisalignedLogit) {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    auto in = random_instance(rng, 16);
    for (std::size_t j = 0; j < in.logits.size(); ++j) {
      auto bumped = in;
      bumped.logits[j] += 0.5;
      ASSERT_GE(curvature_suppression(bumped, {PositiveRule::Soft}), curvature_suppression(in, {PositiveRule::Soft}));
    }
  }
}

TEST(Csce, GateIdentity) {
  Rng rng(50);
  auto in = random_instance(rng, 32);
  in.gate_epoch = 10;
  in.epoch = 9;
  const auto before = csce(in);
  EXPECT_EQ(before.gate_k, 0);
  EXPECT_EQ(before.total, before.ce);
  EXPECT_GT(before.cs, 0.0);  // reported but unweighted
  in.epoch = 10;
  const auto after = csce(in);
  EXPECT_EQ(after.gate_k, 1);
  EXPECT_EQ(after.total, after.ce + after.cs);
  EXPECT_NEAR(after.total - before.total, after.cs, 1e-14);
}

TEST(Csce, GradientOnlyForSoftRule) {
  Rng rng(51);
  const auto in = random_instance(rng, 8);
  EXPECT_FALSE(csce(in, {PositiveRule::Hard, false, true}).gradient);
  EXPECT_TRUE(csce(in, {PositiveRule::Soft, false, true}).gradient);
  EXPECT_FALSE(csce(in, {PositiveRule::Soft, false, false}).gradient);
}

TEST(Csce, GradientMatchesFiniteDifferences) {
  Rng rng(52);
  for (bool normalize : {false, true}) {
    for (int gate_epoch : {3, 100}) {
      auto in = random_instance(rng, 32);
      in.gate_epoch = gate_epoch;
      const LossOptions opt{PositiveRule::Soft, normalize, true};
      const auto report = csce(in, opt);
      const auto fd = fd_gradient(in, opt, 1e-5);
      EXPECT_LT(max_relative_error(*report.gradient, fd), 1e-4);
      // library helper agrees with the local oracle
      EXPECT_LT(max_relative_error(finite_difference_gradient(in, opt), fd), 1e-9);
    }
  }
}

TEST(Csce, MisalignedInputs) {
  LossInput in = single_point(kUp, kUp);
  in.gt_labels.push_back(1);
  EXPECT_THROW(csce(in), Error);
}

TEST(MakeInput, FromLabeledCloud) {
  LabeledCloud c;
  auto add = [&](Label l, Vec3 n) {
    Point p;
    p.label = l;
    p.normal = n;
    c.points.push_back(p);
  };
  add(1, kUp);
  add(1, Vec3(0.1, -1, 0).normalized());
  add(-1, kTowardCamera);
  add(0, kUp);
  add(-2, kTowardCamera);  // riser of a step without tread normals
  const auto in = make_input(c, {1, 1, 1, -1, 1}, 0, 1);
  EXPECT_EQ(in.gt_labels, (std::vector<int>{1, 1, 0, 0, 0}));
  EXPECT_EQ(*in.step_of_point[2], 1);
  EXPECT_FALSE(in.step_of_point[3]);
  ASSERT_EQ(in.gt_step_normals.size(), 2u);
  EXPECT_LT((*in.gt_step_normals[0] - (kUp + Vec3(0.1, -1, 0).normalized()).normalized()).norm(), 1e-15);
  EXPECT_FALSE(in.gt_step_normals[1]);
  // the riser of step 1 predicted positive is what gets penalized
  EXPECT_GT(curvature_suppression(in), 0.99);
  EXPECT_THROW(make_input(c, {1.0}, 0, 1), Error);
}
