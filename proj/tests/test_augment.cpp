#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "stairmod/augment.hpp"
#include "test_support.hpp"

using namespace stairmod;
using namespace stairmod::augment;

namespace {

using Key = std::tuple<double, double, double, Label, int, int, int>;

Key key_of(const Point& p) {
  return {p.position.x(), p.position.y(), p.position.z(), p.label, p.color.r, p.color.g, p.color.b};
}

bool is_subset(const LabeledCloud& out, const LabeledCloud& in) {
  std::multiset<Key> pool;
  for (const auto& p : in.points) pool.insert(key_of(p));
  for (const auto& p : out.points) {
    auto it = pool.find(key_of(p));
    if (it == pool.end()) return false;
    pool.erase(it);
  }
  return true;
}

std::map<Label, std::size_t> label_counts(const LabeledCloud& c) {
  std::map<Label, std::size_t> m;
  for (const auto& p : c.points) ++m[p.label];
  return m;
}

LabeledCloud stair(int steps, bool risers = true, double density = 900) {
  synth::StairSpec spec;
  spec.step_count = steps;
  spec.has_risers = risers;
  spec.points_per_square_meter = density;
  return synth::generate(spec).cloud;
}

// Independent replay of the RRS draw sequence.
struct RrsReplay {
  bool active = false;
  std::set<Label> removed;
};

RrsReplay replay_rrs(std::uint64_t seed, double prob, double sigma, double center, int max_tread, int draws) {
  Rng rng(seed);
  RrsReplay r;
  r.active = rng.uniform() < prob;
  if (!r.active) return r;
  for (int d = 0; d < draws; ++d) {
    double x = 0;
    bool ok = false;
    for (int attempt = 0; attempt < 32 && !ok; ++attempt) {
      x = std::round(rng.normal(center, sigma));
      ok = x >= 1 && x <= max_tread;
    }
    r.removed.insert(static_cast<Label>(ok ? x : std::clamp(x, 1.0, double(max_tread))));
  }
  return r;
}

}  // namespace

// ---- RRS ------------------------------------------------------------------

TEST(Rrs, DisabledIsIdentity) {
  const auto c = stair(5);
  Rng rng(1);
  EXPECT_EQ(rrs(c, {0.0, 1.0, 1}, rng), c);
}

TEST(Rrs, LabelFreeCloudIsIdentity) {
  LabeledCloud c{{Point{}, Point{}}};
  Rng rng(1);
  EXPECT_EQ(rrs(c, {1.0, 1.0, 1}, rng), c);
}

TEST(Rrs, RemovesExactlyTheReplayedTread) {
  const auto c = stair(5);
  const auto before = label_counts(c);
  // find a seed whose replay activates and hits tread 3
  std::uint64_t seed = 0;
  for (;; ++seed) {
    const auto r = replay_rrs(seed, 0.5, 1.0, 3.0, 5, 1);
    if (r.active && r.removed == std::set<Label>{3}) break;
  }
  Rng rng(seed);
  const auto out = rrs(c, {0.5, 1.0, 1}, rng);
  const auto after = label_counts(out);
  EXPECT_EQ(after.count(3), 0u);
  for (const auto& [label, n] : before) {
    if (label != 3) {
      EXPECT_EQ(after.at(label), n) << "label " << label;
    }
  }
}

TEST(Rrs, MatchesReplayAcrossSeeds) {
  const auto c = stair(6);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto r = replay_rrs(seed, 0.7, 1.5, 3.5, 6, 2);
    Rng rng(seed);
    const auto out = rrs(c, {0.7, 1.5, 2}, rng);
    std::set<Label> missing;
    const auto after = label_counts(out);
    for (int k = 1; k <= 6; ++k)
      if (!after.count(k)) missing.insert(k);
    ASSERT_EQ(missing, r.active ? r.removed : std::set<Label>{});
    ASSERT_TRUE(is_subset(out, c));
  }
}

TEST(Rrs, HistogramModeAtMedianTread) {
  const auto c = stair(9, true, 100);
  std::map<Label, int> hist;
  const RrsConfig cfg{1.0, 1.0, 1};
  for (std::uint64_t s = 0; s < 10000; ++s) {
    Rng rng(s);
    const auto after = label_counts(rrs(c, cfg, rng));
    for (int k = 1; k <= 9; ++k)
      if (!after.count(k)) ++hist[k];
  }
  const auto mode = std::max_element(hist.begin(), hist.end(), [](auto& a, auto& b) { return a.second < b.second; });
  EXPECT_EQ(mode->first, 5);
}

// ---- RRNS -----------------------------------------------------------------

TEST(Rrns, DisabledIsIdentity) {
  const auto c = stair(4);
  Rng rng(3);
  EXPECT_EQ(rrns(c, {0.0}, rng), c);
}

TEST(Rrns, RemovesRisersOrBackgroundNeverTreads) {
  const auto c = stair(4);
  const auto before = label_counts(c);
  int risers_removed = 0, background_removed = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(s);
    const auto after = label_counts(rrns(c, {1.0}, rng));
    for (int k = 1; k <= 4; ++k) ASSERT_EQ(after.at(k), before.at(k));
    const bool no_risers = !after.count(-1);
    const bool no_background = !after.count(0);
    ASSERT_NE(no_risers, no_background);
    risers_removed += no_risers;
    background_removed += no_background;
  }
  EXPECT_GT(risers_removed, 60);
  EXPECT_GT(background_removed, 60);
}

TEST(Rrns, RiserRemovalMatchesRiserFreeGeneration) {
  synth::StairSpec spec;
  spec.step_count = 4;
  spec.points_per_square_meter = 900;
  const auto with = synth::generate(spec).cloud;
  spec.has_risers = false;
  const auto without = synth::generate(spec).cloud;
  // replay: first draw enables, second is the coin (true = risers)
  std::uint64_t seed = 0;
  for (;; ++seed) {
    Rng r(seed);
    r.uniform();
    if (r.uniform() < 0.5) break;
  }
  Rng rng(seed);
  EXPECT_EQ(rrns(with, {1.0}, rng), without);
}

// ---- RBS ------------------------------------------------------------------

TEST(Rbs, TinyRadiusRemovesOnlyCenters) {
  const auto c = stair(3);
  Rng rng(5);
  const auto out = rbs(c, {1e-4, 3}, rng);
  EXPECT_EQ(out.size(), c.size() - 3);
  EXPECT_TRUE(is_subset(out, c));
}

TEST(Rbs, HugeBallEmptiesCloud) {
  const auto c = stair(3);
  Rng rng(5);
  EXPECT_TRUE(rbs(c, {100.0, 1}, rng).empty());
  Rng rng2(5);
  EXPECT_TRUE(rbs(c, {100.0, 4}, rng2).empty());
}

TEST(Rbs, MatchesBruteForceDistanceFilter) {
  LabeledCloud grid;
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 30; ++j) {
      Point p;
      p.position = Vec3(i * 0.02, 0, j * 0.02);
      p.label = i % 3;
      grid.points.push_back(p);
    }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RbsConfig cfg{0.07, 3};
    Rng rng(seed);
    const auto out = rbs(grid, cfg, rng);
    // oracle: replay center choices, O(n) distance filter per ball
    Rng replay(seed);
    std::vector<Point> remaining = grid.points;
    for (int b = 0; b < cfg.num_balls; ++b) {
      const Vec3 center = remaining[replay.index(remaining.size())].position;
      std::vector<Point> next;
      for (const auto& p : remaining)
        if ((p.position - center).norm() > cfg.radius) next.push_back(p);
      remaining = next;
    }
    ASSERT_EQ(out.points, remaining);
  }
}

// ---- RGP ------------------------------------------------------------------

TEST(Rgp, ZeroSigmaIsIdentity) {
  const auto c = stair(3);
  Rng rng(1);
  EXPECT_EQ(rgp(c, {0.0}, rng), c);
}

TEST(Rgp, PreservesEverythingButPosition) {
  const auto c = stair(3);
  Rng rng(2);
  const auto out = rgp(c, {0.01}, rng);
  ASSERT_EQ(out.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(out.points[i].label, c.points[i].label);
    EXPECT_EQ(out.points[i].color, c.points[i].color);
    EXPECT_EQ(out.points[i].normal, c.points[i].normal);
  }
}

TEST(Rgp, DisplacementStd) {
  LabeledCloud c;
  c.points.resize(100000);
  const double sigma = 0.004;
  Rng rng(3);
  const auto out = rgp(c, {sigma}, rng);
  for (int axis = 0; axis < 3; ++axis) {
    double s2 = 0;
    for (const auto& p : out.points) s2 += p.position[axis] * p.position[axis];
    EXPECT_NEAR(std::sqrt(s2 / c.size()), sigma, 0.05 * sigma);
  }
}

// ---- RRPG -----------------------------------------------------------------

TEST(Rrpg, IdentityAtUnitCoefficient) {
  const auto c = stair(4);
  Rng rng(1);
  EXPECT_EQ(rrpg(c, {1.0, 0.0}, rng), c);
}

TEST(Rrpg, CountsNeverGrowAndReplay) {
  const auto c = stair(5);
  const auto before = label_counts(c);
  const RrpgConfig cfg{0.6, 0.3};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto out = rrpg(c, cfg, rng);
    const auto after = label_counts(out);
    ASSERT_TRUE(is_subset(out, c));
    // replay: one normal per tread label (ascending), then one index per kept point
    Rng replay(seed);
    for (int k = 1; k <= 5; ++k) {
      const double n = static_cast<double>(before.at(k));
      const double t = std::clamp(std::round(replay.normal(0.6 * n, 0.3 * n)), 1.0, n);
      for (int i = 0; i < static_cast<int>(t); ++i) replay.index(static_cast<std::uint64_t>(n) - i);
      ASSERT_EQ(after.at(k), static_cast<std::size_t>(t));
      ASSERT_LE(after.at(k), before.at(k));
    }
    for (auto l : {0, -1, -2, -3, -4, -5}) ASSERT_EQ(after.at(l), before.at(l));
  }
}

// ---- compose --------------------------------------------------------------

TEST(Compose, EmptyOrderIsIdentity) {
  const auto c = stair(3);
  EXPECT_EQ(compose(c, AugmentConfig{}, {}), c);
}

TEST(Compose, UnknownName) {
  try {
    compose(stair(3), AugmentConfig{}, {"rgp", "flip"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
  }
}

TEST(Compose, RepeatedRgpAddsVariance) {
  LabeledCloud c;
  c.points.resize(100000);
  AugmentConfig cfg;
  cfg.rgp.sigma = 0.003;
  cfg.seed = 9;
  const auto out = compose(c, cfg, {"rgp", "rgp"});
  double s2 = 0;
  for (const auto& p : out.points) s2 += p.position.squaredNorm();
  const double var = s2 / (3.0 * c.size());
  EXPECT_NEAR(var, 2 * cfg.rgp.sigma * cfg.rgp.sigma, 0.1 * 2 * cfg.rgp.sigma * cfg.rgp.sigma);
}

TEST(Compose, RemovalsYieldSubsetInAnyOrder) {
  const auto c = stair(6);
  std::vector<std::string> order{"rbs", "rrns", "rrpg", "rrs"};
  AugmentConfig cfg;
  cfg.rrs.enable_prob = 1.0;
  cfg.rrns.enable_prob = 1.0;
  int seed = 0;
  do {
    cfg.seed = static_cast<std::uint64_t>(seed++);
    const auto out = compose(c, cfg, order);
    ASSERT_TRUE(is_subset(out, c));
    ASSERT_LT(out.size(), c.size());
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST(Compose, DeterministicUnderSeed) {
  const auto c = stair(6);
  AugmentConfig cfg;
  cfg.seed = 1234;
  const std::vector<std::string> order{"rrs", "rrns", "rbs", "rgp", "rrpg"};
  const auto a = compose(c, cfg, order), b = compose(c, cfg, order);
  EXPECT_EQ(a, b);
  cfg.seed = 1235;
  EXPECT_NE(compose(c, cfg, order), a);
}

TEST(Compose, InvalidConfigRejected) {
  AugmentConfig cfg;
  cfg.rrpg.downsample_coef = 0.0;
  EXPECT_THROW(compose(stair(3), cfg, {}), Error);
  cfg = {};
  cfg.rbs.radius = -1;
  EXPECT_THROW(compose(stair(3), cfg, {}), Error);
}

TEST(ParseConfig, KeyValue) {
  std::istringstream in(
      "# augmentation\nrrs.enable_prob = 0.25\nrbs.num_balls=5 # trailing\nrgp.sigma=0.002\nseed=77\n\n");
  const auto cfg = parse_config(in);
  EXPECT_EQ(cfg.rrs.enable_prob, 0.25);
  EXPECT_EQ(cfg.rbs.num_balls, 5);
  EXPECT_EQ(cfg.rgp.sigma, 0.002);
  EXPECT_EQ(cfg.seed, 77u);
  EXPECT_EQ(cfg.rrpg.downsample_coef, 0.6);  // default untouched
  std::istringstream wide("seed = 18446744073709551615\n");
  EXPECT_EQ(parse_config(wide).seed, 18446744073709551615u);
}

TEST(ParseConfig, Errors) {
  std::istringstream unknown("rrs.bogus=1\n");
  EXPECT_THROW(parse_config(unknown), ParseError);
  std::istringstream bad("rgp.sigma=abc\n");
  EXPECT_THROW(parse_config(bad), ParseError);
  std::istringstream range("rrs.enable_prob=1.5\n");
  EXPECT_THROW(parse_config(range), Error);
  std::istringstream negative_seed("seed=-3\n");
  EXPECT_THROW(parse_config(negative_seed), ParseError);
}
