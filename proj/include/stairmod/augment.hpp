#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "stairmod/core.hpp"
#include "stairmod/rng.hpp"

// Training-time augmentations. Every function draws only from the Rng it is
// handed; the order of draws is part of the contract and is listed with each
// function so results can be replayed.

namespace stairmod::augment {

struct RrsConfig {
  double enable_prob = 0.5;
  double gaussian_sigma_steps = 1.0;
  int draws_per_activation = 1;
};

struct RrnsConfig {
  double enable_prob = 0.5;
};

struct RbsConfig {
  double radius = 0.08;
  int num_balls = 3;
};

struct RgpConfig {
  double sigma = 0.004;
};

struct RrpgConfig {
  double downsample_coef = 0.6;
  double count_sigma = 0.3;
};

struct AugmentConfig {
  RrsConfig rrs;
  RrnsConfig rrns;
  RbsConfig rbs;
  RgpConfig rgp;
  RrpgConfig rrpg;
  std::uint64_t seed = 0;

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be in [0,1]");
    };
    prob(rrs.enable_prob, "rrs.enable_prob");
    prob(rrns.enable_prob, "rrns.enable_prob");
    if (!(rrs.gaussian_sigma_steps >= 0)) throw Error(ErrorKind::InvalidArgument, "rrs.gaussian_sigma_steps must be >= 0");
    if (rrs.draws_per_activation < 0) throw Error(ErrorKind::InvalidArgument, "rrs.draws_per_activation must be >= 0");
    if (!(rbs.radius > 0)) throw Error(ErrorKind::InvalidArgument, "rbs.radius must be > 0");
    if (rbs.num_balls < 0) throw Error(ErrorKind::InvalidArgument, "rbs.num_balls must be >= 0");
    if (!(rgp.sigma >= 0)) throw Error(ErrorKind::InvalidArgument, "rgp.sigma must be >= 0");
    if (!(rrpg.downsample_coef > 0 && rrpg.downsample_coef <= 1)) {
      throw Error(ErrorKind::InvalidArgument, "rrpg.downsample_coef must be in (0,1]");
    }
    if (!(rrpg.count_sigma >= 0)) throw Error(ErrorKind::InvalidArgument, "rrpg.count_sigma must be >= 0");
  }
};

inline constexpr int kRrsMaxRetries = 32;

namespace detail {

template <typename Pred>
LabeledCloud remove_if(const LabeledCloud& cloud, Pred&& drop) {
  LabeledCloud out;
  out.frame = cloud.frame;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points)
    if (!drop(p)) out.points.push_back(p);
  return out;
}

inline std::vector<Label> tread_labels(const LabeledCloud& cloud) {
  std::set<Label> s;
  for (const auto& p : cloud.points)
    if (is_tread(p.label)) s.insert(p.label);
  return {s.begin(), s.end()};
}

inline double median_of_sorted(const std::vector<Label>& v) {
  const std::size_t n = v.size();
  return n % 2 ? double(v[n / 2]) : 0.5 * (double(v[n / 2 - 1]) + double(v[n / 2]));
}

}  // namespace detail

/// Tread index drawn by RRS: round(N(center, sigma)), redrawn while outside
/// [1, max_tread] up to kRrsMaxRetries times, then clamped.
inline Label draw_tread_index(Rng& rng, double center, double sigma, Label max_tread) {
  double x = 0;
  for (int attempt = 0; attempt < kRrsMaxRetries; ++attempt) {
    x = std::round(rng.normal(center, sigma));
    if (x >= 1 && x <= max_tread) return static_cast<Label>(x);
  }
  return static_cast<Label>(std::clamp(x, 1.0, double(max_tread)));
}

/// Randomly Remove Steps.
/// Draws: bernoulli(enable_prob); if active, draws_per_activation tread
/// indices via draw_tread_index centered on the median present tread label.
inline LabeledCloud rrs(const LabeledCloud& cloud, const RrsConfig& cfg, Rng& rng) {
  const auto treads = detail::tread_labels(cloud);
  if (treads.empty()) return cloud;
  if (!rng.bernoulli(cfg.enable_prob)) return cloud;
  const double center = detail::median_of_sorted(treads);
  std::set<Label> removed;
  for (int i = 0; i < cfg.draws_per_activation; ++i) {
    removed.insert(draw_tread_index(rng, center, cfg.gaussian_sigma_steps, treads.back()));
  }
  return detail::remove_if(cloud, [&](const Point& p) { return is_tread(p.label) && removed.count(p.label); });
}

/// Randomly Remove Non-Steps.
/// Draws: bernoulli(enable_prob); if active, a fair coin (true = risers).
inline LabeledCloud rrns(const LabeledCloud& cloud, const RrnsConfig& cfg, Rng& rng) {
  if (!rng.bernoulli(cfg.enable_prob)) return cloud;
  const bool risers = rng.bernoulli(0.5);
  if (risers) return detail::remove_if(cloud, [](const Point& p) { return is_riser(p.label); });
  return detail::remove_if(cloud, [](const Point& p) { return p.label == 0; });
}

/// Random Ball Sampler.
/// Draws: per ball, one index() over the current cloud size.
inline LabeledCloud rbs(const LabeledCloud& cloud, const RbsConfig& cfg, Rng& rng) {
  if (!(cfg.radius > 0)) throw Error(ErrorKind::InvalidArgument, "rbs.radius must be > 0");
  LabeledCloud current = cloud;
  const double r2 = cfg.radius * cfg.radius;
  for (int b = 0; b < cfg.num_balls && !current.empty(); ++b) {
    const Vec3 center = current.points[rng.index(current.size())].position;
    current = detail::remove_if(current, [&](const Point& p) { return (p.position - center).squaredNorm() <= r2; });
  }
  return current;
}

/// Random Gaussian Perturbation.
/// Draws: per point, three normals (x, y, z).
inline LabeledCloud rgp(const LabeledCloud& cloud, const RgpConfig& cfg, Rng& rng) {
  if (!(cfg.sigma >= 0)) throw Error(ErrorKind::InvalidArgument, "rgp.sigma must be >= 0");
  if (cfg.sigma == 0) return cloud;
  LabeledCloud out = cloud;
  for (auto& p : out.points) {
    for (int a = 0; a < 3; ++a) p.position[a] += rng.normal(0.0, cfg.sigma);
  }
  return out;
}

/// Per-label keep count used by RRPG.
inline std::size_t rrpg_target(Rng& rng, std::size_t n, const RrpgConfig& cfg) {
  const double nd = static_cast<double>(n);
  const double t = std::round(rng.normal(cfg.downsample_coef * nd, cfg.count_sigma * nd));
  return static_cast<std::size_t>(std::clamp(t, 1.0, nd));
}

/// Randomly Remove Points within Groups.
/// Draws: for each tread label in ascending order, one normal for the keep
/// count, then a partial Fisher-Yates (one index() per kept point).
inline LabeledCloud rrpg(const LabeledCloud& cloud, const RrpgConfig& cfg, Rng& rng) {
  if (!(cfg.downsample_coef > 0 && cfg.downsample_coef <= 1)) {
    throw Error(ErrorKind::InvalidArgument, "rrpg.downsample_coef must be in (0,1]");
  }
  std::map<Label, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (is_tread(cloud.points[i].label)) groups[cloud.points[i].label].push_back(i);

  std::vector<bool> keep(cloud.size(), true);
  for (auto& [label, members] : groups) {
    const std::size_t target = rrpg_target(rng, members.size(), cfg);
    for (std::size_t i = 0; i < target; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.index(members.size() - i));
      std::swap(members[i], members[j]);
    }
    for (std::size_t i = target; i < members.size(); ++i) keep[members[i]] = false;
  }
  LabeledCloud out;
  out.frame = cloud.frame;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (keep[i]) out.points.push_back(cloud.points[i]);
  return out;
}

inline const std::vector<std::string_view>& known_names() {
  static const std::vector<std::string_view> names{"rrs", "rrns", "rbs", "rgp", "rrpg"};
  return names;
}

/// Stream used for the augmentation at position `slot` of a compose() order.
inline Rng stream_for(std::uint64_t master_seed, std::size_t slot, std::string_view name) {
  return Rng(splitmix64(master_seed) ^ splitmix64(fnv1a64(name) + slot));
}

inline LabeledCloud apply(const LabeledCloud& cloud, std::string_view name, const AugmentConfig& cfg, Rng& rng) {
  if (name == "rrs") return rrs(cloud, cfg.rrs, rng);
  if (name == "rrns") return rrns(cloud, cfg.rrns, rng);
  if (name == "rbs") return rbs(cloud, cfg.rbs, rng);
  if (name == "rgp") return rgp(cloud, cfg.rgp, rng);
  if (name == "rrpg") return rrpg(cloud, cfg.rrpg, rng);
  throw Error(ErrorKind::InvalidArgument, "unknown augmentation '" + std::string(name) + "'");
}

/// Applies augmentations left to right, each with its own stream derived
/// from cfg.seed and its position in `order`.
inline LabeledCloud compose(const LabeledCloud& cloud, const AugmentConfig& cfg,
                            const std::vector<std::string>& order) {
  cfg.validate();
  for (const auto& name : order) {
    const auto& names = known_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw Error(ErrorKind::InvalidArgument, "unknown augmentation '" + name + "'");
    }
  }
  LabeledCloud current = cloud;
  for (std::size_t i = 0; i < order.size(); ++i) {
    Rng rng = stream_for(cfg.seed, i, order[i]);
    current = apply(current, order[i], cfg, rng);
  }
  return current;
}

/// Parses "section.key = value" lines ('#' comments allowed) on top of `base`.
inline AugmentConfig parse_config(std::istream& in, AugmentConfig base = {}) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "seed") {
      std::uint64_t seed = 0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
      if (ec != std::errc() || ptr != value.data() + value.size()) throw ParseError(line_no, "bad value for 'seed'");
      base.seed = seed;
      continue;
    }
    double v = 0;
    try {
      std::size_t used = 0;
      v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad value for '" + key + "'");
    }
    auto as_int = [&] {
      if (v != std::floor(v)) throw ParseError(line_no, "'" + key + "' must be an integer");
      return static_cast<int>(v);
    };
    if (key == "rrs.enable_prob") base.rrs.enable_prob = v;
    else if (key == "rrs.gaussian_sigma_steps") base.rrs.gaussian_sigma_steps = v;
    else if (key == "rrs.draws_per_activation") base.rrs.draws_per_activation = as_int();
    else if (key == "rrns.enable_prob") base.rrns.enable_prob = v;
    else if (key == "rbs.radius") base.rbs.radius = v;
    else if (key == "rbs.num_balls") base.rbs.num_balls = as_int();
    else if (key == "rgp.sigma") base.rgp.sigma = v;
    else if (key == "rrpg.downsample_coef") base.rrpg.downsample_coef = v;
    else if (key == "rrpg.count_sigma") base.rrpg.count_sigma = v;
    else throw ParseError(line_no, "unknown key '" + key + "'");
  }
  base.validate();
  return base;
}

}  // namespace stairmod::augment
