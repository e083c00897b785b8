// stairctl: command-line front end for the stairmod pipeline.
//
// Exit codes: 0 success, 1 domain error (error name on stderr), 2 usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "stairmod/stairmod.hpp"

namespace fs = std::filesystem;
using namespace stairmod;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string fmt_vec(const Vec3& v) { return fmt(v.x()) + " " + fmt(v.y()) + " " + fmt(v.z()); }

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// key=value report with the reproducibility stamp up front.
class Report {
 public:
  Report(std::string command, std::uint64_t seed, const std::string& config) {
    add("version", kVersion);
    add("command", std::move(command));
    add("seed", std::to_string(seed));
    add("config_hash", hex64(fnv1a64(config)));
  }
  void add(const std::string& key, const std::string& value) { lines_ += key + "=" + value + "\n"; }
  void add(const std::string& key, double value) { add(key, fmt(value)); }
  const std::string& str() const { return lines_; }

 private:
  std::string lines_;
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot create " + path);
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failure on " + path);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot create " + path);
  return out;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// ---- shared model options ---------------------------------------------------

struct ModelFlags {
  bool no_correction = false;
  double ransac_threshold = 0.008;
  int ransac_iterations = 200;
  double min_inlier_fraction = 0.5;
  std::size_t min_points = model::kDefaultMinGroupPoints;
  std::uint64_t seed = 0;

  void attach(CLI::App* app) {
    app->add_flag("--no-correction", no_correction, "Skip the pose-based measurement correction");
    app->add_option("--ransac-threshold", ransac_threshold, "Point-plane inlier distance (m)")->check(CLI::PositiveNumber);
    app->add_option("--ransac-iterations", ransac_iterations, "RANSAC hypotheses per plane")->check(CLI::PositiveNumber);
    app->add_option("--min-inlier-fraction", min_inlier_fraction, "Reject planes below this inlier fraction")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--min-points", min_points, "Minimum points per tread group");
    app->add_option("--seed", seed, "RANSAC seed");
  }

  model::ModelOptions options() const {
    model::ModelOptions opt;
    opt.correct = !no_correction;
    opt.ransac.inlier_threshold = ransac_threshold;
    opt.ransac.max_iterations = ransac_iterations;
    opt.ransac.min_inlier_fraction = min_inlier_fraction;
    opt.ransac.seed = seed;
    opt.min_group_points = min_points;
    return opt;
  }

  std::string canonical() const {
    return "correct=" + std::to_string(!no_correction) + ";threshold=" + fmt(ransac_threshold) +
           ";iterations=" + std::to_string(ransac_iterations) + ";min_inlier_fraction=" + fmt(min_inlier_fraction) +
           ";min_points=" + std::to_string(min_points);
  }
};

// ---- gen --------------------------------------------------------------------

struct GenFlags {
  synth::StairSpec spec;
  double yaw = 0, pitch = 0, roll = 0;
  double cam_height = 0.8;
  bool no_risers = false;
  bool cull = false;
  std::size_t downsample = 0;
  std::string output;
};

int run_gen(const GenFlags& f) {
  synth::StairSpec spec = f.spec;
  spec.has_risers = !f.no_risers;
  spec.camera_rotation = synth::pose_from_angles(f.yaw * kPi / 180, f.pitch * kPi / 180, f.roll * kPi / 180);
  spec.camera_translation = Vec3(0.0, f.cam_height, 0.0);
  auto scene = synth::generate(spec);
  if (f.cull) scene.cloud = synth::cull_backfaces(scene.cloud);
  if (f.downsample > 0) scene.cloud = io::uniform_downsample(scene.cloud, f.downsample, spec.seed);
  io::write_cloud_file(scene.cloud, f.output);
  const auto truth_path = synth::truth_path_for(f.output);
  synth::write_truth_file(scene.truth, truth_path);

  const std::string config = "steps=" + std::to_string(spec.step_count) + ";height=" + fmt(spec.step_height) +
                             ";depth=" + fmt(spec.step_depth) + ";width=" + fmt(spec.step_width) +
                             ";density=" + fmt(spec.points_per_square_meter) + ";risers=" +
                             std::to_string(spec.has_risers) + ";yaw=" + fmt(f.yaw) + ";pitch=" + fmt(f.pitch) +
                             ";roll=" + fmt(f.roll) + ";cam_height=" + fmt(f.cam_height) +
                             ";noise=" + fmt(spec.noise_sigma) + ";cull=" + std::to_string(f.cull) +
                             ";downsample=" + std::to_string(f.downsample);
  Report r("gen", spec.seed, config);
  r.add("cloud", f.output);
  r.add("truth", truth_path.string());
  r.add("points", std::to_string(scene.cloud.size()));
  r.add("step_count", std::to_string(spec.step_count));
  r.add("step_height", spec.step_height);
  r.add("step_depth", spec.step_depth);
  std::cout << r.str();
  return 0;
}

// ---- augment ----------------------------------------------------------------

struct AugmentFlags {
  std::string input, config, output, order = "rrs,rrns,rbs,rgp,rrpg";
  std::optional<std::uint64_t> seed;
};

int run_augment(const AugmentFlags& f) {
  augment::AugmentConfig cfg;
  std::string config_path = f.config;
  if (config_path.empty()) {
    // only the default config location can come from the environment
    if (const char* dir = std::getenv("STAIRMOD_CONFIG_DIR")) {
      const fs::path candidate = fs::path(dir) / "augment.cfg";
      if (fs::exists(candidate)) config_path = candidate.string();
    }
  }
  std::string config_text;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    config_text = buf.str();
    std::istringstream parse(config_text);
    cfg = augment::parse_config(parse);
  }
  if (f.seed) cfg.seed = *f.seed;
  const auto order = split_csv(f.order);
  io::ReadStats stats;
  const auto cloud = io::read_cloud_file(f.input, &stats);
  const auto out = augment::compose(cloud, cfg, order);
  io::write_cloud_file(out, f.output);

  Report r("augment", cfg.seed, config_text + "|order=" + f.order);
  r.add("input", f.input);
  r.add("output", f.output);
  r.add("order", f.order);
  r.add("points_in", std::to_string(cloud.size()));
  r.add("points_out", std::to_string(out.size()));
  r.add("normalized_normals", std::to_string(stats.normalized_normals));
  std::cout << r.str();
  return 0;
}

// ---- model ------------------------------------------------------------------

struct ModelCmdFlags {
  std::string input, output, csv, ply;
  ModelFlags model;
};

constexpr Rgb kPalette[] = {{230, 25, 75},  {60, 180, 75},  {255, 225, 25}, {0, 130, 200}, {245, 130, 48},
                            {145, 30, 180}, {70, 240, 240}, {240, 50, 230}, {210, 245, 60}, {0, 128, 128}};

void write_region_csv(const model::StairModelResult& res, std::ostream& out) {
  out << "step_index,cp_x,cp_y,cp_z,normal_x,normal_y,normal_z,inliers,corrected_x,corrected_y,corrected_z\n";
  for (const auto& r : res.regions) {
    out << r.step_index << ',' << fmt(r.central_point.x()) << ',' << fmt(r.central_point.y()) << ','
        << fmt(r.central_point.z()) << ',' << fmt(r.normal.x()) << ',' << fmt(r.normal.y()) << ','
        << fmt(r.normal.z()) << ',' << r.inliers.size() << ',' << fmt(r.corrected_central_point.x()) << ','
        << fmt(r.corrected_central_point.y()) << ',' << fmt(r.corrected_central_point.z()) << '\n';
  }
}

void write_region_ply(const model::StairModelResult& res, std::ostream& out) {
  LabeledCloud colored;
  for (std::size_t i = 0; i < res.regions.size(); ++i) {
    for (auto p : res.regions[i].inliers.points) {
      p.color = kPalette[i % std::size(kPalette)];
      colored.points.push_back(p);
    }
  }
  io::write_ply(colored, out);
}

std::string model_report(const model::StairModelResult& res, const ModelFlags& flags, const std::string& input) {
  Report r("model", flags.seed, flags.canonical());
  r.add("input", input);
  r.add("regions", std::to_string(res.regions.size()));
  r.add("step_depth", res.step_depth);
  r.add("step_height", res.step_height);
  r.add("direction", res.ascending ? "ascending" : "descending");
  r.add("correction_source", std::string(model::to_string(res.correction_source)));
  const Mat3& m = res.correction.matrix();
  std::string rot;
  for (int i = 0; i < 9; ++i) rot += (i ? " " : "") + fmt(m(i / 3, i % 3));
  r.add("correction", rot);
  if (!res.regions.empty()) {
    r.add("first_central_point", fmt_vec(res.regions.front().central_point));
    r.add("first_normal", fmt_vec(res.regions.front().normal));
  }
  return r.str();
}

int run_model(const ModelCmdFlags& f) {
  const auto cloud = io::read_cloud_file(f.input);
  const auto res = model::detect_and_model(cloud, f.model.options());
  emit(model_report(res, f.model, f.input), f.output);
  if (!f.csv.empty()) {
    auto out = open_out(f.csv);
    write_region_csv(res, out);
  }
  if (!f.ply.empty()) {
    auto out = open_out(f.ply);
    write_region_ply(res, out);
  }
  return 0;
}

// ---- eval -------------------------------------------------------------------

struct EvalFlags {
  std::string manifest, csv, output;
  double position_tolerance = 0.5;
  ModelFlags model;
};

int run_eval(const EvalFlags& f) {
  std::ifstream in(f.manifest);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + f.manifest);
  const fs::path base = fs::path(f.manifest).parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  std::vector<metrics::EvalRecord> records;
  std::ostringstream csv;
  csv << "sample,cloud,status,de,he,fp,fn,cpe,ne,tc\n";
  std::string line;
  std::size_t line_no = 0, failed = 0, sample = 0;
  metrics::EvalOptions eopt;
  eopt.position_tolerance_fraction = f.position_tolerance;
  const auto mopt = f.model.options();
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = io::detail::split_fields(line);
    if (fields.empty() || fields.front().front() == '#') continue;
    if (fields.size() > 2) throw ParseError(line_no, "manifest line needs '<cloud> [<truth>]'");
    const fs::path cloud_path = resolve(std::string(fields[0]));
    const fs::path truth_path =
        fields.size() == 2 ? resolve(std::string(fields[1])) : synth::truth_path_for(cloud_path);
    const auto cloud = io::read_cloud_file(cloud_path);
    const auto truth = synth::read_truth_file(truth_path);
    ++sample;
    try {
      model::StairModelResult res;
      const double tc = metrics::time_cost([&] { res = model::detect_and_model(cloud, mopt); });
      const auto rec = metrics::evaluate(res, truth, tc, eopt);
      records.push_back(rec);
      csv << sample << ',' << fields[0] << ",ok," << fmt(rec.de) << ',' << fmt(rec.he) << ',' << rec.fp << ','
          << rec.fn << ',' << fmt(rec.cpe) << ',' << fmt(rec.ne) << ',' << fmt(rec.tc) << '\n';
    } catch (const Error& e) {
      ++failed;
      csv << sample << ',' << fields[0] << ",error:" << e.name() << ",,,,,,,\n";
    }
  }
  if (!f.csv.empty()) emit(csv.str(), f.csv);

  const auto s = metrics::aggregate(records);
  Report r("eval", f.model.seed, f.model.canonical() + ";position_tolerance=" + fmt(f.position_tolerance));
  r.add("manifest", f.manifest);
  r.add("samples", std::to_string(sample));
  r.add("failed", std::to_string(failed));
  r.add("de", s.de);
  r.add("he", s.he);
  r.add("fp_percent", s.fp_percent);
  r.add("fn_percent", s.fn_percent);
  r.add("cpe", s.cpe);
  r.add("ne", s.ne);
  r.add("tc_max", s.tc_max);
  std::string text = r.str();
  char table[512];
  std::snprintf(table, sizeof(table),
                "# %-10s %8s %8s %6s %6s %8s %8s %8s\n# %-10s %8.4f %8.4f %6.1f %6.1f %8.4f %8.4f %8.4f\n", "Method",
                "DE(m)", "HE(m)", "FP(%)", "FN(%)", "CPE(m)", "NE(sim)", "TC(sec)",
                f.model.no_correction ? "NoCor" : "Corrected", s.de, s.he, s.fp_percent, s.fn_percent, s.cpe, s.ne,
                s.tc_max);
  text += table;
  emit(text, f.output);
  return 0;
}

// ---- loss-check -------------------------------------------------------------

struct LossFlags {
  std::string input, logits, gradient_out;
  int epoch = 0;
  int gate_epoch = 0;
  std::string rule = "hard";
  bool normalize = false;
  bool fd_check = false;
  std::size_t knn = 16;
};

std::vector<double> read_logits(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = io::detail::split_fields(line);
    if (fields.empty() || fields.front().front() == '#') continue;
    if (fields.size() != 1) throw ParseError(line_no, "expected one logit per line");
    out.push_back(io::detail::parse_number<double>(fields[0], line_no, "logit"));
  }
  return out;
}

int run_loss(const LossFlags& f) {
  auto cloud = io::read_cloud_file(f.input);
  const bool missing = std::any_of(cloud.points.begin(), cloud.points.end(), [](const Point& p) { return !p.normal; });
  std::size_t estimated = 0;
  if (missing) {
    const auto normals = model::estimate_point_normals(cloud, f.knn);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (!cloud.points[i].normal && normals[i]) {
        cloud.points[i].normal = normals[i];
        ++estimated;
      }
    }
  }
  auto input = loss::make_input(cloud, read_logits(f.logits), f.epoch, f.gate_epoch);
  loss::LossOptions opt;
  opt.rule = f.rule == "soft" ? loss::PositiveRule::Soft : loss::PositiveRule::Hard;
  opt.normalize_cs = f.normalize;
  opt.want_gradient = opt.rule == loss::PositiveRule::Soft && (f.fd_check || !f.gradient_out.empty());
  const auto rep = loss::csce(input, opt);

  const std::string config = "rule=" + f.rule + ";normalize=" + std::to_string(f.normalize) +
                             ";epoch=" + std::to_string(f.epoch) + ";gate_epoch=" + std::to_string(f.gate_epoch) +
                             ";knn=" + std::to_string(f.knn);
  Report r("loss-check", 0, config);
  r.add("input", f.input);
  r.add("points", std::to_string(cloud.size()));
  r.add("estimated_normals", std::to_string(estimated));
  r.add("rule", f.rule);
  r.add("ce", rep.ce);
  r.add("cs", rep.cs);
  r.add("gate_k", std::to_string(rep.gate_k));
  r.add("total", rep.total);
  int code = 0;
  if (f.fd_check) {
    if (!rep.gradient) throw Error(ErrorKind::InvalidArgument, "--fd-check needs --rule soft");
    constexpr double h = 1e-5, tol = 1e-4;
    const auto fd = loss::finite_difference_gradient(input, opt, h);
    // smallest derivative the difference quotient can resolve at this total
    const double resolution = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(rep.total)) / h;
    const double floor = std::max(1e-6, resolution / tol);
    const double err = loss::max_relative_error(*rep.gradient, fd, floor);
    r.add("fd_step", h);
    r.add("fd_floor", floor);
    r.add("fd_max_rel_error", err);
    const bool pass = err < tol;
    r.add("fd_check", pass ? "pass" : "fail");
    if (!pass) code = 1;
  }
  if (!f.gradient_out.empty()) {
    if (!rep.gradient) throw Error(ErrorKind::InvalidArgument, "--gradient-out needs --rule soft");
    std::ostringstream g;
    for (double v : *rep.gradient) g << fmt(v) << '\n';
    emit(g.str(), f.gradient_out);
  }
  std::cout << r.str();
  return code;
}

// ---- bench ------------------------------------------------------------------

struct BenchFlags {
  std::string input;
  int runs = 20;
  std::size_t points = 10000;
  ModelFlags model;
};

double median_of(std::vector<double> v) { return model::median(std::move(v)); }

int run_bench(const BenchFlags& f) {
  LabeledCloud cloud;
  if (!f.input.empty()) {
    cloud = io::read_cloud_file(f.input);
  } else {
    synth::StairSpec spec;
    spec.points_per_square_meter = 5000;
    spec.camera_rotation = synth::pose_from_angles(10 * kPi / 180, 15 * kPi / 180);
    spec.camera_translation = Vec3(0, 0.8, 0);
    spec.noise_sigma = 0.003;
    spec.seed = f.model.seed;
    cloud = io::uniform_downsample(synth::generate(spec).cloud, f.points, f.model.seed);
  }
  const auto opt = f.model.options();
  std::vector<double> tc, group, fit, correct, params, stage_sum;
  for (int i = 0; i < f.runs; ++i) {
    model::StairModelResult res;
    tc.push_back(metrics::time_cost([&] { res = model::detect_and_model(cloud, opt); }));
    group.push_back(res.timings.group);
    fit.push_back(res.timings.fit);
    correct.push_back(res.timings.correct);
    params.push_back(res.timings.params);
    stage_sum.push_back(res.timings.total());
  }
  const double tc_med = median_of(tc);
  const double sum_med = median_of(stage_sum);
  Report r("bench", f.model.seed, f.model.canonical() + ";runs=" + std::to_string(f.runs));
  r.add("points", std::to_string(cloud.size()));
  r.add("runs", std::to_string(f.runs));
  r.add("group_sec", median_of(group));
  r.add("fit_sec", median_of(fit));
  r.add("correct_sec", median_of(correct));
  r.add("params_sec", median_of(params));
  r.add("stage_sum_sec", sum_med);
  r.add("tc_sec", tc_med);
  r.add("tc_max_sec", *std::max_element(tc.begin(), tc.end()));
  r.add("stage_sum_ratio", sum_med / tc_med);
  std::cout << r.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stairctl: staircase point-cloud modeling pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic staircase cloud and truth sidecar");
  gen_cmd->add_option("--steps", gen.spec.step_count, "Number of steps")->check(CLI::Range(2, 1000));
  gen_cmd->add_option("--height", gen.spec.step_height, "Step height (m)")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--depth", gen.spec.step_depth, "Step depth (m)")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--width", gen.spec.step_width, "Step width (m)")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--density", gen.spec.points_per_square_meter, "Points per square meter")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_flag("--no-risers", gen.no_risers, "Generate open (riser-free) stairs");
  gen_cmd->add_option("--yaw", gen.yaw, "Camera yaw (deg)");
  gen_cmd->add_option("--pitch", gen.pitch, "Camera pitch (deg)");
  gen_cmd->add_option("--roll", gen.roll, "Camera roll (deg)");
  gen_cmd->add_option("--cam-height", gen.cam_height, "Camera height above ground (m)");
  gen_cmd->add_option("--noise", gen.spec.noise_sigma, "Along-ray noise sigma (m)")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--first-riser", gen.spec.first_riser_distance, "Distance to the first riser (m)");
  gen_cmd->add_option("--ground-depth", gen.spec.ground_depth, "Ground strip depth (m)");
  gen_cmd->add_flag("--cull", gen.cull, "Drop surfaces facing away from the camera");
  gen_cmd->add_option("--downsample", gen.downsample, "Uniformly downsample to this many points");
  gen_cmd->add_option("--seed", gen.spec.seed, "Noise / downsampling seed");
  gen_cmd->add_option("-o,--output", gen.output, "Output cloud file")->required();

  AugmentFlags aug;
  auto* aug_cmd = app.add_subcommand("augment", "Apply training augmentations to a cloud");
  aug_cmd->add_option("input", aug.input, "Input cloud file")->required()->check(CLI::ExistingFile);
  aug_cmd->add_option("--config", aug.config, "Augmentation config (key=value)")->check(CLI::ExistingFile);
  aug_cmd->add_option("--order", aug.order, "Comma-separated augmentation order");
  aug_cmd->add_option("--seed", aug.seed, "Master seed (overrides the config)");
  aug_cmd->add_option("-o,--output", aug.output, "Output cloud file")->required();

  ModelCmdFlags mod;
  auto* mod_cmd = app.add_subcommand("model", "Fit treads and estimate step depth/height");
  mod_cmd->add_option("input", mod.input, "Labeled cloud file")->required()->check(CLI::ExistingFile);
  mod_cmd->add_option("-o,--output", mod.output, "Report file (default stdout)");
  mod_cmd->add_option("--csv", mod.csv, "Per-region CSV output");
  mod_cmd->add_option("--ply", mod.ply, "Colored region PLY output");
  mod.model.attach(mod_cmd);

  EvalFlags ev;
  auto* ev_cmd = app.add_subcommand("eval", "Evaluate the pipeline over a manifest of cloud/truth pairs");
  ev_cmd->add_option("--manifest", ev.manifest, "Manifest: '<cloud> [<truth>]' per line")
      ->required()
      ->check(CLI::ExistingFile);
  ev_cmd->add_option("--csv", ev.csv, "Per-sample CSV output");
  ev_cmd->add_option("-o,--output", ev.output, "Summary file (default stdout)");
  ev_cmd->add_option("--position-tolerance", ev.position_tolerance,
                     "Wrong-position threshold as a fraction of true step depth");
  ev.model.attach(ev_cmd);

  LossFlags lf;
  auto* loss_cmd = app.add_subcommand("loss-check", "Evaluate the CSCE loss for a cloud and per-point logits");
  loss_cmd->add_option("input", lf.input, "Labeled cloud file")->required()->check(CLI::ExistingFile);
  loss_cmd->add_option("--logits", lf.logits, "One logit per line")->required()->check(CLI::ExistingFile);
  loss_cmd->add_option("--epoch", lf.epoch, "Current epoch");
  loss_cmd->add_option("--gate-epoch", lf.gate_epoch, "Epoch at which the curvature term switches on")->required();
  loss_cmd->add_option("--rule", lf.rule, "Positive rule")->check(CLI::IsMember({"hard", "soft"}));
  loss_cmd->add_flag("--normalize", lf.normalize, "Normalize cs by the counted point weight");
  loss_cmd->add_flag("--fd-check", lf.fd_check, "Verify the gradient against central finite differences");
  loss_cmd->add_option("--gradient-out", lf.gradient_out, "Write d(total)/d(logit), one per line");
  loss_cmd->add_option("--knn", lf.knn, "Neighbors for normals missing from the file")->check(CLI::Range(3, 1000));

  BenchFlags bf;
  auto* bench_cmd = app.add_subcommand("bench", "Time the modeling pipeline per stage");
  bench_cmd->add_option("input", bf.input, "Cloud file (default: synthetic stair)")->check(CLI::ExistingFile);
  bench_cmd->add_option("--runs", bf.runs, "Repetitions")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--points", bf.points, "Synthetic cloud size")->check(CLI::PositiveNumber);
  bf.model.attach(bench_cmd);

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
    return 2;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*aug_cmd) return run_augment(aug);
    if (*mod_cmd) return run_model(mod);
    if (*ev_cmd) return run_eval(ev);
    if (*loss_cmd) return run_loss(lf);
    if (*bench_cmd) return run_bench(bf);
  } catch (const Error& e) {
    std::cerr << "stairctl: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
