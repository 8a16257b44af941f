#include "nyqsurf/nyqsurf.hpp"

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

namespace fs = std::filesystem;
using namespace nyqsurf;

namespace {

struct Globals {
  unsigned seed = 0;
  int threads = 0;
  bool verbose = false;
};

Globals g;

void log(const std::string& msg) {
  if (g.verbose) std::cerr << msg << "\n";
}

fs::path sibling(const fs::path& base, const std::string& suffix) {
  fs::path p = base;
  p.replace_filename(base.stem().string() + suffix);
  return p;
}

int cmd_analyze(const fs::path& scene_dir, const fs::path& out, int bins) {
  const SceneBundle scene = io::load_scene(scene_dir);
  if (bins <= 0) bins = io::config_int(scene.config, "histogram.bins", kDefaultHistogramBins);
  const FrequencyReport rep = frequency_report(scene.field, scene.cameras, bins, io::rate_mode_from(scene.config));
  io::save_report(out, rep);
  std::printf("surfels=%zu sampled=%zu fraction_satisfied=%.6f\n", rep.summary.surfel_count,
              rep.summary.sampled_count, rep.summary.fraction_satisfied);
  return 0;
}

int cmd_adapt(const fs::path& scene_dir, const std::string& mode, double s, const fs::path& out) {
  const SceneBundle scene = io::load_scene(scene_dir);
  AdaptationConfig cfg = io::adaptation_from(scene.config);
  if (!mode.empty()) cfg.mode = parse_adaptation_mode(mode);
  if (s > 0.0) cfg.s = s;
  const RateMode rate = io::rate_mode_from(scene.config);
  const int bins = io::config_int(scene.config, "histogram.bins", kDefaultHistogramBins);

  const FrequencyReport before = frequency_report(scene.field, scene.cameras, bins, rate);
  const FieldAdaptation adapted = adapt_field(scene.field, scene.cameras, cfg, rate);
  SurfelField field = adapted.field;
  annotate(field, scene.cameras, rate);
  const FrequencyReport after = frequency_report(field, scene.cameras, bins, rate);

  io::save_ply(out, field);
  io::save_report(sibling(out, "_before.csv"), before);
  io::save_report(sibling(out, "_after.csv"), after);
  std::printf("mode=%s s=%g fraction_satisfied before=%.6f after=%.6f passthrough=%zu\n", to_string(cfg.mode), cfg.s,
              before.summary.fraction_satisfied, after.summary.fraction_satisfied, adapted.passthrough.size());
  return 0;
}

int cmd_render(const fs::path& scene_dir, std::size_t view, const std::string& prefix) {
  const SceneBundle scene = io::load_scene(scene_dir);
  if (view >= scene.views())
    throw std::invalid_argument("view " + std::to_string(view) + " out of range (scene has " +
                                std::to_string(scene.views()) + ")");
  const RenderBuffers buf = render(scene.field, scene.cameras[view], io::background_from(scene.config));
  io::save_ppm(prefix + "_color.ppm", buf.color);
  io::save_pfm(prefix + "_depth.pfm", buf.depth);
  io::save_pfm(prefix + "_normal.pfm", buf.normal);
  io::save_pfm(prefix + "_alpha.pfm", buf.alpha);
  log("rendered view " + std::to_string(view) + " with " + std::to_string(scene.field.size()) + " surfels");
  return 0;
}

struct FitArgs {
  fs::path scene, targets, out, trace;
  int iters = -1;
  double step = -1.0;
  std::string init = "scene";
  int grid_rows = 4;
  int grid_cols = 4;
};

int cmd_fit(const FitArgs& a) {
  const SceneBundle scene = io::load_scene(a.scene);
  const SceneBundle tgt = io::load_scene(a.targets);
  FitConfig cfg;
  cfg.weights = io::loss_weights_from(scene.config);
  cfg.background = io::background_from(scene.config);
  cfg.iterations = a.iters >= 0 ? a.iters : io::config_int(scene.config, "fit.iterations", cfg.iterations);
  cfg.step = a.step > 0.0 ? a.step : io::config_number(scene.config, "fit.step", cfg.step);

  SurfelField initial;
  if (a.init == "grid") {
    const double depth = tgt.has_depth() ? tgt.depth[0]->at(tgt.cameras[0].height / 2, tgt.cameras[0].width / 2) : 1.0;
    initial = synth::grid_field(tgt.cameras[0], a.grid_rows, a.grid_cols, depth > 0.0 ? depth : 1.0, g.seed);
  } else if (a.init == "scene") {
    initial = scene.field;
  } else {
    throw std::invalid_argument("--init must be scene|grid");
  }
  if (initial.empty()) throw std::invalid_argument("fit: initial field is empty");

  FitResult res;
  try {
    res = fit(initial, tgt.cameras, tgt.targets(), cfg);
  } catch (const FitDivergence& e) {
    if (!a.trace.empty()) {
      std::ofstream tr(a.trace);
      tr << "iteration,loss\n";
      for (std::size_t i = 0; i < e.trace().size(); ++i) tr << i << "," << io::format_double(e.trace()[i]) << "\n";
    }
    throw;
  }
  io::save_ply(a.out, res.field);
  if (!a.trace.empty()) {
    std::ofstream tr(a.trace, std::ios::binary);
    if (!tr) throw std::runtime_error("cannot write '" + a.trace.string() + "'");
    tr << "iteration,loss\n";
    for (std::size_t i = 0; i < res.trace.size(); ++i) tr << i << "," << io::format_double(res.trace[i]) << "\n";
  }
  std::printf("iterations=%d initial_loss=%.9g final_loss=%.9g\n", res.iterations_run, res.initial_loss,
              res.final_loss);
  return 0;
}

int cmd_pipeline(const fs::path& scene_dir, const fs::path& weights, const std::string& mode, double s,
                 const fs::path& out) {
  const SceneBundle scene = io::load_scene(scene_dir);
  const io::WeightFile wf = io::load_weights(weights);
  AdaptationConfig cfg = io::adaptation_from(scene.config);
  if (!mode.empty()) cfg.mode = parse_adaptation_mode(mode);
  if (s > 0.0) cfg.s = s;

  HeadSet heads;
  if (wf.depth_w) {
    heads.depth = std::make_shared<LinearDepthHead>(*wf.depth_w, *wf.depth_b);
  } else {
    if (!scene.has_depth())
      throw std::invalid_argument("pipeline: weights have no depth head and the scene has no depth maps");
    std::vector<ScalarImage> depth;
    for (const auto& d : scene.depth) depth.push_back(*d);
    heads.depth = std::make_shared<OracleDepthHead>(std::move(depth));
  }
  if (wf.attr_w)
    heads.attr = std::make_shared<LinearAttrHead>(*wf.attr_w, *wf.attr_b);
  else
    heads.attr = std::make_shared<IdentityAttrHead>();

  PipelineOptions opt;
  opt.epsilon = io::epsilon_from(scene.config);
  opt.bundle_cap = static_cast<std::size_t>(
      io::config_int(scene.config, "pipeline.bundle_cap", static_cast<int>(kDefaultBundleCap)));
  opt.rate_mode = io::rate_mode_from(scene.config);
  const PipelineResult res = run_pipeline(scene.images, scene.cameras, heads, wf.attention, cfg, opt);
  io::save_ply(out, res.field);
  std::printf("surfels=%zu mode=%s s=%g\n", res.field.size(), to_string(cfg.mode), cfg.s);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-aware 2D Gaussian surfel toolkit"};
  app.require_subcommand(1);
  app.add_option("--seed", g.seed, "Seed for randomized initialization");
  app.add_option("--threads", g.threads, "Worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  app.add_flag("--verbose", g.verbose, "Log progress to stderr");

  fs::path scene, out, targets, trace, weights;
  std::string mode, prefix, kind = "plane";
  double s = -1.0;
  std::size_t view = 0;
  int bins = 0;
  FitArgs fa;
  synth::SynthParams sp;

  auto* analyze = app.add_subcommand("analyze", "Per-surfel Nyquist report");
  analyze->add_option("--scene", scene, "Scene directory")->required();
  analyze->add_option("--out", out, "Report CSV (a .json summary is written alongside)")->required();
  analyze->add_option("--bins", bins, "Histogram bins (default from config or 64)");

  auto* adapt_cmd = app.add_subcommand("adapt", "Apply the frequency bound to a scene's field");
  adapt_cmd->add_option("--scene", scene, "Scene directory")->required();
  adapt_cmd->add_option("--mode", mode, "paper|convolution")->check(CLI::IsMember({"paper", "convolution"}));
  adapt_cmd->add_option("--s", s, "Filter hyperparameter")->check(CLI::PositiveNumber);
  adapt_cmd->add_option("--out", out, "Adapted PLY; _before/_after report CSVs go alongside")->required();

  auto* render_cmd = app.add_subcommand("render", "Render color/depth/normal/alpha buffers");
  render_cmd->add_option("--scene", scene, "Scene directory")->required();
  render_cmd->add_option("--view", view, "View index")->required();
  render_cmd->add_option("--out-prefix", prefix, "Output prefix")->required();

  auto* fit_cmd = app.add_subcommand("fit", "Optimize a field against target views");
  fit_cmd->add_option("--scene", fa.scene, "Scene holding the initial field and config")->required();
  fit_cmd->add_option("--targets", fa.targets, "Scene holding cameras and target buffers")->required();
  fit_cmd->add_option("--iters", fa.iters, "Iterations")->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--step", fa.step, "Initial step length")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--init", fa.init, "scene|grid")->check(CLI::IsMember({"scene", "grid"}));
  fit_cmd->add_option("--grid-rows", fa.grid_rows, "Rows of the grid initialization")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--grid-cols", fa.grid_cols, "Columns of the grid initialization")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--out", fa.out, "Fitted PLY")->required();
  fit_cmd->add_option("--trace", fa.trace, "Loss trace CSV");

  auto* pipe_cmd = app.add_subcommand("pipeline", "Two-pass surfel prediction with feature aggregation");
  pipe_cmd->add_option("--scene", scene, "Scene directory")->required();
  pipe_cmd->add_option("--weights", weights, "Weight manifest JSON")->required();
  pipe_cmd->add_option("--mode", mode, "paper|convolution")->check(CLI::IsMember({"paper", "convolution"}));
  pipe_cmd->add_option("--s", s, "Filter hyperparameter")->check(CLI::PositiveNumber);
  pipe_cmd->add_option("--out", out, "Output PLY")->required();

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic scene directory");
  synth_cmd->add_option("--kind", kind, "plane|tilted_plane|two_spheres|step_edge")
      ->check(CLI::IsMember({"plane", "tilted_plane", "two_spheres", "step_edge"}));
  synth_cmd->add_option("--out", out, "Output directory")->required();
  synth_cmd->add_option("--width", sp.width)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--height", sp.height)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--focal", sp.focal)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--depth", sp.depth)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--angle", sp.angle_deg, "Tilt in degrees for tilted_plane");
  synth_cmd->add_option("--views", sp.views)->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (g.threads > 0) omp_set_num_threads(g.threads);
#endif

  try {
    if (*analyze) return cmd_analyze(scene, out, bins);
    if (*adapt_cmd) return cmd_adapt(scene, mode, s, out);
    if (*render_cmd) return cmd_render(scene, view, prefix);
    if (*fit_cmd) return cmd_fit(fa);
    if (*pipe_cmd) return cmd_pipeline(scene, weights, mode, s, out);
    if (*synth_cmd) {
      sp.kind = synth::parse_kind(kind);
      sp.seed = g.seed;
      io::save_scene(out, synth::synth_scene(sp));
      log("wrote " + out.string());
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
