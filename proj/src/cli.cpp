#include "geofb/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "geofb/error.hpp"
#include "geofb/geoscores.hpp"
#include "geofb/io.hpp"
#include "geofb/parallel.hpp"
#include "geofb/perception.hpp"
#include "geofb/report.hpp"
#include "geofb/rewards.hpp"
#include "geofb/scene.hpp"
#include "geofb/windowed_rl.hpp"

namespace geofb::cli {

namespace fs = std::filesystem;

namespace {

// Seed offset for the noise stream so that it never replays the window stream.
constexpr std::uint64_t kNoiseStreamSalt = 0x9e3779b97f4a7c15ULL;

void require_file(const std::string& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw IoError(path, "no such file");
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

fs::path dir_of(const std::string& path) {
  const fs::path p(path);
  return p.has_parent_path() ? p.parent_path() : fs::path(".");
}

WindowConfig parse_window(const std::string& spec) {
  WindowConfig w;
  std::istringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidArgumentError("window: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
    int v = 0;
    try {
      std::size_t used = 0;
      v = std::stoi(val, &used);
      if (used != val.size()) throw std::invalid_argument(val);
    } catch (const std::logic_error&) {
      throw InvalidArgumentError("window: '" + val + "' is not an integer");
    }
    if (key == "w") {
      w.w = v;
    } else if (key == "tmin") {
      w.t_min = v;
    } else if (key == "tmax") {
      w.t_max = v;
    } else {
      throw InvalidArgumentError("window: unknown key '" + key + "'");
    }
  }
  return w;
}

std::vector<int> parse_int_list(const std::string& spec, const char* what) {
  std::vector<int> out;
  std::istringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw InvalidArgumentError(std::string(what) + ": '" + item + "' is not an integer");
    }
  }
  if (out.empty()) throw InvalidArgumentError(std::string(what) + ": empty list");
  return out;
}

OccupancyConfig occupancy_mode(const std::string& mode) {
  OccupancyConfig occ;
  occ.include_ground = mode == "full";
  return occ;
}

// Options shared by optimize and probe.
struct SetupOptions {
  std::string scene;
  std::string weights;
  std::string vp_head = "ransac";
  std::string occupancy = "full";
  int latent_factor = 2;
  int T = 30;
};

void add_setup_options(CLI::App* sub, SetupOptions& o) {
  sub->add_option("--scene", o.scene, "scene JSON")->required();
  sub->add_option("--weights", o.weights, "reward weights JSON (default 0.1, 0.1, 0.5)");
  sub->add_option("--vp-head", o.vp_head, "VP source for r_vp")
      ->check(CLI::IsMember({"ransac", "geometric"}))
      ->capture_default_str();
  sub->add_option("--occupancy", o.occupancy, "occupancy content: ground slab plus vehicles, or vehicles only")
      ->check(CLI::IsMember({"full", "vehicles"}))
      ->capture_default_str();
  sub->add_option("--latent-factor", o.latent_factor, "latent downsampling factor")->capture_default_str();
  sub->add_option("--T", o.T, "trajectory length")->capture_default_str();
}

RewardSetup make_setup(const SetupOptions& o) {
  require_file(o.scene);
  if (!o.weights.empty()) require_file(o.weights);
  const SceneDocument doc = scene_from_json(read_text_file(o.scene));
  RewardSetup s;
  s.scene = doc.scene;
  s.camera = doc.camera;
  s.occupancy = occupancy_mode(o.occupancy);
  if (!o.weights.empty()) s.weights = weights_from_json(read_text_file(o.weights));
  s.vp_head = o.vp_head == "geometric" ? VpHead::kGeometric : VpHead::kMaskRansac;
  s.latent_factor = o.latent_factor;
  s.T = o.T;
  s.validate();
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geometric reward, GeoScores and windowed optimization on procedural driving scenes", "geofb"};
  app.set_version_flag("--version", std::string("geofb ") + kVersion);
  app.require_subcommand(1);

  std::function<int()> action;

  // synth
  SceneConfig sc;
  std::uint64_t synth_seed = 0;
  std::string synth_out, synth_dist;
  auto* synth = app.add_subcommand("synth", "generate a procedural scene");
  synth->add_option("--seed", synth_seed, "scene seed")->capture_default_str();
  synth->add_option("--lanes", sc.num_lanes, "number of lane markings")->capture_default_str();
  synth->add_option("--lane-spacing", sc.lane_spacing_m, "meters between markings")->capture_default_str();
  synth->add_option("--lane-width", sc.lane_width_m, "marking width in meters")->capture_default_str();
  synth->add_option("--vehicles", sc.num_vehicles, "number of vehicles")->capture_default_str();
  synth->add_option("--vehicle-min-dist", sc.vehicle_min_dist_m, "nearest vehicle distance, meters")
      ->capture_default_str();
  synth->add_option("--vehicle-max-dist", sc.vehicle_max_dist_m, "farthest vehicle distance, meters")
      ->capture_default_str();
  synth->add_option("--distortion", synth_dist, "distortion JSON to embed");
  synth->add_option("--out", synth_out, "output scene JSON")->required();
  synth->callback([&] {
    action = [&] {
      if (!synth_dist.empty()) require_file(synth_dist);
      SceneDocument doc;
      doc.scene = synth_scene(synth_seed, sc);
      if (!synth_dist.empty()) doc.distortion = distortion_from_json(read_text_file(synth_dist));
      emit(synth_out, scene_to_json(doc), out);
      return 0;
    };
  });

  // render
  std::vector<std::string> render_scenes;
  std::string render_dir, render_dist, render_occ = "full";
  auto* render = app.add_subcommand("render", "render scenes to RLGT channels and a manifest");
  render->add_option("--scene", render_scenes, "scene JSON; repeat for multiple frames")->required();
  render->add_option("--distortion", render_dist, "distortion JSON overriding the scene's own");
  render->add_option("--occupancy", render_occ, "occupancy content")
      ->check(CLI::IsMember({"full", "vehicles"}))
      ->capture_default_str();
  render->add_option("--out-dir", render_dir, "output directory (manifest.json plus channels)")->required();
  render->callback([&] {
    action = [&] {
      for (const auto& s : render_scenes) require_file(s);
      if (!render_dist.empty()) require_file(render_dist);
      const OccupancyConfig occ = occupancy_mode(render_occ);
      Manifest m;
      m.occupancy_grid = occ.geometry;
      for (std::size_t i = 0; i < render_scenes.size(); ++i) {
        SceneDocument doc = scene_from_json(read_text_file(render_scenes[i]));
        if (!render_dist.empty()) doc.distortion = distortion_from_json(read_text_file(render_dist));
        const RenderedFrame f = render_frame(doc.scene, doc.camera, doc.distortion, occ);
        m.frames.push_back(write_frame(f, render_dir, "frame" + std::to_string(i)));
      }
      write_text_file(fs::path(render_dir) / "manifest.json", manifest_to_json(m));
      return 0;
    };
  });

  // perceive
  std::string perceive_mask, perceive_manifest, perceive_out;
  int perceive_frame = 0;
  std::uint64_t perceive_seed = 0;
  auto* perceive = app.add_subcommand("perceive", "estimate the vanishing point of a lane mask");
  auto* pm = perceive->add_option("--mask", perceive_mask, "lane mask RLGT file");
  auto* pman = perceive->add_option("--manifest", perceive_manifest, "manifest; uses the frame's lane mask");
  pm->excludes(pman);
  perceive->add_option("--frame", perceive_frame, "frame index within --manifest")->capture_default_str();
  perceive->add_option("--seed", perceive_seed, "RANSAC seed")->capture_default_str();
  perceive->add_option("--out", perceive_out, "output JSON (default stdout)");
  perceive->callback([&] {
    action = [&] {
      BinaryMask mask;
      if (!perceive_mask.empty()) {
        require_file(perceive_mask);
        mask = BinaryMask::from_tensor(read_tensor(perceive_mask));
      } else if (!perceive_manifest.empty()) {
        require_file(perceive_manifest);
        const Manifest m = manifest_from_json(read_text_file(perceive_manifest));
        mask = load_frame(m, static_cast<std::size_t>(std::max(perceive_frame, 0)), dir_of(perceive_manifest))
                   .lane_mask;
      } else {
        throw CLI::RequiredError("--mask or --manifest");
      }
      VPConfig cfg;
      cfg.ransac.seed = perceive_seed;
      emit(perceive_out, vp_estimate_json(estimate_vp(mask, cfg)), out);
      return 0;
    };
  });

  // score
  std::string score_synth, score_real, score_csv, score_json;
  int score_threads = 1;
  auto* score = app.add_subcommand("score", "GeoScores of a synthesized manifest against a real one");
  score->add_option("--synth-manifest", score_synth, "synthesized frames")->required();
  score->add_option("--real-manifest", score_real, "real frames")->required();
  score->add_option("--out", score_csv, "CSV report (default stdout)");
  score->add_option("--json", score_json, "JSON report");
  score->add_option("--threads", score_threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  score->callback([&] {
    action = [&] {
      require_file(score_synth);
      require_file(score_real);
      const Manifest ms = manifest_from_json(read_text_file(score_synth));
      const Manifest mr = manifest_from_json(read_text_file(score_real));
      if (ms.frames.size() != mr.frames.size()) {
        throw DimensionError("manifests list " + std::to_string(ms.frames.size()) + " and " +
                             std::to_string(mr.frames.size()) + " frames");
      }
      std::vector<FrameScore> rows(ms.frames.size());
      const VPConfig vp;
      parallel_for(rows.size(), score_threads, [&](std::size_t i) {
        FrameScore& s = rows[i];
        s.frame = static_cast<int>(i);
        s.vp_error = s.lane_f1 = s.depth_rmse = std::numeric_limits<double>::quiet_NaN();
        try {
          const RenderedFrame a = load_frame(ms, i, dir_of(score_synth));
          const RenderedFrame b = load_frame(mr, i, dir_of(score_real));
          s.lane_f1 = score_lane(a.lane_mask, b.lane_mask);
          s.depth_rmse = score_depth(a.depth, b.depth, b.road_mask);
          s.vp_error = score_vp(estimate_vp(a.lane_mask, vp).vp, estimate_vp(b.lane_mask, vp).vp);
        } catch (const Error& e) {
          s.error = e.what();
        }
      });
      bool any_failed = false;
      for (const auto& r : rows) any_failed |= !r.ok();
      GeoScoreReport rep;
      try {
        rep = aggregate_report(rows);
      } catch (const EmptyInputError&) {
        // Every frame failed: keep the rows, means stay NaN.
        rep.frames = rows;
        rep.vp_error = rep.lane_f1 = rep.depth_rmse = std::numeric_limits<double>::quiet_NaN();
      }
      emit(score_csv, report_csv(rep), out);
      if (!score_json.empty()) write_text_file(score_json, report_json(rep));
      for (const auto& r : rows) {
        if (!r.ok()) err << "frame " << r.frame << ": " << r.error << "\n";
      }
      return any_failed ? static_cast<int>(kExitData) : 0;
    };
  });

  // reward
  std::string reward_gen, reward_ref, reward_weights, reward_out;
  int reward_frame_index = 0;
  auto* reward = app.add_subcommand("reward", "hierarchical geometric reward of a generated frame");
  reward->add_option("--gen-manifest", reward_gen, "generated frames")->required();
  reward->add_option("--ref-manifest", reward_ref, "reference frames")->required();
  reward->add_option("--weights", reward_weights, "reward weights JSON");
  reward->add_option("--frame", reward_frame_index, "frame index")->capture_default_str();
  reward->add_option("--out", reward_out, "output JSON (default stdout)");
  reward->callback([&] {
    action = [&] {
      require_file(reward_gen);
      require_file(reward_ref);
      if (!reward_weights.empty()) require_file(reward_weights);
      RewardWeights w;
      if (!reward_weights.empty()) w = weights_from_json(read_text_file(reward_weights));
      const Manifest mg = manifest_from_json(read_text_file(reward_gen));
      const Manifest mr = manifest_from_json(read_text_file(reward_ref));
      const auto idx = static_cast<std::size_t>(std::max(reward_frame_index, 0));
      const RenderedFrame g = load_frame(mg, idx, dir_of(reward_gen));
      const RenderedFrame r = load_frame(mr, idx, dir_of(reward_ref));
      emit(reward_out, reward_json(reward_frame_pair(g, r, w, VPConfig{})), out);
      return 0;
    };
  });

  // optimize
  SetupOptions opt_setup;
  OptimizerConfig ocfg;
  std::string opt_init, opt_window = "w=5,tmin=8,tmax=30", opt_trace, opt_best, opt_kind = "adam";
  auto* optimize_cmd = app.add_subcommand("optimize", "windowed reward optimization of the distortion");
  add_setup_options(optimize_cmd, opt_setup);
  optimize_cmd->add_option("--distortion-init", opt_init, "initial distortion JSON")->required();
  optimize_cmd->add_option("--window", opt_window, "window spec w=..,tmin=..,tmax=..")->capture_default_str();
  optimize_cmd->add_option("--iters", ocfg.iterations, "iterations")->capture_default_str();
  optimize_cmd->add_option("--lr", ocfg.learning_rate, "learning rate")->capture_default_str();
  optimize_cmd->add_option("--fd", ocfg.fd_step, "finite-difference step")->capture_default_str();
  optimize_cmd->add_option("--seed", ocfg.seed, "window and noise seed")->capture_default_str();
  optimize_cmd->add_option("--windows-per-iter", ocfg.windows_per_iter, "windows averaged per update")
      ->capture_default_str();
  optimize_cmd->add_option("--optimizer", opt_kind, "update rule")
      ->check(CLI::IsMember({"adam", "sgd"}))
      ->capture_default_str();
  optimize_cmd->add_flag("--accumulate-steps", ocfg.accumulate_window_steps,
                         "average gradients over every step of the window");
  optimize_cmd->add_option("--threads", ocfg.threads, "worker threads")->capture_default_str();
  optimize_cmd->add_option("--trace", opt_trace, "trace CSV (default stdout)");
  optimize_cmd->add_option("--best", opt_best, "write the best distortion as JSON");
  optimize_cmd->callback([&] {
    action = [&] {
      require_file(opt_init);
      const RewardSetup setup = make_setup(opt_setup);
      const DistortionParams init = distortion_from_json(read_text_file(opt_init));
      WindowConfig wcfg = parse_window(opt_window);
      wcfg.seed = ocfg.seed;
      OptimizerConfig oc = ocfg;
      oc.seed = ocfg.seed ^ kNoiseStreamSalt;
      oc.kind = opt_kind == "sgd" ? OptimizerKind::kSgd : OptimizerKind::kAdam;
      const ReferenceBundle ref = build_reference(setup);
      const OptimizationTrace trace = optimize(init, setup, ref, wcfg, oc);
      emit(opt_trace, trace_csv(trace), out);
      if (!opt_best.empty()) write_text_file(opt_best, distortion_to_json(trace.best_theta));
      return 0;
    };
  });

  // probe
  SetupOptions probe_setup;
  std::string probe_theta, probe_steps = "0,5,10,15,20,25,30", probe_out;
  int probe_seeds = 32, probe_threads = 1;
  std::uint64_t probe_base = 0;
  auto* probe = app.add_subcommand("probe", "reward mean and variance across noise seeds per step");
  add_setup_options(probe, probe_setup);
  probe->add_option("--distortion", probe_theta, "distortion JSON (default identity)");
  probe->add_option("--steps", probe_steps, "comma-separated steps k")->capture_default_str();
  probe->add_option("--seeds", probe_seeds, "noise seeds per step")->capture_default_str();
  probe->add_option("--seed", probe_base, "first noise seed")->capture_default_str();
  probe->add_option("--threads", probe_threads, "worker threads")->capture_default_str();
  probe->add_option("--out", probe_out, "output CSV (default stdout)");
  probe->callback([&] {
    action = [&] {
      if (!probe_theta.empty()) require_file(probe_theta);
      const RewardSetup setup = make_setup(probe_setup);
      DistortionParams theta;
      if (!probe_theta.empty()) theta = distortion_from_json(read_text_file(probe_theta));
      const auto steps = parse_int_list(probe_steps, "steps");
      const ReferenceBundle ref = build_reference(setup);
      emit(probe_out, probe_csv(variance_probe(theta, steps, probe_seeds, probe_base, setup, ref, probe_threads)),
           out);
      return 0;
    };
  });

  // report
  std::string report_trace, report_dir;
  auto* report = app.add_subcommand("report", "summary table and curves from an optimization trace");
  report->add_option("--trace", report_trace, "trace CSV")->required();
  report->add_option("--out", report_dir, "output directory for summary.md and curves.svg")->required();
  report->callback([&] {
    action = [&] {
      require_file(report_trace);
      const CsvTable t = parse_numeric_csv(read_text_file(report_trace));
      const TraceSummary s = summarize_trace(t);
      const std::string svg = curves_svg(t);
      write_text_file(fs::path(report_dir) / "summary.md", summary_markdown(s));
      write_text_file(fs::path(report_dir) / "curves.svg", svg);
      return 0;
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    return action ? action() : static_cast<int>(kExitUsage);
  } catch (const CLI::ParseError& e) {
    err << "error: missing required option " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace geofb::cli
