#include <gtest/gtest.h>

#include <cmath>

#include "geofb/error.hpp"
#include "geofb/io.hpp"
#include "geofb/report.hpp"
#include "test_util.hpp"

using namespace geofb;

namespace {

DistortionParams sample_distortion() {
  DistortionParams d;
  d.vp_dx = 0.086;
  d.vp_dy = -0.01;
  d.depth_scale = 1.17;
  d.depth_bias = 0.25;
  d.lane_warp_amp = 0.3;
  d.lane_warp_freq = 0.15;
  d.jitter_dx = -0.4;
  d.jitter_dy = 0.125;
  return d;
}

}  // namespace

TEST(Json, SceneRoundTrip) {
  SceneConfig c;
  c.num_vehicles = 3;
  SceneDocument doc{synth_scene(7, c), CameraModel{}, sample_distortion()};
  const std::string text = scene_to_json(doc);
  EXPECT_EQ(scene_from_json(text), doc);
  EXPECT_EQ(scene_to_json(scene_from_json(text)), text);
  EXPECT_EQ(text.back(), '\n');
}

TEST(Json, DistortionRoundTripAndDefaults) {
  const DistortionParams d = sample_distortion();
  EXPECT_EQ(distortion_from_json(distortion_to_json(d)), d);
  EXPECT_EQ(distortion_from_json("{}"), DistortionParams{});
  const DistortionParams partial = distortion_from_json(R"({"vp_shift": [0.05, 0.0]})");
  EXPECT_EQ(partial.vp_dx, 0.05);
  EXPECT_EQ(partial.depth_scale, 1.0);
}

TEST(Json, DistortionInsideSceneFile) {
  SceneDocument doc{synth_scene(1, SceneConfig{}), CameraModel{}, sample_distortion()};
  EXPECT_EQ(distortion_from_json(scene_to_json(doc)), doc.distortion);
}

TEST(Json, WeightsRoundTrip) {
  const RewardWeights w{0.2, 0.3, 0.7};
  EXPECT_EQ(weights_from_json(weights_to_json(w)), w);
  EXPECT_THROW(weights_from_json(R"({"lambda_vp": -1})"), InvalidArgumentError);
}

TEST(Json, MalformedIsParseError) {
  EXPECT_THROW(scene_from_json("{not json"), ParseError);
  EXPECT_THROW(scene_from_json(R"({"seed": "x"})"), ParseError);
  EXPECT_THROW(distortion_from_json(R"({"vp_shift": [1]})"), ParseError);
  EXPECT_THROW(weights_from_json("[]"), ParseError);
}

TEST(Manifest, WriteLoadRoundTrip) {
  test::TempDir dir("manifest");
  const SceneSpec s = synth_scene(3, SceneConfig{});
  DistortionParams d;
  d.depth_scale = 1.3;
  const RenderedFrame f = render_frame(s, CameraModel{}, d);
  OccupancyConfig oc;
  const OccupancyGrid occ = rasterize_occupancy(s, d, oc);
  Manifest m;
  m.occupancy_grid = oc.geometry;
  FrameFiles ff = write_frame(f, dir.path(), "f0");
  write_tensor(occ.to_tensor(), dir.path() / "f0_occ.rlgt");
  ff.occupancy = "f0_occ.rlgt";
  m.frames.push_back(ff);
  write_text_file(dir.path() / "manifest.json", manifest_to_json(m));

  const Manifest back = manifest_from_json(read_text_file(dir.path() / "manifest.json"));
  EXPECT_EQ(back, m);
  const RenderedFrame g = load_frame(back, 0, dir.path());
  EXPECT_EQ(g.lane_mask, f.lane_mask);
  EXPECT_EQ(g.road_mask, f.road_mask);
  EXPECT_EQ(g.vehicle_mask, f.vehicle_mask);
  EXPECT_EQ(g.depth, f.depth);
  EXPECT_EQ(g.true_vp, f.true_vp);
}

TEST(Manifest, EmptyAndMissing) {
  EXPECT_THROW(manifest_from_json(manifest_to_json(Manifest{})), EmptyInputError);
  Manifest m;
  m.frames.push_back(FrameFiles{"a.rlgt", "b.rlgt", "c.rlgt", "d.rlgt", "", {0.5, 0.5}});
  EXPECT_THROW(load_frame(m, 0, "/nonexistent"), IoError);
  EXPECT_THROW(load_frame(m, 3, "/nonexistent"), RangeError);
}

TEST(TextFile, CreatesParentsAndReportsMissing) {
  test::TempDir dir("text");
  write_text_file(dir.path() / "a" / "b" / "c.txt", "hello");
  EXPECT_EQ(read_text_file(dir.path() / "a" / "b" / "c.txt"), "hello");
  EXPECT_THROW(read_text_file(dir.path() / "missing.txt"), IoError);
}

TEST(Csv, ParseAndColumns) {
  const CsvTable t = parse_numeric_csv("a,b\n1,2.5\n-3,1e-3\n");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.column("b"), 1u);
  EXPECT_EQ(t.rows[1][1], 1e-3);
  EXPECT_THROW(t.column("c"), ParseError);
  EXPECT_THROW(parse_numeric_csv(""), ParseError);
  EXPECT_THROW(parse_numeric_csv("a,b\n1\n"), ParseError);
  EXPECT_THROW(parse_numeric_csv("a,b\n1,x\n"), ParseError);
}

TEST(Csv, TraceRoundTrip) {
  OptimizationTrace tr;
  for (int i = 0; i < 3; ++i) {
    TraceRow r;
    r.iter = i;
    r.window = {8 + i, 3 + i};
    r.theta = sample_distortion();
    r.theta.vp_dx = 0.1 / (i + 1);
    r.reward.R = -1.0 + 0.25 * i;
    r.geoscores.vp_error = 0.09 - 0.01 * i;
    r.geoscores.lane_f1 = 0.5;
    r.geoscores.depth_rmse = 1.8 - 0.5 * i;
    tr.rows.push_back(r);
  }
  const CsvTable t = parse_numeric_csv(trace_csv(tr));
  EXPECT_EQ(t.header.front(), "iter");
  EXPECT_EQ(t.header.size(), 14u + DistortionParams::kDim);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[2][t.column("t_prime")], 10.0);
  EXPECT_EQ(t.rows[2][t.column("R")], -0.5);
  EXPECT_NEAR(t.rows[1][t.column("vp_dx")], 0.05, 1e-9);
}

TEST(Report, ConstantTraceHasZeroReduction) {
  const CsvTable t = parse_numeric_csv(
      "iter,R,vp_error,lane_f1,depth_rmse\n0,-1,0.05,0.8,1\n1,-1,0.05,0.8,1\n2,-1,0.05,0.8,1\n");
  const TraceSummary s = summarize_trace(t);
  EXPECT_EQ(s.iterations, 2);
  EXPECT_EQ(s.vp_error.reduction_pct, 0.0);
  EXPECT_EQ(s.depth_rmse.reduction_pct, 0.0);
  EXPECT_EQ(s.lane_f1.reduction_pct, 0.0);
  EXPECT_NE(summary_markdown(s).find("0.0%"), std::string::npos);
  const std::string svg = curves_svg(t);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Report, Reductions) {
  const CsvTable t = parse_numeric_csv("iter,R,vp_error,lane_f1,depth_rmse\n0,-2,0.086,0.5,1.822\n1,-1,0.043,1,0.911\n");
  const TraceSummary s = summarize_trace(t);
  EXPECT_NEAR(s.vp_error.reduction_pct, 50.0, 1e-9);
  EXPECT_NEAR(s.depth_rmse.reduction_pct, 50.0, 1e-9);
  EXPECT_NEAR(s.lane_f1.reduction_pct, -100.0, 1e-9);
  EXPECT_EQ(s.best_iter, 1);
}

TEST(Report, EmptyOrIncompleteTrace) {
  EXPECT_THROW(summarize_trace(parse_numeric_csv("iter,R,vp_error,lane_f1,depth_rmse\n")), EmptyInputError);
  EXPECT_THROW(summarize_trace(parse_numeric_csv("iter,R\n0,1\n")), ParseError);
}

TEST(ResultJson, NanIsNull) {
  GeoScoreReport r = aggregate_report({{0, 0.1, 0.5, 1.0, ""}});
  r.frames.push_back({1, std::nan(""), 0.0, 0.0, "vp failed"});
  EXPECT_NE(report_json(r).find("null"), std::string::npos);
}
