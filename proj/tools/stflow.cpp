// Copyright (c) the stflow authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// stflow: space-time regularity statistics and regularity-based motion
// estimation from the command line. Exit codes: 0 success, 2 data/domain
// error, 64 usage error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "stflow/stflow.hpp"
#include "stflow/serialize.hpp"
#include "stflow/synthetic.hpp"

namespace fs = std::filesystem;
using namespace stflow;

namespace {

constexpr int kExitData = 2;
constexpr int kExitUsage = 64;
constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Input {
  std::string frames;
  int first = 1;
  int last = 2;
};

struct Common {
  std::string out = ".";
  std::vector<std::string> argv;  // command line as given, for the manifest
};

struct BinningArgs {
  int bins = binning::kBins;
  double lo = binning::kLo;
  double hi = binning::kHi;

  Binning get() const { return {bins, lo, hi}; }
  json to_json() const { return {{"bins", bins}, {"lo", lo}, {"hi", hi}}; }
};

void add_input(CLI::App* cmd, Input& in) {
  cmd->add_option("--frames", in.frames, "Frame path pattern with one %d, e.g. f_%03d.pgm")->required();
  cmd->add_option("--first", in.first, "First frame index (inclusive)");
  cmd->add_option("--last", in.last, "Last frame index (inclusive)");
}

void add_binning(CLI::App* cmd, BinningArgs& b) {
  cmd->add_option("--bins", b.bins, "Histogram bin count")->check(CLI::PositiveNumber);
  cmd->add_option("--bin-lo", b.lo, "Histogram lower edge");
  cmd->add_option("--bin-hi", b.hi, "Histogram upper edge");
}

json input_json(const Input& in) { return {{"frames", in.frames}, {"first", in.first}, {"last", in.last}}; }

fs::path prepare_out(const Common& c) {
  fs::path out(c.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error("cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

void write_manifest(const fs::path& out, const std::string& command, const Common& c, json params) {
  json m = {{"tool", "stflow"},
            {"version", kVersion},
            {"command", command},
            {"argv", c.argv},
            {"parameters", std::move(params)},
            {"random_algorithm", std::string(kRandomTrajectoryAlgorithm)}};
  write_json(out / "manifest.json", m);
}

std::optional<FlowField> maybe_flow(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return read_flo(path);
}

// ---------------------------------------------------------------- stats

struct StatsArgs {
  Input in;
  std::string trajectory = "motion";
  std::vector<int> origin{0, 0};
  int t0 = 0;
  int patch = 100;
  int depth = 40;
  std::string norm = "STDN";
  int temporal_half_width = presets::kTemporalHalfWidthAnalysis;
  double c = presets::kDivisiveC;
  std::uint64_t seed = 1;
  int drift = 20;
  std::string flow_pattern;
  std::vector<double> uniform_flow;
  std::string differencing = "stepwise";
  bool dump_volume = false;
  BinningArgs binning;
};

void run_stats(const StatsArgs& a, const Common& c) {
  const FrameSequence seq = load_frame_sequence(a.in.frames, a.in.first, a.in.last);
  const NormKind kind = parse_norm_kind(a.norm);
  if (kind == NormKind::MSCN2D) throw UsageError("--norm must be TDN, SDN or STDN");
  TrajectorySpec spec;
  spec.kind = parse_trajectory_kind(a.trajectory);
  spec.origin_x = a.origin[0];
  spec.origin_y = a.origin[1];
  spec.t0 = a.t0;
  spec.depth = a.depth;
  spec.seed = a.seed;
  spec.drift_bound = a.drift;
  spec.anchor_x = a.patch / 2;
  spec.anchor_y = a.patch / 2;
  std::vector<FlowField> flows;
  if (spec.kind == TrajectoryKind::Motion) {
    if (!a.uniform_flow.empty()) {
      flows.assign(static_cast<std::size_t>(a.depth),
                   synthetic::constant_flow(seq.width(), seq.height(), a.uniform_flow[0], a.uniform_flow[1]));
    } else if (!a.flow_pattern.empty()) {
      for (int k = 0; k < a.depth; ++k) flows.push_back(read_flo(format_frame_path(a.flow_pattern, a.in.first + a.t0 + k)));
    } else {
      throw UsageError("motion trajectories need --flow or --uniform-flow");
    }
  }
  const Trajectory traj = make_trajectory(spec, flows);
  const Differencing mode = a.differencing == "anchored" ? Differencing::Anchored : Differencing::Stepwise;
  const FrameDiffVolume vol = collect_volume(seq, traj, a.patch, a.patch, mode);
  const GaussianWindow window = window_for(kind, a.temporal_half_width);
  NormalizedVolume nv = unit_variance(divisive_normalize(vol.diffs, kind, window, a.c));
  const Binning b = a.binning.get();
  const Histogram hist = histogram(nv.coeffs.values(), b);
  const double divergence = kld(hist, gaussian_reference(b));
  const GgdFit fit = ggd_fit(nv.coeffs.values());
  json raw_fit = nullptr;
  try {
    raw_fit = to_json(ggd_fit(vol.diffs.values()));
  } catch (const Error&) {
  }

  const fs::path out = prepare_out(c);
  write_text(out / "histogram.csv", histogram_csv(hist));
  write_json(out / "ggd.json", to_json(fit));
  write_json(out / "stats.json", {{"kld", divergence},
                                  {"norm", std::string(to_string(kind))},
                                  {"depth", vol.depth()},
                                  {"mean_abs_difference", mean_abs(vol.diffs.values())},
                                  {"ggd_normalized", to_json(fit)},
                                  {"ggd_raw", raw_fit},
                                  {"trajectory", to_json(vol.trajectory)}});
  if (a.dump_volume) {
    json meta = {{"trajectory", to_json(vol.trajectory)}, {"differencing", a.differencing}};
    write_volume_raw(vol.diffs, out / "differences.raw", meta);
    meta["kind"] = std::string(to_string(kind));
    meta["c"] = a.c;
    meta["unit_variance"] = true;
    write_volume_raw(nv.coeffs, out / "coefficients.raw", meta);
  }
  write_manifest(out, "stats", c,
                 {{"input", input_json(a.in)},
                  {"trajectory", a.trajectory},
                  {"origin", a.origin},
                  {"t0", a.t0},
                  {"patch_size", a.patch},
                  {"depth", a.depth},
                  {"norm", a.norm},
                  {"temporal_half_width", a.temporal_half_width},
                  {"spatial_half_width", presets::kSpatialHalfWidth},
                  {"c", a.c},
                  {"seed", a.seed},
                  {"drift_bound", a.drift},
                  {"flow", a.flow_pattern},
                  {"uniform_flow", a.uniform_flow},
                  {"differencing", a.differencing},
                  {"binning", a.binning.to_json()}});
}

// ---------------------------------------------------------------- regmap

struct RegmapArgs {
  Input in;
  std::vector<int> origin{0, 0};
  int t0 = 0;
  int t = 1;
  int patch = 81;
  int range = -1;
  double c = presets::kDivisiveC;
  BinningArgs binning;
};

void run_regmap(const RegmapArgs& a, const Common& c) {
  const FrameSequence seq = load_frame_sequence(a.in.frames, a.in.first, a.in.last);
  const int range = a.range >= 0 ? a.range : displacement_range(a.patch);
  RegularityOptions opt{a.binning.get(), a.c};
  const RegularityMap map = regularity_map(seq, {a.origin[0], a.origin[1], a.patch, a.patch}, a.t0, a.t, range, opt);
  const MotionEstimate est = estimate_patch_motion(map);
  const MapImage img = regularity_map_image(map);
  const Offset best = map.argmin();

  const fs::path out = prepare_out(c);
  write_text(out / "regmap.csv", regularity_map_csv(map));
  write_pgm16(img.pixels, out / "regmap.pgm");
  write_json(out / "regmap.json", {{"range", range},
                                   {"patch", {a.origin[0], a.origin[1], a.patch, a.patch}},
                                   {"t0", a.t0},
                                   {"t", a.t},
                                   {"norm", "SDN"},
                                   {"pgm_scaling", {{"min", img.min}, {"max", img.max}, {"infinite", 65535}}},
                                   {"argmin", {best.x, best.y}},
                                   {"estimate", {{"u", est.u}, {"v", est.v}, {"set_size", est.set_size}}}});
  write_manifest(out, "regmap", c,
                 {{"input", input_json(a.in)},
                  {"origin", a.origin},
                  {"t0", a.t0},
                  {"t", a.t},
                  {"patch_size", a.patch},
                  {"range", range},
                  {"c", a.c},
                  {"spatial_half_width", presets::kSpatialHalfWidth},
                  {"binning", a.binning.to_json()}});
}

// ---------------------------------------------------------------- flow

struct FlowArgs {
  Input in;
  std::string method;
  int t0 = 0;
  int t = 1;
  int patch = 81;
  bool sweep = false;
  int iterations = 100;
  double alpha = 1.0;
  bool prefilter = false;
  std::string gt;
  double c = presets::kDivisiveC;
  BinningArgs binning;
};

FlowField four_step_field(const FrameSequence& seq, int t0, int patch, NormKind kind, const RegularityOptions& reg) {
  TrajectorySearchOptions opt;
  opt.patch_size = patch;
  opt.regularity = reg;
  FlowField f(seq.width(), seq.height());
  std::fill(f.valid.values().begin(), f.valid.values().end(), std::uint8_t{0});
  for (int y0 = 0; y0 + patch <= seq.height(); y0 += patch) {
    for (int x0 = 0; x0 + patch <= seq.width(); x0 += patch) {
      TrajectorySearchResult r;
      try {
        r = four_step_trajectory_search(seq, x0, y0, t0, kind, opt);
      } catch (const Error&) {
        continue;  // no candidate path fits inside the frame
      }
      for (int y = y0; y < y0 + patch; ++y)
        for (int x = x0; x < x0 + patch; ++x)
          f.set(x, y, static_cast<double>(r.endpoint.x) / opt.depth, static_cast<double>(r.endpoint.y) / opt.depth);
    }
  }
  return f;
}

void run_flow(const FlowArgs& a, const Common& c) {
  const FrameSequence seq = load_frame_sequence(a.in.frames, a.in.first, a.in.last);
  const std::optional<FlowField> gt = maybe_flow(a.gt);
  const fs::path out = prepare_out(c);
  const RegularityOptions reg{a.binning.get(), a.c};
  std::string sweep_csv(kEvalCsvHeader);

  auto finish = [&](const FlowField& f, const std::string& stem, int n, int range) {
    write_flo(f, out / (stem + ".flo"));
    if (gt) {
      const EvalReport rep = evaluate_field(f, *gt);
      write_json(out / (stem + "_eval.json"), to_json(rep));
      sweep_csv += eval_csv_row(n, range, rep);
    }
  };

  if (a.method == "horn-schunck") {
    if (a.sweep) throw UsageError("--sweep applies to patch-based methods only");
    if (a.t0 < 0 || a.t0 + 1 >= seq.count()) throw Error("horn-schunck needs frame t0 + 1");
    const HsResult r = horn_schunck_with_log(seq[a.t0], seq[a.t0 + 1], {a.alpha, a.iterations, a.prefilter});
    std::string log = "iteration,rms_change\n";
    char buf[64];
    for (std::size_t i = 0; i < r.residuals.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, r.residuals[i]);
      log += buf;
    }
    write_text(out / "hs_residuals.csv", log);
    finish(r.flow, "flow", 0, 0);
  } else {
    std::vector<int> sizes;
    if (a.sweep) {
      for (int n = 51; n <= 101; n += 10) sizes.push_back(n);
    } else {
      sizes.push_back(a.patch);
    }
    for (int n : sizes) {
      const std::string stem = a.sweep ? "flow_N" + std::to_string(n) : "flow";
      if (a.method == "regularity-sdn") {
        FlowEstimateOptions opt;
        opt.t = a.t;
        opt.regularity = reg;
        finish(estimate_flow_field(seq, a.t0, n, opt), stem, n, displacement_range(n));
      } else {
        const NormKind kind = a.method == "fourstep-tdn" ? NormKind::TDN : NormKind::STDN;
        finish(four_step_field(seq, a.t0, n, kind, reg), stem, n, 34);
      }
    }
  }
  if (gt) write_text(out / "sweep.csv", sweep_csv);
  write_manifest(out, "flow", c,
                 {{"input", input_json(a.in)},
                  {"method", a.method},
                  {"t0", a.t0},
                  {"t", a.t},
                  {"patch_size", a.patch},
                  {"sweep", a.sweep},
                  {"iterations", a.iterations},
                  {"smoothness_weight", a.alpha},
                  {"prefilter", a.prefilter},
                  {"gt", a.gt},
                  {"c", a.c},
                  {"binning", a.binning.to_json()}});
}

// ---------------------------------------------------------------- trajsearch

struct SearchArgs {
  Input in;
  std::vector<int> origin{0, 0};
  int t0 = 0;
  std::string norm = "STDN";
  int patch = 100;
  int depth = 10;
  int temporal_half_width = presets::kTemporalHalfWidthSearch;
  double c = presets::kDivisiveC;
  BinningArgs binning;
};

void run_trajsearch(const SearchArgs& a, const Common& c) {
  const FrameSequence seq = load_frame_sequence(a.in.frames, a.in.first, a.in.last);
  const NormKind kind = parse_norm_kind(a.norm);
  if (kind != NormKind::TDN && kind != NormKind::STDN) throw UsageError("--norm must be TDN or STDN");
  TrajectorySearchOptions opt;
  opt.patch_size = a.patch;
  opt.depth = a.depth;
  opt.temporal_half_width = a.temporal_half_width;
  opt.regularity = {a.binning.get(), a.c};
  const TrajectorySearchResult r = four_step_trajectory_search(seq, a.origin[0], a.origin[1], a.t0, kind, opt);

  json steps = json::array();
  for (std::size_t i = 0; i < r.step_kld.size(); ++i)
    steps.push_back({{"spacing", opt.spacings[i]},
                     {"endpoint", {r.step_endpoint[i].x, r.step_endpoint[i].y}},
                     {"kld", r.step_kld[i]}});
  json cands = json::array();
  for (const auto& cand : r.evaluated)
    cands.push_back({{"step", cand.step},
                     {"endpoint", {cand.endpoint.x, cand.endpoint.y}},
                     {"kld", std::isfinite(cand.kld) ? json(cand.kld) : json(nullptr)}});
  const fs::path out = prepare_out(c);
  write_json(out / "trajsearch.json",
             {{"endpoint", {r.endpoint.x, r.endpoint.y, a.depth}},
              {"per_frame", {static_cast<double>(r.endpoint.x) / a.depth, static_cast<double>(r.endpoint.y) / a.depth}},
              {"kld", r.kld},
              {"steps", steps},
              {"candidates", cands},
              {"trajectory", to_json(r.trajectory)}});
  write_manifest(out, "trajsearch", c,
                 {{"input", input_json(a.in)},
                  {"origin", a.origin},
                  {"t0", a.t0},
                  {"norm", a.norm},
                  {"patch_size", a.patch},
                  {"depth", a.depth},
                  {"spacings", opt.spacings},
                  {"temporal_half_width", a.temporal_half_width},
                  {"spatial_half_width", presets::kSpatialHalfWidth},
                  {"c", a.c},
                  {"binning", a.binning.to_json()}});
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string est;
  std::string gt;
  int patch = 0;
  int range = -1;
  bool radians = false;
};

void run_eval(const EvalArgs& a, const Common& c) {
  const FlowField est = read_flo(a.est);
  const FlowField gt = read_flo(a.gt);
  std::vector<Rect> patches;
  if (a.patch > 0)
    for (int y = 0; y + a.patch <= est.height(); y += a.patch)
      for (int x = 0; x + a.patch <= est.width(); x += a.patch) patches.push_back({x, y, a.patch, a.patch});
  EvalReport rep = evaluate_field(est, gt, patches);
  if (a.radians) {
    const double k = std::numbers::pi / 180.0;
    rep.mean_ae *= k;
    for (auto& p : rep.per_patch) p.ae *= k;
  }
  json j = to_json(rep);
  j["ae_unit"] = a.radians ? "radians" : "degrees";
  const int range = a.range >= 0 ? a.range : a.patch >= 6 ? displacement_range(a.patch) : 0;
  const fs::path out = prepare_out(c);
  write_json(out / "eval.json", j);
  write_text(out / "eval.csv", std::string(kEvalCsvHeader) + eval_csv_row(a.patch, range, rep));
  write_manifest(out, "eval", c,
                 {{"estimate", a.est}, {"ground_truth", a.gt}, {"patch_size", a.patch}, {"range", range}, {"radians", a.radians}});
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string texture = "blob";
  int width = 160;
  int height = 160;
  int frames = 2;
  int dx = 1;
  int dy = 0;
  double noise = 0;
  std::uint64_t seed = 1;
};

void run_synth(const SynthArgs& a, const Common& c) {
  if (a.frames < 2) throw UsageError("--count must be >= 2");
  const int tw = a.width + std::abs(a.dx) * (a.frames - 1), th = a.height + std::abs(a.dy) * (a.frames - 1);
  Image tex = a.texture == "fractal" ? synthetic::fractal_texture(tw, th, a.seed)
              : a.texture == "disc"  ? synthetic::disc_texture(tw, th, a.seed)
                                     : synthetic::blob_texture(tw, th, a.seed, 6.0, 5.0, 100.0, 3.0);
  synthetic::TranslationSpec spec{a.width, a.height, a.frames, a.dx, a.dy, a.noise, a.seed + 1};
  const FrameSequence seq = synthetic::translating_sequence(tex, spec);
  const fs::path out = prepare_out(c);
  for (int t = 0; t < seq.count(); ++t) write_pgm(seq[t], out / format_frame_path("frame_%03d.pgm", t + 1));
  write_flo(synthetic::constant_flow(a.width, a.height, a.dx, a.dy), out / "gt.flo");
  write_manifest(out, "synth", c,
                 {{"texture", a.texture},
                  {"width", a.width},
                  {"height", a.height},
                  {"count", a.frames},
                  {"dx", a.dx},
                  {"dy", a.dy},
                  {"noise", a.noise},
                  {"seed", a.seed}});
}

int run(int argc, char** argv);

int replay(const std::string& manifest_path, const std::string& out) {
  const json m = read_json(manifest_path);
  if (!m.contains("argv") || !m["argv"].is_array()) throw Error(manifest_path + ": manifest has no argv");
  std::vector<std::string> args{"stflow"};
  bool replaced = false;
  const auto& recorded = m["argv"];
  for (std::size_t i = 0; i < recorded.size(); ++i) {
    std::string s = recorded[i].get<std::string>();
    if (!out.empty() && (s == "--out" || s == "-o") && i + 1 < recorded.size()) {
      args.push_back(s);
      args.push_back(out);
      ++i;
      replaced = true;
      continue;
    }
    if (!out.empty() && s.rfind("--out=", 0) == 0) {
      args.push_back("--out=" + out);
      replaced = true;
      continue;
    }
    args.push_back(std::move(s));
  }
  if (!out.empty() && !replaced) {
    args.push_back("--out");
    args.push_back(out);
  }
  std::vector<char*> ptrs;
  for (auto& s : args) ptrs.push_back(s.data());
  return run(static_cast<int>(ptrs.size()), ptrs.data());
}

int run(int argc, char** argv) {
  CLI::App app{"Space-time regularity statistics and motion estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  for (int i = 1; i < argc; ++i) common.argv.emplace_back(argv[i]);

  StatsArgs stats;
  auto* cs = app.add_subcommand("stats", "Trajectory difference-volume statistics (histogram, GGD fit, KLD)");
  add_input(cs, stats.in);
  cs->add_option("--trajectory", stats.trajectory)->check(CLI::IsMember({"motion", "non-displaced", "random"}));
  cs->add_option("--origin", stats.origin, "Patch top-left x,y at t0")->expected(2)->delimiter(',');
  cs->add_option("--t0", stats.t0, "Start frame (0-based within the loaded range)");
  cs->add_option("--patch-size", stats.patch)->check(CLI::PositiveNumber);
  cs->add_option("--depth", stats.depth)->check(CLI::PositiveNumber);
  cs->add_option("--norm", stats.norm)->check(CLI::IsMember({"TDN", "SDN", "STDN", "tdn", "sdn", "stdn"}));
  cs->add_option("--temporal-half-width", stats.temporal_half_width)->check(CLI::PositiveNumber);
  cs->add_option("--c", stats.c, "Saturation constant");
  cs->add_option("--seed", stats.seed, "Random trajectory seed");
  cs->add_option("--drift", stats.drift, "Random trajectory per-step bound R");
  cs->add_option("--flow", stats.flow_pattern, "Per-frame .flo pattern indexed by frame number (motion)");
  cs->add_option("--uniform-flow", stats.uniform_flow, "Constant flow u,v (motion)")->expected(2)->delimiter(',');
  cs->add_option("--differencing", stats.differencing)->check(CLI::IsMember({"stepwise", "anchored"}));
  cs->add_flag("--dump-volume", stats.dump_volume, "Write raw float32 volumes with JSON sidecars");
  add_binning(cs, stats.binning);

  RegmapArgs regmap;
  auto* cr = app.add_subcommand("regmap", "KLD regularity map of one patch");
  add_input(cr, regmap.in);
  cr->add_option("--origin", regmap.origin, "Patch top-left x,y")->expected(2)->delimiter(',');
  cr->add_option("--t0", regmap.t0);
  cr->add_option("--t", regmap.t, "Temporal displacement")->check(CLI::PositiveNumber);
  cr->add_option("--patch-size", regmap.patch)->check(CLI::Range(6, 1 << 20));
  cr->add_option("--range", regmap.range, "Displacement half-extent (default from patch size)");
  cr->add_option("--c", regmap.c);
  add_binning(cr, regmap.binning);

  FlowArgs flow;
  auto* cf = app.add_subcommand("flow", "Estimate a dense flow field");
  add_input(cf, flow.in);
  cf->add_option("--method", flow.method)
      ->required()
      ->check(CLI::IsMember({"regularity-sdn", "fourstep-tdn", "fourstep-stdn", "horn-schunck"}));
  cf->add_option("--t0", flow.t0);
  cf->add_option("--t", flow.t, "Temporal displacement for regularity maps")->check(CLI::PositiveNumber);
  cf->add_option("--patch-size", flow.patch)->check(CLI::Range(6, 1 << 20));
  cf->add_flag("--sweep", flow.sweep, "Patch sizes 51..101 step 10");
  cf->add_option("--iterations", flow.iterations)->check(CLI::PositiveNumber);
  cf->add_option("--smoothness", flow.alpha, "Horn-Schunck smoothness weight")->check(CLI::PositiveNumber);
  cf->add_flag("--prefilter", flow.prefilter, "Horn-Schunck Gaussian presmoothing");
  cf->add_option("--gt", flow.gt, "Ground-truth .flo; enables evaluation output");
  cf->add_option("--c", flow.c);
  add_binning(cf, flow.binning);

  SearchArgs search;
  auto* ct = app.add_subcommand("trajsearch", "Four-step straight-line trajectory search");
  add_input(ct, search.in);
  ct->add_option("--origin", search.origin, "Patch top-left x,y")->expected(2)->delimiter(',');
  ct->add_option("--t0", search.t0);
  ct->add_option("--norm", search.norm)->check(CLI::IsMember({"TDN", "STDN", "tdn", "stdn"}));
  ct->add_option("--patch-size", search.patch)->check(CLI::PositiveNumber);
  ct->add_option("--depth", search.depth)->check(CLI::PositiveNumber);
  ct->add_option("--temporal-half-width", search.temporal_half_width)->check(CLI::PositiveNumber);
  ct->add_option("--c", search.c);
  add_binning(ct, search.binning);

  EvalArgs eval;
  auto* ce = app.add_subcommand("eval", "AE/EE of an estimated .flo against ground truth");
  ce->add_option("estimate", eval.est)->required();
  ce->add_option("ground_truth", eval.gt)->required();
  ce->add_option("--patch-size", eval.patch, "Also report per-patch errors on this tiling");
  ce->add_option("--range", eval.range, "Range column of the CSV row");
  ce->add_flag("--radians", eval.radians, "Report AE in radians");

  SynthArgs synth;
  auto* cy = app.add_subcommand("synth", "Write a synthetic translating sequence and its ground truth");
  cy->add_option("--texture", synth.texture)->check(CLI::IsMember({"blob", "fractal", "disc"}));
  cy->add_option("--width", synth.width)->check(CLI::PositiveNumber);
  cy->add_option("--height", synth.height)->check(CLI::PositiveNumber);
  cy->add_option("--count", synth.frames, "Number of frames");
  cy->add_option("--dx", synth.dx);
  cy->add_option("--dy", synth.dy);
  cy->add_option("--noise", synth.noise, "Additive Gaussian noise sigma");
  cy->add_option("--seed", synth.seed);

  std::string manifest;
  auto* cp = app.add_subcommand("replay", "Re-run a command from its manifest.json");
  cp->add_option("manifest", manifest)->required();

  for (auto* sub : {cs, cr, cf, ct, ce, cy, cp}) sub->add_option("--out,-o", common.out, "Output directory");

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
    return kExitUsage;
  }

  if (cs->parsed()) run_stats(stats, common);
  else if (cr->parsed()) run_regmap(regmap, common);
  else if (cf->parsed()) run_flow(flow, common);
  else if (ct->parsed()) run_trajsearch(search, common);
  else if (ce->parsed()) run_eval(eval, common);
  else if (cy->parsed()) run_synth(synth, common);
  else if (cp->parsed()) return replay(manifest, cp->count("--out") ? common.out : std::string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "stflow: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "stflow: " << e.what() << "\n";
    return kExitData;
  }
}
