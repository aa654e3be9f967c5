// csdvs: stimulus generation, DVS/CSDVS simulation, rendering, comparison and
// surround design calculations.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csdvs/analysis.hpp"
#include "csdvs/config.hpp"
#include "csdvs/designcalc.hpp"
#include "csdvs/error.hpp"
#include "csdvs/pipeline.hpp"
#include "csdvs/scenarios.hpp"
#include "csdvs/stimgen.hpp"
#include "csdvs/videoio.hpp"

namespace fs = std::filesystem;
using namespace csdvs;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kSolver = 4 };

constexpr const char* kStimulusFile = "stimulus.txt";

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

std::optional<StimulusSpec> read_stimulus(const fs::path& dir) {
  fs::path p = fs::is_directory(dir) ? dir / kStimulusFile : dir.parent_path() / kStimulusFile;
  if (!fs::exists(p)) return std::nullopt;
  return stimulus_from_values(read_key_values(p));
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::string preset;
  std::string kind = "flashing-spot";
  int size = 0;
  int width = 0;
  int height = 0;
  std::string out = "frames";
  std::string base;
  std::string waveform = "sine";
  StimulusSpec spec;
  bool quiet = false;
};

void add_gen(CLI::App& app, GenArgs& a, std::function<int()>& action) {
  auto* cmd = app.add_subcommand("gen", "Generate a synthetic stimulus as a PGM sequence");
  cmd->add_option("--preset", a.preset, "Acceptance stimulus: spot, gradient or flicker")
      ->check(CLI::IsMember({"spot", "gradient", "flicker"}));
  cmd->add_option("--kind", a.kind, "flashing-spot, gradient-pair or flicker");
  cmd->add_option("--size", a.size, "Square frame size in pixels");
  cmd->add_option("--width", a.width, "Frame width");
  cmd->add_option("--height", a.height, "Frame height");
  cmd->add_option("--fps", a.spec.fps, "Frames per second");
  cmd->add_option("--duration", a.spec.duration, "Seconds");
  cmd->add_option("--contrast", a.spec.contrast, "Intensity ratio (> 1)");
  cmd->add_option("--gray", a.spec.gray, "Background level g0");
  cmd->add_option("--radius", a.spec.spot.radius, "Spot radius (px)");
  cmd->add_flag("--antialias", a.spec.spot.antialias, "1-px linear spot rim");
  cmd->add_option("--gradual-width", a.spec.gradient.gradual_width, "Gradual bump width (px)");
  cmd->add_option("--sharp-width", a.spec.gradient.sharp_width, "Sharp bump width (px)");
  cmd->add_option("--plateau", a.spec.gradient.plateau, "Flat top of each bump (px)");
  cmd->add_option("--speed", a.spec.gradient.speed, "Bump speed (px/s)");
  cmd->add_option("--freq", a.spec.flicker.frequency, "Flicker frequency (Hz)");
  cmd->add_option("--waveform", a.waveform, "sine or square")->check(CLI::IsMember({"sine", "square"}));
  cmd->add_option("--base", a.base, "Flicker base image (PGM); default is the built-in test card");
  cmd->add_option("--out,-o", a.out, "Output directory");
  cmd->add_flag("--quiet,-q", a.quiet, "Print only the frame count");
  action = [&a, cmd]() {
    StimulusSpec spec = a.spec;
    if (!a.preset.empty()) {
      // Preset fills in the scenario; explicit flags still override it.
      StimulusSpec p = a.preset == "spot"       ? spot_scenario()
                       : a.preset == "gradient" ? gradient_scenario()
                                                : flicker_scenario();
      auto given = [&](const char* name) { return cmd->get_option(name)->count() > 0; };
      if (given("--fps")) p.fps = spec.fps;
      if (given("--duration")) p.duration = spec.duration;
      if (given("--contrast")) p.contrast = spec.contrast;
      if (given("--gray")) p.gray = spec.gray;
      if (given("--radius")) p.spot.radius = spec.spot.radius;
      if (given("--antialias")) p.spot.antialias = spec.spot.antialias;
      if (given("--gradual-width")) p.gradient.gradual_width = spec.gradient.gradual_width;
      if (given("--sharp-width")) p.gradient.sharp_width = spec.gradient.sharp_width;
      if (given("--plateau")) p.gradient.plateau = spec.gradient.plateau;
      if (given("--speed")) p.gradient.speed = spec.gradient.speed;
      if (given("--freq")) p.flicker.frequency = spec.flicker.frequency;
      if (given("--waveform")) p.flicker.waveform = parse_waveform(a.waveform);
      spec = p;
    } else {
      spec.kind = parse_stimulus_kind(a.kind);
      spec.flicker.waveform = parse_waveform(a.waveform);
    }
    if (a.size > 0) spec.width = spec.height = a.size;
    if (a.width > 0) spec.width = a.width;
    if (a.height > 0) spec.height = a.height;
    if (!a.base.empty()) {
      PixelGrid base = read_pgm(a.base);
      for (double& v : base) v = std::max(v, 1.0 / 255.0) / spec.contrast;
      spec.width = base.width();
      spec.height = base.height();
      spec.flicker.base = std::move(base);
    }
    FrameSequence frames = generate(spec);
    save_frames(frames, a.out);
    write_text(fs::path(a.out) / kStimulusFile, stimulus_to_text(spec));
    if (a.quiet)
      std::cout << frames.size() << "\n";
    else
      std::cout << "wrote " << frames.size() << " frames (" << spec.width << "x" << spec.height
                << ") to " << a.out << "\n";
    return kOk;
  };
}

// ---------------------------------------------------------------- simulate

struct SimArgs {
  std::string config_file;
  std::map<std::string, std::string> flags;
  bool quiet = false;
};

struct ModeOutput {
  SensorMode mode;
  PipelineResult result;
  RunStats stats;
  double seconds = 0.0;
};

ModeOutput simulate_mode(const FrameSequence& frames, const SimConfig& config, SensorMode mode) {
  auto t0 = std::chrono::steady_clock::now();
  ModeOutput out{mode, run_pipeline(frames, config, mode), {}, 0.0};
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.stats = compute_stats(out.result.stream, frames.timestamps_us);
  return out;
}

void add_simulate(CLI::App& app, SimArgs& a, std::function<int()>& action) {
  auto* cmd = app.add_subcommand("simulate", "Run the DVS and/or CSDVS pipeline on a frame sequence");
  cmd->add_option("--config,-c", a.config_file, "key=value file; flags override it");
  // Each flag feeds the same key=value map as the config file.
  auto flag = [&](const std::string& name, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(name, [&a, key](const std::string& v) { a.flags[key] = v; },
                                          help);
  };
  flag("--input,-i", "input", "Frame directory or concatenated PGM file");
  flag("--mode", "mode", "dvs, csdvs or both");
  flag("--L", "L", "Surround space constant (px)");
  flag("--tau-us", "tau_us", "Surround time constant (us), 0 = quasi-static");
  flag("--theta", "theta", "Nominal threshold (natural-log units)");
  flag("--theta-sigma", "theta_sigma", "Threshold mismatch sigma");
  flag("--pr-cutoff-hz", "pr_cutoff_hz", "Photoreceptor cutoff (Hz), 0 = bypass");
  flag("--seed", "seed", "Threshold RNG seed");
  flag("--solver-tol", "solver_tol", "Surround relative residual tolerance");
  flag("--reset-mode", "reset_mode", "ladder or snapshot");
  flag("--fps", "fps", "Frame rate when no timestamps.txt is present");
  flag("--output,-o", "output", "Output directory");
  flag("--format", "format", "csv or bin");
  cmd->add_flag("--quiet,-q", a.quiet, "Print only the JSON report");
  action = [&a]() {
    std::map<std::string, std::string> values;
    if (!a.config_file.empty()) values = read_key_values(a.config_file);
    for (const auto& [k, v] : a.flags) values[k] = v;
    SimConfig config;
    config.apply(values);
    config.validate();
    if (config.input.empty()) throw ConfigError("no input given (--input or input= in the config)");

    FrameSequence frames = load_frames(config.input, config.fps);
    std::optional<StimulusSpec> stimulus = read_stimulus(config.input);
    std::vector<RegionMask> masks;
    if (stimulus && stimulus->width == frames.width && stimulus->height == frames.height)
      masks = scenario_masks(*stimulus, config.space_constant);
    const bool bumps = stimulus && stimulus->kind == StimulusKind::GradientPair;
    const std::int64_t t0 = frames.empty() ? 0 : frames.timestamps_us.front();

    std::vector<ModeOutput> runs;
    if (config.mode == RunMode::Both) {
      auto dvs = std::async(std::launch::async, simulate_mode, std::cref(frames), std::cref(config),
                            SensorMode::Dvs);
      ModeOutput cs = simulate_mode(frames, config, SensorMode::Csdvs);
      runs.push_back(dvs.get());
      runs.push_back(std::move(cs));
    } else {
      runs.push_back(simulate_mode(frames, config,
                                   config.mode == RunMode::Dvs ? SensorMode::Dvs : SensorMode::Csdvs));
    }

    fs::path out_dir = config.output;
    fs::create_directories(out_dir);
    write_text(out_dir / "params.txt", config.to_text());
    const std::string ext = config.format == EventFormat::Csv ? ".csv" : ".bin";
    nlohmann::ordered_json timing;
    std::string report;
    std::vector<std::vector<NamedCount>> extras;
    for (const ModeOutput& r : runs) {
      const std::string name = to_string(r.mode);
      std::vector<NamedCount> extra;
      if (bumps) {
        BumpCounts b = attribute_bumps(r.result.stream, *stimulus, t0);
        extra = {{"gradual_bump", b.gradual}, {"sharp_bump", b.sharp}};
      }
      write_events(r.result.stream, out_dir / (name + ext), config.format);
      std::string stats = stats_json(r.stats, r.mode, masks, config, r.result.solver_iterations, extra);
      fs::path stats_path = runs.size() == 1 ? out_dir / "stats.json" : out_dir / (name + "_stats.json");
      write_text(stats_path, stats);
      timing[name] = {{"wall_seconds", r.seconds}, {"solve_seconds", r.result.solve_seconds}};
      extras.push_back(std::move(extra));
      report = stats;
      if (!a.quiet)
        std::cout << name << ": " << r.stats.total << " events (" << r.stats.on << " on, " << r.stats.off
                  << " off) in " << r.seconds << " s\n";
    }
    write_text(out_dir / "timing.json", timing.dump(2) + "\n");
    if (runs.size() == 2) {
      ComparisonReport cmp = compare_runs(runs[0].stats, runs[1].stats, masks);
      for (std::size_t i = 0; i < extras[0].size(); ++i)
        cmp.regions.push_back({extras[0][i].first, extras[0][i].second, extras[1][i].second,
                               count_ratio(extras[0][i].second, extras[1][i].second)});
      report = comparison_json(cmp, "dvs", "csdvs");
      write_text(out_dir / "comparison.json", report);
      if (!a.quiet && cmp.ratio)
        std::printf("csdvs/dvs ratio %.4f (reduction %.1f%%)\n", *cmp.ratio, 100.0 * *cmp.reduction);
    }
    if (a.quiet) std::cout << report;
    return kOk;
  };
}

// ---------------------------------------------------------------- render

struct RenderArgs {
  std::string events;
  std::string out = "render";
  std::int64_t window_us = 10000;
  int width = 0;
  int height = 0;
  bool quiet = false;
};

EventStream load_stream(const std::string& path, int width, int height) {
  EventFormat f = event_format_from_path(path);
  if (f == EventFormat::Csv && (width <= 0 || height <= 0))
    throw ConfigError("CSV events need --width and --height");
  return read_events(path, f, width, height);
}

void add_render(CLI::App& app, RenderArgs& a, std::function<int()>& action) {
  auto* cmd = app.add_subcommand("render", "Render accumulated event frames as PGM");
  cmd->add_option("--events,-e", a.events, "Event file (.csv or .bin)")->required();
  cmd->add_option("--window-us", a.window_us, "Accumulation window (us)");
  cmd->add_option("--width", a.width, "Sensor width (CSV input)");
  cmd->add_option("--height", a.height, "Sensor height (CSV input)");
  cmd->add_option("--out,-o", a.out, "Output directory");
  cmd->add_flag("--quiet,-q", a.quiet, "Print only the image count");
  action = [&a]() {
    if (a.window_us <= 0) throw ConfigError("--window-us must be positive");
    EventStream s = load_stream(a.events, a.width, a.height);
    std::size_t n = render_accumulation(s, a.window_us, a.out);
    if (a.quiet)
      std::cout << n << "\n";
    else
      std::cout << "wrote " << n << " images to " << a.out << "\n";
    return kOk;
  };
}

// ---------------------------------------------------------------- design

struct DesignArgs {
  std::string R = "10e3";
  std::string C = "1e-12";
  std::string L = "10";
  std::string n_pixels = "1";
  double U_T = 0.025;
  std::vector<std::string> sweeps;
  std::string out;
};

void add_design(CLI::App& app, DesignArgs& a, std::function<int()>& action) {
  auto* cmd = app.add_subcommand("design", "Evaluate surround design formulas");
  cmd->add_option("--R", a.R, "Lateral resistance (ohm) or start:step:stop");
  cmd->add_option("--C", a.C, "Node capacitance (F) or start:step:stop");
  cmd->add_option("--L", a.L, "Space constant (px) or start:step:stop");
  cmd->add_option("--n-pixels,-N", a.n_pixels, "Pixel count or start:step:stop");
  cmd->add_option("--U_T,--ut", a.U_T, "Thermal voltage (V)");
  cmd->add_option("--sweep", a.sweeps, "KEY=start:step:stop, KEY in R, C, L, N (repeatable)");
  cmd->add_option("--out,-o", a.out, "Write the CSV table here instead of stdout");
  action = [&a]() {
    std::map<std::string, std::string> ranges{{"R", a.R}, {"C", a.C}, {"L", a.L}, {"N", a.n_pixels}};
    for (const std::string& s : a.sweeps) {
      auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--sweep expects KEY=start:step:stop");
      std::string key = s.substr(0, eq);
      if (key == "n_pixels") key = "N";
      if (!ranges.count(key)) throw ConfigError("unknown sweep key '" + key + "'");
      ranges[key] = s.substr(eq + 1);
    }
    SweepSpec spec;
    spec.R = SweepRange::parse(ranges["R"]);
    spec.C = SweepRange::parse(ranges["C"]);
    spec.L = SweepRange::parse(ranges["L"]);
    spec.n_pixels = SweepRange::parse(ranges["N"]);
    spec.U_T = a.U_T;
    std::vector<SweepRow> rows = sweep(spec);
    if (rows.size() == 1 && a.sweeps.empty() && a.out.empty()) {
      std::cout << format_design(rows[0].point, rows[0].n_pixels, rows[0].result);
      return kOk;
    }
    std::string csv = sweep_csv(rows);
    if (a.out.empty())
      std::cout << csv;
    else
      write_text(a.out, csv);
    return kOk;
  };
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
  std::string a_path;
  std::string b_path;
  std::string stimulus;
  double L = 10.0;
  int width = 0;
  int height = 0;
  std::string out;
};

void add_compare(CLI::App& app, CompareArgs& a, std::function<int()>& action) {
  auto* cmd = app.add_subcommand("compare", "Compare two event files (b relative to a)");
  cmd->add_option("a", a.a_path, "Reference event file (e.g. dvs.csv)")->required();
  cmd->add_option("b", a.b_path, "Compared event file (e.g. csdvs.csv)")->required();
  cmd->add_option("--stimulus", a.stimulus, "stimulus.txt written by gen, for region masks");
  cmd->add_option("--L", a.L, "Space constant used for the masks");
  cmd->add_option("--width", a.width, "Sensor width (CSV input)");
  cmd->add_option("--height", a.height, "Sensor height (CSV input)");
  cmd->add_option("--out,-o", a.out, "Write the JSON report here instead of stdout");
  action = [&a]() {
    std::optional<StimulusSpec> stim;
    if (!a.stimulus.empty()) stim = stimulus_from_values(read_key_values(a.stimulus));
    int w = a.width > 0 ? a.width : stim ? stim->width : 0;
    int h = a.height > 0 ? a.height : stim ? stim->height : 0;
    EventStream sa = load_stream(a.a_path, w, h);
    EventStream sb = load_stream(a.b_path, w, h);
    std::vector<RegionMask> masks;
    if (stim) masks = scenario_masks(*stim, a.L);
    ComparisonReport cmp = compare_runs(compute_stats(sa), compute_stats(sb), masks);
    if (stim && stim->kind == StimulusKind::GradientPair) {
      BumpCounts ba = attribute_bumps(sa, *stim), bb = attribute_bumps(sb, *stim);
      cmp.regions.push_back({"gradual_bump", ba.gradual, bb.gradual, count_ratio(ba.gradual, bb.gradual)});
      cmp.regions.push_back({"sharp_bump", ba.sharp, bb.sharp, count_ratio(ba.sharp, bb.sharp)});
    }
    std::string doc = comparison_json(cmp, fs::path(a.a_path).stem().string(),
                                      fs::path(a.b_path).stem().string());
    if (a.out.empty())
      std::cout << doc;
    else
      write_text(a.out, doc);
    return kOk;
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Center-surround DVS simulator"};
  app.require_subcommand(1);
  std::function<int()> gen, simulate, render, design, compare;
  GenArgs gen_args;
  SimArgs sim_args;
  RenderArgs render_args;
  DesignArgs design_args;
  CompareArgs compare_args;
  add_gen(app, gen_args, gen);
  add_simulate(app, sim_args, simulate);
  add_render(app, render_args, render);
  add_design(app, design_args, design);
  add_compare(app, compare_args, compare);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  std::function<int()>* action = nullptr;
  if (app.got_subcommand("gen")) action = &gen;
  else if (app.got_subcommand("simulate")) action = &simulate;
  else if (app.got_subcommand("render")) action = &render;
  else if (app.got_subcommand("design")) action = &design;
  else if (app.got_subcommand("compare")) action = &compare;

  try {
    return (*action)();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kSolver;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kIo;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
