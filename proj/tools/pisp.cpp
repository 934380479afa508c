// SPDX-License-Identifier: Apache-2.0
//! \file pisp.cpp
//! Command line driver: one subcommand per pipeline stage, plus `pipeline`.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pisp/pisp.hpp"

namespace fs = std::filesystem;
using namespace pisp;

namespace {

struct Common {
  std::string config;
  std::string output = "";
  std::int64_t seed = -1;
  int threads = 0;
  bool dump_csv = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "pipeline config (JSON)");
  sub->add_option("--output", c.output, "output directory (overrides the config)");
  sub->add_option("--seed", c.seed, "noise seed (overrides the config)");
  sub->add_option("--threads", c.threads, "worker threads (overrides the config)");
  sub->add_flag("--dump-csv", c.dump_csv, "also write plot-ready CSV");
}

PipelineConfig resolve(const Common& c) {
  PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : load_config(c.config);
  if (!c.output.empty()) cfg.output = c.output;
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  if (c.threads > 0) cfg.threads = static_cast<unsigned>(c.threads);
  cfg.validate();
  return cfg;
}

std::string in_dir(const PipelineConfig& cfg, const std::string& name) {
  std::error_code ec;
  fs::create_directories(cfg.output, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.output + ": " + ec.message());
  return (fs::path(cfg.output) / name).string();
}

void say(const std::string& what, const std::string& path) { std::cout << what << ": " << path << "\n"; }

int cmd_phantom(const Common& c) {
  const auto cfg = resolve(c);
  const Phantom ph = cfg.phantom();
  ph.check_smallness(cfg.smallness);
  write_phantom(in_dir(cfg, "phantom.json"), ph);
  const auto beta = analytic_beta(ph, VolumeGrid::cube(cfg.ball.B, cfg.ball.grid_n));
  write_volume(in_dir(cfg, "beta_true.pkvol"), beta, "beta");
  if (c.dump_csv) write_file(in_dir(cfg, "beta_true.csv"), volume_csv(beta));
  say("phantom", in_dir(cfg, "phantom.json"));
  return 0;
}

int cmd_simulate(const Common& c) {
  const auto cfg = resolve(c);
  const Phantom ph = cfg.phantom();
  ph.check_smallness(cfg.smallness);
  const auto chords = chord_grid(cfg.ball, cfg.chords.n_z, cfg.chords.n_alpha, cfg.chords.n_s);
  const auto obs = forward_observables(ph, chords, cfg.forward, true, cfg.ray, cfg.threads);
  write_chordset(in_dir(cfg, "chords.csv"), chords);
  for (SeriesKind kind : {SeriesKind::F1, SeriesKind::F2}) {
    if (kind == SeriesKind::F2 && cfg.amplitude_source != AmplitudeSource::f2) continue;
    std::vector<KSeries> series(obs.size());
    parallel_for(obs.size(), cfg.threads, [&](std::size_t i) {
      series[i] = synth_chord(chords.chords[i], obs[i], cfg.kgrid, cfg.noise, cfg.seed, kind, i);
    });
    const std::string name = kind == SeriesKind::F1 ? "scan_f1.pkscan" : "scan_f2.pkscan";
    write_scan(in_dir(cfg, name), series, cfg.ball, "chords.csv");
    say("scan", in_dir(cfg, name));
  }
  return 0;
}

int cmd_extract(const Common& c, const std::string& f1_path, const std::string& f2_path) {
  const auto cfg = resolve(c);
  const auto f1 = read_scan(f1_path);
  std::vector<KSeries> f2;
  if (!f2_path.empty()) f2 = read_scan(f2_path);
  const auto table = extract_table(f1, f2_path.empty() ? nullptr : &f2, cfg.extract, cfg.threads);
  write_observables(in_dir(cfg, "observables.pkobs"), table);
  say("observables", in_dir(cfg, "observables.pkobs"));
  return 0;
}

int cmd_recon_radon(const Common& c, const std::string& obs_path) {
  const auto cfg = resolve(c);
  const auto table = read_observables(obs_path);
  std::vector<std::string> warnings;
  const auto beta = reconstruct_beta_radon(table, cfg.ball, {cfg.fbp, cfg.threads}, &warnings);
  const auto heights = slice_heights(table);
  for (std::size_t k = 0; k < heights.size(); ++k) {
    const auto sg = assemble_h_sinogram(table, heights[k]);
    const std::string stem = "sino_" + std::to_string(k);
    write_sinogram(in_dir(cfg, stem + ".pksino"), sg);
    if (c.dump_csv) write_file(in_dir(cfg, stem + ".csv"), sinogram_csv(sg));
  }
  write_volume(in_dir(cfg, "beta_radon.pkvol"), beta, "beta");
  if (c.dump_csv) write_file(in_dir(cfg, "beta_radon.csv"), volume_csv(beta));
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  say("volume", in_dir(cfg, "beta_radon.pkvol"));
  return 0;
}

int cmd_recon_abel(const Common& c, const std::string& obs_path) {
  auto cfg = resolve(c);
  const auto table = read_observables(obs_path);
  AbelOptions opt = cfg.abel;
  opt.threads = cfg.threads;
  const auto heights = slice_heights(table);
  for (std::size_t k = 0; k < heights.size(); ++k) {
    const auto w = assemble_g(table, heights[k], cfg.ball);
    const int N = opt.n_modes >= 0 ? opt.n_modes : max_modes(w.n_alpha());
    write_modes(in_dir(cfg, "modes_" + std::to_string(k) + ".pkmode"), fourier_modes(w, N));
  }
  const auto res = reconstruct_q_abel(table, cfg.ball, opt);
  write_volume(in_dir(cfg, "q_abel.pkvol"), res.q, "q");
  if (c.dump_csv) write_file(in_dir(cfg, "q_abel.csv"), volume_csv(res.q));
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  say("volume", in_dir(cfg, "q_abel.pkvol"));
  return 0;
}

int cmd_poisson(const Common& c, const std::string& q_path) {
  const auto cfg = resolve(c);
  const auto q = read_volume(q_path);
  PoissonReport rep;
  const auto beta = poisson_solve_ball(q, cfg.ball.B, cfg.poisson, &rep);
  write_volume(in_dir(cfg, "beta_poisson.pkvol"), beta, "beta");
  if (c.dump_csv) write_file(in_dir(cfg, "beta_poisson.csv"), volume_csv(beta));
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "cg iterations " << rep.iterations << ", relative residual " << rep.rel_residual << "\n";
  say("volume", in_dir(cfg, "beta_poisson.pkvol"));
  return 0;
}

int cmd_compare(const Common& c, const std::string& a_path, const std::string& b_path, bool resample, double radius) {
  const auto cfg = resolve(c);
  auto a = read_volume(a_path);
  const auto b = read_volume(b_path);
  if (resample && !a.same_shape(b)) a = resample_volume(a, b);
  const auto m = compare_volumes(a, b, radius > 0 ? radius : cfg.ball.R);
  std::cout << metrics_to_json(m).dump(2) << "\n";
  return 0;
}

int cmd_pipeline(const Common& c) {
  const auto cfg = resolve(c);
  const auto rep = run_pipeline(cfg, true, c.dump_csv);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& [method, m] : rep.metrics.items()) {
    if (m.contains("rel_l2")) std::cout << method << ": beta rel L2 " << m["rel_l2"].get<double>() << "\n";
    if (m.contains("beta")) std::cout << method << ": beta rel L2 " << m["beta"]["rel_l2"].get<double>() << "\n";
    if (m.contains("q_worst_slice_rel_l2"))
      std::cout << method << ": worst slice q rel L2 " << m["q_worst_slice_rel_l2"].get<double>() << "\n";
  }
  say("report", rep.files.at("report.json"));
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"pisp: travel-time and amplitude reconstruction from intensity-only chord scans"};
  app.require_subcommand(1);
  Common c;
  std::string f1_path, f2_path, obs_path, q_path, a_path, b_path;
  bool resample = false;
  double radius = 0;

  auto* phantom = app.add_subcommand("phantom", "write the phantom description and its analytic beta volume");
  auto* simulate = app.add_subcommand("simulate", "synthesize f1 (and f2) scans for the chord grid");
  auto* extract = app.add_subcommand("extract", "recover A and tau per chord from scans");
  extract->add_option("--scan", f1_path, "f1 scan (.pkscan)")->required();
  extract->add_option("--scan-f2", f2_path, "f2 scan used for the amplitude");
  auto* radon = app.add_subcommand("recon-radon", "travel-time path: sinograms and filtered backprojection");
  radon->add_option("--obs", obs_path, "observables table (.pkobs)")->required();
  auto* abel = app.add_subcommand("recon-abel", "amplitude path: Fourier modes, Volterra solves, q volume");
  abel->add_option("--obs", obs_path, "observables table (.pkobs)")->required();
  auto* poisson = app.add_subcommand("poisson", "solve Lap beta = q in the ball with beta = 0 on the sphere");
  poisson->add_option("--input", q_path, "q volume (.pkvol)")->required();
  auto* compare = app.add_subcommand("compare", "error metrics of volume A against reference volume B");
  compare->add_option("--a", a_path, "volume (.pkvol)")->required();
  compare->add_option("--b", b_path, "reference volume (.pkvol)")->required();
  compare->add_flag("--resample", resample, "trilinearly resample A onto B's grid when shapes differ");
  compare->add_option("--radius", radius, "mask radius (default: support radius R)");
  auto* pipeline = app.add_subcommand("pipeline", "run every stage and write a report");
  for (auto* s : {phantom, simulate, extract, radon, abel, poisson, compare, pipeline}) add_common(s, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*phantom) return cmd_phantom(c);
    if (*simulate) return cmd_simulate(c);
    if (*extract) return cmd_extract(c, f1_path, f2_path);
    if (*radon) return cmd_recon_radon(c, obs_path);
    if (*abel) return cmd_recon_abel(c, obs_path);
    if (*poisson) return cmd_poisson(c, q_path);
    if (*compare) return cmd_compare(c, a_path, b_path, resample, radius);
    if (*pipeline) return cmd_pipeline(c);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return 3;
  }
  return 0;
}
