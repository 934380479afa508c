// SPDX-License-Identifier: Apache-2.0
//! \file pipeline.hpp
//! End-to-end runs: phantom, chord scan, extraction, both reconstructions,
//! and error metrics against the analytic phantom.
#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "abelgeo.hpp"
#include "config.hpp"
#include "elliptic.hpp"
#include "extract.hpp"
#include "forward.hpp"
#include "io.hpp"
#include "radon.hpp"
#include "raytrace.hpp"

namespace pisp {

// ---- metrics ----

struct VolumeMetrics {
  double rel_l2 = 0;    //!< ||a - b|| / ||b||; 1 when b = 0 != a
  double linf = 0;      //!< max |a - b|
  double rel_linf = 0;  //!< max |a - b| / max |b|
  std::vector<double> z;         //!< z of each plane holding masked voxels
  std::vector<double> per_slice; //!< rel_l2 restricted to that plane
};

namespace detail {
inline double rel_ratio(double num2, double den2) {
  if (den2 > 0) return std::sqrt(num2 / den2);
  return num2 > 0 ? 1.0 : 0.0;
}
} // namespace detail

//! Metrics of a against the reference b over voxels with |x| < mask_radius.
inline VolumeMetrics compare_volumes(const VolumeGrid& a, const VolumeGrid& b, double mask_radius) {
  if (!a.same_shape(b))
    throw DomainError("compare_volumes: shape mismatch (" + std::to_string(a.nx) + "x" + std::to_string(a.ny) + "x" +
                      std::to_string(a.nz) + " vs " + std::to_string(b.nx) + "x" + std::to_string(b.ny) + "x" +
                      std::to_string(b.nz) + "); resample one onto the other's grid first");
  VolumeMetrics m;
  double num = 0, den = 0, bmax = 0;
  for (int k = 0; k < a.nz; ++k) {
    double pn = 0, pd = 0;
    bool any = false;
    for (int j = 0; j < a.ny; ++j)
      for (int i = 0; i < a.nx; ++i) {
        if (norm(a.position(i, j, k)) >= mask_radius) continue;
        any = true;
        const double d = a.at(i, j, k) - b.at(i, j, k), r = b.at(i, j, k);
        pn += d * d;
        pd += r * r;
        m.linf = std::max(m.linf, std::abs(d));
        bmax = std::max(bmax, std::abs(r));
      }
    if (!any) continue;
    num += pn;
    den += pd;
    m.z.push_back(a.position(0, 0, k).z);
    m.per_slice.push_back(detail::rel_ratio(pn, pd));
  }
  m.rel_l2 = detail::rel_ratio(num, den);
  m.rel_linf = bmax > 0 ? m.linf / bmax : (m.linf > 0 ? 1.0 : 0.0);
  return m;
}

//! Trilinear resampling of src onto the voxel centres of shape; zero outside src.
inline VolumeGrid resample_volume(const VolumeGrid& src, const VolumeGrid& shape) {
  auto value = [&](const Vec3& p) {
    const double fx = (p.x - src.origin.x) / src.spacing, fy = (p.y - src.origin.y) / src.spacing,
                 fz = (p.z - src.origin.z) / src.spacing;
    const int i = static_cast<int>(std::floor(fx)), j = static_cast<int>(std::floor(fy)),
              k = static_cast<int>(std::floor(fz));
    const double tx = fx - i, ty = fy - j, tz = fz - k;
    double acc = 0;
    for (int c = 0; c < 8; ++c) {
      const int ii = i + (c & 1), jj = j + ((c >> 1) & 1), kk = k + ((c >> 2) & 1);
      const double w = ((c & 1) ? tx : 1 - tx) * (((c >> 1) & 1) ? ty : 1 - ty) * (((c >> 2) & 1) ? tz : 1 - tz);
      if (w == 0) continue;
      if (ii < 0 || jj < 0 || kk < 0 || ii >= src.nx || jj >= src.ny || kk >= src.nz) continue;
      acc += w * src.at(ii, jj, kk);
    }
    return acc;
  };
  return VolumeGrid::sample(shape, value);
}

struct SliceError {
  double err2 = 0;  //!< sum of squared differences
  double ref2 = 0;  //!< sum of squared reference values
  double rel_l2() const { return detail::rel_ratio(err2, ref2); }
};

//! Squared L2 sums of a slice image against f(x, y) over pixels with
//! r_min <= r < r_max.
template <typename F>
SliceError slice_error(const SliceImage& img, F&& f, double r_min, double r_max) {
  SliceError e;
  for (int j = 0; j < img.n; ++j)
    for (int i = 0; i < img.n; ++i) {
      const double x = img.coord(i), y = img.coord(j), r = std::hypot(x, y);
      if (r < r_min || r >= r_max) continue;
      const double t = f(x, y);
      e.err2 += sq(img.at(i, j) - t);
      e.ref2 += t * t;
    }
  return e;
}

template <typename F>
double slice_rel_l2(const SliceImage& img, F&& f, double r_min, double r_max) {
  return slice_error(img, std::forward<F>(f), r_min, r_max).rel_l2();
}

inline nlohmann::json metrics_to_json(const VolumeMetrics& m) {
  return {{"rel_l2", m.rel_l2}, {"linf", m.linf}, {"rel_linf", m.rel_linf}, {"z", m.z}, {"per_slice_rel_l2", m.per_slice}};
}

// ---- stages ----

//! A and tau of every chord under the chosen forward model. With
//! want_amplitude false only tau is computed and A is left NaN.
inline std::vector<ChordObservables> forward_observables(const Phantom& ph, const ChordSet& chords, ForwardModel model,
                                                         bool want_amplitude, const RayOptions& ray = {},
                                                         unsigned threads = 1) {
  std::vector<ChordObservables> out(chords.chords.size());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const Chord& c = chords.chords[i];
    ChordObservables& o = out[i];
    o.dist = c.length();
    o.A = std::numeric_limits<double>::quiet_NaN();
    if (model == ForwardModel::linearized) {
      o.tau = tau_linearized(ph, c.x, c.y);
      if (want_amplitude) o.A = amplitude_linearized(ph, c.x, c.y);
    } else if (want_amplitude) {
      const auto g = amplitude_geodesic(ph, c.x, c.y, 1e-4, ray);
      o.tau = g.tau;
      o.A = g.A;
    } else {
      o.tau = tau_geodesic(ph, c.x, c.y, ray);
    }
  });
  return out;
}

//! Per-chord generator keyed by (seed, series kind, chord index), so noise
//! does not depend on the thread count or the order of evaluation.
inline std::mt19937_64 chord_rng(std::uint64_t seed, SeriesKind kind, std::size_t index) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(kind == SeriesKind::F1 ? 1 : 2),
                    std::uint32_t(index), std::uint32_t(std::uint64_t(index) >> 32)};
  return std::mt19937_64(seq);
}

inline KSeries synth_chord(const Chord& c, const ChordObservables& o, const KGrid& grid, const NoiseModel& noise,
                           std::uint64_t seed, SeriesKind kind, std::size_t index) {
  auto rng = chord_rng(seed, kind, index);
  return kind == SeriesKind::F1 ? synth_f1(c, o, grid, noise, &rng) : synth_f2(c, o, grid, noise, &rng);
}

inline ObsRow row_from_extraction(const Chord& c, const ExtractionResult& r) {
  return {c.param.z, c.param.alpha, c.param.s, r.dist, r.A_hat, r.tau_hat, r.line_of_sight, r.quality};
}

//! Extraction of one chord: tau (and A unless f2 is given) from f1, A from f2.
inline ObsRow extract_row(const KSeries& f1, const KSeries* f2, const ExtractOptions& opt) {
  auto r = extract_chord(f1, opt);
  if (f2) r.A_hat = extract_A_from_f2(*f2);
  return row_from_extraction(f1.chord, r);
}

inline ObservablesTable extract_table(const std::vector<KSeries>& f1, const std::vector<KSeries>* f2,
                                      const ExtractOptions& opt, unsigned threads = 1) {
  if (f2 && f2->size() != f1.size()) throw ConfigError("extract: f1 and f2 scans differ in chord count");
  ObservablesTable t;
  t.rows.resize(f1.size());
  parallel_for(f1.size(), threads, [&](std::size_t i) { t.rows[i] = extract_row(f1[i], f2 ? &(*f2)[i] : nullptr, opt); });
  return t;
}

//! Observables taken straight from the forward model (no k series).
inline ObservablesTable direct_table(const ChordSet& chords, const std::vector<ChordObservables>& obs) {
  ObservablesTable t;
  t.rows.reserve(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const Chord& c = chords.chords[i];
    const auto& o = obs[i];
    t.rows.push_back({c.param.z, c.param.alpha, c.param.s, o.dist, o.A, o.tau,
                      std::abs(o.tau - o.dist) <= 1e-14 * o.dist, 0.0});
  }
  return t;
}

// ---- pipeline ----

struct RunReport {
  std::map<std::string, double> timings;  //!< seconds per stage
  nlohmann::json metrics = nlohmann::json::object();
  std::vector<std::string> warnings;
  nlohmann::json config;
  std::map<std::string, std::string> files;

  nlohmann::json to_json() const {
    return {{"timings_s", timings}, {"metrics", metrics}, {"warnings", warnings}, {"config", config}, {"files", files}};
  }
};

struct PipelineVolumes {
  VolumeGrid beta_true, q_true;
  VolumeGrid beta_radon;
  VolumeGrid q_abel, beta_abel;
};

namespace detail {

class StageTimer {
public:
  StageTimer(RunReport& r, std::string name) : r_(r), name_(std::move(name)), t0_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    r_.timings[name_] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

private:
  RunReport& r_;
  std::string name_;
  std::chrono::steady_clock::time_point t0_;
};

template <typename F> auto tagged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    const std::string msg = std::string("[") + stage + "] " + e.what();
    switch (e.kind()) {
    case ErrorKind::config: throw ConfigError(msg);
    case ErrorKind::domain: throw DomainError(msg);
    case ErrorKind::numerical: throw NumericalError(msg);
    case ErrorKind::io: throw IoError(msg);
    }
    throw;
  }
}

} // namespace detail

inline VolumeGrid analytic_beta(const Phantom& ph, const VolumeGrid& shape) {
  return VolumeGrid::sample(shape, [&](const Vec3& p) { return ph.beta(p); });
}

inline VolumeGrid analytic_q(const Phantom& ph, const VolumeGrid& shape) {
  return VolumeGrid::sample(shape, [&](const Vec3& p) { return ph.laplacian_beta(p); });
}

//! Observables for every chord of the grid, from k series or directly from
//! the forward model. Series are kept only when write_scan is set.
inline ObservablesTable observe(const PipelineConfig& cfg, const Phantom& ph, const ChordSet& chords, RunReport& rep,
                                std::vector<KSeries>* f1_keep = nullptr, std::vector<KSeries>* f2_keep = nullptr) {
  const bool need_A = cfg.method != ReconMethod::radon || cfg.observables == ObservableSource::series;
  std::vector<ChordObservables> obs;
  {
    detail::StageTimer t(rep, "forward");
    obs = detail::tagged("forward", [&] {
      return forward_observables(ph, chords, cfg.forward, need_A, cfg.ray, cfg.threads);
    });
  }
  if (cfg.observables == ObservableSource::direct) {
    if (!need_A) rep.warnings.push_back("observables: direct mode with method radon leaves A_hat as NaN");
    return direct_table(chords, obs);
  }
  detail::StageTimer t(rep, "simulate+extract");
  ExtractOptions xopt = cfg.extract;
  if (cfg.noise.level > 0) xopt.los_tol = std::max(xopt.los_tol, 3.0 * cfg.noise.level);
  const bool use_f2 = cfg.amplitude_source == AmplitudeSource::f2;
  if (f1_keep) f1_keep->resize(obs.size());
  if (f2_keep && use_f2) f2_keep->resize(obs.size());
  ObservablesTable table;
  table.rows.resize(obs.size());
  detail::tagged("extract", [&] {
    parallel_for(obs.size(), cfg.threads, [&](std::size_t i) {
      const Chord& c = chords.chords[i];
      KSeries f1 = synth_chord(c, obs[i], cfg.kgrid, cfg.noise, cfg.seed, SeriesKind::F1, i);
      KSeries f2;
      if (use_f2) f2 = synth_chord(c, obs[i], cfg.kgrid, cfg.noise, cfg.seed, SeriesKind::F2, i);
      table.rows[i] = extract_row(f1, use_f2 ? &f2 : nullptr, xopt);
      if (f1_keep) (*f1_keep)[i] = std::move(f1);
      if (f2_keep && use_f2) (*f2_keep)[i] = std::move(f2);
    });
    return 0;
  });
  return table;
}

//! Runs the configured pipeline, writing artifacts into cfg.output (unless
//! write_files is false) and returning metrics against the analytic phantom.
inline RunReport run_pipeline(const PipelineConfig& cfg, bool write_files = true, bool dump_csv = false,
                              PipelineVolumes* volumes_out = nullptr) {
  RunReport rep;
  rep.config = config_to_json(cfg);
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output);
  auto out = [&](const std::string& name) {
    rep.files[name] = (dir / name).string();
    return (dir / name).string();
  };
  if (write_files) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.output + ": " + ec.message());
  }

  Phantom ph = detail::tagged("phantom", [&] {
    cfg.validate();
    Phantom p = cfg.phantom();
    p.check_smallness(cfg.smallness);
    return p;
  });
  const ChordSet chords = detail::tagged("geometry", [&] {
    return chord_grid(cfg.ball, cfg.chords.n_z, cfg.chords.n_alpha, cfg.chords.n_s);
  });

  std::vector<KSeries> f1, f2;
  const bool keep = write_files && cfg.write_scan && cfg.observables == ObservableSource::series;
  const ObservablesTable table = observe(cfg, ph, chords, rep, keep ? &f1 : nullptr, keep ? &f2 : nullptr);

  if (write_files) {
    detail::StageTimer t(rep, "write");
    detail::tagged("io", [&] {
      write_phantom(out("phantom.json"), ph);
      write_observables(out("observables.pkobs"), table);
      if (keep) {
        write_chordset(out("chords.csv"), chords);
        write_scan(out("scan_f1.pkscan"), f1, cfg.ball, "chords.csv");
        if (!f2.empty()) write_scan(out("scan_f2.pkscan"), f2, cfg.ball, "chords.csv");
      }
      return 0;
    });
  }
  f1.clear();
  f2.clear();

  PipelineVolumes vols;
  const VolumeGrid shape = VolumeGrid::cube(cfg.ball.B, cfg.ball.grid_n);
  vols.beta_true = analytic_beta(ph, shape);
  const double R = cfg.ball.R;

  if (cfg.method != ReconMethod::abel) {
    {
      detail::StageTimer t(rep, "recon-radon");
      RadonOptions ro{cfg.fbp, cfg.threads};
      vols.beta_radon = detail::tagged("recon-radon", [&] { return reconstruct_beta_radon(table, cfg.ball, ro, &rep.warnings); });
    }
    rep.metrics["radon"] = {{"beta", metrics_to_json(compare_volumes(vols.beta_radon, vols.beta_true, R))}};
    if (write_files) write_volume(out("beta_radon.pkvol"), vols.beta_radon, "beta");
  }

  if (cfg.method != ReconMethod::radon) {
    AbelOptions ao = cfg.abel;
    ao.threads = cfg.threads;
    AbelResult ar;
    {
      detail::StageTimer t(rep, "recon-abel");
      ar = detail::tagged("recon-abel", [&] { return reconstruct_q_abel(table, cfg.ball, ao); });
    }
    rep.warnings.insert(rep.warnings.end(), ar.warnings.begin(), ar.warnings.end());
    vols.q_abel = std::move(ar.q);
    PoissonReport pr;
    {
      detail::StageTimer t(rep, "poisson");
      vols.beta_abel = detail::tagged("poisson", [&] { return poisson_solve_ball(vols.q_abel, cfg.ball.B, cfg.poisson, &pr); });
    }
    rep.warnings.insert(rep.warnings.end(), pr.warnings.begin(), pr.warnings.end());
    vols.q_true = analytic_q(ph, shape);

    // Slices whose reference norm is below kNegligibleSlice of the largest
    // carry no resolvable q and are left out of the worst-slice figure.
    constexpr double kNegligibleSlice = 1e-12;
    std::vector<SliceError> errs;
    double ref_max = 0;
    for (std::size_t k = 0; k < ar.slices.size(); ++k) {
      const auto& s = ar.slices[k];
      errs.push_back(slice_error(
          s, [&](double x, double y) { return ph.laplacian_beta({x, y, s.z}); }, ar.info[k].r_min,
          std::numeric_limits<double>::infinity()));
      ref_max = std::max(ref_max, std::sqrt(errs.back().ref2));
    }
    nlohmann::json slices = nlohmann::json::array();
    double worst = 0;
    int negligible = 0;
    for (std::size_t k = 0; k < ar.slices.size(); ++k) {
      const auto& inf = ar.info[k];
      const double e = errs[k].rel_l2(), ref = std::sqrt(errs[k].ref2);
      const bool counted = ref > kNegligibleSlice * ref_max;
      if (counted) worst = std::max(worst, e);
      else ++negligible;
      slices.push_back({{"z", ar.slices[k].z},
                        {"q_rel_l2", e},
                        {"q_ref_l2", ref},
                        {"counted", counted},
                        {"r_min", inf.r_min},
                        {"modes_solved", inf.modes_solved},
                        {"truncated_modes", inf.truncated_modes},
                        {"max_iterations", inf.max_iterations},
                        {"imag_residue", inf.imag_residue}});
    }
    rep.metrics["abel"] = {{"q", metrics_to_json(compare_volumes(vols.q_abel, vols.q_true, R))},
                           {"q_slices", slices},
                           {"q_worst_slice_rel_l2", worst},
                           {"q_negligible_slices", negligible},
                           {"beta", metrics_to_json(compare_volumes(vols.beta_abel, vols.beta_true, R))},
                           {"poisson", {{"iterations", pr.iterations}, {"rel_residual", pr.rel_residual}}}};
    if (write_files) {
      write_volume(out("q_abel.pkvol"), vols.q_abel, "q");
      write_volume(out("beta_abel.pkvol"), vols.beta_abel, "beta");
    }
  }

  if (cfg.method == ReconMethod::both)
    rep.metrics["radon_vs_abel"] = metrics_to_json(compare_volumes(vols.beta_abel, vols.beta_radon, R));

  if (write_files) {
    detail::tagged("io", [&] {
      write_volume(out("beta_true.pkvol"), vols.beta_true, "beta");
      if (dump_csv) {
        write_file(out("beta_true.csv"), volume_csv(vols.beta_true));
        if (cfg.method != ReconMethod::abel) write_file(out("beta_radon.csv"), volume_csv(vols.beta_radon));
        if (cfg.method != ReconMethod::radon) {
          write_file(out("q_abel.csv"), volume_csv(vols.q_abel));
          write_file(out("beta_abel.csv"), volume_csv(vols.beta_abel));
        }
      }
      out("report.json");
      write_file(rep.files["report.json"], rep.to_json().dump(2) + "\n");
      return 0;
    });
  }
  if (volumes_out) *volumes_out = std::move(vols);
  return rep;
}

} // namespace pisp
