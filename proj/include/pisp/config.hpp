// SPDX-License-Identifier: Apache-2.0
//! \file config.hpp
//! Pipeline configuration: JSON in, validated, and echoed back with every
//! default filled in.
#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "abelgeo.hpp"
#include "elliptic.hpp"
#include "extract.hpp"
#include "forward.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "phantom.hpp"
#include "radon.hpp"
#include "raytrace.hpp"

namespace pisp {

enum class ReconMethod { radon, abel, both };
enum class ForwardModel { linearized, geodesic };
//! series: synthesize f1/f2 and extract; direct: take A, tau from the forward model.
enum class ObservableSource { series, direct };
enum class AmplitudeSource { f2, f1 };

struct ChordCounts {
  int n_z = 64;
  int n_alpha = 256;
  int n_s = 256;
};

struct PipelineConfig {
  BallConfig ball{1.0, 0.6, 128};
  std::vector<Bump> bumps{Bump{{0, 0, 0}, 0.5, 0.01}};
  SmallnessLimits smallness;
  KGrid kgrid{50, 450, 801};
  ChordCounts chords;
  ExtractOptions extract;
  ReconMethod method = ReconMethod::both;
  ForwardModel forward = ForwardModel::linearized;
  ObservableSource observables = ObservableSource::series;
  AmplitudeSource amplitude_source = AmplitudeSource::f2;
  NoiseModel noise;
  std::uint64_t seed = 0;
  FbpOptions fbp;
  AbelOptions abel;
  PoissonOptions poisson;
  RayOptions ray;
  std::string output = "out";
  bool write_scan = false;
  unsigned threads = 1;

  Phantom phantom() const { return Phantom(bumps, ball); }
  void validate() const;
};

namespace detail {

//! Object reader that rejects keys it was not asked about.
class JsonSection {
public:
  JsonSection(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
  }

  template <typename T> void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config: '" + name(key) + "' has the wrong type");
    }
  }

  //! String field restricted to the listed choices; returns the index.
  int choice(const char* key, std::initializer_list<const char*> options, int current) {
    seen_.insert(key);
    if (!j_.contains(key)) return current;
    if (!j_.at(key).is_string()) throw ConfigError("config: '" + name(key) + "' must be a string");
    const auto v = j_.at(key).get<std::string>();
    int i = 0;
    std::string list;
    for (const char* o : options) {
      if (v == o) return i;
      list += std::string(i ? "|" : "") + o;
      ++i;
    }
    throw ConfigError("config: '" + name(key) + "' = '" + v + "', expected one of " + list);
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  JsonSection section(const char* key) {
    seen_.insert(key);
    return JsonSection(j_.at(key), path_.empty() ? key : path_ + "." + key);
  }
  const nlohmann::json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError("config: unknown key '" + name(it.key()) + "'");
  }

private:
  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("config: " + msg);
}

} // namespace detail

inline void PipelineConfig::validate() const {
  using detail::require;
  ball.validate();
  require(ball.grid_n <= 512, "ball.grid_n must be <= 512");
  kgrid.validate();
  require(chords.n_z >= 1 && chords.n_z <= 1024, "chords.n_z must be in [1, 1024]");
  require(chords.n_alpha >= 4 && chords.n_alpha <= 4096, "chords.n_alpha must be in [4, 4096]");
  require(chords.n_s >= 2 && chords.n_s <= 4096, "chords.n_s must be in [2, 4096]");
  require(extract.los_tol > 0 && extract.los_tol < 1, "extract.los_tol must be in (0, 1)");
  require(noise.level >= 0 && noise.level < 1, "noise.level must be in [0, 1)");
  require(smallness.max_beta > 0 && smallness.max_laplacian_r2 > 0, "smallness bounds must be positive");
  require(abel.mode_floor >= 0 && abel.growth_guard >= 0, "abel.mode_floor and abel.growth_guard must be >= 0");
  require(abel.volterra.tol > 0 && abel.volterra.max_iter >= 1, "abel.volterra_tol > 0 and volterra_max_iter >= 1");
  require(poisson.rel_tol > 0 && poisson.max_iter >= 1, "poisson.rel_tol > 0 and poisson.max_iter >= 1");
  require(poisson.theta_min > 0 && poisson.theta_min <= 1, "poisson.theta_min must be in (0, 1]");
  require(ray.step_fraction > 0 && ray.step_fraction <= 1, "geodesic.step_fraction must be in (0, 1]");
  require(threads >= 1 && threads <= 1024, "threads must be in [1, 1024]");
  require(!output.empty(), "output must be a directory path");
  (void)phantom();  // bump geometry checks
}

inline PipelineConfig parse_config(const nlohmann::json& j) {
  PipelineConfig c;
  detail::JsonSection root(j, "");
  if (root.has("ball")) {
    auto s = root.section("ball");
    s.get("B", c.ball.B);
    s.get("R", c.ball.R);
    s.get("grid_n", c.ball.grid_n);
    s.finish();
  }
  if (root.has("phantom")) {
    auto s = root.section("phantom");
    if (s.has("bumps")) c.bumps = bumps_from_json(s.raw("bumps"));
    if (s.has("smallness")) {
      auto t = s.section("smallness");
      t.get("max_beta", c.smallness.max_beta);
      t.get("max_laplacian_r2", c.smallness.max_laplacian_r2);
      t.finish();
    }
    s.finish();
  }
  if (root.has("kgrid")) {
    auto s = root.section("kgrid");
    s.get("k0", c.kgrid.k0);
    s.get("k_max", c.kgrid.k_max);
    s.get("n_k", c.kgrid.n_k);
    s.finish();
  }
  if (root.has("chords")) {
    auto s = root.section("chords");
    s.get("n_z", c.chords.n_z);
    s.get("n_alpha", c.chords.n_alpha);
    s.get("n_s", c.chords.n_s);
    s.finish();
  }
  if (root.has("extract")) {
    auto s = root.section("extract");
    s.get("los_tol", c.extract.los_tol);
    s.get("robust", c.extract.robust);
    s.finish();
  }
  c.method = static_cast<ReconMethod>(root.choice("method", {"radon", "abel", "both"}, int(c.method)));
  c.forward = static_cast<ForwardModel>(root.choice("forward", {"linearized", "geodesic"}, int(c.forward)));
  c.observables =
      static_cast<ObservableSource>(root.choice("observables", {"series", "direct"}, int(c.observables)));
  c.amplitude_source =
      static_cast<AmplitudeSource>(root.choice("amplitude_source", {"f2", "f1"}, int(c.amplitude_source)));
  if (root.has("noise")) {
    auto s = root.section("noise");
    s.get("level", c.noise.level);
    s.get("remainder_c", c.noise.remainder_c);
    s.finish();
  }
  root.get("seed", c.seed);
  if (root.has("fbp")) {
    auto s = root.section("fbp");
    c.fbp.window = static_cast<Apodization>(s.choice("window", {"none", "cosine"}, int(c.fbp.window)));
    c.fbp.interp = static_cast<Interpolation>(s.choice("interp", {"bilinear", "nearest"}, int(c.fbp.interp)));
    s.finish();
  }
  if (root.has("abel")) {
    auto s = root.section("abel");
    s.get("n_modes", c.abel.n_modes);
    s.get("radial_intervals", c.abel.radial_intervals);
    s.get("mode_floor", c.abel.mode_floor);
    c.abel.axis = static_cast<AxisFill>(s.choice("axis", {"zero", "extend"}, int(c.abel.axis)));
    s.get("growth_guard", c.abel.growth_guard);
    s.get("volterra_tol", c.abel.volterra.tol);
    s.get("volterra_max_iter", c.abel.volterra.max_iter);
    s.finish();
  }
  if (root.has("poisson")) {
    auto s = root.section("poisson");
    s.get("rel_tol", c.poisson.rel_tol);
    s.get("max_iter", c.poisson.max_iter);
    s.get("theta_min", c.poisson.theta_min);
    s.finish();
  }
  if (root.has("geodesic")) {
    auto s = root.section("geodesic");
    s.get("step_fraction", c.ray.step_fraction);
    s.get("max_newton", c.ray.max_newton);
    s.get("miss_tol", c.ray.miss_tol);
    s.finish();
  }
  root.get("output", c.output);
  root.get("write_scan", c.write_scan);
  root.get("threads", c.threads);
  root.finish();
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": JSON parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return parse_config(j);
}

//! Full configuration with defaults filled in.
inline nlohmann::json config_to_json(const PipelineConfig& c) {
  static const char* methods[] = {"radon", "abel", "both"};
  static const char* forwards[] = {"linearized", "geodesic"};
  static const char* sources[] = {"series", "direct"};
  static const char* amps[] = {"f2", "f1"};
  nlohmann::json bumps = nlohmann::json::array();
  for (const auto& b : c.bumps)
    bumps.push_back({{"center", {b.center.x, b.center.y, b.center.z}}, {"radius", b.radius}, {"amplitude", b.amplitude}});
  return {
      {"ball", {{"B", c.ball.B}, {"R", c.ball.R}, {"grid_n", c.ball.grid_n}}},
      {"phantom",
       {{"bumps", bumps},
        {"smallness", {{"max_beta", c.smallness.max_beta}, {"max_laplacian_r2", c.smallness.max_laplacian_r2}}}}},
      {"kgrid", {{"k0", c.kgrid.k0}, {"k_max", c.kgrid.k_max}, {"n_k", c.kgrid.n_k}}},
      {"chords", {{"n_z", c.chords.n_z}, {"n_alpha", c.chords.n_alpha}, {"n_s", c.chords.n_s}}},
      {"extract", {{"los_tol", c.extract.los_tol}, {"robust", c.extract.robust}}},
      {"method", methods[int(c.method)]},
      {"forward", forwards[int(c.forward)]},
      {"observables", sources[int(c.observables)]},
      {"amplitude_source", amps[int(c.amplitude_source)]},
      {"noise", {{"level", c.noise.level}, {"remainder_c", c.noise.remainder_c}}},
      {"seed", c.seed},
      {"fbp",
       {{"window", c.fbp.window == Apodization::cosine ? "cosine" : "none"},
        {"interp", c.fbp.interp == Interpolation::bilinear ? "bilinear" : "nearest"}}},
      {"abel",
       {{"n_modes", c.abel.n_modes},
        {"radial_intervals", c.abel.radial_intervals},
        {"mode_floor", c.abel.mode_floor},
        {"axis", c.abel.axis == AxisFill::zero ? "zero" : "extend"},
        {"growth_guard", c.abel.growth_guard},
        {"volterra_tol", c.abel.volterra.tol},
        {"volterra_max_iter", c.abel.volterra.max_iter}}},
      {"poisson", {{"rel_tol", c.poisson.rel_tol}, {"max_iter", c.poisson.max_iter}, {"theta_min", c.poisson.theta_min}}},
      {"geodesic",
       {{"step_fraction", c.ray.step_fraction}, {"max_newton", c.ray.max_newton}, {"miss_tol", c.ray.miss_tol}}},
      {"output", c.output},
      {"write_scan", c.write_scan},
      {"threads", c.threads},
  };
}

} // namespace pisp
