// SPDX-License-Identifier: Apache-2.0
//! \file io.hpp
//! On-disk formats. Binary files: 4-byte magic, u32 LE version, u64 LE header
//! length, JSON header, then little-endian f64 payload in row-major order.
//! Observables and chord sets are CSV.
#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "abelgeo.hpp"
#include "core.hpp"
#include "forward.hpp"
#include "geometry.hpp"
#include "observables.hpp"
#include "phantom.hpp"
#include "radon.hpp"
#include "volume.hpp"

namespace pisp {

static_assert(std::endian::native == std::endian::little, "pisp file I/O assumes a little-endian host");

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kPreambleBytes = 16;

inline constexpr char kMagicScan[] = "PKSC";
inline constexpr char kMagicSino[] = "PKSN";
inline constexpr char kMagicMode[] = "PKMD";
inline constexpr char kMagicVol[] = "PKVL";

struct Container {
  std::string magic;
  std::uint32_t version = kFormatVersion;
  nlohmann::json header;
  std::vector<double> payload;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

inline std::string encode_container(const Container& c) {
  if (c.magic.size() != 4) throw IoError("container magic must be 4 bytes");
  nlohmann::json h = c.header;
  h["payload_count"] = c.payload.size();
  const std::string js = h.dump();
  std::string out;
  out.reserve(kPreambleBytes + js.size() + 8 * c.payload.size());
  out += c.magic;
  const std::uint32_t v = c.version;
  const std::uint64_t len = js.size();
  out.append(reinterpret_cast<const char*>(&v), 4);
  out.append(reinterpret_cast<const char*>(&len), 8);
  out += js;
  out.append(reinterpret_cast<const char*>(c.payload.data()), 8 * c.payload.size());
  return out;
}

inline Container decode_container(const std::string& bytes, const std::string& magic,
                                  const std::string& what = "file") {
  if (bytes.size() < kPreambleBytes)
    throw IoError(what + ": truncated preamble (" + std::to_string(bytes.size()) + " bytes)");
  Container c;
  c.magic = bytes.substr(0, 4);
  if (c.magic != magic)
    throw IoError(what + ": bad magic '" + c.magic + "' at byte 0, expected '" + magic + "'");
  std::memcpy(&c.version, bytes.data() + 4, 4);
  if (c.version != kFormatVersion)
    throw IoError(what + ": format version " + std::to_string(c.version) + " is not supported (this build reads version " +
                  std::to_string(kFormatVersion) +
                  (c.version > kFormatVersion ? "); upgrade pisp to read it" : "); rewrite the file with a current build"));
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 8, 8);
  if (len > bytes.size() - kPreambleBytes)
    throw IoError(what + ": truncated header (declared " + std::to_string(len) + " bytes)");
  try {
    c.header = nlohmann::json::parse(bytes.begin() + kPreambleBytes, bytes.begin() + kPreambleBytes + len);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(what + ": corrupted header, JSON parse error at byte offset " +
                  std::to_string(kPreambleBytes + (e.byte > 0 ? e.byte - 1 : 0)) + ": " + e.what());
  }
  if (!c.header.is_object() || !c.header.contains("payload_count"))
    throw IoError(what + ": header at byte offset 16 lacks payload_count");
  const std::size_t count = c.header["payload_count"].get<std::size_t>();
  const std::size_t avail = bytes.size() - kPreambleBytes - len;
  if (avail < 8 * count)
    throw IoError(what + ": truncated payload, expected " + std::to_string(8 * count) + " bytes at offset " +
                  std::to_string(kPreambleBytes + len) + ", found " + std::to_string(avail));
  if (avail > 8 * count) throw IoError(what + ": trailing bytes after payload");
  c.payload.resize(count);
  std::memcpy(c.payload.data(), bytes.data() + kPreambleBytes + len, 8 * count);
  c.header.erase("payload_count");
  return c;
}

inline void write_container(const std::string& path, const Container& c) {
  write_file(path, encode_container(c));
}

inline Container read_container(const std::string& path, const std::string& magic) {
  return decode_container(read_file(path), magic, path);
}

namespace detail {
template <typename T> T header_get(const nlohmann::json& h, const char* key, const std::string& what) {
  if (!h.contains(key)) throw IoError(what + ": header missing '" + key + "'");
  try {
    return h.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(what + ": header field '" + key + "' has the wrong type");
  }
}
} // namespace detail

// ---- .pkvol ----

inline Container volume_container(const VolumeGrid& v, const std::string& quantity = "beta") {
  Container c;
  c.magic = kMagicVol;
  c.header = {{"kind", "volume"},
              {"quantity", quantity},
              {"dims", {v.nz, v.ny, v.nx}},
              {"order", "z,y,x"},
              {"spacing", v.spacing},
              {"origin", {v.origin.x, v.origin.y, v.origin.z}}};
  c.payload = v.values;
  return c;
}

inline void write_volume(const std::string& path, const VolumeGrid& v, const std::string& quantity = "beta") {
  write_container(path, volume_container(v, quantity));
}

inline VolumeGrid read_volume(const std::string& path, std::string* quantity = nullptr) {
  const auto c = read_container(path, kMagicVol);
  const auto dims = detail::header_get<std::vector<int>>(c.header, "dims", path);
  const auto o = detail::header_get<std::vector<double>>(c.header, "origin", path);
  if (dims.size() != 3 || o.size() != 3) throw IoError(path + ": dims and origin need 3 entries");
  VolumeGrid v(dims[2], dims[1], dims[0], detail::header_get<double>(c.header, "spacing", path), {o[0], o[1], o[2]});
  if (v.values.size() != c.payload.size()) throw IoError(path + ": payload does not match dims");
  v.values = c.payload;
  if (quantity) *quantity = c.header.value("quantity", "");
  return v;
}

//! A slice image as a 1 x n x n volume at height z.
inline VolumeGrid slice_as_volume(const SliceImage& s) {
  VolumeGrid v(s.n, s.n, 1, s.spacing(), {s.coord(0), s.coord(0), s.z});
  v.values = s.values;
  return v;
}

// ---- .pksino ----

inline void write_sinogram(const std::string& path, const Sinogram& sg) {
  Container c;
  c.magic = kMagicSino;
  c.header = {{"kind", "sinogram"},
              {"quantity", sg.quantity},
              {"z", sg.z},
              {"n_alpha", sg.n_alpha()},
              {"n_s", sg.n_s()},
              {"layout", "alphas[n_alpha], s_values[n_s], data[n_alpha][n_s]"}};
  c.payload = sg.alphas;
  c.payload.insert(c.payload.end(), sg.s_values.begin(), sg.s_values.end());
  c.payload.insert(c.payload.end(), sg.data.begin(), sg.data.end());
  write_container(path, c);
}

inline Sinogram read_sinogram(const std::string& path) {
  const auto c = read_container(path, kMagicSino);
  const auto na = detail::header_get<std::size_t>(c.header, "n_alpha", path);
  const auto ns = detail::header_get<std::size_t>(c.header, "n_s", path);
  if (c.payload.size() != na + ns + na * ns) throw IoError(path + ": payload does not match n_alpha, n_s");
  Sinogram sg;
  sg.z = detail::header_get<double>(c.header, "z", path);
  sg.quantity = c.header.value("quantity", "h");
  sg.alphas.assign(c.payload.begin(), c.payload.begin() + na);
  sg.s_values.assign(c.payload.begin() + na, c.payload.begin() + na + ns);
  sg.data.assign(c.payload.begin() + na + ns, c.payload.end());
  return sg;
}

// ---- .pkmode ----

inline void write_modes(const std::string& path, const ModeTable& m) {
  Container c;
  c.magic = kMagicMode;
  c.header = {{"kind", "modes"},
              {"quantity", m.quantity},
              {"z", m.z},
              {"B_z", m.B_z},
              {"rho0", m.rho0},
              {"N", m.N},
              {"n_r", m.n_r()},
              {"layout", "r[n_r], then (re, im) for n = -N..N, j = 0..n_r-1"}};
  c.payload = m.r;
  for (const auto& v : m.values) {
    c.payload.push_back(v.real());
    c.payload.push_back(v.imag());
  }
  write_container(path, c);
}

inline ModeTable read_modes(const std::string& path) {
  const auto c = read_container(path, kMagicMode);
  ModeTable m;
  m.z = detail::header_get<double>(c.header, "z", path);
  m.B_z = detail::header_get<double>(c.header, "B_z", path);
  m.rho0 = detail::header_get<double>(c.header, "rho0", path);
  m.N = detail::header_get<int>(c.header, "N", path);
  m.quantity = c.header.value("quantity", "g");
  const auto nr = detail::header_get<std::size_t>(c.header, "n_r", path);
  const std::size_t nv = std::size_t(2 * m.N + 1) * nr;
  if (c.payload.size() != nr + 2 * nv) throw IoError(path + ": payload does not match N, n_r");
  m.r.assign(c.payload.begin(), c.payload.begin() + nr);
  m.values.resize(nv);
  for (std::size_t i = 0; i < nv; ++i) m.values[i] = {c.payload[nr + 2 * i], c.payload[nr + 2 * i + 1]};
  return m;
}

// ---- .pkscan ----

//! Series of one kind sharing a k grid. Payload row i holds the samples of
//! chord i of the referenced chord table (a chord-set CSV next to the scan).
inline void write_scan(const std::string& path, const std::vector<KSeries>& series, const BallConfig& cfg,
                       const std::string& chord_table) {
  if (series.empty()) throw IoError("write_scan: no series");
  const KGrid g = series.front().grid;
  Container c;
  c.magic = kMagicScan;
  c.header = {{"kind", series.front().kind == SeriesKind::F1 ? "f1" : "f2"},
              {"B", cfg.B},
              {"R", cfg.R},
              {"k0", g.k0},
              {"k_max", g.k_max},
              {"n_k", g.n_k},
              {"n_chords", series.size()},
              {"chord_table", chord_table}};
  c.payload.reserve(series.size() * g.n_k);
  for (const auto& s : series) {
    if (s.grid.n_k != g.n_k || s.grid.k0 != g.k0 || s.grid.k_max != g.k_max || s.kind != series.front().kind)
      throw IoError("write_scan: mixed k grids or series kinds");
    c.payload.insert(c.payload.end(), s.values.begin(), s.values.end());
  }
  write_container(path, c);
}

inline ChordSet read_chordset(const std::string& path);

//! Chords come from \p chords when given, else from the header's chord_table
//! resolved relative to the scan file.
inline std::vector<KSeries> read_scan(const std::string& path, const ChordSet* chords = nullptr) {
  const auto c = read_container(path, kMagicScan);
  KGrid g;
  g.k0 = detail::header_get<double>(c.header, "k0", path);
  g.k_max = detail::header_get<double>(c.header, "k_max", path);
  g.n_k = detail::header_get<int>(c.header, "n_k", path);
  const auto n = detail::header_get<std::size_t>(c.header, "n_chords", path);
  const std::string kind = detail::header_get<std::string>(c.header, "kind", path);
  if (kind != "f1" && kind != "f2") throw IoError(path + ": unknown series kind '" + kind + "'");
  if (c.payload.size() != n * std::size_t(g.n_k)) throw IoError(path + ": payload does not match n_chords, n_k");
  ChordSet loaded;
  if (!chords) {
    const auto ref = detail::header_get<std::string>(c.header, "chord_table", path);
    const auto slash = path.find_last_of('/');
    loaded = read_chordset(slash == std::string::npos || (!ref.empty() && ref[0] == '/') ? ref
                                                                                          : path.substr(0, slash + 1) + ref);
    chords = &loaded;
  }
  if (chords->chords.size() != n) throw IoError(path + ": chord table has a different number of chords");
  std::vector<KSeries> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].chord = chords->chords[i];
    out[i].grid = g;
    out[i].kind = kind == "f2" ? SeriesKind::F2 : SeriesKind::F1;
    out[i].values.assign(c.payload.begin() + i * g.n_k, c.payload.begin() + (i + 1) * g.n_k);
  }
  return out;
}

// ---- CSV: .pkobs and chord sets ----

namespace detail {
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw IoError(where + ": not a number '" + s + "'");
  return v;
}
} // namespace detail

inline const char* kObsColumns = "z,alpha,s,dist,A_hat,tau_hat,line_of_sight,quality";

inline std::string encode_observables(const ObservablesTable& t) {
  std::string out = std::string(kObsColumns) + "\n";
  for (const auto& r : t.rows) {
    out += detail::fmt17(r.z) + "," + detail::fmt17(r.alpha) + "," + detail::fmt17(r.s) + "," +
           detail::fmt17(r.dist) + "," + detail::fmt17(r.A_hat) + "," + detail::fmt17(r.tau_hat) + "," +
           (r.line_of_sight ? "1" : "0") + "," + detail::fmt17(r.quality) + "\n";
  }
  return out;
}

inline void write_observables(const std::string& path, const ObservablesTable& t) {
  write_file(path, encode_observables(t));
}

inline ObservablesTable decode_observables(const std::string& text, const std::string& what = "observables") {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.substr(0, std::strlen(kObsColumns)) != kObsColumns)
    throw IoError(what + ": missing header line '" + kObsColumns + "'");
  ObservablesTable t;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    const std::string where = what + ":" + std::to_string(lineno);
    if (f.size() != 8) throw IoError(where + ": expected 8 columns, got " + std::to_string(f.size()));
    ObsRow r;
    r.z = detail::parse_double(f[0], where);
    r.alpha = detail::parse_double(f[1], where);
    r.s = detail::parse_double(f[2], where);
    r.dist = detail::parse_double(f[3], where);
    r.A_hat = detail::parse_double(f[4], where);
    r.tau_hat = detail::parse_double(f[5], where);
    r.line_of_sight = f[6] == "1" || f[6] == "true";
    r.quality = detail::parse_double(f[7], where);
    t.rows.push_back(r);
  }
  return t;
}

inline ObservablesTable read_observables(const std::string& path) {
  return decode_observables(read_file(path), path);
}

//! First line: JSON with B, R, n_alpha, n_s, z_values; then a CSV of chords.
inline void write_chordset(const std::string& path, const ChordSet& set) {
  nlohmann::json h = {{"B", set.B}, {"R", set.R}, {"n_alpha", set.n_alpha}, {"n_s", set.n_s}, {"z_values", set.z_values}};
  std::string out = h.dump() + "\nz,alpha,s,x1,x2,x3,y1,y2,y3\n";
  for (const auto& c : set.chords) {
    for (double v : {c.param.z, c.param.alpha, c.param.s, c.x.x, c.x.y, c.x.z, c.y.x, c.y.y})
      out += detail::fmt17(v) + ",";
    out += detail::fmt17(c.y.z) + "\n";
  }
  write_file(path, out);
}

inline ChordSet read_chordset(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  ChordSet set;
  if (!std::getline(in, line)) throw IoError(path + ": empty chord set");
  try {
    const auto h = nlohmann::json::parse(line);
    set.B = h.at("B");
    set.R = h.at("R");
    set.n_alpha = h.at("n_alpha");
    set.n_s = h.at("n_s");
    set.z_values = h.at("z_values").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": bad chord-set header: " + e.what());
  }
  std::getline(in, line);
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (f.size() != 9) throw IoError(where + ": expected 9 columns");
    double v[9];
    for (int i = 0; i < 9; ++i) v[i] = detail::parse_double(f[i], where);
    set.chords.push_back({{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, {v[6], v[7], v[8]}});
  }
  return set;
}

// ---- phantom JSON ----

inline nlohmann::json phantom_to_json(const Phantom& p) {
  nlohmann::json bumps = nlohmann::json::array();
  for (const auto& b : p.bumps())
    bumps.push_back({{"center", {b.center.x, b.center.y, b.center.z}}, {"radius", b.radius}, {"amplitude", b.amplitude}});
  return {{"B", p.config().B}, {"R", p.config().R}, {"bumps", bumps}};
}

inline std::vector<Bump> bumps_from_json(const nlohmann::json& arr) {
  if (!arr.is_array()) throw ConfigError("phantom: 'bumps' must be an array");
  std::vector<Bump> out;
  for (const auto& j : arr) {
    if (!j.is_object()) throw ConfigError("phantom: each bump must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "center" && it.key() != "radius" && it.key() != "amplitude")
        throw ConfigError("phantom: unknown bump field '" + it.key() + "'");
    Bump b;
    try {
      if (j.contains("center")) {
        const auto c = j.at("center").get<std::vector<double>>();
        if (c.size() != 3) throw ConfigError("phantom: bump center needs 3 coordinates");
        b.center = {c[0], c[1], c[2]};
      }
      b.radius = j.value("radius", b.radius);
      b.amplitude = j.value("amplitude", b.amplitude);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("phantom: bad bump field: ") + e.what());
    }
    out.push_back(b);
  }
  return out;
}

inline void write_phantom(const std::string& path, const Phantom& p) {
  write_file(path, phantom_to_json(p).dump(2) + "\n");
}

inline Phantom read_phantom(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": JSON parse error at byte " + std::to_string(e.byte));
  }
  BallConfig cfg;
  cfg.B = j.value("B", cfg.B);
  cfg.R = j.value("R", cfg.R);
  return Phantom(bumps_from_json(j.value("bumps", nlohmann::json::array())), cfg);
}

// ---- plot-ready CSV ----

//! Central x-z and x-y planes plus the radial profile along +x through the origin.
inline std::string volume_csv(const VolumeGrid& v) {
  std::string out = "plane,x,y,z,value\n";
  const int ci = v.nx / 2, cj = v.ny / 2, ck = v.nz / 2;
  for (int j = 0; j < v.ny; ++j)
    for (int i = 0; i < v.nx; ++i) {
      const Vec3 p = v.position(i, j, ck);
      out += "xy," + detail::fmt17(p.x) + "," + detail::fmt17(p.y) + "," + detail::fmt17(p.z) + "," +
             detail::fmt17(v.at(i, j, ck)) + "\n";
    }
  for (int k = 0; k < v.nz; ++k)
    for (int i = 0; i < v.nx; ++i) {
      const Vec3 p = v.position(i, cj, k);
      out += "xz," + detail::fmt17(p.x) + "," + detail::fmt17(p.y) + "," + detail::fmt17(p.z) + "," +
             detail::fmt17(v.at(i, cj, k)) + "\n";
    }
  (void)ci;
  return out;
}

inline std::string sinogram_csv(const Sinogram& sg) {
  std::string out = "alpha,s,value\n";
  for (std::size_t ia = 0; ia < sg.n_alpha(); ++ia)
    for (std::size_t is = 0; is < sg.n_s(); ++is)
      out += detail::fmt17(sg.alphas[ia]) + "," + detail::fmt17(sg.s_values[is]) + "," + detail::fmt17(sg.at(ia, is)) + "\n";
  return out;
}

} // namespace pisp
