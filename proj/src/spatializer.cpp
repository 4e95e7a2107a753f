// Copyright 2026 The binloc Authors.
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

#include "binloc/spatializer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "binloc/material.hpp"
#include "binloc/rng.hpp"

namespace binloc {

namespace fs = std::filesystem;
using nlohmann::json;

// --- AzimuthGrid ---

bool AzimuthGrid::on_grid(double az_deg) {
  const double w = wrap_degrees(az_deg);
  const double r = std::fmod(w, static_cast<double>(kStepDeg));
  return r < 1e-9 || r > kStepDeg - 1e-9;
}

int AzimuthGrid::snap(double az_deg) {
  const int k = static_cast<int>(std::lround(wrap_degrees(az_deg) / kStepDeg));
  return (k % kCount) * kStepDeg;
}

int AzimuthGrid::index_of(double az_deg) {
  if (!on_grid(az_deg))
    throw InvalidArgument("azimuth " + std::to_string(az_deg) + " is not on the 5 degree grid");
  return (static_cast<int>(std::lround(wrap_degrees(az_deg))) / kStepDeg) % kCount;
}

int AzimuthGrid::azimuth_of(int index) {
  if (index < 0 || index >= kCount) throw InvalidArgument("grid index out of range");
  return index * kStepDeg;
}

std::vector<int> AzimuthGrid::values() {
  std::vector<int> v(kCount);
  for (int i = 0; i < kCount; ++i) v[i] = i * kStepDeg;
  return v;
}

// --- HrirCatalog ---

bool HrirCatalog::has(double az_deg) const {
  return entries.count(AzimuthGrid::snap(az_deg)) != 0 && AzimuthGrid::on_grid(az_deg);
}

const std::pair<MonoSignal, MonoSignal>& HrirCatalog::at(double az_deg) const {
  if (!AzimuthGrid::on_grid(az_deg))
    throw InvalidArgument("catalog lookup off the grid: " + std::to_string(az_deg));
  auto it = entries.find(AzimuthGrid::snap(az_deg));
  if (it == entries.end())
    throw InvalidArgument("catalog '" + label + "' has no entry at " + std::to_string(az_deg) +
                          " degrees (no nearest-neighbor fallback)");
  return it->second;
}

bool HrirCatalog::covers_grid() const {
  for (int az : AzimuthGrid::values())
    if (entries.count(az) == 0) return false;
  return true;
}

// --- SceneSpec ---

void SceneSpec::validate_for_eval() const {
  if (sources.empty() || sources.size() > 3)
    throw InvalidArgument("evaluation scenes need 1 to 3 sources, got " +
                          std::to_string(sources.size()));
  for (std::size_t i = 0; i < sources.size(); ++i)
    for (std::size_t j = i + 1; j < sources.size(); ++j)
      if (angular_distance(sources[i].azimuth_deg, sources[j].azimuth_deg) < 10.0)
        throw InvalidArgument("evaluation scene sources closer than 10 degrees");
}

int head_relative_azimuth(double world_deg, double head_orientation_deg) {
  return AzimuthGrid::snap(world_deg - head_orientation_deg);
}

// --- Woodworth geometry ---

namespace {

/// Lateral angle in radians, positive toward the left ear, in [-pi/2, pi/2].
/// Front-back mirror pairs share the same lateral angle.
double lateral_angle_rad(double azimuth_deg) {
  const double a = wrap_degrees(azimuth_deg) * kPi / 180.0;
  return std::asin(std::sin(a));
}

bool is_rear(double azimuth_deg) {
  const double w = wrap_degrees(azimuth_deg);
  return w > 90.0 && w < 270.0;
}

}  // namespace

double woodworth_itd_s(const SphericalHeadParams& params, double azimuth_deg) {
  if (params.head_radius_m <= 0.0 || params.sound_speed_m_s <= 0.0)
    throw InvalidArgument("spherical head: radius and sound speed must be positive");
  const double theta = lateral_angle_rad(azimuth_deg);
  const double mag = params.head_radius_m / params.sound_speed_m_s *
                     (std::fabs(theta) + std::sin(std::fabs(theta)));
  return theta >= 0.0 ? mag : -mag;
}

// --- Convolution-based rendering ---

namespace {

std::vector<double> convolve(const std::vector<double>& x, const std::vector<double>& h) {
  std::vector<double> y(x.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < h.size(); ++j) y[i + j] += xi * h[j];
  }
  return y;
}

double broadband_energy(const BinauralSignal& s) {
  double acc = 0.0;
  for (double v : s.left.samples) acc += v * v;
  for (double v : s.right.samples) acc += v * v;
  return acc / 2.0;
}

void scale(BinauralSignal& s, double gain) {
  if (gain == 1.0) return;
  for (double& v : s.left.samples) v *= gain;
  for (double& v : s.right.samples) v *= gain;
}

// Gains are applied to each rendering before summation (not fused into the
// add), so mixing sources separately and summing is sample-exact linear.
void add_into(BinauralSignal& acc, const BinauralSignal& s) {
  if (acc.size() < s.size()) {
    acc.left.samples.resize(s.size(), 0.0);
    acc.right.samples.resize(s.size(), 0.0);
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    acc.left.samples[i] += s.left.samples[i];
    acc.right.samples[i] += s.right.samples[i];
  }
}

}  // namespace

BinauralSignal spatialize(const MonoSignal& source, double azimuth_deg,
                          const HrirCatalog& catalog) {
  if (source.sample_rate_hz != catalog.sample_rate_hz)
    throw InvalidArgument("spatialize: source rate " + std::to_string(source.sample_rate_hz) +
                          " != catalog rate " + std::to_string(catalog.sample_rate_hz));
  const auto& ir = catalog.at(azimuth_deg);
  BinauralSignal out;
  out.left = {convolve(source.samples, ir.first.samples), source.sample_rate_hz};
  out.right = {convolve(source.samples, ir.second.samples), source.sample_rate_hz};
  return out;
}

MonoSignal render_source(const SourceSpec& source, int sample_rate_hz) {
  MonoSignal s;
  if (source.generator) {
    const auto& g = *source.generator;
    if (g.type == "white_noise")
      s = white_noise_burst(g.duration_s, sample_rate_hz, g.seed);
    else if (g.type == "pink_noise")
      s = pink_noise_burst(g.duration_s, sample_rate_hz, g.seed);
    else if (g.type == "harmonic")
      s = harmonic_tone(g.duration_s, sample_rate_hz, g.f0_hz, g.seed);
    else if (g.type == "modulated_noise")
      s = modulated_noise_burst(g.duration_s, sample_rate_hz, g.seed);
    else
      throw InvalidArgument("unknown generator type '" + g.type + "'");
  } else {
    if (source.signal_path.empty())
      throw InvalidArgument("source has neither signal_path nor generator");
    s = resample(read_wav_mono(source.signal_path), sample_rate_hz);
  }
  if (source.normalize_rms) s = rms_normalize(s, *source.normalize_rms);
  return s;
}

BinauralSignal mix_scene(const SceneSpec& spec, const HrirCatalog& catalog) {
  if (spec.sources.empty()) throw InvalidArgument("mix_scene: no sources");

  BinauralSignal mix;
  mix.left.sample_rate_hz = catalog.sample_rate_hz;
  mix.right.sample_rate_hz = catalog.sample_rate_hz;
  for (const auto& src : spec.sources) {
    const MonoSignal sig = render_source(src, catalog.sample_rate_hz);
    const int rel = head_relative_azimuth(src.azimuth_deg, spec.head_orientation_deg);
    BinauralSignal rendered = spatialize(sig, rel, catalog);
    scale(rendered, src.gain);
    add_into(mix, rendered);
  }

  if (spec.diffuse_noise) {
    const double e_dir = broadband_energy(mix);
    if (e_dir <= 0.0)
      throw InvalidArgument("mix_scene: SNR requested but directional mix has zero energy");
    const double duration = static_cast<double>(mix.size()) / catalog.sample_rate_hz;
    BinauralSignal noise =
        make_diffuse_noise(duration, catalog, derive_seed(spec.seed, 0xd1ffu));
    noise.left.samples.resize(mix.size(), 0.0);
    noise.right.samples.resize(mix.size(), 0.0);
    const double e_noise = broadband_energy(noise);
    scale(noise, std::sqrt(e_dir / (e_noise * std::pow(10.0, spec.diffuse_noise->snr_db / 10.0))));
    add_into(mix, noise);
  }
  return mix;
}

BinauralSignal make_diffuse_noise(double duration_s, const HrirCatalog& catalog,
                                  std::uint64_t seed) {
  if (!catalog.covers_grid())
    throw InvalidArgument("make_diffuse_noise: catalog does not cover the full grid");
  const auto len = static_cast<std::size_t>(std::floor(duration_s * catalog.sample_rate_hz + 0.5));
  BinauralSignal field;
  field.left.sample_rate_hz = catalog.sample_rate_hz;
  field.right.sample_rate_hz = catalog.sample_rate_hz;
  MonoSignal src;
  src.sample_rate_hz = catalog.sample_rate_hz;
  src.samples.resize(len);
  for (int az : AzimuthGrid::values()) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(az)));
    for (double& v : src.samples) v = rng.normal();
    add_into(field, spatialize(src, az, catalog));
  }
  return field;
}

SceneSpec rotate_head(const SceneSpec& spec, double delta_deg) {
  if (std::fabs(delta_deg) > 30.0 + 1e-9)
    throw InvalidArgument("rotate_head: rotation limited to +/-30 degrees, got " +
                          std::to_string(delta_deg));
  SceneSpec out = spec;
  out.head_orientation_deg = spec.head_orientation_deg + delta_deg;
  return out;
}

// --- Spherical-head catalog synthesis ---

namespace {

void add_fractional_delay(std::vector<double>& ir, double delay_samples, double gain = 1.0) {
  for (std::size_t n = 0; n < ir.size(); ++n) {
    const double u = static_cast<double>(n) - delay_samples;
    if (std::fabs(u) <= detail::kSincHalfWidth) ir[n] += gain * detail::windowed_sinc(u, 1.0);
  }
}

void one_pole_lowpass(std::vector<double>& x, double cutoff_hz, int rate) {
  const double a = std::exp(-2.0 * kPi * cutoff_hz / rate);
  double state = 0.0;
  for (double& v : x) {
    state = (1.0 - a) * v + a * state;
    v = state;
  }
}

/// DC gain 1, high frequencies scaled by `hf_gain` above the corner.
void high_shelf(std::vector<double>& x, double corner_hz, double hf_gain, int rate) {
  const double a = std::exp(-2.0 * kPi * corner_hz / rate);
  double state = 0.0;
  for (double& v : x) {
    state = (1.0 - a) * v + a * state;
    v = state + hf_gain * (v - state);
  }
}

}  // namespace

HrirCatalog generate_spherical_catalog(const SphericalHeadParams& params, int sample_rate_hz) {
  if (params.head_radius_m <= 0.0 || params.sound_speed_m_s <= 0.0)
    throw InvalidArgument("spherical head: radius and sound speed must be positive");
  if (params.shadow_asymmetry < 0.0 || params.shadow_asymmetry > 1.0)
    throw InvalidArgument("spherical head: shadow_asymmetry must lie in [0, 1]");
  if (sample_rate_hz <= 0) throw InvalidArgument("spherical head: bad sample rate");

  constexpr int kIrLength = 128;
  constexpr double kBaseDelay = 40.0;  // common bulk delay, keeps the sinc kernel causal
  const double nyquist = sample_rate_hz / 2.0;

  HrirCatalog catalog;
  catalog.sample_rate_hz = sample_rate_hz;
  catalog.label = "spherical_head";

  for (int az : AzimuthGrid::values()) {
    const double theta = lateral_angle_rad(az);
    const double lateral = std::fabs(std::sin(theta));  // 0 on the median plane, 1 at the side
    const double itd = woodworth_itd_s(params, az);

    std::vector<double> near_ir(kIrLength, 0.0), far_ir(kIrLength, 0.0);
    add_fractional_delay(near_ir, kBaseDelay);
    add_fractional_delay(far_ir, kBaseDelay + std::fabs(itd) * sample_rate_hz);

    if (lateral > 1e-12) {
      // Head shadow: the far ear loses high frequencies as the source moves
      // to the side. Cutoff slides geometrically from Nyquist down to 800 Hz.
      const double cutoff = nyquist * std::pow(800.0 / nyquist, lateral);
      one_pole_lowpass(far_ir, cutoff, sample_rate_hz);
      if (params.shadow_asymmetry > 0.0 && is_rear(az)) {
        // Rear sources get a gentle extra tilt on the far ear. The corner
        // sits low enough that most analysis bands carry the resulting ILD
        // difference; bands left identical between a front/back pair can
        // only vote arbitrarily on it.
        const double depth_db = 20.0 * params.shadow_asymmetry * lateral;
        high_shelf(far_ir, 1000.0, std::pow(10.0, -depth_db / 20.0), sample_rate_hz);
      }
    }

    MonoSignal left{std::vector<double>(), sample_rate_hz};
    MonoSignal right{std::vector<double>(), sample_rate_hz};
    if (theta >= 0.0) {  // source on the left: left ear is near
      left.samples = std::move(near_ir);
      right.samples = std::move(far_ir);
    } else {
      left.samples = std::move(far_ir);
      right.samples = std::move(near_ir);
    }
    catalog.entries[az] = {std::move(left), std::move(right)};
  }
  return catalog;
}

HrirCatalog compensate_levels(const HrirCatalog& catalog) {
  if (catalog.entries.empty()) throw InvalidArgument("compensate_levels: empty catalog");
  HrirCatalog out = catalog;
  for (auto& [az, pair] : out.entries) {
    double peak_l = 0.0, peak_r = 0.0;
    for (double v : pair.first.samples) peak_l = std::max(peak_l, std::fabs(v));
    for (double v : pair.second.samples) peak_r = std::max(peak_r, std::fabs(v));
    const double avg = 0.5 * (peak_l + peak_r);
    if (avg == 0.0)
      throw InvalidArgument("compensate_levels: all-zero impulse response at " +
                            std::to_string(az) + " degrees");
    const double g = 1.0 / avg;
    for (double& v : pair.first.samples) v *= g;
    for (double& v : pair.second.samples) v *= g;
  }
  return out;
}

// --- Catalog and scene serialization ---

void save_catalog(const HrirCatalog& catalog, const std::string& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["sample_rate"] = catalog.sample_rate_hz;
  manifest["label"] = catalog.label;
  manifest["entries"] = json::array();
  for (const auto& [az, pair] : catalog.entries) {
    char lname[32], rname[32];
    std::snprintf(lname, sizeof lname, "az%03d_left.wav", az);
    std::snprintf(rname, sizeof rname, "az%03d_right.wav", az);
    write_wav(dir + "/" + lname, pair.first, WavFormat::float32);
    write_wav(dir + "/" + rname, pair.second, WavFormat::float32);
    manifest["entries"].push_back({{"azimuth", az}, {"left", lname}, {"right", rname}});
  }
  std::ofstream out(dir + "/manifest.json", std::ios::trunc);
  if (!out) throw IoError("save_catalog: cannot write manifest in " + dir);
  out << manifest.dump(2) << "\n";
}

HrirCatalog load_catalog(const std::string& dir, int target_rate_hz) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) throw IoError("load_catalog: cannot open " + dir + "/manifest.json");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw IoError("load_catalog: bad manifest: " + std::string(e.what()));
  }
  HrirCatalog catalog;
  catalog.sample_rate_hz = target_rate_hz;
  catalog.label = manifest.value("label", dir);
  const int file_rate = manifest.at("sample_rate").get<int>();
  for (const auto& e : manifest.at("entries")) {
    const int az = e.at("azimuth").get<int>();
    MonoSignal l = read_wav_mono(dir + "/" + e.at("left").get<std::string>());
    MonoSignal r = read_wav_mono(dir + "/" + e.at("right").get<std::string>());
    l.sample_rate_hz = file_rate;
    r.sample_rate_hz = file_rate;
    if (l.samples.size() != r.samples.size())
      throw IoError("load_catalog: left/right length mismatch at azimuth " + std::to_string(az));
    catalog.entries[AzimuthGrid::snap(az)] = {resample(l, target_rate_hz),
                                              resample(r, target_rate_hz)};
  }
  return catalog;
}

namespace {

json source_to_json(const SourceSpec& s) {
  json j;
  if (s.generator) {
    json g;
    g["type"] = s.generator->type;
    g["duration_s"] = s.generator->duration_s;
    g["seed"] = s.generator->seed;
    if (s.generator->type == "harmonic") g["f0_hz"] = s.generator->f0_hz;
    j["generator"] = g;
  } else {
    j["signal_path"] = s.signal_path;
  }
  j["azimuth_deg"] = s.azimuth_deg;
  j["gain"] = s.gain;
  if (s.normalize_rms) j["normalize_rms"] = *s.normalize_rms;
  return j;
}

SourceSpec source_from_json(const json& j) {
  SourceSpec s;
  if (j.contains("generator")) {
    GeneratorSpec g;
    g.type = j.at("generator").at("type").get<std::string>();
    g.duration_s = j.at("generator").value("duration_s", 1.0);
    g.seed = j.at("generator").value("seed", std::uint64_t{0});
    g.f0_hz = j.at("generator").value("f0_hz", 160.0);
    s.generator = g;
  } else {
    s.signal_path = j.at("signal_path").get<std::string>();
  }
  s.azimuth_deg = j.at("azimuth_deg").get<double>();
  s.gain = j.value("gain", 1.0);
  if (j.contains("normalize_rms")) s.normalize_rms = j.at("normalize_rms").get<double>();
  return s;
}

}  // namespace

std::string scene_to_json(const SceneSpec& spec) {
  json j;
  j["sources"] = json::array();
  for (const auto& s : spec.sources) j["sources"].push_back(source_to_json(s));
  j["head_orientation_deg"] = spec.head_orientation_deg;
  j["catalog_ref"] = spec.catalog_ref;
  if (spec.diffuse_noise) j["diffuse_noise"] = {{"snr_db", spec.diffuse_noise->snr_db}};
  j["seed"] = spec.seed;
  return j.dump(2);
}

SceneSpec scene_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("scene_from_json: " + std::string(e.what()));
  }
  SceneSpec spec;
  for (const auto& s : j.at("sources")) spec.sources.push_back(source_from_json(s));
  spec.head_orientation_deg = j.value("head_orientation_deg", 0.0);
  spec.catalog_ref = j.value("catalog_ref", std::string());
  if (j.contains("diffuse_noise"))
    spec.diffuse_noise = DiffuseNoiseSpec{j.at("diffuse_noise").at("snr_db").get<double>()};
  spec.seed = j.value("seed", std::uint64_t{0});
  return spec;
}

SceneSpec load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_scene: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return scene_from_json(text);
}

}  // namespace binloc
