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

#ifndef BINLOC_SPATIALIZER_HPP
#define BINLOC_SPATIALIZER_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "binloc/signal.hpp"

namespace binloc {

/// The 72-point azimuth grid: 5 degree steps over the full circle,
/// counterclockwise with 0 = straight ahead (so +90 is the left ear side).
struct AzimuthGrid {
  static constexpr int kStepDeg = 5;
  static constexpr int kCount = 72;

  static bool on_grid(double az_deg);
  /// Nearest grid azimuth in [0, 360).
  static int snap(double az_deg);
  /// Grid bin index of an on-grid azimuth; throws if off-grid.
  static int index_of(double az_deg);
  static int azimuth_of(int index);
  static std::vector<int> values();
};

/// Per-azimuth left/right impulse responses.
struct HrirCatalog {
  int sample_rate_hz = 0;
  std::string label;
  std::map<int, std::pair<MonoSignal, MonoSignal>> entries;  // azimuth deg -> (left, right)

  bool has(double az_deg) const;
  /// Missing azimuths are an error; there is no nearest-neighbor fallback.
  const std::pair<MonoSignal, MonoSignal>& at(double az_deg) const;
  bool covers_grid() const;
};

struct SphericalHeadParams {
  double head_radius_m = 0.0875;
  double sound_speed_m_s = 343.0;
  /// In [0, 1]; > 0 tilts rear-hemifield high frequencies down on the far
  /// ear so ILD can disambiguate front from back, as a pinna would.
  double shadow_asymmetry = 0.3;
};

struct GeneratorSpec {
  std::string type;          // "white_noise" | "pink_noise" | "harmonic"
  double duration_s = 1.0;
  std::uint64_t seed = 0;
  double f0_hz = 160.0;      // harmonic only
};

struct SourceSpec {
  std::string signal_path;                // one of signal_path / generator is set
  std::optional<GeneratorSpec> generator;
  double azimuth_deg = 0.0;               // world frame
  double gain = 1.0;
  /// When set, the source signal is normalized to this RMS before
  /// spatialization (the usual evaluation protocol for matched levels).
  std::optional<double> normalize_rms;
};

struct DiffuseNoiseSpec {
  double snr_db = 0.0;
};

/// Declarative scene: sources in the world frame, receiver orientation,
/// optional diffuse noise, and the seed that makes rendering deterministic.
struct SceneSpec {
  std::vector<SourceSpec> sources;
  double head_orientation_deg = 0.0;
  std::string catalog_ref;
  std::optional<DiffuseNoiseSpec> diffuse_noise;
  std::uint64_t seed = 0;

  /// Evaluation-scene constraints: 1..3 sources, pairwise spacing >= 10 deg.
  void validate_for_eval() const;
};

/// Head-relative azimuth of a world direction, snapped to the grid.
int head_relative_azimuth(double world_deg, double head_orientation_deg);

/// Woodworth interaural delay for this head, in seconds. Positive means the
/// left ear leads (source on the left half).
double woodworth_itd_s(const SphericalHeadParams& params, double azimuth_deg);

/// Convolve a source with the catalog pair at the given head-relative azimuth.
BinauralSignal spatialize(const MonoSignal& source, double azimuth_deg, const HrirCatalog& catalog);

/// Render all sources (in the head frame implied by spec.head_orientation_deg),
/// sum them, and add diffuse noise at the requested SNR if configured.
BinauralSignal mix_scene(const SceneSpec& spec, const HrirCatalog& catalog);

/// Sum of 72 independent white Gaussian sources, one per grid azimuth.
BinauralSignal make_diffuse_noise(double duration_s, const HrirCatalog& catalog,
                                  std::uint64_t seed);

/// New spec with the head turned by delta (|delta| <= 30). World-frame source
/// positions are untouched; only the orientation changes.
SceneSpec rotate_head(const SceneSpec& spec, double delta_deg);

/// Synthesize a full-grid spherical-head HRIR catalog: Woodworth fractional
/// delays, angle-dependent head-shadow low-pass on the far ear, and an
/// optional rear-hemifield high-shelf asymmetry.
HrirCatalog generate_spherical_catalog(const SphericalHeadParams& params, int sample_rate_hz);

/// Scale every entry so its averaged left/right peak magnitude is 1.
HrirCatalog compensate_levels(const HrirCatalog& catalog);

/// Resolve a SourceSpec to a signal at the given rate (loads or generates).
MonoSignal render_source(const SourceSpec& source, int sample_rate_hz);

// Catalog directory layout: manifest.json + one WAV per azimuth per ear.
void save_catalog(const HrirCatalog& catalog, const std::string& dir);
HrirCatalog load_catalog(const std::string& dir, int target_rate_hz = 16000);

// SceneSpec JSON (the CLI wire format).
std::string scene_to_json(const SceneSpec& spec);
SceneSpec scene_from_json(const std::string& text);
SceneSpec load_scene(const std::string& path);

}  // namespace binloc

#endif  // BINLOC_SPATIALIZER_HPP
