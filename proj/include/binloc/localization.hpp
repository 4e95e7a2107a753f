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

#ifndef BINLOC_LOCALIZATION_HPP
#define BINLOC_LOCALIZATION_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "binloc/model_bundle.hpp"
#include "binloc/spatializer.hpp"

namespace binloc {

/// Probability distribution over the 72-point grid in the head-relative
/// frame, aggregated over a block of frames.
struct AzimuthPosterior {
  std::array<double, AzimuthGrid::kCount> probs{};
  int start_frame = 0;
  int num_frames = 0;
};

/// Ambiguity/peak-matching parameters, all heuristic and config-exposed.
/// Mirror evidence is judged against an absolute mass floor rather than
/// peak prominence: band-product fusion can shrink a front-back twin to a
/// fraction of the main peak while it still marks a physically possible
/// source position.
struct AmbiguityConfig {
  double prominence_fraction = 0.5;   // extra-peak counting: mass >= fraction * top peak
  double mirror_mass_floor = 1e-4;    // mirror bins at/above this mass trigger a head turn
  double mirror_window_deg = 20.0;    // front-back mirror search window
  double match_tolerance_deg = 5.0;   // +/-1 grid bin when matching across rotation
  double min_peak_separation_deg = 10.0;
};

/// Multiplicative fusion across bands (log domain, per-band probability
/// floor 1e-10). Only non-silent bands should be passed. The per-azimuth
/// log terms are summed in sorted order, so the result is bit-exactly
/// invariant to band permutation.
std::array<double, AzimuthGrid::kCount> fuse_frame(
    const std::vector<std::vector<double>>& band_posteriors,
    const std::array<double, AzimuthGrid::kCount>& prior);
std::array<double, AzimuthGrid::kCount> fuse_frame(
    const std::vector<std::vector<double>>& band_posteriors);

/// Arithmetic mean over frame posteriors, renormalized.
AzimuthPosterior average_block(const std::vector<std::array<double, AzimuthGrid::kCount>>& frames);

/// Circular local maxima (ties allowed), as grid bin indices.
std::vector<int> find_peaks(const AzimuthPosterior& p);

/// The n most massive local maxima at least 10 degrees apart; falls back to
/// global top-n distinct bins when too few peaks exist. Ties break toward
/// the smaller azimuth. Returned as grid bin indices.
std::vector<int> pick_sources(const AzimuthPosterior& p, int n,
                              const AmbiguityConfig& cfg = {});

/// True when more prominent peaks exist than sources, or a selected peak
/// has a prominent front-back mirror peak.
bool detect_ambiguity(const AzimuthPosterior& p, int n, const AmbiguityConfig& cfg = {});

struct LocalizationResult {
  std::vector<double> azimuths_world_deg;
  std::vector<double> azimuths_head_deg;  // final head frame
  std::vector<double> masses;
  bool used_head_movement = false;
  double rotation_deg = 0.0;
  bool ambiguous = false;
  bool low_confidence = false;
  std::vector<double> phantoms_world_deg;  // peaks eliminated as phantoms

  std::string to_json() const;
};

/// Phantom elimination across a head rotation: candidate peaks of p1 are
/// shifted by the rotation and matched against peaks of p2 within +/-1 bin;
/// unmatched candidates on either side are zeroed, the aligned cleaned
/// distributions are averaged, and sources are picked from the average.
/// p1 was observed at head_orientation_before_deg, p2 after rotating by
/// rotation_deg (a grid multiple within +/-30).
LocalizationResult resolve_with_rotation(const AzimuthPosterior& p1, const AzimuthPosterior& p2,
                                         double rotation_deg, int n,
                                         double head_orientation_before_deg = 0.0,
                                         const AmbiguityConfig& cfg = {});

/// Rendering handle the localizer calls when it wants a head movement: a
/// simulated scene can re-render; a raw recording cannot.
class SceneHandle {
 public:
  virtual ~SceneHandle() = default;
  virtual BinauralSignal render(double head_orientation_deg) = 0;
  virtual double base_orientation_deg() const = 0;
  virtual bool can_rotate() const { return true; }
};

/// SceneHandle over a SceneSpec + catalog; renders lazily and caches.
class SimulatedScene : public SceneHandle {
 public:
  SimulatedScene(SceneSpec spec, const HrirCatalog& catalog);
  BinauralSignal render(double head_orientation_deg) override;
  double base_orientation_deg() const override { return spec_.head_orientation_deg; }

 private:
  SceneSpec spec_;
  const HrirCatalog* catalog_;
};

/// Fixed recording: usable for the no-movement policy only.
class FixedSignalScene : public SceneHandle {
 public:
  FixedSignalScene(BinauralSignal signal, double head_orientation_deg = 0.0);
  BinauralSignal render(double head_orientation_deg) override;
  double base_orientation_deg() const override { return orientation_; }
  bool can_rotate() const override { return false; }

 private:
  BinauralSignal signal_;
  double orientation_;
};

enum class Policy { no_movement, random_rotation };

struct LocalizeOptions {
  int n_sources = 1;
  Policy policy = Policy::no_movement;
  std::uint64_t seed = 0;
  double segment_s = 1.0;  // analysis segment (central part of the render)
  /// Restrict reporting to these grid bins (e.g. the frontal hemifield).
  std::optional<std::vector<int>> report_mask_bins;
  AmbiguityConfig ambiguity;
  FilterbankConfig filterbank;
  FrameConfig framing;
  bool fell_back_to_no_movement = false;  // set on return when rotation was unavailable
};

/// Posterior over a frame range of an extracted feature grid.
AzimuthPosterior block_posterior(const FeatureGrid& grid, const ModelBundle& models,
                                 int frame_begin, int frame_end);

/// Grid bins of the frontal hemifield [-90, +90].
std::vector<int> frontal_mask_bins();

/// Full localization of a scene: either one block over the whole segment, or
/// the two-block protocol where an ambiguous first block triggers a random
/// head rotation before the second block is rendered.
LocalizationResult localize(SceneHandle& scene, const ModelBundle& models, LocalizeOptions& opts);

/// Raw-signal convenience wrapper (no-movement policy only).
LocalizationResult localize_signal(const BinauralSignal& signal, const ModelBundle& models,
                                   LocalizeOptions& opts);

}  // namespace binloc

#endif  // BINLOC_LOCALIZATION_HPP
