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

#ifndef BINLOC_MCT_HPP
#define BINLOC_MCT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "binloc/frontend.hpp"
#include "binloc/spatializer.hpp"

namespace binloc {

/// Multi-conditional training setup: spatialized targets corrupted with
/// diffuse noise at several SNRs, gated by per-cell a priori SNR.
struct MctConfig {
  std::vector<double> snrs_db{20.0, 10.0, 0.0};
  bool clean_only = false;
  double gate_snr_db = -5.0;
  int sentences_per_azimuth = 10;
  double target_rms = 0.1;
  std::uint64_t seed = 0;
  FilterbankConfig filterbank;
  FrameConfig framing;
};

/// Per-cell a priori SNR in dB; +inf when the noise is silent, -inf when the
/// target is. Returns nullopt (cell dropped) when both are zero.
std::optional<double> a_priori_snr_db(double target_energy, double noise_energy);

/// Labeled feature cells for one band.
struct BandTrainingData {
  std::vector<FeatureFrame> cells;
  std::vector<std::int32_t> labels_deg;
};

struct TrainingSet {
  int num_bands = 0;
  std::vector<BandTrainingData> bands;
};

/// One (azimuth, sentence) job: target and diffuse-noise renderings plus the
/// per-SNR noise gains. Exposed so tests can recompute the gate by brute
/// force from the same renderings.
struct SentenceRender {
  BinauralSignal target;
  BinauralSignal noise;                // unscaled diffuse field
  std::vector<double> noise_gains;     // one per configured SNR
};

SentenceRender render_sentence(const MonoSignal& sentence, int azimuth_deg,
                               const HrirCatalog& catalog, const MctConfig& cfg,
                               std::uint64_t noise_seed);

/// Rectified band-frame energies of both ears averaged, frame-aligned with
/// the feature grid: the energy domain used by the SNR gate.
std::vector<std::vector<double>> band_frame_energies(const BinauralSignal& s,
                                                     const FilterbankConfig& fb,
                                                     const FrameConfig& fr);

/// Build per-band labeled features over all 72 azimuths. Deterministic for a
/// fixed config seed; asserts that every azimuth keeps at least one frame
/// per band under the most favorable SNR.
TrainingSet build_training_set(const std::vector<MonoSignal>& material,
                               const HrirCatalog& catalog, const MctConfig& cfg);

/// Directory layout: manifest.json + band_XX.bin / labels_XX.bin dumps.
void write_training_set(const std::string& dir, const TrainingSet& set, const MctConfig& cfg);
TrainingSet read_training_set(const std::string& dir);

}  // namespace binloc

#endif  // BINLOC_MCT_HPP
