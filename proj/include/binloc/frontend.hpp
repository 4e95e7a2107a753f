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

#ifndef BINLOC_FRONTEND_HPP
#define BINLOC_FRONTEND_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "binloc/signal.hpp"

namespace binloc {

constexpr int kCcfDims = 33;      // lags -16..+16 at 16 kHz
constexpr int kFeatureDims = 34;  // CCF + ILD
constexpr double kEnergyFloor = 1e-12;

struct FilterbankConfig {
  int num_bands = 32;
  double f_low_hz = 80.0;
  double f_high_hz = 8000.0;
};

struct FrameConfig {
  double frame_len_s = 0.020;
  double frame_shift_s = 0.010;
  double max_lag_s = 0.0011;     // CCF evaluation / ITD peak search range
  double feature_lag_s = 0.001;  // lags handed to the classifier

  int frame_len(int rate) const { return static_cast<int>(frame_len_s * rate + 0.5); }
  int frame_shift(int rate) const { return static_cast<int>(frame_shift_s * rate + 0.5); }
  int max_lag(int rate) const { return static_cast<int>(max_lag_s * rate); }
  int feature_lag(int rate) const { return static_cast<int>(feature_lag_s * rate); }
  int num_frames(std::size_t signal_len, int rate) const;
};

// Glasberg-Moore ERB scale.
double erb_hz(double f_hz);
double erb_rate(double f_hz);
double erb_rate_inverse(double rate);
/// Center frequencies uniformly spaced on the ERB-rate scale, endpoints included.
std::vector<double> erb_spaced_centers(const FilterbankConfig& cfg);

/// 4th-order gammatone analysis realized as a cascade of four complex
/// one-pole sections per band; outputs are band signals of input length.
std::vector<MonoSignal> gammatone_analyze(const MonoSignal& s, const FilterbankConfig& cfg);

/// Half-wave rectification (the inner-hair-cell approximation; no low-pass).
MonoSignal rectify(const MonoSignal& band);

struct CcfFrame {
  std::array<double, kCcfDims> values{};  // lags -feature_lag..+feature_lag
  int peak_lag_samples = 0;               // argmax over the +/-max_lag range
  double itd_s = 0.0;
  double energy_left = 0.0;   // zero-lag autocorrelation over the frame
  double energy_right = 0.0;
  bool silent = false;
};

/// Normalized cross-correlation of one frame of a band pair. Positive lag
/// means the right ear lags the left. Products only use sample pairs that
/// both fall inside the frame, which keeps every value in [-1, 1] and makes
/// an L/R swap reverse the lag axis exactly.
CcfFrame ccf_frame(const MonoSignal& left_band, const MonoSignal& right_band,
                   std::size_t frame_start, const FrameConfig& cfg);

struct IldFrame {
  double ild_db = 0.0;  // positive = left louder
  bool silent = false;
};

IldFrame ild_frame(const MonoSignal& left_band, const MonoSignal& right_band,
                   std::size_t frame_start, const FrameConfig& cfg);

/// One cell of the T x 32 feature grid: 33 CCF values then ILD, with ITD and
/// frame energy carried alongside.
struct FeatureFrame {
  std::int32_t t = 0;
  std::int32_t f = 0;
  std::array<float, kFeatureDims> v{};
  float itd_s = 0.0f;
  float energy = 0.0f;  // mean square over the frame, averaged across ears
  bool silent = false;
};

struct FeatureGrid {
  int num_frames = 0;
  int num_bands = 0;
  int sample_rate_hz = 0;
  std::vector<FeatureFrame> cells;  // row-major: t * num_bands + f

  FeatureFrame& at(int t, int f) { return cells[static_cast<std::size_t>(t) * num_bands + f]; }
  const FeatureFrame& at(int t, int f) const {
    return cells[static_cast<std::size_t>(t) * num_bands + f];
  }
};

/// Full front-end: gammatone, rectification, framed CCF + ILD per band.
FeatureGrid extract_features(const BinauralSignal& s, const FilterbankConfig& fb,
                             const FrameConfig& fr);

// Feature dump: little-endian float32 records with a JSON header. Each
// record is (t:i32, f:i32, 34 x f32, itd:f32, energy:f32); labels are a
// parallel i32 stream of azimuth degrees.
struct FeatureDump {
  std::vector<FeatureFrame> records;
  std::vector<std::int32_t> labels_deg;
};

void write_feature_dump(const std::string& bin_path, const std::string& labels_path,
                        const std::vector<FeatureFrame>& records,
                        const std::vector<std::int32_t>& labels_deg);
FeatureDump read_feature_dump(const std::string& bin_path, const std::string& labels_path);

}  // namespace binloc

#endif  // BINLOC_FRONTEND_HPP
