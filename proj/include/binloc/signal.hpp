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

#ifndef BINLOC_SIGNAL_HPP
#define BINLOC_SIGNAL_HPP

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "binloc/common.hpp"

namespace binloc {

/// Single-channel sampled audio, amplitudes nominally in [-1, 1].
struct MonoSignal {
  std::vector<double> samples;
  int sample_rate_hz = 0;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
};

/// Two-channel ear signals; left/right always share length and rate.
struct BinauralSignal {
  MonoSignal left;
  MonoSignal right;

  std::size_t size() const { return left.samples.size(); }
  int sample_rate_hz() const { return left.sample_rate_hz; }
  double duration_s() const { return left.duration_s(); }
};

/// Throws InvalidArgument on NaN/Inf samples or a non-positive rate.
void validate(const MonoSignal& s);
/// Additionally checks the channel-match invariants.
void validate(const BinauralSignal& s);

double rms(const MonoSignal& s);

/// Scale so the output RMS equals target_rms. All-zero input is an error.
MonoSignal rms_normalize(const MonoSignal& s, double target_rms);

/// Segment of the given duration centered on the signal midpoint.
/// Length is round-half-up(duration * rate); requesting more than the
/// signal holds is an error.
MonoSignal central_segment(const MonoSignal& s, double duration_s);
BinauralSignal central_segment(const BinauralSignal& s, double duration_s);

/// Band-limited resampling with a Kaiser-windowed sinc (beta = 8, 64 taps).
/// Equal rates pass the signal through bit-identically.
MonoSignal resample(const MonoSignal& s, int target_rate_hz);
BinauralSignal resample(const BinauralSignal& s, int target_rate_hz);

// --- WAV (RIFF) container, PCM16 and float32 ---

enum class WavFormat { pcm16, float32 };

std::variant<MonoSignal, BinauralSignal> read_wav(const std::string& path);
MonoSignal read_wav_mono(const std::string& path);
/// Accepts 1- or 2-channel files; a mono file is duplicated to both ears.
BinauralSignal read_wav_binaural(const std::string& path);

void write_wav(const std::string& path, const MonoSignal& s, WavFormat format = WavFormat::float32);
void write_wav(const std::string& path, const BinauralSignal& s,
               WavFormat format = WavFormat::float32);

namespace detail {

/// Shared interpolation kernel: Kaiser window (beta = 8) over +/-32 taps
/// around a sinc of the given cutoff (1.0 = full band, relative to Nyquist).
constexpr int kSincHalfWidth = 32;
constexpr double kKaiserBeta = 8.0;

double kaiser_i0(double x);
double windowed_sinc(double u, double cutoff);

}  // namespace detail

}  // namespace binloc

#endif  // BINLOC_SIGNAL_HPP
