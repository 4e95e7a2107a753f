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

#include "binloc/material.hpp"

#include <cmath>

#include "binloc/rng.hpp"

namespace binloc {

namespace {

void apply_ramps(MonoSignal& s, double ramp_s = 0.005) {
  const auto ramp = static_cast<std::size_t>(ramp_s * s.sample_rate_hz);
  const std::size_t n = s.samples.size();
  if (ramp == 0 || 2 * ramp >= n) return;
  for (std::size_t i = 0; i < ramp; ++i) {
    const double g = 0.5 - 0.5 * std::cos(kPi * static_cast<double>(i) / ramp);
    s.samples[i] *= g;
    s.samples[n - 1 - i] *= g;
  }
}

std::size_t burst_length(double duration_s, int rate) {
  if (duration_s <= 0.0 || rate <= 0) throw InvalidArgument("material: bad duration or rate");
  return static_cast<std::size_t>(std::floor(duration_s * rate + 0.5));
}

}  // namespace

MonoSignal white_noise_burst(double duration_s, int sample_rate_hz, std::uint64_t seed) {
  MonoSignal s;
  s.sample_rate_hz = sample_rate_hz;
  s.samples.resize(burst_length(duration_s, sample_rate_hz));
  Rng rng(seed);
  for (double& v : s.samples) v = 0.2 * rng.normal();
  apply_ramps(s);
  return s;
}

MonoSignal pink_noise_burst(double duration_s, int sample_rate_hz, std::uint64_t seed) {
  MonoSignal s;
  s.sample_rate_hz = sample_rate_hz;
  s.samples.resize(burst_length(duration_s, sample_rate_hz));
  Rng rng(seed);
  // Kellet's three-pole approximation of a -3 dB/octave spectrum.
  double b0 = 0, b1 = 0, b2 = 0;
  for (double& v : s.samples) {
    const double w = rng.normal();
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    v = 0.05 * (b0 + b1 + b2 + w * 0.1848);
  }
  apply_ramps(s);
  return s;
}

MonoSignal harmonic_tone(double duration_s, int sample_rate_hz, double f0_hz, std::uint64_t seed) {
  if (f0_hz <= 0.0 || f0_hz >= sample_rate_hz / 2.0)
    throw InvalidArgument("harmonic_tone: f0 out of range");
  MonoSignal s;
  s.sample_rate_hz = sample_rate_hz;
  s.samples.assign(burst_length(duration_s, sample_rate_hz), 0.0);
  Rng rng(seed);
  const int max_h = static_cast<int>(std::floor((sample_rate_hz / 2.0 - 1.0) / f0_hz));
  const int num_h = std::min(max_h, 16);
  for (int h = 1; h <= num_h; ++h) {
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    const double amp = 0.15 / h;
    const double w = 2.0 * kPi * f0_hz * h / sample_rate_hz;
    for (std::size_t i = 0; i < s.samples.size(); ++i)
      s.samples[i] += amp * std::sin(w * static_cast<double>(i) + phase);
  }
  apply_ramps(s);
  return s;
}

MonoSignal modulated_noise_burst(double duration_s, int sample_rate_hz, std::uint64_t seed) {
  MonoSignal s = pink_noise_burst(duration_s, sample_rate_hz, derive_seed(seed, 0xca44u));
  Rng rng(derive_seed(seed, 0xe2f0u));
  // Three random slow sinusoids, squashed into a [0.08, 1] gain trajectory.
  double freq[3], phase[3];
  for (int k = 0; k < 3; ++k) {
    freq[k] = rng.uniform(2.0, 6.0);
    phase[k] = rng.uniform(0.0, 2.0 * kPi);
  }
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    const double t = static_cast<double>(i) / sample_rate_hz;
    double drive = 0.0;
    for (int k = 0; k < 3; ++k) drive += std::sin(2.0 * kPi * freq[k] * t + phase[k]);
    const double env = 0.08 + 0.92 / (1.0 + std::exp(-1.5 * drive));
    s.samples[i] *= env;
  }
  return s;
}

std::vector<MonoSignal> builtin_material(int count, double duration_s, int sample_rate_hz,
                                         std::uint64_t seed, bool include_harmonics) {
  std::vector<MonoSignal> out;
  out.reserve(static_cast<std::size_t>(count));
  Rng rng(derive_seed(seed, 0xbeef));
  for (int i = 0; i < count; ++i) {
    const std::uint64_t s = derive_seed(seed, 1, static_cast<std::uint64_t>(i));
    MonoSignal sig;
    if (include_harmonics && i % 3 == 2)
      sig = harmonic_tone(duration_s, sample_rate_hz, rng.uniform(110.0, 260.0), s);
    else if (i % 2 == 0)
      sig = white_noise_burst(duration_s, sample_rate_hz, s);
    else
      sig = pink_noise_burst(duration_s, sample_rate_hz, s);
    out.push_back(rms_normalize(sig, 0.1));
  }
  return out;
}

}  // namespace binloc
