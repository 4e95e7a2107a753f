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

#ifndef BINLOC_MATERIAL_HPP
#define BINLOC_MATERIAL_HPP

#include <cstdint>
#include <vector>

#include "binloc/signal.hpp"

namespace binloc {

// Bundled source material for corpus-free training and testing: broadband
// noise bursts and vowel-like harmonic tones. All generators are seeded and
// apply short cosine on/off ramps.

MonoSignal white_noise_burst(double duration_s, int sample_rate_hz, std::uint64_t seed);
MonoSignal pink_noise_burst(double duration_s, int sample_rate_hz, std::uint64_t seed);
/// Harmonic complex with 1/h amplitude rolloff and randomized phases.
MonoSignal harmonic_tone(double duration_s, int sample_rate_hz, double f0_hz, std::uint64_t seed);
/// Pink noise under a syllable-rate random envelope: broadband like speech
/// but temporally sparse, so competing talkers take turns dominating.
MonoSignal modulated_noise_burst(double duration_s, int sample_rate_hz, std::uint64_t seed);

/// RMS-normalized material pool. The default alternates white and pink noise
/// bursts, which keep every gammatone band energized (the training-set
/// coverage assertion needs that); `include_harmonics` mixes in vowel-like
/// tones every third entry for harder, sparser-spectrum material.
std::vector<MonoSignal> builtin_material(int count, double duration_s, int sample_rate_hz,
                                         std::uint64_t seed, bool include_harmonics = false);

}  // namespace binloc

#endif  // BINLOC_MATERIAL_HPP
