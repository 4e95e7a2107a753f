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

#include "binloc/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace binloc {

void validate(const MonoSignal& s) {
  if (s.sample_rate_hz <= 0)
    throw InvalidArgument("MonoSignal: sample_rate_hz must be positive, got " +
                          std::to_string(s.sample_rate_hz));
  for (double v : s.samples)
    if (!std::isfinite(v)) throw InvalidArgument("MonoSignal: non-finite sample");
}

void validate(const BinauralSignal& s) {
  validate(s.left);
  validate(s.right);
  if (s.left.samples.size() != s.right.samples.size())
    throw InvalidArgument("BinauralSignal: channel lengths differ");
  if (s.left.sample_rate_hz != s.right.sample_rate_hz)
    throw InvalidArgument("BinauralSignal: channel sample rates differ");
}

double rms(const MonoSignal& s) {
  if (s.samples.empty()) return 0.0;
  double acc = 0.0;
  for (double v : s.samples) acc += v * v;
  return std::sqrt(acc / static_cast<double>(s.samples.size()));
}

MonoSignal rms_normalize(const MonoSignal& s, double target_rms) {
  if (target_rms <= 0.0) throw InvalidArgument("rms_normalize: target_rms must be positive");
  const double current = rms(s);
  if (current == 0.0) throw InvalidArgument("rms_normalize: all-zero signal has no defined scaling");
  MonoSignal out = s;
  const double g = target_rms / current;
  for (double& v : out.samples) v *= g;
  return out;
}

namespace {

std::size_t rounded_length(double duration_s, int rate) {
  return static_cast<std::size_t>(std::floor(duration_s * rate + 0.5));
}

}  // namespace

MonoSignal central_segment(const MonoSignal& s, double duration_s) {
  const std::size_t want = rounded_length(duration_s, s.sample_rate_hz);
  if (want > s.samples.size())
    throw InvalidArgument("central_segment: signal shorter than requested duration");
  const std::size_t start = (s.samples.size() - want) / 2;
  MonoSignal out;
  out.sample_rate_hz = s.sample_rate_hz;
  out.samples.assign(s.samples.begin() + start, s.samples.begin() + start + want);
  return out;
}

BinauralSignal central_segment(const BinauralSignal& s, double duration_s) {
  return {central_segment(s.left, duration_s), central_segment(s.right, duration_s)};
}

namespace detail {

double kaiser_i0(double x) {
  // Series expansion of the zeroth-order modified Bessel function.
  double term = 1.0, sum = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-21 * sum) break;
  }
  return sum;
}

double windowed_sinc(double u, double cutoff) {
  if (std::fabs(u) > kSincHalfWidth) return 0.0;
  const double r = u / kSincHalfWidth;
  const double window = kaiser_i0(kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) /
                        kaiser_i0(kKaiserBeta);
  const double x = cutoff * u;
  const double sinc = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
  return cutoff * sinc * window;
}

}  // namespace detail

MonoSignal resample(const MonoSignal& s, int target_rate_hz) {
  if (target_rate_hz <= 0) throw InvalidArgument("resample: target rate must be positive");
  if (target_rate_hz == s.sample_rate_hz) return s;

  const double ratio = static_cast<double>(target_rate_hz) / s.sample_rate_hz;
  const double cutoff = std::min(1.0, ratio);
  const std::size_t out_len =
      static_cast<std::size_t>(std::floor(static_cast<double>(s.samples.size()) * ratio + 0.5));

  MonoSignal out;
  out.sample_rate_hz = target_rate_hz;
  out.samples.resize(out_len, 0.0);
  const auto n = static_cast<std::ptrdiff_t>(s.samples.size());
  for (std::size_t m = 0; m < out_len; ++m) {
    const double t = static_cast<double>(m) / ratio;  // position in input samples
    const auto lo = static_cast<std::ptrdiff_t>(std::ceil(t - detail::kSincHalfWidth));
    const auto hi = static_cast<std::ptrdiff_t>(std::floor(t + detail::kSincHalfWidth));
    double acc = 0.0;
    for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(0, lo); k <= std::min(n - 1, hi); ++k)
      acc += s.samples[static_cast<std::size_t>(k)] * detail::windowed_sinc(t - k, cutoff);
    out.samples[m] = acc;
  }
  return out;
}

BinauralSignal resample(const BinauralSignal& s, int target_rate_hz) {
  return {resample(s.left, target_rate_hz), resample(s.right, target_rate_hz)};
}

// --- WAV ---

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  T v{};
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

struct WavData {
  int sample_rate = 0;
  std::vector<std::vector<double>> channels;
};

WavData read_wav_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_wav: cannot open " + path);

  char riff[4], wave[4];
  in.read(riff, 4);
  read_le<std::uint32_t>(in);
  in.read(wave, 4);
  if (!in || std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(wave, "WAVE", 4) != 0)
    throw IoError("read_wav: not a RIFF/WAVE file: " + path);

  std::uint16_t format = 0, num_channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  bool have_fmt = false;
  std::vector<char> data;

  while (in) {
    char id[4];
    in.read(id, 4);
    if (!in) break;
    const auto chunk_size = read_le<std::uint32_t>(in);
    if (!in) break;
    if (std::memcmp(id, "fmt ", 4) == 0) {
      format = read_le<std::uint16_t>(in);
      num_channels = read_le<std::uint16_t>(in);
      sample_rate = read_le<std::uint32_t>(in);
      read_le<std::uint32_t>(in);  // byte rate
      read_le<std::uint16_t>(in);  // block align
      bits = read_le<std::uint16_t>(in);
      if (format == kFormatExtensible && chunk_size >= 40) {
        read_le<std::uint16_t>(in);  // extension size
        read_le<std::uint16_t>(in);  // valid bits
        read_le<std::uint32_t>(in);  // channel mask
        format = read_le<std::uint16_t>(in);
        in.seekg(chunk_size - 40 + 14, std::ios::cur);
      } else if (chunk_size > 16) {
        in.seekg(chunk_size - 16, std::ios::cur);
      }
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data.resize(chunk_size);
      in.read(data.data(), chunk_size);
      if (static_cast<std::uint32_t>(in.gcount()) != chunk_size)
        throw IoError("read_wav: truncated data chunk in " + path);
      if (chunk_size % 2) in.seekg(1, std::ios::cur);
    } else {
      in.seekg(chunk_size + (chunk_size % 2), std::ios::cur);
    }
  }

  if (!have_fmt) throw IoError("read_wav: missing fmt chunk in " + path);
  if (num_channels != 1 && num_channels != 2)
    throw IoError("read_wav: unsupported channel count " + std::to_string(num_channels));
  if (sample_rate == 0) throw IoError("read_wav: zero sample rate in " + path);

  const bool is_pcm16 = format == kFormatPcm && bits == 16;
  const bool is_f32 = format == kFormatFloat && bits == 32;
  if (!is_pcm16 && !is_f32)
    throw IoError("read_wav: unsupported encoding (need PCM16 or float32) in " + path);

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * num_channels;
  const std::size_t num_frames = data.size() / frame_bytes;
  if (num_frames == 0) throw IoError("read_wav: zero-length stream in " + path);

  WavData wav;
  wav.sample_rate = static_cast<int>(sample_rate);
  wav.channels.assign(num_channels, std::vector<double>(num_frames));
  const char* p = data.data();
  for (std::size_t i = 0; i < num_frames; ++i) {
    for (std::uint16_t c = 0; c < num_channels; ++c) {
      if (is_pcm16) {
        std::int16_t v;
        std::memcpy(&v, p, 2);
        wav.channels[c][i] = static_cast<double>(v) / 32768.0;
        p += 2;
      } else {
        float v;
        std::memcpy(&v, p, 4);
        wav.channels[c][i] = static_cast<double>(v);
        p += 4;
      }
    }
  }
  return wav;
}

void write_wav_file(const std::string& path, const std::vector<const std::vector<double>*>& channels,
                    int sample_rate, WavFormat format) {
  const auto num_channels = static_cast<std::uint16_t>(channels.size());
  const std::size_t num_frames = channels[0]->size();
  const std::uint16_t bits = format == WavFormat::pcm16 ? 16 : 32;
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(num_frames * num_channels * (bits / 8));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("write_wav: cannot open " + path);

  out.write("RIFF", 4);
  write_le<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_le<std::uint32_t>(out, 16);
  write_le<std::uint16_t>(out, format == WavFormat::pcm16 ? kFormatPcm : kFormatFloat);
  write_le<std::uint16_t>(out, num_channels);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate) * num_channels * (bits / 8));
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(num_channels * (bits / 8)));
  write_le<std::uint16_t>(out, bits);
  out.write("data", 4);
  write_le<std::uint32_t>(out, data_bytes);

  for (std::size_t i = 0; i < num_frames; ++i) {
    for (std::uint16_t c = 0; c < num_channels; ++c) {
      const double v = (*channels[c])[i];
      if (format == WavFormat::pcm16) {
        const double scaled = std::clamp(v, -1.0, 32767.0 / 32768.0) * 32768.0;
        write_le<std::int16_t>(out, static_cast<std::int16_t>(std::lrint(scaled)));
      } else {
        write_le<float>(out, static_cast<float>(v));
      }
    }
  }
  if (!out) throw IoError("write_wav: write failed for " + path);
}

}  // namespace

std::variant<MonoSignal, BinauralSignal> read_wav(const std::string& path) {
  WavData wav = read_wav_file(path);
  if (wav.channels.size() == 1) {
    MonoSignal s{std::move(wav.channels[0]), wav.sample_rate};
    return s;
  }
  BinauralSignal s{{std::move(wav.channels[0]), wav.sample_rate},
                   {std::move(wav.channels[1]), wav.sample_rate}};
  return s;
}

MonoSignal read_wav_mono(const std::string& path) {
  auto v = read_wav(path);
  if (auto* mono = std::get_if<MonoSignal>(&v)) return std::move(*mono);
  throw IoError("read_wav_mono: expected 1 channel in " + path);
}

BinauralSignal read_wav_binaural(const std::string& path) {
  auto v = read_wav(path);
  if (auto* bin = std::get_if<BinauralSignal>(&v)) return std::move(*bin);
  auto& mono = std::get<MonoSignal>(v);
  return {mono, mono};
}

void write_wav(const std::string& path, const MonoSignal& s, WavFormat format) {
  write_wav_file(path, {&s.samples}, s.sample_rate_hz, format);
}

void write_wav(const std::string& path, const BinauralSignal& s, WavFormat format) {
  write_wav_file(path, {&s.left.samples, &s.right.samples}, s.sample_rate_hz(), format);
}

}  // namespace binloc
