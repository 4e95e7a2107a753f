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

#include "binloc/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>

namespace binloc {

int FrameConfig::num_frames(std::size_t signal_len, int rate) const {
  const int len = frame_len(rate);
  const int shift = frame_shift(rate);
  if (signal_len < static_cast<std::size_t>(len)) return 0;
  return static_cast<int>((signal_len - len) / shift) + 1;
}

// --- ERB scale (Glasberg & Moore) ---

double erb_hz(double f_hz) { return 24.7 * (4.37 * f_hz / 1000.0 + 1.0); }

double erb_rate(double f_hz) { return 21.4 * std::log10(4.37 * f_hz / 1000.0 + 1.0); }

double erb_rate_inverse(double rate) {
  return (std::pow(10.0, rate / 21.4) - 1.0) * 1000.0 / 4.37;
}

std::vector<double> erb_spaced_centers(const FilterbankConfig& cfg) {
  if (cfg.num_bands < 2 || cfg.f_low_hz <= 0.0 || cfg.f_low_hz >= cfg.f_high_hz)
    throw InvalidArgument("filterbank config: need f_low < f_high and >= 2 bands");
  const double lo = erb_rate(cfg.f_low_hz);
  const double hi = erb_rate(cfg.f_high_hz);
  std::vector<double> centers(cfg.num_bands);
  for (int i = 0; i < cfg.num_bands; ++i)
    centers[i] = erb_rate_inverse(lo + (hi - lo) * i / (cfg.num_bands - 1));
  return centers;
}

// --- Gammatone filterbank ---

std::vector<MonoSignal> gammatone_analyze(const MonoSignal& s, const FilterbankConfig& cfg) {
  if (cfg.f_high_hz > s.sample_rate_hz / 2.0 + 1e-9)
    throw InvalidArgument("gammatone: f_high above Nyquist");
  const auto centers = erb_spaced_centers(cfg);

  std::vector<MonoSignal> bands(centers.size());
  const std::size_t n = s.samples.size();
  for (std::size_t b = 0; b < centers.size(); ++b) {
    bands[b].sample_rate_hz = s.sample_rate_hz;
    bands[b].samples.resize(n);

    // Cascade of four identical complex one-pole sections. Each section has
    // unit gain at the center frequency; the pole radius sets the bandwidth
    // (1.019 * ERB, the standard 4th-order gammatone correction).
    const double omega = 2.0 * kPi * centers[b] / s.sample_rate_hz;
    const double decay = std::exp(-2.0 * kPi * 1.019 * erb_hz(centers[b]) / s.sample_rate_hz);
    const std::complex<double> pole = decay * std::complex<double>(std::cos(omega), std::sin(omega));
    const double stage_gain = 1.0 - decay;

    std::complex<double> z1{0, 0}, z2{0, 0}, z3{0, 0}, z4{0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      z1 = stage_gain * s.samples[i] + pole * z1;
      z2 = stage_gain * z1 + pole * z2;
      z3 = stage_gain * z2 + pole * z3;
      z4 = stage_gain * z3 + pole * z4;
      // Real part of the analytic band signal; factor 2 restores the
      // amplitude of a real tone at the center frequency.
      bands[b].samples[i] = 2.0 * z4.real();
    }
  }
  return bands;
}

MonoSignal rectify(const MonoSignal& band) {
  MonoSignal out = band;
  for (double& v : out.samples) v = std::max(v, 0.0);
  return out;
}

// --- Framed CCF and ILD ---

namespace {

double frame_energy(const MonoSignal& s, std::size_t start, int len) {
  double acc = 0.0;
  for (int i = 0; i < len; ++i) acc += s.samples[start + i] * s.samples[start + i];
  return acc;
}

}  // namespace

CcfFrame ccf_frame(const MonoSignal& left_band, const MonoSignal& right_band,
                   std::size_t frame_start, const FrameConfig& cfg) {
  const int rate = left_band.sample_rate_hz;
  const int len = cfg.frame_len(rate);
  const int max_lag = cfg.max_lag(rate);
  const int feat_lag = cfg.feature_lag(rate);
  if (feat_lag > max_lag) throw InvalidArgument("ccf_frame: feature_lag exceeds max_lag");
  if (frame_start + len > left_band.samples.size() ||
      frame_start + len > right_band.samples.size())
    throw InvalidArgument("ccf_frame: frame not fully inside both signals");

  CcfFrame out;
  out.energy_left = frame_energy(left_band, frame_start, len);
  out.energy_right = frame_energy(right_band, frame_start, len);
  if (out.energy_left < kEnergyFloor || out.energy_right < kEnergyFloor) {
    out.silent = true;
    return out;
  }

  const double norm = 1.0 / std::sqrt(out.energy_left * out.energy_right);
  const double* l = left_band.samples.data() + frame_start;
  const double* r = right_band.samples.data() + frame_start;

  // corr[j] holds lag j - max_lag; only index pairs inside the frame enter,
  // so Cauchy-Schwarz against the frame energies bounds every value by 1.
  std::vector<double> corr(2 * max_lag + 1, 0.0);
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    const int lo = std::max(0, -lag);
    const int hi = len - std::max(0, lag);
    double acc = 0.0;
    for (int i = lo; i < hi; ++i) acc += l[i] * r[i + lag];
    corr[lag + max_lag] = std::clamp(acc * norm, -1.0, 1.0);
  }

  // Peak search in order of increasing |lag| so exact ties resolve toward
  // the smaller magnitude deterministically.
  int best_lag = 0;
  double best = corr[max_lag];
  for (int m = 1; m <= max_lag; ++m) {
    for (int lag : {-m, m}) {
      const double v = corr[lag + max_lag];
      if (v > best) {
        best = v;
        best_lag = lag;
      }
    }
  }
  out.peak_lag_samples = best_lag;
  out.itd_s = static_cast<double>(best_lag) / rate;
  for (int j = 0; j < kCcfDims; ++j) out.values[j] = corr[j - feat_lag + max_lag];
  return out;
}

IldFrame ild_frame(const MonoSignal& left_band, const MonoSignal& right_band,
                   std::size_t frame_start, const FrameConfig& cfg) {
  const int len = cfg.frame_len(left_band.sample_rate_hz);
  if (frame_start + len > left_band.samples.size() ||
      frame_start + len > right_band.samples.size())
    throw InvalidArgument("ild_frame: frame not fully inside both signals");
  const double el = frame_energy(left_band, frame_start, len);
  const double er = frame_energy(right_band, frame_start, len);
  IldFrame out;
  if (el < kEnergyFloor || er < kEnergyFloor) {
    out.silent = true;
    return out;
  }
  out.ild_db = 10.0 * std::log10(el / er);
  return out;
}

FeatureGrid extract_features(const BinauralSignal& s, const FilterbankConfig& fb,
                             const FrameConfig& fr) {
  validate(s);
  const int rate = s.sample_rate_hz();
  const int len = fr.frame_len(rate);
  const int shift = fr.frame_shift(rate);
  const int num_frames = fr.num_frames(s.size(), rate);
  if (num_frames < 1) throw InvalidArgument("extract_features: signal shorter than one frame");

  auto left_bands = gammatone_analyze(s.left, fb);
  auto right_bands = gammatone_analyze(s.right, fb);
  for (auto& b : left_bands) b = rectify(b);
  for (auto& b : right_bands) b = rectify(b);

  FeatureGrid grid;
  grid.num_frames = num_frames;
  grid.num_bands = fb.num_bands;
  grid.sample_rate_hz = rate;
  grid.cells.resize(static_cast<std::size_t>(num_frames) * fb.num_bands);

  for (int f = 0; f < fb.num_bands; ++f) {
    const auto& lb = left_bands[f];
    const auto& rb = right_bands[f];
    for (int t = 0; t < num_frames; ++t) {
      const std::size_t start = static_cast<std::size_t>(t) * shift;
      FeatureFrame& cell = grid.at(t, f);
      cell.t = t;
      cell.f = f;
      const CcfFrame ccf = ccf_frame(lb, rb, start, fr);
      if (ccf.silent) {
        cell.silent = true;
        cell.energy = static_cast<float>((ccf.energy_left + ccf.energy_right) / (2.0 * len));
        continue;
      }
      const IldFrame ild = ild_frame(lb, rb, start, fr);
      for (int j = 0; j < kCcfDims; ++j) cell.v[j] = static_cast<float>(ccf.values[j]);
      cell.v[kCcfDims] = static_cast<float>(ild.ild_db);
      cell.itd_s = static_cast<float>(ccf.itd_s);
      cell.energy = static_cast<float>((ccf.energy_left + ccf.energy_right) / (2.0 * len));
    }
  }
  return grid;
}

// --- Feature dump IO ---

namespace {
constexpr std::size_t kRecordBytes = 2 * sizeof(std::int32_t) + (kFeatureDims + 2) * sizeof(float);
}

void write_feature_dump(const std::string& bin_path, const std::string& labels_path,
                        const std::vector<FeatureFrame>& records,
                        const std::vector<std::int32_t>& labels_deg) {
  if (records.size() != labels_deg.size())
    throw InvalidArgument("write_feature_dump: records/labels size mismatch");
  std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("write_feature_dump: cannot open " + bin_path);
  std::vector<char> buf(kRecordBytes);
  for (const auto& rec : records) {
    char* p = buf.data();
    std::memcpy(p, &rec.t, 4); p += 4;
    std::memcpy(p, &rec.f, 4); p += 4;
    std::memcpy(p, rec.v.data(), kFeatureDims * 4); p += kFeatureDims * 4;
    std::memcpy(p, &rec.itd_s, 4); p += 4;
    std::memcpy(p, &rec.energy, 4);
    bin.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!bin) throw IoError("write_feature_dump: write failed for " + bin_path);
  std::ofstream lab(labels_path, std::ios::binary | std::ios::trunc);
  if (!lab) throw IoError("write_feature_dump: cannot open " + labels_path);
  lab.write(reinterpret_cast<const char*>(labels_deg.data()),
            static_cast<std::streamsize>(labels_deg.size() * 4));
  if (!lab) throw IoError("write_feature_dump: write failed for " + labels_path);
}

FeatureDump read_feature_dump(const std::string& bin_path, const std::string& labels_path) {
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("read_feature_dump: cannot open " + bin_path);
  FeatureDump dump;
  std::vector<char> buf(kRecordBytes);
  while (bin.read(buf.data(), static_cast<std::streamsize>(buf.size()))) {
    FeatureFrame rec;
    const char* p = buf.data();
    std::memcpy(&rec.t, p, 4); p += 4;
    std::memcpy(&rec.f, p, 4); p += 4;
    std::memcpy(rec.v.data(), p, kFeatureDims * 4); p += kFeatureDims * 4;
    std::memcpy(&rec.itd_s, p, 4); p += 4;
    std::memcpy(&rec.energy, p, 4);
    dump.records.push_back(rec);
  }
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw IoError("read_feature_dump: cannot open " + labels_path);
  std::int32_t v;
  while (lab.read(reinterpret_cast<char*>(&v), 4)) dump.labels_deg.push_back(v);
  if (dump.labels_deg.size() != dump.records.size())
    throw IoError("read_feature_dump: records/labels count mismatch");
  return dump;
}

}  // namespace binloc
