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

#include "binloc/mct.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "binloc/rng.hpp"

namespace binloc {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<double> a_priori_snr_db(double target_energy, double noise_energy) {
  if (target_energy < 0.0 || noise_energy < 0.0)
    throw InvalidArgument("a_priori_snr_db: negative energy");
  if (target_energy == 0.0 && noise_energy == 0.0) return std::nullopt;
  if (noise_energy == 0.0) return std::numeric_limits<double>::infinity();
  if (target_energy == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(target_energy / noise_energy);
}

namespace {

double broadband_energy(const BinauralSignal& s) {
  double acc = 0.0;
  for (double v : s.left.samples) acc += v * v;
  for (double v : s.right.samples) acc += v * v;
  return acc / 2.0;
}

BinauralSignal mix(const BinauralSignal& target, const BinauralSignal& noise, double gain) {
  BinauralSignal out = target;
  const std::size_t n = std::min(out.size(), noise.size());
  for (std::size_t i = 0; i < n; ++i) {
    out.left.samples[i] += gain * noise.left.samples[i];
    out.right.samples[i] += gain * noise.right.samples[i];
  }
  return out;
}

/// Sentence indices for one azimuth: a seeded random selection, distinct
/// while the pool allows.
std::vector<std::size_t> select_sentences(std::size_t pool, int count, Rng& rng) {
  std::vector<std::size_t> order(pool);
  for (std::size_t i = 0; i < pool; ++i) order[i] = i;
  rng.shuffle(order.data(), order.size());
  std::vector<std::size_t> out;
  for (int i = 0; i < count; ++i) out.push_back(order[i % pool]);
  return out;
}

}  // namespace

SentenceRender render_sentence(const MonoSignal& sentence, int azimuth_deg,
                               const HrirCatalog& catalog, const MctConfig& cfg,
                               std::uint64_t noise_seed) {
  SentenceRender render;
  render.target = spatialize(rms_normalize(sentence, cfg.target_rms), azimuth_deg, catalog);
  if (cfg.clean_only) return render;

  const double duration = static_cast<double>(render.target.size()) / catalog.sample_rate_hz;
  render.noise = make_diffuse_noise(duration, catalog, noise_seed);
  render.noise.left.samples.resize(render.target.size(), 0.0);
  render.noise.right.samples.resize(render.target.size(), 0.0);

  const double e_target = broadband_energy(render.target);
  const double e_noise = broadband_energy(render.noise);
  if (e_target <= 0.0) throw InvalidArgument("render_sentence: target rendered to silence");
  for (double snr : cfg.snrs_db)
    render.noise_gains.push_back(std::sqrt(e_target / (e_noise * std::pow(10.0, snr / 10.0))));
  return render;
}

std::vector<std::vector<double>> band_frame_energies(const BinauralSignal& s,
                                                     const FilterbankConfig& fb,
                                                     const FrameConfig& fr) {
  const int rate = s.sample_rate_hz();
  const int len = fr.frame_len(rate);
  const int shift = fr.frame_shift(rate);
  const int num_frames = fr.num_frames(s.size(), rate);

  auto left = gammatone_analyze(s.left, fb);
  auto right = gammatone_analyze(s.right, fb);

  std::vector<std::vector<double>> energies(
      static_cast<std::size_t>(num_frames), std::vector<double>(fb.num_bands, 0.0));
  for (int f = 0; f < fb.num_bands; ++f) {
    const MonoSignal lb = rectify(left[f]);
    const MonoSignal rb = rectify(right[f]);
    for (int t = 0; t < num_frames; ++t) {
      double acc = 0.0;
      const std::size_t start = static_cast<std::size_t>(t) * shift;
      for (int i = 0; i < len; ++i) {
        acc += lb.samples[start + i] * lb.samples[start + i];
        acc += rb.samples[start + i] * rb.samples[start + i];
      }
      energies[t][f] = acc / 2.0;
    }
  }
  return energies;
}

TrainingSet build_training_set(const std::vector<MonoSignal>& material,
                               const HrirCatalog& catalog, const MctConfig& cfg) {
  if (material.empty()) throw InvalidArgument("build_training_set: empty material list");
  if (!catalog.covers_grid())
    throw InvalidArgument("build_training_set: catalog does not cover the grid");
  if (!cfg.clean_only && cfg.snrs_db.empty())
    throw InvalidArgument("build_training_set: SNR list empty in MCT mode");

  TrainingSet set;
  set.num_bands = cfg.filterbank.num_bands;
  set.bands.resize(set.num_bands);

  // kept[az][band]: coverage under the most favorable condition.
  std::vector<std::vector<int>> kept_best(AzimuthGrid::kCount,
                                          std::vector<int>(set.num_bands, 0));
  const std::size_t best_snr_idx =
      cfg.clean_only
          ? 0
          : static_cast<std::size_t>(std::distance(
                cfg.snrs_db.begin(), std::max_element(cfg.snrs_db.begin(), cfg.snrs_db.end())));

  for (int az_idx = 0; az_idx < AzimuthGrid::kCount; ++az_idx) {
    const int az = AzimuthGrid::azimuth_of(az_idx);
    Rng select_rng(derive_seed(cfg.seed, 0x5e1ec7u, static_cast<std::uint64_t>(az)));
    const auto picks = select_sentences(material.size(), cfg.sentences_per_azimuth, select_rng);

    for (std::size_t s = 0; s < picks.size(); ++s) {
      const std::uint64_t noise_seed =
          derive_seed(cfg.seed, 0x0d15eu, static_cast<std::uint64_t>(az), s);
      const SentenceRender render =
          render_sentence(material[picks[s]], az, catalog, cfg, noise_seed);

      if (cfg.clean_only) {
        const FeatureGrid grid = extract_features(render.target, cfg.filterbank, cfg.framing);
        for (const FeatureFrame& cell : grid.cells) {
          if (cell.silent) continue;
          set.bands[cell.f].cells.push_back(cell);
          set.bands[cell.f].labels_deg.push_back(az);
          ++kept_best[az_idx][cell.f];
        }
        continue;
      }

      const auto e_target = band_frame_energies(render.target, cfg.filterbank, cfg.framing);
      const auto e_noise = band_frame_energies(render.noise, cfg.filterbank, cfg.framing);

      for (std::size_t snr_idx = 0; snr_idx < cfg.snrs_db.size(); ++snr_idx) {
        const double gain = render.noise_gains[snr_idx];
        const BinauralSignal mixture = mix(render.target, render.noise, gain);
        const FeatureGrid grid = extract_features(mixture, cfg.filterbank, cfg.framing);
        const int frames = std::min(grid.num_frames, static_cast<int>(e_target.size()));
        for (int t = 0; t < frames; ++t) {
          for (int f = 0; f < grid.num_bands; ++f) {
            const FeatureFrame& cell = grid.at(t, f);
            if (cell.silent) continue;
            const auto snr = a_priori_snr_db(e_target[t][f], gain * gain * e_noise[t][f]);
            if (!snr || *snr <= cfg.gate_snr_db) continue;  // strict: must exceed the gate
            set.bands[f].cells.push_back(cell);
            set.bands[f].labels_deg.push_back(az);
            if (snr_idx == best_snr_idx) ++kept_best[az_idx][f];
          }
        }
      }
    }
  }

  for (int az_idx = 0; az_idx < AzimuthGrid::kCount; ++az_idx)
    for (int f = 0; f < set.num_bands; ++f)
      if (kept_best[az_idx][f] == 0)
        throw Error("build_training_set: azimuth " +
                    std::to_string(AzimuthGrid::azimuth_of(az_idx)) + " kept no frames in band " +
                    std::to_string(f) + " under the best SNR; material unsuitable");
  return set;
}

void write_training_set(const std::string& dir, const TrainingSet& set, const MctConfig& cfg) {
  fs::create_directories(dir);
  json manifest;
  manifest["format"] = "binloc-features-v1";
  manifest["num_bands"] = set.num_bands;
  manifest["dims"] = kFeatureDims;
  manifest["record_layout"] = "t:i32,f:i32,v:f32x34,itd:f32,energy:f32";
  manifest["labels"] = "i32 azimuth degrees";
  manifest["frame_len_s"] = cfg.framing.frame_len_s;
  manifest["frame_shift_s"] = cfg.framing.frame_shift_s;
  manifest["snrs_db"] = cfg.snrs_db;
  manifest["clean_only"] = cfg.clean_only;
  manifest["gate_snr_db"] = cfg.gate_snr_db;
  manifest["sentences_per_azimuth"] = cfg.sentences_per_azimuth;
  manifest["seed"] = cfg.seed;
  manifest["records_per_band"] = json::array();
  for (int f = 0; f < set.num_bands; ++f) {
    manifest["records_per_band"].push_back(set.bands[f].cells.size());
    char bin_name[32], lab_name[32];
    std::snprintf(bin_name, sizeof bin_name, "band_%02d.bin", f);
    std::snprintf(lab_name, sizeof lab_name, "labels_%02d.bin", f);
    write_feature_dump(dir + "/" + bin_name, dir + "/" + lab_name, set.bands[f].cells,
                       set.bands[f].labels_deg);
  }
  std::ofstream out(dir + "/manifest.json", std::ios::trunc);
  if (!out) throw IoError("write_training_set: cannot write manifest in " + dir);
  out << manifest.dump(2) << "\n";
}

TrainingSet read_training_set(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) throw IoError("read_training_set: cannot open " + dir + "/manifest.json");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw IoError("read_training_set: bad manifest: " + std::string(e.what()));
  }
  TrainingSet set;
  set.num_bands = manifest.at("num_bands").get<int>();
  set.bands.resize(set.num_bands);
  for (int f = 0; f < set.num_bands; ++f) {
    char bin_name[32], lab_name[32];
    std::snprintf(bin_name, sizeof bin_name, "band_%02d.bin", f);
    std::snprintf(lab_name, sizeof lab_name, "labels_%02d.bin", f);
    FeatureDump dump = read_feature_dump(dir + "/" + bin_name, dir + "/" + lab_name);
    set.bands[f].cells = std::move(dump.records);
    set.bands[f].labels_deg = std::move(dump.labels_deg);
  }
  return set;
}

}  // namespace binloc
