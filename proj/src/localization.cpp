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

#include "binloc/localization.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "binloc/rng.hpp"

namespace binloc {

using nlohmann::json;

namespace {

constexpr double kPosteriorFloor = 1e-10;
constexpr int kBins = AzimuthGrid::kCount;

void renormalize(std::array<double, kBins>& p) {
  double sum = 0.0;
  for (double v : p) sum += v;
  if (sum <= 0.0) throw Error("posterior lost all mass");
  for (double& v : p) v /= sum;
}

}  // namespace

std::array<double, kBins> fuse_frame(const std::vector<std::vector<double>>& band_posteriors,
                                     const std::array<double, kBins>& prior) {
  if (band_posteriors.empty()) throw InvalidArgument("fuse_frame: no usable bands");
  std::array<double, kBins> log_post;
  std::vector<double> terms(band_posteriors.size());
  for (int k = 0; k < kBins; ++k) {
    for (std::size_t f = 0; f < band_posteriors.size(); ++f)
      terms[f] = std::log(std::max(band_posteriors[f][k], kPosteriorFloor));
    // Canonical summation order: permutation-invariant to the bit.
    std::sort(terms.begin(), terms.end());
    double acc = 0.0;
    for (double t : terms) acc += t;
    log_post[k] = acc + std::log(std::max(prior[k], kPosteriorFloor));
  }
  const double m = *std::max_element(log_post.begin(), log_post.end());
  std::array<double, kBins> post;
  double sum = 0.0;
  for (int k = 0; k < kBins; ++k) {
    post[k] = std::exp(log_post[k] - m);
    sum += post[k];
  }
  for (double& v : post) v /= sum;
  return post;
}

std::array<double, kBins> fuse_frame(const std::vector<std::vector<double>>& band_posteriors) {
  std::array<double, kBins> uniform;
  uniform.fill(1.0 / kBins);
  return fuse_frame(band_posteriors, uniform);
}

AzimuthPosterior average_block(const std::vector<std::array<double, kBins>>& frames) {
  if (frames.empty()) throw InvalidArgument("average_block: no usable frames");
  AzimuthPosterior out;
  out.num_frames = static_cast<int>(frames.size());
  out.probs.fill(0.0);
  for (const auto& f : frames)
    for (int k = 0; k < kBins; ++k) out.probs[k] += f[k];
  for (double& v : out.probs) v /= static_cast<double>(frames.size());
  renormalize(out.probs);
  return out;
}

std::vector<int> find_peaks(const AzimuthPosterior& p) {
  std::vector<int> peaks;
  for (int k = 0; k < kBins; ++k) {
    const double prev = p.probs[(k + kBins - 1) % kBins];
    const double next = p.probs[(k + 1) % kBins];
    if (p.probs[k] > 0.0 && p.probs[k] >= prev && p.probs[k] >= next) peaks.push_back(k);
  }
  return peaks;
}

namespace {

/// Sort by mass descending; equal masses toward the smaller azimuth.
void sort_by_mass(std::vector<int>& bins, const AzimuthPosterior& p) {
  std::sort(bins.begin(), bins.end(), [&](int a, int b) {
    if (p.probs[a] != p.probs[b]) return p.probs[a] > p.probs[b];
    return a < b;
  });
}

double bin_distance_deg(int a, int b) {
  return angular_distance(AzimuthGrid::azimuth_of(a), AzimuthGrid::azimuth_of(b));
}

std::vector<int> prominent_peaks(const AzimuthPosterior& p, const AmbiguityConfig& cfg) {
  std::vector<int> peaks = find_peaks(p);
  if (peaks.empty()) return peaks;
  double top = 0.0;
  for (int k : peaks) top = std::max(top, p.probs[k]);
  std::vector<int> out;
  for (int k : peaks)
    if (p.probs[k] >= cfg.prominence_fraction * top) out.push_back(k);
  return out;
}

}  // namespace

std::vector<int> pick_sources(const AzimuthPosterior& p, int n, const AmbiguityConfig& cfg) {
  if (n < 1) throw InvalidArgument("pick_sources: need n >= 1");
  if (n > kBins) throw InvalidArgument("pick_sources: n exceeds grid size");

  std::vector<int> peaks = find_peaks(p);
  sort_by_mass(peaks, p);
  std::vector<int> chosen;
  for (int k : peaks) {
    if (static_cast<int>(chosen.size()) == n) break;
    bool clear = true;
    for (int c : chosen)
      if (bin_distance_deg(k, c) < cfg.min_peak_separation_deg) clear = false;
    if (clear) chosen.push_back(k);
  }
  if (static_cast<int>(chosen.size()) < n) {
    // Too few separated local maxima: top up from the global bin ranking.
    std::vector<int> all(kBins);
    for (int k = 0; k < kBins; ++k) all[k] = k;
    sort_by_mass(all, p);
    for (int k : all) {
      if (static_cast<int>(chosen.size()) == n) break;
      if (std::find(chosen.begin(), chosen.end(), k) == chosen.end()) chosen.push_back(k);
    }
  }
  return chosen;
}

bool detect_ambiguity(const AzimuthPosterior& p, int n, const AmbiguityConfig& cfg) {
  const std::vector<int> prominent = prominent_peaks(p, cfg);
  if (static_cast<int>(prominent.size()) > n) return true;

  const std::vector<int> selected = pick_sources(p, n, cfg);
  for (int s : selected) {
    const double mirror = mirror_azimuth(AzimuthGrid::azimuth_of(s));
    for (int q = 0; q < kBins; ++q) {
      // Bins inside the selected lobe are not independent evidence.
      if (bin_distance_deg(q, s) < cfg.min_peak_separation_deg) continue;
      if (angular_distance(AzimuthGrid::azimuth_of(q), mirror) > cfg.mirror_window_deg) continue;
      if (p.probs[q] >= cfg.mirror_mass_floor) return true;
    }
  }
  return false;
}

namespace {

/// Shift a head-frame posterior into the frame of a head rotated by
/// rotation_deg: out[a] = in[a + rotation].
std::array<double, kBins> shift_to_rotated_frame(const std::array<double, kBins>& in,
                                                 int rotation_bins) {
  std::array<double, kBins> out;
  for (int k = 0; k < kBins; ++k) out[k] = in[((k + rotation_bins) % kBins + kBins) % kBins];
  return out;
}

void zero_lobe(std::array<double, kBins>& p, int bin, int halfwidth_bins) {
  for (int d = -halfwidth_bins; d <= halfwidth_bins; ++d)
    p[((bin + d) % kBins + kBins) % kBins] = 0.0;
}

}  // namespace

LocalizationResult resolve_with_rotation(const AzimuthPosterior& p1, const AzimuthPosterior& p2,
                                         double rotation_deg, int n,
                                         double head_orientation_before_deg,
                                         const AmbiguityConfig& cfg) {
  if (std::fabs(rotation_deg) > 30.0 + 1e-9)
    throw InvalidArgument("resolve_with_rotation: rotation outside +/-30 degrees");
  if (!AzimuthGrid::on_grid(rotation_deg) && !AzimuthGrid::on_grid(-rotation_deg))
    throw InvalidArgument("resolve_with_rotation: rotation must be a grid multiple");
  const int rotation_bins =
      static_cast<int>(std::lround(rotation_deg / AzimuthGrid::kStepDeg));
  const double head_after = head_orientation_before_deg + rotation_deg;

  // Candidate peaks for cross-rotation matching: the mass floor keeps weak
  // mirror twins in play so a phantom-favoring tilt can still be corrected.
  auto candidate_peaks = [&](const AzimuthPosterior& p) {
    std::vector<int> peaks = find_peaks(p);
    double top = 0.0;
    for (int k : peaks) top = std::max(top, p.probs[k]);
    const double cut = std::min(cfg.prominence_fraction * top, cfg.mirror_mass_floor);
    std::vector<int> out;
    for (int k : peaks)
      if (p.probs[k] >= cut) out.push_back(k);
    return out;
  };
  const std::vector<int> peaks1 = candidate_peaks(p1);
  const std::vector<int> peaks2 = candidate_peaks(p2);
  const int tol_bins =
      static_cast<int>(std::lround(cfg.match_tolerance_deg / AzimuthGrid::kStepDeg));

  // A p1 peak at bin a appears, for a true source, near bin a - rotation in
  // the rotated frame.
  auto matches = [&](int bin1, int bin2) {
    const int expected = ((bin1 - rotation_bins) % kBins + kBins) % kBins;
    return bin_distance_deg(expected, bin2) <= tol_bins * AzimuthGrid::kStepDeg;
  };

  std::vector<int> phantoms1, phantoms2;
  int matched_count = 0;
  for (int a : peaks1) {
    bool hit = false;
    for (int b : peaks2)
      if (matches(a, b)) hit = true;
    if (hit)
      ++matched_count;
    else
      phantoms1.push_back(a);
  }
  for (int b : peaks2) {
    bool hit = false;
    for (int a : peaks1)
      if (matches(a, b)) hit = true;
    if (!hit) phantoms2.push_back(b);
  }

  LocalizationResult result;
  result.used_head_movement = true;
  result.rotation_deg = rotation_deg;
  result.ambiguous = true;

  // Align p1 to the post-rotation frame, drop phantoms from both, average.
  std::array<double, kBins> a1 = shift_to_rotated_frame(p1.probs, rotation_bins);
  std::array<double, kBins> a2 = p2.probs;
  if (matched_count == 0) {
    result.low_confidence = true;  // nothing survived; average without elimination
  } else {
    for (int ph : phantoms1)
      zero_lobe(a1, ((ph - rotation_bins) % kBins + kBins) % kBins, tol_bins);
    for (int ph : phantoms2) zero_lobe(a2, ph, tol_bins);
    renormalize(a1);
    renormalize(a2);
    for (int ph : phantoms1)
      result.phantoms_world_deg.push_back(
          wrap_degrees(AzimuthGrid::azimuth_of(ph) + head_orientation_before_deg));
    for (int ph : phantoms2)
      result.phantoms_world_deg.push_back(wrap_degrees(AzimuthGrid::azimuth_of(ph) + head_after));
  }

  AzimuthPosterior fused;
  fused.num_frames = p1.num_frames + p2.num_frames;
  for (int k = 0; k < kBins; ++k) fused.probs[k] = 0.5 * (a1[k] + a2[k]);
  renormalize(fused.probs);

  for (int bin : pick_sources(fused, n, cfg)) {
    const double head_rel = AzimuthGrid::azimuth_of(bin);
    result.azimuths_head_deg.push_back(head_rel);
    result.azimuths_world_deg.push_back(wrap_degrees(head_rel + head_after));
    result.masses.push_back(fused.probs[bin]);
  }
  return result;
}

// --- Scene handles ---

SimulatedScene::SimulatedScene(SceneSpec spec, const HrirCatalog& catalog)
    : spec_(std::move(spec)), catalog_(&catalog) {}

BinauralSignal SimulatedScene::render(double head_orientation_deg) {
  SceneSpec view = spec_;
  view.head_orientation_deg = head_orientation_deg;
  return mix_scene(view, *catalog_);
}

FixedSignalScene::FixedSignalScene(BinauralSignal signal, double head_orientation_deg)
    : signal_(std::move(signal)), orientation_(head_orientation_deg) {}

BinauralSignal FixedSignalScene::render(double head_orientation_deg) {
  if (head_orientation_deg != orientation_)
    throw InvalidArgument("FixedSignalScene cannot re-render at a new orientation");
  return signal_;
}

// --- Localization pipeline ---

AzimuthPosterior block_posterior(const FeatureGrid& grid, const ModelBundle& models,
                                 int frame_begin, int frame_end) {
  std::vector<std::array<double, kBins>> frame_posteriors;
  std::vector<std::vector<double>> bands;
  for (int t = frame_begin; t < frame_end; ++t) {
    bands.clear();
    for (int f = 0; f < grid.num_bands; ++f) {
      const FeatureFrame& cell = grid.at(t, f);
      if (cell.silent) continue;
      bands.push_back(models.band_posterior(f, cell));
    }
    if (bands.empty()) continue;  // all bands silent: skip the frame
    frame_posteriors.push_back(fuse_frame(bands));
  }
  AzimuthPosterior post = average_block(frame_posteriors);
  post.start_frame = frame_begin;
  return post;
}

std::vector<int> frontal_mask_bins() {
  std::vector<int> bins;
  for (int k = 0; k < kBins; ++k) {
    const int az = AzimuthGrid::azimuth_of(k);
    if (az <= 90 || az >= 270) bins.push_back(k);
  }
  return bins;
}

namespace {

void apply_report_mask(AzimuthPosterior& p, const std::vector<int>& bins) {
  std::array<double, kBins> masked{};
  for (int k : bins) masked[k] = p.probs[k];
  p.probs = masked;
  renormalize(p.probs);
}

BinauralSignal slice(const BinauralSignal& s, std::size_t begin, std::size_t end) {
  return {{std::vector<double>(s.left.samples.begin() + begin, s.left.samples.begin() + end),
           s.sample_rate_hz()},
          {std::vector<double>(s.right.samples.begin() + begin, s.right.samples.begin() + end),
           s.sample_rate_hz()}};
}

LocalizationResult report_single(const AzimuthPosterior& p, int n, double head_orientation_deg,
                                 const LocalizeOptions& opts) {
  AzimuthPosterior view = p;
  if (opts.report_mask_bins) apply_report_mask(view, *opts.report_mask_bins);
  LocalizationResult result;
  for (int bin : pick_sources(view, n, opts.ambiguity)) {
    const double head_rel = AzimuthGrid::azimuth_of(bin);
    result.azimuths_head_deg.push_back(head_rel);
    result.azimuths_world_deg.push_back(wrap_degrees(head_rel + head_orientation_deg));
    result.masses.push_back(view.probs[bin]);
  }
  return result;
}

}  // namespace

LocalizationResult localize(SceneHandle& scene, const ModelBundle& models, LocalizeOptions& opts) {
  const double head0 = scene.base_orientation_deg();
  const BinauralSignal full = scene.render(head0);
  if (full.duration_s() < opts.segment_s - 1e-9)
    throw InvalidArgument("localize: rendered scene shorter than the analysis segment");
  const BinauralSignal segment = central_segment(full, opts.segment_s);

  Policy policy = opts.policy;
  if (policy == Policy::random_rotation && !scene.can_rotate()) {
    policy = Policy::no_movement;
    opts.fell_back_to_no_movement = true;
  }

  if (policy == Policy::no_movement) {
    const FeatureGrid grid = extract_features(segment, opts.filterbank, opts.framing);
    const AzimuthPosterior post = block_posterior(grid, models, 0, grid.num_frames);
    LocalizationResult result = report_single(post, opts.n_sources, head0, opts);
    result.ambiguous = detect_ambiguity(post, opts.n_sources, opts.ambiguity);
    return result;
  }

  // Two-block protocol: the first half decides whether to move the head, the
  // second half is rendered after the (possible) movement completes.
  const std::size_t half = segment.size() / 2;
  const FeatureGrid grid1 =
      extract_features(slice(segment, 0, half), opts.filterbank, opts.framing);
  const AzimuthPosterior p1 = block_posterior(grid1, models, 0, grid1.num_frames);
  const bool ambiguous = detect_ambiguity(p1, opts.n_sources, opts.ambiguity);

  if (!ambiguous) {
    // Unambiguous: analyze the second block without moving and average.
    const FeatureGrid grid2 =
        extract_features(slice(segment, half, segment.size()), opts.filterbank, opts.framing);
    const AzimuthPosterior p2 = block_posterior(grid2, models, 0, grid2.num_frames);
    AzimuthPosterior avg;
    avg.num_frames = p1.num_frames + p2.num_frames;
    for (int k = 0; k < kBins; ++k) avg.probs[k] = 0.5 * (p1.probs[k] + p2.probs[k]);
    renormalize(avg.probs);
    LocalizationResult result = report_single(avg, opts.n_sources, head0, opts);
    result.ambiguous = false;
    return result;
  }

  // Ambiguous: draw a nonzero grid rotation in [-30, 30] and re-render the
  // scene for the second block at the new orientation.
  Rng rng(derive_seed(opts.seed, 0x40247eu));
  const int steps = 30 / AzimuthGrid::kStepDeg;  // 6 each side
  const int draw = static_cast<int>(rng.below(2 * steps)) - steps;
  const double rotation = AzimuthGrid::kStepDeg * static_cast<double>(draw >= 0 ? draw + 1 : draw);

  const BinauralSignal full2 = scene.render(head0 + rotation);
  const BinauralSignal segment2 = central_segment(full2, opts.segment_s);
  const FeatureGrid grid2 = extract_features(slice(segment2, segment2.size() / 2, segment2.size()),
                                             opts.filterbank, opts.framing);
  const AzimuthPosterior p2 = block_posterior(grid2, models, 0, grid2.num_frames);

  if (opts.report_mask_bins) {
    AzimuthPosterior v1 = p1, v2 = p2;
    apply_report_mask(v1, *opts.report_mask_bins);
    apply_report_mask(v2, *opts.report_mask_bins);
    return resolve_with_rotation(v1, v2, rotation, opts.n_sources, head0, opts.ambiguity);
  }
  return resolve_with_rotation(p1, p2, rotation, opts.n_sources, head0, opts.ambiguity);
}

LocalizationResult localize_signal(const BinauralSignal& signal, const ModelBundle& models,
                                   LocalizeOptions& opts) {
  FixedSignalScene scene(signal);
  return localize(scene, models, opts);
}

std::string LocalizationResult::to_json() const {
  json j;
  j["azimuths_deg"] = azimuths_world_deg;
  j["azimuths_head_deg"] = azimuths_head_deg;
  j["masses"] = masses;
  j["rotation_deg"] = rotation_deg;
  j["ambiguous"] = ambiguous;
  j["used_head_movement"] = used_head_movement;
  j["low_confidence"] = low_confidence;
  j["phantoms_deg"] = phantoms_world_deg;
  return j.dump(2);
}

}  // namespace binloc
