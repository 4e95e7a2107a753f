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

#ifndef BINLOC_EVAL_HPP
#define BINLOC_EVAL_HPP

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "binloc/localization.hpp"

namespace binloc {

/// True when a failed estimate lands within the mirror window of the azimuth
/// producing the same ITD in the opposite hemifield.
bool is_front_back_error(double true_az_deg, double est_az_deg, double window_deg = 20.0);

struct Assignment {
  std::vector<int> est_for_true;  // estimate index assigned to each true source
  double total_distance_deg = 0.0;
};

/// One-to-one assignment minimizing total angular distance (exhaustive over
/// permutations; evaluation scenes have at most 3 sources).
Assignment match_estimates(const std::vector<double>& true_az, const std::vector<double>& est_az);

struct EvalPolicy {
  std::string name;  // "no_movement" | "rotate"
  Policy policy = Policy::no_movement;
};

struct EvalConfig {
  double accuracy_threshold_deg = 5.0;
  double front_back_window_deg = 20.0;
  std::vector<SceneSpec> scenes;
  std::vector<std::vector<double>> true_azimuths;  // world frame, per scene
  std::vector<EvalPolicy> policies{{"no_movement", Policy::no_movement}};
  std::string condition = "default";
  bool frontal_only = false;
  std::uint64_t seed = 0;
};

struct SceneResult {
  int scene_id = 0;
  std::string condition;
  std::string policy;
  int n_sources = 0;
  std::vector<double> true_az;
  std::vector<double> est_az;
  int n_correct = 0;
  int n_front_back = 0;
  bool failed = false;
  std::string error;
};

struct PolicyAggregate {
  int total_sources = 0;
  int total_correct = 0;
  int total_front_back = 0;
  int failed_scenes = 0;
  std::array<int, 18> sources_per_bin{};  // 20 degree azimuth histogram
  std::array<int, 18> errors_per_bin{};
  std::array<int, 18> front_back_per_bin{};

  double accuracy() const;
  double error_rate() const { return 1.0 - accuracy(); }
  double front_back_rate() const;
};

struct EvalReport {
  std::vector<SceneResult> rows;
  std::map<std::string, PolicyAggregate> per_policy;
  std::string config_hash;

  std::string to_json() const;
  std::string to_csv() const;
};

/// Histogram bin (width 20 degrees, bin 0 = [0, 20)) of a true azimuth.
int histogram_bin(double az_deg);

/// Score one scene result against truth.
void score_scene(SceneResult& row, double threshold_deg, double fb_window_deg);

/// Run every scene under every policy with the scene list held fixed, and
/// aggregate. Per-scene failures are recorded, not fatal.
EvalReport run_experiment(const EvalConfig& cfg, const ModelBundle& models,
                          const HrirCatalog& catalog);

/// Seeded random evaluation scenes over generated material. Azimuths are
/// drawn from the grid (full circle or frontal hemifield) with >= 10 degree
/// spacing; an optional diffuse-noise SNR is applied to each scene.
std::vector<SceneSpec> generate_scene_set(int count, int n_sources, bool frontal_only,
                                          double burst_duration_s, std::uint64_t seed,
                                          std::optional<double> noise_snr_db = std::nullopt);

void write_report(const EvalReport& report, const std::string& dir);

}  // namespace binloc

#endif  // BINLOC_EVAL_HPP
