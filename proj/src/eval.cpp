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

#include "binloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "binloc/rng.hpp"

namespace binloc {

namespace fs = std::filesystem;
using nlohmann::json;

bool is_front_back_error(double true_az_deg, double est_az_deg, double window_deg) {
  return angular_distance(est_az_deg, mirror_azimuth(true_az_deg)) <= window_deg;
}

Assignment match_estimates(const std::vector<double>& true_az, const std::vector<double>& est_az) {
  if (true_az.size() != est_az.size())
    throw InvalidArgument("match_estimates: true/estimate counts differ");
  const std::size_t n = true_az.size();
  if (n == 0) throw InvalidArgument("match_estimates: empty sets");
  if (n > 6) throw InvalidArgument("match_estimates: permutation matching limited to 6 sources");

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Assignment best;
  best.total_distance_deg = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += angular_distance(true_az[i], est_az[perm[i]]);
    if (total < best.total_distance_deg) {
      best.total_distance_deg = total;
      best.est_for_true = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double PolicyAggregate::accuracy() const {
  return total_sources > 0 ? static_cast<double>(total_correct) / total_sources : 0.0;
}

double PolicyAggregate::front_back_rate() const {
  return total_sources > 0 ? static_cast<double>(total_front_back) / total_sources : 0.0;
}

int histogram_bin(double az_deg) {
  return static_cast<int>(wrap_degrees(az_deg) / 20.0) % 18;
}

void score_scene(SceneResult& row, double threshold_deg, double fb_window_deg) {
  const Assignment assignment = match_estimates(row.true_az, row.est_az);
  row.n_correct = 0;
  row.n_front_back = 0;
  for (std::size_t i = 0; i < row.true_az.size(); ++i) {
    const double est = row.est_az[assignment.est_for_true[i]];
    if (angular_distance(row.true_az[i], est) < threshold_deg) {
      ++row.n_correct;
    } else if (is_front_back_error(row.true_az[i], est, fb_window_deg)) {
      ++row.n_front_back;
    }
  }
}

EvalReport run_experiment(const EvalConfig& cfg, const ModelBundle& models,
                          const HrirCatalog& catalog) {
  if (cfg.scenes.size() != cfg.true_azimuths.size())
    throw InvalidArgument("run_experiment: scenes and true_azimuths must align");

  EvalReport report;
  {
    json fingerprint;
    fingerprint["threshold"] = cfg.accuracy_threshold_deg;
    fingerprint["fb_window"] = cfg.front_back_window_deg;
    fingerprint["condition"] = cfg.condition;
    fingerprint["frontal_only"] = cfg.frontal_only;
    fingerprint["seed"] = cfg.seed;
    fingerprint["n_scenes"] = cfg.scenes.size();
    for (const auto& s : cfg.scenes) fingerprint["scenes"].push_back(scene_to_json(s));
    for (const auto& p : cfg.policies) fingerprint["policies"].push_back(p.name);
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016zx", std::hash<std::string>{}(fingerprint.dump()));
    report.config_hash = hex;
  }

  for (const auto& policy : cfg.policies) {
    PolicyAggregate agg;
    for (std::size_t i = 0; i < cfg.scenes.size(); ++i) {
      SceneResult row;
      row.scene_id = static_cast<int>(i);
      row.condition = cfg.condition;
      row.policy = policy.name;
      row.true_az = cfg.true_azimuths[i];
      row.n_sources = static_cast<int>(row.true_az.size());
      try {
        cfg.scenes[i].validate_for_eval();
        SimulatedScene scene(cfg.scenes[i], catalog);
        LocalizeOptions opts;
        opts.n_sources = row.n_sources;
        opts.policy = policy.policy;
        opts.seed = derive_seed(cfg.seed, 0xe7a1u, i);
        if (cfg.frontal_only) opts.report_mask_bins = frontal_mask_bins();
        const LocalizationResult result = localize(scene, models, opts);
        row.est_az = result.azimuths_world_deg;
        score_scene(row, cfg.accuracy_threshold_deg, cfg.front_back_window_deg);
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
      if (row.failed) {
        ++agg.failed_scenes;
      } else {
        const Assignment assignment = match_estimates(row.true_az, row.est_az);
        for (std::size_t s = 0; s < row.true_az.size(); ++s) {
          const int bin = histogram_bin(row.true_az[s]);
          ++agg.total_sources;
          ++agg.sources_per_bin[bin];
          const double est = row.est_az[assignment.est_for_true[s]];
          if (angular_distance(row.true_az[s], est) < cfg.accuracy_threshold_deg) {
            ++agg.total_correct;
          } else {
            ++agg.errors_per_bin[bin];
            if (is_front_back_error(row.true_az[s], est, cfg.front_back_window_deg)) {
              ++agg.total_front_back;
              ++agg.front_back_per_bin[bin];
            }
          }
        }
      }
      report.rows.push_back(std::move(row));
    }
    report.per_policy[policy.name] = agg;
  }
  return report;
}

std::vector<SceneSpec> generate_scene_set(int count, int n_sources, bool frontal_only,
                                          double burst_duration_s, std::uint64_t seed,
                                          std::optional<double> noise_snr_db) {
  std::vector<int> pool;
  for (int az : AzimuthGrid::values())
    if (!frontal_only || az <= 90 || az >= 270) pool.push_back(az);

  std::vector<SceneSpec> scenes;
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, 0x5ce9eu, static_cast<std::uint64_t>(i)));
    SceneSpec spec;
    spec.seed = derive_seed(seed, 0x5eedu, static_cast<std::uint64_t>(i));
    std::vector<int> chosen;
    int guard = 0;
    while (static_cast<int>(chosen.size()) < n_sources) {
      if (++guard > 10000) throw Error("generate_scene_set: cannot satisfy spacing");
      const int az = pool[rng.below(pool.size())];
      bool ok = true;
      for (int c : chosen)
        if (angular_distance(az, c) < 10.0) ok = false;
      if (ok) chosen.push_back(az);
    }
    for (int s = 0; s < n_sources; ++s) {
      SourceSpec src;
      GeneratorSpec gen;
      if (n_sources == 1) {
        gen.type = (i % 2 == 0) ? "white_noise" : "pink_noise";
      } else {
        // Competing talkers are envelope-modulated broadband bursts: like
        // overlapping voices, each one dominates whole bands during its own
        // envelope peaks.
        gen.type = "modulated_noise";
      }
      gen.duration_s = burst_duration_s;
      gen.seed = derive_seed(seed, 0x9e4eu, static_cast<std::uint64_t>(i),
                             static_cast<std::uint64_t>(s));
      src.generator = gen;
      src.azimuth_deg = chosen[s];
      src.normalize_rms = 0.1;  // matched talker levels before spatialization
      spec.sources.push_back(std::move(src));
    }
    if (noise_snr_db) spec.diffuse_noise = DiffuseNoiseSpec{*noise_snr_db};
    scenes.push_back(std::move(spec));
  }
  return scenes;
}

std::string EvalReport::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["per_policy"] = json::object();
  for (const auto& [name, agg] : per_policy) {
    json a;
    a["total_sources"] = agg.total_sources;
    a["total_correct"] = agg.total_correct;
    a["total_front_back"] = agg.total_front_back;
    a["failed_scenes"] = agg.failed_scenes;
    a["accuracy"] = agg.accuracy();
    a["front_back_rate"] = agg.front_back_rate();
    a["histogram_bin_width_deg"] = 20;
    a["sources_per_bin"] = agg.sources_per_bin;
    a["errors_per_bin"] = agg.errors_per_bin;
    a["front_back_per_bin"] = agg.front_back_per_bin;
    j["per_policy"][name] = a;
  }
  j["scenes"] = json::array();
  for (const auto& row : rows) {
    json r;
    r["scene_id"] = row.scene_id;
    r["condition"] = row.condition;
    r["policy"] = row.policy;
    r["n_sources"] = row.n_sources;
    r["true_az"] = row.true_az;
    r["est_az"] = row.est_az;
    r["n_correct"] = row.n_correct;
    r["n_front_back"] = row.n_front_back;
    if (row.failed) r["error"] = row.error;
    j["scenes"].push_back(r);
  }
  return j.dump(2);
}

namespace {

std::string join_degrees(const std::vector<double>& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ';';
    out << values[i];
  }
  return out.str();
}

}  // namespace

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "scene_id,condition,policy,n_sources,true_az,est_az,n_correct,n_front_back\n";
  for (const auto& row : rows) {
    out << row.scene_id << ',' << row.condition << ',' << row.policy << ',' << row.n_sources
        << ',' << join_degrees(row.true_az) << ',' << join_degrees(row.est_az) << ','
        << row.n_correct << ',' << row.n_front_back << '\n';
  }
  return out.str();
}

void write_report(const EvalReport& report, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir + "/report.json", std::ios::trunc);
    if (!out) throw IoError("write_report: cannot write report.json in " + dir);
    out << report.to_json() << "\n";
  }
  std::ofstream out(dir + "/report.csv", std::ios::trunc);
  if (!out) throw IoError("write_report: cannot write report.csv in " + dir);
  out << report.to_csv();
}

}  // namespace binloc
