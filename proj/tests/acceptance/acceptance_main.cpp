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

// Acceptance suite: one pass/fail line per criterion.
//
//   --fast  criteria 1, 2, 3, 8, 9 (oracle and metric checks, seconds)
//   --full  criteria 4, 5, 6, 7 (desk-scale training runs, tens of minutes)
//
// Without a flag both groups run. Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "binloc/eval.hpp"
#include "binloc/material.hpp"
#include "binloc/mct.hpp"
#include "binloc/rng.hpp"
#include "binloc/threading.hpp"

using namespace binloc;

namespace {

constexpr int kRate = 16000;
constexpr std::uint64_t kSuiteSeed = 20260808;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// --- criterion 1: front-end oracle suite -----------------------------------

double oracle_ccf(const MonoSignal& l, const MonoSignal& r, std::size_t start, int len, int lag) {
  double el = 0.0, er = 0.0, acc = 0.0;
  for (int i = 0; i < len; ++i) {
    el += l.samples[start + i] * l.samples[start + i];
    er += r.samples[start + i] * r.samples[start + i];
  }
  for (int i = 0; i < len; ++i) {
    const int j = i + lag;
    if (j < 0 || j >= len) continue;
    acc += l.samples[start + i] * r.samples[start + j];
  }
  return acc / std::sqrt(el * er);
}

int oracle_peak_lag(const MonoSignal& l, const MonoSignal& r, std::size_t start, int len,
                    int max_lag) {
  int best_lag = 0;
  double best = -2.0;
  for (int m = 0; m <= max_lag; ++m) {
    for (int lag : {-m, m}) {
      const double v = oracle_ccf(l, r, start, len, lag);
      if (v > best) {
        best = v;
        best_lag = lag;
      }
      if (m == 0) break;
    }
  }
  return best_lag;
}

Outcome criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  const FrameConfig fr;
  const int len = fr.frame_len(kRate);
  const int max_lag = fr.max_lag(kRate);
  Rng rng(derive_seed(kSuiteSeed, 1));
  int checked = 0;
  for (int pair = 0; pair < 1000; ++pair) {
    MonoSignal l, r;
    l.sample_rate_hz = r.sample_rate_hz = kRate;
    l.samples.resize(560);
    r.samples.resize(560);
    for (double& v : l.samples) v = rng.normal();
    for (double& v : r.samples) v = rng.normal();
    if (pair % 3 == 0) {
      // Correlated pair with a random delay to exercise off-center peaks.
      const int d = static_cast<int>(rng.below(2 * max_lag + 1)) - max_lag;
      for (std::size_t i = 0; i < r.samples.size(); ++i) {
        const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) - d;
        const double base =
            (j >= 0 && j < static_cast<std::ptrdiff_t>(l.samples.size())) ? l.samples[j] : 0.0;
        r.samples[i] = base + 0.2 * r.samples[i];
      }
    }
    const std::size_t start = rng.below(560 - len);
    const CcfFrame fwd = ccf_frame(l, r, start, fr);
    const CcfFrame rev = ccf_frame(r, l, start, fr);
    if (fwd.silent) return {false, "unexpected silent frame"};
    for (int j = 0; j < kCcfDims; ++j) {
      if (fwd.values[j] < -1.0 || fwd.values[j] > 1.0)
        return {false, "CCF value outside [-1,1] at pair " + std::to_string(pair)};
      if (fwd.values[j] != rev.values[kCcfDims - 1 - j])
        return {false, "L/R swap did not reverse the lag axis at pair " + std::to_string(pair)};
    }
    if (fwd.peak_lag_samples != oracle_peak_lag(l, r, start, len, max_lag))
      return {false, "ITD differs from brute-force argmax at pair " + std::to_string(pair)};
    ++checked;
  }
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (sec >= 60.0) return {false, "exceeded the 1 minute budget"};
  return {true, std::to_string(checked) + " random pairs within the 1 minute budget"};
}

// --- criterion 2: gradient check --------------------------------------------

Outcome criterion_2() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(derive_seed(kSuiteSeed, 2));
  double worst = 0.0;
  for (int config = 0; config < 20; ++config) {
    const int in = 3 + static_cast<int>(rng.below(10));
    const int hidden = 4 + static_cast<int>(rng.below(12));
    const int out = 3 + static_cast<int>(rng.below(10));
    std::vector<int> sizes = {in, hidden, out};
    if (config % 2 == 1) sizes.insert(sizes.begin() + 2, 4 + static_cast<int>(rng.below(12)));

    MlpBandModel m;
    m.num_classes = sizes.back();
    m.normalizer.mean.assign(in, 0.0);
    m.normalizer.std.assign(in, 1.0);
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
      DenseLayer layer;
      layer.in = sizes[k];
      layer.out = sizes[k + 1];
      layer.w.resize(static_cast<std::size_t>(layer.in) * layer.out);
      layer.b.resize(layer.out);
      for (double& v : layer.w) v = rng.uniform(-0.8, 0.8);
      for (double& v : layer.b) v = rng.uniform(-0.3, 0.3);
      m.layers.push_back(std::move(layer));
    }

    std::vector<std::vector<double>> inputs(5, std::vector<double>(in));
    std::vector<int> labels(5);
    for (auto& x : inputs)
      for (double& v : x) v = rng.uniform(-1.5, 1.5);
    for (int& l : labels) l = static_cast<int>(rng.below(sizes.back()));

    const MlpGradients grads = mlp_gradient(m, inputs, labels);
    const double eps = 1e-5;
    for (std::size_t layer = 0; layer < m.layers.size(); ++layer) {
      double num = 0.0, den = 0.0;
      auto probe = [&](std::vector<double>& params, const std::vector<double>& g) {
        for (std::size_t j = 0; j < params.size(); ++j) {
          const double saved = params[j];
          params[j] = saved + eps;
          const double up = mlp_loss(m, inputs, labels);
          params[j] = saved - eps;
          const double down = mlp_loss(m, inputs, labels);
          params[j] = saved;
          const double fd = (up - down) / (2.0 * eps);
          num += (fd - g[j]) * (fd - g[j]);
          den += fd * fd + g[j] * g[j];
        }
      };
      probe(m.layers[layer].w, grads.layers[layer].w);
      probe(m.layers[layer].b, grads.layers[layer].b);
      const double rel_err = std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
      worst = std::max(worst, rel_err);
      if (rel_err >= 1e-4)
        return {false, "config " + std::to_string(config) + " layer " + std::to_string(layer) +
                           " relative error " + std::to_string(rel_err)};
    }
  }
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (sec >= 60.0) return {false, "exceeded the 1 minute budget"};
  char buf[80];
  std::snprintf(buf, sizeof buf, "20 configurations, worst relative error %.2e", worst);
  return {true, buf};
}

// --- criterion 3: EM monotonicity -------------------------------------------

Outcome criterion_3() {
  Rng rng(derive_seed(kSuiteSeed, 3));
  for (int dataset = 0; dataset < 50; ++dataset) {
    const int dims = 1 + static_cast<int>(rng.below(3));
    const int modes = 1 + static_cast<int>(rng.below(4));
    const std::size_t per = 60 + rng.below(120);
    std::vector<double> data;
    for (int mode = 0; mode < modes; ++mode) {
      std::vector<double> center(dims);
      for (double& c : center) c = rng.uniform(-6.0, 6.0);
      const double spread = rng.uniform(0.3, 1.5);
      for (std::size_t i = 0; i < per; ++i)
        for (int j = 0; j < dims; ++j) data.push_back(center[j] + spread * rng.normal());
    }
    const std::size_t n = data.size() / dims;
    const EmFitResult fit = fit_mixture(data, n, dims, 16, 15, 5, rng.next_u64());
    for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i) {
      if (fit.log_likelihood[i] < fit.log_likelihood[i - 1] - 1e-8) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "dataset %d: LL dropped %.3e at step %zu", dataset,
                      fit.log_likelihood[i - 1] - fit.log_likelihood[i], i);
        return {false, buf};
      }
    }
  }
  return {true, "50 seeded datasets, slack 1e-8"};
}

// --- criteria 8 and 9: resolver scenario and metric examples -----------------

Outcome criterion_8() {
  AzimuthPosterior p1, p2;
  p1.probs.fill(0.0);
  p2.probs.fill(0.0);
  p1.num_frames = p2.num_frames = 1;
  p1.probs[AzimuthGrid::index_of(60)] = 0.5;
  p1.probs[AzimuthGrid::index_of(120)] = 0.5;
  p2.probs[AzimuthGrid::index_of(30)] = 1.0;

  for (int repeat = 0; repeat < 2; ++repeat) {
    const LocalizationResult r = resolve_with_rotation(p1, p2, 30.0, 1);
    if (r.azimuths_world_deg != std::vector<double>{60.0})
      return {false, "expected exactly {60}"};
    if (r.phantoms_world_deg != std::vector<double>{120.0})
      return {false, "expected 120 flagged as phantom"};
    if (r.low_confidence) return {false, "unexpected low-confidence flag"};
  }
  return {true, "phantom at 120 eliminated, source at 60 kept (deterministic)"};
}

Outcome criterion_9() {
  if (angular_distance(355.0, 0.0) != 5.0) return {false, "wraparound distance"};
  if (angular_distance(42.0, 42.0) != 0.0) return {false, "identity distance"};
  if (angular_distance(90.0, 270.0) != 180.0) return {false, "antipodal distance"};
  for (int az : AzimuthGrid::values())
    if (mirror_azimuth(mirror_azimuth(az)) != az) return {false, "mirror involution"};
  if (mirror_azimuth(30.0) != 150.0) return {false, "mirror of 30"};
  if (!is_front_back_error(30.0, 150.0)) return {false, "exact mirror not flagged"};
  if (!is_front_back_error(30.0, 135.0)) return {false, "mirror window not applied"};
  if (is_front_back_error(30.0, 100.0)) return {false, "spurious front-back flag"};

  SceneResult row;
  row.true_az = {-50.0, -30.0, 15.0};
  row.est_az = {-50.0, -30.0, 20.0};
  score_scene(row, 5.0, 20.0);
  if (row.n_correct != 2)
    return {false,
            "three-talker example scored " + std::to_string(row.n_correct) + "/3, want 2/3"};
  row.est_az = row.true_az;
  score_scene(row, 5.0, 20.0);
  if (row.n_correct != 3) return {false, "exact match must be 3/3"};
  row.est_az = {77.0, 200.0, 290.0};
  score_scene(row, 5.0, 20.0);
  if (row.n_correct != 0) return {false, "gross misses must score 0"};
  return {true, "scoring examples, mirror geometry, wraparound distances exact"};
}

// --- desk-scale shared machinery ---------------------------------------------

ModelBundle train_bundle(const TrainingSet& set, FeatureLayout layout, std::uint64_t seed) {
  ModelBundle bundle;
  bundle.model_type = "mlp";
  bundle.layout = layout;
  bundle.num_bands = set.num_bands;
  bundle.mlp_bands.resize(set.num_bands);
  const int dims = layout_dims(layout);
  TrainSchedule schedule;
  schedule.require_all_classes = true;
  parallel_for(set.num_bands, default_threads(), [&](std::size_t f) {
    Dataset data;
    data.dims = dims;
    std::vector<double> x(dims);
    std::vector<float> xf(dims);
    for (std::size_t i = 0; i < set.bands[f].cells.size(); ++i) {
      layout_extract(layout, set.bands[f].cells[i], x.data());
      for (int j = 0; j < dims; ++j) xf[j] = static_cast<float>(x[j]);
      data.push(xf.data(), AzimuthGrid::index_of(set.bands[f].labels_deg[i]));
    }
    bundle.mlp_bands[f] = mlp_train(data, schedule, seed, static_cast<int>(f));
  });
  return bundle;
}

struct SceneScore {
  int correct = 0;
  int front_back = 0;
  int total = 0;
};

/// No-movement scoring of a scene set for several models sharing one feature
/// extraction per scene.
std::vector<SceneScore> score_scene_set(const std::vector<SceneSpec>& scenes,
                                        const std::vector<const ModelBundle*>& models,
                                        const HrirCatalog& catalog) {
  std::vector<SceneScore> scores(models.size());
  const FilterbankConfig fb;
  const FrameConfig fr;
  for (const auto& scene : scenes) {
    const BinauralSignal segment = central_segment(mix_scene(scene, catalog), 1.0);
    const FeatureGrid grid = extract_features(segment, fb, fr);
    std::vector<double> truths;
    for (const auto& src : scene.sources) truths.push_back(src.azimuth_deg);
    for (std::size_t m = 0; m < models.size(); ++m) {
      const AzimuthPosterior post = block_posterior(grid, *models[m], 0, grid.num_frames);
      std::vector<double> est;
      for (int bin : pick_sources(post, static_cast<int>(truths.size())))
        est.push_back(AzimuthGrid::azimuth_of(bin));
      SceneResult row;
      row.true_az = truths;
      row.est_az = est;
      score_scene(row, 5.0, 20.0);
      scores[m].correct += row.n_correct;
      scores[m].front_back += row.n_front_back;
      scores[m].total += static_cast<int>(truths.size());
    }
  }
  return scores;
}

// Desk-scale corpus shared across the full criteria.
struct DeskScale {
  std::vector<MonoSignal> material;
  HrirCatalog catalog_asym;  // shadow_asymmetry 0.3
  HrirCatalog catalog_sym;   // shadow_asymmetry 0 (maximally front-back ambiguous)

  DeskScale() {
    material = builtin_material(30, 0.25, kRate, derive_seed(kSuiteSeed, 100));
    SphericalHeadParams asym;
    asym.shadow_asymmetry = 0.3;
    catalog_asym = compensate_levels(generate_spherical_catalog(asym, kRate));
    SphericalHeadParams sym;
    sym.shadow_asymmetry = 0.0;
    catalog_sym = compensate_levels(generate_spherical_catalog(sym, kRate));
  }

  TrainingSet dataset(const HrirCatalog& catalog, bool clean) const {
    MctConfig cfg;
    cfg.clean_only = clean;
    cfg.sentences_per_azimuth = 10;
    cfg.seed = derive_seed(kSuiteSeed, clean ? 101 : 102);
    return build_training_set(material, catalog, cfg);
  }
};

// --- criterion 4: desk-scale single-source accuracy --------------------------

Outcome criterion_4(const ModelBundle& mct_model, const DeskScale& desk) {
  EvalConfig cfg;
  cfg.scenes = generate_scene_set(50, 1, /*frontal=*/true, 1.1, derive_seed(kSuiteSeed, 104));
  for (const auto& scene : cfg.scenes) {
    std::vector<double> az;
    for (const auto& src : scene.sources) az.push_back(src.azimuth_deg);
    cfg.true_azimuths.push_back(az);
  }
  cfg.frontal_only = true;
  cfg.condition = "anechoic-frontal";
  cfg.seed = derive_seed(kSuiteSeed, 105);

  const EvalReport report = run_experiment(cfg, mct_model, desk.catalog_asym);
  const PolicyAggregate& agg = report.per_policy.at("no_movement");
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "accuracy %.1f%% on 50 frontal single-source scenes (want >= 98%%)",
                100.0 * agg.accuracy());
  return {agg.failed_scenes == 0 && agg.accuracy() >= 0.98, buf};
}

// --- criterion 5: head-movement benefit --------------------------------------

Outcome criterion_5(const DeskScale& desk) {
  ModelBundle model;
  {
    const TrainingSet set = desk.dataset(desk.catalog_sym, false);
    model = train_bundle(set, FeatureLayout::ccf_ild, derive_seed(kSuiteSeed, 106));
  }

  EvalConfig cfg;
  cfg.scenes = generate_scene_set(50, 1, /*frontal=*/false, 1.1, derive_seed(kSuiteSeed, 107));
  for (const auto& scene : cfg.scenes) {
    std::vector<double> az;
    for (const auto& src : scene.sources) az.push_back(src.azimuth_deg);
    cfg.true_azimuths.push_back(az);
  }
  cfg.policies = {{"no_movement", Policy::no_movement}, {"rotate", Policy::random_rotation}};
  cfg.condition = "symmetric-360";
  cfg.seed = derive_seed(kSuiteSeed, 108);

  const EvalReport report = run_experiment(cfg, model, desk.catalog_sym);
  const PolicyAggregate& still = report.per_policy.at("no_movement");
  const PolicyAggregate& moved = report.per_policy.at("rotate");
  const int fb_still = still.total_front_back;
  const int fb_moved = moved.total_front_back;
  const int err_still = still.total_sources - still.total_correct;
  const int err_moved = moved.total_sources - moved.total_correct;

  char buf[192];
  std::snprintf(buf, sizeof buf,
                "front-back errors %d -> %d, total errors %d -> %d over 50 scenes "
                "(want >= 80%% fewer front-back, <= +1 total)",
                fb_still, fb_moved, err_still, err_moved);
  const bool pass = fb_still > 0 && fb_moved <= 0.2 * fb_still && err_moved <= err_still + 1 &&
                    still.failed_scenes == 0 && moved.failed_scenes == 0;
  return {pass, buf};
}

// --- criterion 6: MCT benefit -------------------------------------------------

Outcome criterion_6(const ModelBundle& mct_model, const DeskScale& desk) {
  ModelBundle clean_model;
  {
    const TrainingSet set = desk.dataset(desk.catalog_asym, true);
    clean_model = train_bundle(set, FeatureLayout::ccf_ild, derive_seed(kSuiteSeed, 109));
  }

  std::string detail;
  bool pass = true;
  for (int n = 1; n <= 3; ++n) {
    const auto scenes = generate_scene_set(50, n, /*frontal=*/false, 1.1,
                                           derive_seed(kSuiteSeed, 110, n), /*noise_snr_db=*/0.0);
    const auto scores = score_scene_set(scenes, {&mct_model, &clean_model}, desk.catalog_asym);
    const double acc_mct = static_cast<double>(scores[0].correct) / scores[0].total;
    const double acc_clean = static_cast<double>(scores[1].correct) / scores[1].total;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d-source: MCT %.1f%% vs clean %.1f%%; ", n, 100.0 * acc_mct,
                  100.0 * acc_clean);
    detail += buf;
    if (acc_mct < acc_clean) pass = false;
    if (n >= 2 && acc_mct <= acc_clean) pass = false;  // strict on 2- and 3-source sets
  }
  return {pass, detail + "(0 dB diffuse noise)"};
}

// --- criterion 7: ILD contribution --------------------------------------------

Outcome criterion_7(const ModelBundle& mct_model, const TrainingSet& mct_set,
                    const DeskScale& desk) {
  const ModelBundle ccf_only =
      train_bundle(mct_set, FeatureLayout::ccf, derive_seed(kSuiteSeed, 111));

  const auto scenes =
      generate_scene_set(50, 1, /*frontal=*/false, 1.1, derive_seed(kSuiteSeed, 112));
  const auto scores = score_scene_set(scenes, {&mct_model, &ccf_only}, desk.catalog_asym);
  char buf[128];
  std::snprintf(
      buf, sizeof buf,
      "front-back errors: CCF+ILD %d vs CCF-only %d over 50 scenes (want strictly fewer)",
      scores[0].front_back, scores[1].front_back);
  return {scores[0].front_back < scores[1].front_back, buf};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  bool fast = true, full = true;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--fast") == 0) full = false;
    if (std::strcmp(argv[i], "--full") == 0) fast = false;
  }

  int failures = 0;
  auto run_one = [&](const Criterion& c) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d (%.1fs): %s -- %s\n", outcome.pass ? "PASS" : "FAIL", c.id, sec,
                c.name, outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  };

  if (fast) {
    run_one({1, "front-end oracle suite (CCF bounds, ITD argmax, L/R swap)", criterion_1});
    run_one({2, "MLP gradient check vs central finite differences", criterion_2});
    run_one({3, "GMM EM log-likelihood monotonicity", criterion_3});
    run_one({8, "head-rotation resolver on the constructed 60/120 scenario", criterion_8});
    run_one({9, "metric unit examples", criterion_9});
  }

  if (full) {
    // Desk-scale corpus plus the shared MCT-trained CCF+ILD model
    // (criteria 4, 6 and 7 all consume it).
    const auto t0 = std::chrono::steady_clock::now();
    DeskScale desk;
    TrainingSet mct_set = desk.dataset(desk.catalog_asym, false);
    ModelBundle mct_model =
        train_bundle(mct_set, FeatureLayout::ccf_ild, derive_seed(kSuiteSeed, 103));
    const double setup_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("setup: desk-scale corpus + MCT model trained in %.0fs "
                "(10 sentences/azimuth, SNRs 20/10/0 dB)\n",
                setup_s);
    std::fflush(stdout);

    run_one({4, "desk-scale single-source frontal accuracy",
             [&] { return criterion_4(mct_model, desk); }});
    run_one({5, "head-movement benefit on the symmetric catalog",
             [&] { return criterion_5(desk); }});
    run_one({6, "MCT benefit over clean training at 0 dB SNR",
             [&] { return criterion_6(mct_model, desk); }});
    run_one({7, "ILD contribution to front-back discrimination",
             [&] { return criterion_7(mct_model, mct_set, desk); }});
  }

  std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
