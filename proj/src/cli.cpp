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

#include "binloc/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "binloc/eval.hpp"
#include "binloc/material.hpp"
#include "binloc/mct.hpp"
#include "binloc/rng.hpp"
#include "binloc/threading.hpp"

namespace binloc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kRate = 16000;

/// Staging directory that becomes `final_path` only on commit, so partial
/// runs never leave a half-written output behind.
class OutputDir {
 public:
  explicit OutputDir(std::string final_path) : final_(std::move(final_path)) {
    if (final_.empty()) throw InvalidArgument("--out is required");
    if (fs::exists(final_))
      throw InvalidArgument("output path already exists: " + final_);
    staging_ = final_ + ".tmp";
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  ~OutputDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }
  const std::string& path() const { return staging_; }
  void commit() {
    fs::rename(staging_, final_);
    committed_ = true;
  }

 private:
  std::string final_, staging_;
  bool committed_ = false;
};

void record_config(const std::string& dir, const json& config) {
  std::ofstream out(dir + "/config.json", std::ios::trunc);
  if (!out) throw IoError("cannot record config in " + dir);
  out << config.dump(2) << "\n";
}

struct Options {
  std::uint64_t seed = 0;
  int threads = 0;

  struct {
    std::string out;
    double radius = 0.0875;
    double speed = 343.0;
    double asymmetry = 0.3;
    int rate = kRate;
  } gen;

  struct {
    std::string catalog;
    std::string material = "builtin";
    std::string out;
    int sentences = 10;
    int material_pool = 30;
    double duration = 0.25;
    std::vector<double> snrs{20.0, 10.0, 0.0};
    bool clean = false;
  } mct;

  struct {
    std::string features;
    std::string out;
    std::string model = "dnn";
    std::string layout = "ccf_ild";
  } train;

  struct {
    std::string model;
    std::string input;
    std::string scene;
    std::string catalog;
    std::string policy = "none";
    int sources = 1;
    bool frontal = false;
  } loc;

  struct {
    std::string config;
    std::string out;
  } eval;
};

int cmd_gen_catalog(const Options& opt) {
  SphericalHeadParams params;
  params.head_radius_m = opt.gen.radius;
  params.sound_speed_m_s = opt.gen.speed;
  params.shadow_asymmetry = opt.gen.asymmetry;
  const HrirCatalog catalog =
      compensate_levels(generate_spherical_catalog(params, opt.gen.rate));

  OutputDir out(opt.gen.out);
  save_catalog(catalog, out.path());
  record_config(out.path(), json{{"command", "gen-catalog"},
                                 {"radius_m", opt.gen.radius},
                                 {"speed_m_s", opt.gen.speed},
                                 {"asymmetry", opt.gen.asymmetry},
                                 {"rate", opt.gen.rate},
                                 {"seed", opt.seed}});
  out.commit();
  std::cout << "catalog written to " << opt.gen.out << " (" << catalog.entries.size()
            << " azimuths)\n";
  return 0;
}

std::vector<MonoSignal> load_material(const Options& opt) {
  if (opt.mct.material == "builtin")
    return builtin_material(opt.mct.material_pool, opt.mct.duration, kRate, opt.seed);
  if (opt.mct.material == "builtin-mixed")
    return builtin_material(opt.mct.material_pool, opt.mct.duration, kRate, opt.seed, true);
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(opt.mct.material))
    if (entry.path().extension() == ".wav") paths.push_back(entry.path().string());
  if (paths.empty()) throw InvalidArgument("no .wav files in " + opt.mct.material);
  std::sort(paths.begin(), paths.end());
  std::vector<MonoSignal> material;
  for (const auto& p : paths) material.push_back(resample(read_wav_mono(p), kRate));
  return material;
}

int cmd_build_mct(const Options& opt) {
  const HrirCatalog catalog = load_catalog(opt.mct.catalog, kRate);
  const std::vector<MonoSignal> material = load_material(opt);

  MctConfig cfg;
  cfg.snrs_db = opt.mct.snrs;
  cfg.clean_only = opt.mct.clean;
  cfg.sentences_per_azimuth = opt.mct.sentences;
  cfg.seed = opt.seed;
  const TrainingSet set = build_training_set(material, catalog, cfg);

  OutputDir out(opt.mct.out);
  write_training_set(out.path(), set, cfg);
  record_config(out.path(), json{{"command", "build-mct"},
                                 {"catalog", opt.mct.catalog},
                                 {"material", opt.mct.material},
                                 {"material_pool", opt.mct.material_pool},
                                 {"sentences_per_azimuth", opt.mct.sentences},
                                 {"duration_s", opt.mct.duration},
                                 {"snrs_db", opt.mct.snrs},
                                 {"clean_only", opt.mct.clean},
                                 {"seed", opt.seed}});
  out.commit();
  std::size_t total = 0;
  for (const auto& band : set.bands) total += band.cells.size();
  std::cout << "training set written to " << opt.mct.out << " (" << total << " cells)\n";
  return 0;
}

int cmd_train(const Options& opt) {
  const TrainingSet set = read_training_set(opt.train.features);
  const FeatureLayout layout = layout_from_name(opt.train.layout);
  const int dims = layout_dims(layout);
  const int threads = default_threads(opt.threads);

  ModelBundle bundle;
  bundle.layout = layout;
  bundle.num_bands = set.num_bands;

  if (opt.train.model == "dnn" || opt.train.model == "mlp") {
    bundle.model_type = "mlp";
    bundle.mlp_bands.resize(set.num_bands);
    TrainSchedule schedule;
    schedule.require_all_classes = true;
    parallel_for(set.num_bands, threads, [&](std::size_t f) {
      Dataset data;
      data.dims = dims;
      std::vector<double> x(dims);
      std::vector<float> xf(dims);
      for (std::size_t i = 0; i < set.bands[f].cells.size(); ++i) {
        layout_extract(layout, set.bands[f].cells[i], x.data());
        for (int j = 0; j < dims; ++j) xf[j] = static_cast<float>(x[j]);
        data.push(xf.data(), AzimuthGrid::index_of(set.bands[f].labels_deg[i]));
      }
      bundle.mlp_bands[f] = mlp_train(data, schedule, opt.seed, static_cast<int>(f));
      std::cout << "band " << f << " trained (" << data.size() << " frames)\n";
    });
  } else if (opt.train.model == "gmm") {
    bundle.model_type = "gmm";
    if (layout == FeatureLayout::ccf)
      throw InvalidArgument("GMM supports itd_ild or ccf_ild layouts");
    bundle.gmm_bands.resize(set.num_bands);
    parallel_for(set.num_bands, threads, [&](std::size_t f) {
      std::vector<std::vector<double>> per_az(AzimuthGrid::kCount);
      std::vector<double> x(dims);
      for (std::size_t i = 0; i < set.bands[f].cells.size(); ++i) {
        layout_extract(layout, set.bands[f].cells[i], x.data());
        auto& flat = per_az[AzimuthGrid::index_of(set.bands[f].labels_deg[i])];
        flat.insert(flat.end(), x.begin(), x.end());
      }
      bundle.gmm_bands[f] = gmm_train(per_az, dims, 16, opt.seed, static_cast<int>(f));
      std::cout << "band " << f << " trained (GMM)\n";
    });
  } else {
    throw InvalidArgument("unknown model '" + opt.train.model + "' (dnn or gmm)");
  }

  OutputDir out(opt.train.out);
  bundle.save(out.path());
  record_config(out.path(), json{{"command", "train"},
                                 {"features", opt.train.features},
                                 {"model", opt.train.model},
                                 {"layout", opt.train.layout},
                                 {"seed", opt.seed},
                                 {"threads", threads}});
  out.commit();
  std::cout << "model written to " << opt.train.out << "\n";
  return 0;
}

int cmd_localize(const Options& opt) {
  const ModelBundle models = ModelBundle::load(opt.loc.model);
  LocalizeOptions opts;
  opts.n_sources = opt.loc.sources;
  opts.policy = opt.loc.policy == "rotate" ? Policy::random_rotation : Policy::no_movement;
  opts.seed = opt.seed;
  if (opt.loc.frontal) opts.report_mask_bins = frontal_mask_bins();

  LocalizationResult result;
  if (!opt.loc.scene.empty()) {
    SceneSpec spec = load_scene(opt.loc.scene);
    const std::string catalog_dir =
        !opt.loc.catalog.empty() ? opt.loc.catalog : spec.catalog_ref;
    if (catalog_dir.empty())
      throw InvalidArgument("scene localization needs --catalog or a catalog_ref in the scene");
    const HrirCatalog catalog = load_catalog(catalog_dir, kRate);
    SimulatedScene scene(spec, catalog);
    result = localize(scene, models, opts);
  } else if (!opt.loc.input.empty()) {
    BinauralSignal signal = resample(read_wav_binaural(opt.loc.input), kRate);
    opts.segment_s = std::min(opts.segment_s, signal.duration_s());
    result = localize_signal(signal, models, opts);
  } else {
    throw InvalidArgument("localize needs --scene or --input");
  }

  json j = json::parse(result.to_json());
  j["policy_fallback"] = opts.fell_back_to_no_movement;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_evaluate(const Options& opt) {
  std::ifstream in(opt.eval.config);
  if (!in) throw IoError("cannot open " + opt.eval.config);
  json cfg_json;
  try {
    in >> cfg_json;
  } catch (const json::exception& e) {
    throw IoError("bad evaluation config: " + std::string(e.what()));
  }

  EvalConfig cfg;
  cfg.accuracy_threshold_deg = cfg_json.value("threshold_deg", 5.0);
  cfg.front_back_window_deg = cfg_json.value("front_back_window_deg", 20.0);
  cfg.frontal_only = cfg_json.value("frontal_only", false);
  cfg.condition = cfg_json.value("condition", "default");
  cfg.seed = cfg_json.value("seed", opt.seed);
  cfg.policies.clear();
  for (const auto& name : cfg_json.value("policies", std::vector<std::string>{"no_movement"}))
    cfg.policies.push_back({name, name == "rotate" ? Policy::random_rotation
                                                   : Policy::no_movement});

  if (cfg_json.contains("scenes")) {
    for (const auto& s : cfg_json.at("scenes"))
      cfg.scenes.push_back(scene_from_json(s.dump()));
  } else if (cfg_json.contains("generate")) {
    const auto& g = cfg_json.at("generate");
    std::optional<double> snr;
    if (g.contains("snr_db") && !g.at("snr_db").is_null()) snr = g.at("snr_db").get<double>();
    cfg.scenes = generate_scene_set(g.value("count", 50), g.value("sources", 1),
                                    g.value("frontal", false), g.value("duration_s", 1.0),
                                    cfg.seed, snr);
  } else {
    throw InvalidArgument("evaluation config needs 'scenes' or 'generate'");
  }
  for (const auto& scene : cfg.scenes) {
    std::vector<double> az;
    for (const auto& src : scene.sources) az.push_back(src.azimuth_deg);
    cfg.true_azimuths.push_back(az);
  }

  const ModelBundle models = ModelBundle::load(cfg_json.at("model").get<std::string>());
  const HrirCatalog catalog = load_catalog(cfg_json.at("catalog").get<std::string>(), kRate);
  const EvalReport report = run_experiment(cfg, models, catalog);

  OutputDir out(opt.eval.out);
  write_report(report, out.path());
  cfg_json["command"] = "evaluate";
  record_config(out.path(), cfg_json);
  out.commit();

  for (const auto& [name, agg] : report.per_policy)
    std::cout << name << ": accuracy " << agg.accuracy() << ", front-back rate "
              << agg.front_back_rate() << " (" << agg.total_sources << " sources)\n";
  std::cout << "report written to " << opt.eval.out << "\n";
  return 0;
}

std::unique_ptr<CLI::App> build_app(Options& opt) {
  auto app = std::make_unique<CLI::App>("binaural sound source localization toolkit", "binloc");
  app->require_subcommand(1);
  app->fallthrough();  // global flags may follow the subcommand
  app->add_option("--seed", opt.seed, "master random seed (runs are bit-reproducible per seed)");
  app->add_option("--threads", opt.threads,
                  "worker threads (default: BINLOC_THREADS or hardware concurrency)");

  auto* gen = app->add_subcommand("gen-catalog", "synthesize a spherical-head HRIR catalog");
  gen->add_option("--out", opt.gen.out, "output catalog directory")->required();
  gen->add_option("--radius", opt.gen.radius, "head radius in meters");
  gen->add_option("--speed", opt.gen.speed, "speed of sound in m/s");
  gen->add_option("--asymmetry", opt.gen.asymmetry, "front/back ILD asymmetry in [0,1]");
  gen->add_option("--rate", opt.gen.rate, "catalog sample rate in Hz");

  auto* mct = app->add_subcommand("build-mct", "build a multi-conditional training set");
  mct->add_option("--catalog", opt.mct.catalog, "HRIR catalog directory")->required();
  mct->add_option("--out", opt.mct.out, "output feature directory")->required();
  mct->add_option("--material", opt.mct.material,
                  "'builtin' (noise bursts), 'builtin-mixed' (adds harmonic tones), or a "
                  "directory of WAV sentences");
  mct->add_option("--sentences", opt.mct.sentences, "sentences per azimuth");
  mct->add_option("--material-pool", opt.mct.material_pool, "builtin material pool size");
  mct->add_option("--duration", opt.mct.duration, "builtin sentence duration in seconds");
  mct->add_option("--snrs", opt.mct.snrs, "mixing SNRs in dB")->delimiter(',');
  mct->add_flag("--clean", opt.mct.clean, "clean training mode (no diffuse noise)");

  auto* train = app->add_subcommand("train", "train per-band azimuth classifiers");
  train->add_option("--features", opt.train.features, "feature directory from build-mct")
      ->required();
  train->add_option("--out", opt.train.out, "output model directory")->required();
  train->add_option("--model", opt.train.model, "dnn or gmm");
  train->add_option("--layout", opt.train.layout, "feature layout: ccf_ild, ccf or itd_ild");

  auto* loc = app->add_subcommand("localize", "localize sources in a scene or recording");
  loc->add_option("--model", opt.loc.model, "trained model directory")->required();
  loc->add_option("--input", opt.loc.input, "binaural WAV recording (no-movement only)");
  loc->add_option("--scene", opt.loc.scene, "scene JSON (enables head rotation)");
  loc->add_option("--catalog", opt.loc.catalog, "catalog override for scene rendering");
  loc->add_option("--sources", opt.loc.sources, "number of active sources (known a priori)");
  loc->add_option("--policy", opt.loc.policy, "none or rotate");
  loc->add_flag("--frontal", opt.loc.frontal, "restrict reporting to the frontal hemifield");

  auto* eval = app->add_subcommand("evaluate", "run a scene-batch evaluation");
  eval->add_option("--config", opt.eval.config, "evaluation config JSON")->required();
  eval->add_option("--out", opt.eval.out, "output report directory")->required();

  return app;
}

}  // namespace

std::string help_text() {
  Options opt;
  auto app = build_app(opt);
  std::string text = app->help();
  for (const CLI::App* sub : app->get_subcommands({}))
    text += "\n" + sub->help();
  return text;
}

int run(int argc, const char* const* argv) {
  Options opt;
  auto app = build_app(opt);
  try {
    app->parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << help_text();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (app->got_subcommand("gen-catalog")) return cmd_gen_catalog(opt);
    if (app->got_subcommand("build-mct")) return cmd_build_mct(opt);
    if (app->got_subcommand("train")) return cmd_train(opt);
    if (app->got_subcommand("localize")) return cmd_localize(opt);
    if (app->got_subcommand("evaluate")) return cmd_evaluate(opt);
    std::cerr << "usage error: no subcommand\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace binloc::cli
