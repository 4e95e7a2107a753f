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

#include "binloc/model_bundle.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "binloc/spatializer.hpp"

namespace binloc {

namespace fs = std::filesystem;
using nlohmann::json;

int layout_dims(FeatureLayout layout) {
  switch (layout) {
    case FeatureLayout::ccf_ild: return kFeatureDims;
    case FeatureLayout::ccf: return kCcfDims;
    case FeatureLayout::itd_ild: return 2;
  }
  throw InvalidArgument("unknown feature layout");
}

std::string layout_name(FeatureLayout layout) {
  switch (layout) {
    case FeatureLayout::ccf_ild: return "ccf_ild";
    case FeatureLayout::ccf: return "ccf";
    case FeatureLayout::itd_ild: return "itd_ild";
  }
  throw InvalidArgument("unknown feature layout");
}

FeatureLayout layout_from_name(const std::string& name) {
  if (name == "ccf_ild") return FeatureLayout::ccf_ild;
  if (name == "ccf") return FeatureLayout::ccf;
  if (name == "itd_ild") return FeatureLayout::itd_ild;
  throw InvalidArgument("unknown feature layout '" + name + "'");
}

void layout_extract(FeatureLayout layout, const FeatureFrame& cell, double* out) {
  switch (layout) {
    case FeatureLayout::ccf_ild:
      for (int j = 0; j < kFeatureDims; ++j) out[j] = cell.v[j];
      return;
    case FeatureLayout::ccf:
      for (int j = 0; j < kCcfDims; ++j) out[j] = cell.v[j];
      return;
    case FeatureLayout::itd_ild:
      out[0] = cell.itd_s;
      out[1] = cell.v[kCcfDims];
      return;
  }
  throw InvalidArgument("unknown feature layout");
}

std::vector<double> ModelBundle::band_posterior(int band, const FeatureFrame& cell) const {
  std::vector<double> x(layout_dims(layout));
  layout_extract(layout, cell, x.data());
  if (model_type == "mlp") return mlp_bands.at(band).forward(x);
  if (model_type == "gmm") return gmm_bands.at(band).posterior(x);
  throw InvalidArgument("model bundle has unknown type '" + model_type + "'");
}

// --- Binary band files ---

namespace {

constexpr std::uint32_t kMlpMagic = 0x4d4c5031;  // "MLP1"
constexpr std::uint32_t kGmmMagic = 0x474d4d31;  // "GMM1"

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

void put_vec(std::ofstream& out, const std::vector<double>& v) {
  put<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_vec(std::ifstream& in) {
  const auto n = get<std::uint64_t>(in);
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  return v;
}

// The band binaries carry only the weights; descriptive metadata (layer
// sizes, input normalizer, feature layout) lives in the JSON manifest.

void save_mlp_band(const std::string& path, const MlpBandModel& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  put(out, kMlpMagic);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.layers.size()));
  for (const auto& layer : m.layers) {
    put<std::int32_t>(out, layer.in);
    put<std::int32_t>(out, layer.out);
    put_vec(out, layer.w);
    put_vec(out, layer.b);
  }
  if (!out) throw IoError("write failed for " + path);
}

MlpBandModel load_mlp_band(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  if (get<std::uint32_t>(in) != kMlpMagic) throw IoError("bad MLP band file " + path);
  MlpBandModel m;
  const auto n_layers = get<std::uint32_t>(in);
  m.layers.resize(n_layers);
  for (auto& layer : m.layers) {
    layer.in = get<std::int32_t>(in);
    layer.out = get<std::int32_t>(in);
    layer.w = get_vec(in);
    layer.b = get_vec(in);
  }
  if (!in) throw IoError("truncated MLP band file " + path);
  return m;
}

void save_gmm_band(const std::string& path, const GmmBandModel& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  put(out, kGmmMagic);
  put<std::int32_t>(out, m.band);
  put<std::int32_t>(out, m.dims);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.per_azimuth.size()));
  for (const auto& mix : m.per_azimuth) {
    put<std::int32_t>(out, mix.num_components);
    put_vec(out, mix.weights);
    put_vec(out, mix.means);
    put_vec(out, mix.vars);
  }
  if (!out) throw IoError("write failed for " + path);
}

GmmBandModel load_gmm_band(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  if (get<std::uint32_t>(in) != kGmmMagic) throw IoError("bad GMM band file " + path);
  GmmBandModel m;
  m.band = get<std::int32_t>(in);
  m.dims = get<std::int32_t>(in);
  const auto n = get<std::uint32_t>(in);
  m.per_azimuth.resize(n);
  for (auto& mix : m.per_azimuth) {
    mix.dims = m.dims;
    mix.num_components = get<std::int32_t>(in);
    mix.weights = get_vec(in);
    mix.means = get_vec(in);
    mix.vars = get_vec(in);
  }
  if (!in) throw IoError("truncated GMM band file " + path);
  return m;
}

}  // namespace

void ModelBundle::save(const std::string& dir) const {
  fs::create_directories(dir);
  json manifest;
  manifest["format"] = "binloc-models-v1";
  manifest["model"] = model_type;
  manifest["feature_layout"] = layout_name(layout);
  manifest["num_bands"] = num_bands;
  manifest["grid_step_deg"] = AzimuthGrid::kStepDeg;
  manifest["bands"] = json::array();
  for (int b = 0; b < num_bands; ++b) {
    char name[32];
    std::snprintf(name, sizeof name, "band_%02d.bin", b);
    const std::string path = dir + "/" + name;
    json entry;
    entry["file"] = name;
    entry["band"] = b;
    if (model_type == "mlp") {
      const MlpBandModel& m = mlp_bands.at(b);
      json sizes = json::array();
      sizes.push_back(m.layers.front().in);
      for (const auto& layer : m.layers) sizes.push_back(layer.out);
      entry["layer_sizes"] = sizes;
      entry["normalizer"] = {{"mean", m.normalizer.mean}, {"std", m.normalizer.std}};
      entry["num_classes"] = m.num_classes;
      save_mlp_band(path, m);
    } else {
      const GmmBandModel& m = gmm_bands.at(b);
      entry["dims"] = m.dims;
      entry["num_azimuths"] = m.per_azimuth.size();
      save_gmm_band(path, m);
    }
    manifest["bands"].push_back(std::move(entry));
  }
  std::ofstream out(dir + "/manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in " + dir);
  out << manifest.dump(2) << "\n";
}

ModelBundle ModelBundle::load(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) throw IoError("cannot open " + dir + "/manifest.json");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw IoError("bad model manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "binloc-models-v1")
    throw IoError("unsupported model bundle format in " + dir);
  ModelBundle bundle;
  bundle.model_type = manifest.at("model").get<std::string>();
  bundle.layout = layout_from_name(manifest.at("feature_layout").get<std::string>());
  bundle.num_bands = manifest.at("num_bands").get<int>();
  for (const auto& entry : manifest.at("bands")) {
    const std::string path = dir + "/" + entry.at("file").get<std::string>();
    if (bundle.model_type == "mlp") {
      MlpBandModel m = load_mlp_band(path);
      m.band = entry.at("band").get<int>();
      m.num_classes = entry.at("num_classes").get<int>();
      m.normalizer.mean = entry.at("normalizer").at("mean").get<std::vector<double>>();
      m.normalizer.std = entry.at("normalizer").at("std").get<std::vector<double>>();
      if (m.normalizer.mean.size() != static_cast<std::size_t>(m.layers.front().in))
        throw IoError("normalizer/input dimension mismatch in " + path);
      bundle.mlp_bands.push_back(std::move(m));
    } else {
      GmmBandModel m = load_gmm_band(path);
      m.band = entry.at("band").get<int>();
      bundle.gmm_bands.push_back(std::move(m));
    }
  }
  return bundle;
}

}  // namespace binloc
