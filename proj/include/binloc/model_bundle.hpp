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

#ifndef BINLOC_MODEL_BUNDLE_HPP
#define BINLOC_MODEL_BUNDLE_HPP

#include <string>
#include <vector>

#include "binloc/frontend.hpp"
#include "binloc/gmm.hpp"
#include "binloc/mlp.hpp"

namespace binloc {

/// Which slice of the 34-dim front-end output a model consumes.
enum class FeatureLayout { ccf_ild, ccf, itd_ild };

int layout_dims(FeatureLayout layout);
std::string layout_name(FeatureLayout layout);
FeatureLayout layout_from_name(const std::string& name);
/// Copy the layout's feature slice of a cell into out (layout_dims values).
void layout_extract(FeatureLayout layout, const FeatureFrame& cell, double* out);

/// A trained localization model: 32 per-band classifiers plus the feature
/// layout they were trained on. Directory format: manifest.json + one
/// binary file per band, versioned.
struct ModelBundle {
  std::string model_type;  // "mlp" | "gmm"
  FeatureLayout layout = FeatureLayout::ccf_ild;
  int num_bands = 0;
  std::vector<MlpBandModel> mlp_bands;
  std::vector<GmmBandModel> gmm_bands;

  /// Posterior over the 72 azimuths from one band's feature cell.
  std::vector<double> band_posterior(int band, const FeatureFrame& cell) const;

  void save(const std::string& dir) const;
  static ModelBundle load(const std::string& dir);
};

}  // namespace binloc

#endif  // BINLOC_MODEL_BUNDLE_HPP
