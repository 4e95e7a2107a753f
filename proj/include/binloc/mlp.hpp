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

#ifndef BINLOC_MLP_HPP
#define BINLOC_MLP_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "binloc/common.hpp"

namespace binloc {

/// Per-dimension Gaussian normalization fitted on training data.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> std;

  void apply(std::span<const double> x, double* out) const;
};

/// Labeled feature rows for one band (float32 storage, row-major).
struct Dataset {
  int dims = 0;
  std::vector<float> x;        // size() * dims
  std::vector<int> labels;     // class indices

  std::size_t size() const { return labels.size(); }
  const float* row(std::size_t i) const { return x.data() + i * dims; }
  void push(const float* row_data, int label);
};

Normalizer fit_normalizer(const Dataset& data);

/// Dense layer, weights row-major (outputs x inputs).
struct DenseLayer {
  int in = 0, out = 0;
  std::vector<double> w;
  std::vector<double> b;
};

/// Per-band azimuth classifier: sigmoid hidden layers, softmax output.
struct MlpBandModel {
  int band = 0;
  int num_classes = 72;
  Normalizer normalizer;
  std::vector<DenseLayer> layers;  // hidden layers then the output layer
  std::vector<int> phase_epochs;   // epochs run per growth phase (not serialized)

  /// Posterior over classes for a raw (un-normalized) feature vector.
  std::vector<double> forward(std::span<const double> features) const;
  /// Posterior for an already-normalized input (training path).
  std::vector<double> forward_normalized(std::span<const double> x) const;
};

struct TrainSchedule {
  int batch_size = 128;
  double momentum = 0.5;
  double lr_initial = 1.0;
  double lr_final = 0.05;
  int lr_decay_epochs = 20;
  int lr_hold_epochs = 5;
  int early_stop_patience = 5;
  double input_noise_variance = 0.4;
  int hidden_size = 128;
  int target_hidden_layers = 2;  // layer growth: 1 hidden layer per phase
  int num_classes = 72;
  double validation_fraction = 0.1;
  bool require_all_classes = false;
  bool verbose = false;
};

struct MlpGradients {
  std::vector<DenseLayer> layers;  // same shapes as the model, holding d/dw and d/db
};

/// Exact gradient of the mean cross-entropy over the batch with respect to
/// every weight and bias. Inputs are network inputs (already normalized).
MlpGradients mlp_gradient(const MlpBandModel& model, const std::vector<std::vector<double>>& inputs,
                          const std::vector<int>& labels);

/// Mean cross-entropy of the batch (for finite-difference checks).
double mlp_loss(const MlpBandModel& model, const std::vector<std::vector<double>>& inputs,
                const std::vector<int>& labels);

/// Greedy layer-growth training: phase 1 trains one hidden layer, each later
/// phase inserts a fresh hidden layer before the output and fine-tunes all
/// layers jointly. Deterministic for a fixed seed.
MlpBandModel mlp_train(const Dataset& data, const TrainSchedule& schedule, std::uint64_t seed,
                       int band = 0);

}  // namespace binloc

#endif  // BINLOC_MLP_HPP
