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

#include "binloc/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "binloc/rng.hpp"

namespace binloc {

void Normalizer::apply(std::span<const double> x, double* out) const {
  for (std::size_t i = 0; i < mean.size(); ++i) out[i] = (x[i] - mean[i]) / std[i];
}

void Dataset::push(const float* row_data, int label) {
  x.insert(x.end(), row_data, row_data + dims);
  labels.push_back(label);
}

Normalizer fit_normalizer(const Dataset& data) {
  if (data.size() < 2) throw InvalidArgument("fit_normalizer: need at least 2 frames");
  const int d = data.dims;
  Normalizer norm;
  norm.mean.assign(d, 0.0);
  norm.std.assign(d, 0.0);
  const double n = static_cast<double>(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const float* row = data.row(i);
    for (int j = 0; j < d; ++j) norm.mean[j] += row[j];
  }
  for (int j = 0; j < d; ++j) norm.mean[j] /= n;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const float* row = data.row(i);
    for (int j = 0; j < d; ++j) {
      const double dlt = row[j] - norm.mean[j];
      norm.std[j] += dlt * dlt;
    }
  }
  for (int j = 0; j < d; ++j) norm.std[j] = std::max(std::sqrt(norm.std[j] / n), 1e-6);
  return norm;
}

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

/// Scratch buffers for a forward/backward pass through one architecture.
struct Workspace {
  std::vector<std::vector<double>> acts;    // acts[0] = input, acts.back() = posterior
  std::vector<std::vector<double>> deltas;  // per non-input layer

  void resize(const std::vector<DenseLayer>& layers) {
    acts.assign(layers.size() + 1, {});
    deltas.assign(layers.size(), {});
    acts[0].resize(layers.front().in);
    for (std::size_t k = 0; k < layers.size(); ++k) {
      acts[k + 1].resize(layers[k].out);
      deltas[k].resize(layers[k].out);
    }
  }
};

// The dense kernels below block four output rows per pass so every input
// load feeds four independent FMA chains; the per-row math is unchanged.

void dense_forward(const DenseLayer& layer, const double* in, double* out) {
  const std::size_t stride = layer.in;
  int o = 0;
  for (; o + 4 <= layer.out; o += 4) {
    const double* w0 = layer.w.data() + static_cast<std::size_t>(o) * stride;
    const double* w1 = w0 + stride;
    const double* w2 = w1 + stride;
    const double* w3 = w2 + stride;
    double a0 = layer.b[o], a1 = layer.b[o + 1], a2 = layer.b[o + 2], a3 = layer.b[o + 3];
    for (int i = 0; i < layer.in; ++i) {
      const double xi = in[i];
      a0 += w0[i] * xi;
      a1 += w1[i] * xi;
      a2 += w2[i] * xi;
      a3 += w3[i] * xi;
    }
    out[o] = a0;
    out[o + 1] = a1;
    out[o + 2] = a2;
    out[o + 3] = a3;
  }
  for (; o < layer.out; ++o) {
    const double* wrow = layer.w.data() + static_cast<std::size_t>(o) * stride;
    double acc = layer.b[o];
    for (int i = 0; i < layer.in; ++i) acc += wrow[i] * in[i];
    out[o] = acc;
  }
}

void forward_pass(const std::vector<DenseLayer>& layers, Workspace& ws) {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const DenseLayer& layer = layers[k];
    double* out = ws.acts[k + 1].data();
    dense_forward(layer, ws.acts[k].data(), out);
    if (k + 1 < layers.size()) {
      for (int o = 0; o < layer.out; ++o) out[o] = sigmoid(out[o]);
    } else {
      softmax_inplace(ws.acts[k + 1]);
    }
  }
}

/// Backward pass for one sample; adds this sample's gradient (already scaled
/// by `scale`, typically 1/batch) into `grads`.
void backward_pass(const std::vector<DenseLayer>& layers, Workspace& ws, int label, double scale,
                   std::vector<DenseLayer>& grads) {
  const std::size_t last = layers.size() - 1;
  // Softmax + cross-entropy: delta = p - onehot.
  const std::vector<double>& p = ws.acts[last + 1];
  for (std::size_t o = 0; o < p.size(); ++o)
    ws.deltas[last][o] = p[o] - (static_cast<int>(o) == label ? 1.0 : 0.0);

  for (std::size_t k = last + 1; k-- > 0;) {
    const DenseLayer& layer = layers[k];
    const double* in = ws.acts[k].data();
    const double* delta = ws.deltas[k].data();
    const std::size_t stride = layer.in;
    DenseLayer& g = grads[k];
    int o = 0;
    for (; o + 4 <= layer.out; o += 4) {
      const double d0 = delta[o] * scale, d1 = delta[o + 1] * scale;
      const double d2 = delta[o + 2] * scale, d3 = delta[o + 3] * scale;
      g.b[o] += d0;
      g.b[o + 1] += d1;
      g.b[o + 2] += d2;
      g.b[o + 3] += d3;
      double* g0 = g.w.data() + static_cast<std::size_t>(o) * stride;
      double* g1 = g0 + stride;
      double* g2 = g1 + stride;
      double* g3 = g2 + stride;
      for (int i = 0; i < layer.in; ++i) {
        const double xi = in[i];
        g0[i] += d0 * xi;
        g1[i] += d1 * xi;
        g2[i] += d2 * xi;
        g3[i] += d3 * xi;
      }
    }
    for (; o < layer.out; ++o) {
      const double d = delta[o] * scale;
      g.b[o] += d;
      double* grow = g.w.data() + static_cast<std::size_t>(o) * stride;
      for (int i = 0; i < layer.in; ++i) grow[i] += d * in[i];
    }
    if (k == 0) break;
    // Propagate into the previous (sigmoid) layer.
    std::vector<double>& prev_delta = ws.deltas[k - 1];
    double* pd = prev_delta.data();
    std::fill(prev_delta.begin(), prev_delta.end(), 0.0);
    o = 0;
    for (; o + 4 <= layer.out; o += 4) {
      const double d0 = delta[o], d1 = delta[o + 1], d2 = delta[o + 2], d3 = delta[o + 3];
      const double* w0 = layer.w.data() + static_cast<std::size_t>(o) * stride;
      const double* w1 = w0 + stride;
      const double* w2 = w1 + stride;
      const double* w3 = w2 + stride;
      for (int i = 0; i < layer.in; ++i)
        pd[i] += w0[i] * d0 + w1[i] * d1 + w2[i] * d2 + w3[i] * d3;
    }
    for (; o < layer.out; ++o) {
      const double d = delta[o];
      const double* wrow = layer.w.data() + static_cast<std::size_t>(o) * stride;
      for (int i = 0; i < layer.in; ++i) pd[i] += wrow[i] * d;
    }
    const double* h = ws.acts[k].data();
    for (int i = 0; i < layer.in; ++i) pd[i] *= h[i] * (1.0 - h[i]);
  }
}

std::vector<DenseLayer> zero_like(const std::vector<DenseLayer>& layers) {
  std::vector<DenseLayer> z = layers;
  for (auto& layer : z) {
    std::fill(layer.w.begin(), layer.w.end(), 0.0);
    std::fill(layer.b.begin(), layer.b.end(), 0.0);
  }
  return z;
}

DenseLayer init_layer(int in, int out, Rng& rng) {
  DenseLayer layer;
  layer.in = in;
  layer.out = out;
  layer.w.resize(static_cast<std::size_t>(in) * out);
  layer.b.assign(out, 0.0);
  const double r = std::sqrt(6.0 / (in + out));
  for (double& v : layer.w) v = rng.uniform(-r, r);
  return layer;
}

}  // namespace

std::vector<double> MlpBandModel::forward_normalized(std::span<const double> x) const {
  if (layers.empty()) throw InvalidArgument("mlp_forward: model has no layers");
  if (static_cast<int>(x.size()) != layers.front().in)
    throw InvalidArgument("mlp_forward: input has wrong dimension");
  Workspace ws;
  ws.resize(layers);
  std::copy(x.begin(), x.end(), ws.acts[0].begin());
  forward_pass(layers, ws);
  return ws.acts.back();
}

std::vector<double> MlpBandModel::forward(std::span<const double> features) const {
  std::vector<double> x(features.size());
  normalizer.apply(features, x.data());
  return forward_normalized(x);
}

double mlp_loss(const MlpBandModel& model, const std::vector<std::vector<double>>& inputs,
                const std::vector<int>& labels) {
  double loss = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto p = model.forward_normalized(inputs[i]);
    loss -= std::log(std::max(p[labels[i]], 1e-300));
  }
  return loss / static_cast<double>(inputs.size());
}

MlpGradients mlp_gradient(const MlpBandModel& model, const std::vector<std::vector<double>>& inputs,
                          const std::vector<int>& labels) {
  if (inputs.empty() || inputs.size() != labels.size())
    throw InvalidArgument("mlp_gradient: bad batch");
  MlpGradients grads{zero_like(model.layers)};
  Workspace ws;
  ws.resize(model.layers);
  const double scale = 1.0 / static_cast<double>(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::copy(inputs[i].begin(), inputs[i].end(), ws.acts[0].begin());
    forward_pass(model.layers, ws);
    backward_pass(model.layers, ws, labels[i], scale, grads.layers);
  }
  return grads;
}

namespace {

struct Split {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> val;
};

/// Stratified validation split: from each class, a seeded random 10%
/// (rounded down, so tiny toy classes keep all their samples for training).
Split split_validation(const Dataset& data, const TrainSchedule& schedule, Rng& rng) {
  std::vector<std::vector<std::uint32_t>> per_class(schedule.num_classes);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int label = data.labels[i];
    if (label < 0 || label >= schedule.num_classes)
      throw InvalidArgument("mlp_train: label " + std::to_string(label) + " outside grid");
    per_class[label].push_back(static_cast<std::uint32_t>(i));
  }
  if (schedule.require_all_classes) {
    for (int k = 0; k < schedule.num_classes; ++k)
      if (per_class[k].empty())
        throw InvalidArgument("mlp_train: no training frames for azimuth class " +
                              std::to_string(k));
  }
  Split split;
  for (auto& idx : per_class) {
    rng.shuffle(idx.data(), idx.size());
    const std::size_t n_val =
        static_cast<std::size_t>(schedule.validation_fraction * static_cast<double>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
      (i < n_val ? split.val : split.train).push_back(idx[i]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

double evaluate_loss(const std::vector<DenseLayer>& layers, const Dataset& data,
                     const Normalizer& norm, const std::vector<std::uint32_t>& idx,
                     Workspace& ws) {
  double loss = 0.0;
  std::vector<double> x(data.dims);
  for (std::uint32_t i : idx) {
    const float* row = data.row(i);
    for (int j = 0; j < data.dims; ++j) x[j] = row[j];
    norm.apply(x, ws.acts[0].data());
    forward_pass(layers, ws);
    loss -= std::log(std::max(ws.acts.back()[data.labels[i]], 1e-300));
  }
  return loss / static_cast<double>(idx.size());
}

/// One training phase over a fixed architecture; restores the best-validation
/// weights before returning. Returns the number of epochs run.
int train_phase(std::vector<DenseLayer>& layers, const Dataset& data, const Normalizer& norm,
                const Split& split, const TrainSchedule& schedule, Rng& rng, int phase,
                int band) {
  const int max_epochs = schedule.lr_decay_epochs + schedule.lr_hold_epochs;
  const double noise_std = std::sqrt(schedule.input_noise_variance);
  const auto& val_idx = split.val.empty() ? split.train : split.val;

  Workspace ws;
  ws.resize(layers);
  auto velocity = zero_like(layers);
  auto grads = zero_like(layers);

  std::vector<std::uint32_t> order = split.train;
  std::vector<double> x(data.dims);

  double best_loss = evaluate_loss(layers, data, norm, val_idx, ws);
  auto best_weights = layers;
  int best_epoch = -1;
  int epochs_run = 0;

  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    const double lr =
        schedule.lr_initial * std::pow(schedule.lr_final / schedule.lr_initial,
                                       std::min(epoch + 1, schedule.lr_decay_epochs) /
                                           static_cast<double>(schedule.lr_decay_epochs));
    rng.shuffle(order.data(), order.size());

    for (std::size_t start = 0; start < order.size(); start += schedule.batch_size) {
      const std::size_t stop = std::min(order.size(), start + schedule.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (auto& g : grads) {
        std::fill(g.w.begin(), g.w.end(), 0.0);
        std::fill(g.b.begin(), g.b.end(), 0.0);
      }
      for (std::size_t s = start; s < stop; ++s) {
        const float* row = data.row(order[s]);
        for (int j = 0; j < data.dims; ++j) x[j] = row[j];
        norm.apply(x, ws.acts[0].data());
        for (int j = 0; j < data.dims; ++j) ws.acts[0][j] += noise_std * rng.normal();
        forward_pass(layers, ws);
        backward_pass(layers, ws, data.labels[order[s]], scale, grads);
      }
      for (std::size_t k = 0; k < layers.size(); ++k) {
        for (std::size_t j = 0; j < layers[k].w.size(); ++j) {
          velocity[k].w[j] = schedule.momentum * velocity[k].w[j] - lr * grads[k].w[j];
          layers[k].w[j] += velocity[k].w[j];
        }
        for (std::size_t j = 0; j < layers[k].b.size(); ++j) {
          velocity[k].b[j] = schedule.momentum * velocity[k].b[j] - lr * grads[k].b[j];
          layers[k].b[j] += velocity[k].b[j];
        }
      }
    }

    const double val_loss = evaluate_loss(layers, data, norm, val_idx, ws);
    epochs_run = epoch + 1;
    if (std::isnan(val_loss))
      throw Error("mlp_train: loss diverged to NaN (band " + std::to_string(band) + ", phase " +
                  std::to_string(phase) + ", epoch " + std::to_string(epoch) + ")");
    if (schedule.verbose)
      std::fprintf(stderr, "[mlp band %d phase %d] epoch %d lr %.4f val %.5f\n", band, phase,
                   epoch, lr, val_loss);
    if (val_loss < best_loss) {
      best_loss = val_loss;
      best_epoch = epoch;
      best_weights = layers;
    } else if (epoch - std::max(best_epoch, 0) >= schedule.early_stop_patience) {
      break;
    }
  }
  layers = std::move(best_weights);
  return epochs_run;
}

}  // namespace

MlpBandModel mlp_train(const Dataset& data, const TrainSchedule& schedule, std::uint64_t seed,
                       int band) {
  if (data.size() == 0) throw InvalidArgument("mlp_train: empty dataset");

  MlpBandModel model;
  model.band = band;
  model.num_classes = schedule.num_classes;

  Rng split_rng(derive_seed(seed, 0x5eedu, static_cast<std::uint64_t>(band)));
  const Split split = split_validation(data, schedule, split_rng);
  if (split.train.empty()) throw InvalidArgument("mlp_train: empty training split");

  {
    Dataset train_view;
    train_view.dims = data.dims;
    train_view.x.reserve(split.train.size() * data.dims);
    for (std::uint32_t i : split.train) train_view.push(data.row(i), data.labels[i]);
    model.normalizer = fit_normalizer(train_view);
  }

  Rng rng(derive_seed(seed, 0x77a11u, static_cast<std::uint64_t>(band)));
  model.layers.clear();
  model.layers.push_back(init_layer(data.dims, schedule.hidden_size, rng));
  model.layers.push_back(init_layer(schedule.hidden_size, schedule.num_classes, rng));

  for (int phase = 1; phase <= schedule.target_hidden_layers; ++phase) {
    if (phase > 1) {
      // Grow: fresh hidden layer between the last hidden layer and the
      // output; previously trained weights are kept and fine-tuned jointly.
      DenseLayer fresh = init_layer(schedule.hidden_size, schedule.hidden_size, rng);
      model.layers.insert(model.layers.end() - 1, std::move(fresh));
    }
    model.phase_epochs.push_back(
        train_phase(model.layers, data, model.normalizer, split, schedule, rng, phase, band));
  }
  return model;
}

}  // namespace binloc
