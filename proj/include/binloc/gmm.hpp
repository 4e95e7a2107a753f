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

#ifndef BINLOC_GMM_HPP
#define BINLOC_GMM_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "binloc/common.hpp"

namespace binloc {

/// Diagonal-covariance Gaussian mixture.
struct DiagGaussianMixture {
  int dims = 0;
  int num_components = 0;
  std::vector<double> weights;  // num_components
  std::vector<double> means;    // num_components x dims
  std::vector<double> vars;     // num_components x dims

  double log_density(std::span<const double> x) const;
};

struct KmeansResult {
  std::vector<double> centers;        // k x dims
  std::vector<int> assignment;       // per sample
};

/// Lloyd's algorithm with seeded distinct-sample initialization; empty
/// clusters are reseeded to the farthest point from its center.
KmeansResult kmeans(const std::vector<double>& data, std::size_t n, int dims, int k,
                    int iterations, std::uint64_t seed);

struct EmFitResult {
  DiagGaussianMixture mixture;
  std::vector<double> log_likelihood;  // total data LL after each EM iteration
};

/// k-means initialization followed by EM refinement with a relative variance
/// floor. The per-iteration log-likelihood history is recorded.
EmFitResult fit_mixture(const std::vector<double>& data, std::size_t n, int dims,
                        int num_components, int kmeans_iterations, int em_iterations,
                        std::uint64_t seed, double var_floor_rel = 1e-5);

/// Per-band GMM set: one mixture per grid azimuth.
struct GmmBandModel {
  int band = 0;
  int dims = 0;
  std::vector<DiagGaussianMixture> per_azimuth;  // indexed by grid bin

  /// log p(x | azimuth k) for every k.
  std::vector<double> score(std::span<const double> x) const;
  /// Softmax of the scores (uniform prior), for fusion compatibility.
  std::vector<double> posterior(std::span<const double> x) const;
};

/// Train one mixture per azimuth: 15 k-means iterations then 5 EM iterations,
/// 16 components, diagonal covariances.
GmmBandModel gmm_train(const std::vector<std::vector<double>>& per_azimuth_data, int dims,
                       int num_components, std::uint64_t seed, int band = 0,
                       int kmeans_iterations = 15, int em_iterations = 5);

}  // namespace binloc

#endif  // BINLOC_GMM_HPP
