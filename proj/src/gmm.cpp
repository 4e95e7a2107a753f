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

#include "binloc/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "binloc/rng.hpp"
#include "binloc/spatializer.hpp"

namespace binloc {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double logsumexp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - m);
  return m + std::log(sum);
}

double sq_distance(const double* a, const double* b, int dims) {
  double acc = 0.0;
  for (int j = 0; j < dims; ++j) {
    const double d = a[j] - b[j];
    acc += d * d;
  }
  return acc;
}

}  // namespace

double DiagGaussianMixture::log_density(std::span<const double> x) const {
  std::vector<double> comp(num_components);
  for (int k = 0; k < num_components; ++k) {
    const double* mu = means.data() + static_cast<std::size_t>(k) * dims;
    const double* var = vars.data() + static_cast<std::size_t>(k) * dims;
    double lp = std::log(std::max(weights[k], 1e-300));
    for (int j = 0; j < dims; ++j) {
      const double d = x[j] - mu[j];
      lp -= 0.5 * (kLog2Pi + std::log(var[j]) + d * d / var[j]);
    }
    comp[k] = lp;
  }
  return logsumexp(comp);
}

KmeansResult kmeans(const std::vector<double>& data, std::size_t n, int dims, int k,
                    int iterations, std::uint64_t seed) {
  if (n < static_cast<std::size_t>(k))
    throw InvalidArgument("kmeans: fewer samples than clusters");
  Rng rng(seed);

  KmeansResult res;
  res.centers.resize(static_cast<std::size_t>(k) * dims);
  res.assignment.assign(n, 0);

  // Distinct random samples as initial centers.
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  rng.shuffle(pool.data(), pool.size());
  for (int c = 0; c < k; ++c)
    std::copy_n(data.data() + pool[c] * dims, dims, res.centers.data() + static_cast<std::size_t>(c) * dims);

  std::vector<std::size_t> counts(k);
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = sq_distance(data.data() + i * dims,
                                     res.centers.data() + static_cast<std::size_t>(c) * dims, dims);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      res.assignment[i] = best;
    }
    std::fill(res.centers.begin(), res.centers.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      double* c = res.centers.data() + static_cast<std::size_t>(res.assignment[i]) * dims;
      const double* x = data.data() + i * dims;
      for (int j = 0; j < dims; ++j) c[j] += x[j];
      ++counts[res.assignment[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        double* ctr = res.centers.data() + static_cast<std::size_t>(c) * dims;
        for (int j = 0; j < dims; ++j) ctr[j] /= static_cast<double>(counts[c]);
      } else {
        // Reseed the empty cluster to the point farthest from its center.
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = sq_distance(
              data.data() + i * dims,
              res.centers.data() + static_cast<std::size_t>(res.assignment[i]) * dims, dims);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        std::copy_n(data.data() + far * dims, dims,
                    res.centers.data() + static_cast<std::size_t>(c) * dims);
        res.assignment[far] = c;
      }
    }
  }
  return res;
}

EmFitResult fit_mixture(const std::vector<double>& data, std::size_t n, int dims,
                        int num_components, int kmeans_iterations, int em_iterations,
                        std::uint64_t seed, double var_floor_rel) {
  if (n < static_cast<std::size_t>(num_components))
    throw InvalidArgument("fit_mixture: insufficient samples (" + std::to_string(n) + " < " +
                          std::to_string(num_components) + " components)");

  // Per-dimension variance floor relative to the data variance.
  std::vector<double> floor(dims);
  {
    std::vector<double> mean(dims, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (int j = 0; j < dims; ++j) mean[j] += data[i * dims + j];
    for (int j = 0; j < dims; ++j) mean[j] /= static_cast<double>(n);
    std::vector<double> var(dims, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (int j = 0; j < dims; ++j) {
        const double d = data[i * dims + j] - mean[j];
        var[j] += d * d;
      }
    for (int j = 0; j < dims; ++j)
      floor[j] = std::max(var_floor_rel * var[j] / static_cast<double>(n), 1e-12);
  }

  const KmeansResult km = kmeans(data, n, dims, num_components, kmeans_iterations, seed);

  EmFitResult res;
  DiagGaussianMixture& mix = res.mixture;
  mix.dims = dims;
  mix.num_components = num_components;
  mix.weights.assign(num_components, 0.0);
  mix.means = km.centers;
  mix.vars.assign(static_cast<std::size_t>(num_components) * dims, 0.0);

  std::vector<std::size_t> counts(num_components, 0);
  for (std::size_t i = 0; i < n; ++i) ++counts[km.assignment[i]];
  for (std::size_t i = 0; i < n; ++i) {
    const int c = km.assignment[i];
    const double* mu = mix.means.data() + static_cast<std::size_t>(c) * dims;
    double* var = mix.vars.data() + static_cast<std::size_t>(c) * dims;
    for (int j = 0; j < dims; ++j) {
      const double d = data[i * dims + j] - mu[j];
      var[j] += d * d;
    }
  }
  for (int c = 0; c < num_components; ++c) {
    mix.weights[c] = static_cast<double>(counts[c]) / static_cast<double>(n);
    double* var = mix.vars.data() + static_cast<std::size_t>(c) * dims;
    for (int j = 0; j < dims; ++j)
      var[j] = std::max(counts[c] > 0 ? var[j] / static_cast<double>(counts[c]) : floor[j],
                        floor[j]);
  }

  // EM refinement. The M-step maximizes subject to the variance floor
  // (clamping is the constrained maximizer for a diagonal Gaussian), so the
  // total log-likelihood is non-decreasing across iterations.
  std::vector<double> resp(static_cast<std::size_t>(n) * num_components);
  std::vector<double> comp_lp(num_components);
  for (int it = 0; it < em_iterations; ++it) {
    double total_ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < num_components; ++c) {
        const double* mu = mix.means.data() + static_cast<std::size_t>(c) * dims;
        const double* var = mix.vars.data() + static_cast<std::size_t>(c) * dims;
        double lp = std::log(std::max(mix.weights[c], 1e-300));
        for (int j = 0; j < dims; ++j) {
          const double d = data[i * dims + j] - mu[j];
          lp -= 0.5 * (kLog2Pi + std::log(var[j]) + d * d / var[j]);
        }
        comp_lp[c] = lp;
      }
      const double lse = logsumexp(comp_lp);
      total_ll += lse;
      for (int c = 0; c < num_components; ++c)
        resp[i * num_components + c] = std::exp(comp_lp[c] - lse);
    }

    std::vector<double> nk(num_components, 0.0);
    std::vector<double> mu_acc(static_cast<std::size_t>(num_components) * dims, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < num_components; ++c) {
        const double r = resp[i * num_components + c];
        nk[c] += r;
        double* acc = mu_acc.data() + static_cast<std::size_t>(c) * dims;
        for (int j = 0; j < dims; ++j) acc[j] += r * data[i * dims + j];
      }
    }
    for (int c = 0; c < num_components; ++c) {
      mix.weights[c] = nk[c] / static_cast<double>(n);
      if (nk[c] < 1e-10) continue;  // starved component keeps its old mean/var
      double* mu = mix.means.data() + static_cast<std::size_t>(c) * dims;
      for (int j = 0; j < dims; ++j) mu[j] = mu_acc[static_cast<std::size_t>(c) * dims + j] / nk[c];
    }
    std::vector<double> var_acc(static_cast<std::size_t>(num_components) * dims, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < num_components; ++c) {
        const double r = resp[i * num_components + c];
        const double* mu = mix.means.data() + static_cast<std::size_t>(c) * dims;
        double* acc = var_acc.data() + static_cast<std::size_t>(c) * dims;
        for (int j = 0; j < dims; ++j) {
          const double d = data[i * dims + j] - mu[j];
          acc[j] += r * d * d;
        }
      }
    }
    for (int c = 0; c < num_components; ++c) {
      if (nk[c] < 1e-10) continue;
      double* var = mix.vars.data() + static_cast<std::size_t>(c) * dims;
      for (int j = 0; j < dims; ++j)
        var[j] = std::max(var_acc[static_cast<std::size_t>(c) * dims + j] / nk[c], floor[j]);
    }
    res.log_likelihood.push_back(total_ll);
  }

  // Each E-step recorded LL under the parameters entering that iteration;
  // append the likelihood after the final M-step so the history brackets
  // every update.
  double final_ll = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    final_ll += mix.log_density(std::span<const double>(data.data() + i * dims, dims));
  if (!res.log_likelihood.empty()) res.log_likelihood.push_back(final_ll);
  return res;
}

std::vector<double> GmmBandModel::score(std::span<const double> x) const {
  std::vector<double> out(per_azimuth.size());
  for (std::size_t k = 0; k < per_azimuth.size(); ++k) out[k] = per_azimuth[k].log_density(x);
  return out;
}

std::vector<double> GmmBandModel::posterior(std::span<const double> x) const {
  std::vector<double> log_lik = score(x);
  const double lse = logsumexp(log_lik);
  for (double& v : log_lik) v = std::exp(v - lse);
  return log_lik;
}

GmmBandModel gmm_train(const std::vector<std::vector<double>>& per_azimuth_data, int dims,
                       int num_components, std::uint64_t seed, int band, int kmeans_iterations,
                       int em_iterations) {
  if (per_azimuth_data.size() != AzimuthGrid::kCount)
    throw InvalidArgument("gmm_train: need data for all 72 azimuths");
  GmmBandModel model;
  model.band = band;
  model.dims = dims;
  model.per_azimuth.resize(per_azimuth_data.size());
  for (std::size_t k = 0; k < per_azimuth_data.size(); ++k) {
    const auto& flat = per_azimuth_data[k];
    const std::size_t n = flat.size() / dims;
    if (n < static_cast<std::size_t>(num_components))
      throw InvalidArgument("gmm_train: azimuth bin " + std::to_string(k) + " has only " +
                            std::to_string(n) + " samples for " + std::to_string(num_components) +
                            " components");
    model.per_azimuth[k] =
        fit_mixture(flat, n, dims, num_components, kmeans_iterations, em_iterations,
                    derive_seed(seed, static_cast<std::uint64_t>(band), k))
            .mixture;
  }
  return model;
}

}  // namespace binloc
