// Copyright 2026 The Authors.
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

#ifndef DKPP_APP_EXPERIMENTS_HPP
#define DKPP_APP_EXPERIMENTS_HPP

#include <dkpp/dkpp.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace dkpp::app {

/// Evenly spaced grid lo, lo + step, ..., hi (inclusive, rounded to the
/// nearest count).
std::vector<double> linspace_step(double lo, double hi, double step);

/// The centered ceil(sqrt(k)) x ceil(sqrt(k)) block of a side x side grid,
/// truncated to its first k items in row-major order.
Subset gathered_block(Index side, Index k);

struct DependenceSweepConfig {
  Index grid_side = 10;
  double bandwidth = 1.0;
  Index k = 9;
  std::vector<double> lambdas = {0, 0.25, 0.5, 0.75, 1, 1.25, 1.5, 1.75, 2};
  Index n_samples = 1000;
  Index seeds = 30;
  std::uint64_t seed = 0;
};

struct DependenceRow {
  std::string config;  // "scattered" or "gathered"
  double lambda = 0;
  std::uint64_t seed = 0;
  double log10_prob = 0;
  double std_error = 0;  // of log10_prob
  Index n_samples = 0;
  bool exhaustive = false;
};

struct DependenceSweep {
  Subset scattered;
  Subset gathered;
  std::vector<DependenceRow> rows;
};

/// log10 P(A | |A| = k) for a diverse (SCATTERED) and a clustered (GATHERED)
/// configuration on a Gaussian-kernel grid, across lambdas and seeds. Seed s
/// uses estimator seed config.seed + s at every lambda.
DependenceSweep dependence_sweep(const DependenceSweepConfig& config);

/// Mean of log10_prob over seeds, per (config, lambda), in lambda order.
std::vector<double> mean_log10_by_lambda(const DependenceSweep& sweep, const std::string& config,
                                         const std::vector<double>& lambdas);

struct ZComparisonConfig {
  Index n = 16;
  std::vector<double> lambdas = {0, 0.25, 0.5, 0.75, 1, 1.25, 1.5, 1.75, 2};
  Index n_samples = 1000;  // importance samples
  Index seeds = 30;
  std::uint64_t seed = 0;
  MeanFieldConfig mean_field{};
  ExpectationConfig expectation{};
};

struct ZComparisonRow {
  double lambda = 0;
  std::uint64_t seed = 0;
  double log_z = 0;
  double elbo = 0;
  double elbo_std_error = 0;
  double is_log_z = 0;
  double is_std_error = 0;
  double elbo_gap() const { return elbo - log_z; }
  double is_gap() const { return is_log_z - log_z; }
};

/// Exact log Z against the mean-field ELBO and mean-field-proposal importance
/// sampling. Seed s draws the Wishart kernel random_wishart_kernel(n,
/// config.seed + s), shared across lambdas.
std::vector<ZComparisonRow> z_comparison(const ZComparisonConfig& config);

struct ZVarianceConfig {
  Index n = 64;
  std::vector<double> lambdas = {0, 0.5, 1, 1.5, 2};
  Index n_samples = 1000;
  Index seeds = 30;
  std::uint64_t seed = 0;
  MeanFieldConfig mean_field{};
};

struct ZVarianceRow {
  double lambda = 0;
  double mean_mean_field = 0;
  double var_mean_field = 0;
  double mean_uniform = 0;
  double var_uniform = 0;
  Index seeds = 0;
};

/// Across-seed variance of the importance-sampling log Z estimate under the
/// mean-field proposal and under the uniform 0.5 proposal. One Wishart kernel
/// per lambda (seed config.seed), one mean-field fit per lambda; the
/// importance sampler uses seed config.seed + s.
std::vector<ZVarianceRow> z_variance_ablation(const ZVarianceConfig& config);

/// Sample variance with the n - 1 denominator; 0 for fewer than two values.
double sample_variance(const std::vector<double>& values);

}  // namespace dkpp::app

#endif  // DKPP_APP_EXPERIMENTS_HPP
