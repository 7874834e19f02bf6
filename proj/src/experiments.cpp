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

#include "experiments.hpp"

#include <cmath>
#include <numbers>

namespace dkpp::app {

std::vector<double> linspace_step(double lo, double hi, double step) {
  if (!(step > 0) || !(hi >= lo)) throw InvalidArgument("bad grid range");
  const auto count = static_cast<Index>(std::llround((hi - lo) / step)) + 1;
  std::vector<double> out;
  for (Index i = 0; i < count; ++i) out.push_back(lo + step * double(i));
  return out;
}

Subset gathered_block(Index side, Index k) {
  if (k < 1 || k > side * side) throw InvalidArgument("gathered block: k out of range");
  const auto b = static_cast<Index>(std::ceil(std::sqrt(double(k)) - 1e-12));
  const Index r0 = (side - b) / 2, c0 = (side - b) / 2;
  std::vector<Index> items;
  for (Index r = 0; r < b && Index(items.size()) < k; ++r)
    for (Index c = 0; c < b && Index(items.size()) < k; ++c) items.push_back((r0 + r) * side + (c0 + c));
  return Subset(items);
}

DependenceSweep dependence_sweep(const DependenceSweepConfig& config) {
  if (config.grid_side < 1) throw InvalidArgument("grid side must be >= 1");
  if (config.k < 1 || config.k > config.grid_side * config.grid_side) {
    throw InvalidArgument("k must lie in [1, grid_side^2]");
  }
  if (config.seeds < 1) throw InvalidArgument("need at least one seed");
  const auto kernel = gaussian_kernel(grid_points<double>(config.grid_side), config.bandwidth);
  DependenceSweep sweep;
  sweep.scattered =
      random_greedy_cardinality(Dkpp<double>(kernel, SpectralFunction<double>::log()), config.k, config.seed).subset();
  sweep.gathered = gathered_block(config.grid_side, config.k);
  const double to_log10 = 1 / std::numbers::ln10;
  for (double lambda : config.lambdas) {
    const Dkpp<double> model(kernel, SpectralFunction<double>::box_cox(lambda));
    for (Index s = 0; s < config.seeds; ++s) {
      const std::uint64_t seed = config.seed + std::uint64_t(s);
      for (const auto& [name, subset] : {std::pair{std::string("scattered"), sweep.scattered},
                                         std::pair{std::string("gathered"), sweep.gathered}}) {
        const auto e = conditional_prob_given_cardinality(model, subset, config.n_samples, seed);
        sweep.rows.push_back({name, lambda, seed, e.value * to_log10, e.std_error * to_log10, e.n_samples, e.exhaustive});
      }
    }
  }
  return sweep;
}

std::vector<double> mean_log10_by_lambda(const DependenceSweep& sweep, const std::string& config,
                                         const std::vector<double>& lambdas) {
  std::vector<double> out;
  for (double lambda : lambdas) {
    double total = 0;
    Index count = 0;
    for (const auto& row : sweep.rows) {
      if (row.config == config && row.lambda == lambda) {
        total += row.log10_prob;
        ++count;
      }
    }
    out.push_back(count ? total / double(count) : std::nan(""));
  }
  return out;
}

std::vector<ZComparisonRow> z_comparison(const ZComparisonConfig& config) {
  if (config.n > kEnumerationCap) throw InvalidArgument("z-comparison needs n within the enumeration cap");
  if (config.seeds < 1) throw InvalidArgument("need at least one seed");
  std::vector<ZComparisonRow> rows;
  for (double lambda : config.lambdas) {
    for (Index s = 0; s < config.seeds; ++s) {
      const std::uint64_t seed = config.seed + std::uint64_t(s);
      const Dkpp<double> model(random_wishart_kernel<double>(config.n, seed),
                               SpectralFunction<double>::box_cox(lambda));
      MeanFieldConfig mf = config.mean_field;
      mf.seed = seed;
      const auto fit = mean_field_fit(model, mf);
      ExpectationConfig ex = config.expectation;
      ex.seed = seed;
      const auto bound = elbo(model, fit.q, ex);
      const auto is = importance_log_partition(model, fit.q, config.n_samples, seed);
      rows.push_back({lambda, seed, exact_log_partition(model), bound.value, bound.std_error, is.value, is.std_error});
    }
  }
  return rows;
}

double sample_variance(const std::vector<double>& values) {
  if (values.size() < 2) return 0;
  double mean = 0;
  for (double v : values) mean += v / double(values.size());
  double s = 0;
  for (double v : values) s += (v - mean) * (v - mean);
  return s / double(values.size() - 1);
}

std::vector<ZVarianceRow> z_variance_ablation(const ZVarianceConfig& config) {
  if (config.seeds < 1) throw InvalidArgument("need at least one seed");
  std::vector<ZVarianceRow> rows;
  const auto kernel = random_wishart_kernel<double>(config.n, config.seed);
  const auto uniform = BernoulliProduct<double>::uniform(config.n, 0.5);
  for (double lambda : config.lambdas) {
    const Dkpp<double> model(kernel, SpectralFunction<double>::box_cox(lambda));
    MeanFieldConfig mf = config.mean_field;
    mf.seed = config.seed;
    const auto fit = mean_field_fit(model, mf);
    std::vector<double> with_mf, with_uniform;
    for (Index s = 0; s < config.seeds; ++s) {
      const std::uint64_t seed = config.seed + std::uint64_t(s);
      with_mf.push_back(importance_log_partition(model, fit.q, config.n_samples, seed).value);
      with_uniform.push_back(importance_log_partition(model, uniform, config.n_samples, seed).value);
    }
    auto mean = [](const std::vector<double>& v) {
      double m = 0;
      for (double x : v) m += x / double(v.size());
      return m;
    };
    rows.push_back({lambda, mean(with_mf), sample_variance(with_mf), mean(with_uniform), sample_variance(with_uniform),
                    config.seeds});
  }
  return rows;
}

}  // namespace dkpp::app
