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

#ifndef DKPP_INFERENCE_HPP
#define DKPP_INFERENCE_HPP

#include "model.hpp"

#include <numeric>
#include <optional>
#include <random>

namespace dkpp {

/// A Monte Carlo (or exhaustive) estimate. Whether `value` is on the log or
/// probability scale is stated by the producing function; `std_error` is on
/// the same scale as `value`.
template <typename Scalar = double>
struct EstimateWithError {
  Scalar value = 0;
  Scalar std_error = 0;
  Index n_samples = 1;
  std::uint64_t seed = 0;
  /// True when the value was obtained by exact summation (no sampling error).
  bool exhaustive = false;
};

/// f(i | A) = tr phi(L[A u {i}]) - tr phi(L[A]), for i not in A. Throws when
/// A itself has probability zero (both terms -inf).
template <typename Scalar>
Scalar marginal_gain(const Dkpp<Scalar>& model, Index i, const Subset& a) {
  if (i < 0 || i >= model.size()) throw InvalidArgument("marginal_gain: item out of range");
  if (a.contains(i)) throw InvalidArgument("marginal_gain: item already in the set");
  return extended_difference(unnorm_logprob(model, a.with(i)), unnorm_logprob(model, a));
}

struct MeanFieldConfig {
  Index mc_samples = 64;
  Index max_sweeps = 50;
  double tol = 1e-4;
  std::uint64_t seed = 0;
  /// Expectations are enumerated exactly when the number of conditioning
  /// coordinates (N - 1) is at most this.
  Index exact_below = 10;
};

template <typename Scalar = double>
struct MeanFieldResult {
  BernoulliProduct<Scalar> q;
  Index sweeps = 0;
  bool converged = false;
  /// Coordinates whose expected gain was -inf (q_i forced to 0).
  Index impossible_gains = 0;
  /// Conditioning sets of probability zero that were skipped.
  Index undefined_gains = 0;
};

namespace detail {

/// Accumulates sum_k w_k g_k over gains that may be +-inf; undefined gains
/// (from zero-probability conditioning sets) are skipped by the caller.
template <typename Scalar>
struct GainAverage {
  Scalar weighted = 0;
  Scalar weight = 0;
  bool has_neg_inf = false;
  bool has_pos_inf = false;

  void add(Scalar gain, Scalar w) {
    if (w == Scalar(0)) return;
    weight += w;
    if (gain == neg_inf<Scalar>()) has_neg_inf = true;
    else if (gain == pos_inf<Scalar>()) has_pos_inf = true;
    else weighted += w * gain;
  }

  Scalar mean() const {
    if (has_neg_inf) return neg_inf<Scalar>();
    if (has_pos_inf) return pos_inf<Scalar>();
    return weighted / weight;
  }
};

/// Returns std::nullopt for an undefined gain instead of throwing.
template <typename Scalar>
std::optional<Scalar> try_gain(const Dkpp<Scalar>& model, Index i, const Subset& a) {
  const Scalar without = unnorm_logprob(model, a);
  if (without == neg_inf<Scalar>()) return std::nullopt;
  return unnorm_logprob(model, a.with(i)) - without;
}

}  // namespace detail

/// Mean-field (product Bernoulli) approximation by coordinate ascent:
/// q_i <- logistic(E[f(i | A)]) with A drawn from the current q restricted
/// to the other coordinates. Starts from q = 0.5, sweeps i = 0..N-1 in order.
template <typename Scalar>
MeanFieldResult<Scalar> mean_field_fit(const Dkpp<Scalar>& model, const MeanFieldConfig& config = {}) {
  if (config.mc_samples < 1) throw InvalidArgument("mean_field_fit: mc_samples must be >= 1");
  if (!(config.tol > 0)) throw InvalidArgument("mean_field_fit: tol must be positive");
  const Index n = model.size();
  Vector<Scalar> q = Vector<Scalar>::Constant(n, Scalar(0.5));
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<Scalar> unif(0, 1);
  const bool exact = n - 1 <= config.exact_below && n - 1 < 62;

  MeanFieldResult<Scalar> result;
  std::vector<Index> others;
  std::vector<Index> items;
  for (Index sweep = 0; sweep < config.max_sweeps; ++sweep) {
    Scalar max_change = 0;
    for (Index i = 0; i < n; ++i) {
      detail::GainAverage<Scalar> avg;
      if (exact) {
        others.clear();
        for (Index j = 0; j < n; ++j) if (j != i) others.push_back(j);
        const std::uint64_t count = std::uint64_t{1} << others.size();
        for (std::uint64_t mask = 0; mask < count; ++mask) {
          Scalar w = 1;
          items.clear();
          for (std::size_t s = 0; s < others.size(); ++s) {
            const bool in = (mask >> s) & 1u;
            w *= in ? q(others[s]) : Scalar(1) - q(others[s]);
            if (in) items.push_back(others[s]);
          }
          if (w == Scalar(0)) continue;
          const auto g = detail::try_gain(model, i, Subset(items));
          if (!g) { ++result.undefined_gains; continue; }
          avg.add(*g, w);
        }
      } else {
        for (Index s = 0; s < config.mc_samples; ++s) {
          items.clear();
          for (Index j = 0; j < n; ++j) {
            if (j != i && unif(rng) < q(j)) items.push_back(j);
          }
          const auto g = detail::try_gain(model, i, Subset(items));
          if (!g) { ++result.undefined_gains; continue; }
          avg.add(*g, Scalar(1));
        }
      }
      if (avg.weight == Scalar(0)) continue;
      const Scalar mean_gain = avg.mean();
      if (mean_gain == neg_inf<Scalar>()) ++result.impossible_gains;
      const Scalar updated = logistic(mean_gain);
      max_change = std::max(max_change, std::abs(updated - q(i)));
      q(i) = updated;
    }
    result.sweeps = sweep + 1;
    if (max_change < Scalar(config.tol)) {
      result.converged = true;
      break;
    }
  }
  result.q = BernoulliProduct<Scalar>(std::move(q));
  return result;
}

struct ExpectationConfig {
  Index mc_samples = 1000;
  std::uint64_t seed = 0;
  /// Exact enumeration when N is at most this.
  Index exact_below = 10;
};

/// Multilinear extension E_{A ~ Q_q}[tr phi(L[A])]. Exact by enumeration for
/// small N; otherwise a Monte Carlo mean with the modular control variate
/// sum_{i in A} f({i}), whose expectation sum_i q_i f({i}) is added back in
/// closed form. The control variate leaves the estimate unbiased and makes it
/// exact for affine phi.
template <typename Scalar>
EstimateWithError<Scalar> multilinear_extension(const Dkpp<Scalar>& model,
                                                const BernoulliProduct<Scalar>& q,
                                                const ExpectationConfig& config = {}) {
  const Index n = model.size();
  if (q.size() != n) throw InvalidArgument("Bernoulli parameters do not match model size");
  EstimateWithError<Scalar> out;
  out.seed = config.seed;
  if (n <= config.exact_below && n < 62) {
    const std::uint64_t count = std::uint64_t{1} << n;
    Scalar total = 0;
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      const Subset a = Subset::from_mask(mask);
      const Scalar lm = q.log_mass(a);
      if (lm == neg_inf<Scalar>()) continue;
      const Scalar f = unnorm_logprob(model, a);
      if (f == neg_inf<Scalar>()) {
        out.value = neg_inf<Scalar>();
        out.n_samples = static_cast<Index>(count);
        out.exhaustive = true;
        return out;
      }
      total += std::exp(lm) * f;
    }
    out.value = total;
    out.n_samples = static_cast<Index>(count);
    out.exhaustive = true;
    return out;
  }
  if (config.mc_samples < 1) throw InvalidArgument("mc_samples must be >= 1");

  Vector<Scalar> control(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar f1 = unnorm_logprob(model, Subset{i});
    control(i) = std::isfinite(f1) ? f1 : Scalar(0);
  }
  std::mt19937_64 rng(config.seed);
  Scalar mean = 0, m2 = 0;
  for (Index s = 0; s < config.mc_samples; ++s) {
    const Subset a = q.sample(rng);
    const Scalar f = unnorm_logprob(model, a);
    if (f == neg_inf<Scalar>()) {
      out.value = neg_inf<Scalar>();
      out.n_samples = s + 1;
      return out;
    }
    Scalar residual = f;
    for (Index i : a) residual -= control(i);
    const Scalar delta = residual - mean;
    mean += delta / Scalar(s + 1);
    m2 += delta * (residual - mean);
  }
  const Index m = config.mc_samples;
  out.value = mean + q.q().dot(control);
  out.std_error = m > 1 ? std::sqrt(m2 / Scalar(m - 1) / Scalar(m)) : Scalar(0);
  out.n_samples = m;
  return out;
}

/// ELBO = H[Q_q] + E_{Q_q}[tr phi(L[A])], a lower bound on log Z (up to
/// Monte Carlo error in the expectation term).
template <typename Scalar>
EstimateWithError<Scalar> elbo(const Dkpp<Scalar>& model, const BernoulliProduct<Scalar>& q,
                               const ExpectationConfig& config = {}) {
  EstimateWithError<Scalar> e = multilinear_extension(model, q, config);
  e.value += q.entropy();
  return e;
}

namespace detail {

/// log of the mean of exp(log_weights), with the delta-method standard error
/// sd(w) / (sqrt(n) mean(w)).
template <typename Scalar>
EstimateWithError<Scalar> log_mean_exp_estimate(const std::vector<Scalar>& log_weights) {
  const Index n = static_cast<Index>(log_weights.size());
  EstimateWithError<Scalar> out;
  out.n_samples = n;
  LogSumExp<Scalar> acc;
  for (Scalar lw : log_weights) acc.add(lw);
  const Scalar lse = acc.value();
  out.value = lse - std::log(Scalar(n));
  if (lse == neg_inf<Scalar>() || n < 2) return out;
  const Scalar shift = *std::max_element(log_weights.begin(), log_weights.end());
  Scalar mean = 0, m2 = 0;
  Index k = 0;
  for (Scalar lw : log_weights) {
    const Scalar w = std::exp(lw - shift);
    ++k;
    const Scalar delta = w - mean;
    mean += delta / Scalar(k);
    m2 += delta * (w - mean);
  }
  const Scalar sd = std::sqrt(m2 / Scalar(n - 1));
  out.std_error = sd / (std::sqrt(Scalar(n)) * mean);
  return out;
}

}  // namespace detail

/// Importance-sampling estimate of log Z with a product-Bernoulli proposal:
/// Z = E_{A ~ Q}[P~(A) / Q(A)]. The value is on the log scale.
template <typename Scalar>
EstimateWithError<Scalar> importance_log_partition(const Dkpp<Scalar>& model,
                                                   const BernoulliProduct<Scalar>& proposal,
                                                   Index n_samples, std::uint64_t seed) {
  if (proposal.size() != model.size()) throw InvalidArgument("proposal size mismatch");
  if (n_samples < 1) throw InvalidArgument("n_samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<Scalar> lw(static_cast<std::size_t>(n_samples));
  for (auto& w : lw) {
    const Subset a = proposal.sample(rng);
    w = unnorm_logprob(model, a) - proposal.log_mass(a);
  }
  auto out = detail::log_mean_exp_estimate(lw);
  out.seed = seed;
  if (out.value == neg_inf<Scalar>()) {
    throw NumericalError("importance_log_partition: all sampled weights are zero");
  }
  return out;
}

/// Estimate of the unnormalized interval mass sum_{A_in <= A <= A_out} P~(A).
template <typename Scalar = double>
struct MarginalEstimate {
  /// Log of the unnormalized interval mass.
  EstimateWithError<Scalar> log_mass;
  /// The normalized probability, present when the model carries a log Z.
  std::optional<Scalar> probability;
};

inline constexpr Index kIntervalExhaustiveLimit = 20;

/// Rao-Blackwellized interval marginal: only the free coordinates
/// A_out \ A_in are sampled from the proposal, with xi fixed to 1 on A_in and
/// to 0 outside A_out. When at most `exhaustive_limit` coordinates are free,
/// the interval is summed exactly instead.
template <typename Scalar>
MarginalEstimate<Scalar> rb_marginal_between(const Dkpp<Scalar>& model, const Subset& a_in,
                                             const Subset& a_out,
                                             const BernoulliProduct<Scalar>& proposal,
                                             Index n_samples, std::uint64_t seed,
                                             Index exhaustive_limit = kIntervalExhaustiveLimit) {
  a_out.validate(model.size());
  if (!a_in.is_subset_of(a_out)) throw InvalidArgument("rb_marginal_between: A_in is not a subset of A_out");
  const Subset free = set_difference(a_out, a_in);
  MarginalEstimate<Scalar> out;
  out.log_mass.seed = seed;
  if (free.size() <= exhaustive_limit) {
    const std::uint64_t count = std::uint64_t{1} << free.size();
    LogSumExp<Scalar> acc;
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      std::vector<Index> items(a_in.begin(), a_in.end());
      for (Index s = 0; s < free.size(); ++s) {
        if ((mask >> s) & 1u) items.push_back(free[s]);
      }
      acc.add(unnorm_logprob(model, Subset(std::move(items))));
    }
    out.log_mass.value = acc.value();
    out.log_mass.n_samples = static_cast<Index>(count);
    out.log_mass.exhaustive = true;
  } else {
    if (proposal.size() != model.size()) throw InvalidArgument("proposal size mismatch");
    if (n_samples < 1) throw InvalidArgument("n_samples must be >= 1");
    for (Index i : free) {
      if (!(proposal(i) > 0 && proposal(i) < 1)) {
        throw InvalidArgument("proposal must lie strictly inside (0,1) on free coordinates");
      }
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<Scalar> unif(0, 1);
    std::vector<Scalar> lw(static_cast<std::size_t>(n_samples));
    for (auto& w : lw) {
      std::vector<Index> items(a_in.begin(), a_in.end());
      Scalar log_q = 0;
      for (Index i : free) {
        const bool in = unif(rng) < proposal(i);
        if (in) items.push_back(i);
        log_q += proposal.log_coordinate(i, in);
      }
      w = unnorm_logprob(model, Subset(std::move(items))) - log_q;
    }
    out.log_mass = detail::log_mean_exp_estimate(lw);
    out.log_mass.seed = seed;
  }
  if (model.cached_log_z()) {
    out.probability = std::exp(out.log_mass.value - *model.cached_log_z());
  }
  return out;
}

/// Plain importance sampling of the interval mass over the whole ground set,
/// E_{A ~ Q}[P~(A)/Q(A) 1(A_in <= A <= A_out)]. Most draws fall outside a
/// narrow interval; kept as the baseline that rb_marginal_between improves on.
/// Log scale; -inf when no draw lands in the interval.
template <typename Scalar>
EstimateWithError<Scalar> naive_marginal_between(const Dkpp<Scalar>& model, const Subset& a_in,
                                                 const Subset& a_out,
                                                 const BernoulliProduct<Scalar>& proposal,
                                                 Index n_samples, std::uint64_t seed) {
  a_out.validate(model.size());
  if (!a_in.is_subset_of(a_out)) throw InvalidArgument("naive_marginal_between: A_in is not a subset of A_out");
  if (n_samples < 1) throw InvalidArgument("n_samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<Scalar> lw(static_cast<std::size_t>(n_samples));
  for (auto& w : lw) {
    const Subset a = proposal.sample(rng);
    const bool inside = a_in.is_subset_of(a) && a.is_subset_of(a_out);
    w = inside ? unnorm_logprob(model, a) - proposal.log_mass(a) : neg_inf<Scalar>();
  }
  auto out = detail::log_mean_exp_estimate(lw);
  out.seed = seed;
  return out;
}

/// Uniformly random k-subset of {0..n-1} by a partial Fisher-Yates shuffle of
/// `scratch` (which must hold a permutation of 0..n-1).
template <typename Rng>
Subset uniform_k_subset(std::vector<Index>& scratch, Index k, Rng& rng) {
  const Index n = static_cast<Index>(scratch.size());
  for (Index s = 0; s < k; ++s) {
    std::uniform_int_distribution<Index> pick(s, n - 1);
    std::swap(scratch[static_cast<std::size_t>(s)], scratch[static_cast<std::size_t>(pick(rng))]);
  }
  return Subset(std::vector<Index>(scratch.begin(), scratch.begin() + k));
}

/// Calls fn(subset) for every k-subset of {0..n-1} in lexicographic order.
template <typename Fn>
void for_each_k_subset(Index n, Index k, Fn&& fn) {
  std::vector<Index> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), Index{0});
  while (true) {
    fn(Subset(idx));
    Index s = k - 1;
    while (s >= 0 && idx[static_cast<std::size_t>(s)] == n - k + s) --s;
    if (s < 0) return;
    ++idx[static_cast<std::size_t>(s)];
    for (Index t = s + 1; t < k; ++t) idx[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(t - 1)] + 1;
  }
}

inline constexpr double kCardinalityExhaustiveLimit = 100000;

namespace detail {

/// log of C(N,k) times the mean of exp(log P~) over uniform k-subsets,
/// i.e. log sum_{|A|=k} P~(A) estimated (or summed exactly when C(N,k) is
/// small). std_error is the delta-method error of the log.
template <typename Scalar>
EstimateWithError<Scalar> log_cardinality_mass(const Dkpp<Scalar>& model, Index k,
                                               Index n_samples, std::uint64_t seed,
                                               double exhaustive_limit) {
  const Index n = model.size();
  if (k < 0 || k > n) throw InvalidArgument("cardinality out of range");
  EstimateWithError<Scalar> out;
  out.seed = seed;
  if (binomial(n, k) <= exhaustive_limit) {
    LogSumExp<Scalar> acc;
    Index count = 0;
    for_each_k_subset(n, k, [&](const Subset& a) {
      acc.add(unnorm_logprob(model, a));
      ++count;
    });
    out.value = acc.value();
    out.n_samples = count;
    out.exhaustive = true;
    return out;
  }
  if (n_samples < 1) throw InvalidArgument("n_samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<Index> scratch(static_cast<std::size_t>(n));
  std::iota(scratch.begin(), scratch.end(), Index{0});
  std::vector<Scalar> lw(static_cast<std::size_t>(n_samples));
  for (auto& w : lw) w = unnorm_logprob(model, uniform_k_subset(scratch, k, rng));
  out = log_mean_exp_estimate(lw);
  out.value += Scalar(log_binomial(n, k));
  out.seed = seed;
  return out;
}

}  // namespace detail

/// P(|A| = k) = C(N,k) E_{uniform k-subset}[P(A)]. Probability scale. Needs
/// a stored normalizer or N within the enumeration cap.
template <typename Scalar>
EstimateWithError<Scalar> rb_marginal_cardinality(const Dkpp<Scalar>& model, Index k,
                                                  Index n_samples, std::uint64_t seed,
                                                  double exhaustive_limit = kCardinalityExhaustiveLimit) {
  const Scalar log_z = log_partition(model);
  auto out = detail::log_cardinality_mass(model, k, n_samples, seed, exhaustive_limit);
  const Scalar log_value = out.value;
  out.value = std::exp(log_value - log_z);
  out.std_error = out.value * out.std_error;
  return out;
}

/// log P(A | |A| = k) with k = |A|. The normalizer cancels, so none is
/// needed. Natural-log scale; std_error is the delta-method error of the log.
template <typename Scalar>
EstimateWithError<Scalar> conditional_prob_given_cardinality(
    const Dkpp<Scalar>& model, const Subset& a, Index n_samples, std::uint64_t seed,
    double exhaustive_limit = kCardinalityExhaustiveLimit) {
  a.validate(model.size());
  auto out = detail::log_cardinality_mass(model, a.size(), n_samples, seed, exhaustive_limit);
  if (out.value == neg_inf<Scalar>()) {
    throw NumericalError("conditional probability: estimated stratum mass is zero");
  }
  out.value = unnorm_logprob(model, a) - out.value;
  return out;
}

/// log P(A | A_in <= A <= A_out). Natural-log scale; Z cancels.
template <typename Scalar>
EstimateWithError<Scalar> conditional_prob_between(const Dkpp<Scalar>& model, const Subset& a,
                                                   const Subset& a_in, const Subset& a_out,
                                                   const BernoulliProduct<Scalar>& proposal,
                                                   Index n_samples, std::uint64_t seed,
                                                   Index exhaustive_limit = kIntervalExhaustiveLimit) {
  if (!a_in.is_subset_of(a) || !a.is_subset_of(a_out)) {
    throw InvalidArgument("conditional_prob_between: need A_in <= A <= A_out");
  }
  auto marginal = rb_marginal_between(model, a_in, a_out, proposal, n_samples, seed, exhaustive_limit);
  if (marginal.log_mass.value == neg_inf<Scalar>()) {
    throw NumericalError("conditional probability: estimated interval mass is zero");
  }
  auto out = marginal.log_mass;
  out.value = unnorm_logprob(model, a) - out.value;
  return out;
}

}  // namespace dkpp

#endif  // DKPP_INFERENCE_HPP
