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

#ifndef DKPP_MODEOPT_HPP
#define DKPP_MODEOPT_HPP

#include "inference.hpp"

#include <optional>
#include <random>
#include <string>

namespace dkpp {

/// A candidate mode. The objective is always recomputed from the subset.
template <typename Scalar = double>
class OptResult {
 public:
  OptResult(const Dkpp<Scalar>& model, Subset subset, std::string method,
            std::optional<std::uint64_t> seed = std::nullopt)
      : subset_(std::move(subset)),
        objective_(unnorm_logprob(model, subset_)),
        method_(std::move(method)),
        seed_(seed) {}

  const Subset& subset() const { return subset_; }
  Scalar objective() const { return objective_; }
  const std::string& method() const { return method_; }
  const std::optional<std::uint64_t>& seed() const { return seed_; }

 private:
  Subset subset_;
  Scalar objective_;
  std::string method_;
  std::optional<std::uint64_t> seed_;
};

/// Stand-in for -inf objective values inside double greedy.
inline constexpr double kImpossibleObjective = -1e12;

/// Global argmax of log P~ over all 2^N subsets. Ties go to the
/// lexicographically smallest subset.
template <typename Scalar>
OptResult<Scalar> exhaustive_mode(const Dkpp<Scalar>& model, Index cap = 20) {
  detail::check_enumerable(model.size(), cap, "exhaustive_mode");
  const std::uint64_t count = std::uint64_t{1} << model.size();
  Subset best;
  Scalar best_f = unnorm_logprob(model, best);
  for (std::uint64_t mask = 1; mask < count; ++mask) {
    Subset a = Subset::from_mask(mask);
    const Scalar f = unnorm_logprob(model, a);
    if (f > best_f || (f == best_f && a < best)) {
      best_f = f;
      best = std::move(a);
    }
  }
  return OptResult<Scalar>(model, std::move(best), "exhaustive");
}

/// Best subset of exactly k items by enumeration (oracle for the
/// cardinality-constrained heuristics).
template <typename Scalar>
OptResult<Scalar> exhaustive_mode_cardinality(const Dkpp<Scalar>& model, Index k) {
  if (k < 0 || k > model.size()) throw InvalidArgument("cardinality out of range");
  std::optional<Subset> best;
  Scalar best_f = neg_inf<Scalar>();
  for_each_k_subset(model.size(), k, [&](const Subset& a) {
    const Scalar f = unnorm_logprob(model, a);
    if (!best || f > best_f) {
      best_f = f;
      best = a;
    }
  });
  return OptResult<Scalar>(model, std::move(*best), "exhaustive-k");
}

/// Adds the item with the largest positive marginal gain until none is
/// positive.
template <typename Scalar>
OptResult<Scalar> greedy_mode(const Dkpp<Scalar>& model) {
  Subset current;
  Scalar f_current = unnorm_logprob(model, current);
  while (true) {
    Index best_item = -1;
    Scalar best_gain = 0;
    Scalar best_f = f_current;
    for (Index i = 0; i < model.size(); ++i) {
      if (current.contains(i)) continue;
      const Scalar f = unnorm_logprob(model, current.with(i));
      const Scalar gain = f - f_current;
      if (gain > best_gain) {
        best_gain = gain;
        best_item = i;
        best_f = f;
      }
    }
    if (best_item < 0) break;
    current = current.with(best_item);
    f_current = best_f;
  }
  return OptResult<Scalar>(model, std::move(current), "greedy");
}

/// Double greedy of Buchbinder et al.: X grows from the empty set, Y shrinks
/// from the ground set, and item i goes into X or out of Y by comparing
/// a_i = f(X+i) - f(X) with b_i = f(Y-i) - f(Y). Deterministic: include iff
/// a_i >= b_i. Randomized: include with probability a+/(a+ + b+), and include
/// when both are zero. Approximation guarantees (1/3, 1/2) need f to be
/// submodular and nonnegative; neither is enforced.
template <typename Scalar>
OptResult<Scalar> double_greedy(const Dkpp<Scalar>& model, bool randomized, std::uint64_t seed = 0) {
  const Index n = model.size();
  auto f = [&](const Subset& a) {
    const Scalar v = unnorm_logprob(model, a);
    return v == neg_inf<Scalar>() ? Scalar(kImpossibleObjective) : v;
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Scalar> unif(0, 1);
  Subset x;
  Subset y = Subset::full(n);
  Scalar fx = f(x), fy = f(y);
  for (Index i = 0; i < n; ++i) {
    const Subset x_plus = x.with(i);
    const Subset y_minus = y.without(i);
    const Scalar fx_plus = f(x_plus), fy_minus = f(y_minus);
    const Scalar gain_add = fx_plus - fx;
    const Scalar gain_remove = fy_minus - fy;
    bool include;
    if (randomized) {
      const Scalar ap = std::max<Scalar>(gain_add, 0);
      const Scalar bp = std::max<Scalar>(gain_remove, 0);
      include = (ap + bp == Scalar(0)) ? true : unif(rng) < ap / (ap + bp);
    } else {
      include = gain_add >= gain_remove;
    }
    if (include) {
      x = x_plus;
      fx = fx_plus;
    } else {
      y = y_minus;
      fy = fy_minus;
    }
  }
  return OptResult<Scalar>(model, std::move(x),
                           randomized ? "double-greedy-randomized" : "double-greedy",
                           randomized ? std::optional<std::uint64_t>(seed) : std::nullopt);
}

/// Random greedy for a cardinality constraint: k rounds, each adding a
/// uniformly chosen item from the pool of (up to) k remaining items with the
/// largest marginal gains. Always returns exactly k items.
template <typename Scalar>
OptResult<Scalar> random_greedy_cardinality(const Dkpp<Scalar>& model, Index k, std::uint64_t seed) {
  const Index n = model.size();
  if (k < 1 || k > n) throw InvalidArgument("random_greedy_cardinality: k out of range");
  std::mt19937_64 rng(seed);
  Subset current;
  std::vector<std::pair<Scalar, Index>> gains;
  for (Index round = 0; round < k; ++round) {
    const Scalar f_current = unnorm_logprob(model, current);
    const Scalar f_base = f_current == neg_inf<Scalar>() ? Scalar(kImpossibleObjective) : f_current;
    gains.clear();
    for (Index i = 0; i < n; ++i) {
      if (current.contains(i)) continue;
      Scalar f = unnorm_logprob(model, current.with(i));
      if (f == neg_inf<Scalar>()) f = Scalar(kImpossibleObjective);
      gains.emplace_back(f - f_base, i);
    }
    const std::size_t pool = std::min<std::size_t>(static_cast<std::size_t>(k), gains.size());
    // Largest gain first, lowest index among ties.
    std::partial_sort(gains.begin(), gains.begin() + static_cast<std::ptrdiff_t>(pool), gains.end(),
                      [](const auto& a, const auto& b) {
                        return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    std::uniform_int_distribution<std::size_t> pick(0, pool - 1);
    current = current.with(gains[pick(rng)].second);
  }
  return OptResult<Scalar>(model, std::move(current), "random-greedy-k", seed);
}

}  // namespace dkpp

#endif  // DKPP_MODEOPT_HPP
