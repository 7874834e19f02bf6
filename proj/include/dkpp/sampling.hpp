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

#ifndef DKPP_SAMPLING_HPP
#define DKPP_SAMPLING_HPP

#include "inference.hpp"

#include <istream>
#include <numeric>
#include <ostream>
#include <random>

namespace dkpp {

/// Exact conditional probability that item i is in the set given the other
/// items of `current`: logistic(f(i | current \ {i})). A -inf gain gives 0.
template <typename Scalar>
Scalar inclusion_probability(const Dkpp<Scalar>& model, const Subset& current, Index i) {
  const Subset rest = current.without(i);
  const Scalar without = unnorm_logprob(model, rest);
  const Scalar with = unnorm_logprob(model, rest.with(i));
  if (without == neg_inf<Scalar>() && with == neg_inf<Scalar>()) {
    throw NumericalError("gibbs_step: both states of item " + std::to_string(i) +
                         " have probability zero");
  }
  return logistic(with - without);
}

/// Heat-bath update of site i.
template <typename Scalar, typename Rng>
Subset gibbs_step(const Dkpp<Scalar>& model, const Subset& current, Index i, Rng& rng) {
  const Scalar p = inclusion_probability(model, current, i);
  std::uniform_real_distribution<Scalar> unif(0, 1);
  return unif(rng) < p ? current.with(i) : current.without(i);
}

struct ChainConfig {
  Index sweeps = 1000;
  Index burn_in = 100;
  Index thin = 1;
  std::uint64_t seed = 0;
};

/// States recorded once per retained sweep. `accepted` counts single-site
/// updates that changed the state, out of `proposed` updates.
struct Chain {
  std::vector<Subset> states;
  Index accepted = 0;
  Index proposed = 0;
  ChainConfig config;
};

/// Runs `config.sweeps` random-scan heat-bath sweeps (each a fresh uniformly
/// random permutation of the sites), drops the first burn_in sweeps and keeps
/// every thin-th state after that.
template <typename Scalar>
Chain run_chain(const Dkpp<Scalar>& model, const Subset& init, const ChainConfig& config) {
  if (config.sweeps < 1) throw InvalidArgument("run_chain: sweeps must be >= 1");
  if (config.burn_in < 0 || config.thin < 1) throw InvalidArgument("run_chain: bad burn-in/thin");
  init.validate(model.size());
  if (unnorm_logprob(model, init) == neg_inf<Scalar>()) {
    throw InvalidArgument("run_chain: initial state has probability zero");
  }
  std::mt19937_64 rng(config.seed);
  std::vector<Index> order(static_cast<std::size_t>(model.size()));
  std::iota(order.begin(), order.end(), Index{0});
  Chain chain;
  chain.config = config;
  Subset state = init;
  for (Index sweep = 0; sweep < config.sweeps; ++sweep) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Index i : order) {
      Subset next = gibbs_step(model, state, i, rng);
      ++chain.proposed;
      if (next != state) ++chain.accepted;
      state = std::move(next);
    }
    if (sweep >= config.burn_in && (sweep - config.burn_in) % config.thin == 0) {
      chain.states.push_back(state);
    }
  }
  return chain;
}

inline VectorXd inclusion_frequencies(const Chain& chain, Index n) {
  if (chain.states.empty()) throw InvalidArgument("inclusion_frequencies: empty chain");
  VectorXd freq = VectorXd::Zero(n);
  for (const auto& s : chain.states) {
    s.validate(n);
    for (Index i : s) freq(i) += 1;
  }
  return freq / double(chain.states.size());
}

inline void write_chain(std::ostream& os, const Chain& chain) {
  os << "# seed=" << chain.config.seed << " burn_in=" << chain.config.burn_in
     << " thin=" << chain.config.thin << " sweeps=" << chain.config.sweeps
     << " accepted=" << chain.accepted << " proposed=" << chain.proposed << '\n';
  for (const auto& s : chain.states) os << to_item_list(s) << '\n';
}

/// Reads states written by write_chain; header lines are skipped.
inline std::vector<Subset> read_chain_states(std::istream& is) {
  std::vector<Subset> states;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<Index> items;
    Index i;
    while (ls >> i) items.push_back(i);
    states.emplace_back(std::move(items));
  }
  return states;
}

}  // namespace dkpp

#endif  // DKPP_SAMPLING_HPP
