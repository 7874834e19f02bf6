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

#ifndef DKPP_BERNOULLI_HPP
#define DKPP_BERNOULLI_HPP

#include "subset.hpp"

#include <random>

namespace dkpp {

/// N independent Bernoulli trials; item i is included with probability q_i.
/// Used as the variational family and as the importance proposal.
template <typename Scalar = double>
class BernoulliProduct {
 public:
  BernoulliProduct() = default;

  explicit BernoulliProduct(Vector<Scalar> q) : q_(std::move(q)) {
    for (Index i = 0; i < q_.size(); ++i) {
      if (!(q_(i) >= Scalar(0) && q_(i) <= Scalar(1))) {
        throw InvalidArgument("Bernoulli parameter q_" + std::to_string(i) + " outside [0,1]");
      }
    }
  }

  static BernoulliProduct uniform(Index n, Scalar p = Scalar(0.5)) {
    return BernoulliProduct(Vector<Scalar>::Constant(n, p));
  }

  Index size() const { return q_.size(); }
  const Vector<Scalar>& q() const { return q_; }
  Scalar operator()(Index i) const { return q_(i); }

  /// log Q(xi_i) for a single coordinate; -inf for an impossible outcome.
  Scalar log_coordinate(Index i, bool included) const {
    const Scalar p = included ? q_(i) : Scalar(1) - q_(i);
    return p > Scalar(0) ? std::log(p) : neg_inf<Scalar>();
  }

  /// log Q(A).
  Scalar log_mass(const Subset& a) const {
    a.validate(size());
    Scalar total = 0;
    auto it = a.begin();
    for (Index i = 0; i < size(); ++i) {
      const bool in = it != a.end() && *it == i;
      if (in) ++it;
      const Scalar lp = log_coordinate(i, in);
      if (lp == neg_inf<Scalar>()) return neg_inf<Scalar>();
      total += lp;
    }
    return total;
  }

  /// Shannon entropy in nats, with 0 log 0 = 0.
  Scalar entropy() const {
    Scalar h = 0;
    for (Index i = 0; i < size(); ++i) {
      const Scalar p = q_(i);
      if (p > Scalar(0)) h -= p * std::log(p);
      if (p < Scalar(1)) h -= (Scalar(1) - p) * std::log1p(-p);
    }
    return h;
  }

  template <typename Rng>
  Subset sample(Rng& rng) const {
    std::uniform_real_distribution<Scalar> unif(0, 1);
    std::vector<Index> items;
    for (Index i = 0; i < size(); ++i) {
      if (unif(rng) < q_(i)) items.push_back(i);
    }
    return Subset(std::move(items));
  }

 private:
  Vector<Scalar> q_;
};

}  // namespace dkpp

#endif  // DKPP_BERNOULLI_HPP
