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

#ifndef DKPP_CORE_HPP
#define DKPP_CORE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace dkpp {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the caller's input was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A computation produced a value that cannot be represented (NaN, undefined
/// difference of infinities, all-zero importance weights, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class EigenSolverError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

template <typename Scalar>
constexpr Scalar neg_inf() {
  return -std::numeric_limits<Scalar>::infinity();
}

template <typename Scalar>
constexpr Scalar pos_inf() {
  return std::numeric_limits<Scalar>::infinity();
}

/// Logistic sigmoid, extended to +-inf.
template <typename Scalar>
Scalar logistic(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

/// Difference of two extended reals where -inf - -inf (and +inf - +inf) has
/// no meaning.
template <typename Scalar>
Scalar extended_difference(Scalar lhs, Scalar rhs) {
  if (std::isinf(lhs) && std::isinf(rhs) && (lhs > 0) == (rhs > 0)) {
    throw NumericalError("difference of two equal infinities is undefined");
  }
  return lhs - rhs;
}

/// Streaming log-sum-exp with max shift. -inf terms contribute nothing.
template <typename Scalar>
class LogSumExp {
 public:
  void add(Scalar log_term) {
    if (std::isnan(log_term)) throw NumericalError("NaN term in log-sum-exp");
    if (log_term == neg_inf<Scalar>()) return;
    if (log_term <= max_) {
      sum_ += std::exp(log_term - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - log_term) + Scalar(1);
      max_ = log_term;
    }
  }

  Scalar value() const {
    if (max_ == neg_inf<Scalar>()) return neg_inf<Scalar>();
    return max_ + std::log(sum_);
  }

 private:
  Scalar max_ = neg_inf<Scalar>();
  Scalar sum_ = Scalar(0);
};

template <typename Scalar>
Scalar log_sum_exp(std::span<const Scalar> terms) {
  LogSumExp<Scalar> acc;
  for (Scalar t : terms) acc.add(t);
  return acc.value();
}

/// Natural log of the binomial coefficient C(n, k).
inline double log_binomial(Index n, Index k) {
  if (k < 0 || k > n) return neg_inf<double>();
  return std::lgamma(double(n) + 1) - std::lgamma(double(k) + 1) -
         std::lgamma(double(n - k) + 1);
}

/// C(n, k) as a floating-point count (exact while it fits in 53 bits).
inline double binomial(Index n, Index k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double result = 1.0;
  for (Index i = 1; i <= k; ++i) result = result * double(n - k + i) / double(i);
  return std::round(result);
}

}  // namespace dkpp

#endif  // DKPP_CORE_HPP
