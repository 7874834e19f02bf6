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

#ifndef DKPP_SPECTRAL_HPP
#define DKPP_SPECTRAL_HPP

#include "core.hpp"

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace dkpp {

enum class SpectralKind { Log, Affine, Quadratic, BoxCox };

/// Scalar function phi applied to a symmetric matrix through its
/// eigenvalues. Four families:
///
///   Log              phi(x) = log x
///   Affine(b, c)     phi(x) = b x + c
///   Quadratic(a,b,c) phi(x) = a x^2 + b x + c
///   BoxCox(lambda)   phi(x) = (x^lambda - 1) / lambda,  log x at lambda = 0
///
/// BoxCox(0) is evaluated as log x, so it is pointwise identical to Log.
/// For lambda in [0, 1] the induced model is log-submodular, for lambda in
/// [1, 2] log-supermodular; other lambdas are accepted without guarantees.
template <typename Scalar = double>
class SpectralFunction {
 public:
  static SpectralFunction log() { return SpectralFunction(SpectralKind::Log, 0, 0, 0); }
  static SpectralFunction affine(Scalar b, Scalar c) {
    return SpectralFunction(SpectralKind::Affine, 0, b, c);
  }
  static SpectralFunction quadratic(Scalar a, Scalar b, Scalar c) {
    return SpectralFunction(SpectralKind::Quadratic, a, b, c);
  }
  static SpectralFunction box_cox(Scalar lambda) {
    return SpectralFunction(SpectralKind::BoxCox, lambda, 0, 0);
  }

  SpectralKind kind() const { return kind_; }
  Scalar lambda() const { return a_; }
  Scalar a() const { return a_; }
  Scalar b() const { return b_; }
  Scalar c() const { return c_; }

  /// phi(x) for x >= 0; may return -inf at x = 0.
  Scalar operator()(Scalar x) const {
    if (!(x >= Scalar(0))) throw InvalidArgument("phi evaluated at a negative or NaN argument");
    switch (kind_) {
      case SpectralKind::Log:
        return x == Scalar(0) ? neg_inf<Scalar>() : std::log(x);
      case SpectralKind::Affine:
        return b_ * x + c_;
      case SpectralKind::Quadratic:
        return (a_ * x + b_) * x + c_;
      case SpectralKind::BoxCox:
        if (x == Scalar(0)) {
          return a_ > Scalar(0) ? Scalar(-1) / a_ : neg_inf<Scalar>();
        }
        if (a_ == Scalar(0)) return std::log(x);
        {
          // expm1 keeps the small-lambda limit continuous with log x.
          const Scalar t = a_ * std::log(x);
          if (std::abs(t) < Scalar(0.5)) return std::expm1(t) / a_;
          return (std::pow(x, a_) - Scalar(1)) / a_;
        }
    }
    return Scalar(0);
  }

  /// phi'(x). Throws at x = 0 where the derivative is infinite.
  Scalar derivative(Scalar x) const {
    if (!(x >= Scalar(0))) throw InvalidArgument("phi' evaluated at a negative or NaN argument");
    switch (kind_) {
      case SpectralKind::Log:
        if (x == Scalar(0)) throw NumericalError("log'(0) is infinite");
        return Scalar(1) / x;
      case SpectralKind::Affine:
        return b_;
      case SpectralKind::Quadratic:
        return Scalar(2) * a_ * x + b_;
      case SpectralKind::BoxCox:
        if (x == Scalar(0)) {
          if (a_ < Scalar(1)) throw NumericalError("Box-Cox derivative is infinite at 0 for lambda < 1");
          return a_ == Scalar(1) ? Scalar(1) : Scalar(0);
        }
        return std::pow(x, a_ - Scalar(1));
    }
    return Scalar(0);
  }

  /// Whether phi(0) is -inf, i.e. singular submatrices have probability 0.
  bool singular_at_zero() const {
    return kind_ == SpectralKind::Log ||
           (kind_ == SpectralKind::BoxCox && a_ <= Scalar(0));
  }

  /// The model-file descriptor, e.g. "phi boxcox 0.5".
  std::string descriptor() const {
    std::ostringstream os;
    os << std::setprecision(17) << "phi ";
    switch (kind_) {
      case SpectralKind::Log: os << "log"; break;
      case SpectralKind::Affine: os << "affine " << b_ << ' ' << c_; break;
      case SpectralKind::Quadratic: os << "quadratic " << a_ << ' ' << b_ << ' ' << c_; break;
      case SpectralKind::BoxCox: os << "boxcox " << a_; break;
    }
    return os.str();
  }

  /// Parses a descriptor produced by descriptor(). The leading "phi" token is
  /// optional.
  static SpectralFunction parse(const std::string& text) {
    std::istringstream is(text);
    std::string name;
    is >> name;
    if (name == "phi") is >> name;
    std::vector<Scalar> coeffs;
    Scalar v;
    while (is >> v) coeffs.push_back(v);
    if (!is.eof()) throw InvalidArgument("malformed phi coefficients: " + text);
    auto want = [&](std::size_t n) {
      if (coeffs.size() != n) {
        throw InvalidArgument("phi " + name + " expects " + std::to_string(n) +
                              " coefficient(s): " + text);
      }
    };
    if (name == "log") { want(0); return log(); }
    if (name == "affine") { want(2); return affine(coeffs[0], coeffs[1]); }
    if (name == "quadratic") { want(3); return quadratic(coeffs[0], coeffs[1], coeffs[2]); }
    if (name == "boxcox") { want(1); return box_cox(coeffs[0]); }
    throw InvalidArgument("unknown phi variant: " + name);
  }

  friend bool operator==(const SpectralFunction&, const SpectralFunction&) = default;

 private:
  SpectralFunction(SpectralKind kind, Scalar a, Scalar b, Scalar c)
      : kind_(kind), a_(a), b_(b), c_(c) {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
      throw InvalidArgument("phi coefficients must be finite");
    }
  }

  SpectralKind kind_;
  Scalar a_;  // lambda for BoxCox
  Scalar b_;
  Scalar c_;
};

}  // namespace dkpp

#endif  // DKPP_SPECTRAL_HPP
