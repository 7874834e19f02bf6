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

#ifndef DKPP_MODEL_HPP
#define DKPP_MODEL_HPP

#include "bernoulli.hpp"
#include "kernel.hpp"

#include <filesystem>
#include <optional>
#include <random>

namespace dkpp {

/// Default hard cap on N for routines that enumerate all 2^N subsets.
inline constexpr Index kEnumerationCap = 24;

/// A discrete kernel point process: P(A) is proportional to
/// exp(tr phi(L[A])). The log-normalizer is stored only when a caller sets
/// it; nothing re-estimates it implicitly.
template <typename Scalar = double>
class Dkpp {
 public:
  Dkpp(KernelMatrix<Scalar> kernel, SpectralFunction<Scalar> phi)
      : kernel_(std::move(kernel)), phi_(phi) {}

  const KernelMatrix<Scalar>& kernel() const { return kernel_; }
  const SpectralFunction<Scalar>& phi() const { return phi_; }
  Index size() const { return kernel_.dim(); }

  const std::optional<Scalar>& cached_log_z() const { return log_z_; }

  /// Write-once. Throws if already set or if the value is not finite.
  void set_log_partition(Scalar log_z) {
    if (!std::isfinite(log_z)) throw InvalidArgument("log partition must be finite");
    if (log_z_) throw InvalidArgument("log partition already set");
    log_z_ = log_z;
  }

 private:
  KernelMatrix<Scalar> kernel_;
  SpectralFunction<Scalar> phi_;
  std::optional<Scalar> log_z_;
};

/// log P~(A) = tr phi(L[A]).
template <typename Scalar>
Scalar unnorm_logprob(const Dkpp<Scalar>& model, const Subset& a) {
  return trace_phi(model.kernel(), a, model.phi());
}

namespace detail {

inline void check_enumerable(Index n, Index cap, const char* what) {
  if (n > cap || n > 62) {
    throw InvalidArgument(std::string(what) + ": N = " + std::to_string(n) +
                          " exceeds the enumeration cap " + std::to_string(cap));
  }
}

}  // namespace detail

/// log P~ for every subset, indexed by bit mask (bit i <-> item i).
template <typename Scalar>
Vector<Scalar> exact_log_weights(const Dkpp<Scalar>& model, Index cap = kEnumerationCap) {
  detail::check_enumerable(model.size(), cap, "exact_log_weights");
  const std::uint64_t count = std::uint64_t{1} << model.size();
  Vector<Scalar> out(static_cast<Index>(count));
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    out(static_cast<Index>(mask)) = unnorm_logprob(model, Subset::from_mask(mask));
  }
  return out;
}

/// log Z = log sum_A exp(tr phi(L[A])) by enumeration in binary-counter order.
template <typename Scalar>
Scalar exact_log_partition(const Dkpp<Scalar>& model, Index cap = kEnumerationCap) {
  detail::check_enumerable(model.size(), cap, "exact_log_partition");
  const std::uint64_t count = std::uint64_t{1} << model.size();
  LogSumExp<Scalar> acc;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    acc.add(unnorm_logprob(model, Subset::from_mask(mask)));
  }
  return acc.value();
}

/// The stored log-normalizer, else the enumerated one when N is within the
/// cap, else an error.
template <typename Scalar>
Scalar log_partition(const Dkpp<Scalar>& model, Index cap = kEnumerationCap) {
  if (model.cached_log_z()) return *model.cached_log_z();
  if (model.size() > cap) {
    throw InvalidArgument("no normalizer: N = " + std::to_string(model.size()) +
                          " is above the enumeration cap and none was set");
  }
  return exact_log_partition(model, cap);
}

template <typename Scalar>
Scalar exact_prob(const Dkpp<Scalar>& model, const Subset& a, Index cap = kEnumerationCap) {
  return std::exp(unnorm_logprob(model, a) - log_partition(model, cap));
}

/// Normalized probabilities of all subsets, indexed by bit mask.
template <typename Scalar>
Vector<Scalar> exact_distribution(const Dkpp<Scalar>& model, Index cap = kEnumerationCap) {
  Vector<Scalar> lw = exact_log_weights(model, cap);
  const Scalar log_z = log_sum_exp<Scalar>(std::span<const Scalar>(lw.data(), lw.size()));
  return (lw.array() - log_z).exp().matrix();
}

/// Draws `count` independent exact samples by inverse CDF over the
/// enumerated distribution.
template <typename Scalar>
std::vector<Subset> sample_exact(const Dkpp<Scalar>& model, Index count, std::uint64_t seed,
                                 Index cap = kEnumerationCap) {
  const Vector<Scalar> p = exact_distribution(model, cap);
  std::vector<Scalar> cdf(static_cast<std::size_t>(p.size()));
  Scalar run = 0;
  for (Index s = 0; s < p.size(); ++s) cdf[static_cast<std::size_t>(s)] = (run += p(s));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Scalar> unif(0, run);
  std::vector<Subset> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index m = 0; m < count; ++m) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), unif(rng));
    const auto mask = static_cast<std::uint64_t>(
        std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
    out.push_back(Subset::from_mask(mask));
  }
  return out;
}

/// Parameters of a fully visible Boltzmann machine,
/// P(xi) proportional to exp(sum_i h_i xi_i + sum_{i,j} W_ij xi_i xi_j).
template <typename Scalar = double>
struct BoltzmannParams {
  Vector<Scalar> h;
  Matrix<Scalar> w;  // symmetric, zero diagonal
};

template <typename Scalar>
Scalar boltzmann_log_weight(const BoltzmannParams<Scalar>& bm, const Subset& a) {
  Scalar total = 0;
  for (Index i : a) {
    total += bm.h(i);
    for (Index j : a) total += bm.w(i, j);
  }
  return total;
}

/// Quadratic phi = a x^2 + b x + c gives W_ij = a L_ij^2 (i != j) and
/// h_i = a L_ii^2 + b L_ii + c.
template <typename Scalar>
BoltzmannParams<Scalar> to_boltzmann(const Dkpp<Scalar>& model) {
  const auto& phi = model.phi();
  if (phi.kind() != SpectralKind::Quadratic) {
    throw InvalidArgument("to_boltzmann requires a quadratic phi");
  }
  const auto& l = model.kernel().matrix();
  BoltzmannParams<Scalar> bm;
  bm.w = phi.a() * l.array().square().matrix();
  bm.w.diagonal().setZero();
  const auto d = l.diagonal().array();
  bm.h = (phi.a() * d.square() + phi.b() * d + phi.c()).matrix();
  return bm;
}

/// Success probabilities of the independent Bernoulli trials an affine-phi
/// model reduces to: logistic(b L_ii + c).
template <typename Scalar>
BernoulliProduct<Scalar> to_bernoulli(const Dkpp<Scalar>& model) {
  const auto& phi = model.phi();
  if (phi.kind() != SpectralKind::Affine) {
    throw InvalidArgument("to_bernoulli requires an affine phi");
  }
  const auto& l = model.kernel().matrix();
  Vector<Scalar> q(l.rows());
  for (Index i = 0; i < l.rows(); ++i) q(i) = logistic(phi.b() * l(i, i) + phi.c());
  return BernoulliProduct<Scalar>(std::move(q));
}

template <typename Scalar = double>
struct ModularityCheck {
  bool holds = true;
  /// Largest amount by which the inequality fails (0 when it holds
  /// everywhere, +inf when a finite side meets -inf on the wrong side).
  Scalar worst_violation = 0;
};

/// Absolute tolerance on the log scale for the exhaustive modularity checks.
inline constexpr double kModularityTolerance = 1e-9;

namespace detail {

template <typename Scalar>
ModularityCheck<Scalar> check_lattice_inequality(const Dkpp<Scalar>& model, bool submodular,
                                                 Index cap, Scalar tol) {
  detail::check_enumerable(model.size(), cap, "modularity check");
  const Vector<Scalar> f = exact_log_weights(model, cap);
  const std::uint64_t count = std::uint64_t{1} << model.size();
  ModularityCheck<Scalar> out;
  for (std::uint64_t s = 0; s < count; ++s) {
    for (std::uint64_t t = s + 1; t < count; ++t) {
      const Scalar lhs = f(Index(s)) + f(Index(t));
      const Scalar rhs = f(Index(s | t)) + f(Index(s & t));
      // submodular: lhs >= rhs; supermodular: rhs >= lhs.
      const Scalar big = submodular ? lhs : rhs;
      const Scalar small = submodular ? rhs : lhs;
      if (small == neg_inf<Scalar>()) continue;
      const Scalar violation = big == neg_inf<Scalar>() ? pos_inf<Scalar>() : small - big;
      if (violation > tol) out.holds = false;
      out.worst_violation = std::max(out.worst_violation, violation);
    }
  }
  return out;
}

}  // namespace detail

/// Exhaustively checks f(S) + f(T) >= f(S u T) + f(S n T) - tol for all
/// pairs, with f = log P~.
template <typename Scalar>
ModularityCheck<Scalar> check_log_submodular(const Dkpp<Scalar>& model, Index cap = 12,
                                             Scalar tol = Scalar(kModularityTolerance)) {
  return detail::check_lattice_inequality(model, true, cap, tol);
}

template <typename Scalar>
ModularityCheck<Scalar> check_log_supermodular(const Dkpp<Scalar>& model, Index cap = 12,
                                               Scalar tol = Scalar(kModularityTolerance)) {
  return detail::check_lattice_inequality(model, false, cap, tol);
}

// Model file: a "phi <variant> <coeffs...>" line plus either "kernel <path>"
// (an N x N kernel file) or "factor <path>" (a file with "N D" on the first
// line and N rows of D values; L = V V^T). Paths are resolved relative to the
// model file. '#' starts a comment.

template <typename Scalar = double>
Dkpp<Scalar> load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open model file " + path);
  std::optional<SpectralFunction<Scalar>> phi;
  std::optional<KernelMatrix<Scalar>> kernel;
  std::string line;
  const auto base = std::filesystem::path(path).parent_path();
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "phi") {
      phi = SpectralFunction<Scalar>::parse(line);
    } else if (key == "kernel" || key == "factor") {
      std::string file;
      ls >> file;
      auto p = std::filesystem::path(file);
      if (!p.is_absolute()) p = base / p;
      if (key == "kernel") {
        kernel = load_kernel<Scalar>(p.string());
      } else {
        std::ifstream fin(p);
        if (!fin) throw InvalidArgument("cannot open factor file " + p.string());
        std::string header;
        std::getline(fin, header);
        std::istringstream hs(header);
        Index rows = 0, cols = 0;
        if (!(hs >> rows >> cols) || rows < 1 || cols < 1) {
          throw InvalidArgument("factor file: first line must be 'N D'");
        }
        kernel = KernelMatrix<Scalar>::from_factor(read_matrix_rows<Scalar>(fin, rows, cols));
      }
    } else {
      throw InvalidArgument("model file: unknown key '" + key + "'");
    }
  }
  if (!phi || !kernel) throw InvalidArgument("model file needs a 'phi' line and a 'kernel' or 'factor' line");
  return Dkpp<Scalar>(std::move(*kernel), *phi);
}

/// Writes the kernel next to the model file as "<stem>.kernel".
template <typename Scalar>
void save_model(const std::string& path, const Dkpp<Scalar>& model) {
  const auto p = std::filesystem::path(path);
  const std::string kernel_name = p.stem().string() + ".kernel";
  save_kernel((p.parent_path() / kernel_name).string(), model.kernel());
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write model file " + path);
  out << model.phi().descriptor() << "\nkernel " << kernel_name << '\n';
}

}  // namespace dkpp

#endif  // DKPP_MODEL_HPP
