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

#ifndef DKPP_LEARNING_HPP
#define DKPP_LEARNING_HPP

#include "model.hpp"

#include <chrono>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <utility>

namespace dkpp {

/// Symmetric difference of `a` with {n}.
inline Subset flip(const Subset& a, Index n) {
  if (n < 0) throw InvalidArgument("flip: negative item");
  return a.contains(n) ? a.without(n) : a.with(n);
}

/// M observed subsets over n_items items.
struct BasketDataset {
  Index n_items = 0;
  std::vector<Subset> baskets;

  BasketDataset() = default;
  BasketDataset(Index n, std::vector<Subset> b) : n_items(n), baskets(std::move(b)) {
    if (n_items < 1) throw InvalidArgument("dataset needs at least one item");
    if (baskets.empty()) throw InvalidArgument("dataset needs at least one basket");
    for (const auto& s : baskets) s.validate(n_items);
  }

  Index size() const { return static_cast<Index>(baskets.size()); }

  /// Largest basket size.
  Index kappa() const {
    Index k = 0;
    for (const auto& s : baskets) k = std::max(k, s.size());
    return k;
  }
};

/// Reads the basket format: first non-comment line "N <int>", then one basket
/// per line (space-separated 0-based indices; a blank line is the empty
/// basket). '#' lines are comments.
inline BasketDataset read_baskets(std::istream& is) {
  std::string line;
  Index n = -1;
  std::vector<Subset> baskets;
  Index lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw InvalidArgument("basket file line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == '#') continue;
    std::istringstream ls(line);
    if (n < 0) {
      std::string key, extra;
      if (!(ls >> key)) continue;
      if (key != "N" || !(ls >> n) || n < 1 || (ls >> extra)) fail("expected 'N <positive int>'");
      continue;
    }
    std::vector<Index> items;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(tok, &used);
      } catch (const std::exception&) {
        fail("malformed index '" + tok + "'");
      }
      if (used != tok.size() || v < 0) fail("malformed index '" + tok + "'");
      if (v >= n) fail("index " + tok + " out of range for N = " + std::to_string(n));
      items.push_back(static_cast<Index>(v));
    }
    try {
      baskets.emplace_back(std::move(items));
    } catch (const InvalidArgument& e) {
      fail(e.what());
    }
  }
  if (n < 0) throw InvalidArgument("basket file: missing 'N <int>' header");
  return BasketDataset(n, std::move(baskets));
}

inline BasketDataset load_baskets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open basket file " + path);
  return read_baskets(in);
}

inline void write_baskets(std::ostream& os, const BasketDataset& data) {
  os << "N " << data.n_items << '\n';
  for (const auto& b : data.baskets) os << to_item_list(b) << '\n';
}

inline void save_baskets(const std::string& path, const BasketDataset& data) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write basket file " + path);
  write_baskets(out, data);
}

/// L = V V^T with V of shape N x D.
template <typename Scalar = double>
struct FactorizedKernel {
  Matrix<Scalar> v;

  KernelMatrix<Scalar> kernel() const { return KernelMatrix<Scalar>::from_factor(v); }
  Index n_items() const { return v.rows(); }
  Index rank() const { return v.cols(); }

  /// L[A] = V[A,:] V[A,:]^T without forming L.
  Matrix<Scalar> principal_submatrix(const Subset& a) const {
    const Matrix<Scalar> rows = v(a.items(), Eigen::all);
    return rows * rows.transpose();
  }
};

/// A (basket, item) pair (m, n) of the ratio-matching sum.
using RatioPair = std::pair<Index, Index>;

namespace detail {

/// Ratio-matching terms need the log-ratio d = tr phi(L[A]) - tr phi(L[A^n]).
/// The loss term is g(u)^2 = logistic(-d)^2 with u = exp(d).
template <typename Scalar>
Scalar log_ratio(Scalar f_a, Scalar f_flip) {
  if (std::isnan(f_a) || std::isnan(f_flip)) throw NumericalError("NaN in ratio-matching term");
  if (f_a == neg_inf<Scalar>() && f_flip == neg_inf<Scalar>()) {
    throw NumericalError("ratio-matching term: basket and its flip both have probability zero");
  }
  return f_a - f_flip;
}

template <typename Scalar>
Scalar ratio_term(Scalar d) {
  const Scalar g = logistic(-d);
  return g * g;
}

/// d/dL of the term, up to the scatter-back matrices: -2 u g(u) / (1+u)^2 =
/// -2 logistic(d) logistic(-d)^2.
template <typename Scalar>
Scalar ratio_weight(Scalar d) {
  const Scalar gm = logistic(-d);
  return Scalar(-2) * logistic(d) * gm * gm;
}

template <typename Scalar>
void check_pairs(const BasketDataset& data, std::span<const RatioPair> batch) {
  for (const auto& [m, n] : batch) {
    if (m < 0 || m >= data.size() || n < 0 || n >= data.n_items) {
      throw InvalidArgument("minibatch pair out of range");
    }
  }
}

template <typename Scalar, typename SubmatrixFn>
Scalar loss_impl(const BasketDataset& data, const SpectralFunction<Scalar>& phi,
                 std::span<const RatioPair> batch, Scalar scale, SubmatrixFn&& submatrix) {
  Scalar total = 0;
  for (const auto& [m, n] : batch) {
    const Subset& a = data.baskets[static_cast<std::size_t>(m)];
    const Scalar d = log_ratio(trace_phi<Scalar>(submatrix(a), phi),
                               trace_phi<Scalar>(submatrix(flip(a, n)), phi));
    total += ratio_term(d);
  }
  return scale * total;
}

inline std::vector<RatioPair> all_pairs(const BasketDataset& data) {
  std::vector<RatioPair> pairs;
  pairs.reserve(static_cast<std::size_t>(data.size() * data.n_items));
  for (Index m = 0; m < data.size(); ++m) {
    for (Index n = 0; n < data.n_items; ++n) pairs.emplace_back(m, n);
  }
  return pairs;
}

}  // namespace detail

/// Scale that makes a minibatch sum an unbiased estimate of the full loss
/// (1/M) sum_{m,n}: (M N / |batch|) / M.
inline double batch_scale(const BasketDataset& data, std::size_t batch_size) {
  return double(data.n_items) / double(batch_size);
}

/// Ratio-matching loss J(L) = (1/M) sum_{m,n} g(u_mn)^2 with g(x) = 1/(1+x)
/// and u_mn = exp(tr phi(L[A_m]) - tr phi(L[A_m flipped at n])).
template <typename Scalar>
Scalar ratio_matching_loss(const KernelMatrix<Scalar>& l, const SpectralFunction<Scalar>& phi,
                           const BasketDataset& data) {
  if (l.dim() != data.n_items) throw InvalidArgument("kernel size does not match dataset");
  const auto pairs = detail::all_pairs(data);
  return detail::loss_impl<Scalar>(data, phi, pairs, Scalar(1) / Scalar(data.size()),
                                   [&](const Subset& a) { return principal_submatrix(l, a); });
}

/// Minibatch estimate of the loss, scaled to be unbiased.
template <typename Scalar>
Scalar ratio_matching_loss(const KernelMatrix<Scalar>& l, const SpectralFunction<Scalar>& phi,
                           const BasketDataset& data, std::span<const RatioPair> batch) {
  if (l.dim() != data.n_items) throw InvalidArgument("kernel size does not match dataset");
  if (batch.empty()) throw InvalidArgument("empty minibatch");
  detail::check_pairs<Scalar>(data, batch);
  return detail::loss_impl<Scalar>(data, phi, batch, Scalar(batch_scale(data, batch.size())),
                                   [&](const Subset& a) { return principal_submatrix(l, a); });
}

template <typename Scalar>
Scalar ratio_matching_loss(const FactorizedKernel<Scalar>& fk, const SpectralFunction<Scalar>& phi,
                           const BasketDataset& data, std::span<const RatioPair> batch) {
  if (fk.n_items() != data.n_items) throw InvalidArgument("factor size does not match dataset");
  if (batch.empty()) throw InvalidArgument("empty minibatch");
  detail::check_pairs<Scalar>(data, batch);
  return detail::loss_impl<Scalar>(data, phi, batch, Scalar(batch_scale(data, batch.size())),
                                   [&](const Subset& a) { return fk.principal_submatrix(a); });
}

template <typename Scalar>
Scalar ratio_matching_loss(const FactorizedKernel<Scalar>& fk, const SpectralFunction<Scalar>& phi,
                           const BasketDataset& data) {
  if (fk.n_items() != data.n_items) throw InvalidArgument("factor size does not match dataset");
  const auto pairs = detail::all_pairs(data);
  return detail::loss_impl<Scalar>(data, phi, std::span<const RatioPair>(pairs),
                                   Scalar(1) / Scalar(data.size()),
                                   [&](const Subset& a) { return fk.principal_submatrix(a); });
}

namespace detail {

/// Calls emit(A, w) for each pair, where the pair's gradient is
/// w * (scatter(phi'(L[A_m])) - scatter(phi'(L[A_m flipped]))). Pairs with a
/// zero weight (infinite log-ratio) are skipped.
template <typename Scalar, typename SubmatrixFn, typename Emit>
void for_each_weighted_pair(const BasketDataset& data, const SpectralFunction<Scalar>& phi,
                            std::span<const RatioPair> batch, Scalar scale,
                            SubmatrixFn&& submatrix, Emit&& emit) {
  for (const auto& [m, n] : batch) {
    const Subset& a = data.baskets[static_cast<std::size_t>(m)];
    const Subset a_flip = flip(a, n);
    const Matrix<Scalar> sub_a = submatrix(a);
    const Matrix<Scalar> sub_flip = submatrix(a_flip);
    const Scalar d = log_ratio(trace_phi<Scalar>(sub_a, phi), trace_phi<Scalar>(sub_flip, phi));
    const Scalar w = scale * ratio_weight(d);
    if (w == Scalar(0)) continue;
    emit(a, phi_derivative_matrix<Scalar>(sub_a, phi), w);
    emit(a_flip, phi_derivative_matrix<Scalar>(sub_flip, phi), -w);
  }
}

}  // namespace detail

/// dJ/dL for a minibatch (scaled like the loss). Each entry is the partial
/// derivative with respect to L_ij treated as an independent variable; the
/// result is symmetric.
template <typename Scalar>
Matrix<Scalar> ratio_matching_grad_l(const KernelMatrix<Scalar>& l, const SpectralFunction<Scalar>& phi,
                                     const BasketDataset& data, std::span<const RatioPair> batch) {
  if (l.dim() != data.n_items) throw InvalidArgument("kernel size does not match dataset");
  if (batch.empty()) throw InvalidArgument("empty minibatch");
  detail::check_pairs<Scalar>(data, batch);
  Matrix<Scalar> grad = Matrix<Scalar>::Zero(l.dim(), l.dim());
  detail::for_each_weighted_pair<Scalar>(
      data, phi, batch, Scalar(batch_scale(data, batch.size())),
      [&](const Subset& a) { return principal_submatrix(l, a); },
      [&](const Subset& a, const Matrix<Scalar>& dphi, Scalar w) {
        if (a.empty()) return;
        grad(a.items(), a.items()) += w * dphi;
      });
  return grad;
}

template <typename Scalar>
Matrix<Scalar> ratio_matching_grad_l(const KernelMatrix<Scalar>& l, const SpectralFunction<Scalar>& phi,
                                     const BasketDataset& data) {
  const auto pairs = detail::all_pairs(data);
  // The full loss uses 1/M; batch scaling over all M N pairs gives the same.
  return ratio_matching_grad_l(l, phi, data, std::span<const RatioPair>(pairs));
}

/// dJ/dV = 2 (dJ/dL) V, accumulated row block by row block: each pair only
/// touches the rows of V indexed by its basket, so no N x N matrix is formed.
template <typename Scalar>
Matrix<Scalar> ratio_matching_grad_v(const FactorizedKernel<Scalar>& fk, const SpectralFunction<Scalar>& phi,
                                     const BasketDataset& data, std::span<const RatioPair> batch) {
  if (fk.n_items() != data.n_items) throw InvalidArgument("factor size does not match dataset");
  if (batch.empty()) throw InvalidArgument("empty minibatch");
  detail::check_pairs<Scalar>(data, batch);
  Matrix<Scalar> grad = Matrix<Scalar>::Zero(fk.n_items(), fk.rank());
  detail::for_each_weighted_pair<Scalar>(
      data, phi, batch, Scalar(batch_scale(data, batch.size())),
      [&](const Subset& a) { return fk.principal_submatrix(a); },
      [&](const Subset& a, const Matrix<Scalar>& dphi, Scalar w) {
        if (a.empty()) return;
        grad(a.items(), Eigen::all) += (Scalar(2) * w) * (dphi * fk.v(a.items(), Eigen::all));
      });
  return grad;
}

template <typename Scalar>
Matrix<Scalar> ratio_matching_grad_v(const FactorizedKernel<Scalar>& fk, const SpectralFunction<Scalar>& phi,
                                     const BasketDataset& data) {
  const auto pairs = detail::all_pairs(data);
  return ratio_matching_grad_v(fk, phi, data, std::span<const RatioPair>(pairs));
}

template <typename Scalar = double>
struct TrainConfig {
  Scalar learning_rate = Scalar(1e-2);
  Index n_iters = 1000;
  Index minibatch_size = 100;
  std::uint64_t seed = 0;
  SpectralFunction<Scalar> phi = SpectralFunction<Scalar>::box_cox(Scalar(0.5));
  Index rank = 8;
  Scalar momentum = 0;
  /// Loss is recorded at iteration 0 and then every eval_every iterations
  /// (and after the last one).
  Index eval_every = 100;
};

struct TracePoint {
  Index iter = 0;
  double loss = 0;
  /// Training time so far, excluding loss evaluations.
  double wall_ms = 0;
};

template <typename Scalar = double>
struct TrainResult {
  FactorizedKernel<Scalar> model;
  std::vector<TracePoint> trace;
  /// Number of pairs used per loss evaluation (all M N, or a fixed subsample).
  Index eval_pairs = 0;
  bool eval_subsampled = false;
};

/// Beyond this many (m, n) pairs the trace evaluates a fixed subsample.
inline constexpr Index kFullEvalLimit = 1000000;
inline constexpr Index kEvalSubsample = 100000;

/// Plain minibatch SGD on V (optionally with heavy-ball momentum). V starts
/// i.i.d. normal with standard deviation 1/sqrt(D); each step draws the
/// minibatch pairs uniformly with replacement.
template <typename Scalar>
TrainResult<Scalar> sgd_fit(const BasketDataset& data, const TrainConfig<Scalar>& config) {
  if (!(config.learning_rate >= 0) || !std::isfinite(config.learning_rate)) {
    throw InvalidArgument("learning rate must be finite and nonnegative");
  }
  if (config.minibatch_size < 1) throw InvalidArgument("minibatch size must be >= 1");
  if (config.rank < 1) throw InvalidArgument("rank must be >= 1");
  if (config.n_iters < 0) throw InvalidArgument("iteration count must be >= 0");
  if (config.eval_every < 1) throw InvalidArgument("eval_every must be >= 1");
  const Index n = data.n_items, d = config.rank;
  if (config.phi.singular_at_zero() ||
      (config.phi.kind() == SpectralKind::BoxCox && config.phi.lambda() < Scalar(1))) {
    const Index largest = std::min(data.kappa() + 1, n);
    if (d < largest) {
      throw InvalidArgument("rank " + std::to_string(d) + " makes submatrices of size " +
                            std::to_string(largest) + " singular, where " + config.phi.descriptor() +
                            " has no derivative; use rank >= " + std::to_string(largest));
    }
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<Scalar> normal(0, Scalar(1) / std::sqrt(Scalar(d)));
  TrainResult<Scalar> result;
  result.model.v.resize(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) result.model.v(i, j) = normal(rng);

  std::vector<RatioPair> eval_pairs;
  if (data.size() * n > kFullEvalLimit) {
    std::mt19937_64 eval_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<Index> pm(0, data.size() - 1), pn(0, n - 1);
    eval_pairs.resize(static_cast<std::size_t>(kEvalSubsample));
    for (auto& p : eval_pairs) p = {pm(eval_rng), pn(eval_rng)};
    result.eval_subsampled = true;
  } else {
    eval_pairs = detail::all_pairs(data);
  }
  result.eval_pairs = static_cast<Index>(eval_pairs.size());

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  double eval_ms = 0;
  auto record = [&](Index iter) {
    const auto eval_start = Clock::now();
    const double ms = std::chrono::duration<double, std::milli>(eval_start - start).count() - eval_ms;
    const double loss = double(ratio_matching_loss(result.model, config.phi, data,
                                                   std::span<const RatioPair>(eval_pairs)));
    eval_ms += std::chrono::duration<double, std::milli>(Clock::now() - eval_start).count();
    if (!std::isfinite(loss)) {
      throw NumericalError("sgd_fit diverged: loss is " + std::to_string(loss) + " at iteration " +
                           std::to_string(iter) + "; try a smaller learning rate");
    }
    result.trace.push_back({iter, loss, ms});
  };
  record(0);

  std::uniform_int_distribution<Index> pick_m(0, data.size() - 1), pick_n(0, n - 1);
  std::vector<RatioPair> batch(static_cast<std::size_t>(config.minibatch_size));
  Matrix<Scalar> velocity = Matrix<Scalar>::Zero(n, d);
  for (Index it = 1; it <= config.n_iters; ++it) {
    for (auto& p : batch) p = {pick_m(rng), pick_n(rng)};
    const Matrix<Scalar> g = ratio_matching_grad_v(result.model, config.phi, data,
                                                   std::span<const RatioPair>(batch));
    if (!g.allFinite()) {
      throw NumericalError("sgd_fit diverged: non-finite gradient at iteration " + std::to_string(it));
    }
    velocity = config.momentum * velocity + g;
    result.model.v -= config.learning_rate * velocity;
    if (it % config.eval_every == 0 || it == config.n_iters) record(it);
  }
  return result;
}

/// Factor file: "N D" on the first line, then N rows of D values.
template <typename Scalar>
void write_factor(std::ostream& os, const FactorizedKernel<Scalar>& fk) {
  os << fk.v.rows() << ' ' << fk.v.cols() << '\n' << std::setprecision(17);
  for (Index i = 0; i < fk.v.rows(); ++i) {
    for (Index j = 0; j < fk.v.cols(); ++j) {
      if (j) os << ' ';
      os << fk.v(i, j);
    }
    os << '\n';
  }
}

template <typename Scalar = double>
FactorizedKernel<Scalar> read_factor(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("factor file is empty");
  std::istringstream hs(line);
  Index n = 0, d = 0;
  if (!(hs >> n >> d) || n < 1 || d < 1) throw InvalidArgument("factor file: first line must be 'N D'");
  return FactorizedKernel<Scalar>{read_matrix_rows<Scalar>(is, n, d)};
}

/// Writes the factor next to the model file as "<stem>.factor" and a model
/// file that load_model reads back as L = V V^T.
template <typename Scalar>
void save_factor_model(const std::string& path, const FactorizedKernel<Scalar>& fk,
                       const SpectralFunction<Scalar>& phi) {
  const auto p = std::filesystem::path(path);
  const std::string factor_name = p.stem().string() + ".factor";
  {
    std::ofstream fout(p.parent_path() / factor_name);
    if (!fout) throw InvalidArgument("cannot write factor file " + factor_name);
    write_factor(fout, fk);
  }
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write model file " + path);
  out << phi.descriptor() << "\nfactor " << factor_name << '\n';
}

}  // namespace dkpp

#endif  // DKPP_LEARNING_HPP
