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

#include "doctest.h"
#include "oracles.hpp"

#include <dkpp/learning.hpp>

#include <sstream>

using namespace dkpp;
using Phi = SpectralFunction<double>;

namespace {

BasketDataset random_baskets(Index n, Index m, std::uint64_t seed, double p = 0.4) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<Subset> baskets;
  for (Index b = 0; b < m; ++b) {
    std::vector<Index> items;
    for (Index i = 0; i < n; ++i)
      if (coin(rng)) items.push_back(i);
    baskets.emplace_back(items);
  }
  return BasketDataset(n, baskets);
}

double sigmoid(double x) { return 1 / (1 + std::exp(-x)); }

template <typename Phi_>
double oracle_trace(const oracle::Dense& l, const Subset& a, Phi_ phi) {
  std::uint64_t mask = a.to_mask();
  const auto ev = oracle::jacobi_eigenvalues(oracle::sub(l, mask));
  double mx = 0, s = 0;
  for (double v : ev) mx = std::max(mx, v);
  for (double v : ev) s += phi(v < 1e-12 * std::max(mx, 1.0) ? 0.0 : v);
  return s;
}

/// (1/M) sum_{m,n} (1/(1+u))^2 written out with plain loops.
template <typename Phi_>
double oracle_loss(const MatrixXd& l, const BasketDataset& data, Phi_ phi) {
  const auto dense = oracle::to_dense(l);
  double total = 0;
  for (const auto& a : data.baskets)
    for (Index n = 0; n < data.n_items; ++n) {
      const Subset b = a.contains(n) ? a.without(n) : a.with(n);
      const double u = std::exp(oracle_trace(dense, a, phi) - oracle_trace(dense, b, phi));
      total += 1 / ((1 + u) * (1 + u));
    }
  return total / double(data.size());
}

MatrixXd random_symmetric(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0, 1);
  MatrixXd e(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) e(i, j) = normal(rng);
  return (0.5 * (e + e.transpose())).eval();
}

std::vector<Subset> oracle_samples(const MatrixXd& l, double lambda, Index count, std::uint64_t seed) {
  const auto p = oracle::normalize(
      oracle::log_weights(oracle::to_dense(l), [lambda](double x) { return oracle::box_cox(x, lambda); }));
  std::vector<double> cdf(p.size());
  std::partial_sum(p.begin(), p.end(), cdf.begin());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0, 1);
  std::vector<Subset> out;
  for (Index s = 0; s < count; ++s) {
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), unif(rng) * cdf.back());
    out.push_back(Subset::from_mask(std::uint64_t(std::min<std::ptrdiff_t>(it - cdf.begin(), std::ptrdiff_t(p.size()) - 1))));
  }
  return out;
}

}  // namespace

TEST_CASE("flip") {
  CHECK(flip(Subset{0, 2}, 2) == Subset{0});
  CHECK(flip(Subset{0}, 1) == Subset{0, 1});
  const Subset a{1, 3, 4};
  for (Index n = 0; n < 6; ++n) CHECK(flip(flip(a, n), n) == a);
}

TEST_CASE("basket files") {
  std::istringstream in("N 3\n0 2\n\n1");
  const auto data = read_baskets(in);
  CHECK(data.n_items == 3);
  REQUIRE(data.size() == 3);
  CHECK(data.baskets[0] == Subset{0, 2});
  CHECK(data.baskets[1].empty());
  CHECK(data.baskets[2] == Subset{1});
  CHECK(data.kappa() == 2);

  std::istringstream commented("# header\nN 2\n# skipped\n1\n");
  CHECK(read_baskets(commented).size() == 1);

  auto error_of = [](const std::string& text) {
    std::istringstream is(text);
    try {
      read_baskets(is);
    } catch (const InvalidArgument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(error_of("N 3\n0 1\n0 0\n").find("line 3") != std::string::npos);
  CHECK(error_of("N 3\n3\n").find("out of range") != std::string::npos);
  CHECK(error_of("N 3\n1 x\n").find("malformed") != std::string::npos);
  CHECK(error_of("N 3\n-1\n").find("malformed") != std::string::npos);
  CHECK_FALSE(error_of("3\n0\n").empty());
  CHECK_FALSE(error_of("N 3\n").empty());
  CHECK_FALSE(error_of("").empty());

  const auto random = random_baskets(7, 40, 3);
  std::stringstream ss;
  write_baskets(ss, random);
  const auto back = read_baskets(ss);
  CHECK(back.n_items == 7);
  CHECK(back.baskets == random.baskets);

  CHECK_THROWS_AS(BasketDataset(3, {Subset{4}}), InvalidArgument);
  CHECK_THROWS_AS(BasketDataset(3, {}), InvalidArgument);
}

TEST_CASE("ratio-matching loss") {
  const auto data = random_baskets(5, 12, 1);
  const KernelMatrix<double> l(oracle::random_psd(5, 2));
  CHECK(ratio_matching_loss(l, Phi::affine(0, 0), data) == doctest::Approx(5.0 / 4).epsilon(1e-15));

  for (const auto& phi : {Phi::box_cox(0.5), Phi::box_cox(1.5), Phi::log()}) {
    const double lambda = phi.kind() == SpectralKind::Log ? 0.0 : phi.lambda();
    const double expected = oracle_loss(l.matrix(), data, [lambda](double x) { return oracle::box_cox(x, lambda); });
    const double loss = ratio_matching_loss(l, phi, data);
    CHECK(loss == doctest::Approx(expected).epsilon(1e-10));
    CHECK(loss > 0);
    CHECK(loss < double(data.n_items));
  }

  // One item, observed in every basket: only the pair (m, 0) with flip to
  // the empty set, so the loss is logistic(-phi(x))^2.
  const BasketDataset single(1, {Subset{0}, Subset{0}, Subset{0}});
  for (double x : {0.3, 1.0, 2.5}) {
    const KernelMatrix<double> lx(MatrixXd::Constant(1, 1, x));
    const double phi_x = 2 * (std::sqrt(x) - 1);
    CHECK(ratio_matching_loss(lx, Phi::box_cox(0.5), single) ==
          doctest::Approx(std::pow(sigmoid(-phi_x), 2)).epsilon(1e-14));
  }

  // Relabeling items in L and data together.
  const std::vector<Index> perm = {3, 0, 4, 1, 2};
  MatrixXd lp(5, 5);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j) lp(perm[i], perm[j]) = l(i, j);
  std::vector<Subset> relabeled;
  for (const auto& a : data.baskets) {
    std::vector<Index> items;
    for (Index i : a) items.push_back(perm[static_cast<std::size_t>(i)]);
    relabeled.emplace_back(items);
  }
  CHECK(ratio_matching_loss(KernelMatrix<double>(lp), Phi::box_cox(0.5), BasketDataset(5, relabeled)) ==
        doctest::Approx(ratio_matching_loss(l, Phi::box_cox(0.5), data)).epsilon(1e-12));

  CHECK_THROWS_AS(ratio_matching_loss(KernelMatrix<double>(oracle::random_psd(4, 1)), Phi::log(), data), InvalidArgument);
  const std::vector<RatioPair> bad = {{0, 5}};
  CHECK_THROWS_AS(ratio_matching_loss(l, Phi::log(), data, std::span<const RatioPair>(bad)), InvalidArgument);
}

TEST_CASE("ratio terms at infinite log-ratios") {
  // Under log, the flip of {0} to {0,1} is impossible for identical items.
  const BasketDataset data(2, {Subset{0}});
  const KernelMatrix<double> l(MatrixXd::Ones(2, 2));
  // n = 0: d = log 1 - 0 = 0, term 1/4. n = 1: d = +inf, term 0.
  CHECK(ratio_matching_loss(l, Phi::log(), data) == doctest::Approx(0.25));
  const BasketDataset impossible(2, {Subset{0, 1}});
  // n = 0: d = -inf, term 1. n = 1: d = -inf, term 1.
  CHECK(ratio_matching_loss(l, Phi::log(), impossible) == 2.0);
}

TEST_CASE("flip symmetry of the ratio term") {
  for (double d : {-30.0, -2.0, -0.1, 0.0, 0.7, 5.0, 40.0}) {
    const double u = std::exp(d);
    const double g = 1 / (1 + u);
    CHECK(detail::ratio_term(-d) == doctest::Approx(u * g * u * g).epsilon(1e-12));
    CHECK(detail::ratio_term(d) == doctest::Approx(g * g).epsilon(1e-12));
  }
}

TEST_CASE("gradient with respect to L") {
  const Index n = 6;
  const auto data = random_baskets(n, 15, 4);
  const KernelMatrix<double> l(oracle::random_psd(n, 5));
  const auto phi = Phi::box_cox(0.5);
  const MatrixXd g = ratio_matching_grad_l(l, phi, data);
  CHECK((g - g.transpose()).cwiseAbs().maxCoeff() <= 1e-12);

  const double h = 1e-5;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      MatrixXd e = MatrixXd::Zero(n, n);
      e(i, j) = e(j, i) = 1;
      const double fd = (oracle_loss(l.matrix() + h * e, data, [](double x) { return oracle::box_cox(x, 0.5); }) -
                         oracle_loss(l.matrix() - h * e, data, [](double x) { return oracle::box_cox(x, 0.5); })) /
                        (2 * h);
      const double analytic = i == j ? g(i, i) : g(i, j) + g(j, i);
      if (std::abs(analytic) > 1e-8) {
        CAPTURE(i);
        CAPTURE(j);
        CHECK(std::abs(fd - analytic) <= 1e-5 * std::abs(analytic));
      }
    }
  }
}

TEST_CASE("affine gradient is diagonal") {
  const Index n = 5;
  const auto data = random_baskets(n, 9, 8);
  const MatrixXd lm = oracle::random_psd(n, 9);
  const double b = 0.7, c = -0.2;
  const MatrixXd g = ratio_matching_grad_l(KernelMatrix<double>(lm), Phi::affine(b, c), data);
  for (Index i = 0; i < n; ++i) {
    const double s = b * lm(i, i) + c;
    double expected = 0;
    for (const auto& a : data.baskets) {
      const double d = a.contains(i) ? s : -s;
      const double w = -2 * sigmoid(d) * sigmoid(-d) * sigmoid(-d);
      expected += (a.contains(i) ? w : -w) * b;
    }
    expected /= double(data.size());
    CHECK(g(i, i) == doctest::Approx(expected).epsilon(1e-12));
    for (Index j = 0; j < n; ++j)
      if (j != i) CHECK(g(i, j) == 0.0);
  }
}

TEST_CASE("directional derivatives match the loss") {
  const std::vector<Phi> phis = {Phi::log(), Phi::box_cox(0.5), Phi::box_cox(1.5), Phi::quadratic(0.5, 1, -1),
                                 Phi::affine(1.2, -0.5)};
  for (const auto& phi : phis) {
    int checked = 0;
    for (std::uint64_t inst = 0; inst < 20; ++inst) {
      const Index n = 5;
      const auto data = random_baskets(n, 8, 100 + inst);
      const MatrixXd lm = oracle::random_psd(n, 200 + inst) + 0.2 * MatrixXd::Identity(n, n);
      const MatrixXd dir = random_symmetric(n, 300 + inst);
      const double t = 1e-5;
      const double fd = (ratio_matching_loss(KernelMatrix<double>(lm + t * dir), phi, data) -
                         ratio_matching_loss(KernelMatrix<double>(lm - t * dir), phi, data)) /
                        (2 * t);
      const double analytic = (ratio_matching_grad_l(KernelMatrix<double>(lm), phi, data).array() * dir.array()).sum();
      CAPTURE(phi.descriptor());
      CAPTURE(inst);
      CHECK(std::abs(fd - analytic) <= 1e-5 * std::max(std::abs(analytic), 1e-3));
      ++checked;
    }
    CHECK(checked == 20);
  }
}

TEST_CASE("gradient with respect to V") {
  const Index n = 6, d = 3;
  const auto data = random_baskets(n, 12, 21);
  std::mt19937_64 rng(22);
  std::normal_distribution<double> normal(0, 1);
  FactorizedKernel<double> fk{MatrixXd(n, d)};
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) fk.v(i, j) = normal(rng);
  const auto phi = Phi::box_cox(1.5);
  const MatrixXd gv = ratio_matching_grad_v(fk, phi, data);
  const MatrixXd gl = ratio_matching_grad_l(fk.kernel(), phi, data);
  CHECK((gv - 2 * gl * fk.v).cwiseAbs().maxCoeff() <= 1e-10);

  const double h = 1e-5;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) {
      FactorizedKernel<double> plus = fk, minus = fk;
      plus.v(i, j) += h;
      minus.v(i, j) -= h;
      const auto bc = [](double x) { return oracle::box_cox(x, 1.5); };
      const double fd = (oracle_loss(plus.v * plus.v.transpose(), data, bc) -
                         oracle_loss(minus.v * minus.v.transpose(), data, bc)) /
                        (2 * h);
      if (std::abs(gv(i, j)) > 1e-8) {
        CAPTURE(i);
        CAPTURE(j);
        CHECK(std::abs(fd - gv(i, j)) <= 1e-5 * std::abs(gv(i, j)));
      }
    }

  const FactorizedKernel<double> eye{MatrixXd::Identity(n, n)};
  CHECK((ratio_matching_grad_v(eye, phi, data) - 2 * ratio_matching_grad_l(eye.kernel(), phi, data)).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(std::abs(ratio_matching_loss(fk, phi, data) - ratio_matching_loss(fk.kernel(), phi, data)) <= 1e-12);
}

TEST_CASE("minibatch loss is unbiased") {
  const auto data = random_baskets(6, 30, 31);
  const KernelMatrix<double> l(oracle::random_psd(6, 32));
  const auto phi = Phi::box_cox(0.5);
  const double full = ratio_matching_loss(l, phi, data);
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<Index> pm(0, 29), pn(0, 5);
  const int runs = 10000;
  double mean = 0, m2 = 0;
  std::vector<RatioPair> batch(10);
  for (int r = 0; r < runs; ++r) {
    for (auto& p : batch) p = {pm(rng), pn(rng)};
    const double x = ratio_matching_loss(l, phi, data, std::span<const RatioPair>(batch));
    const double delta = x - mean;
    mean += delta / (r + 1);
    m2 += delta * (x - mean);
  }
  const double se = std::sqrt(m2 / (runs - 1) / runs);
  CHECK(std::abs(mean - full) <= 4 * se);

  // The full pair list as a batch reproduces the full loss and gradient.
  const auto pairs = detail::all_pairs(data);
  CHECK(ratio_matching_loss(l, phi, data, std::span<const RatioPair>(pairs)) == doctest::Approx(full).epsilon(1e-14));
}

TEST_CASE("SGD") {
  const auto data = random_baskets(6, 50, 41);
  TrainConfig<double> config;
  config.learning_rate = 0;
  config.n_iters = 20;
  config.eval_every = 5;
  config.rank = 6;
  config.seed = 4;
  const auto frozen = sgd_fit(data, config);
  REQUIRE(frozen.trace.size() == 5);
  for (const auto& p : frozen.trace) CHECK(p.loss == frozen.trace.front().loss);
  CHECK(frozen.model.v.rows() == 6);
  CHECK(frozen.model.v.cols() == 6);
  CHECK(frozen.eval_pairs == 300);

  config.learning_rate = 0.05;
  const auto a = sgd_fit(data, config);
  const auto b = sgd_fit(data, config);
  CHECK(a.model.v == b.model.v);
  CHECK(a.model.v != frozen.model.v);

  config.minibatch_size = 0;
  CHECK_THROWS_AS(sgd_fit(data, config), InvalidArgument);
  config.minibatch_size = 10;
  config.rank = 3;
  CHECK_THROWS_AS(sgd_fit(data, config), InvalidArgument);
  config.phi = Phi::box_cox(1.5);
  CHECK_NOTHROW(sgd_fit(data, config));
  config.minibatch_size = 10;
  config.learning_rate = 1e300;
  config.phi = Phi::quadratic(1, 0, 0);
  CHECK_THROWS_AS(sgd_fit(data, config), NumericalError);
}

TEST_CASE("factor text round trip") {
  FactorizedKernel<double> fk{oracle::random_psd(4, 1).leftCols(2)};
  std::stringstream ss;
  write_factor(ss, fk);
  CHECK(read_factor(ss).v == fk.v);
  std::istringstream bad("4\n");
  CHECK_THROWS_AS(read_factor(bad), InvalidArgument);
}

TEST_CASE("synthetic recovery") {
  const Index n = 8;
  const MatrixXd truth = oracle::random_psd(n, 51);
  const auto phi = Phi::box_cox(1.5);
  const BasketDataset train(n, oracle_samples(truth, 1.5, 2000, 52));
  const BasketDataset test(n, oracle_samples(truth, 1.5, 2000, 53));
  TrainConfig<double> config;
  config.phi = phi;
  config.rank = n;
  config.learning_rate = 0.05;
  config.n_iters = 3000;
  config.minibatch_size = 100;
  config.eval_every = 500;
  config.seed = 54;
  const auto fit = sgd_fit(train, config);
  CHECK(fit.trace.back().loss <= fit.trace.front().loss);
  const double fitted = ratio_matching_loss(fit.model, phi, test);
  const double reference = ratio_matching_loss(KernelMatrix<double>(truth), phi, test);
  CAPTURE(fitted);
  CAPTURE(reference);
  CHECK(std::abs(fitted - reference) <= 0.1 * reference);
}

TEST_CASE("per-iteration cost does not depend on the number of baskets") {
  TrainConfig<double> config;
  config.phi = Phi::box_cox(1.5);
  config.rank = 4;
  config.n_iters = 400;
  config.eval_every = 1000;
  config.minibatch_size = 50;
  auto per_iter = [&](Index m) {
    const auto data = random_baskets(20, m, 61, 0.2);
    double best = pos_inf<double>();
    for (int rep = 0; rep < 3; ++rep) best = std::min(best, sgd_fit(data, config).trace.back().wall_ms);
    return best / double(config.n_iters);
  };
  const double small = per_iter(1000), large = per_iter(10000);
  CAPTURE(small);
  CAPTURE(large);
  CHECK(large < 2 * small);
  CHECK(small < 2 * large);
}
