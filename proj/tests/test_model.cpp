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

#include <dkpp/model.hpp>

#include <filesystem>
#include <sstream>

using namespace dkpp;
using Phi = SpectralFunction<double>;

namespace {

Dkpp<double> random_model(Index n, std::uint64_t seed, Phi phi) {
  return Dkpp<double>(KernelMatrix<double>(oracle::random_psd(n, seed)), phi);
}

std::vector<Phi> standard_phis() {
  return {Phi::log(), Phi::box_cox(0.5), Phi::box_cox(1.5), Phi::quadratic(1, 0, 0), Phi::affine(1, -1)};
}

}  // namespace

TEST_CASE("unnormalized log probability") {
  const auto m = random_model(5, 1, Phi::box_cox(0.7));
  CHECK(unnorm_logprob(m, Subset{}) == 0.0);
  const Dkpp<double> eye(KernelMatrix<double>(MatrixXd::Identity(4, 4)), Phi::log());
  for (std::uint64_t mask = 0; mask < 16; ++mask) CHECK(unnorm_logprob(eye, Subset::from_mask(mask)) == 0.0);
  const Dkpp<double> four(KernelMatrix<double>(MatrixXd::Constant(1, 1, 4.0)), Phi::box_cox(0.5));
  CHECK(unnorm_logprob(four, Subset{0}) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("exact log partition") {
  const auto flat = random_model(3, 2, Phi::affine(0, 0));
  CHECK(exact_log_partition(flat) == doctest::Approx(std::log(8.0)).epsilon(1e-15));

  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const MatrixXd l = oracle::random_psd(8, seed);
    const Dkpp<double> dpp(KernelMatrix<double>(l), Phi::log());
    CHECK(std::abs(exact_log_partition(dpp) - oracle::log_det_i_plus(oracle::to_dense(l))) <= 1e-8);
  }

  const MatrixXd l = oracle::random_psd(7, 4);
  const double b = 0.8, c = -0.3;
  const Dkpp<double> aff(KernelMatrix<double>(l), Phi::affine(b, c));
  double closed = 0;
  for (Index i = 0; i < 7; ++i) closed += std::log1p(std::exp(b * l(i, i) + c));
  CHECK(exact_log_partition(aff) == doctest::Approx(closed).epsilon(1e-12));

  for (const auto& phi : standard_phis()) CHECK(exact_log_partition(random_model(6, 3, phi)) >= 0.0);

  CHECK_THROWS_AS(exact_log_partition(random_model(6, 3, Phi::log()), 5), InvalidArgument);
}

TEST_CASE("exact probabilities") {
  const auto flat = random_model(2, 5, Phi::affine(0, 0));
  for (std::uint64_t mask = 0; mask < 4; ++mask) CHECK(exact_prob(flat, Subset::from_mask(mask)) == doctest::Approx(0.25));

  const Dkpp<double> eye(KernelMatrix<double>(MatrixXd::Identity(2, 2)), Phi::log());
  CHECK(exact_prob(eye, Subset{0}) == doctest::Approx(0.25).epsilon(1e-14));

  // Above the cap a stored normalizer is required.
  Dkpp<double> big = random_model(6, 1, Phi::log());
  CHECK_THROWS_AS(exact_prob(big, Subset{0}, 4), InvalidArgument);
  big.set_log_partition(exact_log_partition(big));
  CHECK(exact_prob(big, Subset{0}, 4) == doctest::Approx(exact_prob(random_model(6, 1, Phi::log()), Subset{0})));
  CHECK_THROWS_AS(big.set_log_partition(1.0), InvalidArgument);
}

TEST_CASE("probabilities sum to one") {
  for (const auto& phi : standard_phis()) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto m = random_model(8, 100 + seed, phi);
      CHECK(std::abs(exact_distribution(m).sum() - 1.0) <= 1e-10);
    }
  }
}

TEST_CASE("log phi reduces to a DPP") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const MatrixXd l = oracle::random_psd(8, 50 + seed);
    const Dkpp<double> dpp(KernelMatrix<double>(l), Phi::log());
    const auto dense = oracle::to_dense(l);
    const double det_i_plus = std::exp(oracle::log_det_i_plus(dense));
    const VectorXd p = exact_distribution(dpp);
    for (std::uint64_t mask = 0; mask < 256; ++mask) {
      CHECK(std::abs(p(Index(mask)) * det_i_plus - oracle::det(oracle::sub(dense, mask))) <= 1e-8);
    }
  }
}

TEST_CASE("quadratic phi equals its Boltzmann machine") {
  MatrixXd l(2, 2);
  l << 1, 0.5, 0.5, 1;
  const auto bm = to_boltzmann(Dkpp<double>(KernelMatrix<double>(l), Phi::quadratic(1, 0, 0)));
  CHECK(bm.w(0, 1) == 0.25);
  CHECK(bm.w(1, 0) == 0.25);
  CHECK(bm.w(0, 0) == 0.0);
  CHECK(bm.h(0) == 1.0);
  CHECK(bm.h(1) == 1.0);

  const MatrixXd l6 = oracle::random_psd(6, 8);
  const auto indep = to_boltzmann(Dkpp<double>(KernelMatrix<double>(l6), Phi::quadratic(0, 2, -1)));
  CHECK(indep.w.isZero());
  for (Index i = 0; i < 6; ++i) CHECK(indep.h(i) == doctest::Approx(2 * l6(i, i) - 1));

  for (double a : {1.0, -0.5}) {
    const auto model = random_model(8, 9, Phi::quadratic(a, 0.3, -0.2));
    const auto params = to_boltzmann(model);
    // Coupling signs follow the sign of a.
    for (Index i = 0; i < 8; ++i)
      for (Index j = 0; j < 8; ++j)
        if (i != j) CHECK(params.w(i, j) * a >= 0.0);
    std::vector<double> lw(256);
    for (std::uint64_t mask = 0; mask < 256; ++mask) lw[mask] = boltzmann_log_weight(params, Subset::from_mask(mask));
    const auto p_bm = oracle::normalize(lw);
    const VectorXd p = exact_distribution(model);
    for (std::uint64_t mask = 0; mask < 256; ++mask) CHECK(std::abs(p(Index(mask)) - p_bm[mask]) <= 1e-9);
  }
  CHECK_THROWS_AS(to_boltzmann(random_model(3, 1, Phi::log())), InvalidArgument);
}

TEST_CASE("affine phi equals independent Bernoulli trials") {
  CHECK(to_bernoulli(random_model(4, 1, Phi::affine(0, 0))).q().isApprox(VectorXd::Constant(4, 0.5)));
  const Dkpp<double> two(KernelMatrix<double>(MatrixXd::Constant(1, 1, 2.0)), Phi::affine(1, -2));
  CHECK(to_bernoulli(two)(0) == 0.5);

  const auto model = random_model(6, 12, Phi::affine(1.2, -0.7));
  const auto q = to_bernoulli(model);
  const VectorXd p = exact_distribution(model);
  for (Index i = 0; i < 6; ++i) {
    double marginal = 0;
    for (std::uint64_t mask = 0; mask < 64; ++mask)
      if ((mask >> i) & 1u) marginal += p(Index(mask));
    CHECK(std::abs(marginal - q(i)) <= 1e-10);
  }
  CHECK_THROWS_AS(to_bernoulli(random_model(3, 1, Phi::box_cox(1.0))), InvalidArgument);
}

TEST_CASE("dependence regimes from the Box-Cox parameter") {
  const auto affine = random_model(6, 3, Phi::affine(0.9, -0.1));
  CHECK(check_log_submodular(affine).holds);
  CHECK(check_log_supermodular(affine).holds);

  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    CHECK(check_log_submodular(random_model(6, 40 + seed, Phi::box_cox(0.5))).holds);
    CHECK(check_log_supermodular(random_model(6, 40 + seed, Phi::box_cox(1.5))).holds);
    CHECK(check_log_submodular(random_model(6, 40 + seed, Phi::log())).holds);
  }

  // Non-affine phi is not log-modular on kernels with off-diagonal mass.
  for (double lambda : {0.0, 0.5, 1.5, 2.0}) {
    const auto m = random_model(6, 77, Phi::box_cox(lambda));
    const double worst = std::max(check_log_submodular(m).worst_violation, check_log_supermodular(m).worst_violation);
    CAPTURE(lambda);
    CHECK(worst > 1e-6);
  }
  CHECK_THROWS_AS(check_log_submodular(random_model(13, 1, Phi::log())), InvalidArgument);
}

TEST_CASE("modularity check treats zero-probability sets") {
  // Rank-one kernel: every set of two or more items is impossible under log.
  const Dkpp<double> m(KernelMatrix<double>(MatrixXd::Ones(3, 3)), Phi::log());
  CHECK(check_log_submodular(m).holds);
  // For supermodularity, f({0}) + f({1}) is finite while f({0,1}) = -inf.
  const auto sup = check_log_supermodular(m);
  CHECK_FALSE(sup.holds);
  CHECK(sup.worst_violation == pos_inf<double>());
}

TEST_CASE("exact sampler follows the enumerated distribution") {
  const auto model = random_model(4, 2, Phi::box_cox(0.5));
  const auto draws = sample_exact(model, 100000, 7);
  std::vector<double> freq(16, 0.0);
  for (const auto& s : draws) freq[s.to_mask()] += 1.0 / 100000;
  const VectorXd p = exact_distribution(model);
  double tv = 0;
  for (int s = 0; s < 16; ++s) tv += 0.5 * std::abs(freq[s] - p(s));
  CHECK(tv < 0.01);
}

TEST_CASE("model file round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "dkpp_model_test";
  std::filesystem::create_directories(dir);
  const auto model = random_model(5, 3, Phi::box_cox(0.25));
  save_model((dir / "m.model").string(), model);
  const auto back = load_model<double>((dir / "m.model").string());
  CHECK(back.phi() == model.phi());
  CHECK(back.kernel().matrix() == model.kernel().matrix());

  {
    std::ofstream f(dir / "v.txt");
    f << "3 2\n1 0\n0 1\n1 1\n";
    std::ofstream m(dir / "f.model");
    m << "# learned\nphi log\nfactor v.txt\n";
  }
  const auto fac = load_model<double>((dir / "f.model").string());
  CHECK(fac.kernel()(2, 2) == 2.0);
  CHECK(fac.kernel()(0, 1) == 0.0);
  {
    std::ofstream bad(dir / "bad.model");
    bad << "phi log\n";
  }
  CHECK_THROWS_AS(load_model<double>((dir / "bad.model").string()), InvalidArgument);
}
