#include <cmath>

#include "doctest.h"
#include "parisi/cascade.hpp"
#include "parisi/rng.hpp"
#include "parisi/sampling.hpp"

using namespace parisi;

namespace {

QuadratureConfig tensor(int n, bool err = true) {
  QuadratureConfig q;
  q.mode = QuadratureMode::Tensor;
  q.hermite_nodes = n;
  q.estimate_error = err;
  return q;
}

// p − E log cosh(√(2p) z), frozen from a 60-digit evaluation.
constexpr double kPsiIsing01 = 0.0080733484028145432148;
constexpr double kPsiIsing05 = 0.1254327925085620259;
constexpr double kPsiIsing10 = 0.35775113431172015129;

}  // namespace

TEST_CASE("psi of the zero path is zero") {
  CHECK(psi(constant_path(Matrix(Matrix::Zero(2, 2))), potts_measure(2), tensor(8)).value == 0.0);
  CHECK(psi_scalar(constant_path(0.0), ising_measure(3), tensor(8)).value == 0.0);
  CHECK(psi_pair(constant_path(Vector2(Vector2::Zero())), potts_measure(3), tensor(8)).value == 0.0);
}

TEST_CASE("one-dimensional Ising constant path against its closed form") {
  const auto P = ising_measure(1);
  for (auto [p, ref] : {std::pair{0.1, kPsiIsing01}, {0.5, kPsiIsing05}, {1.0, kPsiIsing10}}) {
    const auto r = psi_scalar(constant_path(p), P, tensor(32));
    CHECK(std::abs(r.value - ref) <= std::max(r.error_estimate, 1e-14) + 1e-13);
    CHECK(r.error_estimate < 1e-5);
  }
}

TEST_CASE("Monte Carlo oracle agrees with the closed form") {
  Rng rng(99);
  const double p = 0.5;
  const int n = 1000000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double v = p - std::log(std::cosh(std::sqrt(2 * p) * rng.normal()));
    s += v;
    s2 += v * v;
  }
  const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(mean - kPsiIsing05) <= 3 * se);
}

TEST_CASE("sampling mode agrees with tensor mode") {
  QuadratureConfig mc;
  mc.mode = QuadratureMode::MonteCarlo;
  mc.mc_samples = 20000;
  mc.rng_seed = 5;
  const ScalarPath p{{0, 0.4, 1}, {0.3, 0.9}};
  const auto a = psi_scalar(p, ising_measure(1), mc);
  const auto b = psi_scalar(p, ising_measure(1), tensor(24));
  CHECK(a.mode == QuadratureMode::MonteCarlo);
  CHECK(std::abs(a.value - b.value) <= 4 * a.error_estimate + 1e-12);
  CHECK(psi_scalar(p, ising_measure(1), mc).value == a.value);
}

TEST_CASE("level merge invariance") {
  Rng rng(1);
  for (int k = 0; k < 10; ++k) {
    const ScalarPath p = random_scalar_path(rng, 3, 1.5);
    ScalarPath split{{0.0}, {}};
    for (int l = 0; l < p.levels(); ++l) {
      split.grid.push_back(0.5 * (p.grid[l] + p.grid[l + 1]));
      split.grid.push_back(p.grid[l + 1]);
      split.values.push_back(p.values[l]);
      split.values.push_back(p.values[l]);
    }
    const auto a = psi_scalar(p, ising_measure(1), tensor(16));
    const auto b = psi_scalar(split, ising_measure(1), tensor(16));
    CHECK(std::abs(a.value - b.value) < 1e-9);
    CHECK(std::count_if(b.levels.begin(), b.levels.end(), [](auto& d) { return d.skipped; }) == 3);
  }
}

TEST_CASE("pair, scalar and dense cascades agree") {
  Rng rng(2);
  for (int k = 0; k < 5; ++k) {
    const PairPath q = random_pair_path(rng, 2, 0.8);
    const auto a = psi_pair(q, potts_measure(2), tensor(8, false));
    const auto b = psi(perp_lift(q, 2), potts_measure(2), tensor(8, false));
    CHECK(std::abs(a.value - b.value) < 1e-9);
  }
  QuadratureConfig dense = tensor(8, false);
  dense.product_fast_path = false;
  for (int k = 0; k < 5; ++k) {
    const ScalarPath p = random_scalar_path(rng, 2, 1.0);
    const auto fast = psi_scalar(p, ising_measure(2), tensor(8, false));
    const auto slow = psi_scalar(p, ising_measure(2), dense);
    CHECK(std::abs(fast.value - slow.value) < 1e-8);
    CHECK(std::abs(fast.value - 2 * psi_scalar(p, ising_measure(1), tensor(8, false)).value) < 1e-12);
  }
}

TEST_CASE("permutation invariance of psi") {
  Rng rng(3);
  const PsdPath q = random_psd_path(rng, 2, 3, 0.8);
  const double base = psi(q, potts_measure(3), tensor(6, false)).value;
  for (const auto& s : all_permutations(3))
    CHECK(std::abs(psi(permute_path(q, s), potts_measure(3), tensor(6, false)).value - base) < 1e-10);
}

TEST_CASE("psi is nonnegative, monotone and L1-Lipschitz") {
  Rng rng(4);
  const auto quad = tensor(16);
  for (int k = 0; k < 50; ++k) {
    const ScalarPath a = random_scalar_path(rng, 1 + k % 4, 2.0);
    const ScalarPath b = random_scalar_path(rng, 1 + (k + 2) % 4, 2.0);
    const auto ra = psi_scalar(a, ising_measure(1), quad), rb = psi_scalar(b, ising_measure(1), quad);
    CHECK(ra.value >= -1e-14);
    CHECK(std::abs(ra.value - rb.value) <= l1_distance(a, b) + ra.error_estimate + rb.error_estimate + 1e-12);
    ScalarPath up = a;
    for (auto& v : up.values) v += 0.1;
    CHECK(psi_scalar(up, ising_measure(1), quad).value >= ra.value - 1e-12);
  }
  const auto q6 = tensor(6);
  for (int k = 0; k < 10; ++k) {
    const PsdPath a = random_psd_path(rng, 2, 2, 0.8), b = random_psd_path(rng, 2, 2, 0.8);
    const auto ra = psi(a, potts_measure(2), q6), rb = psi(b, potts_measure(2), q6);
    CHECK(ra.value >= -1e-12);
    CHECK(std::abs(ra.value - rb.value) <= l1_distance(a, b) + ra.error_estimate + rb.error_estimate + 1e-10);
  }
}

TEST_CASE("non-monotone paths are rejected") {
  CHECK_THROWS_AS(psi_scalar(ScalarPath{{0, 0.5, 1}, {0.5, 0.2}}, ising_measure(1), tensor(8)), NonMonotonePath);
  CHECK_THROWS_AS(psi(constant_path(Matrix(Matrix::Identity(3, 3))), potts_measure(2), tensor(8)), DimensionMismatch);
}

TEST_CASE("quantile paths and induced measures") {
  const auto q = quantile_path(DiscreteMeasure::make({0.0, 1.0}, {0.5, 0.5}));
  CHECK(q.at(0.25) == 0.0);
  CHECK(q.at(0.5) == 1.0);
  CHECK(quantile_path(DiscreteMeasure::dirac(0.3)).values == std::vector<double>{0.3});
  const auto mu = DiscreteMeasure::make({0.7, 0.1, 0.7, 0.4}, {0.1, 0.2, 0.3, 0.4});
  CHECK(mu.support == std::vector<double>{0.1, 0.4, 0.7});
  const auto back = induced_measure(quantile_path(mu));
  CHECK(back.support == mu.support);
  for (std::size_t i = 0; i < mu.weights.size(); ++i) CHECK(back.weights[i] == doctest::Approx(mu.weights[i]).epsilon(1e-15));
  CHECK(wasserstein1(DiscreteMeasure::dirac(0.2), DiscreteMeasure::dirac(0.5)) == doctest::Approx(0.3));
  CHECK(wasserstein1(mu, mu) == 0.0);
}

TEST_CASE("concavity probe") {
  const auto P = ising_measure(1);
  const auto a = DiscreteMeasure::dirac(0.2), b = DiscreteMeasure::dirac(0.8);
  const auto quad = tensor(24);
  const auto r = concavity_probe(P, a, b, {0.0, 0.5, 1.0}, quad);
  CHECK(r.strictly_positive);
  CHECK(r.defect > 2 * r.defect_error);
  const auto s = concavity_probe(P, b, a, {0.0, 0.5, 1.0}, quad);
  CHECK(s.defect == doctest::Approx(r.defect).epsilon(1e-12));
  CHECK(std::abs(concavity_probe(P, a, a, {0.0, 0.5, 1.0}, quad).defect) < 1e-15);
}
