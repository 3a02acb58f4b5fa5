#include <cmath>

#include "doctest.h"
#include "parisi/rng.hpp"
#include "parisi/simulate.hpp"

using namespace parisi;

namespace {

ModelInstance at(ModelInstance m, double t) {
  m.t = t;
  return m;
}

// Row d, column i of the configuration with index c over the atom list.
Matrix configuration(const SpinMeasure& P, int N, long c, double& weight) {
  Matrix s(P.dimension(), N);
  weight = 1.0;
  for (int i = 0; i < N; ++i) {
    const auto& a = P.atoms()[c % P.atoms().size()];
    c /= static_cast<long>(P.atoms().size());
    s.col(i) = a.point;
    weight *= a.weight;
  }
  return s;
}

}  // namespace

TEST_CASE("t = 0 gives exactly zero") {
  for (int N : {2, 5, 8}) {
    const auto e = free_energy_mc(at(sk_model(), 0.0), N, 10, 1);
    CHECK(e.mean == 0.0);
    CHECK(e.std_error == 0.0);
    for (double s : e.samples) CHECK(s == 0.0);
  }
  CHECK(free_energy_mc(at(bp_sk_model(1.5), 0.0), 3, 4, 1).mean == 0.0);
}

TEST_CASE("Hamiltonian covariance is N xi(overlap)") {
  const auto spec = bp_sk_model(1.5).covariance;
  const int N = 3;
  Rng rng(2);
  Matrix s(2, N), u(2, N);
  for (int i = 0; i < N; ++i)
    for (int d = 0; d < 2; ++d) s(d, i) = rng.uniform() < 0.5 ? -1 : 1, u(d, i) = rng.uniform() < 0.5 ? -1 : 1;
  Vector r = s.cwiseProduct(u).rowwise().sum() / N;
  const double expected = N * eval_xi_diag(spec, r);
  const int n = 20000;
  double m = 0, m2 = 0;
  for (int k = 0; k < n; ++k) {
    const auto H = sample_hamiltonian(spec, N, derive_seed(3, "test", k));
    const double v = H.energy(s) * H.energy(u);
    m += v;
    m2 += v * v;
  }
  m /= n;
  const double se = std::sqrt((m2 / n - m * m) / n);
  CHECK(std::abs(m - expected) < 5 * se);
}

TEST_CASE("tensors share coefficients across N") {
  const auto spec = sk_model().covariance;
  const auto a = sample_hamiltonian(spec, 3, 9), b = sample_hamiltonian(spec, 4, 9);
  // Shell order: the 3×3 block is filled first in both.
  const auto& ga = a.terms[0].g;
  const auto& gb = b.terms[0].g;
  std::vector<double> fa(ga.begin(), ga.end()), fb;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) fb.push_back(gb[i * 4 + j]);
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  CHECK(fa == fb);
  CHECK(a.terms[0].scale == doctest::Approx(1 / std::sqrt(3.0)));
}

TEST_CASE("exact enumeration matches a brute-force evaluation") {
  const auto model = at(bp_sk_model(1.5), 0.3);
  const int N = 3;
  const std::uint64_t seed = 4;
  SimulateOptions o;
  o.control_variate = false;
  const auto e = free_energy_mc(model, N, 3, seed, o);
  const long configs = static_cast<long>(std::pow(4.0, N));
  for (int k = 0; k < 3; ++k) {
    const auto H = sample_hamiltonian(model.covariance, N, derive_seed(seed, "simulate.disorder", k));
    double z = 0;
    for (long c = 0; c < configs; ++c) {
      double w;
      const Matrix s = configuration(model.measure, N, c, w);
      const Vector self = s.cwiseProduct(s).rowwise().sum() / N;
      z += w * std::exp(std::sqrt(2 * model.t) * H.energy(s) - N * model.t * eval_xi_diag(model.covariance, self));
    }
    CHECK(e.samples[k] == doctest::Approx(-std::log(z) / N).epsilon(1e-12));
  }
}

TEST_CASE("control variate keeps the mean and shrinks the error") {
  const auto model = at(sk_model(), 0.3);
  SimulateOptions plain;
  plain.control_variate = false;
  const auto a = free_energy_mc(model, 6, 300, 7);
  const auto b = free_energy_mc(model, 6, 300, 7, plain);
  CHECK(std::abs(a.mean - b.mean) < 3 * std::hypot(a.std_error, b.std_error));
  CHECK(a.std_error < b.std_error);
  CHECK(a.mean >= -3 * a.std_error);
}

TEST_CASE("results do not depend on the thread count") {
  const auto model = at(bp_sk_model(1.5), 0.4);
  SimulateOptions one, two;
  two.threads = 2;
  const auto a = free_energy_mc(model, 3, 16, 21, one), b = free_energy_mc(model, 3, 16, 21, two);
  CHECK(a.samples == b.samples);
  CHECK(a.mean == b.mean);
  const auto oa = overlap_statistics(model, 3, 21, 8, one), ob = overlap_statistics(model, 3, 21, 8, two);
  CHECK(oa.permutation_defect == ob.permutation_defect);
  CHECK(oa.negative_mass == ob.negative_mass);
}

TEST_CASE("preconditions and budgets") {
  CHECK_THROWS_AS(free_energy_mc(at(counterexample_model(), 0.2), 3, 2, 1), FormalSpecRejected);
  CHECK_THROWS_AS(free_energy_mc(at(potts_model(2), 0.2), 3, 2, 1), PreconditionViolated);
  CHECK_THROWS_AS(free_energy_mc(at(sk_model(), 0.2), 40, 2, 1), BudgetExceeded);
  CHECK_THROWS_AS(overlap_statistics(at(sk_model(), 0.2), 16, 1, 2), BudgetExceeded);
}

TEST_CASE("overlap law of a spin-flip symmetric model") {
  const auto r = overlap_statistics(at(sk_model(), 0.5), 5, 3, 10);
  double total = 0;
  for (const auto& a : r.law) total += a.probability;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  // H is even, so R and −R are equally likely and N odd rules out R = 0.
  CHECK(r.negative_mass == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.permutation_defect == 0.0);

  const auto b = overlap_statistics(at(bp_sk_model(1.5), 0.5), 3, 3, 10);
  CHECK(b.permutation_defect <= 5 * b.defect_stderr + 1e-12);
  CHECK(b.negative_mass >= 0.0);
}

TEST_CASE("compare against the variational bound") {
  CompareOptions o;
  o.n_disorder = 40;
  o.seed = 1;
  o.levels = 2;
  o.restarts = 2;
  o.quad.hermite_nodes = 8;
  const auto r = compare_bound(at(sk_model(), 0.1), 6, o);
  CHECK(r.convex);
  CHECK(r.passed);
  CHECK(std::abs(r.bound) < 1e-9);
  CHECK(r.slack >= 0.1);
  const auto nc = compare_bound(at(bp_sk_model(0.5), 0.4), 3, o);
  CHECK_FALSE(nc.convex);
  CHECK(nc.passed);
}
