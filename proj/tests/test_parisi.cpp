#include <cmath>

#include "doctest.h"
#include "parisi/parisi.hpp"
#include "parisi/rng.hpp"
#include "parisi/sampling.hpp"

using namespace parisi;

namespace {

ObjectiveSpec make_spec(ModelInstance m, double t, Reduction r, int levels, int nodes) {
  m.t = t;
  ObjectiveSpec s;
  s.model = m;
  s.reduction = r;
  s.levels = levels;
  s.quad.mode = QuadratureMode::Tensor;
  s.quad.hermite_nodes = nodes;
  return s;
}

// One-level SK optimum: max_p p − E log cosh(√(2p) z) − p²/(4t), from a
// 30-digit quadrature and root find.
constexpr double kSkReplicaSymmetric05 = 0.00996150649337301874;
constexpr double kSkReplicaSymmetricArg05 = 0.30898238488427277480;

}  // namespace

TEST_CASE("reductions parse and validate") {
  CHECK(parse_reduction("pair") == Reduction::Pair);
  CHECK(to_string(Reduction::Matrix) == "matrix");
  CHECK_THROWS_AS(parse_reduction("dense"), ConfigError);
  CHECK_THROWS_AS(make_spec(counterexample_model(), 0.5, Reduction::Scalar, 2, 8).validate(), FormalSpecRejected);
  CHECK_THROWS_AS(make_spec(potts_model(3), 0.5, Reduction::Matrix, 2, 8).validate(), PreconditionViolated);
  CHECK_THROWS_AS(make_spec(potts_model(2), 0.5, Reduction::Scalar, 2, 8).validate(), PreconditionViolated);
  CHECK_THROWS_AS(make_spec(sk_model(), 0.5, Reduction::Pair, 2, 8).validate(), PreconditionViolated);
  CHECK_NOTHROW(make_spec(potts_model(3), 0.5, Reduction::Pair, 2, 8).validate());
}

TEST_CASE("objective at the zero path and at t = 0") {
  const auto s = make_spec(bp_sk_model(1.5), 0.4, Reduction::Scalar, 2, 8);
  CHECK(objective_scalar(constant_path(0.0), s) == 0.0);
  CHECK(objective_pair(constant_path(Vector2(Vector2::Zero())), s) == 0.0);
  CHECK(objective_matrix(constant_path(Matrix(Matrix::Zero(2, 2))), s) == 0.0);
  const auto z = make_spec(bp_sk_model(1.5), 0.0, Reduction::Scalar, 2, 8);
  CHECK(objective_scalar(constant_path(0.0), z) == 0.0);
  CHECK(objective_scalar(constant_path(0.3), z) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("scalar, pair and matrix objectives coincide on diagonal paths") {
  Rng rng(1);
  for (double t : {0.2, 0.6}) {
    const auto s = make_spec(bp_sk_model(1.5), t, Reduction::Scalar, 2, 6);
    for (int k = 0; k < 4; ++k) {
      const ScalarPath p = random_scalar_path(rng, 2, 1.0);
      PairPath q{p.grid, {}};
      PsdPath m{p.grid, {}};
      for (double v : p.values) {
        q.values.emplace_back(v, v);
        m.values.push_back(v * Matrix::Identity(2, 2));
      }
      const double a = objective_scalar(p, s), b = objective_pair(q, s), c = objective_matrix(m, s);
      CHECK(std::abs(a - b) < 1e-8);
      CHECK(std::abs(b - c) < 1e-6);
    }
  }
}

TEST_CASE("objective at a one-level SK path against its closed form") {
  const auto s = make_spec(sk_model(), 0.5, Reduction::Scalar, 1, 48);
  const double v = objective_scalar(constant_path(kSkReplicaSymmetricArg05), s);
  CHECK(v == doctest::Approx(kSkReplicaSymmetric05).epsilon(1e-6));
}

TEST_CASE("optimizer reproduces the one-level SK optimum and improves with levels") {
  OptimizeOptions o;
  o.restarts = 3;
  o.rng_seed = 11;
  const auto r1 = optimize(make_spec(sk_model(), 0.5, Reduction::Scalar, 1, 32), o);
  CHECK(r1.value == doctest::Approx(kSkReplicaSymmetric05).epsilon(1e-5));
  const auto& p1 = std::get<ScalarPath>(r1.best_path);
  CHECK(p1.values[0] == doctest::Approx(kSkReplicaSymmetricArg05).epsilon(1e-3));
  const auto r3 = optimize(make_spec(sk_model(), 0.5, Reduction::Scalar, 3, 16), o);
  CHECK(r3.value >= r1.value - 1e-7);
  CHECK(r3.value > 0.0);
  double w = 0;
  for (const auto& a : r3.induced_measure) w += a.weight;
  CHECK(w == doctest::Approx(1.0));
}

TEST_CASE("high temperature optimum is the zero path") {
  OptimizeOptions o;
  o.restarts = 2;
  const auto r = optimize(make_spec(sk_model(), 0.1, Reduction::Scalar, 2, 16), o);
  CHECK(std::abs(r.value) < 1e-10);
  CHECK(r.value >= 0.0);
}

TEST_CASE("optimizer is deterministic across thread counts") {
  OptimizeOptions o;
  o.restarts = 3;
  o.rng_seed = 5;
  o.max_evaluations = 1500;
  const auto s = make_spec(bp_sk_model(1.5), 0.6, Reduction::Scalar, 2, 8);
  const auto a = optimize(s, o);
  o.threads = 3;
  const auto b = optimize(s, o);
  CHECK(a.value == b.value);
  REQUIRE(a.restarts.size() == b.restarts.size());
  for (std::size_t i = 0; i < a.restarts.size(); ++i) {
    CHECK(a.restarts[i].value == b.restarts[i].value);
    CHECK(a.restarts[i].seed == b.restarts[i].seed);
  }
  CHECK(path_distance(a.best_path, b.best_path) == 0.0);
}

TEST_CASE("nonconvex covariances are refused and bounded instead") {
  OptimizeOptions o;
  o.restarts = 2;
  o.max_evaluations = 2000;
  CHECK_THROWS_AS(optimize(make_spec(bp_sk_model(0.5), 0.4, Reduction::Scalar, 2, 8), o), PreconditionViolated);
  QuadratureConfig q;
  q.hermite_nodes = 8;
  auto m = bp_sk_model(0.5);
  m.t = 0.4;
  const auto ub = upper_bound_nonconvex(m, 2, q, {}, o);
  CHECK(ub.value >= 0.0);
  CHECK_THROWS_AS(upper_bound_nonconvex(counterexample_model(), 2, q, {}, o), FormalSpecRejected);
}

TEST_CASE("induced atoms and path distance") {
  const ScalarPath p{{0, 0.2, 0.5, 1}, {0.1, 0.1, 0.4}};
  const auto atoms = induced_atoms(p);
  REQUIRE(atoms.size() == 2);
  CHECK(atoms[0].weight == doctest::Approx(0.5));
  CHECK(atoms[1].value(0) == 0.4);
  CHECK(path_distance(AnyPath{p}, AnyPath{constant_path(0.1)}) == doctest::Approx(0.15));
}

TEST_CASE("sup-inf form matches the conjugate closed form") {
  auto s = make_spec(bp_sk_model(1.5), 0.6, Reduction::Pair, 2, 6);
  const PairPath p{{0, 0.4, 1}, {Vector2(0.2, 0.3), Vector2(0.5, 0.8)}};
  const auto r = supinf_crosscheck(s, p, 4);
  CHECK(r.passed);
  CHECK(std::abs(r.gap) <= 1e-4 * std::max(1.0, std::abs(r.closed)));
  CHECK_THROWS_AS(supinf_crosscheck(s, p, 3), InvalidArgument);
}
