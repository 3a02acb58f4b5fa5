#include <cmath>

#include "doctest.h"
#include "parisi/conjugate.hpp"
#include "parisi/parisi.hpp"
#include "parisi/rng.hpp"

using namespace parisi;

TEST_CASE("scalar conjugate of a quadratic") {
  auto sq = [](double x) { return x * x; };
  for (double y : {0.0, 0.3, 1.0, 5.0}) {
    const auto r = conjugate_scalar(sq, y, {});
    CHECK(r.value == doctest::Approx(y * y / 4).epsilon(1e-10));
    CHECK(r.argmax(0) == doctest::Approx(y / 2).epsilon(1e-6));
  }
  // Negative slopes are maximized at the boundary x = 0.
  CHECK(conjugate_scalar(sq, -1.0, {}).value == 0.0);
}

TEST_CASE("unbounded conjugates raise TruncationHit") {
  auto lin = [](double x) { return x; };
  ConjugateConfig cfg;
  cfg.search_radius = 1.0;
  cfg.max_doublings = 3;
  CHECK_THROWS_AS(conjugate_scalar(lin, 2.0, cfg), TruncationHit);
  ConjugateConfig bad;
  bad.grid_points = 1;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("closed-form conjugates of presets") {
  const auto sk = sk_model().covariance;
  const auto potts = potts_model(2).covariance;
  {
    const double y = 0.8;
    // SK: ξ†(μ/1) = μ².
    CHECK(xi_dagger_scaled_star(sk, y, {}).value == doctest::Approx(y * y / 4).epsilon(1e-9));
  }
  Rng rng(3);
  for (int k = 0; k < 10; ++k) {
    const double l1 = rng.uniform(0, 3), l2 = rng.uniform(0, 3);
    CHECK(xi_perp_star(potts, l1, l2, {}).value == doctest::Approx((l1 * l1 + l2 * l2) / 4).epsilon(1e-8));
    for (double alpha : {0.0, 1.5, 3.0}) {
      const auto bp = bp_sk_model(alpha).covariance;
      const double m = std::max(l1, l2);
      CHECK(xi_perp_star(bp, l1, l2, {}).value == doctest::Approx(m * m / (alpha + 1)).epsilon(1e-8));
      CHECK(xi_dagger_scaled_star(bp, l1, {}).value == doctest::Approx(l1 * l1 / (alpha + 1)).epsilon(1e-8));
    }
  }
  CHECK(xi_star_psd(potts, Matrix(Matrix::Identity(2, 2)), {}).value == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(xi_star_psd(potts, PermMatrix{2, 1.0, 1.0}, {}).value == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("pair conjugate matches the dense conjugate") {
  for (auto m : {potts_model(2), bp_sk_model(1.5)}) {
    const auto rep = check_perp_conjugate_identity(m.covariance, 30, {}, 17);
    CHECK(rep.passed);
    CHECK(rep.max_relative_gap <= 1e-5);
  }
}

TEST_CASE("Fenchel-Young inequality on the PSD cone") {
  const auto spec = bp_sk_model(1.5).covariance;
  Rng rng(21);
  for (int k = 0; k < 20; ++k) {
    Matrix G(2, 2), H(2, 2);
    for (int i = 0; i < 4; ++i) G(i % 2, i / 2) = rng.normal(), H(i % 2, i / 2) = rng.normal();
    const Matrix x = G * G.transpose(), y = H * H.transpose();
    const double star = xi_star_psd(spec, y, {}).value;
    CHECK(star >= dot(x, y) - eval_xi(spec, x) - 1e-9);
  }
}

TEST_CASE("truncation radius") {
  for (double t : {0.1, 0.4, 1.0}) {
    CHECK(truncation_radius(sk_model().covariance, t) == doctest::Approx(4 * t).epsilon(1e-6));
    CHECK(truncation_radius(bp_sk_model(1.5).covariance, t) == doctest::Approx(2.5 * t).epsilon(1e-6));
  }
  CHECK(truncation_radius(sk_model().covariance, 0.1) == truncation_radius(sk_model().covariance, 0.1));
}
