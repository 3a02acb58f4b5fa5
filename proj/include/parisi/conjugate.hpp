#pragma once

#include <cstdint>
#include <functional>

#include "parisi/model.hpp"
#include "parisi/paths.hpp"

namespace parisi {

struct ConjugateConfig {
  double search_radius = 0.0;  // 0 selects 16·max(1,|y|)^{1/(p_min−1)}
  int grid_points = 64;
  int refine_iters = 200;
  double tol = 1e-10;
  int max_doublings = 4;
  void validate() const;
};

struct ConjugateResult {
  double value = 0.0;
  Vector argmax;         // maximizer in the coordinates of the routine
  double radius = 0.0;   // truncation radius finally used
  int iterations = 0;
};

// Radius used when cfg.search_radius is 0.
double default_search_radius(double y_scale, int p_min);

// sup_{x ∈ [0, R]} {xy − f(x)} by a coarse grid and golden-section refinement.
// Throws TruncationHit if the maximizer sits at R after all doublings.
ConjugateResult conjugate_scalar(const std::function<double(double)>& f, double y,
                                 const ConjugateConfig& cfg, int p_min = 2);

// sup_{μ ∈ R²_+} {λ·μ − ξ⊥(μ)}, standard dot product on R².
ConjugateResult xi_perp_star(const CovarianceSpec& spec, double lambda1, double lambda2,
                             const ConjugateConfig& cfg);

// ξ* over S^D_+ at a permutation-invariant point, via the two-variable problem.
ConjugateResult xi_star_psd(const CovarianceSpec& spec, const PermMatrix& m,
                            const ConjugateConfig& cfg);

// ξ* over S²_+ at a dense point: maximization over (n11, n22, n12) with
// n12² ≤ n11·n22. D = 2 only.
ConjugateResult xi_star_psd(const CovarianceSpec& spec, const Matrix& m, const ConjugateConfig& cfg);

// (ξ†(·/D))*(λ) = sup_{μ ≥ 0} {λμ − ξ†(μ/D)}.
ConjugateResult xi_dagger_scaled_star(const CovarianceSpec& spec, double lambda,
                                      const ConjugateConfig& cfg);

struct PerpIdentityReport {
  bool passed = true;
  int samples = 0;
  double max_relative_gap = 0.0;
  Vector2 worst_lambda = Vector2::Zero();
};
PerpIdentityReport check_perp_conjugate_identity(const CovarianceSpec& spec, int samples,
                                                 const ConjugateConfig& cfg,
                                                 std::uint64_t rng_seed);

}  // namespace parisi
