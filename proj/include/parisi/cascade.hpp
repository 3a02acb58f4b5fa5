#pragma once

#include <cstdint>
#include <vector>

#include "parisi/model.hpp"
#include "parisi/paths.hpp"

namespace parisi {

enum class QuadratureMode { Auto, Tensor, MonteCarlo };

struct QuadratureConfig {
  // Auto: tensor Gauss–Hermite up to 8 Gaussian dimensions, sampling beyond.
  QuadratureMode mode = QuadratureMode::Auto;
  int hermite_nodes = 16;
  long mc_samples = 100000;
  std::uint64_t rng_seed = 0;
  bool estimate_error = true;
  bool product_fast_path = true;
  int threads = 1;
  long max_tensor_points = 1L << 22;
  void validate() const;
};

struct LevelDiagnostics {
  double zeta = 0.0;  // reweighting exponent ζ_{l−1} of the level
  double increment_trace = 0.0;
  double min_eigenvalue = 0.0;
  bool skipped = false;  // zero increment, merged into its neighbour
};

struct CascadeResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::vector<LevelDiagnostics> levels;
  QuadratureMode mode = QuadratureMode::Tensor;
  int nodes = 0;          // per dimension (tensor) or per level (sampling)
  int gaussian_dims = 0;
};

// ψ(q) by the cascade recursion. Tensor mode: the value is the finer of the
// two rules (n and 2n nodes) when estimate_error is set, and the error is
// their difference. Sampling mode: mean and standard error of 8 replicates.
CascadeResult psi(const PsdPath& q, const SpinMeasure& P1, const QuadratureConfig& quad);
CascadeResult psi_pair(const PairPath& q, const SpinMeasure& P1, const QuadratureConfig& quad);
CascadeResult psi_scalar(const ScalarPath& p, const SpinMeasure& P1, const QuadratureConfig& quad);

// Finitely supported probability measure on R_+, kept sorted and merged.
struct DiscreteMeasure {
  std::vector<double> support;
  std::vector<double> weights;
  static DiscreteMeasure make(std::vector<double> support, std::vector<double> weights);
  static DiscreteMeasure dirac(double x) { return make({x}, {1.0}); }
  DiscreteMeasure mix(const DiscreteMeasure& other, double lambda) const;  // (1−λ)this + λ other
};

ScalarPath quantile_path(const DiscreteMeasure& mu);
DiscreteMeasure induced_measure(const ScalarPath& p);
double wasserstein1(const DiscreteMeasure& a, const DiscreteMeasure& b);

struct ConcavityReport {
  std::vector<double> lambdas, values, errors;
  double defect = 0.0;        // g(½) − (g(0) + g(1))/2
  double defect_error = 0.0;  // max quadrature error of the three terms
  bool strictly_positive = false;  // defect > 2·defect_error
};
ConcavityReport concavity_probe(const SpinMeasure& P1, const DiscreteMeasure& mu0,
                                const DiscreteMeasure& mu1, const std::vector<double>& lambdas,
                                const QuadratureConfig& quad);

}  // namespace parisi
