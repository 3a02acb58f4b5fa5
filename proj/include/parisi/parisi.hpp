#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "parisi/cascade.hpp"
#include "parisi/conjugate.hpp"
#include "parisi/model.hpp"
#include "parisi/paths.hpp"

namespace parisi {

enum class Reduction { Scalar, Pair, Matrix };
std::string to_string(Reduction r);
Reduction parse_reduction(const std::string& s);

struct ObjectiveSpec {
  ModelInstance model;
  Reduction reduction = Reduction::Scalar;
  int levels = 3;
  QuadratureConfig quad;
  ConjugateConfig conj;
  // Structural preconditions of the reduction (not t > 0, not convexity).
  void validate() const;
};

using AnyPath = std::variant<ScalarPath, PairPath, PsdPath>;

// ψ†(p) − t Σ Δζ_l (ξ†(·/D))*(p_l/t).
double objective_scalar(const ScalarPath& p, const ObjectiveSpec& spec);
// ψ⊥(p) − t Σ Δζ_l ξ⊥*(p_l/t).
double objective_pair(const PairPath& p, const ObjectiveSpec& spec);
// ψ(q) − t Σ Δζ_l ξ*(q_l/t) with dense conjugation, D = 2.
double objective_matrix(const PsdPath& q, const ObjectiveSpec& spec);
double objective(const AnyPath& path, const ObjectiveSpec& spec);

struct OptimizeOptions {
  int restarts = 8;
  std::vector<int> K_schedule;  // empty: spec.levels, doubled while escalate
  bool escalate = false;
  int max_levels = 16;
  double step_tol = 1e-9;
  double value_tol = 1e-6;
  std::uint64_t rng_seed = 0;
  int threads = 1;
  int max_evaluations = 20000;
  double init_scale = 1.0;  // typical size of q(1) for random starts
  std::vector<AnyPath> warm_starts;
  bool check_convexity = true;
};

struct RestartRecord {
  int levels = 0;
  double value = 0.0;
  AnyPath path;
  int evaluations = 0;
  bool converged = false;
  std::uint64_t seed = 0;  // 0 for warm starts
};

struct InducedAtom {
  double weight = 0.0;
  Vector value;  // scalar: (p); pair: (λ1, λ2); matrix: (q11, q22, q12)
};

struct TraceEntry {
  int levels = 0;
  double best_value = 0.0;
  int evaluations = 0;
};

struct OptimizeResult {
  AnyPath best_path;
  double value = 0.0;
  double error_estimate = 0.0;  // quadrature error of ψ at best_path
  std::vector<RestartRecord> restarts;
  std::vector<InducedAtom> induced_measure;
  double spread = 0.0;  // max pairwise W1 (L¹ of paths) among near-best restarts
  std::vector<TraceEntry> trace;
};

OptimizeResult optimize(const ObjectiveSpec& spec, const OptimizeOptions& opts);

std::vector<InducedAtom> induced_atoms(const AnyPath& path);
// L¹ distance of two paths of the same cone; W1 of the induced laws for scalars.
double path_distance(const AnyPath& a, const AnyPath& b);

struct SupInfReport {
  double direct = 0.0;  // inf over monotone r by simplex search
  double closed = 0.0;  // −t Σ Δζ ξ⊥*(p_l/t)
  double gap = 0.0;
  bool passed = false;
  PairPath minimizer;
};
// Inner infimum of the Hopf–Lax form at q = 0 against its conjugate closed
// form. K_inner must be a multiple of p.levels(); each level of p is split
// evenly.
SupInfReport supinf_crosscheck(const ObjectiveSpec& spec, const PairPath& p, int K_inner);

// Scalar variational value with ξ replaced by Ξ; no convexity requirement.
OptimizeResult upper_bound_nonconvex(const ModelInstance& model, int levels,
                                     const QuadratureConfig& quad, const ConjugateConfig& conj,
                                     OptimizeOptions opts);

struct UniquenessReport {
  int restarts = 0;
  std::vector<double> values;
  double best_value = 0.0;
  double value_spread = 0.0;  // max − min over all restarts
  double w1_spread = 0.0;     // among restarts within value_tol of the best
  int near_best = 0;
};
UniquenessReport uniqueness_probe(const ObjectiveSpec& spec, OptimizeOptions opts);

// t·c with c the smallest λ where (ξ̃*(λ) − ξ̃*(0))/λ ≥ 1, ξ̃ = ξ†(·/D).
double truncation_radius(const CovarianceSpec& spec, double t, const ConjugateConfig& conj = {});

}  // namespace parisi
