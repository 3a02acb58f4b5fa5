#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "parisi/cascade.hpp"
#include "parisi/conjugate.hpp"
#include "parisi/model.hpp"

namespace parisi {

// One monomial Π_k R_{s_k s_k} of a diagonal spec, realised as
// scale · Σ g[i_1..i_I] Π_k σ_{s_k, i_k}.
struct MonomialTensor {
  std::vector<int> species;  // s_1 ≤ … ≤ s_I
  double scale = 0.0;        // √coeff · N^{−(I−1)/2}
  std::vector<double> g;     // N^I standard normals, row-major in (i_1, …, i_I)
};

struct HamiltonianSample {
  int N = 0;
  int D = 0;
  std::uint64_t rng_seed = 0;
  std::vector<MonomialTensor> terms;
  // sigma is D×N, column i the spin of site i.
  double energy(const Matrix& sigma) const;
};

// Each tensor is filled in shell order (all index tuples with max index < n
// before any with max index n), so a seed shares its first coefficients
// across N.
HamiltonianSample sample_hamiltonian(const CovarianceSpec& spec, int N, std::uint64_t seed);

struct SimulateOptions {
  int threads = 1;
  // Adds (1/N)√(2t)·E_{P_N}[H], a mean-zero term that cancels most of the
  // disorder fluctuation of the log-partition function.
  bool control_variate = true;
  long max_configurations = 1L << 24;
};

struct FreeEnergyEstimate {
  int N = 0;
  double t = 0.0;
  double mean = 0.0;
  double std_error = 0.0;  // sample sd / √n_disorder
  int n_disorder = 0;
  std::uint64_t seed = 0;
  std::vector<double> samples;
};

// Disorder sample k uses derive_seed(seed, "simulate.disorder", k).
FreeEnergyEstimate free_energy_mc(const ModelInstance& model, int N, int n_disorder,
                                  std::uint64_t seed, const SimulateOptions& opts = {});

struct OverlapAtom {
  Vector overlap;  // diagonal overlap (R_11, …, R_DD)
  double probability = 0.0;
};

struct OverlapReport {
  std::vector<OverlapAtom> law;  // disorder-averaged two-replica law
  double permutation_defect = 0.0;  // max over s of TV(law, law ∘ s)
  double defect_stderr = 0.0;
  double negative_mass = 0.0;  // E⟨1{min_d R_dd < 0}⟩
  double negative_mass_stderr = 0.0;
  int n_disorder = 0;
};

OverlapReport overlap_statistics(const ModelInstance& model, int N, std::uint64_t seed,
                                 int n_disorder, const SimulateOptions& opts = {});

struct CompareOptions {
  int n_disorder = 200;
  std::uint64_t seed = 0;
  int levels = 3;
  int restarts = 4;
  int threads = 1;
  QuadratureConfig quad;
  ConjugateConfig conj;
  SimulateOptions simulate;
};

struct CompareReport {
  FreeEnergyEstimate estimate;
  double bound = 0.0;
  double bound_error = 0.0;
  bool convex = true;  // bound is the variational value rather than an upper bound
  double gap = 0.0;    // bound − estimate
  double slack = 0.0;  // max(0.1, 5·stderr)
  bool passed = false;  // estimate ≤ bound + slack
};

CompareReport compare_bound(const ModelInstance& model, int N, const CompareOptions& opts);

}  // namespace parisi
