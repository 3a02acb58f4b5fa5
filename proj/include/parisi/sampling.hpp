#pragma once

#include <algorithm>
#include <vector>

#include "parisi/paths.hpp"
#include "parisi/rng.hpp"

namespace parisi {

// Random K-level grids and monotone paths for property checks. Values end at
// most at `bound` in every coordinate.
inline std::vector<double> random_grid(Rng& rng, int K) {
  std::vector<double> cuts;
  for (int i = 0; i + 1 < K; ++i) cuts.push_back(rng.uniform(0.02, 0.98));
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> g{0.0};
  for (double c : cuts) g.push_back(std::max(c, g.back() + 1e-3));
  g.push_back(1.0);
  if (g[K - 1] >= 1.0) {
    for (int i = 1; i < K; ++i) g[i] = static_cast<double>(i) / K;
  }
  return g;
}

inline std::vector<double> random_increasing(Rng& rng, int K, double bound) {
  std::vector<double> inc(K);
  double total = 0.0;
  for (auto& x : inc) total += (x = rng.uniform(0.05, 1.0));
  const double top = rng.uniform(0.2, 1.0) * bound;
  std::vector<double> v;
  double cum = 0.0;
  for (double x : inc) v.push_back(cum += x / total * top);
  return v;
}

inline ScalarPath random_scalar_path(Rng& rng, int K, double bound) {
  return {random_grid(rng, K), random_increasing(rng, K, bound)};
}

inline PairPath random_pair_path(Rng& rng, int K, double bound) {
  PairPath p{random_grid(rng, K), {}};
  const auto a = random_increasing(rng, K, bound), b = random_increasing(rng, K, bound);
  for (int l = 0; l < K; ++l) p.values.emplace_back(a[l], b[l]);
  return p;
}

// D×D PSD increments G Gᵀ scaled so each value has trace at most bound·D.
inline PsdPath random_psd_path(Rng& rng, int K, int D, double bound) {
  PsdPath p{random_grid(rng, K), {}};
  Matrix cum = Matrix::Zero(D, D);
  for (int l = 0; l < K; ++l) {
    Matrix G(D, D);
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) G(i, j) = rng.normal();
    Matrix inc = G * G.transpose();
    inc *= bound / (K * std::max(inc.trace() / D, 1e-12)) * rng.uniform(0.2, 1.0);
    cum += inc;
    p.values.push_back(cum);
  }
  return p;
}

}  // namespace parisi
