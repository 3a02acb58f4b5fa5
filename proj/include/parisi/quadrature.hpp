#pragma once

#include <vector>

namespace parisi {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point rule for E f(Z), Z ~ N(0,1). Weights sum to 1. Cached per n.
const GaussRule& gauss_hermite(int n);

// n-point Gauss–Legendre rule on [0,1]; exact for polynomials of degree 2n-1.
const GaussRule& gauss_legendre(int n);

}  // namespace parisi
