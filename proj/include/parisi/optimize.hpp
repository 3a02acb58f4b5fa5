#pragma once

#include <functional>

#include "parisi/model.hpp"

namespace parisi {

struct NelderMeadOptions {
  double initial_step = 0.3;
  double f_tol = 1e-13;   // spread of simplex values
  double x_tol = 1e-9;    // simplex diameter (max norm)
  int max_evaluations = 20000;
  int max_restarts = 3;   // re-seed the simplex at the best point after convergence
};

struct NelderMeadResult {
  Vector x;
  double f = 0.0;
  int evaluations = 0;
  bool converged = false;
};

// Minimizes f with adaptive-coefficient Nelder–Mead. Non-finite values are
// treated as +inf.
NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                             const NelderMeadOptions& opts = {});

}  // namespace parisi
