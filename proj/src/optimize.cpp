#include "parisi/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace parisi {

namespace {

struct Simplex {
  std::vector<Vector> x;
  std::vector<double> f;
};

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& fun, const Vector& x0,
                             const NelderMeadOptions& opts) {
  const Eigen::Index n = x0.size();
  NelderMeadResult res;
  auto f = [&](const Vector& x) {
    ++res.evaluations;
    const double v = fun(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  if (n == 0) {
    res.x = x0;
    res.f = f(x0);
    res.converged = true;
    return res;
  }
  const double dn = static_cast<double>(n);
  const double alpha = 1.0, beta = 1.0 + 2.0 / dn, gamma = 0.75 - 0.5 / dn, delta = 1.0 - 1.0 / dn;

  Vector best = x0;
  double best_f = f(x0);
  for (int round = 0; round <= opts.max_restarts; ++round) {
    Simplex s;
    s.x.push_back(best);
    s.f.push_back(best_f);
    for (Eigen::Index i = 0; i < n; ++i) {
      Vector v = best;
      v(i) += opts.initial_step;
      s.x.push_back(v);
      s.f.push_back(f(v));
    }
    std::vector<std::size_t> order(n + 1);
    bool converged = false;
    while (res.evaluations < opts.max_evaluations) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.f[a] < s.f[b]; });
      const std::size_t lo = order.front(), hi = order.back(), nh = order[n - 1];
      double diam = 0.0;
      for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i)
        diam = std::max(diam, (s.x[i] - s.x[lo]).cwiseAbs().maxCoeff());
      // Either test suffices: flat directions (merged levels, clamped values)
      // never shrink the simplex, and restart rounds catch early stops.
      if (std::abs(s.f[hi] - s.f[lo]) <= opts.f_tol * std::max(1.0, std::abs(s.f[lo])) || diam <= opts.x_tol) {
        converged = true;
        break;
      }
      Vector centroid = Vector::Zero(n);
      for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i)
        if (i != hi) centroid += s.x[i];
      centroid /= dn;
      const Vector xr = centroid + alpha * (centroid - s.x[hi]);
      const double fr = f(xr);
      if (fr < s.f[lo]) {
        const Vector xe = centroid + beta * (xr - centroid);
        const double fe = f(xe);
        if (fe < fr) {
          s.x[hi] = xe;
          s.f[hi] = fe;
        } else {
          s.x[hi] = xr;
          s.f[hi] = fr;
        }
        continue;
      }
      if (fr < s.f[nh]) {
        s.x[hi] = xr;
        s.f[hi] = fr;
        continue;
      }
      const bool outside = fr < s.f[hi];
      const Vector xc = outside ? Vector(centroid + gamma * (xr - centroid))
                                : Vector(centroid - gamma * (centroid - s.x[hi]));
      const double fc = f(xc);
      if (fc < (outside ? fr : s.f[hi])) {
        s.x[hi] = xc;
        s.f[hi] = fc;
        continue;
      }
      for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
        if (i == lo) continue;
        s.x[i] = s.x[lo] + delta * (s.x[i] - s.x[lo]);
        s.f[i] = f(s.x[i]);
      }
    }
    const std::size_t lo = static_cast<std::size_t>(std::min_element(s.f.begin(), s.f.end()) - s.f.begin());
    const double gain = best_f - s.f[lo];
    if (s.f[lo] <= best_f) {
      best = s.x[lo];
      best_f = s.f[lo];
    }
    res.converged = converged;
    if (!converged || gain <= opts.f_tol * std::max(1.0, std::abs(best_f))) break;
  }
  res.x = best;
  res.f = best_f;
  return res;
}

}  // namespace parisi
