#include "parisi/conjugate.hpp"

#include <cmath>
#include <limits>

#include "parisi/rng.hpp"

namespace parisi {

void ConjugateConfig::validate() const {
  if (search_radius < 0.0) throw InvalidArgument("search_radius must be positive (or 0 for automatic)");
  if (!(tol > 0.0)) throw InvalidArgument("conjugate tol must be positive");
  if (grid_points < 3) throw InvalidArgument("conjugate grid needs at least 3 points");
  if (refine_iters < 1 || max_doublings < 0) throw InvalidArgument("bad conjugate iteration limits");
}

double default_search_radius(double y_scale, int p_min) {
  const double e = p_min >= 2 ? 1.0 / (p_min - 1) : 1.0;
  return 16.0 * std::pow(std::max(1.0, std::abs(y_scale)), e);
}

namespace {

struct Scalar1D {
  double x, value;
};

// One attempt on [0, R]; returns the maximizer of xy − f(x).
Scalar1D maximize_on(const std::function<double(double)>& f, double y, double R,
                     const ConjugateConfig& cfg, int& iterations) {
  const int G = cfg.grid_points;
  int best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= G; ++i) {
    const double x = R * i / G;
    const double v = x * y - f(x);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  double lo = R * std::max(0, best - 1) / G, hi = R * std::min(G, best + 1) / G;
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  auto g = [&](double x) { return x * y - f(x); };
  double c = hi - ratio * (hi - lo), d = lo + ratio * (hi - lo);
  double gc = g(c), gd = g(d);
  for (iterations = 0; iterations < cfg.refine_iters && hi - lo > cfg.tol * std::max(1.0, R);
       ++iterations) {
    if (gc >= gd) {
      hi = d;
      d = c;
      gd = gc;
      c = hi - ratio * (hi - lo);
      gc = g(c);
    } else {
      lo = c;
      c = d;
      gc = gd;
      d = lo + ratio * (hi - lo);
      gd = g(d);
    }
  }
  Scalar1D out{0.0, -std::numeric_limits<double>::infinity()};
  for (double x : {lo, c, d, hi, R * best / G}) {
    const double v = g(x);
    if (v > out.value) out = {x, v};
  }
  return out;
}

}  // namespace

ConjugateResult conjugate_scalar(const std::function<double(double)>& f, double y,
                                 const ConjugateConfig& cfg, int p_min) {
  cfg.validate();
  double R = cfg.search_radius > 0.0 ? cfg.search_radius : default_search_radius(y, p_min);
  for (int attempt = 0; attempt <= cfg.max_doublings; ++attempt, R *= 2.0) {
    ConjugateResult r;
    Scalar1D best = maximize_on(f, y, R, cfg, r.iterations);
    if (R - best.x > 1e3 * cfg.tol * std::max(1.0, R)) {
      r.value = best.value;
      r.argmax = Vector::Constant(1, best.x);
      r.radius = R;
      return r;
    }
  }
  throw TruncationHit("conjugate maximizer reached the search radius " + std::to_string(R / 2.0));
}

namespace {

// Cone for the barrier solver: the nonnegative orthant of R^n, or S²_+ in
// (n11, n22, n12) coordinates.
enum class BarrierCone { Orthant, Psd2 };

struct Eval {
  double f;
  Vector g;
  Matrix h;
};

double barrier(BarrierCone cone, const Vector& v, Vector* g, Matrix* h) {
  const Eigen::Index n = v.size();
  if (cone == BarrierCone::Orthant) {
    if ((v.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
    if (g) *g = -v.cwiseInverse();
    if (h) *h = v.cwiseInverse().cwiseAbs2().asDiagonal();
    return -v.array().log().sum();
  }
  const double a = v(0), b = v(1), c = v(2);
  const double det = a * b - c * c;
  if (!(a > 0.0) || !(b > 0.0) || !(det > 0.0)) return std::numeric_limits<double>::infinity();
  Vector dd(3);
  dd << b, a, -2.0 * c;
  if (g) *g = -dd / det;
  if (h) {
    Matrix d2 = Matrix::Zero(n, n);
    d2(0, 1) = d2(1, 0) = 1.0;
    d2(2, 2) = -2.0;
    *h = (dd * dd.transpose()) / (det * det) - d2 / det;
  }
  return -std::log(det);
}

// Maximizes y·v − f(v) over the cone by a log-barrier path-following Newton
// method. f is convex on the cone for specs the theory covers; the Hessian is
// regularized if it is not.
ConjugateResult barrier_maximize(const std::function<Eval(const Vector&)>& f, const Vector& y,
                                 BarrierCone cone, double radius_limit) {
  const Eigen::Index n = y.size();
  const double nu = cone == BarrierCone::Orthant ? static_cast<double>(n) : 2.0;
  Vector v = Vector::Ones(n);
  if (cone == BarrierCone::Psd2) v(2) = 0.0;
  ConjugateResult out;
  double mu = 1.0;
  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  auto F = [&](const Vector& x, double m) {
    const double b = barrier(cone, x, nullptr, nullptr);
    if (!std::isfinite(b)) return std::numeric_limits<double>::infinity();
    return f(x).f - y.dot(x) + m * b;
  };
  while (true) {
    for (int it = 0; it < 200; ++it) {
      ++out.iterations;
      Eval e = f(v);
      Vector bg;
      Matrix bh;
      barrier(cone, v, &bg, &bh);
      Vector g = e.g - y + mu * bg;
      Matrix H = e.h + mu * bh;
      Eigen::LDLT<Matrix> ldlt(H);
      double tau = 0.0;
      while (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
             (ldlt.vectorD().array() <= 0.0).any()) {
        tau = tau == 0.0 ? 1e-12 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff()) : tau * 10.0;
        ldlt.compute(H + tau * Matrix::Identity(n, n));
        if (tau > 1e12) break;
      }
      Vector d = -ldlt.solve(g);
      const double decrement = -g.dot(d);
      if (!(decrement > 1e-22 * scale)) break;
      const double F0 = e.f - y.dot(v) + mu * barrier(cone, v, nullptr, nullptr);
      double step = 1.0;
      Vector next = v + d;
      double F1 = F(next, mu);
      while (!(F1 <= F0 - 1e-4 * step * decrement) && step > 1e-20) {
        step *= 0.5;
        next = v + step * d;
        F1 = F(next, mu);
      }
      if (!(F1 <= F0)) break;
      v = next;
      if (v.cwiseAbs().maxCoeff() > radius_limit)
        throw TruncationHit("conjugate maximizer left the search radius " + std::to_string(radius_limit));
      if (decrement < 1e-18 * scale) break;
    }
    if (mu * nu < 1e-15 * scale) break;
    mu *= 0.1;
  }
  out.value = y.dot(v) - f(v).f;
  out.argmax = v;
  out.radius = radius_limit;
  return out;
}

double radius_limit(const ConjugateConfig& cfg, double y_scale, int p_min) {
  const double R = cfg.search_radius > 0.0 ? cfg.search_radius : default_search_radius(y_scale, p_min);
  return R * std::pow(2.0, cfg.max_doublings);
}

// f(v) = ξ(Σ v_k B_k) with exact first and second derivatives.
std::function<Eval(const Vector&)> linear_image(const CovarianceSpec& spec, std::vector<Matrix> basis) {
  return [&spec, basis = std::move(basis)](const Vector& v) {
    const Eigen::Index n = v.size();
    Matrix m = Matrix::Zero(spec.dimension(), spec.dimension());
    for (Eigen::Index k = 0; k < n; ++k) m += v(k) * basis[k];
    Matrix grad = gradient(spec, m);
    Eval e{eval_xi(spec, m), Vector(n), Matrix(n, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
      e.g(k) = grad.cwiseProduct(basis[k]).sum();
      for (Eigen::Index l = 0; l <= k; ++l)
        e.h(k, l) = e.h(l, k) = second_directional(spec, m, basis[k], basis[l]);
    }
    return e;
  };
}

void reject_formal(const CovarianceSpec& spec) {
  if (spec.formal()) throw FormalSpecRejected("conjugates require a non-formal covariance");
}

}  // namespace

ConjugateResult xi_perp_star(const CovarianceSpec& spec, double lambda1, double lambda2,
                             const ConjugateConfig& cfg) {
  cfg.validate();
  reject_formal(spec);
  const int D = spec.dimension();
  if (D < 2) throw InvalidArgument("xi_perp_star requires D >= 2");
  if (lambda1 == 0.0 && lambda2 == 0.0) return {0.0, Vector::Zero(2), 0.0, 0};
  const Matrix J = Matrix::Constant(D, D, 1.0 / D);
  const Matrix B1 = (Matrix::Identity(D, D) - J) / (D - 1.0);
  auto f = linear_image(spec, {B1, J});
  Vector y(2);
  y << lambda1, lambda2;
  const double scale = y.cwiseAbs().maxCoeff();
  return barrier_maximize(f, y, BarrierCone::Orthant, radius_limit(cfg, scale, spec.min_degree()));
}

ConjugateResult xi_star_psd(const CovarianceSpec& spec, const PermMatrix& m, const ConjugateConfig& cfg) {
  if (m.D != spec.dimension()) throw DimensionMismatch("PermMatrix dimension differs from covariance");
  if (!m.is_psd(1e-12)) throw NonPSDInput("conjugate argument is not PSD");
  return xi_perp_star(spec, m.lambda1, m.lambda2, cfg);
}

ConjugateResult xi_star_psd(const CovarianceSpec& spec, const Matrix& m, const ConjugateConfig& cfg) {
  cfg.validate();
  reject_formal(spec);
  if (spec.dimension() != 2) throw InvalidArgument("dense conjugation is implemented for D = 2 only");
  check_square(spec, m.rows(), m.cols());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw NonPSDInput("conjugate argument is not symmetric");
  if (cone_margin(m) < -1e-12) throw NonPSDInput("conjugate argument is not PSD");
  if (m.cwiseAbs().maxCoeff() == 0.0) return {0.0, Vector::Zero(3), 0.0, 0};
  Matrix Ea = Matrix::Zero(2, 2), Eb = Matrix::Zero(2, 2), Ec = Matrix::Zero(2, 2);
  Ea(0, 0) = 1.0;
  Eb(1, 1) = 1.0;
  Ec(0, 1) = Ec(1, 0) = 1.0;
  auto f = linear_image(spec, {Ea, Eb, Ec});
  Vector y(3);
  y << m(0, 0), m(1, 1), 2.0 * m(0, 1);
  const double scale = m.cwiseAbs().maxCoeff() * 2.0;
  return barrier_maximize(f, y, BarrierCone::Psd2, radius_limit(cfg, scale, spec.min_degree()));
}

ConjugateResult xi_dagger_scaled_star(const CovarianceSpec& spec, double lambda,
                                      const ConjugateConfig& cfg) {
  reject_formal(spec);
  if (!spec.diagonal_only()) throw InvalidArgument("xi_dagger_scaled_star requires a diagonal covariance");
  if (lambda == 0.0) return {0.0, Vector::Zero(1), 0.0, 0};
  const auto c = xi_dagger_coefficients(spec);
  const double D = spec.dimension();
  auto f = [&c, D](double mu) {
    const double x = mu / D;
    double v = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) v = v * x + c[k];
    return v;
  };
  return conjugate_scalar(f, lambda, cfg, std::max(2, spec.min_degree()));
}

PerpIdentityReport check_perp_conjugate_identity(const CovarianceSpec& spec, int samples,
                                                 const ConjugateConfig& cfg,
                                                 std::uint64_t rng_seed) {
  if (spec.dimension() != 2) throw InvalidArgument("dense comparison is available for D = 2 only");
  Rng rng(derive_seed(rng_seed, "conjugate.perp_identity"));
  const double top = 0.5 * (cfg.search_radius > 0.0 ? cfg.search_radius : 16.0);
  PerpIdentityReport rep;
  rep.samples = samples;
  for (int k = 0; k < samples; ++k) {
    const double l1 = rng.uniform(0.0, top), l2 = rng.uniform(0.0, top);
    const double a = xi_perp_star(spec, l1, l2, cfg).value;
    const double b = xi_star_psd(spec, PermMatrix{2, l1, l2}.dense(), cfg).value;
    const double rel = std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
    if (rel > rep.max_relative_gap) {
      rep.max_relative_gap = rel;
      rep.worst_lambda = Vector2(l1, l2);
    }
  }
  rep.passed = rep.max_relative_gap <= 1e-5;
  return rep;
}

}  // namespace parisi
