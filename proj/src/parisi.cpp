#include "parisi/parisi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "parisi/optimize.hpp"
#include "parisi/parallel.hpp"
#include "parisi/rng.hpp"

namespace parisi {

std::string to_string(Reduction r) {
  switch (r) {
    case Reduction::Scalar: return "scalar";
    case Reduction::Pair: return "pair";
    case Reduction::Matrix: return "matrix";
  }
  return "?";
}

Reduction parse_reduction(const std::string& s) {
  if (s == "scalar") return Reduction::Scalar;
  if (s == "pair") return Reduction::Pair;
  if (s == "matrix") return Reduction::Matrix;
  throw ConfigError("unknown reduction '" + s + "' (expected scalar, pair or matrix)");
}

namespace {

bool model_invariant(const ModelInstance& m) {
  return check_permutation_invariance(m.covariance).invariant && m.measure.is_permutation_invariant();
}

void require_t(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("t must be finite and nonnegative");
}

template <typename Value>
bool all_zero(const StepPath<Value>& p) {
  for (const auto& v : p.values)
    if (component_norm(v) != 0.0) return false;
  return true;
}

struct Evaluated {
  double value;
  double psi_error;
};

template <typename Value, typename Psi, typename Star>
Evaluated assemble(const StepPath<Value>& p, const ObjectiveSpec& spec, Psi psi_fn, Star star) {
  const double t = spec.model.t;
  require_t(t);
  validate_path(p);
  if (t == 0.0) {
    // The penalty t·ξ*(p/t) tends to +inf off the zero path as t → 0.
    return {all_zero(p) ? 0.0 : -std::numeric_limits<double>::infinity(), 0.0};
  }
  const CascadeResult c = psi_fn(p);
  double penalty = 0.0;
  for (int l = 0; l < p.levels(); ++l) {
    if (component_norm(p.values[l]) == 0.0) continue;
    penalty += p.gap(l) * t * star(Value(p.values[l] / t));
  }
  return {c.value - penalty, c.error_estimate};
}

Evaluated eval_scalar(const ScalarPath& p, const ObjectiveSpec& s) {
  return assemble(
      p, s, [&](const ScalarPath& q) { return psi_scalar(q, s.model.measure, s.quad); },
      [&](double y) { return xi_dagger_scaled_star(s.model.covariance, y, s.conj).value; });
}

Evaluated eval_pair(const PairPath& p, const ObjectiveSpec& s) {
  return assemble(
      p, s, [&](const PairPath& q) { return psi_pair(q, s.model.measure, s.quad); },
      [&](const Vector2& y) { return xi_perp_star(s.model.covariance, y(0), y(1), s.conj).value; });
}

Evaluated eval_matrix(const PsdPath& p, const ObjectiveSpec& s) {
  return assemble(
      p, s, [&](const PsdPath& q) { return psi(q, s.model.measure, s.quad); },
      [&](const Matrix& y) { return xi_star_psd(s.model.covariance, y, s.conj).value; });
}

Evaluated eval_any(const AnyPath& path, const ObjectiveSpec& s) {
  if (auto p = std::get_if<ScalarPath>(&path)) return eval_scalar(*p, s);
  if (auto p = std::get_if<PairPath>(&path)) return eval_pair(*p, s);
  return eval_matrix(std::get<PsdPath>(path), s);
}

}  // namespace

void ObjectiveSpec::validate() const {
  model.validate();
  if (levels < 1) throw InvalidArgument("levels must be at least 1");
  if (model.covariance.formal()) throw FormalSpecRejected("objectives require a non-formal covariance");
  quad.validate();
  conj.validate();
  const int D = model.covariance.dimension();
  switch (reduction) {
    case Reduction::Matrix:
      if (D != 2) throw PreconditionViolated("matrix reduction is implemented for D = 2 only");
      break;
    case Reduction::Pair:
      if (D < 2) throw PreconditionViolated("pair reduction needs D >= 2");
      if (!model_invariant(model)) throw PreconditionViolated("pair reduction needs a permutation-invariant model");
      break;
    case Reduction::Scalar:
      if (!model.covariance.diagonal_only())
        throw PreconditionViolated("scalar reduction needs a diagonal_only covariance");
      if (!model_invariant(model)) throw PreconditionViolated("scalar reduction needs a permutation-invariant model");
      break;
  }
}

double objective_scalar(const ScalarPath& p, const ObjectiveSpec& spec) {
  ObjectiveSpec s = spec;
  s.reduction = Reduction::Scalar;
  s.validate();
  return eval_scalar(p, s).value;
}

double objective_pair(const PairPath& p, const ObjectiveSpec& spec) {
  ObjectiveSpec s = spec;
  s.reduction = Reduction::Pair;
  s.validate();
  return eval_pair(p, s).value;
}

double objective_matrix(const PsdPath& q, const ObjectiveSpec& spec) {
  ObjectiveSpec s = spec;
  s.reduction = Reduction::Matrix;
  s.validate();
  return eval_matrix(q, s).value;
}

double objective(const AnyPath& path, const ObjectiveSpec& spec) {
  if (auto p = std::get_if<ScalarPath>(&path)) return objective_scalar(*p, spec);
  if (auto p = std::get_if<PairPath>(&path)) return objective_pair(*p, spec);
  return objective_matrix(std::get<PsdPath>(path), spec);
}

namespace {

// Unconstrained coordinates for K-level paths: K−1 gap logits (the last is
// pinned at 0) followed by per-level increment factors: s with Δ = s² for
// scalars, one such pair per eigenvalue coordinate, and a lower-triangular
// L with Δ = L Lᵀ for 2×2 matrices.
struct Codec {
  Reduction red;
  int K;
  int D;
  double clamp = std::numeric_limits<double>::infinity();

  int per_level() const { return red == Reduction::Scalar ? 1 : red == Reduction::Pair ? 2 : 3; }
  int dim() const { return K - 1 + K * per_level(); }

  std::vector<double> grid(const Vector& th) const {
    std::vector<double> logit(K, 0.0);
    for (int l = 0; l + 1 < K; ++l) logit[l] = std::clamp(th(l), -30.0, 30.0);
    const double m = *std::max_element(logit.begin(), logit.end());
    double total = 0.0;
    for (auto& x : logit) total += (x = std::exp(x - m));
    std::vector<double> g{0.0};
    double cum = 0.0;
    for (int l = 0; l < K; ++l) g.push_back(l + 1 == K ? 1.0 : (cum += logit[l] / total));
    return g;
  }

  // Drops levels whose gap vanished in floating point.
  template <typename Value>
  static StepPath<Value> compact(const std::vector<double>& g, const std::vector<Value>& vals) {
    StepPath<Value> p;
    p.grid.push_back(0.0);
    for (std::size_t l = 0; l < vals.size(); ++l) {
      if (!(g[l + 1] > p.grid.back())) {
        if (!p.values.empty()) p.values.back() = vals[l];
        continue;
      }
      p.grid.push_back(g[l + 1]);
      p.values.push_back(vals[l]);
    }
    if (p.grid.back() != 1.0) p.grid.back() = 1.0;
    return p;
  }

  AnyPath decode(const Vector& th) const {
    const auto g = grid(th);
    const int o = K - 1;
    if (red == Reduction::Scalar) {
      std::vector<double> v;
      double cum = 0.0;
      for (int l = 0; l < K; ++l) v.push_back(std::min(cum += th(o + l) * th(o + l), clamp));
      return compact(g, v);
    }
    if (red == Reduction::Pair) {
      std::vector<Vector2> v;
      Vector2 cum = Vector2::Zero();
      for (int l = 0; l < K; ++l) {
        cum += Vector2(th(o + 2 * l) * th(o + 2 * l), th(o + 2 * l + 1) * th(o + 2 * l + 1));
        v.push_back(cum);
      }
      return compact(g, v);
    }
    std::vector<Matrix> v;
    Matrix cum = Matrix::Zero(2, 2);
    for (int l = 0; l < K; ++l) {
      Matrix L = Matrix::Zero(2, 2);
      L(0, 0) = th(o + 3 * l);
      L(1, 0) = th(o + 3 * l + 1);
      L(1, 1) = th(o + 3 * l + 2);
      cum += L * L.transpose();
      v.push_back(cum);
    }
    return compact(g, v);
  }

  Vector encode(const AnyPath& path) const {
    Vector th = Vector::Zero(dim());
    std::vector<double> grid;
    std::visit([&](const auto& p) { grid = p.grid; }, path);
    if (static_cast<int>(grid.size()) != K + 1) throw InvalidArgument("warm start has the wrong number of levels");
    const double last = grid[K] - grid[K - 1];
    for (int l = 0; l + 1 < K; ++l) th(l) = std::log((grid[l + 1] - grid[l]) / last);
    const int o = K - 1;
    if (auto p = std::get_if<ScalarPath>(&path)) {
      for (int l = 0; l < K; ++l) th(o + l) = std::sqrt(std::max(0.0, p->increment(l)));
    } else if (auto p = std::get_if<PairPath>(&path)) {
      for (int l = 0; l < K; ++l) {
        const Vector2 d = p->increment(l);
        th(o + 2 * l) = std::sqrt(std::max(0.0, d(0)));
        th(o + 2 * l + 1) = std::sqrt(std::max(0.0, d(1)));
      }
    } else {
      const auto& q = std::get<PsdPath>(path);
      for (int l = 0; l < K; ++l) {
        const Matrix d = q.increment(l);
        const double a = std::sqrt(std::max(0.0, d(0, 0)));
        const double b = a > 1e-300 ? d(1, 0) / a : 0.0;
        th(o + 3 * l) = a;
        th(o + 3 * l + 1) = b;
        th(o + 3 * l + 2) = std::sqrt(std::max(0.0, d(1, 1) - b * b));
      }
    }
    return th;
  }

  Vector random(Rng& rng, double scale) const {
    Vector th(dim());
    for (int l = 0; l + 1 < K; ++l) th(l) = 0.5 * rng.normal();
    const double s = std::sqrt(scale / K);
    for (int i = K - 1; i < dim(); ++i) th(i) = s * rng.uniform(0.1, 1.0);
    if (red == Reduction::Matrix)
      for (int l = 0; l < K; ++l) th(K - 1 + 3 * l + 1) = 0.3 * s * rng.normal();
    return th;
  }
};

// Each level split into two halves carrying the same value.
AnyPath split_levels(const AnyPath& path) {
  return std::visit(
      [](const auto& p) -> AnyPath {
        std::decay_t<decltype(p)> out;
        out.grid.push_back(0.0);
        for (int l = 0; l < p.levels(); ++l) {
          out.grid.push_back(0.5 * (p.grid[l] + p.grid[l + 1]));
          out.grid.push_back(p.grid[l + 1]);
          out.values.push_back(p.values[l]);
          out.values.push_back(p.values[l]);
        }
        return out;
      },
      path);
}

int levels_of(const AnyPath& p) {
  return std::visit([](const auto& x) { return x.levels(); }, p);
}

std::vector<double> support_key(const AnyPath& p) {
  std::vector<double> k;
  for (const auto& a : induced_atoms(p))
    for (Eigen::Index i = 0; i < a.value.size(); ++i) k.push_back(a.value(i));
  return k;
}

AnyPath zero_path(Reduction r) {
  switch (r) {
    case Reduction::Scalar: return constant_path(0.0);
    case Reduction::Pair: return constant_path(Vector2(Vector2::Zero()));
    case Reduction::Matrix: return constant_path(Matrix(Matrix::Zero(2, 2)));
  }
  return constant_path(0.0);
}

}  // namespace

std::vector<InducedAtom> induced_atoms(const AnyPath& path) {
  std::vector<InducedAtom> out;
  auto push = [&](double w, Vector v) {
    if (!out.empty() && out.back().value == v) out.back().weight += w;
    else out.push_back({w, std::move(v)});
  };
  if (auto p = std::get_if<ScalarPath>(&path)) {
    for (int l = 0; l < p->levels(); ++l) push(p->gap(l), Vector::Constant(1, p->values[l]));
  } else if (auto p = std::get_if<PairPath>(&path)) {
    for (int l = 0; l < p->levels(); ++l) push(p->gap(l), Vector(p->values[l]));
  } else {
    const auto& q = std::get<PsdPath>(path);
    for (int l = 0; l < q.levels(); ++l) {
      Vector v(3);
      v << q.values[l](0, 0), q.values[l](1, 1), q.values[l](0, 1);
      push(q.gap(l), v);
    }
  }
  return out;
}

double path_distance(const AnyPath& a, const AnyPath& b) {
  if (a.index() != b.index()) throw InvalidArgument("path_distance needs paths of the same cone");
  return std::visit(
      [&](const auto& pa) {
        using P = std::decay_t<decltype(pa)>;
        return l1_distance(pa, std::get<P>(b));
      },
      a);
}

double truncation_radius(const CovarianceSpec& spec, double t, const ConjugateConfig& conj) {
  require_t(t);
  if (!spec.diagonal_only()) throw PreconditionViolated("truncation radius needs a diagonal covariance");
  if (t == 0.0) return 0.0;
  auto slope = [&](double lambda) { return xi_dagger_scaled_star(spec, lambda, conj).value / lambda; };
  double hi = 1.0;
  for (int i = 0; slope(hi) < 1.0; ++i) {
    if (i > 60) throw TruncationHit("conjugate slope never reaches 1");
    hi *= 2.0;
  }
  double lo = 0.0;
  for (int i = 0; i < 100 && hi - lo > 1e-13 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) >= 1.0 ? hi : lo) = mid;
  }
  return t * hi;
}

OptimizeResult optimize(const ObjectiveSpec& spec, const OptimizeOptions& opts) {
  spec.validate();
  require_t(spec.model.t);
  if (opts.restarts < 0) throw InvalidArgument("restarts must be nonnegative");
  OptimizeResult res;
  if (spec.model.t == 0.0) {
    res.best_path = zero_path(spec.reduction);
    res.induced_measure = induced_atoms(res.best_path);
    res.trace.push_back({1, 0.0, 0});
    return res;
  }
  if (opts.check_convexity) {
    const auto cvx = check_convexity_on_cone(spec.model.covariance, 256, 0x5eedULL);
    if (!cvx.passed)
      throw PreconditionViolated("covariance is not convex on the cone (worst midpoint violation " +
                                 std::to_string(cvx.worst_violation) + "); use upper-bound");
  }
  const int D = spec.model.covariance.dimension();
  double clamp = std::numeric_limits<double>::infinity();
  if (spec.reduction == Reduction::Scalar) clamp = truncation_radius(spec.model.covariance, spec.model.t, spec.conj);

  std::vector<int> schedule = opts.K_schedule;
  if (schedule.empty()) schedule.push_back(spec.levels);

  const bool parallel_restarts = opts.threads > 1 && opts.restarts > 1;
  ObjectiveSpec inner = spec;
  inner.quad.estimate_error = false;
  inner.quad.threads = parallel_restarts ? 1 : opts.threads;

  NelderMeadOptions nm;
  nm.x_tol = opts.step_tol;
  nm.max_evaluations = opts.max_evaluations;

  std::vector<AnyPath> carried;
  double previous_best = -std::numeric_limits<double>::infinity();
  for (std::size_t stage = 0;; ++stage) {
    int K;
    if (stage < schedule.size()) K = schedule[stage];
    else if (opts.escalate) K = levels_of(carried.front()) * 2;
    else break;
    if (stage >= schedule.size() && K > opts.max_levels) break;
    if (K < 1) throw InvalidArgument("levels must be at least 1");

    Codec codec{spec.reduction, K, D, clamp};
    struct Start {
      Vector theta;
      std::uint64_t seed;
    };
    std::vector<Start> starts;
    for (const auto& w : opts.warm_starts)
      if (levels_of(w) == K && static_cast<int>(w.index()) == static_cast<int>(spec.reduction))
        starts.push_back({codec.encode(w), 0});
    for (const auto& c : carried)
      if (levels_of(split_levels(c)) == K) starts.push_back({codec.encode(split_levels(c)), 0});
    for (int r = 0; r < opts.restarts; ++r) {
      const std::uint64_t seed = derive_seed(opts.rng_seed, "parisi.optimize", static_cast<std::uint64_t>(K) * 100000 + r);
      Rng rng(seed);
      starts.push_back({codec.random(rng, opts.init_scale), seed});
    }

    std::vector<RestartRecord> recs(starts.size());
    auto run = [&](std::size_t i) {
      auto f = [&](const Vector& th) {
        const double v = eval_any(codec.decode(th), inner).value;
        return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
      };
      NelderMeadResult r = nelder_mead(f, starts[i].theta, nm);
      recs[i] = {K, -r.f, codec.decode(r.x), r.evaluations, r.converged, starts[i].seed};
    };
    parallel_for(starts.size(), parallel_restarts ? opts.threads : 1, run);

    int evals = 0;
    for (const auto& r : recs) evals += r.evaluations;
    std::stable_sort(recs.begin(), recs.end(), [](const RestartRecord& a, const RestartRecord& b) {
      if (a.value != b.value) return a.value > b.value;
      return support_key(a.path) < support_key(b.path);
    });
    const double stage_best = recs.empty() ? previous_best : recs.front().value;
    res.trace.push_back({K, stage_best, evals});
    res.restarts.insert(res.restarts.end(), recs.begin(), recs.end());
    if (!recs.empty()) carried = {recs.front().path};
    const bool improved = stage_best - previous_best > opts.value_tol;
    previous_best = std::max(previous_best, stage_best);
    if (stage + 1 >= schedule.size() && (!opts.escalate || !improved)) break;
  }

  if (res.restarts.empty()) {
    res.best_path = zero_path(spec.reduction);
  } else {
    std::stable_sort(res.restarts.begin(), res.restarts.end(), [](const RestartRecord& a, const RestartRecord& b) {
      if (a.value != b.value) return a.value > b.value;
      return support_key(a.path) < support_key(b.path);
    });
    res.best_path = res.restarts.front().path;
  }
  // The zero path is always feasible with value 0.
  if (res.restarts.empty() || res.restarts.front().value < 0.0) res.best_path = zero_path(spec.reduction);

  const Evaluated fin = eval_any(res.best_path, spec);
  res.value = fin.value;
  res.error_estimate = fin.psi_error;
  res.induced_measure = induced_atoms(res.best_path);
  const double cut = res.restarts.empty() ? 0.0 : res.restarts.front().value - opts.value_tol;
  std::vector<const AnyPath*> near;
  for (const auto& r : res.restarts)
    if (r.value >= cut) near.push_back(&r.path);
  for (std::size_t i = 0; i < near.size(); ++i)
    for (std::size_t j = i + 1; j < near.size(); ++j)
      res.spread = std::max(res.spread, path_distance(*near[i], *near[j]));
  return res;
}

SupInfReport supinf_crosscheck(const ObjectiveSpec& spec, const PairPath& p, int K_inner) {
  ObjectiveSpec s = spec;
  s.reduction = Reduction::Pair;
  s.validate();
  validate_path(p);
  const double t = s.model.t;
  if (!(t > 0.0)) throw InvalidArgument("supinf_crosscheck needs t > 0");
  const int K = p.levels();
  if (K_inner < K || K_inner % K != 0) throw InvalidArgument("K_inner must be a positive multiple of the path levels");
  const int split = K_inner / K;
  const auto& cov = s.model.covariance;

  SupInfReport rep;
  for (int l = 0; l < K; ++l) {
    const Vector2 y = p.values[l] / t;
    if (y.cwiseAbs().maxCoeff() > 0.0) rep.closed -= p.gap(l) * t * xi_perp_star(cov, y(0), y(1), s.conj).value;
  }

  std::vector<double> grid{0.0};
  std::vector<Vector2> pv;
  for (int l = 0; l < K; ++l)
    for (int k = 1; k <= split; ++k) {
      grid.push_back(k == split ? p.grid[l + 1] : p.grid[l] + p.gap(l) * k / split);
      pv.push_back(p.values[l]);
    }
  auto decode = [&](const Vector& th) {
    PairPath r{grid, {}};
    Vector2 cum = Vector2::Zero();
    for (int m = 0; m < K_inner; ++m) {
      cum += Vector2(th(2 * m) * th(2 * m), th(2 * m + 1) * th(2 * m + 1));
      r.values.push_back(cum);
    }
    return r;
  };
  auto inner = [&](const Vector& th) {
    const PairPath r = decode(th);
    double v = 0.0;
    for (int m = 0; m < K_inner; ++m)
      v += (grid[m + 1] - grid[m]) * (-pv[m].dot(r.values[m]) + t * xi_perp(cov, r.values[m](0), r.values[m](1)));
    return v;
  };
  NelderMeadOptions nm;
  nm.max_evaluations = 40000;
  nm.x_tol = 1e-10;
  nm.max_restarts = 6;
  rep.direct = std::numeric_limits<double>::infinity();
  for (double start : {0.1, 0.6}) {
    NelderMeadResult r = nelder_mead(inner, Vector::Constant(2 * K_inner, start), nm);
    if (r.f < rep.direct) {
      rep.direct = r.f;
      rep.minimizer = decode(r.x);
    }
  }
  rep.gap = rep.direct - rep.closed;
  rep.passed = std::abs(rep.gap) <= 1e-4 * std::max(1.0, std::abs(rep.closed));
  return rep;
}

OptimizeResult upper_bound_nonconvex(const ModelInstance& model, int levels,
                                     const QuadratureConfig& quad, const ConjugateConfig& conj,
                                     OptimizeOptions opts) {
  model.validate();
  if (model.covariance.formal()) throw FormalSpecRejected("upper bound requires a non-formal covariance");
  if (!model.covariance.diagonal_only()) throw PreconditionViolated("upper bound needs a diagonal_only covariance");
  if (!model_invariant(model)) throw PreconditionViolated("upper bound needs a permutation-invariant model");
  ObjectiveSpec spec;
  spec.model = model;
  spec.model.covariance = Xi_spec(model.covariance);
  spec.reduction = Reduction::Scalar;
  spec.levels = levels;
  spec.quad = quad;
  spec.conj = conj;
  opts.check_convexity = false;
  return optimize(spec, opts);
}

UniquenessReport uniqueness_probe(const ObjectiveSpec& spec, OptimizeOptions opts) {
  if (spec.reduction != Reduction::Scalar) throw PreconditionViolated("uniqueness probe uses the scalar reduction");
  opts.restarts = std::max(opts.restarts, 20);
  opts.escalate = false;
  opts.K_schedule = {spec.levels};
  const OptimizeResult r = optimize(spec, opts);
  UniquenessReport rep;
  rep.restarts = static_cast<int>(r.restarts.size());
  rep.best_value = r.restarts.empty() ? r.value : r.restarts.front().value;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::vector<const AnyPath*> near;
  for (const auto& x : r.restarts) {
    rep.values.push_back(x.value);
    lo = std::min(lo, x.value);
    hi = std::max(hi, x.value);
    if (x.value >= rep.best_value - opts.value_tol) near.push_back(&x.path);
  }
  rep.value_spread = r.restarts.empty() ? 0.0 : hi - lo;
  rep.near_best = static_cast<int>(near.size());
  for (std::size_t i = 0; i < near.size(); ++i)
    for (std::size_t j = i + 1; j < near.size(); ++j)
      rep.w1_spread = std::max(rep.w1_spread, path_distance(*near[i], *near[j]));
  return rep;
}

}  // namespace parisi
