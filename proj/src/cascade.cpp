#include "parisi/cascade.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "parisi/parallel.hpp"
#include "parisi/quadrature.hpp"
#include "parisi/rng.hpp"

namespace parisi {

void QuadratureConfig::validate() const {
  if (mode != QuadratureMode::MonteCarlo && hermite_nodes < 5)
    throw InvalidArgument("tensor quadrature needs at least 5 Hermite nodes");
  if (mode == QuadratureMode::MonteCarlo && mc_samples < 10000)
    throw InvalidArgument("Monte Carlo quadrature needs at least 1e4 samples");
  if (max_tensor_points < 1) throw InvalidArgument("max_tensor_points must be positive");
}

namespace {

constexpr double kSkipTol = 1e-14;

struct Level {
  double zeta;
  Matrix C;  // D×D factor with C Cᵀ = increment
};

struct Prepared {
  std::vector<Level> levels;  // non-degenerate levels only
  Matrix last;                // q_K
  std::vector<LevelDiagnostics> diags;
};

// Point set of one level, already mapped to per-atom exponent increments.
struct Rule {
  std::vector<double> w;
  Matrix A;  // atoms × points: √2 x_a · C z_k
};

double combine(const double* y, const double* w, std::size_t n, double zeta) {
  if (zeta <= 0.0) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += w[k] * y[k];
    return s;
  }
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) m = std::max(m, y[k]);
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += w[k] * std::expm1(zeta * (y[k] - m));
  return m + std::log1p(s) / zeta;
}

class Engine {
 public:
  Engine(const SpinMeasure& P1, const Prepared& prep, std::vector<Rule> rules)
      : rules_(std::move(rules)) {
    const auto& atoms = P1.atoms();
    const Eigen::Index A = static_cast<Eigen::Index>(atoms.size());
    base_.resize(A);
    for (Eigen::Index a = 0; a < A; ++a) {
      const Vector& x = atoms[a].point;
      base_(a) = std::log(atoms[a].weight) - x.dot(prep.last * x);
    }
    for (const auto& l : prep.levels) zetas_.push_back(l.zeta);
    for (const auto& r : rules_) {
      ybuf_.emplace_back(r.w.size());
      ebuf_.emplace_back(A);
    }
  }

  // Y_0 with the outermost level's points evaluated through `threads` workers.
  double run(int threads) {
    if (rules_.empty()) return leaf(Vector::Zero(base_.size()));
    const Rule& r = rules_[0];
    const std::size_t P = r.w.size();
    std::vector<double> y(P);
    if (threads <= 1 || P < 2) {
      for (std::size_t k = 0; k < P; ++k) y[k] = child(0, r.A.col(k));
    } else {
      const std::size_t workers = std::min<std::size_t>(threads, P);
      std::vector<Engine> copies(workers, *this);
      parallel_for(workers, static_cast<int>(workers), [&](std::size_t w) {
        for (std::size_t k = P * w / workers; k < P * (w + 1) / workers; ++k)
          y[k] = copies[w].child(0, r.A.col(k));
      });
    }
    if (zetas_[0] <= 0.0) {
      std::vector<double> prod(P);
      for (std::size_t k = 0; k < P; ++k) prod[k] = r.w[k] * y[k];
      return pairwise_sum(prod);
    }
    const double m = *std::max_element(y.begin(), y.end());
    std::vector<double> prod(P);
    for (std::size_t k = 0; k < P; ++k) prod[k] = r.w[k] * std::expm1(zetas_[0] * (y[k] - m));
    return m + std::log1p(pairwise_sum(prod)) / zetas_[0];
  }

 private:
  double leaf(const Vector& e) const {
    double m = -std::numeric_limits<double>::infinity();
    const Eigen::Index A = base_.size();
    for (Eigen::Index a = 0; a < A; ++a) m = std::max(m, base_(a) + e(a));
    double s = 0.0;
    for (Eigen::Index a = 0; a < A; ++a) s += std::exp(base_(a) + e(a) - m);
    return m + std::log(s);
  }

  // Value of the subtree below level l reached with accumulated exponent e.
  template <typename E>
  double child(std::size_t l, const E& e) {
    if (l + 1 == rules_.size()) return leaf(e);
    return level(l + 1, e);
  }

  template <typename E>
  double level(std::size_t l, const E& e) {
    const Rule& r = rules_[l];
    std::vector<double>& y = ybuf_[l];
    Vector& e2 = ebuf_[l];
    const std::size_t P = r.w.size();
    for (std::size_t k = 0; k < P; ++k) {
      e2.noalias() = e + r.A.col(k);
      y[k] = l + 1 == rules_.size() ? leaf(e2) : level(l + 1, e2);
    }
    return combine(y.data(), r.w.data(), P, zetas_[l]);
  }

  std::vector<Rule> rules_;
  Vector base_;
  std::vector<double> zetas_;
  std::vector<std::vector<double>> ybuf_;
  std::vector<Vector> ebuf_;
};

Matrix atom_matrix(const SpinMeasure& P1) {
  Matrix sx(P1.dimension(), P1.atoms().size());
  for (std::size_t a = 0; a < P1.atoms().size(); ++a) sx.col(a) = std::sqrt(2.0) * P1.atoms()[a].point;
  return sx;
}

Rule tensor_rule(const Matrix& C, const Matrix& sx, int n) {
  const int D = static_cast<int>(C.rows());
  const GaussRule& g = gauss_hermite(n);
  std::size_t P = 1;
  for (int d = 0; d < D; ++d) P *= n;
  Matrix Z(D, P);
  Rule r;
  r.w.resize(P);
  std::vector<int> idx(D, 0);
  for (std::size_t k = 0; k < P; ++k) {
    double w = 1.0;
    for (int d = 0; d < D; ++d) {
      Z(d, k) = g.nodes[idx[d]];
      w *= g.weights[idx[d]];
    }
    r.w[k] = w;
    for (int d = D - 1; d >= 0; --d) {
      if (++idx[d] < n) break;
      idx[d] = 0;
    }
  }
  r.A = sx.transpose() * (C * Z);
  return r;
}

Rule sampled_rule(const Matrix& C, const Matrix& sx, int m, Rng& rng) {
  const int D = static_cast<int>(C.rows());
  Matrix Z(D, m);
  for (int k = 0; k < m; k += 2) {
    for (int d = 0; d < D; ++d) {
      Z(d, k) = rng.normal();
      Z(d, k + 1) = -Z(d, k);
    }
  }
  Rule r;
  r.w.assign(m, 1.0 / m);
  r.A = sx.transpose() * (C * Z);
  return r;
}

double power(double base, int e) { return std::pow(base, e); }

double tensor_value(const SpinMeasure& P1, const Prepared& prep, int n, int threads) {
  const Matrix sx = atom_matrix(P1);
  std::vector<Rule> rules;
  for (const auto& l : prep.levels) rules.push_back(tensor_rule(l.C, sx, n));
  Engine e(P1, prep, std::move(rules));
  return -e.run(threads);
}

CascadeResult evaluate(const SpinMeasure& P1, const Prepared& prep, const QuadratureConfig& quad) {
  quad.validate();
  const int D = P1.dimension();
  const int L = static_cast<int>(prep.levels.size());
  const int dims = D * L;
  CascadeResult res;
  res.levels = prep.diags;
  res.gaussian_dims = dims;
  const double budget = static_cast<double>(quad.max_tensor_points);

  QuadratureMode mode = quad.mode;
  int n = quad.hermite_nodes;
  if (mode == QuadratureMode::Auto) {
    mode = QuadratureMode::MonteCarlo;
    if (dims <= 8) {
      while (n > 5 && power(n, dims) > budget) --n;
      if (power(n, dims) <= budget) mode = QuadratureMode::Tensor;
    }
  } else if (mode == QuadratureMode::Tensor && power(n, dims) > budget) {
    throw BudgetExceeded("tensor rule needs " + std::to_string(n) + "^" + std::to_string(dims) +
                         " points, above max_tensor_points");
  }
  res.mode = mode;

  if (L == 0) {
    res.nodes = n;
    res.value = tensor_value(P1, prep, n, 1) + 0.0;  // −log 1 is −0
    return res;
  }

  if (mode == QuadratureMode::Tensor) {
    res.nodes = n;
    const double coarse = tensor_value(P1, prep, n, quad.threads);
    if (!quad.estimate_error) {
      res.value = coarse;
      return res;
    }
    if (power(2 * n, dims) <= budget) {
      res.value = tensor_value(P1, prep, 2 * n, quad.threads);
      res.nodes = 2 * n;
      res.error_estimate = std::abs(res.value - coarse);
    } else {
      const int half = std::max(2, n / 2);
      res.value = coarse;
      res.error_estimate = std::abs(coarse - tensor_value(P1, prep, half, quad.threads));
    }
    return res;
  }

  // Sampling: B replicates of a randomized product rule with antithetic pairs.
  constexpr int B = 8;
  const double per = static_cast<double>(quad.mc_samples) / B;
  int m = static_cast<int>(std::floor(std::pow(per, 1.0 / L)));
  m = std::max(2, m - m % 2);
  res.nodes = m;
  const Matrix sx = atom_matrix(P1);
  std::vector<double> reps(B);
  for (int b = 0; b < B; ++b) {
    Rng rng(derive_seed(quad.rng_seed, "cascade.mc", static_cast<std::uint64_t>(b)));
    std::vector<Rule> rules;
    for (const auto& l : prep.levels) rules.push_back(sampled_rule(l.C, sx, m, rng));
    Engine e(P1, prep, std::move(rules));
    reps[b] = -e.run(quad.threads);
  }
  const double mean = pairwise_sum(reps) / B;
  double var = 0.0;
  for (double r : reps) var += (r - mean) * (r - mean);
  res.value = mean;
  res.error_estimate = std::sqrt(var / (B - 1) / B);
  return res;
}

template <typename Value, typename FactorFn, typename DenseFn>
Prepared prepare(const StepPath<Value>& q, FactorFn factor, DenseFn dense) {
  Prepared p;
  for (int l = 0; l < q.levels(); ++l) {
    const Value inc = q.increment(l);
    LevelDiagnostics d;
    d.zeta = q.grid[l];
    const Matrix di = dense(inc);
    d.increment_trace = di.trace();
    d.min_eigenvalue = cone_margin(di);
    d.skipped = di.cwiseAbs().maxCoeff() <= kSkipTol;
    if (!d.skipped) p.levels.push_back({d.zeta, factor(inc)});
    p.diags.push_back(d);
  }
  p.last = dense(q.values.back());
  return p;
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  const Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

CascadeResult psi(const PsdPath& q, const SpinMeasure& P1, const QuadratureConfig& quad) {
  validate_path(q, 1e-10);
  for (const auto& v : q.values)
    if (v.rows() != P1.dimension() || v.cols() != P1.dimension())
      throw DimensionMismatch("path values and measure dimension differ");
  auto dense = [](const Matrix& m) { return m; };
  return evaluate(P1, prepare(q, psd_sqrt, dense), quad);
}

CascadeResult psi_pair(const PairPath& q, const SpinMeasure& P1, const QuadratureConfig& quad) {
  validate_path(q, 1e-10);
  const int D = P1.dimension();
  if (D < 2) throw InvalidArgument("pair paths need D >= 2");
  auto factor = [D](const Vector2& v) {
    return PermMatrix{D, std::sqrt(std::max(0.0, v(0))), std::sqrt(std::max(0.0, v(1)))}.dense();
  };
  auto dense = [D](const Vector2& v) { return PermMatrix{D, v(0), v(1)}.dense(); };
  return evaluate(P1, prepare(q, factor, dense), quad);
}

CascadeResult psi_scalar(const ScalarPath& p, const SpinMeasure& P1, const QuadratureConfig& quad) {
  validate_path(p, 1e-10);
  const int D = P1.dimension();
  if (quad.product_fast_path && D > 1) {
    if (auto marg = P1.product_marginals()) {
      auto factor = [](double v) { return Matrix::Constant(1, 1, std::sqrt(std::max(0.0, v))); };
      auto dense = [](double v) { return Matrix::Constant(1, 1, v); };
      const Prepared prep = prepare(p, factor, dense);
      CascadeResult total;
      std::vector<std::pair<const SpinMeasure*, CascadeResult>> done;
      for (const auto& m : *marg) {
        const CascadeResult* hit = nullptr;
        for (const auto& [prev, r] : done) {
          bool same = prev->atoms().size() == m.atoms().size();
          for (std::size_t i = 0; same && i < m.atoms().size(); ++i)
            same = prev->atoms()[i].point(0) == m.atoms()[i].point(0) &&
                   prev->atoms()[i].weight == m.atoms()[i].weight;
          if (same) hit = &r;
        }
        CascadeResult r = hit ? *hit : evaluate(m, prep, quad);
        if (!hit) done.emplace_back(&m, r);
        total.value += r.value;
        total.error_estimate += r.error_estimate;
        total.levels = r.levels;
        total.mode = r.mode;
        total.nodes = r.nodes;
        total.gaussian_dims = r.gaussian_dims;
      }
      return total;
    }
  }
  auto factor = [D](double v) { return Matrix(std::sqrt(std::max(0.0, v)) * Matrix::Identity(D, D)); };
  auto dense = [D](double v) { return Matrix(v * Matrix::Identity(D, D)); };
  return evaluate(P1, prepare(p, factor, dense), quad);
}

DiscreteMeasure DiscreteMeasure::make(std::vector<double> support, std::vector<double> weights) {
  if (support.size() != weights.size() || support.empty())
    throw InvalidArgument("measure support and weights must be nonempty and of equal length");
  std::map<double, double> acc;
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (!(support[i] >= 0.0) || !std::isfinite(support[i]))
      throw InvalidArgument("measure support must lie in R_+");
    if (!(weights[i] >= 0.0)) throw InvalidArgument("measure weights must be nonnegative");
    if (weights[i] > 0.0) acc[support[i]] += weights[i];
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("measure weights must sum to 1");
  DiscreteMeasure m;
  for (const auto& [x, w] : acc) {
    m.support.push_back(x);
    m.weights.push_back(w);
  }
  return m;
}

DiscreteMeasure DiscreteMeasure::mix(const DiscreteMeasure& other, double lambda) const {
  std::vector<double> s = support, w;
  for (double x : weights) w.push_back((1.0 - lambda) * x);
  s.insert(s.end(), other.support.begin(), other.support.end());
  for (double x : other.weights) w.push_back(lambda * x);
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= total;
  return make(s, w);
}

ScalarPath quantile_path(const DiscreteMeasure& mu) {
  ScalarPath p;
  p.grid.push_back(0.0);
  double cum = 0.0;
  for (std::size_t i = 0; i < mu.support.size(); ++i) {
    cum += mu.weights[i];
    const double g = i + 1 == mu.support.size() ? 1.0 : std::min(cum, 1.0);
    if (g <= p.grid.back()) continue;
    p.grid.push_back(g);
    p.values.push_back(mu.support[i]);
  }
  return p;
}

DiscreteMeasure induced_measure(const ScalarPath& p) {
  std::vector<double> s, w;
  for (int l = 0; l < p.levels(); ++l) {
    s.push_back(p.values[l]);
    w.push_back(p.gap(l));
  }
  return DiscreteMeasure::make(s, w);
}

double wasserstein1(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  return l1_distance(quantile_path(a), quantile_path(b));
}

ConcavityReport concavity_probe(const SpinMeasure& P1, const DiscreteMeasure& mu0,
                                const DiscreteMeasure& mu1, const std::vector<double>& lambdas,
                                const QuadratureConfig& quad) {
  ConcavityReport rep;
  auto g = [&](double lambda) {
    return psi_scalar(quantile_path(mu0.mix(mu1, lambda)), P1, quad);
  };
  for (double l : lambdas) {
    CascadeResult r = g(l);
    rep.lambdas.push_back(l);
    rep.values.push_back(r.value);
    rep.errors.push_back(r.error_estimate);
  }
  const CascadeResult g0 = g(0.0), g1 = g(1.0), gh = g(0.5);
  rep.defect = gh.value - 0.5 * (g0.value + g1.value);
  rep.defect_error = std::max({g0.error_estimate, g1.error_estimate, gh.error_estimate});
  rep.strictly_positive = rep.defect > 2.0 * rep.defect_error;
  return rep;
}

}  // namespace parisi
