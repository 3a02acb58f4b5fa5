#include "parisi/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "parisi/parallel.hpp"
#include "parisi/parisi.hpp"
#include "parisi/rng.hpp"

namespace parisi {

namespace {

long ipow(long base, int e) {
  long r = 1;
  for (int i = 0; i < e; ++i) {
    if (r > std::numeric_limits<long>::max() / std::max(base, 1L)) return std::numeric_limits<long>::max();
    r *= base;
  }
  return r;
}

void require_simulable(const CovarianceSpec& spec) {
  if (spec.formal()) throw FormalSpecRejected("cannot sample a Gaussian process for a formal covariance");
  if (!spec.diagonal_only()) throw PreconditionViolated("the simulator covers diagonal_only covariances");
}

// Tuples of [0, N)^I in shell order, as row-major offsets.
std::vector<long> shell_order(int N, int I) {
  std::vector<long> out;
  out.reserve(static_cast<std::size_t>(ipow(N, I)));
  std::vector<int> idx(I);
  for (int m = 0; m < N; ++m) {
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      if (*std::max_element(idx.begin(), idx.end()) == m) {
        long off = 0;
        for (int k = 0; k < I; ++k) off = off * N + idx[k];
        out.push_back(off);
      }
      int k = I - 1;
      while (k >= 0 && idx[k] == m) idx[k--] = 0;
      if (k < 0) break;
      ++idx[k];
    }
  }
  return out;
}

struct Enumeration {
  int N = 0;
  int D = 0;
  long count = 0;
  std::vector<Matrix> sigma;
  std::vector<double> log_weight;
  std::vector<double> self_term;  // N ξ(σσ*/N)
};

Enumeration enumerate(const ModelInstance& model, int N, long max_configurations) {
  const auto& atoms = model.measure.atoms();
  const long n = static_cast<long>(atoms.size());
  const long count = ipow(n, N);
  if (count > max_configurations)
    throw BudgetExceeded(std::to_string(n) + "^" + std::to_string(N) + " configurations exceed the budget of " +
                         std::to_string(max_configurations));
  Enumeration e;
  e.N = N;
  e.D = model.measure.dimension();
  e.count = count;
  e.sigma.reserve(count);
  std::vector<int> digit(N, 0);
  for (long c = 0; c < count; ++c) {
    Matrix s(e.D, N);
    double lw = 0.0;
    for (int i = 0; i < N; ++i) {
      s.col(i) = atoms[digit[i]].point;
      lw += std::log(atoms[digit[i]].weight);
    }
    const Matrix R = s * s.transpose() / N;
    e.self_term.push_back(N * eval_xi(model.covariance, R));
    e.log_weight.push_back(lw);
    e.sigma.push_back(std::move(s));
    for (int i = N - 1; i >= 0; --i) {
      if (++digit[i] < n) break;
      digit[i] = 0;
    }
  }
  return e;
}

// Per-configuration exponents √(2t)H − Nξ(σσ*/N)t + log w, energies in h.
std::vector<double> exponents(const Enumeration& e, const HamiltonianSample& H, double t, std::vector<double>& h) {
  std::vector<double> x(e.count);
  h.resize(e.count);
  const double a = std::sqrt(2.0 * t);
  for (long c = 0; c < e.count; ++c) {
    h[c] = H.energy(e.sigma[c]);
    x[c] = a * h[c] - t * e.self_term[c] + e.log_weight[c];
  }
  return x;
}

double log_sum_exp(const std::vector<double>& x) {
  const double m = *std::max_element(x.begin(), x.end());
  std::vector<double> terms(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) terms[i] = std::exp(x[i] - m);
  return m + std::log(pairwise_sum(terms));
}

double sample_sd(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(v.size() - 1));
}

void check_common(const ModelInstance& model, int N, int n_disorder) {
  model.validate();
  require_simulable(model.covariance);
  if (N < 1) throw InvalidArgument("N must be at least 1");
  if (n_disorder < 1) throw InvalidArgument("n_disorder must be at least 1");
  if (!(model.t >= 0.0) || !std::isfinite(model.t)) throw InvalidArgument("t must be finite and nonnegative");
}

}  // namespace

double HamiltonianSample::energy(const Matrix& sigma) const {
  if (sigma.rows() != D || sigma.cols() != N)
    throw DimensionMismatch("configuration must be " + std::to_string(D) + "x" + std::to_string(N));
  double total = 0.0;
  std::vector<double> buf, next;
  for (const auto& term : terms) {
    const int I = static_cast<int>(term.species.size());
    buf = term.g;
    // Contract the trailing index against the matching species row.
    for (int k = I - 1; k >= 0; --k) {
      const long outer = static_cast<long>(buf.size()) / N;
      next.assign(outer, 0.0);
      const auto row = sigma.row(term.species[k]);
      for (long o = 0; o < outer; ++o) {
        double s = 0.0;
        const double* src = buf.data() + o * N;
        for (int i = 0; i < N; ++i) s += src[i] * row(i);
        next[o] = s;
      }
      buf.swap(next);
    }
    total += term.scale * buf[0];
  }
  return total;
}

HamiltonianSample sample_hamiltonian(const CovarianceSpec& spec, int N, std::uint64_t seed) {
  require_simulable(spec);
  if (N < 1) throw InvalidArgument("N must be at least 1");
  HamiltonianSample h;
  h.N = N;
  h.D = spec.dimension();
  h.rng_seed = seed;
  const auto& monos = spec.monomials();
  for (std::size_t m = 0; m < monos.size(); ++m) {
    const int I = monos[m].degree();
    if (ipow(N, I) > (1L << 26)) throw BudgetExceeded("coefficient tensor N^" + std::to_string(I) + " is too large");
    MonomialTensor term;
    for (const auto& e : monos[m].entries) term.species.push_back(e.row);
    term.scale = std::sqrt(monos[m].coeff) * std::pow(static_cast<double>(N), -(I - 1) / 2.0);
    term.g.assign(static_cast<std::size_t>(ipow(N, I)), 0.0);
    Rng rng(derive_seed(seed, "simulate.monomial", m));
    for (long off : shell_order(N, I)) term.g[off] = rng.normal();
    h.terms.push_back(std::move(term));
  }
  return h;
}

FreeEnergyEstimate free_energy_mc(const ModelInstance& model, int N, int n_disorder, std::uint64_t seed,
                                  const SimulateOptions& opts) {
  check_common(model, N, n_disorder);
  FreeEnergyEstimate est;
  est.N = N;
  est.t = model.t;
  est.n_disorder = n_disorder;
  est.seed = seed;
  est.samples.assign(n_disorder, 0.0);
  const Enumeration e = enumerate(model, N, opts.max_configurations);
  if (model.t == 0.0) return est;  // the integral of dP_N is 1 for every disorder

  const double t = model.t;
  parallel_for(n_disorder, opts.threads, [&](std::size_t k) {
    const HamiltonianSample H = sample_hamiltonian(model.covariance, N, derive_seed(seed, "simulate.disorder", k));
    std::vector<double> h;
    const std::vector<double> x = exponents(e, H, t, h);
    double f = -log_sum_exp(x) / N;
    if (opts.control_variate) {
      std::vector<double> wh(e.count);
      for (long c = 0; c < e.count; ++c) wh[c] = std::exp(e.log_weight[c]) * h[c];
      f += std::sqrt(2.0 * t) * pairwise_sum(wh) / N;
    }
    est.samples[k] = f;
  });
  est.mean = pairwise_sum(est.samples) / n_disorder;
  est.std_error = sample_sd(est.samples, est.mean) / std::sqrt(static_cast<double>(n_disorder));
  return est;
}

OverlapReport overlap_statistics(const ModelInstance& model, int N, std::uint64_t seed, int n_disorder,
                                 const SimulateOptions& opts) {
  check_common(model, N, n_disorder);
  const Enumeration e = enumerate(model, N, opts.max_configurations);
  if (static_cast<double>(e.count) * static_cast<double>(e.count) > static_cast<double>(1L << 28))
    throw BudgetExceeded("replica pairs exceed the overlap budget");
  const int D = e.D;
  using Key = std::vector<long long>;
  auto key_of = [&](const Vector& r) {
    Key k(D);
    for (int d = 0; d < D; ++d) k[d] = std::llround(r(d) * 1e9);
    return k;
  };

  // Overlap key of every replica pair, computed once.
  std::map<Key, int> index;
  std::vector<Vector> points;
  std::vector<int> pair_key(static_cast<std::size_t>(e.count * e.count));
  for (long a = 0; a < e.count; ++a)
    for (long b = 0; b < e.count; ++b) {
      Vector r = e.sigma[a].cwiseProduct(e.sigma[b]).rowwise().sum() / N;
      auto [it, fresh] = index.try_emplace(key_of(r), static_cast<int>(points.size()));
      if (fresh) points.push_back(r);
      pair_key[a * e.count + b] = it->second;
    }
  const std::size_t M = points.size();

  std::vector<std::vector<double>> law(n_disorder, std::vector<double>(M, 0.0));
  std::vector<double> neg(n_disorder, 0.0);
  parallel_for(n_disorder, opts.threads, [&](std::size_t k) {
    std::vector<double> g(e.count, 0.0);
    if (model.t > 0.0) {
      const HamiltonianSample H = sample_hamiltonian(model.covariance, N, derive_seed(seed, "simulate.disorder", k));
      std::vector<double> h;
      const std::vector<double> x = exponents(e, H, model.t, h);
      const double lz = log_sum_exp(x);
      for (long c = 0; c < e.count; ++c) g[c] = std::exp(x[c] - lz);
    } else {
      for (long c = 0; c < e.count; ++c) g[c] = std::exp(e.log_weight[c]);
    }
    auto& lk = law[k];
    for (long a = 0; a < e.count; ++a)
      for (long b = 0; b < e.count; ++b) lk[pair_key[a * e.count + b]] += g[a] * g[b];
    for (std::size_t m = 0; m < M; ++m)
      if (points[m].minCoeff() < 0.0) neg[k] += lk[m];
  });

  OverlapReport rep;
  rep.n_disorder = n_disorder;
  const double sn = std::sqrt(static_cast<double>(n_disorder));
  std::vector<double> mean(M, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    std::vector<double> col(n_disorder);
    for (int k = 0; k < n_disorder; ++k) col[k] = law[k][m];
    mean[m] = pairwise_sum(col) / n_disorder;
    rep.law.push_back({points[m], mean[m]});
  }
  rep.negative_mass = pairwise_sum(neg) / n_disorder;
  rep.negative_mass_stderr = sample_sd(neg, rep.negative_mass) / sn;

  for (const auto& s : all_permutations(D)) {
    double tv = 0.0, err = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      Vector img(D);
      for (int d = 0; d < D; ++d) img(d) = points[m](s[d]);
      const auto it = index.find(key_of(img));
      const int j = it == index.end() ? -1 : it->second;
      std::vector<double> diff(n_disorder);
      for (int k = 0; k < n_disorder; ++k) diff[k] = law[k][m] - (j < 0 ? 0.0 : law[k][j]);
      const double md = pairwise_sum(diff) / n_disorder;
      tv += 0.5 * std::abs(md);
      err += 0.5 * sample_sd(diff, md) / sn;
    }
    if (tv > rep.permutation_defect) {
      rep.permutation_defect = tv;
      rep.defect_stderr = err;
    }
  }
  return rep;
}

CompareReport compare_bound(const ModelInstance& model, int N, const CompareOptions& opts) {
  model.validate();
  require_simulable(model.covariance);
  CompareReport rep;
  rep.estimate = free_energy_mc(model, N, opts.n_disorder, opts.seed, opts.simulate);
  rep.convex = check_convexity_on_cone(model.covariance, 256, 0x5eedULL).passed;
  OptimizeOptions o;
  o.restarts = opts.restarts;
  o.rng_seed = derive_seed(opts.seed, "compare.optimize");
  o.threads = opts.threads;
  const OptimizeResult r = upper_bound_nonconvex(model, opts.levels, opts.quad, opts.conj, o);
  rep.bound = r.value;
  rep.bound_error = r.error_estimate;
  rep.gap = rep.bound - rep.estimate.mean;
  rep.slack = std::max(0.1, 5.0 * rep.estimate.std_error);
  rep.passed = rep.estimate.mean <= rep.bound + rep.slack;
  return rep;
}

}  // namespace parisi
