// Acceptance run: one PASS/FAIL line per criterion. Pass a criterion number
// to run only that one.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "parisi/cascade.hpp"
#include "parisi/conjugate.hpp"
#include "parisi/parisi.hpp"
#include "parisi/rng.hpp"
#include "parisi/sampling.hpp"
#include "parisi/simulate.hpp"

using namespace parisi;

namespace {

constexpr std::uint64_t kSeed = 20240611;

// p − E log cosh(√(2p) z) at p = 0.1, 0.5, 1.0 (60-digit quadrature).
constexpr double kIsingClosed[3][2] = {
    {0.1, 0.0080733484028145432148}, {0.5, 0.1254327925085620259}, {1.0, 0.35775113431172015129}};

struct Outcome {
  bool ok = true;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

QuadratureConfig tensor(int n, bool err = true, int threads = 1) {
  QuadratureConfig q;
  q.mode = QuadratureMode::Tensor;
  q.hermite_nodes = n;
  q.estimate_error = err;
  q.threads = threads;
  return q;
}

ModelInstance at(ModelInstance m, double t) {
  m.t = t;
  return m;
}

ObjectiveSpec objective_spec(ModelInstance m, double t, Reduction r, int levels, int nodes) {
  ObjectiveSpec s;
  s.model = at(std::move(m), t);
  s.reduction = r;
  s.levels = levels;
  s.quad = tensor(nodes);
  return s;
}

// Splits the widest level until the path has K levels (values repeat).
template <typename V>
StepPath<V> pad_levels(StepPath<V> p, int K) {
  while (p.levels() < K) {
    int w = 0;
    for (int l = 1; l < p.levels(); ++l)
      if (p.gap(l) > p.gap(w)) w = l;
    p.grid.insert(p.grid.begin() + w + 1, 0.5 * (p.grid[w] + p.grid[w + 1]));
    p.values.insert(p.values.begin() + w, p.values[w]);
  }
  return p;
}

// ---------------------------------------------------------------------------

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome exact_identities() {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  double worst_psi = 0.0;
  for (const auto& P : {ising_measure(1), ising_measure(2), potts_measure(2), potts_measure(3)}) {
    const int D = P.dimension();
    worst_psi = std::max(worst_psi, std::abs(psi(constant_path(Matrix(Matrix::Zero(D, D))), P, tensor(8)).value));
  }
  const double t_psi = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  double worst_obj = 0.0;
  for (auto [m, r] : {std::pair{sk_model(), Reduction::Scalar}, {bp_sk_model(1.5), Reduction::Scalar},
                      {potts_model(2), Reduction::Pair}, {bp_sk_model(1.5), Reduction::Matrix}}) {
    OptimizeOptions opt;
    opt.restarts = 2;
    opt.rng_seed = kSeed;
    opt.max_evaluations = 300;
    worst_obj = std::max(worst_obj, std::abs(optimize(objective_spec(m, 0.0, r, 2, 6), opt).value));
  }
  const double t_obj = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  bool fe_exact = true;
  for (int N = 1; N <= 8; ++N) {
    for (const auto& m : {sk_model(), bp_sk_model(1.5)}) {
      const auto e = free_energy_mc(at(m, 0.0), N, 4, kSeed);
      for (double s : e.samples) fe_exact = fe_exact && s == 0.0;
      fe_exact = fe_exact && e.mean == 0.0;
    }
  }
  const double t_fe = seconds_since(t0);
  o.ok = worst_psi <= 1e-12 && worst_obj <= 1e-10 && fe_exact && std::max({t_psi, t_obj, t_fe}) < 1.0;
  o.detail = fmt("|psi(0)| = %.1e (tol 1e-12, %.3f s), |opt value at t=0| = %.1e (tol 1e-10, %.3f s), "
                 "F_N(0) == 0 for N<=8: %s (%.3f s); each under 1 s",
                 worst_psi, t_psi, worst_obj, t_obj, fe_exact ? "yes" : "no", t_fe);
  return o;
}

Outcome eigen_algebra() {
  Rng rng(derive_seed(kSeed, "acceptance.2"));
  double worst_rt = 0.0, worst_pair = 0.0;
  for (int D : {2, 3, 5}) {
    for (int k = 0; k < 100; ++k) {
      const PermMatrix m{D, rng.uniform(-2, 2), rng.uniform(-2, 2)};
      const auto back = PermMatrix::from_dense(m.dense());
      const auto ent = PermMatrix::from_entries(m.diagonal_entry(), m.off_diagonal_entry(), D);
      worst_rt = std::max({worst_rt, std::abs(back.lambda1 - m.lambda1), std::abs(back.lambda2 - m.lambda2),
                           std::abs(ent.lambda1 - m.lambda1), std::abs(ent.lambda2 - m.lambda2)});
      const PairPath q = random_pair_path(rng, 1 + k % 5, 2.0), r = random_pair_path(rng, 1 + (k + 2) % 5, 2.0);
      const PairPath back_q = reduce_invariant(perp_lift(q, D));
      worst_rt = std::max(worst_rt, l1_distance(back_q, q));
      const double rhs = inner_perp(q, r, D);
      worst_pair = std::max(worst_pair, std::abs(inner(perp_lift(q, D), perp_lift(r, D)) - rhs) / std::max(1.0, std::abs(rhs)));
    }
  }
  return {worst_rt <= 1e-12 && worst_pair <= 1e-12,
          fmt("round trip %.1e, pairing identity %.1e (tol 1e-12, 100 paths x D in {2,3,5})", worst_rt, worst_pair)};
}

Outcome projection_bounds() {
  Rng rng(derive_seed(kSeed, "acceptance.3"));
  const auto potts = potts_model(2).covariance, bp = bp_sk_model(1.5).covariance;
  double worst_reproj = -1e300, worst_contraction = -1e300, worst_jensen = 1e300, slope = 0.0;
  const int paths = 50;
  for (int k = 0; k < paths; ++k) {
    const PairPath q = random_pair_path(rng, 2 + k % 6, 1.5);
    const double sup = lp_norm(q, kInfNorm);
    double sx = 0, sy = 0, sxy = 0, sxx = 0;
    const std::vector<int> js = {4, 8, 16, 32, 64};
    for (int j : js) {
      const double err = l1_distance(q, lift(project(q, j)));
      worst_reproj = std::max(worst_reproj, err - 2.0 * sup / j);
      const double x = std::log(j), y = std::log(err);
      sx += x, sy += y, sxy += x * y, sxx += x * x;
      DiscretePath<Vector2> d;
      for (int i = 0; i < j; ++i) d.x.emplace_back(rng.normal(), rng.normal());
      worst_contraction = std::max(worst_contraction, lp_norm(lift(d), 1) - discrete_l1(d));
      for (const auto& spec : {potts, bp}) worst_jensen = std::min(worst_jensen, jensen_decrease_check(spec, q, j).defect);
    }
    const double n = js.size();
    slope += -(sxy - sx * sy / n) / (sxx - sx * sx / n) / paths;
  }
  const bool ok = worst_reproj <= 0.0 && worst_contraction <= 1e-12 && worst_jensen >= -1e-10 && slope >= 0.8 &&
                  slope <= 1.2;
  return {ok, fmt("max(err - 2|q|inf/j) = %.3g (<= 0), contraction excess %.1e, min Jensen defect %.2e (>= -1e-10), "
                  "mean slope %.3f (in [0.8, 1.2])",
                  worst_reproj, worst_contraction, worst_jensen, slope)};
}

Outcome conjugate_identity() {
  double worst = 0.0;
  for (const auto& m : {potts_model(2), bp_sk_model(1.5)}) {
    const auto r = check_perp_conjugate_identity(m.covariance, 30, {}, derive_seed(kSeed, "acceptance.4"));
    worst = std::max(worst, r.max_relative_gap);
  }
  return {worst <= 1e-5, fmt("max relative gap %.2e over 30 points x {potts(2), bp_sk(1.5)} (tol 1e-5)", worst)};
}

// Every exponent tuple of length D with total degree in [1, max_total].
std::vector<std::vector<int>> exponent_tuples(int D, int max_total) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(D, 0);
  std::function<void(int, int)> rec = [&](int d, int left) {
    if (d == D) {
      if (left < max_total) out.push_back(cur);
      return;
    }
    for (int i = 0; i <= left; ++i) {
      cur[d] = i;
      rec(d + 1, left - i);
    }
  };
  rec(0, max_total);
  return out;
}

Outcome monomial_inequalities() {
  Rng rng(derive_seed(kSeed, "acceptance.5"));
  long tuples = 0, violations = 0, signed_tuples = 0, signed_violations = 0;
  for (int D = 1; D <= 4; ++D) {
    for (const auto& e : exponent_tuples(D, 6)) {
      int I = 0;
      for (int v : e) I += v;
      ++tuples;
      if (I % 2 == 0) ++signed_tuples;
      for (int k = 0; k < 100; ++k) {
        Vector x(D);
        for (int d = 0; d < D; ++d) x(d) = rng.uniform(0.0, 2.0);
        if (!check_monomial_inequality(e, x, false)) ++violations;
        if (I % 2 == 0) {
          for (int d = 0; d < D; ++d) x(d) = rng.uniform(-2.0, 2.0);
          if (!check_monomial_inequality(e, x, true)) ++signed_violations;
        }
      }
    }
  }
  const auto cx = counterexample_model().covariance;
  const Vector p = Vector2(-2, 1);
  const double xi = eval_xi_diag(cx, p), Xv = Xi(cx, p);
  const bool ok = violations == 0 && signed_violations == 0 && xi == 2.0 && Xv == -7.0;
  return {ok, fmt("%ld tuples: %ld violations; %ld even tuples signed: %ld violations; counterexample xi = %g, Xi = %g",
                  tuples, violations, signed_tuples, signed_violations, xi, Xv)};
}

Outcome cascade_correctness() {
  Outcome o;
  const auto P = ising_measure(1);
  std::string d;
  Rng rng(derive_seed(kSeed, "acceptance.6"));
  for (const auto& [p, ref] : kIsingClosed) {
    const auto r = psi_scalar(constant_path(p), P, tensor(32));
    const bool closed_ok = std::abs(r.value - ref) <= r.error_estimate + 1e-15;
    // Independent oracle: plain sampling of the closed-form integrand.
    const long n = 10000000;
    double s = 0, s2 = 0;
    for (long i = 0; i < n; ++i) {
      const double v = p - std::log(std::cosh(std::sqrt(2 * p) * rng.normal()));
      s += v;
      s2 += v * v;
    }
    const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    const bool mc_ok = std::abs(r.value - mean) <= 3 * se;
    o.ok = o.ok && closed_ok && mc_ok;
    d += fmt("p=%.1f: |psi - closed| = %.1e vs err %.1e, |psi - MC| = %.1f se; ", p, std::abs(r.value - ref),
             r.error_estimate, std::abs(r.value - mean) / se);
  }
  double merge = 0.0;
  for (int k = 0; k < 20; ++k) {
    const ScalarPath p = random_scalar_path(rng, 1 + k % 4, 1.5);
    ScalarPath split{{0.0}, {}};
    for (int l = 0; l < p.levels(); ++l) {
      split.grid.push_back(0.5 * (p.grid[l] + p.grid[l + 1]));
      split.grid.push_back(p.grid[l + 1]);
      split.values.push_back(p.values[l]);
      split.values.push_back(p.values[l]);
    }
    merge = std::max(merge, std::abs(psi_scalar(p, P, tensor(16)).value - psi_scalar(split, P, tensor(16)).value));
  }
  double lip = -1e300;
  for (int k = 0; k < 50; ++k) {
    const ScalarPath a = random_scalar_path(rng, 1 + k % 4, 2.0), b = random_scalar_path(rng, 1 + (k + 1) % 4, 2.0);
    const auto ra = psi_scalar(a, P, tensor(16)), rb = psi_scalar(b, P, tensor(16));
    lip = std::max(lip, std::abs(ra.value - rb.value) - l1_distance(a, b) - ra.error_estimate - rb.error_estimate);
  }
  o.ok = o.ok && merge <= 1e-9 && lip <= 0.0;
  o.detail = d + fmt("level merge %.1e (tol 1e-9), Lipschitz excess %.3g (<= 0, 50 pairs)", merge, lip);
  return o;
}

Outcome reduction_consistency() {
  Outcome o;
  const int K = 3, n = 6;
  for (double t : {0.2, 0.6}) {
    OptimizeOptions opt;
    opt.rng_seed = derive_seed(kSeed, "acceptance.7");
    opt.restarts = 4;
    const auto rs = optimize(objective_spec(bp_sk_model(1.5), t, Reduction::Scalar, K, n), opt);
    const auto sp = pad_levels(std::get<ScalarPath>(rs.best_path), K);

    // The pair and dense searches start from the previous optimum embedded in
    // their cone plus one random start each.
    PairPath pw{sp.grid, {}};
    for (double v : sp.values) pw.values.emplace_back(v, v);
    OptimizeOptions po = opt;
    po.restarts = 1;
    po.max_evaluations = 4000;
    po.warm_starts = {pw};
    const auto rp = optimize(objective_spec(bp_sk_model(1.5), t, Reduction::Pair, K, n), po);
    const auto pp = pad_levels(std::get<PairPath>(rp.best_path), K);

    OptimizeOptions mo = po;
    mo.warm_starts = {perp_lift(pp, 2)};
    const auto rm = optimize(objective_spec(bp_sk_model(1.5), t, Reduction::Matrix, K, n), mo);

    const double sp_gap = std::abs(rs.value - rp.value), pm_gap = std::abs(rp.value - rm.value);
    o.ok = o.ok && sp_gap <= 1e-3 && pm_gap <= 5e-3;
    o.detail += fmt("t=%.1f: scalar %.7f pair %.7f matrix %.7f |s-p| %.1e |p-m| %.1e; ", t, rs.value, rp.value,
                    rm.value, sp_gap, pm_gap);
  }
  o.detail += "(tol 1e-3, 5e-3)";
  return o;
}

UniquenessReport run_uniqueness(int threads) {
  OptimizeOptions opt;
  opt.rng_seed = derive_seed(kSeed, "acceptance.8");
  opt.restarts = 20;
  opt.threads = threads;
  return uniqueness_probe(objective_spec(bp_sk_model(1.5), 0.6, Reduction::Scalar, 3, 16), opt);
}

Outcome uniqueness() {
  const auto r = run_uniqueness(1);
  return {r.restarts >= 20 && r.value_spread <= 1e-4 && r.w1_spread <= 1e-3,
          fmt("%d restarts, best %.8f, value spread %.2e (tol 1e-4), W1 spread %.2e over %d near-best (tol 1e-3)",
              r.restarts, r.best_value, r.value_spread, r.w1_spread, r.near_best)};
}

Outcome strict_concavity() {
  Rng rng(derive_seed(kSeed, "acceptance.9"));
  int positive = 0;
  double min_ratio = 1e300;
  for (int k = 0; k < 10; ++k) {
    const double w0 = rng.uniform(0.1, 0.9), w1 = rng.uniform(0.1, 0.9);
    const auto mu0 = DiscreteMeasure::make({rng.uniform(0.0, 1.5), rng.uniform(0.0, 1.5)}, {w0, 1 - w0});
    const auto mu1 = DiscreteMeasure::make({rng.uniform(0.0, 1.5), rng.uniform(0.0, 1.5)}, {w1, 1 - w1});
    const auto r = concavity_probe(ising_measure(1), mu0, mu1, {0.0, 0.5, 1.0}, tensor(32));
    if (r.defect > 2 * r.defect_error) ++positive;
    min_ratio = std::min(min_ratio, r.defect / std::max(r.defect_error, 1e-300));
  }
  return {positive == 10, fmt("%d/10 defects above 2x quadrature error (min ratio %.3g)", positive, min_ratio)};
}

FreeEnergyEstimate sk_estimate(int N, int threads) {
  SimulateOptions so;
  so.threads = threads;
  return free_energy_mc(at(sk_model(), 0.1), N, 200, derive_seed(kSeed, "acceptance.10"), so);
}

Outcome monte_carlo() {
  OptimizeOptions opt;
  opt.rng_seed = derive_seed(kSeed, "acceptance.10");
  opt.restarts = 4;
  const double v = optimize(objective_spec(sk_model(), 0.1, Reduction::Scalar, 3, 16), opt).value + 0.0;
  Outcome o;
  double prev = 1e300;
  for (int N : {6, 8, 10}) {
    const auto e = sk_estimate(N, 1);
    const double gap = std::abs(e.mean - v);
    o.ok = o.ok && gap <= 0.05 && gap < prev && e.mean >= -3 * e.std_error;
    prev = gap;
    o.detail += fmt("N=%d: F = %.5f +- %.5f, |F - %.3g| = %.5f; ", N, e.mean, e.std_error, v, gap);
  }
  o.detail += "(tol 0.05, decreasing, F >= -3 se)";
  return o;
}

CompareReport nonconvex_compare(int threads) {
  CompareOptions c;
  c.n_disorder = 200;
  c.seed = derive_seed(kSeed, "acceptance.11");
  c.levels = 3;
  c.restarts = 4;
  c.threads = threads;
  c.simulate.threads = threads;
  c.quad = tensor(16);
  return compare_bound(at(bp_sk_model(0.5), 0.4), 8, c);
}

Outcome nonconvex_bound() {
  const auto r = nonconvex_compare(1);
  return {r.passed && !r.convex, fmt("F_8 = %.5f +- %.5f, g(t,0) = %.5f, slack %.3g, convex = %s", r.estimate.mean,
                                     r.estimate.std_error, r.bound, r.slack, r.convex ? "yes" : "no")};
}

Outcome determinism() {
  Outcome o;
  Rng rng(derive_seed(kSeed, "acceptance.12"));
  const PsdPath q = random_psd_path(rng, 2, 3, 0.8);
  const double a = psi(q, potts_measure(3), tensor(6, true, 1)).value;
  const double b = psi(q, potts_measure(3), tensor(6, true, 2)).value;
  const bool psi_same = a == b;

  const auto u1 = run_uniqueness(1), u2 = run_uniqueness(2);
  const bool opt_same = u1.values == u2.values && u1.best_value == u2.best_value;

  const auto e1 = sk_estimate(8, 1), e2 = sk_estimate(8, 2);
  const bool mc_same = e1.samples == e2.samples && e1.mean == e2.mean && e1.std_error == e2.std_error;

  const auto c1 = nonconvex_compare(1), c2 = nonconvex_compare(2);
  const bool cmp_same = c1.estimate.samples == c2.estimate.samples && c1.bound == c2.bound;

  o.ok = psi_same && opt_same && mc_same && cmp_same;
  o.detail = fmt("threads 1 vs 2 bit-identical: psi %s, optimizer restarts %s, MC samples %s, compare %s",
                 psi_same ? "yes" : "no", opt_same ? "yes" : "no", mc_same ? "yes" : "no", cmp_same ? "yes" : "no");
  return o;
}

struct Criterion {
  const char* name;
  double time_limit;  // seconds
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"exact identities", 3.0, exact_identities},
      {"eigenvalue round trips and pairing identity", 1e300, eigen_algebra},
      {"reprojection, contraction, Jensen decrease, rate", 10.0, projection_bounds},
      {"pair conjugate vs dense conjugate", 30.0, conjugate_identity},
      {"monomial and upper inequalities", 10.0, monomial_inequalities},
      {"cascade correctness", 60.0, cascade_correctness},
      {"scalar / pair / matrix reduction consistency", 300.0, reduction_consistency},
      {"uniqueness of the scalar optimizer", 300.0, uniqueness},
      {"strict concavity probe", 120.0, strict_concavity},
      {"Monte Carlo cross-check", 600.0, monte_carlo},
      {"nonconvex upper bound", 600.0, nonconvex_bound},
      {"determinism across thread counts", 1e300, determinism},
  };
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (only && only != static_cast<int>(i + 1)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = all[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < all[i].time_limit;
    const bool ok = o.ok && in_time;
    if (!ok) ++failed;
    std::string limit = all[i].time_limit < 1e299 ? fmt(" (limit %.0f s)", all[i].time_limit) : std::string();
    std::printf("%s criterion %zu: %s: %s [%.2f s%s]\n", ok ? "PASS" : "FAIL", i + 1, all[i].name, o.detail.c_str(),
                secs, limit.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
