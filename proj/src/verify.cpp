#include "parisi/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

#include "parisi/conjugate.hpp"
#include "parisi/parisi.hpp"
#include "parisi/paths.hpp"
#include "parisi/rng.hpp"
#include "parisi/sampling.hpp"

namespace parisi {

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Skip: return "skip";
    case CheckStatus::Rejected: return "rejected";
  }
  return "?";
}

bool VerifyReport::ok() const { return count(CheckStatus::Fail) == 0; }

int VerifyReport::count(CheckStatus s) const {
  return static_cast<int>(std::count_if(checks.begin(), checks.end(), [&](const CheckResult& c) { return c.status == s; }));
}

namespace {

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

struct Outcome {
  double deviation = 0.0;
  std::string detail;
  CheckStatus forced = CheckStatus::Pass;  // Skip/Rejected override the comparison
};

class Runner {
 public:
  Runner(VerifyReport& rep, std::uint64_t seed) : rep_(rep), seed_(seed) {}

  void skip(const std::string& name, const std::string& why) { rep_.checks.push_back({name, CheckStatus::Skip, 0.0, 0.0, why}); }

  void run(const std::string& name, double tol, const std::function<Outcome(Rng&)>& f) {
    Rng rng(derive_seed(seed_, "verify." + name));
    CheckResult c{name, CheckStatus::Pass, tol, 0.0, {}};
    try {
      Outcome o = f(rng);
      c.margin = tol - o.deviation;
      c.detail = o.detail;
      if (o.forced != CheckStatus::Pass) c.status = o.forced;
      else c.status = o.deviation <= tol ? CheckStatus::Pass : CheckStatus::Fail;
    } catch (const FormalSpecRejected& e) {
      c.status = CheckStatus::Rejected;
      c.detail = e.name() + ": " + e.what();
    } catch (const PreconditionViolated& e) {
      c.status = CheckStatus::Rejected;
      c.detail = e.name() + ": " + e.what();
    } catch (const Error& e) {
      c.status = CheckStatus::Fail;
      c.detail = e.name() + ": " + e.what();
    }
    rep_.checks.push_back(std::move(c));
  }

 private:
  VerifyReport& rep_;
  std::uint64_t seed_;
};

std::vector<int> exponents_of(const Monomial& m, int D) {
  std::vector<int> e(D, 0);
  for (const auto& x : m.entries) ++e[x.row];
  return e;
}

}  // namespace

VerifyReport verify_model(const ModelInstance& model, const VerifyOptions& opts) {
  model.validate();
  VerifyReport rep;
  Runner r(rep, opts.seed);
  const CovarianceSpec& spec = model.covariance;
  const SpinMeasure& P1 = model.measure;
  const int D = spec.dimension();
  const int n = std::max(1, opts.samples);

  const bool xi_inv = check_permutation_invariance(spec).invariant;
  const bool p_inv = P1.is_permutation_invariant();
  const bool invariant = xi_inv && p_inv;
  const bool convex = check_convexity_on_cone(spec, 256, derive_seed(opts.seed, "verify.convexity")).passed;
  const bool formal = spec.formal();

  QuadratureConfig quad = opts.quad;
  quad.mode = QuadratureMode::Tensor;
  quad.estimate_error = false;
  quad.hermite_nodes = std::min(quad.hermite_nodes, 6);

  r.run("xi.zero_at_origin", 1e-14, [&](Rng&) {
    return Outcome{std::abs(eval_xi(spec, Matrix::Zero(D, D))), {}};
  });
  r.run("xi.permutation_invariance", 1e-12, [&](Rng&) {
    const auto inv = check_permutation_invariance(spec);
    Outcome o{inv.max_deviation, fmt("max coefficient deviation %.3g", inv.max_deviation)};
    if (!inv.invariant) o.forced = CheckStatus::Skip;
    return o;
  });
  r.run("measure.normalization", 1e-12, [&](Rng&) {
    double s = 0.0;
    for (const auto& a : P1.atoms()) s += a.weight;
    return Outcome{std::abs(s - 1.0), {}};
  });
  r.run("measure.permutation_invariance", 0.0, [&](Rng&) {
    Outcome o{0.0, p_inv ? "" : "atom set not closed under coordinate permutations"};
    if (!p_inv) o.forced = CheckStatus::Skip;
    return o;
  });
  r.run("measure.unit_ball", 1e-12, [&](Rng&) {
    Outcome o{std::max(0.0, P1.support_radius() - 1.0), fmt("support radius %.6g", P1.support_radius())};
    if (!P1.in_unit_ball()) o.forced = CheckStatus::Skip;
    return o;
  });
  r.run("xi.convexity_on_cone", 1e-10, [&](Rng&) {
    const auto c = check_convexity_on_cone(spec, 256, derive_seed(opts.seed, "verify.convexity"));
    Outcome o{std::max(0.0, c.worst_violation), fmt("worst midpoint violation %.3g over %g samples", c.worst_violation, c.samples)};
    if (!c.passed) {
      o.forced = CheckStatus::Rejected;
      o.detail = "nonconvex on the cone: " + o.detail;
    }
    return o;
  });

  // Eigenvalue coordinates and path algebra.
  const int Dp = std::max(D, 2);
  r.run("perm.round_trip", 1e-12, [&](Rng& rng) {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const PermMatrix m{Dp, rng.uniform(-2, 2), rng.uniform(-2, 2)};
      const PermMatrix back = PermMatrix::from_dense(m.dense());
      const PermMatrix ent = PermMatrix::from_entries(m.diagonal_entry(), m.off_diagonal_entry(), Dp);
      worst = std::max({worst, std::abs(back.lambda1 - m.lambda1), std::abs(back.lambda2 - m.lambda2),
                        std::abs(ent.lambda1 - m.lambda1), std::abs(ent.lambda2 - m.lambda2)});
    }
    return Outcome{worst, fmt("D = %g", Dp)};
  });
  r.run("perm.pairing_identity", 1e-12, [&](Rng& rng) {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const PairPath q = random_pair_path(rng, 1 + static_cast<int>(rng.uniform() * 4), 2.0);
      const PairPath s = random_pair_path(rng, 1 + static_cast<int>(rng.uniform() * 4), 2.0);
      const double lhs = inner(perp_lift(q, Dp), perp_lift(s, Dp));
      const double rhs = inner_perp(q, s, Dp);
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
    return Outcome{worst, fmt("D = %g", Dp)};
  });
  r.run("paths.adjointness", 1e-12, [&](Rng& rng) {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const int j = 2 + static_cast<int>(rng.uniform() * 15);
      DiscretePath<Vector2> x;
      for (int k = 0; k < j; ++k) x.x.emplace_back(rng.normal(), rng.normal());
      const PairPath p = random_pair_path(rng, 4, 2.0);
      const double lhs = inner(lift(x), p);
      const double rhs = discrete_inner(x, project(p, j));
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
    return Outcome{worst, {}};
  });
  r.run("paths.reprojection_bound", 0.0, [&](Rng& rng) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const PairPath q = random_pair_path(rng, 2 + static_cast<int>(rng.uniform() * 6), 3.0);
      const double sup = lp_norm(q, kInfNorm);
      for (int j : {4, 8, 16, 32, 64}) worst = std::max(worst, l1_distance(q, lift(project(q, j))) - 2.0 * sup / j);
    }
    return Outcome{std::max(0.0, worst), fmt("max of error minus 2|q|_inf/j: %.3g", worst)};
  });
  r.run("paths.lift_contraction", 1e-12, [&](Rng& rng) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const int j = 1 + static_cast<int>(rng.uniform() * 20);
      DiscretePath<Vector2> x;
      for (int k = 0; k < j; ++k) x.x.emplace_back(rng.normal(), rng.normal());
      worst = std::max(worst, lp_norm(lift(x), 1) - discrete_l1(x));
    }
    return Outcome{std::max(0.0, worst), fmt("max of |lift x|_L1 - |x|_1: %.3g", worst)};
  });

  if (D >= 2 && xi_inv && convex && !formal) {
    r.run("paths.jensen_decrease", 1e-10, [&](Rng& rng) {
      double worst = 0.0;
      for (int i = 0; i < n; ++i) {
        const PairPath q = random_pair_path(rng, 2 + static_cast<int>(rng.uniform() * 4), 1.5);
        for (int j : {2, 4, 8}) worst = std::max(worst, -jensen_decrease_check(spec, q, j).defect);
      }
      return Outcome{worst, {}};
    });
  } else {
    r.skip("paths.jensen_decrease", "needs a nonformal convex permutation-invariant covariance with D >= 2");
  }

  if (D == 2 && xi_inv && convex && !formal) {
    r.run("conjugate.perp_identity", 1e-5, [&](Rng&) {
      const auto c = check_perp_conjugate_identity(spec, n, {}, derive_seed(opts.seed, "verify.perp_identity"));
      return Outcome{c.max_relative_gap, fmt("worst at lambda = (%.4g, %.4g)", c.worst_lambda(0), c.worst_lambda(1))};
    });
  } else {
    r.skip("conjugate.perp_identity", "needs a nonformal convex permutation-invariant covariance with D = 2");
  }
  if (D == 2 && convex && !formal && spec.min_degree() >= 2) {
    r.run("conjugate.fenchel_young", 1e-6, [&](Rng& rng) {
      double worst = 0.0;
      for (int i = 0; i < n; ++i) {
        Matrix G(2, 2);
        for (int k = 0; k < 4; ++k) G(k / 2, k % 2) = rng.normal();
        const Matrix a = 0.5 * G * G.transpose();
        const double th = theta(spec, a);
        const double star = xi_star_psd(spec, Matrix(gradient(spec, a)), {}).value;
        worst = std::max(worst, std::abs(star - th) / std::max(1.0, std::abs(th)));
      }
      return Outcome{worst, {}};
    });
  } else {
    r.skip("conjugate.fenchel_young", "needs a nonformal convex covariance with D = 2");
  }

  if (spec.diagonal_only()) {
    r.run("monomial.inequality", 0.0, [&](Rng& rng) {
      int violations = 0, total = 0;
      for (const auto& m : spec.monomials())
        for (int i = 0; i < n; ++i) {
          Vector x(D);
          for (int d = 0; d < D; ++d) x(d) = rng.uniform(0.0, 2.0);
          ++total;
          if (!check_monomial_inequality(exponents_of(m, D), x, false)) ++violations;
        }
      return Outcome{static_cast<double>(violations), fmt("%g violations in %g trials", violations, total)};
    });
    r.run("monomial.signed_even", 0.0, [&](Rng& rng) {
      int violations = 0, total = 0, odd = 0;
      for (const auto& m : spec.monomials()) {
        if (m.degree() % 2) {
          ++odd;
          continue;
        }
        for (int i = 0; i < n; ++i) {
          Vector x(D);
          for (int d = 0; d < D; ++d) x(d) = rng.uniform(-2.0, 2.0);
          ++total;
          if (!check_monomial_inequality(exponents_of(m, D), x, true)) ++violations;
        }
      }
      Outcome o{static_cast<double>(violations), fmt("%g violations in %g trials", violations, total)};
      if (odd) o.detail += fmt("; %g odd-degree monomial(s) not covered", odd);
      return o;
    });
    if (p_inv && xi_inv) {
      r.run("xi.upper_inequality", 1e-12, [&](Rng&) {
        const auto u = check_xi_upper_inequality(spec, 10 * n, derive_seed(opts.seed, "verify.xi_upper"));
        return Outcome{std::max(0.0, -u.min_margin), fmt("min margin %.4g, mean margin %.4g", u.min_margin, u.mean_margin)};
      });
    } else {
      r.skip("xi.upper_inequality", "needs a permutation-invariant model");
    }
    r.run("xi.upper_signed", 1e-12, [&](Rng& rng) {
      Vector probe = Vector::Ones(D);
      probe(0) = -2.0;
      double worst = xi_upper_margin(spec, probe);
      Vector at = probe;
      for (int i = 0; i < 10 * n; ++i) {
        Vector x(D);
        for (int d = 0; d < D; ++d) x(d) = rng.uniform(-2.0, 2.0);
        const double m = xi_upper_margin(spec, x);
        if (m < worst) {
          worst = m;
          at = x;
        }
      }
      bool odd = false;
      for (const auto& m : spec.monomials()) odd = odd || m.degree() % 2;
      Outcome o{std::max(0.0, -worst), fmt("margin at (-2,1,..,1): xi = %.6g, Xi = %.6g", eval_xi_diag(spec, probe), Xi(spec, probe))};
      if (odd && worst < 0.0) {
        o.forced = CheckStatus::Rejected;
        o.detail = "odd-degree terms break the bound for signed arguments; " + o.detail;
      }
      return o;
    });
  } else {
    r.skip("monomial.inequality", "covariance depends on off-diagonal entries");
  }

  // Cascade identities on small tensor rules.
  r.run("cascade.psi_zero", 1e-12, [&](Rng&) {
    return Outcome{std::abs(psi(constant_path(Matrix(Matrix::Zero(D, D))), P1, quad).value), {}};
  });
  if (D <= 3) {
    r.run("cascade.level_merge", 1e-9, [&](Rng& rng) {
      double worst = 0.0;
      for (int i = 0; i < std::min(n, 5); ++i) {
        const PsdPath q = random_psd_path(rng, 2, D, 0.8);
        PsdPath split{{0.0}, {}};
        for (int l = 0; l < q.levels(); ++l) {
          split.grid.push_back(0.5 * (q.grid[l] + q.grid[l + 1]));
          split.grid.push_back(q.grid[l + 1]);
          split.values.push_back(q.values[l]);
          split.values.push_back(q.values[l]);
        }
        worst = std::max(worst, std::abs(psi(q, P1, quad).value - psi(split, P1, quad).value));
      }
      return Outcome{worst, {}};
    });
    if (invariant && D >= 2) {
      r.run("cascade.permutation_invariance", 1e-10, [&](Rng& rng) {
        double worst = 0.0;
        const auto perms = all_permutations(D);
        for (int i = 0; i < std::min(n, 5); ++i) {
          const PsdPath q = random_psd_path(rng, 2, D, 0.8);
          const double base = psi(q, P1, quad).value;
          for (const auto& s : perms) worst = std::max(worst, std::abs(psi(permute_path(q, s), P1, quad).value - base));
        }
        return Outcome{worst, {}};
      });
    } else {
      r.skip("cascade.permutation_invariance", "needs a permutation-invariant model with D >= 2");
    }
  } else {
    r.skip("cascade.level_merge", "dense cascade checks run for D <= 3");
  }

  r.run("objective.zero_path", 1e-12, [&](Rng&) {
    ObjectiveSpec os;
    os.model = model;
    os.model.t = model.t > 0.0 ? model.t : 0.5;
    os.quad = quad;
    if (spec.diagonal_only() && invariant) {
      os.reduction = Reduction::Scalar;
      return Outcome{std::abs(objective_scalar(constant_path(0.0), os)), "scalar reduction"};
    }
    if (invariant && D >= 2) {
      os.reduction = Reduction::Pair;
      return Outcome{std::abs(objective_pair(constant_path(Vector2(Vector2::Zero())), os)), "pair reduction"};
    }
    if (D == 2) {
      os.reduction = Reduction::Matrix;
      return Outcome{std::abs(objective_matrix(constant_path(Matrix(Matrix::Zero(2, 2))), os)), "matrix reduction"};
    }
    throw PreconditionViolated("no reduction applies to this model");
  });
  return rep;
}

}  // namespace parisi
