#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "parisi/error.hpp"

namespace parisi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Zero-based position (row, col) of an overlap-matrix entry.
struct Entry {
  int row = 0;
  int col = 0;
  auto operator<=>(const Entry&) const = default;
};

struct Monomial {
  std::vector<Entry> entries;  // sorted multiset
  double coeff = 0.0;
  int degree() const { return static_cast<int>(entries.size()); }
};

// ξ(R) = Σ c · Π R_{entry}. Constructed in normal form: entries sorted inside a
// monomial, monomials sorted and merged, zero coefficients dropped.
class CovarianceSpec {
 public:
  CovarianceSpec() = default;
  CovarianceSpec(int dimension, std::vector<Monomial> monomials, bool formal = false);

  int dimension() const { return dimension_; }
  const std::vector<Monomial>& monomials() const { return monomials_; }
  bool diagonal_only() const { return diagonal_only_; }
  bool formal() const { return formal_; }
  int min_degree() const;
  int max_degree() const;

  bool operator==(const CovarianceSpec&) const;

 private:
  int dimension_ = 1;
  std::vector<Monomial> monomials_;
  bool diagonal_only_ = true;
  bool formal_ = false;
};

inline void check_square(const CovarianceSpec& spec, Eigen::Index rows, Eigen::Index cols) {
  if (rows != spec.dimension() || cols != spec.dimension())
    throw DimensionMismatch("matrix argument is " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", covariance dimension is " +
                            std::to_string(spec.dimension()));
}

template <typename Derived>
typename Derived::Scalar eval_xi(const CovarianceSpec& spec, const Eigen::MatrixBase<Derived>& r) {
  using Scalar = typename Derived::Scalar;
  check_square(spec, r.rows(), r.cols());
  Scalar total(0);
  for (const auto& m : spec.monomials()) {
    Scalar term(m.coeff);
    for (const auto& e : m.entries) term *= r(e.row, e.col);
    total += term;
  }
  return total;
}

// Exact gradient by monomial differentiation: G(d,d') = ∂ξ/∂R_{dd'}.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> gradient(
    const CovarianceSpec& spec, const Eigen::MatrixBase<Derived>& r) {
  using Scalar = typename Derived::Scalar;
  check_square(spec, r.rows(), r.cols());
  const int D = spec.dimension();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> g =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(D, D);
  for (const auto& m : spec.monomials()) {
    const int p = m.degree();
    for (int k = 0; k < p; ++k) {
      Scalar term(m.coeff);
      for (int i = 0; i < p; ++i)
        if (i != k) term *= r(m.entries[i].row, m.entries[i].col);
      g(m.entries[k].row, m.entries[k].col) += term;
    }
  }
  return g;
}

// d²/ds dt ξ(R + sU + tV) at s = t = 0.
template <typename DR, typename DU, typename DV>
typename DR::Scalar second_directional(const CovarianceSpec& spec, const Eigen::MatrixBase<DR>& r,
                                       const Eigen::MatrixBase<DU>& u,
                                       const Eigen::MatrixBase<DV>& v) {
  using Scalar = typename DR::Scalar;
  check_square(spec, r.rows(), r.cols());
  Scalar total(0);
  for (const auto& m : spec.monomials()) {
    const int p = m.degree();
    for (int a = 0; a < p; ++a) {
      for (int b = 0; b < p; ++b) {
        if (a == b) continue;
        Scalar term(m.coeff);
        term *= u(m.entries[a].row, m.entries[a].col);
        term *= v(m.entries[b].row, m.entries[b].col);
        if (term == Scalar(0)) continue;
        for (int i = 0; i < p; ++i)
          if (i != a && i != b) term *= r(m.entries[i].row, m.entries[i].col);
        total += term;
      }
    }
  }
  return total;
}

// θ(a) = a·∇ξ(a) − ξ(a), Frobenius pairing.
template <typename Derived>
typename Derived::Scalar theta(const CovarianceSpec& spec, const Eigen::MatrixBase<Derived>& a) {
  return a.cwiseProduct(gradient(spec, a)).sum() - eval_xi(spec, a);
}

// ξ†(λ) = ξ(λ·id) and its coefficients by degree (index = power of λ).
double xi_dagger(const CovarianceSpec& spec, double lambda);
std::vector<double> xi_dagger_coefficients(const CovarianceSpec& spec);

// ξ⊥(λ1, λ2) = ξ(m(λ1/(D−1), λ2)). Requires D ≥ 2.
double xi_perp(const CovarianceSpec& spec, double lambda1, double lambda2);

// Ξ(x) = (1/D) Σ_d ξ†(x_d). Diagonal specs only.
double Xi(const CovarianceSpec& spec, const Vector& x);

// The covariance whose evaluation is Ξ on diagonal arguments.
CovarianceSpec Xi_spec(const CovarianceSpec& spec);

// Evaluates a diagonal spec at diag(x).
double eval_xi_diag(const CovarianceSpec& spec, const Vector& x);

// Relabels species: entry (d,d') becomes (s[d], s[d']).
CovarianceSpec permute(const CovarianceSpec& spec, const std::vector<int>& s);

// Orbit average (1/D!) Σ_s ξ(R^s).
CovarianceSpec symmetrize(const CovarianceSpec& spec);

struct InvarianceReport {
  bool invariant = false;
  double max_deviation = 0.0;  // largest coefficient gap to the symmetrized spec
};
InvarianceReport check_permutation_invariance(const CovarianceSpec& spec, double tol = 1e-12);

struct ConvexityReport {
  bool passed = true;
  int samples = 0;
  double worst_violation = 0.0;  // max of ξ(mid) − avg, positive means violation
  Matrix witness_a, witness_b;
};
ConvexityReport check_convexity_on_cone(const CovarianceSpec& spec, int samples,
                                        std::uint64_t rng_seed);

// (1/D!) Σ_s Π x_{s(d)}^{i_d} ≤ (1/D) Σ_d x_d^I with relative tolerance 1e-12.
// Throws InvalidArgument for signed x unless allow_signed and I is even.
bool check_monomial_inequality(const std::vector<int>& exponents, const Vector& x,
                               bool allow_signed);
double monomial_symmetric_mean(const std::vector<int>& exponents, const Vector& x);

struct UpperInequalityReport {
  bool passed = true;
  int samples = 0;
  double min_margin = 0.0;  // min of Ξ(x) − ξ(x)
  double mean_margin = 0.0;
  Vector worst_point;
};
UpperInequalityReport check_xi_upper_inequality(const CovarianceSpec& spec, int samples,
                                                std::uint64_t rng_seed);
// Ξ(x) − ξ(diag x) at one point, no precondition on the sign of x.
double xi_upper_margin(const CovarianceSpec& spec, const Vector& x);

struct Atom {
  Vector point;
  double weight = 0.0;
};

// Finitely supported reference measure. Weights are positive and sum to 1.
// Support radius is recorded rather than forced to be ≤ 1: the ±1 hypercube
// presets sit outside the unit ball for D ≥ 2.
class SpinMeasure {
 public:
  SpinMeasure() = default;
  SpinMeasure(int dimension, std::vector<Atom> atoms);

  int dimension() const { return dimension_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  double support_radius() const;
  bool in_unit_ball() const { return support_radius() <= 1.0 + 1e-12; }
  bool is_permutation_invariant(double tol = 1e-12) const;

  // Marginals if the measure is a product of its coordinate laws.
  std::optional<std::vector<SpinMeasure>> product_marginals(double tol = 1e-12) const;

  SpinMeasure permuted(const std::vector<int>& s) const;

 private:
  int dimension_ = 1;
  std::vector<Atom> atoms_;
};

SpinMeasure ising_measure(int D);  // Unif{±1}^D
SpinMeasure potts_measure(int D);  // Unif{e_1,…,e_D}

struct ModelInstance {
  CovarianceSpec covariance;
  SpinMeasure measure;
  double t = 0.0;
  std::string name;  // preset name or file, informational
  void validate() const;
};

ModelInstance potts_model(int D);
ModelInstance sk_model();
ModelInstance bp_sk_model(double alpha);
// ξ(R) = Σ_p c_p ((1/D) Σ_d R_dd)^p with Ising spins; coeffs[p-1] is c_p.
ModelInstance ising_diag_model(int D, const std::vector<double>& coeffs);
// Formal ξ = x1²x2 + x1x2² on Unif{±1}², a counterexample outside the theory.
ModelInstance counterexample_model();

// All permutations of {0,…,D−1} in lexicographic order.
std::vector<std::vector<int>> all_permutations(int D);

}  // namespace parisi
