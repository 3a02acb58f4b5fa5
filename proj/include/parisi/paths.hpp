#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "parisi/error.hpp"
#include "parisi/model.hpp"
#include "parisi/quadrature.hpp"

namespace parisi {

using Vector2 = Eigen::Vector2d;

// Cone-element helpers, overloaded on the value type:
//   double  -> R_+        Vector2 -> R²_+ (eigenvalue coordinates)
//   Vector  -> R^D_+      Matrix  -> S^D_+
// Norms are |·| for scalars, plain ℓ¹ for vectors, Frobenius for matrices.
inline double component_norm(double x) { return std::abs(x); }
inline double component_norm(const Vector2& x) { return x.cwiseAbs().sum(); }
inline double component_norm(const Vector& x) { return x.cwiseAbs().sum(); }
inline double component_norm(const Matrix& x) { return x.norm(); }

inline double dot(double a, double b) { return a * b; }
inline double dot(const Vector2& a, const Vector2& b) { return a.dot(b); }
inline double dot(const Vector& a, const Vector& b) { return a.dot(b); }
inline double dot(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

// Smallest "coordinate" in the cone sense: ≥ 0 iff the element is in the cone.
inline double cone_margin(double x) { return x; }
inline double cone_margin(const Vector2& x) { return x.minCoeff(); }
inline double cone_margin(const Vector& x) { return x.size() ? x.minCoeff() : 0.0; }
inline double cone_margin(const Matrix& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (x + x.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double zero_like(double) { return 0.0; }
inline Vector2 zero_like(const Vector2&) { return Vector2::Zero(); }
inline Vector zero_like(const Vector& v) { return Vector::Zero(v.size()); }
inline Matrix zero_like(const Matrix& m) { return Matrix::Zero(m.rows(), m.cols()); }

template <typename Value>
std::string cone_name();
template <> inline std::string cone_name<double>() { return "scalar"; }
template <> inline std::string cone_name<Vector2>() { return "pair"; }
template <> inline std::string cone_name<Vector>() { return "vector"; }
template <> inline std::string cone_name<Matrix>() { return "psd"; }

// Piecewise-constant path: value q_l on [grid[l-1], grid[l]), implicit q_0 = 0.
template <typename Value>
struct StepPath {
  std::vector<double> grid;
  std::vector<Value> values;

  int levels() const { return static_cast<int>(values.size()); }
  const Value& at(double u) const {
    auto it = std::upper_bound(grid.begin() + 1, grid.end() - 1, u);
    return values[static_cast<std::size_t>(it - grid.begin()) - 1];
  }
  Value increment(int l) const { return l == 0 ? values[0] : Value(values[l] - values[l - 1]); }
  double gap(int l) const { return grid[l + 1] - grid[l]; }
};

using ScalarPath = StepPath<double>;
using PairPath = StepPath<Vector2>;
using VectorPath = StepPath<Vector>;
using PsdPath = StepPath<Matrix>;

template <typename Value>
StepPath<Value> constant_path(const Value& v) {
  return {{0.0, 1.0}, {v}};
}

// Checks the grid and cone monotonicity; throws on violation.
template <typename Value>
void validate_path(const StepPath<Value>& p, double tol = 1e-10) {
  if (p.values.empty()) throw InvalidArgument("path has no levels");
  if (p.grid.size() != p.values.size() + 1)
    throw InvalidArgument("path grid must have one more point than values");
  if (p.grid.front() != 0.0 || p.grid.back() != 1.0)
    throw InvalidArgument("path grid must start at 0 and end at 1");
  for (std::size_t i = 1; i < p.grid.size(); ++i)
    if (!(p.grid[i] > p.grid[i - 1])) throw InvalidArgument("path grid must be strictly increasing");
  for (int l = 0; l < p.levels(); ++l) {
    double m = cone_margin(p.increment(l));
    if (!(m >= -tol))
      throw NonMonotonePath("increment at level " + std::to_string(l + 1) +
                            " leaves the cone (margin " + std::to_string(m) + ")");
  }
}

// Continuous piecewise-linear path through (knots[i], values[i]).
template <typename Value>
struct LinearPath {
  std::vector<double> knots;
  std::vector<Value> values;
  Value at(double u) const {
    if (u <= knots.front()) return values.front();
    if (u >= knots.back()) return values.back();
    std::size_t i = static_cast<std::size_t>(std::upper_bound(knots.begin(), knots.end(), u) - knots.begin());
    double s = (u - knots[i - 1]) / (knots[i] - knots[i - 1]);
    return Value(values[i - 1] + s * (values[i] - values[i - 1]));
  }
};

// Element of 𝒬ʲ when 0 ⪯ x_1 ⪯ … ⪯ x_j (convention x_0 = 0).
template <typename Value>
struct DiscretePath {
  std::vector<Value> x;
  int j() const { return static_cast<int>(x.size()); }
};

template <typename Value>
bool in_discrete_cone(const DiscretePath<Value>& d, double tol = 1e-12) {
  for (int i = 0; i < d.j(); ++i) {
    Value inc = i == 0 ? d.x[0] : Value(d.x[i] - d.x[i - 1]);
    if (cone_margin(inc) < -tol) return false;
  }
  return true;
}

// Linear pieces on [a,b]; va and vb are the one-sided limits at the ends.
template <typename Value>
struct Piece {
  double a, b;
  Value va, vb;
  Value at(double u) const { return Value(va + ((u - a) / (b - a)) * (vb - va)); }
};

template <typename Value>
std::vector<Piece<Value>> pieces(const StepPath<Value>& p) {
  std::vector<Piece<Value>> out;
  for (int l = 0; l < p.levels(); ++l) out.push_back({p.grid[l], p.grid[l + 1], p.values[l], p.values[l]});
  return out;
}

template <typename Value>
std::vector<Piece<Value>> pieces(const LinearPath<Value>& p) {
  std::vector<Piece<Value>> out;
  for (std::size_t i = 0; i + 1 < p.knots.size(); ++i)
    if (p.knots[i + 1] > p.knots[i]) out.push_back({p.knots[i], p.knots[i + 1], p.values[i], p.values[i + 1]});
  return out;
}

// Splits pieces at the given sorted knots.
template <typename Value>
std::vector<Piece<Value>> refine(const std::vector<Piece<Value>>& in, const std::vector<double>& knots) {
  std::vector<Piece<Value>> out;
  for (const auto& pc : in) {
    double lo = pc.a;
    Value vlo = pc.va;
    for (double k : knots) {
      if (k <= lo || k >= pc.b) continue;
      Value vk = pc.at(k);
      out.push_back({lo, k, vlo, vk});
      lo = k;
      vlo = vk;
    }
    out.push_back({lo, pc.b, vlo, pc.vb});
  }
  return out;
}

template <typename Value>
std::vector<double> knots_of(const std::vector<Piece<Value>>& ps) {
  std::vector<double> k;
  for (const auto& p : ps) {
    k.push_back(p.a);
    k.push_back(p.b);
  }
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  return k;
}

// Common refinement of two piece lists covering the same interval.
template <typename A, typename B>
auto align(const std::vector<Piece<A>>& pa, const std::vector<Piece<B>>& pb) {
  std::vector<double> k = knots_of(pa), kb = knots_of(pb);
  k.insert(k.end(), kb.begin(), kb.end());
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  return std::make_pair(refine(pa, k), refine(pb, k));
}

namespace detail {

// ∫_a^b |linear| for a scalar linear function with end values x, y.
inline double abs_linear_integral(double len, double x, double y) {
  if ((x >= 0 && y >= 0) || (x <= 0 && y <= 0)) return 0.5 * len * std::abs(x + y);
  return 0.5 * len * (x * x + y * y) / (std::abs(x) + std::abs(y));
}

inline double abs_piece(double len, double x, double y) { return abs_linear_integral(len, x, y); }
inline double abs_piece(double len, const Vector2& x, const Vector2& y) {
  return abs_linear_integral(len, x(0), y(0)) + abs_linear_integral(len, x(1), y(1));
}
inline double abs_piece(double len, const Vector& x, const Vector& y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += abs_linear_integral(len, x(i), y(i));
  return s;
}
inline double abs_piece(double len, const Matrix& x, const Matrix& y) {
  const GaussRule& g = gauss_legendre(8);
  double s = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    s += g.weights[i] * Matrix(x + g.nodes[i] * (y - x)).norm();
  return len * s;
}

template <typename P>
auto to_pieces(const P& p) {
  return pieces(p);
}

}  // namespace detail

// ∫ |a(u) − b(u)| du. Exact for scalar/pair/vector values (componentwise ℓ¹);
// Frobenius matrix norms of linear pieces use an 8-point rule.
template <typename PA, typename PB>
double l1_distance(const PA& a, const PB& b) {
  auto [ra, rb] = align(detail::to_pieces(a), detail::to_pieces(b));
  double s = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i)
    s += detail::abs_piece(ra[i].b - ra[i].a, decltype(ra[i].va)(ra[i].va - rb[i].va),
                           decltype(ra[i].vb)(ra[i].vb - rb[i].vb));
  return s;
}

// ∫ a·b du, exact (Simpson on linear×linear pieces).
template <typename PA, typename PB>
double inner(const PA& a, const PB& b) {
  auto [ra, rb] = align(detail::to_pieces(a), detail::to_pieces(b));
  double s = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double m = 0.5 * (ra[i].a + ra[i].b);
    s += (ra[i].b - ra[i].a) / 6.0 *
         (dot(ra[i].va, rb[i].va) + 4.0 * dot(ra[i].at(m), rb[i].at(m)) + dot(ra[i].vb, rb[i].vb));
  }
  return s;
}

// (D−1)⟨q1,r1⟩ + ⟨q2,r2⟩: equals ⟨q^⊥, r^⊥⟩ for the lifted matrix paths.
double inner_perp(const PairPath& q, const PairPath& r, int D);

template <typename P>
double lp_norm(const P& p, int which) {
  auto ps = detail::to_pieces(p);
  if (which == 1) {
    double s = 0.0;
    for (const auto& pc : ps) s += detail::abs_piece(pc.b - pc.a, pc.va, pc.vb);
    return s;
  }
  if (which == 2) return std::sqrt(inner(p, p));
  if (which == 0 || which < 0) {
    double m = 0.0;
    for (const auto& pc : ps) m = std::max({m, component_norm(pc.va), component_norm(pc.vb)});
    return m;
  }
  throw InvalidArgument("lp_norm supports p in {1, 2, inf}");
}
inline constexpr int kInfNorm = -1;

// ∫ g(p(u)) du with an n-point Gauss–Legendre rule on every piece; exact when
// g∘p is a polynomial of degree ≤ 2n−1 on each piece.
template <typename P, typename G>
double integrate(const P& p, G&& g, int n) {
  const GaussRule& rule = gauss_legendre(n);
  double s = 0.0;
  for (const auto& pc : detail::to_pieces(p)) {
    double piece = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      piece += rule.weights[i] * g(pc.at(pc.a + rule.nodes[i] * (pc.b - pc.a)));
    s += (pc.b - pc.a) * piece;
  }
  return s;
}

// Λʲ: linear interpolation through (0,0), (i/j, x_i).
template <typename Value>
LinearPath<Value> lift(const DiscretePath<Value>& x) {
  if (x.x.empty()) throw InvalidArgument("lift of an empty discrete path");
  const int j = x.j();
  LinearPath<Value> out;
  out.knots.push_back(0.0);
  out.values.push_back(zero_like(x.x[0]));
  for (int i = 1; i <= j; ++i) {
    out.knots.push_back(static_cast<double>(i) / j);
    out.values.push_back(x.x[i - 1]);
  }
  return out;
}

// Hat function 1̃_i on the grid {k/j}; the last one is a half hat.
inline LinearPath<double> hat(int i, int j) {
  LinearPath<double> h;
  const double lo = static_cast<double>(i - 1) / j, mid = static_cast<double>(i) / j;
  if (i > 1) {
    h.knots.push_back(0.0);
    h.values.push_back(0.0);
  }
  h.knots.push_back(lo);
  h.values.push_back(0.0);
  h.knots.push_back(mid);
  h.values.push_back(1.0);
  if (i < j) {
    h.knots.push_back(static_cast<double>(i + 1) / j);
    h.values.push_back(0.0);
    if (i + 1 < j) {
      h.knots.push_back(1.0);
      h.values.push_back(0.0);
    }
  }
  return h;
}

enum class Repair { None, Isotonic };

// Least-squares projection of a scalar sequence onto {0 ≤ x_1 ≤ … ≤ x_j}.
std::vector<double> isotonic_nonnegative(const std::vector<double>& y);

// Componentwise on R_+, R²_+ and R^D_+; not available on S^D_+.
template <typename Value>
DiscretePath<Value> isotonic_repair(const DiscretePath<Value>& d);
template <> DiscretePath<double> isotonic_repair(const DiscretePath<double>& d);
template <> DiscretePath<Vector2> isotonic_repair(const DiscretePath<Vector2>& d);
template <> DiscretePath<Vector> isotonic_repair(const DiscretePath<Vector>& d);
template <> DiscretePath<Matrix> isotonic_repair(const DiscretePath<Matrix>& d);

// Λⱼ: coordinates ⟨p, j·1̃_i⟩, exact on step and linear pieces.
template <typename P>
auto project(const P& p, int j, Repair repair = Repair::None) {
  if (j < 1) throw InvalidArgument("project needs j >= 1");
  auto ps = detail::to_pieces(p);
  using Value = std::decay_t<decltype(ps.front().va)>;
  DiscretePath<Value> out;
  for (int i = 1; i <= j; ++i) {
    auto [rp, rh] = align(ps, pieces(hat(i, j)));
    Value acc = zero_like(ps.front().va);
    for (std::size_t k = 0; k < rp.size(); ++k) {
      const double m = 0.5 * (rp[k].a + rp[k].b);
      acc = Value(acc + ((rp[k].b - rp[k].a) / 6.0) *
                            Value(rp[k].va * rh[k].va + 4.0 * rh[k].at(m) * rp[k].at(m) +
                                  rp[k].vb * rh[k].vb));
    }
    out.x.push_back(Value(static_cast<double>(j) * acc));
  }
  if (repair == Repair::Isotonic) return isotonic_repair(out);
  return out;
}

// ⟨x, y⟩_j = (1/j) Σ x_i·y_i and |x|_1 = (1/j) Σ |x_i|.
template <typename Value>
double discrete_inner(const DiscretePath<Value>& x, const DiscretePath<Value>& y) {
  double s = 0.0;
  for (int i = 0; i < x.j(); ++i) s += dot(x.x[i], y.x[i]);
  return s / x.j();
}
template <typename Value>
double discrete_l1(const DiscretePath<Value>& x) {
  double s = 0.0;
  for (const auto& v : x.x) s += component_norm(v);
  return s / x.j();
}

// m(λ1, λ2) = λ1 (id − 𝟙/D) + λ2 𝟙/D.
struct PermMatrix {
  int D = 2;
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  static PermMatrix from_entries(double a, double t, int D);
  // Throws NotPermutationInvariant (level −1) when the deviation exceeds tol.
  static PermMatrix from_dense(const Matrix& m, double tol = 1e-10);
  Matrix dense() const;
  double diagonal_entry() const { return lambda1 + (lambda2 - lambda1) / D; }
  double off_diagonal_entry() const { return (lambda2 - lambda1) / D; }
  bool is_psd(double tol = 0.0) const { return lambda1 >= -tol && lambda2 >= -tol; }
  PermMatrix sqrt() const;
};

// Frobenius pairing m(λ)·m(μ) = (D−1)λ1μ1 + λ2μ2.
double pairing(const PermMatrix& a, const PermMatrix& b);

// Max deviation of diagonal entries from their mean and of off-diagonal
// entries from theirs.
double invariance_deviation(const Matrix& m);

PsdPath perp_lift(const PairPath& q, int D);
PairPath reduce_invariant(const PsdPath& q, double tol = 1e-10);
PsdPath permute_path(const PsdPath& q, const std::vector<int>& s);
PsdPath symmetrize_path(const PsdPath& q);
PsdPath diagonal_embedding(const ScalarPath& p, int D);

struct JensenReport {
  double lhs = 0.0;  // ∫ ξ⊥(Λʲ Λⱼ q)
  double rhs = 0.0;  // ∫ ξ⊥(q)
  double defect = 0.0;
  bool passed = false;
};
JensenReport jensen_decrease_check(const CovarianceSpec& spec, const PairPath& q, int j);

}  // namespace parisi
