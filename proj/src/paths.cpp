#include "parisi/paths.hpp"

#include <numeric>

namespace parisi {

double inner_perp(const PairPath& q, const PairPath& r, int D) {
  auto [rq, rr] = align(pieces(q), pieces(r));
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < rq.size(); ++i) {
    const double len = rq[i].b - rq[i].a;
    s1 += len * rq[i].va(0) * rr[i].va(0);
    s2 += len * rq[i].va(1) * rr[i].va(1);
  }
  return (D - 1) * s1 + s2;
}

std::vector<double> isotonic_nonnegative(const std::vector<double>& y) {
  // Pool adjacent violators, then clamp at 0 (the bounded problem's solution).
  std::vector<double> level;
  std::vector<std::size_t> count;
  for (double v : y) {
    level.push_back(v);
    count.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const std::size_t n = count.back() + count[count.size() - 2];
      const double merged =
          (level.back() * count.back() + level[level.size() - 2] * count[count.size() - 2]) / n;
      level.pop_back();
      count.pop_back();
      level.back() = merged;
      count.back() = n;
    }
  }
  std::vector<double> out;
  for (std::size_t b = 0; b < level.size(); ++b)
    out.insert(out.end(), count[b], std::max(0.0, level[b]));
  return out;
}

namespace {

template <typename Value>
DiscretePath<Value> repair_componentwise(const DiscretePath<Value>& d) {
  DiscretePath<Value> out = d;
  if (d.x.empty()) return out;
  const Eigen::Index n = d.x[0].size();
  for (Eigen::Index c = 0; c < n; ++c) {
    std::vector<double> y;
    for (const auto& v : d.x) y.push_back(v(c));
    if (in_discrete_cone(DiscretePath<double>{y}, 0.0)) continue;
    auto fixed = isotonic_nonnegative(y);
    for (int i = 0; i < d.j(); ++i) out.x[i](c) = fixed[i];
  }
  return out;
}

}  // namespace

template <>
DiscretePath<double> isotonic_repair(const DiscretePath<double>& d) {
  if (in_discrete_cone(d, 0.0)) return d;
  return {isotonic_nonnegative(d.x)};
}
template <>
DiscretePath<Vector2> isotonic_repair(const DiscretePath<Vector2>& d) {
  return repair_componentwise(d);
}
template <>
DiscretePath<Vector> isotonic_repair(const DiscretePath<Vector>& d) {
  return repair_componentwise(d);
}
template <>
DiscretePath<Matrix> isotonic_repair(const DiscretePath<Matrix>&) {
  throw InvalidArgument("isotonic repair is not available on the PSD cone");
}

PermMatrix PermMatrix::from_entries(double a, double t, int D) {
  if (D < 2) throw InvalidArgument("PermMatrix needs D >= 2");
  return {D, a - t, a - t + D * t};
}

double invariance_deviation(const Matrix& m) {
  const Eigen::Index D = m.rows();
  const double diag_mean = m.diagonal().mean();
  double off_sum = 0.0;
  for (Eigen::Index i = 0; i < D; ++i)
    for (Eigen::Index j = 0; j < D; ++j)
      if (i != j) off_sum += m(i, j);
  const double off_mean = D > 1 ? off_sum / static_cast<double>(D * (D - 1)) : 0.0;
  double dev = 0.0;
  for (Eigen::Index i = 0; i < D; ++i)
    for (Eigen::Index j = 0; j < D; ++j)
      dev = std::max(dev, std::abs(m(i, j) - (i == j ? diag_mean : off_mean)));
  return dev;
}

PermMatrix PermMatrix::from_dense(const Matrix& m, double tol) {
  if (m.rows() != m.cols() || m.rows() < 2) throw DimensionMismatch("PermMatrix needs a square D>=2 matrix");
  const double dev = invariance_deviation(m);
  if (dev > tol)
    throw NotPermutationInvariant(-1, dev, "matrix is not permutation invariant (deviation " +
                                               std::to_string(dev) + ")");
  const int D = static_cast<int>(m.rows());
  const double a = m.diagonal().mean();
  const double t = (m.sum() - m.trace()) / (D * (D - 1.0));
  return from_entries(a, t, D);
}

Matrix PermMatrix::dense() const {
  Matrix m = Matrix::Constant(D, D, (lambda2 - lambda1) / D);
  m.diagonal().array() += lambda1;
  return m;
}

PermMatrix PermMatrix::sqrt() const {
  if (!is_psd(1e-10)) throw NonPSDInput("square root of a non-PSD permutation-invariant matrix");
  return {D, std::sqrt(std::max(0.0, lambda1)), std::sqrt(std::max(0.0, lambda2))};
}

double pairing(const PermMatrix& a, const PermMatrix& b) {
  if (a.D != b.D) throw DimensionMismatch("PermMatrix dimensions differ");
  return (a.D - 1) * a.lambda1 * b.lambda1 + a.lambda2 * b.lambda2;
}

PsdPath perp_lift(const PairPath& q, int D) {
  PsdPath out{q.grid, {}};
  for (const auto& v : q.values) out.values.push_back(PermMatrix{D, v(0), v(1)}.dense());
  return out;
}

PairPath reduce_invariant(const PsdPath& q, double tol) {
  PairPath out{q.grid, {}};
  for (int l = 0; l < q.levels(); ++l) {
    const double dev = invariance_deviation(q.values[l]);
    if (dev > tol)
      throw NotPermutationInvariant(l + 1, dev, "level " + std::to_string(l + 1) +
                                                    " is not permutation invariant (deviation " +
                                                    std::to_string(dev) + ")");
    PermMatrix m = PermMatrix::from_dense(q.values[l], tol);
    out.values.push_back(Vector2(m.lambda1, m.lambda2));
  }
  return out;
}

PsdPath permute_path(const PsdPath& q, const std::vector<int>& s) {
  const int D = static_cast<int>(s.size());
  Matrix P = Matrix::Zero(D, D);
  for (int d = 0; d < D; ++d) P(s[d], d) = 1.0;
  PsdPath out{q.grid, {}};
  for (const auto& v : q.values) out.values.push_back(P * v * P.transpose());
  return out;
}

PsdPath symmetrize_path(const PsdPath& q) {
  const int D = static_cast<int>(q.values.front().rows());
  const auto perms = all_permutations(D);
  PsdPath out{q.grid, std::vector<Matrix>(q.values.size(), Matrix::Zero(D, D))};
  for (const auto& s : perms) {
    PsdPath p = permute_path(q, s);
    for (std::size_t l = 0; l < q.values.size(); ++l) out.values[l] += p.values[l];
  }
  for (auto& v : out.values) v /= static_cast<double>(perms.size());
  return out;
}

PsdPath diagonal_embedding(const ScalarPath& p, int D) {
  PsdPath out{p.grid, {}};
  for (double v : p.values) out.values.push_back(v * Matrix::Identity(D, D));
  return out;
}

JensenReport jensen_decrease_check(const CovarianceSpec& spec, const PairPath& q, int j) {
  const int n = spec.max_degree() / 2 + 1;
  auto xi = [&](const Vector2& v) { return xi_perp(spec, v(0), v(1)); };
  JensenReport r;
  r.lhs = integrate(lift(project(q, j)), xi, n);
  r.rhs = integrate(q, xi, n);
  r.defect = r.rhs - r.lhs;
  r.passed = r.defect >= -1e-10;
  return r;
}

}  // namespace parisi
