#include "parisi/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

#include "parisi/rng.hpp"

namespace parisi {

std::vector<std::vector<int>> all_permutations(int D) {
  std::vector<int> s(D);
  std::iota(s.begin(), s.end(), 0);
  std::vector<std::vector<int>> out;
  do out.push_back(s);
  while (std::next_permutation(s.begin(), s.end()));
  return out;
}

CovarianceSpec::CovarianceSpec(int dimension, std::vector<Monomial> monomials, bool formal)
    : dimension_(dimension), formal_(formal) {
  if (dimension < 1) throw InvalidArgument("covariance dimension must be at least 1");
  std::map<std::vector<Entry>, double> merged;
  for (auto& m : monomials) {
    if (m.entries.empty()) throw InvalidArgument("constant monomials are not allowed (xi(0) = 0)");
    if (!std::isfinite(m.coeff)) throw InvalidArgument("non-finite monomial coefficient");
    for (const auto& e : m.entries)
      if (e.row < 0 || e.row >= dimension || e.col < 0 || e.col >= dimension)
        throw InvalidArgument("monomial entry index out of range");
    std::sort(m.entries.begin(), m.entries.end());
    merged[m.entries] += m.coeff;
  }
  for (auto& [entries, c] : merged) {
    if (c == 0.0) continue;
    if (!formal && c < 0.0)
      throw InvalidArgument("negative coefficient in a non-formal covariance");
    monomials_.push_back({entries, c});
  }
  diagonal_only_ = std::all_of(monomials_.begin(), monomials_.end(), [](const Monomial& m) {
    return std::all_of(m.entries.begin(), m.entries.end(),
                       [](const Entry& e) { return e.row == e.col; });
  });
}

int CovarianceSpec::min_degree() const {
  int d = 0;
  for (const auto& m : monomials_) d = d == 0 ? m.degree() : std::min(d, m.degree());
  return d;
}

int CovarianceSpec::max_degree() const {
  int d = 0;
  for (const auto& m : monomials_) d = std::max(d, m.degree());
  return d;
}

bool CovarianceSpec::operator==(const CovarianceSpec& o) const {
  if (dimension_ != o.dimension_ || formal_ != o.formal_ || monomials_.size() != o.monomials_.size())
    return false;
  for (std::size_t i = 0; i < monomials_.size(); ++i)
    if (monomials_[i].entries != o.monomials_[i].entries ||
        monomials_[i].coeff != o.monomials_[i].coeff)
      return false;
  return true;
}

std::vector<double> xi_dagger_coefficients(const CovarianceSpec& spec) {
  std::vector<double> c(spec.max_degree() + 1, 0.0);
  for (const auto& m : spec.monomials()) {
    bool diag = std::all_of(m.entries.begin(), m.entries.end(),
                            [](const Entry& e) { return e.row == e.col; });
    if (diag) c[m.degree()] += m.coeff;
  }
  return c;
}

double xi_dagger(const CovarianceSpec& spec, double lambda) {
  const auto c = xi_dagger_coefficients(spec);
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) v = v * lambda + c[k];
  return v;
}

double xi_perp(const CovarianceSpec& spec, double lambda1, double lambda2) {
  const int D = spec.dimension();
  if (D < 2) throw InvalidArgument("xi_perp requires D >= 2");
  const double l1 = lambda1 / (D - 1);
  Matrix m = Matrix::Constant(D, D, (lambda2 - l1) / D);
  m.diagonal().array() += l1;
  return eval_xi(spec, m);
}

double eval_xi_diag(const CovarianceSpec& spec, const Vector& x) {
  if (x.size() != spec.dimension()) throw DimensionMismatch("point dimension differs from covariance");
  return eval_xi(spec, Matrix(x.asDiagonal()));
}

double Xi(const CovarianceSpec& spec, const Vector& x) {
  if (!spec.diagonal_only()) throw InvalidArgument("Xi requires a diagonal_only covariance");
  if (x.size() != spec.dimension()) throw DimensionMismatch("point dimension differs from covariance");
  const auto c = xi_dagger_coefficients(spec);
  double total = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    double v = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) v = v * x(d) + c[k];
    total += v;
  }
  return total / spec.dimension();
}

CovarianceSpec Xi_spec(const CovarianceSpec& spec) {
  if (!spec.diagonal_only()) throw InvalidArgument("Xi requires a diagonal_only covariance");
  const int D = spec.dimension();
  const auto c = xi_dagger_coefficients(spec);
  std::vector<Monomial> out;
  for (std::size_t k = 1; k < c.size(); ++k) {
    if (c[k] == 0.0) continue;
    for (int d = 0; d < D; ++d)
      out.push_back({std::vector<Entry>(k, Entry{d, d}), c[k] / D});
  }
  return CovarianceSpec(D, std::move(out), spec.formal());
}

CovarianceSpec permute(const CovarianceSpec& spec, const std::vector<int>& s) {
  if (static_cast<int>(s.size()) != spec.dimension())
    throw DimensionMismatch("permutation length differs from covariance dimension");
  std::vector<Monomial> out;
  for (const auto& m : spec.monomials()) {
    Monomial p{{}, m.coeff};
    for (const auto& e : m.entries) p.entries.push_back({s[e.row], s[e.col]});
    out.push_back(std::move(p));
  }
  return CovarianceSpec(spec.dimension(), std::move(out), spec.formal());
}

CovarianceSpec symmetrize(const CovarianceSpec& spec) {
  const auto perms = all_permutations(spec.dimension());
  std::vector<Monomial> out;
  const double w = 1.0 / static_cast<double>(perms.size());
  for (const auto& s : perms) {
    const CovarianceSpec image = permute(spec, s);
    for (auto m : image.monomials()) {
      m.coeff *= w;
      out.push_back(std::move(m));
    }
  }
  return CovarianceSpec(spec.dimension(), std::move(out), spec.formal());
}

InvarianceReport check_permutation_invariance(const CovarianceSpec& spec, double tol) {
  std::map<std::vector<Entry>, double> diff;
  for (const auto& m : spec.monomials()) diff[m.entries] += m.coeff;
  const CovarianceSpec sym = symmetrize(spec);
  for (const auto& m : sym.monomials()) diff[m.entries] -= m.coeff;
  InvarianceReport r;
  for (const auto& [k, v] : diff) r.max_deviation = std::max(r.max_deviation, std::abs(v));
  double scale = 0.0;
  for (const auto& m : spec.monomials()) scale = std::max(scale, std::abs(m.coeff));
  r.invariant = r.max_deviation <= tol * std::max(1.0, scale);
  return r;
}

ConvexityReport check_convexity_on_cone(const CovarianceSpec& spec, int samples,
                                        std::uint64_t rng_seed) {
  const int D = spec.dimension();
  Rng rng(derive_seed(rng_seed, "model.convexity"));
  auto draw = [&]() {
    if (spec.diagonal_only()) {
      Vector v(D);
      for (int d = 0; d < D; ++d) v(d) = rng.uniform(0.0, 2.0);
      return Matrix(v.asDiagonal());
    }
    Matrix g(D, D);
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) g(i, j) = rng.normal();
    Matrix a = g * g.transpose();
    return Matrix(a * (rng.uniform(0.0, 2.0) / std::max(1e-12, a.trace())) * D);
  };
  ConvexityReport rep;
  rep.samples = samples;
  rep.worst_violation = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    Matrix a = draw(), b = draw();
    double fa = eval_xi(spec, a), fb = eval_xi(spec, b);
    double avg = 0.5 * (fa + fb);
    double v = eval_xi(spec, Matrix(0.5 * (a + b))) - avg;
    if (v > rep.worst_violation) {
      rep.worst_violation = v;
      rep.witness_a = a;
      rep.witness_b = b;
    }
    if (v > 1e-10 * std::max(1.0, std::abs(avg))) rep.passed = false;
  }
  return rep;
}

namespace {

void check_sign_precondition(int total_degree, const Vector& x, bool allow_signed) {
  bool signed_input = (x.array() < 0.0).any();
  if (!signed_input) return;
  if (!allow_signed) throw InvalidArgument("point has negative coordinates; positivity required");
  if (total_degree % 2 != 0)
    throw InvalidArgument("signed point with odd total degree: inequality does not apply");
}

}  // namespace

double monomial_symmetric_mean(const std::vector<int>& exponents, const Vector& x) {
  const int D = static_cast<int>(exponents.size());
  if (x.size() != D) throw DimensionMismatch("exponent tuple and point dimensions differ");
  const auto perms = all_permutations(D);
  double total = 0.0;
  for (const auto& s : perms) {
    double term = 1.0;
    for (int d = 0; d < D; ++d) term *= std::pow(x(s[d]), exponents[d]);
    total += term;
  }
  return total / static_cast<double>(perms.size());
}

bool check_monomial_inequality(const std::vector<int>& exponents, const Vector& x,
                               bool allow_signed) {
  const int I = std::accumulate(exponents.begin(), exponents.end(), 0);
  if (std::any_of(exponents.begin(), exponents.end(), [](int i) { return i < 0; }))
    throw InvalidArgument("negative exponent");
  if (x.size() != static_cast<Eigen::Index>(exponents.size()))
    throw DimensionMismatch("exponent tuple and point dimensions differ");
  check_sign_precondition(I, x, allow_signed);
  const double lhs = monomial_symmetric_mean(exponents, x);
  double rhs = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) rhs += std::pow(x(d), I);
  rhs /= static_cast<double>(x.size());
  return lhs <= rhs + 1e-12 * std::max(std::abs(rhs), std::abs(lhs));
}

double xi_upper_margin(const CovarianceSpec& spec, const Vector& x) {
  return Xi(spec, x) - eval_xi_diag(spec, x);
}

UpperInequalityReport check_xi_upper_inequality(const CovarianceSpec& spec, int samples,
                                                std::uint64_t rng_seed) {
  if (!spec.diagonal_only()) throw PreconditionViolated("upper inequality needs a diagonal covariance");
  if (spec.formal()) throw FormalSpecRejected("upper inequality needs nonnegative coefficients");
  const int D = spec.dimension();
  Rng rng(derive_seed(rng_seed, "model.xi_upper"));
  UpperInequalityReport rep;
  rep.samples = samples;
  rep.min_margin = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (int k = 0; k < samples; ++k) {
    Vector x(D);
    for (int d = 0; d < D; ++d) x(d) = rng.uniform();
    const double up = Xi(spec, x);
    const double margin = up - eval_xi_diag(spec, x);
    sum += margin;
    if (margin < rep.min_margin) {
      rep.min_margin = margin;
      rep.worst_point = x;
    }
    if (margin < -1e-12 * std::max(1.0, std::abs(up))) rep.passed = false;
  }
  rep.mean_margin = samples > 0 ? sum / samples : 0.0;
  return rep;
}

SpinMeasure::SpinMeasure(int dimension, std::vector<Atom> atoms)
    : dimension_(dimension), atoms_(std::move(atoms)) {
  if (dimension < 1) throw InvalidArgument("measure dimension must be at least 1");
  if (atoms_.empty()) throw InvalidArgument("measure has no atoms");
  double total = 0.0;
  for (const auto& a : atoms_) {
    if (a.point.size() != dimension) throw DimensionMismatch("atom dimension differs from measure");
    if (!(a.weight > 0.0) || !std::isfinite(a.weight))
      throw InvalidArgument("atom weights must be positive");
    if (!a.point.allFinite()) throw InvalidArgument("non-finite atom coordinate");
    total += a.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("atom weights do not sum to 1");
}

double SpinMeasure::support_radius() const {
  double r = 0.0;
  for (const auto& a : atoms_) r = std::max(r, a.point.norm());
  return r;
}

SpinMeasure SpinMeasure::permuted(const std::vector<int>& s) const {
  std::vector<Atom> out;
  for (const auto& a : atoms_) {
    Vector p(dimension_);
    for (int d = 0; d < dimension_; ++d) p(s[d]) = a.point(d);
    out.push_back({p, a.weight});
  }
  return SpinMeasure(dimension_, std::move(out));
}

bool SpinMeasure::is_permutation_invariant(double tol) const {
  for (const auto& s : all_permutations(dimension_)) {
    const SpinMeasure p = permuted(s);
    for (const auto& a : p.atoms_) {
      bool found = std::any_of(atoms_.begin(), atoms_.end(), [&](const Atom& b) {
        return (a.point - b.point).cwiseAbs().maxCoeff() <= tol && std::abs(a.weight - b.weight) <= tol;
      });
      if (!found) return false;
    }
  }
  return true;
}

std::optional<std::vector<SpinMeasure>> SpinMeasure::product_marginals(double tol) const {
  std::vector<std::vector<std::pair<double, double>>> marg(dimension_);
  for (const auto& a : atoms_)
    for (int d = 0; d < dimension_; ++d) {
      auto& m = marg[d];
      auto it = std::find_if(m.begin(), m.end(),
                             [&](const auto& v) { return std::abs(v.first - a.point(d)) <= tol; });
      if (it == m.end()) m.push_back({a.point(d), a.weight});
      else it->second += a.weight;
    }
  std::size_t count = 1;
  for (const auto& m : marg) count *= m.size();
  if (count != atoms_.size()) return std::nullopt;
  for (std::size_t i = 0; i < atoms_.size(); ++i)
    for (std::size_t j = i + 1; j < atoms_.size(); ++j)
      if ((atoms_[i].point - atoms_[j].point).cwiseAbs().maxCoeff() <= tol) return std::nullopt;
  for (const auto& a : atoms_) {
    double w = 1.0;
    for (int d = 0; d < dimension_; ++d)
      for (const auto& v : marg[d])
        if (std::abs(v.first - a.point(d)) <= tol) w *= v.second;
    if (std::abs(w - a.weight) > 1e-12) return std::nullopt;
  }
  std::vector<SpinMeasure> out;
  for (const auto& m : marg) {
    std::vector<Atom> atoms;
    double total = 0.0;
    for (const auto& v : m) total += v.second;
    for (const auto& v : m) atoms.push_back({Vector::Constant(1, v.first), v.second / total});
    out.emplace_back(1, std::move(atoms));
  }
  return out;
}

SpinMeasure ising_measure(int D) {
  std::vector<Atom> atoms;
  const int n = 1 << D;
  for (int k = 0; k < n; ++k) {
    Vector p(D);
    for (int d = 0; d < D; ++d) p(d) = (k >> (D - 1 - d)) & 1 ? 1.0 : -1.0;
    atoms.push_back({p, 1.0 / n});
  }
  return SpinMeasure(D, std::move(atoms));
}

SpinMeasure potts_measure(int D) {
  std::vector<Atom> atoms;
  for (int d = 0; d < D; ++d) atoms.push_back({Vector::Unit(D, d), 1.0 / D});
  return SpinMeasure(D, std::move(atoms));
}

void ModelInstance::validate() const {
  if (covariance.dimension() != measure.dimension())
    throw DimensionMismatch("covariance and measure dimensions differ");
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("t must be finite and nonnegative");
}

ModelInstance potts_model(int D) {
  if (D < 2) throw InvalidArgument("potts preset needs D >= 2");
  std::vector<Monomial> ms;
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) ms.push_back({{{a, b}, {a, b}}, 1.0});
  return {CovarianceSpec(D, ms), potts_measure(D), 0.0, "potts(" + std::to_string(D) + ")"};
}

ModelInstance sk_model() {
  return {CovarianceSpec(1, {{{{0, 0}, {0, 0}}, 1.0}}), ising_measure(1), 0.0, "sk"};
}

ModelInstance bp_sk_model(double alpha) {
  if (!(alpha >= 0.0)) throw InvalidArgument("bp_sk alpha must be nonnegative");
  std::vector<Monomial> ms = {{{{0, 0}, {0, 0}}, alpha / 2},
                              {{{1, 1}, {1, 1}}, alpha / 2},
                              {{{0, 0}, {1, 1}}, 1.0}};
  char buf[64];
  std::snprintf(buf, sizeof buf, "bp_sk(%g)", alpha);
  return {CovarianceSpec(2, ms), ising_measure(2), 0.0, buf};
}

ModelInstance ising_diag_model(int D, const std::vector<double>& coeffs) {
  if (D < 1) throw InvalidArgument("ising_diag needs D >= 1");
  std::vector<Monomial> ms;
  for (std::size_t p = 1; p <= coeffs.size(); ++p) {
    const double c = coeffs[p - 1];
    if (c == 0.0) continue;
    std::size_t total = 1;
    for (std::size_t k = 0; k < p; ++k) total *= D;
    const double w = c / static_cast<double>(total);
    for (std::size_t code = 0; code < total; ++code) {
      Monomial m{{}, w};
      std::size_t r = code;
      for (std::size_t k = 0; k < p; ++k, r /= D) {
        int d = static_cast<int>(r % D);
        m.entries.push_back({d, d});
      }
      ms.push_back(std::move(m));
    }
  }
  std::string name = "ising_diag(" + std::to_string(D);
  for (double c : coeffs) {
    char buf[32];
    std::snprintf(buf, sizeof buf, ",%g", c);
    name += buf;
  }
  return {CovarianceSpec(D, ms), ising_measure(D), 0.0, name + ")"};
}

ModelInstance counterexample_model() {
  std::vector<Monomial> ms = {{{{0, 0}, {0, 0}, {1, 1}}, 1.0}, {{{0, 0}, {1, 1}, {1, 1}}, 1.0}};
  return {CovarianceSpec(2, ms, true), ising_measure(2), 0.0, "counterexample"};
}

}  // namespace parisi
