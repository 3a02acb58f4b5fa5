#include "parisi/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "parisi/error.hpp"

namespace parisi {
namespace {

// Golub–Welsch: nodes are the eigenvalues of the Jacobi matrix, weights the
// squared first components of its eigenvectors times the total mass.
GaussRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, double mass) {
  const Eigen::Index n = diag.size();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) j(i, i) = diag(i);
  for (Eigen::Index i = 0; i + 1 < n; ++i) j(i, i + 1) = j(i + 1, i) = off(i);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    rule.weights[i] = mass * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
    total += rule.weights[i];
  }
  for (auto& w : rule.weights) w *= mass / total;
  return rule;
}

GaussRule make_hermite(int n) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n), off(n > 1 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
  GaussRule r = golub_welsch(diag, off, 1.0);
  // Enforce exact symmetry of the rule.
  for (int i = 0; i < n / 2; ++i) {
    double x = 0.5 * (r.nodes[n - 1 - i] - r.nodes[i]);
    double w = 0.5 * (r.weights[i] + r.weights[n - 1 - i]);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

GaussRule make_legendre(int n) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n), off(n > 1 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  GaussRule r = golub_welsch(diag, off, 2.0);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = 0.5 * (r.nodes[i] + 1.0);
    r.weights[i] *= 0.5;
  }
  return r;
}

const GaussRule& cached(int n, bool hermite) {
  static std::mutex guard;
  static std::map<std::pair<int, bool>, std::unique_ptr<GaussRule>> cache;
  if (n < 1) throw InvalidArgument("quadrature rule needs at least one node");
  std::lock_guard<std::mutex> lock(guard);
  auto& slot = cache[{n, hermite}];
  if (!slot) slot = std::make_unique<GaussRule>(hermite ? make_hermite(n) : make_legendre(n));
  return *slot;
}

}  // namespace

const GaussRule& gauss_hermite(int n) { return cached(n, true); }
const GaussRule& gauss_legendre(int n) { return cached(n, false); }

}  // namespace parisi
