#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "parisi/cascade.hpp"
#include "parisi/model.hpp"

namespace parisi {

// Rejected: the model fails a precondition of the check (formal
// coefficients, nonconvexity, odd degree under signs), which is the expected
// outcome rather than a violation.
enum class CheckStatus { Pass, Fail, Skip, Rejected };
std::string to_string(CheckStatus s);

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Skip;
  double tolerance = 0.0;
  double margin = 0.0;  // tolerance minus observed deviation; negative on failure
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool ok() const;
  int count(CheckStatus s) const;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  int samples = 20;
  QuadratureConfig quad;
};

// Every structural check that applies to the model, at seeds derived from
// opts.seed with tag "verify.<check name>".
VerifyReport verify_model(const ModelInstance& model, const VerifyOptions& opts = {});

}  // namespace parisi
