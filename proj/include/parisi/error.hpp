#pragma once

#include <stdexcept>
#include <string>

namespace parisi {

// Base class for library failures. name() is the stable identifier the CLI
// prints; configuration problems are distinguished so they can map to exit 2.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what, bool config = false)
      : std::runtime_error(what), name_(std::move(name)), config_(config) {}
  const std::string& name() const noexcept { return name_; }
  bool is_config_error() const noexcept { return config_; }

 private:
  std::string name_;
  bool config_;
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& w) : Error("DimensionMismatch", w) {}
};
struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& w) : Error("InvalidArgument", w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("ConfigError", w, true) {}
};
struct TruncationHit : Error {
  explicit TruncationHit(const std::string& w) : Error("TruncationHit", w) {}
};
struct NonPSDInput : Error {
  explicit NonPSDInput(const std::string& w) : Error("NonPSDInput", w) {}
};
struct NonMonotonePath : Error {
  explicit NonMonotonePath(const std::string& w) : Error("NonMonotonePath", w) {}
};
struct FormalSpecRejected : Error {
  explicit FormalSpecRejected(const std::string& w) : Error("FormalSpecRejected", w) {}
};
struct BudgetExceeded : Error {
  explicit BudgetExceeded(const std::string& w) : Error("BudgetExceeded", w) {}
};
struct PreconditionViolated : Error {
  explicit PreconditionViolated(const std::string& w) : Error("PreconditionViolated", w) {}
};

struct NotPermutationInvariant : Error {
  NotPermutationInvariant(int level, double deviation, const std::string& w)
      : Error("NotPermutationInvariant", w), level(level), deviation(deviation) {}
  int level;
  double deviation;
};

}  // namespace parisi
