#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace parisi {

std::uint64_t splitmix64(std::uint64_t x);

// Seed for a sub-task: mixes the master seed with a tag naming the command or
// module and an integer task index. Every random stream in the library is
// obtained this way, so a run is reproduced by its master seed alone.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index = 0);

// mt19937_64 with portable uniform/normal transforms (the std distributions
// are implementation-defined, which would break cross-machine reproducibility).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();  // in [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace parisi
