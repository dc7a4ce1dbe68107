#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nlnde/autodiff.hpp"

namespace nlnde {

struct NadamConfig {
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Global gradient-norm clip over the parameters of one step; <= 0 disables.
  double clip_norm = 5.0;
};

// Adam with a Nesterov lookahead on the first moment:
//   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2
//   theta -= lr (b1 m / (1 - b1^t) + (1 - b1) g / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
// Moments and the step counter are kept per parameter, so parameters that sit
// out a step (a different update group) neither move nor age.
class Nadam {
 public:
  explicit Nadam(NadamConfig config = {}) : config_(config) {}

  const NadamConfig& config() const { return config_; }

  // Updates the given parameters from their grad buffers, then zeroes them.
  // Throws DataError on a non-finite gradient (naming the parameter) and
  // ConfigError if a parameter changed shape since its last step.
  void step(const std::vector<ad::Parameter*>& params);

  std::uint64_t steps(const ad::Parameter& p) const;

 private:
  struct Slot {
    ad::Matrix m;
    ad::Matrix v;
    std::uint64_t t = 0;
  };
  NadamConfig config_;
  std::map<const ad::Parameter*, Slot> slots_;
};

// Scales the gradients in place so their joint L2 norm is at most max_norm;
// returns the norm before clipping.
double clip_global_norm(const std::vector<ad::Parameter*>& params, double max_norm);

}  // namespace nlnde
