// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "snet/numerics.hpp"

namespace snet {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias-corrected moment estimates. Moment matrices mirror the
// parameter shapes and are float-stored like every other tensor.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamConfig cfg) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  std::uint64_t steps() const { return t_; }

  // theta <- theta - lr * m_hat / (sqrt(v_hat) + eps), per parameter entry.
  void step(const NamedParams& params, const GradMap& grads);

 private:
  AdamConfig cfg_;
  std::map<std::string, Matrix> first_moment_;
  std::map<std::string, Matrix> second_moment_;
  std::uint64_t t_ = 0;
};

}  // namespace snet
