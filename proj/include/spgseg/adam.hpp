#pragma once

#include <cstddef>

#include "spgseg/model.hpp"

namespace spgseg {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
  bool operator==(const AdamConfig&) const = default;
};

/// Adam with bias correction over every tensor of ModelParams.
class Adam {
 public:
  Adam(const ModelParams& like, AdamConfig cfg);

  void step(ModelParams& params, const ModelParams& grads, double learning_rate);
  std::size_t steps() const { return steps_; }

 private:
  AdamConfig cfg_;
  ModelParams first_;
  ModelParams second_;
  std::size_t steps_ = 0;
};

}  // namespace spgseg
