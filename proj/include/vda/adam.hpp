#pragma once

#include <cstddef>
#include <vector>

#include "vda/tensor.hpp"

namespace vda {

// Adam with linear warmup over the first warmup_steps, constant lr after.
// Effective lr at step t (0-based) during warmup is base_lr * (t+1) / warmup_steps.
class Adam {
public:
    Adam(std::vector<Tensor*> params, double base_lr, std::size_t warmup_steps,
         double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    // Applies one update from the accumulated grads, zeroes them and
    // advances the schedule. State error if a parameter has no grad buffer.
    void step();

    double current_lr() const;  // lr that the next step() will use
    std::size_t steps_taken() const { return step_; }

private:
    std::vector<Tensor*> params_;
    std::vector<std::vector<double>> m_, v_;
    double base_lr_, beta1_, beta2_, eps_;
    std::size_t warmup_steps_;
    std::size_t step_ = 0;
};

}  // namespace vda
