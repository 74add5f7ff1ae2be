#pragma once

#include <cstdint>

#include "eggsep/tensor.hpp"

namespace eggsep {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Per-parameter Adam moments; moment tensors shape-match the parameter and
// the step counter increases by exactly one per step.
struct AdamState {
    Tensor m;
    Tensor v;
    std::int64_t t = 0;
};

// Standard bias-corrected Adam update, applied in place.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state, const AdamConfig& cfg);

// z if ||z||_2 <= 1, else z / ||z||_2. Idempotent; the origin is a fixed point.
Tensor project_unit_ball(const Tensor& z);
void project_unit_ball_inplace(Tensor& z);

}  // namespace eggsep
