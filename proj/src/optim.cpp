#include "eggsep/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace eggsep {

void adam_step(Tensor& param, const Tensor& grad, AdamState& state, const AdamConfig& cfg) {
    if (cfg.lr <= 0.0) throw std::invalid_argument("adam_step: lr must be positive");
    if (!grad.same_shape(param))
        throw std::invalid_argument("adam_step: gradient shape " + grad.shape_str() +
                                    " does not match parameter " + param.shape_str());
    ensure_finite(grad, "adam_step gradient");

    if (state.t == 0) {
        state.m = Tensor::zeros(param.shape);
        state.v = Tensor::zeros(param.shape);
    }
    state.t += 1;
    const double b1t = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double b2t = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < param.numel(); ++i) {
        const double g = grad.data[i];
        state.m.data[i] = cfg.beta1 * state.m.data[i] + (1.0 - cfg.beta1) * g;
        state.v.data[i] = cfg.beta2 * state.v.data[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = state.m.data[i] / b1t;
        const double vhat = state.v.data[i] / b2t;
        param.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

Tensor project_unit_ball(const Tensor& z) {
    Tensor out = z;
    project_unit_ball_inplace(out);
    return out;
}

void project_unit_ball_inplace(Tensor& z) {
    const double n = z.norm2();
    if (n <= 1.0) return;
    for (double& v : z.data) v /= n;
}

}  // namespace eggsep
