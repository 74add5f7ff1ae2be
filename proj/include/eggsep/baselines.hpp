#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "eggsep/models.hpp"
#include "eggsep/rng.hpp"
#include "eggsep/training.hpp"

namespace eggsep {

// The Const baseline: the mixture itself is the estimate for either source.
inline Tensor const_estimate(const Tensor& y) { return y; }

// ---- semi-supervised NMF ----

struct NmfConfig {
    std::size_t bases = 32;  // l per source
    double sparsity = 0.1;   // lambda_s, L1 weight on activations
    std::size_t train_iters = 200;
    std::size_t separate_iters = 200;
    std::uint64_t seed = 0;
};

struct NmfFactorization {
    Tensor w;  // [l x d]
    Tensor h;  // [n x l]
    std::vector<double> objective;  // ||B - HW||_F^2 + lambda * sum(H), per update round
};

// Multiplicative-update sparse NMF of non-negative row-stacked samples.
// The objective is non-increasing across update rounds.
NmfFactorization nmf_train_bases(const Tensor& stacked, std::size_t l, double sparsity,
                                 std::size_t iters, Rng& rng);

struct NmfSeparation {
    Tensor w_x;  // [l x d], learned on the mixtures (empty when frozen)
    Tensor h_b;  // [n x l]
    Tensor h_x;  // [n x l]
    std::vector<Tensor> b_est;
    std::vector<Tensor> x_est;
    std::vector<double> objective;
};

// Mixture-stage factorization Y ~ H_b W_b + H_x W_x with W_b frozen; learns
// W_x and both activation blocks.
NmfSeparation nmf_separate(const Tensor& stacked_y, const Tensor& w_b, double sparsity,
                           std::size_t iters, Rng& rng,
                           const std::vector<std::size_t>& sample_shape);

// Activation-only fit against frozen bases, for held-out mixtures.
NmfSeparation nmf_infer(const Tensor& stacked_y, const Tensor& w_b, const Tensor& w_x, double sparsity,
                        std::size_t iters, Rng& rng, const std::vector<std::size_t>& sample_shape);

double nmf_objective(const Tensor& data, const Tensor& h, const Tensor& w, double sparsity);

// ---- adversarial masking ----

struct AmConfig {
    double mask_lr = 0.001;
    double disc_lr = 0.001;
    double magnitude_weight = 0.1;  // weight of the L1(m(y), 1) prior
    std::size_t epochs = 60;
    std::size_t batch_size = 32;
    std::vector<std::size_t> mask_hidden = {512, 512};
    std::vector<std::size_t> disc_hidden = {512, 256};
    std::uint64_t seed = 0;

    void validate() const;
};

struct AmResult {
    MaskModel mask;
    DiscriminatorModel disc;
    std::vector<double> disc_loss;  // per epoch
    std::vector<double> mask_loss;
};

// Alternating LS-GAN: the discriminator drives masked mixtures toward 0 and
// real b samples toward 1; the mask minimizes (D(y.*m(y)) - 1)^2 plus the
// magnitude prior. Spectral norm is applied to the discriminator weights
// before every forward pass that follows a weight update.
AmResult am_train(const std::vector<Tensor>& observed_b, const std::vector<Tensor>& mixtures_y,
                  const AmConfig& cfg);

// ---- fully supervised upper bound ----

struct SupervisedConfig {
    std::size_t epochs = 250;
    double lr = 0.001;
    std::size_t batch_size = 32;
    std::vector<std::size_t> hidden = {512, 512};
    std::uint64_t seed = 0;
};

TrainedMask supervised_train(const std::vector<std::pair<Tensor, Tensor>>& pairs,  // (y, b)
                             const SupervisedConfig& cfg);

}  // namespace eggsep
