#pragma once

#include <vector>

#include "eggsep/models.hpp"
#include "eggsep/rng.hpp"
#include "eggsep/tensor.hpp"

namespace eggsep {

// Copy the selected samples (flattened) into a [batch x n] matrix.
Tensor gather_batch(const std::vector<Tensor>& samples, const std::vector<std::size_t>& ids);

// Deterministic Fisher-Yates shuffle.
void shuffle_indices(std::vector<std::size_t>& ids, Rng& rng);

std::vector<std::size_t> iota_indices(std::size_t n);

struct MaskTrainOptions {
    std::size_t epochs = 25;
    std::size_t batch_size = 32;
    double lr = 0.001;
    std::vector<std::size_t> hidden = {512, 512};
};

struct TrainedMask {
    MaskModel model;
    std::vector<double> epoch_loss;
};

// Supervised mask regression: initializes a fresh mask network and minimizes
// mean L1(y .* m(y), b) over the given pairs with Adam. Throws on a
// non-finite loss.
TrainedMask train_mask(const std::vector<Tensor>& ys, const std::vector<Tensor>& bs,
                       const MaskTrainOptions& opt, Rng& rng);

// One optimization epoch over an existing model; returns the mean loss.
double train_mask_epoch(MaskModel& model, const std::vector<Tensor>& ys, const std::vector<Tensor>& bs,
                        std::size_t batch_size, Rng& rng);

}  // namespace eggsep
