#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eggsep/graph.hpp"
#include "eggsep/optim.hpp"
#include "eggsep/rng.hpp"
#include "eggsep/tensor.hpp"

namespace eggsep {

enum class Activation : std::uint8_t { relu, sigmoid, linear };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& s);

struct DenseLayer {
    Tensor w;  // [in x out]
    Tensor b;  // [out]
};

// Plain fully-connected network. out_scale multiplies the final activation
// (generators use it to map a sigmoid onto the source value range).
struct Mlp {
    std::vector<DenseLayer> layers;
    std::vector<Activation> acts;  // one per layer
    double out_scale = 1.0;

    std::size_t in_dim() const;
    std::size_t out_dim() const;
    std::size_t param_count() const;
};

// Glorot-uniform weights, zero biases; deterministic per rng state.
Mlp make_mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
             Activation hidden_act, Activation out_act, Rng& rng, double out_scale = 1.0);

// Tape forward; params lists (w, b) node ids per layer for gradient readout.
struct MlpGraph {
    Graph::Id out = -1;
    std::vector<std::array<Graph::Id, 2>> params;
};
MlpGraph mlp_forward(Graph& g, const Mlp& net, Graph::Id x);

// Inference-only forward (no tape). x is [batch x in] or [in].
Tensor mlp_eval(const Mlp& net, const Tensor& x);

struct MlpOptimizer {
    AdamConfig cfg;
    std::vector<AdamState> states;  // 2 per layer: w then b

    void reset(const Mlp& net);
    void step(Mlp& net, const Graph& g, const MlpGraph& nodes);
};

// ---- masking ----

// b_hat = y .* m, x_hat = y - b_hat. Requires m in [0,1]; the identity
// b_hat + x_hat = y holds exactly by construction.
std::pair<Tensor, Tensor> mask_apply(const Tensor& y, const Tensor& m);

// Mask network: flattened sample -> hidden (relu) -> sample-sized sigmoid.
struct MaskModel {
    std::vector<std::size_t> sample_shape;
    Mlp net;
    MlpOptimizer opt;

    Tensor operator()(const Tensor& y) const;  // mask for one sample or a [batch x n] matrix
};

MaskModel make_mask_model(const std::vector<std::size_t>& sample_shape,
                          const std::vector<std::size_t>& hidden, Rng& rng, const AdamConfig& adam);

// Generator: latent vector -> hidden (relu) -> sample-sized sigmoid * out_scale.
struct GeneratorModel {
    std::vector<std::size_t> sample_shape;
    std::size_t latent_dim = 0;
    Mlp net;
    MlpOptimizer opt;

    Tensor operator()(const Tensor& z) const;  // [d] or [batch x d] -> flat output
};

GeneratorModel make_generator_model(const std::vector<std::size_t>& sample_shape, std::size_t latent_dim,
                                    const std::vector<std::size_t>& hidden, Rng& rng,
                                    const AdamConfig& adam, double out_scale = 1.0);

// Discriminator: flattened sample -> hidden (relu) -> scalar, linear output.
// Carries one persistent power-iteration vector per layer for spectral norm.
struct DiscriminatorModel {
    Mlp net;
    MlpOptimizer opt;
    std::vector<Tensor> sn_u;

    // Rescales every weight matrix in place to unit spectral norm (one power
    // iteration per call against the persistent u vectors).
    void normalize_weights(int power_iters = 1);
};

DiscriminatorModel make_discriminator_model(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                                            Rng& rng, const AdamConfig& adam);

// weight / sigma_hat with sigma_hat estimated by power iteration; u persists
// across calls set to the current left singular vector estimate.
struct SpectralNormResult {
    Tensor w;
    double sigma = 0.0;
};
SpectralNormResult spectral_normalize(const Tensor& w, int power_iters, Tensor& u);

// ---- per-sample latent codes ----

// Every stored code satisfies ||z||_2 <= 1; projection is applied after each
// optimizer step. Rows own independent Adam states.
struct LatentTable {
    std::vector<Tensor> codes;
    std::vector<AdamState> states;
    AdamConfig cfg;

    std::size_t size() const { return codes.size(); }
    std::size_t dim() const { return codes.empty() ? 0 : codes.front().numel(); }

    Tensor gather(const std::vector<std::size_t>& ids) const;  // [batch x d]
    // Adam step + unit-ball projection for the gathered rows; grads is [batch x d].
    void apply_grads(const std::vector<std::size_t>& ids, const Tensor& grads);
    bool all_in_unit_ball(double tol = 1e-12) const;
};

// Codes drawn from N(0, 0.1^2/d) then projected into the unit ball.
LatentTable make_latent_table(std::size_t n, std::size_t d, Rng& rng, const AdamConfig& adam);

// ---- checkpoints: one JSON manifest line, then the tensors as EGT1 records ----

void save_mlp_checkpoint(const Mlp& net, const std::string& path, std::uint64_t seed);
Mlp load_mlp_checkpoint(const std::string& path);

}  // namespace eggsep
