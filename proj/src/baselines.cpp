#include "eggsep/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "eggsep/graph.hpp"

namespace eggsep {

namespace {

constexpr double kTinyDenom = 1e-12;

void check_nonnegative(const Tensor& t, const char* what) {
    for (double v : t.data)
        if (v < 0.0) throw std::invalid_argument(std::string(what) + ": negative input");
}

Tensor positive_random(std::size_t r, std::size_t c, Rng& rng) {
    Tensor t({r, c});
    for (double& v : t.data) v = rng.uniform(0.1, 1.0);
    return t;
}

// H <- H .* (D W^T) ./ (H W W^T + sparsity/2 + tiny). The sparsity/2 term
// makes the multiplicative rule the MM step for ||D - HW||_F^2 + s*sum(H).
// Restricting the update to a column block is still a monotone MM step.
void update_h_block(Tensor& h, const Tensor& data, const Tensor& w, double sparsity,
                    std::size_t col_lo, std::size_t col_hi) {
    const Tensor numer = matmul(data, transpose(w));
    const Tensor gram = matmul(w, transpose(w));
    const Tensor denom = matmul(h, gram);
    const std::size_t cols = h.cols();
    for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t j = col_lo; j < col_hi; ++j) {
            const std::size_t k = i * cols + j;
            h.data[k] *= numer.data[k] / (denom.data[k] + 0.5 * sparsity + kTinyDenom);
        }
}

void update_h(Tensor& h, const Tensor& data, const Tensor& w, double sparsity) {
    update_h_block(h, data, w, sparsity, 0, h.cols());
}

// W <- W .* (H^T D) ./ (H^T H W + tiny), restricted to the rows [lo, hi) of W.
void update_w_rows(Tensor& w, const Tensor& h, const Tensor& data, std::size_t lo, std::size_t hi) {
    const Tensor numer = matmul_tn(h, data);             // [l_total x d]
    const Tensor denom = matmul_tn(h, matmul(h, w));     // [l_total x d]
    const std::size_t d = w.cols();
    for (std::size_t r = lo; r < hi; ++r)
        for (std::size_t j = 0; j < d; ++j) {
            const std::size_t k = r * d + j;
            w.data[k] *= numer.data[k] / (denom.data[k] + kTinyDenom);
        }
}

std::vector<Tensor> rows_as_samples(const Tensor& m, const std::vector<std::size_t>& sample_shape) {
    std::vector<Tensor> out;
    out.reserve(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        Tensor t(sample_shape);
        std::copy(m.data.begin() + i * m.cols(), m.data.begin() + (i + 1) * m.cols(), t.data.begin());
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

double nmf_objective(const Tensor& data, const Tensor& h, const Tensor& w, double sparsity) {
    const Tensor recon = matmul(h, w);
    double frob = 0.0;
    for (std::size_t i = 0; i < data.numel(); ++i) {
        const double d = data.data[i] - recon.data[i];
        frob += d * d;
    }
    double l1 = 0.0;
    for (double v : h.data) l1 += v;
    return frob + sparsity * l1;
}

NmfFactorization nmf_train_bases(const Tensor& stacked, std::size_t l, double sparsity,
                                 std::size_t iters, Rng& rng) {
    if (stacked.rank() != 2) throw std::invalid_argument("nmf_train_bases: data must be [n x d]");
    check_nonnegative(stacked, "nmf_train_bases");
    if (l == 0) throw std::invalid_argument("nmf_train_bases: l must be >= 1");

    NmfFactorization f;
    f.h = positive_random(stacked.rows(), l, rng);
    f.w = positive_random(l, stacked.cols(), rng);
    f.objective.push_back(nmf_objective(stacked, f.h, f.w, sparsity));
    for (std::size_t it = 0; it < iters; ++it) {
        update_h(f.h, stacked, f.w, sparsity);
        update_w_rows(f.w, f.h, stacked, 0, l);
        f.objective.push_back(nmf_objective(stacked, f.h, f.w, sparsity));
    }
    return f;
}

namespace {

NmfSeparation nmf_mixture_stage(const Tensor& stacked_y, const Tensor& w_b, const Tensor* w_x_init,
                                double sparsity, std::size_t iters, Rng& rng,
                                const std::vector<std::size_t>& sample_shape, bool learn_w_x) {
    if (stacked_y.rank() != 2) throw std::invalid_argument("nmf: mixtures must be [n x d]");
    check_nonnegative(stacked_y, "nmf mixtures");
    const std::size_t l = w_b.rows();
    const std::size_t d = w_b.cols();
    if (stacked_y.cols() != d)
        throw std::invalid_argument("nmf: mixture dim " + std::to_string(stacked_y.cols()) +
                                    " does not match bases dim " + std::to_string(d));

    // stacked bases [2l x d]: W_b rows frozen, W_x rows free
    Tensor w({2 * l, d});
    std::copy(w_b.data.begin(), w_b.data.end(), w.data.begin());
    if (w_x_init) {
        if (w_x_init->rows() != l || w_x_init->cols() != d)
            throw std::invalid_argument("nmf: W_x shape mismatch");
        std::copy(w_x_init->data.begin(), w_x_init->data.end(), w.data.begin() + l * d);
    } else {
        const Tensor w_x = positive_random(l, d, rng);
        std::copy(w_x.data.begin(), w_x.data.end(), w.data.begin() + l * d);
    }

    NmfSeparation sep;
    // The observed-source activations warm up against the frozen W_b before
    // the residual block opens: everything W_b can explain is claimed first,
    // and H_x only grows where a residual remains. H_x starts cold.
    Tensor h = positive_random(stacked_y.rows(), 2 * l, rng);
    for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t j = l; j < 2 * l; ++j) h.data[i * 2 * l + j] *= 0.01;
    sep.objective.push_back(nmf_objective(stacked_y, h, w, sparsity));
    const std::size_t warm = std::max<std::size_t>(10, iters / 4);
    for (std::size_t it = 0; it < warm; ++it) {
        update_h_block(h, stacked_y, w, sparsity, 0, l);
        sep.objective.push_back(nmf_objective(stacked_y, h, w, sparsity));
    }
    for (std::size_t it = 0; it < iters; ++it) {
        update_h(h, stacked_y, w, sparsity);
        if (learn_w_x) update_w_rows(w, h, stacked_y, l, 2 * l);
        sep.objective.push_back(nmf_objective(stacked_y, h, w, sparsity));
    }

    const std::size_t n = stacked_y.rows();
    sep.h_b = Tensor({n, l});
    sep.h_x = Tensor({n, l});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < l; ++k) {
            sep.h_b.data[i * l + k] = h.data[i * 2 * l + k];
            sep.h_x.data[i * l + k] = h.data[i * 2 * l + l + k];
        }
    sep.w_x = Tensor({l, d});
    std::copy(w.data.begin() + l * d, w.data.end(), sep.w_x.data.begin());
    sep.b_est = rows_as_samples(matmul(sep.h_b, w_b), sample_shape);
    sep.x_est = rows_as_samples(matmul(sep.h_x, sep.w_x), sample_shape);
    return sep;
}

}  // namespace

NmfSeparation nmf_separate(const Tensor& stacked_y, const Tensor& w_b, double sparsity,
                           std::size_t iters, Rng& rng,
                           const std::vector<std::size_t>& sample_shape) {
    return nmf_mixture_stage(stacked_y, w_b, nullptr, sparsity, iters, rng, sample_shape, true);
}

NmfSeparation nmf_infer(const Tensor& stacked_y, const Tensor& w_b, const Tensor& w_x, double sparsity,
                        std::size_t iters, Rng& rng, const std::vector<std::size_t>& sample_shape) {
    return nmf_mixture_stage(stacked_y, w_b, &w_x, sparsity, iters, rng, sample_shape, false);
}

// ---- adversarial masking ----

void AmConfig::validate() const {
    if (mask_lr <= 0.0 || disc_lr <= 0.0) throw std::invalid_argument("am config: lrs must be positive");
    if (magnitude_weight < 0.0)
        throw std::invalid_argument("am config: magnitude prior weight must be >= 0");
    if (epochs == 0 || batch_size == 0)
        throw std::invalid_argument("am config: epochs and batch size must be >= 1");
}

AmResult am_train(const std::vector<Tensor>& observed_b, const std::vector<Tensor>& mixtures_y,
                  const AmConfig& cfg) {
    cfg.validate();
    if (observed_b.empty() || mixtures_y.empty())
        throw std::invalid_argument("am_train: empty training sets");
    Rng rng(cfg.seed);

    AdamConfig mask_adam;
    mask_adam.lr = cfg.mask_lr;
    AdamConfig disc_adam;
    disc_adam.lr = cfg.disc_lr;

    AmResult out;
    out.mask = make_mask_model(mixtures_y.front().shape, cfg.mask_hidden, rng, mask_adam);
    out.disc =
        make_discriminator_model(mixtures_y.front().numel(), cfg.disc_hidden, rng, disc_adam);

    const std::size_t per_epoch = std::max<std::size_t>(1, std::min(observed_b.size(), mixtures_y.size()) / cfg.batch_size);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> y_order = iota_indices(mixtures_y.size());
        std::vector<std::size_t> b_order = iota_indices(observed_b.size());
        shuffle_indices(y_order, rng);
        shuffle_indices(b_order, rng);

        double d_loss_sum = 0.0, m_loss_sum = 0.0;
        for (std::size_t step = 0; step < per_epoch; ++step) {
            std::vector<std::size_t> y_ids, b_ids;
            for (std::size_t k = 0; k < cfg.batch_size; ++k) {
                y_ids.push_back(y_order[(step * cfg.batch_size + k) % y_order.size()]);
                b_ids.push_back(b_order[(step * cfg.batch_size + k) % b_order.size()]);
            }
            const Tensor y_batch = gather_batch(mixtures_y, y_ids);
            const Tensor b_batch = gather_batch(observed_b, b_ids);
            const Tensor zeros = Tensor::zeros({y_ids.size(), 1});
            const Tensor ones = Tensor::full({y_ids.size(), 1}, 1.0);

            // discriminator step
            out.disc.normalize_weights(1);
            {
                Graph g;
                const Graph::Id y = g.input(y_batch);
                const Graph::Id b = g.input(b_batch);
                const MlpGraph mask_net = mlp_forward(g, out.mask.net, y);
                const Graph::Id fake = g.mul(y, mask_net.out);
                const MlpGraph d_fake = mlp_forward(g, out.disc.net, fake);
                const MlpGraph d_real = mlp_forward(g, out.disc.net, b);
                const Graph::Id loss =
                    g.add(g.mse(d_fake.out, g.input(zeros)), g.mse(d_real.out, g.input(ones)));
                const double v = g.value(loss).data[0];
                if (!std::isfinite(v)) throw std::runtime_error("am_train: non-finite discriminator loss");
                g.backward(loss);
                // two tape passes share the discriminator weights; combine grads
                for (std::size_t l = 0; l < out.disc.net.layers.size(); ++l) {
                    Tensor gw = add(g.grad(d_fake.params[l][0]), g.grad(d_real.params[l][0]));
                    Tensor gb = add(g.grad(d_fake.params[l][1]), g.grad(d_real.params[l][1]));
                    adam_step(out.disc.net.layers[l].w, gw, out.disc.opt.states[2 * l], disc_adam);
                    adam_step(out.disc.net.layers[l].b, gb, out.disc.opt.states[2 * l + 1], disc_adam);
                }
                d_loss_sum += v;
            }

            // mask step
            out.disc.normalize_weights(1);
            {
                Graph g;
                const Graph::Id y = g.input(y_batch);
                const MlpGraph mask_net = mlp_forward(g, out.mask.net, y);
                const Graph::Id fake = g.mul(y, mask_net.out);
                const MlpGraph d_fake = mlp_forward(g, out.disc.net, fake);
                Graph::Id loss = g.mse(d_fake.out, g.input(ones));
                if (cfg.magnitude_weight > 0.0) {
                    const Graph::Id mask_ones = g.input(Tensor::full(g.value(mask_net.out).shape, 1.0));
                    loss = g.add(loss, g.scale(g.l1(mask_net.out, mask_ones), cfg.magnitude_weight));
                }
                const double v = g.value(loss).data[0];
                if (!std::isfinite(v)) throw std::runtime_error("am_train: non-finite mask loss");
                g.backward(loss);
                out.mask.opt.step(out.mask.net, g, mask_net);
                m_loss_sum += v;
            }
        }
        out.disc_loss.push_back(d_loss_sum / static_cast<double>(per_epoch));
        out.mask_loss.push_back(m_loss_sum / static_cast<double>(per_epoch));
    }
    return out;
}

TrainedMask supervised_train(const std::vector<std::pair<Tensor, Tensor>>& pairs,
                             const SupervisedConfig& cfg) {
    if (pairs.empty()) throw std::invalid_argument("supervised_train: no pairs");
    std::vector<Tensor> ys, bs;
    ys.reserve(pairs.size());
    bs.reserve(pairs.size());
    for (const auto& [y, b] : pairs) {
        ys.push_back(y);
        bs.push_back(b);
    }
    MaskTrainOptions opt;
    opt.epochs = cfg.epochs;
    opt.batch_size = cfg.batch_size;
    opt.lr = cfg.lr;
    opt.hidden = cfg.hidden;
    Rng rng(cfg.seed);
    return train_mask(ys, bs, opt, rng);
}

}  // namespace eggsep
