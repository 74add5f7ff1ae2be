#include "eggsep/latent_mixtures.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "eggsep/graph.hpp"
#include "eggsep/training.hpp"

namespace eggsep {

void LmConfig::validate() const {
    if (latent_dim == 0 || stage1_epochs == 0 || stage2_epochs == 0 || infer_steps == 0 ||
        batch_size == 0)
        throw std::invalid_argument("lm config: all counts must be positive");
    if (code_lr <= 0.0 || weight_lr <= 0.0) throw std::invalid_argument("lm config: lrs must be positive");
}

GloResult train_glo(const std::vector<Tensor>& samples, const LmConfig& cfg) {
    cfg.validate();
    if (samples.empty()) throw std::invalid_argument("train_glo: no samples");
    Rng rng(cfg.seed);

    GloResult out;
    AdamConfig weight_adam;
    weight_adam.lr = cfg.weight_lr;
    AdamConfig code_adam;
    code_adam.lr = cfg.code_lr;
    out.generator =
        make_generator_model(samples.front().shape, cfg.latent_dim, cfg.hidden, rng, weight_adam);
    out.codes = make_latent_table(samples.size(), cfg.latent_dim, rng, code_adam);

    // step decay for the last quarter: settles the L1/Adam oscillation
    const std::size_t decay_at = (cfg.stage1_epochs * 3) / 4;
    for (std::size_t epoch = 0; epoch < cfg.stage1_epochs; ++epoch) {
        if (epoch == decay_at) {
            out.generator.opt.cfg.lr = cfg.weight_lr * 0.1;
            out.codes.cfg.lr = cfg.code_lr * 0.1;
        }
        std::vector<std::size_t> order = iota_indices(samples.size());
        shuffle_indices(order, rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::vector<std::size_t> ids(order.begin() + start, order.begin() + end);
            Graph g;
            const Graph::Id z = g.param(out.codes.gather(ids));
            const Graph::Id target = g.input(gather_batch(samples, ids));
            const MlpGraph net = mlp_forward(g, out.generator.net, z);
            const Graph::Id loss = g.l1(net.out, target);
            const double batch_loss = g.value(loss).data[0];
            if (!std::isfinite(batch_loss)) throw std::runtime_error("train_glo: non-finite loss");
            g.backward(loss);
            out.generator.opt.step(out.generator.net, g, net);
            out.codes.apply_grads(ids, g.grad(z));
            loss_sum += batch_loss * static_cast<double>(ids.size());
        }
        out.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
    }
    return out;
}

namespace {

std::size_t nearest_by_l1(const Tensor& y, const std::vector<Tensor>& candidates) {
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        double d = 0.0;
        for (std::size_t i = 0; i < y.numel(); ++i) d += std::abs(y.data[i] - candidates[j].data[i]);
        if (d < best_dist) {
            best_dist = d;
            best = j;
        }
    }
    return best;
}

}  // namespace

void train_lm_stage2(LmModel& model, const std::vector<Tensor>& observed_b,
                     const std::vector<Tensor>& mixtures_y, const LmConfig& cfg) {
    cfg.validate();
    if (mixtures_y.empty()) throw std::invalid_argument("train_lm_stage2: no mixtures");
    Rng rng(Rng(cfg.seed).next_u64() ^ 0x5f2d6a3cull);

    AdamConfig weight_adam;
    weight_adam.lr = cfg.weight_lr;
    AdamConfig code_adam;
    code_adam.lr = cfg.code_lr;
    model.g_x = make_generator_model(mixtures_y.front().shape, cfg.latent_dim, cfg.hidden, rng,
                                     weight_adam);

    // z_y^B warm start: the stage-1 code of the closest observed sample
    model.codes_y_b = make_latent_table(mixtures_y.size(), cfg.latent_dim, rng, code_adam);
    for (std::size_t i = 0; i < mixtures_y.size(); ++i)
        model.codes_y_b.codes[i] = model.codes_b.codes.at(nearest_by_l1(mixtures_y[i], observed_b));
    model.codes_y_x = make_latent_table(mixtures_y.size(), cfg.latent_dim, rng, code_adam);

    const std::size_t decay_at = (cfg.stage2_epochs * 3) / 4;
    for (std::size_t epoch = 0; epoch < cfg.stage2_epochs; ++epoch) {
        if (epoch == decay_at) {
            model.g_x.opt.cfg.lr = cfg.weight_lr * 0.1;
            model.codes_y_b.cfg.lr = cfg.code_lr * 0.1;
            model.codes_y_x.cfg.lr = cfg.code_lr * 0.1;
        }
        std::vector<std::size_t> order = iota_indices(mixtures_y.size());
        shuffle_indices(order, rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::vector<std::size_t> ids(order.begin() + start, order.begin() + end);
            Graph g;
            const Graph::Id z_b = g.param(model.codes_y_b.gather(ids));
            const Graph::Id z_x = g.param(model.codes_y_x.gather(ids));
            const Graph::Id target = g.input(gather_batch(mixtures_y, ids));
            const MlpGraph net_b = mlp_forward(g, model.g_b.net, z_b);  // frozen: grads unused
            const MlpGraph net_x = mlp_forward(g, model.g_x.net, z_x);
            const Graph::Id recon = g.add(net_b.out, net_x.out);
            const Graph::Id loss = g.l1(recon, target);
            const double batch_loss = g.value(loss).data[0];
            if (!std::isfinite(batch_loss)) throw std::runtime_error("train_lm_stage2: non-finite loss");
            g.backward(loss);
            model.g_x.opt.step(model.g_x.net, g, net_x);
            model.codes_y_b.apply_grads(ids, g.grad(z_b));
            model.codes_y_x.apply_grads(ids, g.grad(z_x));
            loss_sum += batch_loss * static_cast<double>(ids.size());
        }
        model.stage2_loss.push_back(loss_sum / static_cast<double>(order.size()));
    }
}

LmModel train_lm(const std::vector<Tensor>& observed_b, const std::vector<Tensor>& mixtures_y,
                 const LmConfig& cfg) {
    LmModel model;
    GloResult stage1 = train_glo(observed_b, cfg);
    model.g_b = std::move(stage1.generator);
    model.codes_b = std::move(stage1.codes);
    model.stage1_loss = std::move(stage1.epoch_loss);
    train_lm_stage2(model, observed_b, mixtures_y, cfg);
    return model;
}

std::vector<LmInference> lm_infer_batch(const std::vector<Tensor>& ys, const GeneratorModel& g_b,
                                        const GeneratorModel& g_x, std::size_t steps, double code_lr,
                                        std::uint64_t seed) {
    if (ys.empty()) throw std::invalid_argument("lm_infer: no mixtures");
    if (steps == 0) throw std::invalid_argument("lm_infer: steps must be >= 1");
    Rng rng(seed);
    AdamConfig code_adam;
    code_adam.lr = code_lr;
    LatentTable z_b = make_latent_table(ys.size(), g_b.latent_dim, rng, code_adam);
    LatentTable z_x = make_latent_table(ys.size(), g_x.latent_dim, rng, code_adam);
    const std::vector<std::size_t> ids = iota_indices(ys.size());
    const Tensor target_all = gather_batch(ys, ids);

    double last_loss = 0.0;
    const std::size_t decay_at = (steps * 3) / 4;
    for (std::size_t s = 0; s < steps; ++s) {
        if (s == decay_at) {
            z_b.cfg.lr = code_lr * 0.1;
            z_x.cfg.lr = code_lr * 0.1;
        }
        Graph g;
        const Graph::Id zb = g.param(z_b.gather(ids));
        const Graph::Id zx = g.param(z_x.gather(ids));
        const Graph::Id target = g.input(target_all);
        const MlpGraph net_b = mlp_forward(g, g_b.net, zb);
        const MlpGraph net_x = mlp_forward(g, g_x.net, zx);
        const Graph::Id loss = g.l1(g.add(net_b.out, net_x.out), target);
        last_loss = g.value(loss).data[0];
        if (!std::isfinite(last_loss)) throw std::runtime_error("lm_infer: non-finite loss");
        g.backward(loss);
        z_b.apply_grads(ids, g.grad(zb));
        z_x.apply_grads(ids, g.grad(zx));
    }
    (void)last_loss;

    std::vector<LmInference> out;
    out.reserve(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) {
        LmInference inf;
        inf.z_b = z_b.codes[i];
        inf.z_x = z_x.codes[i];
        inf.b_est = g_b(inf.z_b);
        inf.x_est = g_x(inf.z_x);
        inf.b_est.shape = ys[i].shape;
        inf.x_est.shape = ys[i].shape;
        double l1 = 0.0;
        for (std::size_t k = 0; k < ys[i].numel(); ++k)
            l1 += std::abs(inf.b_est.data[k] + inf.x_est.data[k] - ys[i].data[k]);
        inf.recon_l1 = l1 / static_cast<double>(ys[i].numel());
        out.push_back(std::move(inf));
    }
    return out;
}

LmInference lm_infer(const Tensor& y, const GeneratorModel& g_b, const GeneratorModel& g_x,
                     std::size_t steps, double code_lr, std::uint64_t seed) {
    return lm_infer_batch({y}, g_b, g_x, steps, code_lr, seed).front();
}

Tensor lmm_mask(const Tensor& b_est, const Tensor& x_est) {
    if (!b_est.same_shape(x_est))
        throw std::invalid_argument("lmm_mask: shape mismatch " + b_est.shape_str() + " vs " +
                                    x_est.shape_str());
    Tensor m(b_est.shape);
    for (std::size_t i = 0; i < m.numel(); ++i) {
        if (b_est.data[i] < 0.0 || x_est.data[i] < 0.0)
            throw std::invalid_argument("lmm_mask: negative source estimate");
        m.data[i] = b_est.data[i] / (b_est.data[i] + x_est.data[i] + 1e-8);
    }
    return m;
}

Tensor bilinear_upsample(const Tensor& m, std::size_t out_h, std::size_t out_w) {
    if (m.rank() != 2) throw std::invalid_argument("bilinear_upsample: input must be 2-D");
    const std::size_t h = m.rows(), w = m.cols();
    if (out_h < h || out_w < w)
        throw std::invalid_argument("bilinear_upsample: target smaller than source shape");
    if (out_h == h && out_w == w) return m;

    Tensor out({out_h, out_w});
    const double sy = out_h > 1 ? static_cast<double>(h - 1) / static_cast<double>(out_h - 1) : 0.0;
    const double sx = out_w > 1 ? static_cast<double>(w - 1) / static_cast<double>(out_w - 1) : 0.0;
    for (std::size_t i = 0; i < out_h; ++i) {
        const double fy = static_cast<double>(i) * sy;
        const std::size_t y0 = std::min(h - 1, static_cast<std::size_t>(std::floor(fy)));
        const std::size_t y1 = std::min(h - 1, y0 + 1);
        const double ty = fy - static_cast<double>(y0);
        for (std::size_t j = 0; j < out_w; ++j) {
            const double fx = static_cast<double>(j) * sx;
            const std::size_t x0 = std::min(w - 1, static_cast<std::size_t>(std::floor(fx)));
            const std::size_t x1 = std::min(w - 1, x0 + 1);
            const double tx = fx - static_cast<double>(x0);
            const double top = m.at(y0, x0) * (1.0 - tx) + m.at(y0, x1) * tx;
            const double bot = m.at(y1, x0) * (1.0 - tx) + m.at(y1, x1) * tx;
            out.at(i, j) = top * (1.0 - ty) + bot * ty;
        }
    }
    return out;
}

std::vector<Tensor> lmm_init_for_nes(const SeparationDataset& ds, const LmModel& model) {
    if (model.codes_y_b.size() != ds.mixtures_y.size())
        throw std::invalid_argument("lmm_init_for_nes: stage-2 codes do not match mixture count");
    const std::vector<std::size_t>& target = ds.sample_shape;
    if (target.size() != 2) throw std::invalid_argument("lmm_init_for_nes: dataset samples must be 2-D");

    std::vector<Tensor> x0;
    x0.reserve(ds.mixtures_y.size());
    for (std::size_t i = 0; i < ds.mixtures_y.size(); ++i) {
        const Tensor b_est = model.g_b(model.codes_y_b.codes[i]);
        const Tensor x_est = model.g_x(model.codes_y_x.codes[i]);
        Tensor m = lmm_mask(b_est, x_est);
        if (m.shape != target) m = bilinear_upsample(m, target[0], target[1]);
        const Tensor& y = ds.mixtures_y[i];
        Tensor x(y.shape);
        for (std::size_t k = 0; k < y.numel(); ++k) x.data[k] = y.data[k] * (1.0 - m.data[k]);
        x0.push_back(std::move(x));
    }
    return x0;
}

}  // namespace eggsep
