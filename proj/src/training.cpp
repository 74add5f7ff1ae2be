#include "eggsep/training.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace eggsep {

Tensor gather_batch(const std::vector<Tensor>& samples, const std::vector<std::size_t>& ids) {
    if (ids.empty()) throw std::invalid_argument("gather_batch: empty id list");
    const std::size_t n = samples.at(ids.front()).numel();
    Tensor out({ids.size(), n});
    for (std::size_t k = 0; k < ids.size(); ++k) {
        const Tensor& s = samples.at(ids[k]);
        if (s.numel() != n) throw std::invalid_argument("gather_batch: ragged sample sizes");
        std::copy(s.data.begin(), s.data.end(), out.data.begin() + k * n);
    }
    return out;
}

void shuffle_indices(std::vector<std::size_t>& ids, Rng& rng) {
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.index(i)]);
}

std::vector<std::size_t> iota_indices(std::size_t n) {
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    return ids;
}

double train_mask_epoch(MaskModel& model, const std::vector<Tensor>& ys, const std::vector<Tensor>& bs,
                        std::size_t batch_size, Rng& rng) {
    if (ys.size() != bs.size() || ys.empty())
        throw std::invalid_argument("train_mask_epoch: pair counts differ or empty");
    std::vector<std::size_t> order = iota_indices(ys.size());
    shuffle_indices(order, rng);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(order.size(), start + batch_size);
        const std::vector<std::size_t> ids(order.begin() + start, order.begin() + end);
        Graph g;
        const Graph::Id y = g.input(gather_batch(ys, ids));
        const Graph::Id target = g.input(gather_batch(bs, ids));
        const MlpGraph net = mlp_forward(g, model.net, y);
        const Graph::Id b_hat = g.mul(y, net.out);
        const Graph::Id loss = g.l1(b_hat, target);
        const double batch_loss = g.value(loss).data[0];
        if (!std::isfinite(batch_loss)) throw std::runtime_error("train_mask_epoch: non-finite loss");
        g.backward(loss);
        model.opt.step(model.net, g, net);
        loss_sum += batch_loss * static_cast<double>(ids.size());
        seen += ids.size();
    }
    return loss_sum / static_cast<double>(seen);
}

TrainedMask train_mask(const std::vector<Tensor>& ys, const std::vector<Tensor>& bs,
                       const MaskTrainOptions& opt, Rng& rng) {
    if (opt.epochs == 0) throw std::invalid_argument("train_mask: epochs must be >= 1");
    if (opt.batch_size == 0) throw std::invalid_argument("train_mask: batch size must be >= 1");
    if (ys.empty()) throw std::invalid_argument("train_mask: no training pairs");

    TrainedMask out;
    AdamConfig adam;
    adam.lr = opt.lr;
    out.model = make_mask_model(ys.front().shape, opt.hidden, rng, adam);
    for (std::size_t e = 0; e < opt.epochs; ++e)
        out.epoch_loss.push_back(train_mask_epoch(out.model, ys, bs, opt.batch_size, rng));
    return out;
}

}  // namespace eggsep
