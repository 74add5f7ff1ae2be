#include "eggsep/models.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace eggsep {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::linear: return "linear";
    }
    return "?";
}

Activation activation_from_name(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "linear") return Activation::linear;
    throw std::invalid_argument("unknown activation: " + s);
}

std::size_t Mlp::in_dim() const { return layers.front().w.rows(); }
std::size_t Mlp::out_dim() const { return layers.back().w.cols(); }

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.numel() + l.b.numel();
    return n;
}

Mlp make_mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
             Activation hidden_act, Activation out_act, Rng& rng, double out_scale) {
    Mlp net;
    net.out_scale = out_scale;
    std::vector<std::size_t> dims{in};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t fan_in = dims[l], fan_out = dims[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        DenseLayer layer;
        layer.w = Tensor({fan_in, fan_out});
        for (double& v : layer.w.data) v = rng.uniform(-bound, bound);
        layer.b = Tensor::zeros({fan_out});
        net.layers.push_back(std::move(layer));
        net.acts.push_back(l + 2 < dims.size() ? hidden_act : out_act);
    }
    return net;
}

namespace {

Graph::Id apply_activation(Graph& g, Graph::Id x, Activation a) {
    switch (a) {
        case Activation::relu: return g.relu(x);
        case Activation::sigmoid: return g.sigmoid(x);
        case Activation::linear: return x;
    }
    throw std::logic_error("bad activation");
}

// A single sample of any rank flattens to one row; a 2-D tensor whose column
// count matches the input dim is a batch.
Tensor as_batch(const Tensor& x, std::size_t expect_dim, const char* what) {
    if (x.numel() == expect_dim) return Tensor({1, expect_dim}, x.data);
    if (x.rank() == 2 && x.cols() == expect_dim) return x;
    throw std::invalid_argument(std::string(what) + ": input shape " + x.shape_str() +
                                " incompatible with input dim " + std::to_string(expect_dim));
}

}  // namespace

MlpGraph mlp_forward(Graph& g, const Mlp& net, Graph::Id x) {
    MlpGraph out;
    Graph::Id h = x;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Graph::Id w = g.param(net.layers[l].w);
        const Graph::Id b = g.param(net.layers[l].b);
        out.params.push_back({w, b});
        h = g.row_bias(g.matmul(h, w), b);
        h = apply_activation(g, h, net.acts[l]);
    }
    if (net.out_scale != 1.0) h = g.scale(h, net.out_scale);
    out.out = h;
    return out;
}

Tensor mlp_eval(const Mlp& net, const Tensor& x) {
    Tensor h = as_batch(x, net.in_dim(), "mlp_eval");
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        h = row_bias(matmul(h, net.layers[l].w), net.layers[l].b);
        switch (net.acts[l]) {
            case Activation::relu: h = relu(h); break;
            case Activation::sigmoid: h = sigmoid(h); break;
            case Activation::linear: break;
        }
    }
    if (net.out_scale != 1.0) h = scale(h, net.out_scale);
    if (x.rank() == 1) return Tensor({h.numel()}, h.data);
    return h;
}

void MlpOptimizer::reset(const Mlp& net) {
    states.assign(net.layers.size() * 2, AdamState{});
}

void MlpOptimizer::step(Mlp& net, const Graph& g, const MlpGraph& nodes) {
    if (states.size() != net.layers.size() * 2) reset(net);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        adam_step(net.layers[l].w, g.grad(nodes.params[l][0]), states[2 * l], cfg);
        adam_step(net.layers[l].b, g.grad(nodes.params[l][1]), states[2 * l + 1], cfg);
    }
}

std::pair<Tensor, Tensor> mask_apply(const Tensor& y, const Tensor& m) {
    if (!y.same_shape(m))
        throw std::invalid_argument("mask_apply: shape mismatch " + y.shape_str() + " vs " + m.shape_str());
    for (double v : m.data)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("mask_apply: mask value out of [0,1]");
    Tensor b_hat(y.shape);
    Tensor x_hat(y.shape);
    for (std::size_t i = 0; i < y.numel(); ++i) {
        double bh = y.data[i] * m.data[i];
        double xh = y.data[i] - bh;
        // Subtracting the larger part from y is exact (Sterbenz), so deriving
        // the smaller part from it makes b_hat + x_hat = y hold exactly.
        if (bh < xh) bh = y.data[i] - xh;
        b_hat.data[i] = bh;
        x_hat.data[i] = xh;
    }
    ensure_finite(b_hat, "mask_apply");
    return {std::move(b_hat), std::move(x_hat)};
}

Tensor MaskModel::operator()(const Tensor& y) const {
    Tensor m = mlp_eval(net, y);
    m.shape = y.shape;
    return m;
}

MaskModel make_mask_model(const std::vector<std::size_t>& sample_shape,
                          const std::vector<std::size_t>& hidden, Rng& rng, const AdamConfig& adam) {
    MaskModel model;
    model.sample_shape = sample_shape;
    const std::size_t n = shape_numel(sample_shape);
    model.net = make_mlp(n, hidden, n, Activation::relu, Activation::sigmoid, rng);
    model.opt.cfg = adam;
    model.opt.reset(model.net);
    return model;
}

Tensor GeneratorModel::operator()(const Tensor& z) const {
    Tensor out = mlp_eval(net, z);
    if (z.rank() == 1) out.shape = sample_shape;
    return out;
}

GeneratorModel make_generator_model(const std::vector<std::size_t>& sample_shape, std::size_t latent_dim,
                                    const std::vector<std::size_t>& hidden, Rng& rng,
                                    const AdamConfig& adam, double out_scale) {
    GeneratorModel model;
    model.sample_shape = sample_shape;
    model.latent_dim = latent_dim;
    model.net = make_mlp(latent_dim, hidden, shape_numel(sample_shape), Activation::relu,
                         Activation::sigmoid, rng, out_scale);
    model.opt.cfg = adam;
    model.opt.reset(model.net);
    return model;
}

void DiscriminatorModel::normalize_weights(int power_iters) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        SpectralNormResult r = spectral_normalize(net.layers[l].w, power_iters, sn_u[l]);
        net.layers[l].w = std::move(r.w);
    }
}

DiscriminatorModel make_discriminator_model(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                                            Rng& rng, const AdamConfig& adam) {
    DiscriminatorModel model;
    model.net = make_mlp(in_dim, hidden, 1, Activation::relu, Activation::linear, rng);
    model.opt.cfg = adam;
    model.opt.reset(model.net);
    for (const auto& layer : model.net.layers) {
        Tensor u({layer.w.rows()});
        for (double& v : u.data) v = rng.normal();
        const double n = u.norm2();
        if (n > 0.0)
            for (double& v : u.data) v /= n;
        model.sn_u.push_back(std::move(u));
    }
    // converge the power-iteration vectors once so the first training steps
    // already see accurate spectral norm estimates
    model.normalize_weights(30);
    return model;
}

SpectralNormResult spectral_normalize(const Tensor& w, int power_iters, Tensor& u) {
    const std::size_t r = w.rows(), c = w.cols();
    if (u.rank() != 1 || u.numel() != r)
        throw std::invalid_argument("spectral_normalize: u must be a vector of length rows(w)");
    Tensor v({c});
    double sigma = 0.0;
    for (int it = 0; it < power_iters; ++it) {
        // v = W^T u / ||.||
        for (std::size_t j = 0; j < c; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < r; ++i) s += w.data[i * c + j] * u.data[i];
            v.data[j] = s;
        }
        const double nv = v.norm2();
        if (nv == 0.0) return {w, 0.0};
        for (double& x : v.data) x /= nv;
        // u = W v / ||.||
        for (std::size_t i = 0; i < r; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < c; ++j) s += w.data[i * c + j] * v.data[j];
            u.data[i] = s;
        }
        const double nu = u.norm2();
        if (nu == 0.0) return {w, 0.0};
        for (double& x : u.data) x /= nu;
        sigma = nu;  // ||W v|| with unit v equals the Rayleigh estimate of sigma_max
    }
    SpectralNormResult out;
    out.sigma = sigma;
    out.w = sigma > 0.0 ? scale(w, 1.0 / sigma) : w;
    return out;
}

Tensor LatentTable::gather(const std::vector<std::size_t>& ids) const {
    const std::size_t d = dim();
    Tensor out({ids.size(), d});
    for (std::size_t k = 0; k < ids.size(); ++k) {
        const Tensor& z = codes.at(ids[k]);
        std::copy(z.data.begin(), z.data.end(), out.data.begin() + k * d);
    }
    return out;
}

void LatentTable::apply_grads(const std::vector<std::size_t>& ids, const Tensor& grads) {
    const std::size_t d = dim();
    if (grads.rows() != ids.size() || grads.cols() != d)
        throw std::invalid_argument("latent table: gradient shape " + grads.shape_str() + " for " +
                                    std::to_string(ids.size()) + " rows of dim " + std::to_string(d));
    Tensor g({d});
    for (std::size_t k = 0; k < ids.size(); ++k) {
        std::copy(grads.data.begin() + k * d, grads.data.begin() + (k + 1) * d, g.data.begin());
        adam_step(codes.at(ids[k]), g, states.at(ids[k]), cfg);
        project_unit_ball_inplace(codes[ids[k]]);
    }
}

bool LatentTable::all_in_unit_ball(double tol) const {
    for (const Tensor& z : codes)
        if (z.norm2() > 1.0 + tol) return false;
    return true;
}

LatentTable make_latent_table(std::size_t n, std::size_t d, Rng& rng, const AdamConfig& adam) {
    LatentTable t;
    t.cfg = adam;
    t.codes.reserve(n);
    const double stddev = 0.1 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < n; ++i) {
        Tensor z({d});
        for (double& v : z.data) v = rng.normal(0.0, stddev);
        project_unit_ball_inplace(z);
        t.codes.push_back(std::move(z));
    }
    t.states.assign(n, AdamState{});
    return t;
}

void save_mlp_checkpoint(const Mlp& net, const std::string& path, std::uint64_t seed) {
    nlohmann::json manifest;
    manifest["format"] = "eggsep-mlp";
    manifest["out_scale"] = net.out_scale;
    manifest["seed"] = seed;
    manifest["layers"] = nlohmann::json::array();
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        manifest["layers"].push_back({{"activation", activation_name(net.acts[l])},
                                      {"in", net.layers[l].w.rows()},
                                      {"out", net.layers[l].w.cols()}});
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os << manifest.dump() << '\n';
    for (const auto& layer : net.layers) {
        write_egt(layer.w, os);
        write_egt(layer.b, os);
    }
}

Mlp load_mlp_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("checkpoint: missing manifest line");
    nlohmann::json manifest = nlohmann::json::parse(line);
    if (manifest.value("format", "") != "eggsep-mlp")
        throw std::runtime_error("checkpoint: unexpected format tag");
    Mlp net;
    net.out_scale = manifest["out_scale"].get<double>();
    for (const auto& l : manifest["layers"]) {
        DenseLayer layer;
        layer.w = read_egt(is);
        layer.b = read_egt(is);
        if (layer.w.rows() != l["in"].get<std::size_t>() || layer.w.cols() != l["out"].get<std::size_t>())
            throw std::runtime_error("checkpoint: tensor shape disagrees with manifest");
        net.layers.push_back(std::move(layer));
        net.acts.push_back(activation_from_name(l["activation"].get<std::string>()));
    }
    return net;
}

}  // namespace eggsep
