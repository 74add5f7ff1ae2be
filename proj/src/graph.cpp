#include "eggsep/graph.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace eggsep {

const Graph::Node& Graph::node(Id id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
        throw std::invalid_argument("graph: node id " + std::to_string(id) + " out of range");
    return nodes_[static_cast<std::size_t>(id)];
}

Graph::Node& Graph::node(Id id) { return const_cast<Node&>(static_cast<const Graph*>(this)->node(id)); }

Graph::Id Graph::push(OpKind op, Id a, Id b, double s, Tensor value) {
    ensure_finite(value, "graph op");
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.s = s;
    n.needs_grad = (a >= 0 && node(a).needs_grad) || (b >= 0 && node(b).needs_grad);
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
}

Graph::Id Graph::input(Tensor value) { return push(OpKind::input, -1, -1, 0.0, std::move(value)); }

Graph::Id Graph::param(Tensor value) {
    const Id id = input(std::move(value));
    nodes_.back().needs_grad = true;
    return id;
}

Graph::Id Graph::add(Id a, Id b) { return push(OpKind::add, a, b, 0.0, eggsep::add(value(a), value(b))); }

Graph::Id Graph::sub(Id a, Id b) { return push(OpKind::sub, a, b, 0.0, eggsep::sub(value(a), value(b))); }

Graph::Id Graph::mul(Id a, Id b) { return push(OpKind::mul, a, b, 0.0, eggsep::mul(value(a), value(b))); }

Graph::Id Graph::div_eps(Id a, Id b) {
    return push(OpKind::div_eps, a, b, 0.0, eggsep::div_eps(value(a), value(b), kDivEps));
}

Graph::Id Graph::scale(Id a, double s) { return push(OpKind::scale, a, -1, s, eggsep::scale(value(a), s)); }

Graph::Id Graph::matmul(Id a, Id b) {
    return push(OpKind::matmul, a, b, 0.0, eggsep::matmul(value(a), value(b)));
}

Graph::Id Graph::row_bias(Id m, Id bias) {
    return push(OpKind::row_bias, m, bias, 0.0, eggsep::row_bias(value(m), value(bias)));
}

Graph::Id Graph::relu(Id a) { return push(OpKind::relu, a, -1, 0.0, eggsep::relu(value(a))); }

Graph::Id Graph::sigmoid(Id a) { return push(OpKind::sigmoid, a, -1, 0.0, eggsep::sigmoid(value(a))); }

Graph::Id Graph::sum(Id a) { return push(OpKind::sum, a, -1, 0.0, Tensor::scalar(value(a).sum_value())); }

Graph::Id Graph::mean(Id a) {
    return push(OpKind::mean, a, -1, 0.0, Tensor::scalar(mean_value(value(a))));
}

Graph::Id Graph::l1(Id a, Id b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (!va.same_shape(vb))
        throw std::invalid_argument("l1: shape mismatch " + va.shape_str() + " vs " + vb.shape_str());
    double s = 0.0;
    for (std::size_t i = 0; i < va.numel(); ++i) s += std::abs(va.data[i] - vb.data[i]);
    return push(OpKind::l1, a, b, 0.0, Tensor::scalar(s / static_cast<double>(va.numel())));
}

Graph::Id Graph::mse(Id a, Id b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (!va.same_shape(vb))
        throw std::invalid_argument("mse: shape mismatch " + va.shape_str() + " vs " + vb.shape_str());
    double s = 0.0;
    for (std::size_t i = 0; i < va.numel(); ++i) {
        const double d = va.data[i] - vb.data[i];
        s += d * d;
    }
    return push(OpKind::mse, a, b, 0.0, Tensor::scalar(s / static_cast<double>(va.numel())));
}

void Graph::backward(Id root) {
    Node& r = node(root);
    if (!r.value.is_scalar()) throw std::invalid_argument("backward: root is not scalar");

    for (Node& n : nodes_) n.grad = Tensor::zeros(n.value.shape);
    r.grad.data[0] = 1.0;

    for (Id id = root; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.needs_grad) continue;  // nothing under this node is a param
        const bool need_a = n.a >= 0 && node(n.a).needs_grad;
        const bool need_b = n.b >= 0 && node(n.b).needs_grad;
        const Tensor& g = n.grad;
        switch (n.op) {
            case OpKind::input:
                break;
            case OpKind::add: {
                if (need_a) {
                    Tensor& ga = node(n.a).grad;
                    for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
                }
                if (need_b) {
                    Tensor& gb = node(n.b).grad;
                    for (std::size_t i = 0; i < g.numel(); ++i) gb.data[i] += g.data[i];
                }
                break;
            }
            case OpKind::sub: {
                if (need_a) {
                    Tensor& ga = node(n.a).grad;
                    for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
                }
                if (need_b) {
                    Tensor& gb = node(n.b).grad;
                    for (std::size_t i = 0; i < g.numel(); ++i) gb.data[i] -= g.data[i];
                }
                break;
            }
            case OpKind::mul: {
                if (need_a) {
                    Tensor& ga = node(n.a).grad;
                    const Tensor& vb = node(n.b).value;
                    for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i] * vb.data[i];
                }
                if (need_b) {
                    Tensor& gb = node(n.b).grad;
                    const Tensor& va = node(n.a).value;
                    for (std::size_t i = 0; i < g.numel(); ++i) gb.data[i] += g.data[i] * va.data[i];
                }
                break;
            }
            case OpKind::div_eps: {
                const Tensor& va = node(n.a).value;
                const Tensor& vb = node(n.b).value;
                for (std::size_t i = 0; i < g.numel(); ++i) {
                    const double denom = vb.data[i] + kDivEps;
                    if (need_a) node(n.a).grad.data[i] += g.data[i] / denom;
                    if (need_b)
                        node(n.b).grad.data[i] -= g.data[i] * va.data[i] / (denom * denom);
                }
                break;
            }
            case OpKind::scale: {
                Tensor& ga = node(n.a).grad;
                for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i] * n.s;
                break;
            }
            case OpKind::matmul: {
                const Tensor& va = node(n.a).value;
                const Tensor& vb = node(n.b).value;
                if (need_a) {  // dA = G * B^T
                    Tensor da = eggsep::matmul(g, transpose(vb));
                    Tensor& ga = node(n.a).grad;
                    for (std::size_t i = 0; i < ga.numel(); ++i) ga.data[i] += da.data[i];
                }
                if (need_b) {  // dB = A^T * G
                    Tensor db = eggsep::matmul_tn(va, g);
                    Tensor& gb = node(n.b).grad;
                    for (std::size_t i = 0; i < gb.numel(); ++i) gb.data[i] += db.data[i];
                }
                break;
            }
            case OpKind::row_bias: {
                const std::size_t r = g.rows(), c = g.cols();
                if (need_a) {
                    Tensor& ga = node(n.a).grad;
                    for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
                }
                if (need_b) {
                    Tensor& gb = node(n.b).grad;
                    for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < c; ++j) gb.data[j] += g.data[i * c + j];
                }
                break;
            }
            case OpKind::relu: {
                Tensor& ga = node(n.a).grad;
                const Tensor& va = node(n.a).value;
                for (std::size_t i = 0; i < g.numel(); ++i)
                    if (va.data[i] > 0.0) ga.data[i] += g.data[i];
                break;
            }
            case OpKind::sigmoid: {
                Tensor& ga = node(n.a).grad;
                const Tensor& vo = n.value;
                for (std::size_t i = 0; i < g.numel(); ++i)
                    ga.data[i] += g.data[i] * vo.data[i] * (1.0 - vo.data[i]);
                break;
            }
            case OpKind::sum: {
                Tensor& ga = node(n.a).grad;
                const double gs = g.data[0];
                for (double& v : ga.data) v += gs;
                break;
            }
            case OpKind::mean: {
                Tensor& ga = node(n.a).grad;
                const double gs = g.data[0] / static_cast<double>(ga.numel());
                for (double& v : ga.data) v += gs;
                break;
            }
            case OpKind::l1: {
                const Tensor& va = node(n.a).value;
                const Tensor& vb = node(n.b).value;
                const double gs = g.data[0] / static_cast<double>(va.numel());
                for (std::size_t i = 0; i < va.numel(); ++i) {
                    const double d = va.data[i] - vb.data[i];
                    const double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                    if (need_a) node(n.a).grad.data[i] += gs * sgn;
                    if (need_b) node(n.b).grad.data[i] -= gs * sgn;
                }
                break;
            }
            case OpKind::mse: {
                const Tensor& va = node(n.a).value;
                const Tensor& vb = node(n.b).value;
                const double gs = 2.0 * g.data[0] / static_cast<double>(va.numel());
                for (std::size_t i = 0; i < va.numel(); ++i) {
                    const double d = va.data[i] - vb.data[i];
                    if (need_a) node(n.a).grad.data[i] += gs * d;
                    if (need_b) node(n.b).grad.data[i] -= gs * d;
                }
                break;
            }
        }
    }
}

}  // namespace eggsep
