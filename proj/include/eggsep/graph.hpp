#pragma once

#include <cstdint>
#include <vector>

#include "eggsep/tensor.hpp"

namespace eggsep {

enum class OpKind : std::uint8_t {
    input,
    add,
    sub,
    mul,
    div_eps,
    scale,
    matmul,
    row_bias,
    relu,
    sigmoid,
    sum,
    mean,
    l1,
    mse,
};

// Reverse-mode autodiff tape. Nodes are appended in execution order, which is
// already a topological order, so backward is a single reverse sweep. Values
// are computed eagerly and cached; gradient slots are zeroed at the start of
// every backward pass.
class Graph {
public:
    using Id = std::int32_t;

    Id input(Tensor value);  // leaf without gradient tracking (data, targets)
    Id param(Tensor value);  // leaf whose gradient backward must produce

    Id add(Id a, Id b);
    Id sub(Id a, Id b);
    Id mul(Id a, Id b);
    Id div_eps(Id a, Id b);  // a / (b + kDivEps)
    Id scale(Id a, double s);
    Id matmul(Id a, Id b);
    Id row_bias(Id m, Id bias);
    Id relu(Id a);
    Id sigmoid(Id a);
    Id sum(Id a);
    Id mean(Id a);
    Id l1(Id a, Id b);   // mean |a - b|; subgradient 0 at ties
    Id mse(Id a, Id b);  // mean (a - b)^2

    const Tensor& value(Id id) const { return node(id).value; }
    const Tensor& grad(Id id) const { return node(id).grad; }

    // Gradient of the scalar root w.r.t. every node; exact reverse-mode
    // accumulation. Throws if the root is not scalar.
    void backward(Id root);

    std::size_t size() const { return nodes_.size(); }

    static constexpr double kDivEps = 1e-8;

private:
    struct Node {
        OpKind op;
        Id a = -1;
        Id b = -1;
        double s = 0.0;
        bool needs_grad = false;  // true for params and anything built on one
        Tensor value;
        Tensor grad;
    };

    const Node& node(Id id) const;
    Node& node(Id id);
    Id push(OpKind op, Id a, Id b, double s, Tensor value);

    std::vector<Node> nodes_;
};

}  // namespace eggsep
