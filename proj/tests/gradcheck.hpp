#pragma once

// Central finite-difference gradient oracle. Lives in test code only and is
// independent of the reverse-mode path it checks: it re-runs the forward
// graph at perturbed inputs and never reads autodiff gradients.

#include <functional>
#include <string>
#include <vector>

#include "eggsep/graph.hpp"

namespace eggsep::testing {

using GraphBuilder = std::function<Graph::Id(Graph&, const std::vector<Graph::Id>&)>;

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string where;
};

inline double eval_forward(const GraphBuilder& build, const std::vector<Tensor>& inputs) {
    Graph g;
    std::vector<Graph::Id> ids;
    for (const Tensor& t : inputs) ids.push_back(g.input(t));
    return g.value(build(g, ids)).data[0];
}

inline GradCheckResult gradcheck(const GraphBuilder& build, std::vector<Tensor> inputs,
                                 double h = 1e-6) {
    Graph g;
    std::vector<Graph::Id> ids;
    for (const Tensor& t : inputs) ids.push_back(g.param(t));
    const Graph::Id root = build(g, ids);
    g.backward(root);

    GradCheckResult res;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Tensor ad = g.grad(ids[k]);
        for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
            const double keep = inputs[k].data[i];
            inputs[k].data[i] = keep + h;
            const double fp = eval_forward(build, inputs);
            inputs[k].data[i] = keep - h;
            const double fm = eval_forward(build, inputs);
            inputs[k].data[i] = keep;
            const double fd = (fp - fm) / (2.0 * h);
            const double rel =
                std::abs(ad.data[i] - fd) / std::max({1.0, std::abs(ad.data[i]), std::abs(fd)});
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.where = "input " + std::to_string(k) + " element " + std::to_string(i);
            }
        }
    }
    return res;
}

}  // namespace eggsep::testing
