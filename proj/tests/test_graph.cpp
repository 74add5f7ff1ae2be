#include <cmath>

#include "doctest.h"
#include "eggsep/graph.hpp"
#include "eggsep/rng.hpp"
#include "gradcheck.hpp"

using namespace eggsep;
using eggsep::testing::gradcheck;

namespace {

// small random tensor with entries kept away from relu/L1 kinks
Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = 0.2, double hi = 2.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data) {
        const double mag = rng.uniform(lo, hi);
        v = rng.uniform() < 0.5 ? -mag : mag;
    }
    return t;
}

}  // namespace

TEST_CASE("forward values match the worked examples") {
    Graph g;
    const auto y = g.input(Tensor::vec({2.0, 4.0}));
    const auto m = g.input(Tensor::vec({0.5, 0.25}));
    CHECK(g.value(g.mul(y, m)).data == std::vector<double>{1.0, 1.0});

    const auto a = g.input(Tensor::vec({1.0, 3.0}));
    const auto b = g.input(Tensor::vec({2.0, 1.0}));
    CHECK(g.value(g.l1(a, b)).data[0] == doctest::Approx(1.5));

    CHECK(g.value(g.sigmoid(g.input(Tensor::scalar(0.0)))).data[0] == 0.5);
}

TEST_CASE("forward is deterministic") {
    auto run = [] {
        Graph g;
        const auto a = g.input(Tensor::vec({0.3, 1.7, -2.2}));
        const auto b = g.input(Tensor::vec({1.1, -0.4, 0.9}));
        return g.value(g.sigmoid(g.mul(a, b))).data;
    };
    CHECK(run() == run());
}

TEST_CASE("backward on the worked examples") {
    SUBCASE("d(x^2)/dx at x=3 is 6") {
        Graph g;
        const auto x = g.param(Tensor::scalar(3.0));
        const auto y = g.mul(x, x);
        g.backward(y);
        CHECK(g.grad(x).data[0] == doctest::Approx(6.0));
    }
    SUBCASE("L1 subgradient sign convention with tie rule") {
        Graph g;
        const auto a = g.param(Tensor::scalar(2.0));
        const auto b = g.param(Tensor::scalar(1.0));
        const auto loss = g.l1(a, b);
        g.backward(loss);
        CHECK(g.grad(a).data[0] == 1.0);
        CHECK(g.grad(b).data[0] == -1.0);

        Graph g2;
        const auto c = g2.param(Tensor::scalar(1.0));
        const auto d = g2.param(Tensor::scalar(1.0));
        g2.backward(g2.l1(c, d));
        CHECK(g2.grad(c).data[0] == 0.0);  // ties give 0
    }
    SUBCASE("backward requires a scalar root") {
        Graph g;
        const auto a = g.param(Tensor::vec({1.0, 2.0}));
        CHECK_THROWS(g.backward(g.relu(a)));
    }
}

TEST_CASE("gradient slots are re-zeroed between backward passes") {
    Graph g;
    const auto x = g.param(Tensor::scalar(3.0));
    const auto y = g.mul(x, x);
    g.backward(y);
    g.backward(y);
    CHECK(g.grad(x).data[0] == doctest::Approx(6.0));  // not accumulated twice
}

TEST_CASE("every differentiable op matches central finite differences") {
    Rng rng(7);
    const double tol = 1e-6;

    auto check = [&](const char* name, const eggsep::testing::GraphBuilder& build,
                     std::vector<Tensor> inputs) {
        const auto res = gradcheck(build, std::move(inputs));
        INFO(name << ": " << res.where);
        CHECK(res.max_rel_err < tol);
    };

    for (int round = 0; round < 5; ++round) {
        check("add",
              [](Graph& g, const auto& in) { return g.sum(g.add(in[0], in[1])); },
              {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)});
        check("sub",
              [](Graph& g, const auto& in) { return g.sum(g.sub(in[0], in[1])); },
              {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)});
        check("mul",
              [](Graph& g, const auto& in) { return g.sum(g.mul(in[0], in[1])); },
              {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)});
        check("div_eps",
              [](Graph& g, const auto& in) { return g.sum(g.div_eps(in[0], in[1])); },
              {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng, 0.5, 2.0)});
        check("scale",
              [](Graph& g, const auto& in) { return g.sum(g.scale(in[0], -1.7)); },
              {random_tensor({4}, rng)});
        check("matmul",
              [](Graph& g, const auto& in) { return g.sum(g.matmul(in[0], in[1])); },
              {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)});
        check("row_bias",
              [](Graph& g, const auto& in) { return g.sum(g.row_bias(in[0], in[1])); },
              {random_tensor({3, 4}, rng), random_tensor({4}, rng)});
        check("relu",
              [](Graph& g, const auto& in) { return g.sum(g.relu(in[0])); },
              {random_tensor({3, 4}, rng)});
        check("sigmoid",
              [](Graph& g, const auto& in) { return g.sum(g.sigmoid(in[0])); },
              {random_tensor({3, 4}, rng)});
        check("mean",
              [](Graph& g, const auto& in) { return g.mean(g.mul(in[0], in[0])); },
              {random_tensor({5}, rng)});
        check("l1",
              [](Graph& g, const auto& in) { return g.l1(in[0], in[1]); },
              {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)});
        check("mse",
              [](Graph& g, const auto& in) { return g.mse(in[0], in[1]); },
              {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)});
    }
}

TEST_CASE("two-layer perceptron gradient matches finite differences") {
    Rng rng(11);
    // weights, biases and inputs all as graph inputs; loss = L1(sigmoid(relu(xW1+b1)W2+b2), t)
    auto build = [](Graph& g, const std::vector<Graph::Id>& in) {
        const auto h = g.relu(g.row_bias(g.matmul(in[0], in[1]), in[2]));
        const auto out = g.sigmoid(g.row_bias(g.matmul(h, in[3]), in[4]));
        return g.l1(out, in[5]);
    };
    std::vector<Tensor> inputs{random_tensor({2, 3}, rng), random_tensor({3, 4}, rng),
                               random_tensor({4}, rng),    random_tensor({4, 2}, rng),
                               random_tensor({2}, rng),    random_tensor({2, 2}, rng, 2.0, 3.0)};
    const auto res = gradcheck(build, std::move(inputs));
    INFO(res.where);
    CHECK(res.max_rel_err < 1e-6);
}
