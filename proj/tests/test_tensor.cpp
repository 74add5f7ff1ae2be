#include <cstdio>
#include <sstream>

#include "doctest.h"
#include "eggsep/rng.hpp"
#include "eggsep/tensor.hpp"

using namespace eggsep;

TEST_CASE("tensor construction and invariants") {
    Tensor t({2, 3});
    CHECK(t.numel() == 6);
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    CHECK_THROWS(Tensor({2, 2}, {1.0, 2.0, 3.0}));  // shape/data mismatch
    CHECK_THROWS(Tensor({0, 3}));                   // zero extent
}

TEST_CASE("elementwise kernels") {
    const Tensor a = Tensor::vec({1.0, -2.0, 3.0});
    const Tensor b = Tensor::vec({0.5, 2.0, -1.0});
    CHECK(add(a, b).data == std::vector<double>{1.5, 0.0, 2.0});
    CHECK(sub(a, b).data == std::vector<double>{0.5, -4.0, 4.0});
    CHECK(mul(a, b).data == std::vector<double>{0.5, -4.0, -3.0});
    CHECK(scale(a, 2.0).data == std::vector<double>{2.0, -4.0, 6.0});
    CHECK(relu(a).data == std::vector<double>{1.0, 0.0, 3.0});
    CHECK(sigmoid(Tensor::vec({0.0})).data[0] == doctest::Approx(0.5));
    CHECK_THROWS(add(a, Tensor::vec({1.0})));  // shape mismatch
}

TEST_CASE("matmul against hand-computed product") {
    const Tensor a = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
    const Tensor b = Tensor::matrix(3, 2, {7, 8, 9, 10, 11, 12});
    const Tensor c = matmul(a, b);
    CHECK(c.rows() == 2);
    CHECK(c.cols() == 2);
    CHECK(c.data == std::vector<double>{58, 64, 139, 154});

    // A^T * G kernel agrees with the transpose route
    const Tensor g = Tensor::matrix(2, 2, {1, 0, 0, 1});
    const Tensor tn = matmul_tn(a, g);
    const Tensor ref = matmul(transpose(a), g);
    CHECK(tn.data == ref.data);
}

TEST_CASE("non-finite results are rejected") {
    const Tensor big = Tensor::vec({1e308});
    CHECK_THROWS(add(big, big));
    CHECK_THROWS(div_eps(Tensor::vec({1.0}), Tensor::vec({-1e-8})));  // denominator cancels to zero
}

TEST_CASE("EGT1 round trip is bit exact") {
    Rng rng(42);
    Tensor t({3, 4, 5});
    for (double& v : t.data) v = rng.normal();
    std::stringstream ss;
    write_egt(t, ss);
    const Tensor back = read_egt(ss);
    CHECK(back.shape == t.shape);
    CHECK(back.data == t.data);
}

TEST_CASE("EGT1 rejects bad magic and truncation") {
    std::stringstream ss;
    ss << "NOPE";
    CHECK_THROWS_WITH_AS(read_egt(ss), doctest::Contains("bad magic"), std::runtime_error);

    std::stringstream truncated;
    write_egt(Tensor::vec({1.0, 2.0}), truncated);
    std::string bytes = truncated.str();
    bytes.resize(bytes.size() - 4);
    std::stringstream cut(bytes);
    CHECK_THROWS_AS(read_egt(cut), std::runtime_error);
}

TEST_CASE("stack/unstack round trip") {
    std::vector<Tensor> samples{Tensor::vec({1, 2}), Tensor::vec({3, 4}), Tensor::vec({5, 6})};
    const Tensor s = stack(samples);
    CHECK(s.shape == std::vector<std::size_t>{3, 2});
    const auto back = unstack(s);
    REQUIRE(back.size() == 3);
    CHECK(back[2].data == std::vector<double>{5, 6});
    CHECK_THROWS(stack({Tensor::vec({1}), Tensor::vec({1, 2})}));
}

TEST_CASE("rng streams are deterministic and fork-independent") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
    Rng c(123);
    Rng fork = c.fork();
    CHECK(fork.uniform() != c.uniform());  // distinct streams
}
