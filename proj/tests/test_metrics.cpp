#include <cmath>

#include "doctest.h"
#include "eggsep/metrics.hpp"
#include "eggsep/rng.hpp"

using namespace eggsep;

TEST_CASE("psnr worked examples") {
    const Tensor a = Tensor::full({4, 4}, 0.3);
    CHECK(psnr(a, a) == 100.0);  // exact match caps at +100

    // MSE 0.01 with peak 1 -> 20 dB
    Tensor b = a;
    for (double& v : b.data) v += 0.1;
    CHECK(psnr(b, a) == doctest::Approx(20.0));
    CHECK_THROWS(psnr(a, Tensor::full({2, 2}, 0.3)));
}

TEST_CASE("psnr invariant under identical permutation of both inputs") {
    Rng rng(91);
    Tensor est({16}), gt({16});
    for (std::size_t i = 0; i < 16; ++i) {
        est.data[i] = rng.uniform();
        gt.data[i] = rng.uniform();
    }
    Tensor est_p = est, gt_p = gt;
    std::reverse(est_p.data.begin(), est_p.data.end());
    std::reverse(gt_p.data.begin(), gt_p.data.end());
    CHECK(psnr(est, gt) == doctest::Approx(psnr(est_p, gt_p)));
    CHECK(sdr(est, gt) == doctest::Approx(sdr(est_p, gt_p)));
}

TEST_CASE("ssim: identity, symmetry and the constant-shift closed form") {
    Rng rng(93);
    Tensor img({12, 12});
    for (double& v : img.data) v = rng.uniform();
    CHECK(ssim(img, img) == doctest::Approx(1.0));

    Tensor other({12, 12});
    for (double& v : other.data) v = rng.uniform();
    CHECK(ssim(img, other) == doctest::Approx(ssim(other, img)));

    // constant images: variances vanish, so SSIM reduces to the luminance
    // term (2*mu1*mu2 + C1) / (mu1^2 + mu2^2 + C1)
    const double mu1 = 0.7, mu2 = 0.2, c1 = 0.01 * 0.01;
    const Tensor e = Tensor::full({11, 11}, mu1);
    const Tensor g = Tensor::full({11, 11}, mu2);
    const double expected = (2.0 * mu1 * mu2 + c1) / (mu1 * mu1 + mu2 * mu2 + c1);
    CHECK(ssim(e, g) == doctest::Approx(expected).epsilon(1e-12));

    CHECK_THROWS(ssim(Tensor::full({8, 8}, 0.5), Tensor::full({8, 8}, 0.5)));  // smaller than window
}

TEST_CASE("ssim goes negative for anti-correlated patterns") {
    Tensor a({11, 11}), b({11, 11});
    for (std::size_t i = 0; i < 11; ++i)
        for (std::size_t j = 0; j < 11; ++j) {
            const double p = ((i + j) % 2 == 0) ? 0.3 : -0.3;
            a.at(i, j) = 0.5 + p;
            b.at(i, j) = 0.5 - p;
        }
    CHECK(ssim(a, b) < 0.0);
}

TEST_CASE("sdr and si_sdr worked examples") {
    Rng rng(95);
    Tensor gt({64});
    for (double& v : gt.data) v = rng.uniform(0.1, 1.0);

    CHECK(sdr(gt, gt) == 100.0);
    CHECK(si_sdr(gt, gt) == 100.0);

    const Tensor twice = scale(gt, 2.0);
    CHECK(sdr(twice, gt) == doctest::Approx(0.0).epsilon(1e-12));  // error energy = signal energy
    CHECK(si_sdr(twice, gt) == 100.0);                             // scale invariant

    // orthogonal estimate with equal energy: projection is zero
    Tensor est = Tensor::zeros({2});
    Tensor ref = Tensor::zeros({2});
    ref.data = {1.0, 0.0};
    est.data = {0.0, 1.0};
    CHECK(si_sdr(est, ref) == -100.0);

    CHECK_THROWS(sdr(gt, Tensor::zeros({64})));  // zero ground truth
}

TEST_CASE("si_sdr is invariant under positive scaling of the estimate") {
    Rng rng(97);
    Tensor gt({32}), est({32});
    for (std::size_t i = 0; i < 32; ++i) {
        gt.data[i] = rng.uniform(0.1, 1.0);
        est.data[i] = gt.data[i] + rng.normal(0.0, 0.1);
    }
    const double base = si_sdr(est, gt);
    CHECK(si_sdr(scale(est, 3.7), gt) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("optimal mask worked examples") {
    CHECK(optimal_mask(Tensor::scalar(1.0), Tensor::scalar(2.0)).data[0] ==
          doctest::Approx(0.5).epsilon(1e-7));
    CHECK(optimal_mask(Tensor::scalar(2.0), Tensor::scalar(2.0)).data[0] ==
          doctest::Approx(1.0).epsilon(1e-7));
    CHECK(optimal_mask(Tensor::scalar(0.0), Tensor::scalar(2.0)).data[0] == 0.0);
    // clamped when b > y
    CHECK(optimal_mask(Tensor::scalar(3.0), Tensor::scalar(2.0)).data[0] == 1.0);
}

TEST_CASE("error series: locally invariant scalar case reproduces the contraction identity") {
    // b = 0.5, y^t = 1.0, true y = 1.2; mask is constant m = b / y^t = 0.5
    EvalTriple e;
    e.b = Tensor::scalar(0.5);
    e.x = Tensor::scalar(0.7);
    e.y = Tensor::scalar(1.2);
    const double y_t = 1.0;
    const MaskFn mask = [&](const Tensor& y) { return Tensor::full(y.shape, 0.5 / y_t); };

    const ConvergenceTrace trace = error_series({mask}, {e});
    const double expected = std::abs(0.5 / y_t) * std::abs(y_t - 1.2);  // |b/y^t| * |e^t|
    CHECK(trace.abs_err[0].data[0] == expected);  // exact to the bit
    CHECK(trace.median_abs_err[0] == expected);
}

TEST_CASE("error series: perfect mask gives exactly zero error") {
    EvalTriple e;
    e.b = Tensor::scalar(0.5);
    e.x = Tensor::scalar(0.5);
    e.y = Tensor::scalar(1.0);
    // m(y) = b / y exactly (division exact for these values)
    const MaskFn mask = [&](const Tensor& y) {
        Tensor m(y.shape);
        for (std::size_t i = 0; i < y.numel(); ++i) m.data[i] = 0.5 / y.data[i];
        return m;
    };
    const ConvergenceTrace trace = error_series({mask}, {e});
    CHECK(trace.abs_err[0].data[0] == 0.0);
}

TEST_CASE("estimate_lambda: locally invariant mask gives lambda = 1") {
    Rng rng(99);
    std::vector<EvalTriple> eval;
    std::vector<Tensor> y_t;
    for (int i = 0; i < 4; ++i) {
        EvalTriple e;
        e.b = Tensor({8});
        e.x = Tensor({8});
        for (std::size_t k = 0; k < 8; ++k) {
            e.b.data[k] = rng.uniform(0.2, 1.0);
            e.x.data[k] = rng.uniform(0.2, 1.0);
        }
        e.y = add(e.b, e.x);
        Tensor yt({8});
        for (std::size_t k = 0; k < 8; ++k) yt.data[k] = e.y.data[k] + rng.uniform(0.05, 0.2);
        eval.push_back(std::move(e));
        y_t.push_back(std::move(yt));
    }
    // constant mask: m(y) = m(y^t) by construction
    const MaskFn mask = [](const Tensor& y) { return Tensor::full(y.shape, 0.4); };
    const LambdaReport rep = estimate_lambda(mask, eval, y_t);
    CHECK(rep.lambda_hat == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.q50 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("estimate_lambda: perfect generalization gives lambda = 0") {
    std::vector<EvalTriple> eval;
    std::vector<Tensor> y_t;
    EvalTriple e;
    e.b = Tensor::vec({0.5, 0.25});
    e.x = Tensor::vec({0.5, 0.75});
    e.y = add(e.b, e.x);
    eval.push_back(e);
    y_t.push_back(Tensor::vec({1.5, 2.0}));
    const MaskFn mask = [&](const Tensor& y) {
        Tensor m(y.shape);
        for (std::size_t i = 0; i < y.numel(); ++i) m.data[i] = e.b.data[i] / y.data[i];
        return m;
    };
    const LambdaReport rep = estimate_lambda(mask, eval, y_t);
    CHECK(rep.lambda_hat == 0.0);
    CHECK(rep.flagged == 0);
}

TEST_CASE("estimate_lambda rejects fully degenerate denominators") {
    EvalTriple e;
    e.b = Tensor::vec({0.5, 0.5});
    e.x = Tensor::vec({0.5, 0.5});
    e.y = add(e.b, e.x);
    const std::vector<Tensor> y_t{e.y};  // m(y^t) .* y == b exactly
    const MaskFn mask = [&](const Tensor& y) { return Tensor::full(y.shape, 0.5); };
    CHECK_THROWS(estimate_lambda(mask, {e}, y_t));
}
