#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"
#include "vab/diffcore.hpp"
#include "vab/sampling.hpp"

using vab::Tensor;
using test_support::rel_err;

TEST_CASE("affine_forward basics") {
    Tensor x = Tensor::from_rows({{1, 2}});
    CHECK(vab::affine_forward(x, Tensor::identity(2), Tensor({2})).data ==
          std::vector<double>{1, 2});

    Tensor zero = Tensor::from_rows({{0, 0}});
    Tensor w = Tensor::from_rows({{5, -1}, {2, 9}});
    Tensor b = Tensor::vector_of({3, 4});
    CHECK(vab::affine_forward(zero, w, b).data == std::vector<double>{3, 4});

    Tensor w2 = Tensor::from_rows({{1, 1}, {1, -1}});
    Tensor b2 = Tensor::vector_of({0.5, 0.5});
    Tensor out = vab::affine_forward(x, w2, b2);
    CHECK(out(0, 0) == Catch::Approx(3.5));
    CHECK(out(0, 1) == Catch::Approx(-0.5));
}

TEST_CASE("affine_forward dimension errors name both shapes") {
    Tensor x({1, 3});
    Tensor w({2, 2});
    try {
        vab::affine_forward(x, w, Tensor({2}));
        FAIL("expected a throw");
    } catch (const vab::DimensionError& e) {
        std::string msg = e.what();
        CHECK(msg.find("[1x3]") != std::string::npos);
        CHECK(msg.find("[2x2]") != std::string::npos);
    }
}

TEST_CASE("affine_forward is linear in x") {
    vab::Rng rng(11);
    Tensor w({3, 2}), x({2, 3}), y({2, 3});
    for (double& v : w.data) v = rng.uniform(-1, 1);
    for (double& v : x.data) v = rng.uniform(-1, 1);
    for (double& v : y.data) v = rng.uniform(-1, 1);
    Tensor zero_b({2});
    double a = 0.5, b = -2.0;

    Tensor combo({2, 3});
    for (std::size_t i = 0; i < combo.numel(); ++i)
        combo.data[i] = a * x.data[i] + b * y.data[i];
    Tensor lhs = vab::affine_forward(combo, w, zero_b);
    Tensor fx = vab::affine_forward(x, w, zero_b);
    Tensor fy = vab::affine_forward(y, w, zero_b);
    for (std::size_t i = 0; i < lhs.numel(); ++i)
        CHECK(lhs.data[i] == Catch::Approx(a * fx.data[i] + b * fy.data[i]).margin(1e-12));
}

TEST_CASE("affine_backward closed forms") {
    SECTION("zero upstream zeroes every gradient") {
        Tensor x = Tensor::from_rows({{1, 2}});
        Tensor w = Tensor::from_rows({{1, 0}, {0, 1}});
        vab::LayerGrad g = vab::affine_backward(x, w, Tensor({1, 2}));
        for (double v : g.d_input.data) CHECK(v == 0.0);
        for (double v : g.d_weights.data) CHECK(v == 0.0);
        for (double v : g.d_bias.data) CHECK(v == 0.0);
    }
    SECTION("scalar chain rule") {
        Tensor x = Tensor::from_rows({{2}});
        Tensor w = Tensor::from_rows({{3}});
        Tensor up = Tensor::from_rows({{1}});
        vab::LayerGrad g = vab::affine_backward(x, w, up);
        CHECK(g.d_input(0, 0) == 3.0);
        CHECK(g.d_weights(0, 0) == 2.0);
        CHECK(g.d_bias(0) == 1.0);
    }
}

TEST_CASE("affine gradients match finite differences") {
    vab::Rng rng(21);
    Tensor x({2, 3}), w({3, 4}), b({4});
    for (double& v : x.data) v = rng.uniform(-1, 1);
    for (double& v : w.data) v = rng.uniform(-1, 1);
    for (double& v : b.data) v = rng.uniform(-1, 1);
    Tensor up({2, 4});
    for (double& v : up.data) v = rng.uniform(-1, 1);

    // scalar composite: weighted sum of outputs with fixed weights `up`
    auto weighted = [&](const Tensor& xx, const Tensor& ww, const Tensor& bb) {
        Tensor out = vab::affine_forward(xx, ww, bb);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.numel(); ++i) acc += out.data[i] * up.data[i];
        return acc;
    };
    vab::LayerGrad g = vab::affine_backward(x, w, up);

    Tensor fd_x = vab::finite_difference(
        [&](const Tensor& t) { return weighted(t, w, b); }, x, 1e-5);
    Tensor fd_w = vab::finite_difference(
        [&](const Tensor& t) { return weighted(x, t, b); }, w, 1e-5);
    Tensor fd_b = vab::finite_difference(
        [&](const Tensor& t) { return weighted(x, w, t); }, b, 1e-5);
    for (std::size_t i = 0; i < fd_x.numel(); ++i)
        CHECK(rel_err(fd_x.data[i], g.d_input.data[i]) < 1e-6);
    for (std::size_t i = 0; i < fd_w.numel(); ++i)
        CHECK(rel_err(fd_w.data[i], g.d_weights.data[i]) < 1e-6);
    for (std::size_t i = 0; i < fd_b.numel(); ++i)
        CHECK(rel_err(fd_b.data[i], g.d_bias.data[i]) < 1e-6);
}

TEST_CASE("relu forward and backward") {
    Tensor x = Tensor::vector_of({-1, 0, 2});
    CHECK(vab::relu_forward(x).data == std::vector<double>{0, 0, 2});

    Tensor x2 = Tensor::vector_of({-1, 2});
    Tensor up = Tensor::vector_of({5, 5});
    CHECK(vab::relu_backward(x2, up).data == std::vector<double>{0, 5});

    // subgradient at exactly 0 is 0
    Tensor at_zero = Tensor::vector_of({0});
    CHECK(vab::relu_backward(at_zero, Tensor::vector_of({7})).data ==
          std::vector<double>{0});

    vab::Rng rng(31);
    Tensor r({40});
    for (double& v : r.data) v = rng.uniform(-2, 2);
    for (double& v : r.data)
        if (std::abs(v) < 1e-3) v = 0.5; // keep away from the kink
    Tensor ones({40});
    for (double& v : ones.data) v = 1.0;
    Tensor fd = vab::finite_difference(
        [](const Tensor& t) {
            Tensor out = vab::relu_forward(t);
            double acc = 0.0;
            for (double v : out.data) acc += v;
            return acc;
        },
        r, 1e-6);
    Tensor an = vab::relu_backward(r, ones);
    for (std::size_t i = 0; i < fd.numel(); ++i)
        CHECK(rel_err(fd.data[i], an.data[i]) < 1e-6);
}

TEST_CASE("sigmoid values and saturation") {
    CHECK(vab::sigmoid(0.0) == 0.5);
    CHECK(vab::sigmoid(1.0) == Catch::Approx(0.7310585786).epsilon(1e-9));

    double hi = vab::sigmoid(40.0);
    CHECK(hi > 1.0 - 1e-15);
    CHECK(hi <= 1.0);
    CHECK(std::isfinite(vab::sigmoid(-745.0)));
    CHECK(vab::sigmoid(-745.0) >= 0.0);

    vab::Rng rng(41);
    Tensor x({50});
    for (double& v : x.data) v = rng.uniform(-6, 6);
    Tensor y = vab::sigmoid_forward(x);
    for (double v : y.data) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }

    Tensor up({50});
    for (double& v : up.data) v = rng.uniform(-1, 1);
    Tensor an = vab::sigmoid_backward(y, up);
    auto weighted = [&](const Tensor& t) {
        Tensor out = vab::sigmoid_forward(t);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.numel(); ++i) acc += out.data[i] * up.data[i];
        return acc;
    };
    Tensor fd = vab::finite_difference(weighted, x, 1e-5);
    for (std::size_t i = 0; i < fd.numel(); ++i)
        CHECK(rel_err(fd.data[i], an.data[i]) < 1e-6);
}

TEST_CASE("log_softmax rows normalize and differentiate correctly") {
    vab::Rng rng(51);
    Tensor x({3, 5});
    for (double& v : x.data) v = rng.uniform(-3, 3);
    Tensor y = vab::log_softmax_forward(x);
    for (std::size_t i = 0; i < 3; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 5; ++j) sum += std::exp(y(i, j));
        CHECK(sum == Catch::Approx(1.0).epsilon(1e-12));
    }

    Tensor up({3, 5});
    for (double& v : up.data) v = rng.uniform(-1, 1);
    Tensor an = vab::log_softmax_backward(y, up);
    auto weighted = [&](const Tensor& t) {
        Tensor out = vab::log_softmax_forward(t);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.numel(); ++i) acc += out.data[i] * up.data[i];
        return acc;
    };
    Tensor fd = vab::finite_difference(weighted, x, 1e-5);
    for (std::size_t i = 0; i < fd.numel(); ++i)
        CHECK(rel_err(fd.data[i], an.data[i]) < 1e-6);
}

TEST_CASE("finite_difference on closed-form derivatives") {
    Tensor x = Tensor::vector_of({3});
    Tensor g = vab::finite_difference(
        [](const Tensor& t) {
            double acc = 0.0;
            for (double v : t.data) acc += v * v;
            return acc;
        },
        x, 1e-4);
    CHECK(g(0) == Catch::Approx(6.0).epsilon(1e-6));

    Tensor c = vab::finite_difference([](const Tensor&) { return 4.2; }, x, 1e-4);
    CHECK(c(0) == 0.0);

    CHECK_THROWS_AS(vab::finite_difference(
                        [](const Tensor&) { return std::numeric_limits<double>::infinity(); },
                        x, 1e-4),
                    vab::InputError);
}

TEST_CASE("layer gradients agree with finite differences at random points") {
    vab::Rng rng(61);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Tensor x({1, 4});
        for (double& v : x.data) v = rng.uniform(-2, 2);
        // keep the FD stencil clear of the relu kink at 0
        bool near_kink = false;
        for (double v : x.data)
            if (std::abs(v) < 2e-3) near_kink = true;
        if (near_kink) continue;
        ++checked;

        auto f = [](const Tensor& t) {
            Tensor h = vab::relu_forward(t);
            Tensor s = vab::sigmoid_forward(h);
            double acc = 0.0;
            for (double v : s.data) acc += v;
            return acc;
        };
        Tensor fd = vab::finite_difference(f, x, 1e-3);

        Tensor h = vab::relu_forward(x);
        Tensor s = vab::sigmoid_forward(h);
        Tensor ones({1, 4});
        for (double& v : ones.data) v = 1.0;
        Tensor an = vab::relu_backward(x, vab::sigmoid_backward(s, ones));
        for (std::size_t i = 0; i < fd.numel(); ++i)
            CHECK(rel_err(fd.data[i], an.data[i]) < 1e-4);
    }
    CHECK(checked > 90);
}
