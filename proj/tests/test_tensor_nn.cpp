#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "c2f/layers.hpp"
#include "c2f/rng.hpp"

#include "test_util.hpp"

using namespace c2f;
using c2f::test::random_tensor;

TEST_CASE("conv3x3 identity kernel reproduces the input") {
    LayerSpec spec = LayerSpec::conv3x3(2, 2);
    LayerParams<double> p;
    p.weight = Tensor({3, 3, 2, 2});
    p.bias = Tensor({2});
    // center tap, per-channel passthrough
    for (int c = 0; c < 2; ++c)
        p.weight.data[((1 * 3 + 1) * 2 + c) * 2 + c] = 1.0;
    Rng rng(1);
    Tensor in = random_tensor({6, 4, 2}, rng);
    Tensor out = forward(spec, p, in);
    CHECK(out.shape == in.shape);
    for (size_t i = 0; i < in.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(in.data[i]).epsilon(1e-12));
}

TEST_CASE("conv3x3 all-ones kernel on all-ones 3x3 input: center 9, corners 4") {
    LayerSpec spec = LayerSpec::conv3x3(1, 1);
    LayerParams<double> p;
    p.weight = Tensor({3, 3, 1, 1});
    p.weight.fill(1.0);
    p.bias = Tensor({1});
    Tensor in({3, 3, 1});
    in.fill(1.0);
    Tensor out = forward(spec, p, in);
    CHECK(out.at3(1, 1, 0) == doctest::Approx(9.0));
    CHECK(out.at3(0, 0, 0) == doctest::Approx(4.0));
    CHECK(out.at3(0, 2, 0) == doctest::Approx(4.0));
    CHECK(out.at3(2, 0, 0) == doctest::Approx(4.0));
    CHECK(out.at3(2, 2, 0) == doctest::Approx(4.0));
    CHECK(out.at3(0, 1, 0) == doctest::Approx(6.0));  // edge: 2x3 window
}

TEST_CASE("maxpool2x2 basics") {
    LayerSpec spec = LayerSpec::maxpool2x2();
    LayerParams<double> none;
    Tensor in({2, 2, 1}, {1, 2, 3, 4});
    Tensor out = forward(spec, none, in);
    CHECK(out.shape == std::vector<int>{1, 1, 1});
    CHECK(out.data[0] == 4.0);

    Tensor odd({3, 4, 1});
    CHECK_THROWS_WITH_AS(forward(spec, none, odd),
                         doctest::Contains("odd spatial dimension"), Error);
}

TEST_CASE("softmax basics and properties") {
    LayerParams<double> none;
    Tensor z({3}, {0, 0, 0});
    Tensor p = forward(LayerSpec::softmax(), none, z);
    for (double v : p.data) CHECK(v == doctest::Approx(1.0 / 3));

    Rng rng(7);
    for (int t = 0; t < 50; ++t) {
        int k = static_cast<int>(rng.next_int(2, 12));
        Tensor logits = random_tensor({k}, rng, -30, 30);
        Tensor probs = softmax(logits);
        double sum = 0;
        int argmax_z = 0, argmax_p = 0;
        for (int i = 0; i < k; ++i) {
            CHECK(probs.data[static_cast<size_t>(i)] >= 0);
            sum += probs.data[static_cast<size_t>(i)];
            if (logits.data[static_cast<size_t>(i)] > logits.data[static_cast<size_t>(argmax_z)])
                argmax_z = i;
            if (probs.data[static_cast<size_t>(i)] > probs.data[static_cast<size_t>(argmax_p)])
                argmax_p = i;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(argmax_z == argmax_p);
        CHECK(probs.all_finite());
    }
}

TEST_CASE("conv3x3 forward is linear in the input (zero bias)") {
    Rng rng(3);
    LayerSpec spec = LayerSpec::conv3x3(2, 3);
    LayerParams<double> p = init_layer_params<double>(spec, rng);
    p.bias.fill(0.0);
    Tensor x = random_tensor({6, 6, 2}, rng);
    Tensor y = random_tensor({6, 6, 2}, rng);
    double a = 1.7, b = -0.4;
    Tensor combo(x.shape);
    for (size_t i = 0; i < x.size(); ++i) combo.data[i] = a * x.data[i] + b * y.data[i];
    Tensor lhs = forward(spec, p, combo);
    Tensor fx = forward(spec, p, x);
    Tensor fy = forward(spec, p, y);
    for (size_t i = 0; i < lhs.size(); ++i)
        CHECK(lhs.data[i] == doctest::Approx(a * fx.data[i] + b * fy.data[i]).epsilon(1e-9));
}

TEST_CASE("maxpool output bounded by window extremes") {
    Rng rng(11);
    LayerParams<double> none;
    Tensor in = random_tensor({8, 8, 3}, rng);
    Tensor out = forward(LayerSpec::maxpool2x2(), none, in);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            for (int c = 0; c < 3; ++c) {
                double lo = 1e300, hi = -1e300;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        lo = std::min(lo, in.at3(2 * y + dy, 2 * x + dx, c));
                        hi = std::max(hi, in.at3(2 * y + dy, 2 * x + dx, c));
                    }
                CHECK(out.at3(y, x, c) <= hi);
                CHECK(out.at3(y, x, c) >= lo);
            }
}

TEST_CASE("relu backward gates on input sign") {
    LayerSpec spec = LayerSpec::relu();
    LayerParams<double> none;
    Tensor in({2}, {-1, 2});
    Tensor go({2}, {5, 7});
    LayerGrads<double> g = backward(spec, none, in, go);
    CHECK(g.grad_input.data[0] == 0.0);
    CHECK(g.grad_input.data[1] == 7.0);
}

TEST_CASE("dense backward scalar chain rule") {
    LayerSpec spec = LayerSpec::dense(1, 1);
    LayerParams<double> p;
    p.weight = Tensor({1, 1}, {3});
    p.bias = Tensor({1}, {0});
    Tensor in({1}, {2});
    Tensor go({1}, {1});
    LayerGrads<double> g = backward(spec, p, in, go);
    CHECK(g.grad_input.data[0] == 3.0);
    CHECK(g.grad_weight.data[0] == 2.0);
    CHECK(g.grad_bias.data[0] == 1.0);
}

TEST_CASE("backward rejects mismatched grad_output shape") {
    LayerSpec spec = LayerSpec::dense(3, 2);
    Rng rng(2);
    LayerParams<double> p = init_layer_params<double>(spec, rng);
    Tensor in({3});
    Tensor bad({3});
    CHECK_THROWS_WITH_AS(backward(spec, p, in, bad), doctest::Contains("grad_output"), Error);
}

TEST_CASE("cross entropy values and gradients") {
    SUBCASE("one-hot at the true label") {
        Tensor p({3}, {0, 1, 0});
        auto r = cross_entropy(p, 1);
        CHECK(r.loss == doctest::Approx(0.0));
        for (double v : r.grad_logits.data) CHECK(v == doctest::Approx(0.0));
    }
    SUBCASE("uniform over 10 classes") {
        Tensor p({10});
        p.fill(0.1);
        auto r = cross_entropy(p, 3);
        CHECK(r.loss == doctest::Approx(std::log(10.0)).epsilon(1e-9));
        CHECK(r.loss == doctest::Approx(2.302585).epsilon(1e-6));
    }
    SUBCASE("hand-evaluated case") {
        Tensor p({3}, {0.7, 0.2, 0.1});
        auto r = cross_entropy(p, 1);
        CHECK(r.loss == doctest::Approx(-std::log(0.2)).epsilon(1e-12));
        CHECK(r.loss == doctest::Approx(1.609438).epsilon(1e-6));
        CHECK(r.grad_logits.data[0] == doctest::Approx(0.7));
        CHECK(r.grad_logits.data[1] == doctest::Approx(-0.8));
        CHECK(r.grad_logits.data[2] == doctest::Approx(0.1));
        CHECK(!r.clamped);
    }
    SUBCASE("zero probability is clamped and reported") {
        Tensor p({2}, {1.0, 0.0});
        auto r = cross_entropy(p, 1);
        CHECK(r.clamped);
        CHECK(std::isfinite(r.loss));
        CHECK(r.loss == doctest::Approx(-std::log(1e-12)));
    }
    SUBCASE("rejects unnormalized input and bad labels") {
        Tensor p({2}, {0.9, 0.4});
        CHECK_THROWS_AS(cross_entropy(p, 0), Error);
        Tensor q({2}, {0.5, 0.5});
        CHECK_THROWS_AS(cross_entropy(q, 2), Error);
    }
}

TEST_CASE("grad_check: dense+softmax stack") {
    Rng rng(21);
    std::vector<LayerSpec> specs{LayerSpec::dense(8, 5), LayerSpec::softmax()};
    std::vector<LayerParams<double>> params;
    for (const auto& s : specs) params.push_back(init_layer_params<double>(s, rng));
    Tensor in = random_tensor({8}, rng);
    CHECK(grad_check(specs, params, in, 2, 1e-6) < 1e-4);
}

TEST_CASE("grad_check: conv+relu+pool+dense stack on 8x8 input") {
    Rng rng(22);
    std::vector<LayerSpec> specs{LayerSpec::conv3x3(1, 2), LayerSpec::relu(),
                                 LayerSpec::maxpool2x2(), LayerSpec::flatten(),
                                 LayerSpec::dense(4 * 4 * 2, 3), LayerSpec::softmax()};
    std::vector<LayerParams<double>> params;
    for (const auto& s : specs) params.push_back(init_layer_params<double>(s, rng));
    Tensor in = random_tensor({8, 8, 1}, rng, 0, 1);
    CHECK(grad_check(specs, params, in, 1, 1e-6) < 1e-4);
}

TEST_CASE("grad_check: conv3x3 on random 4x4x2 input, 2->3 channels") {
    Rng rng(23);
    std::vector<LayerSpec> specs{LayerSpec::conv3x3(2, 3), LayerSpec::flatten(),
                                 LayerSpec::dense(4 * 4 * 3, 4), LayerSpec::softmax()};
    std::vector<LayerParams<double>> params;
    for (const auto& s : specs) params.push_back(init_layer_params<double>(s, rng));
    Tensor in = random_tensor({4, 4, 2}, rng);
    CHECK(grad_check(specs, params, in, 0, 1e-6) < 1e-4);
}

TEST_CASE("grad_check handles a zero learning signal via the error floor") {
    // Loss exactly 0 at a saturated softmax: analytic and numeric gradients
    // both vanish and the 1e-10 floor keeps the relative error at 0.
    std::vector<LayerSpec> specs{LayerSpec::dense(2, 2), LayerSpec::softmax()};
    std::vector<LayerParams<double>> params(2);
    params[0].weight = Tensor({2, 2}, {60, -60, 60, -60});
    params[0].bias = Tensor({2});
    Tensor in({2}, {1, 1});
    double err = grad_check(specs, params, in, 0, 1e-6);
    CHECK(err < 1e-4);
}

TEST_CASE("batchnorm-inference applies the frozen affine transform") {
    LayerSpec spec = LayerSpec::batchnorm_inference(2);
    Rng rng(4);
    LayerParams<double> p = init_layer_params<double>(spec, rng);
    p.bn_scale = Tensor({2}, {2.0, 0.5});
    p.bn_shift = Tensor({2}, {1.0, -1.0});
    p.bn_mean = Tensor({2}, {0.5, 0.0});
    p.bn_var = Tensor({2}, {4.0, 1.0});
    Tensor in({1, 2, 2}, {1.5, 2.0, 0.5, -2.0});
    Tensor out = forward(spec, p, in);
    CHECK(out.at3(0, 0, 0) == doctest::Approx(1.0 + 2.0 * (1.5 - 0.5) / std::sqrt(4.0 + 1e-5)));
    CHECK(out.at3(0, 0, 1) == doctest::Approx(-1.0 + 0.5 * 2.0 / std::sqrt(1.0 + 1e-5)));

    // backward through frozen statistics: d(out)/d(in) = scale / sqrt(var+eps)
    Tensor go({1, 2, 2});
    go.fill(1.0);
    LayerGrads<double> g = backward(spec, p, in, go);
    CHECK(g.grad_input.at3(0, 1, 0) == doctest::Approx(2.0 / std::sqrt(4.0 + 1e-5)));
}

TEST_CASE("forward on finite inputs stays finite") {
    Rng rng(31);
    auto arch = c2f::test::tiny_arch_3level();
    auto store = build_network<double>(arch, 9);
    for (int t = 0; t < 10; ++t) {
        Tensor in = random_tensor({8, 8, 1}, rng, -5, 5);
        for (int level = 0; level < arch.num_levels(); ++level) {
            LevelEval<double> ev = forward_to_level(arch, store, in, level);
            CHECK(ev.features.all_finite());
            CHECK(ev.probs.all_finite());
        }
    }
}

TEST_CASE("shape errors name expected vs actual") {
    LayerSpec conv = LayerSpec::conv3x3(3, 4);
    LayerParams<double> p;
    Tensor wrong({4, 4, 2});
    CHECK_THROWS_WITH_AS(output_shape(conv, wrong.shape), doctest::Contains("expected 3"),
                         Error);
    CHECK_THROWS_WITH_AS(output_shape(LayerSpec::dense(10, 2), {12}),
                         doctest::Contains("expected 10"), Error);
}

// Analytic backward vs central finite differences for every layer kind that
// can sit inside a differentiable stack, randomized.
TEST_CASE("property: finite-difference agreement across layer kinds, 20 seeds") {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed * 131);
        {
            std::vector<LayerSpec> specs{LayerSpec::conv3x3(2, 2), LayerSpec::relu(),
                                         LayerSpec::maxpool2x2(), LayerSpec::flatten(),
                                         LayerSpec::dense(2 * 2 * 2, 3), LayerSpec::softmax()};
            std::vector<LayerParams<double>> params;
            for (const auto& s : specs) params.push_back(init_layer_params<double>(s, rng));
            Tensor in = c2f::test::random_tensor({4, 4, 2}, rng);
            int label = static_cast<int>(rng.next_int(0, 2));
            CHECK(grad_check(specs, params, in, label, 1e-6) < 1e-4);
        }
        {
            std::vector<LayerSpec> specs{LayerSpec::batchnorm_inference(2),
                                         LayerSpec::flatten(), LayerSpec::dense(8, 3),
                                         LayerSpec::softmax()};
            std::vector<LayerParams<double>> params;
            for (const auto& s : specs) params.push_back(init_layer_params<double>(s, rng));
            params[0].bn_mean = c2f::test::random_tensor({2}, rng);
            params[0].bn_var = Tensor({2}, {0.5 + rng.next_f64(), 0.5 + rng.next_f64()});
            params[0].bn_scale = c2f::test::random_tensor({2}, rng);
            Tensor in = c2f::test::random_tensor({2, 2, 2}, rng);
            CHECK(grad_check(specs, params, in, 0, 1e-6) < 1e-4);
        }
    }
}
