#include "c2f/layers.hpp"

#include <algorithm>

namespace c2f {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv3x3: return "conv3x3";
        case LayerKind::MaxPool2x2: return "maxpool2x2";
        case LayerKind::Relu: return "relu";
        case LayerKind::Dense: return "dense";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Softmax: return "softmax";
        case LayerKind::BatchNormInference: return "batchnorm-inference";
    }
    return "?";
}

std::vector<int> output_shape(const LayerSpec& spec, const std::vector<int>& in_shape) {
    auto want_rank = [&](int r) {
        if (static_cast<int>(in_shape.size()) != r)
            fail(std::string(layer_kind_name(spec.kind)) + ": expected rank-" +
                 std::to_string(r) + " input, got " + Tensor::shape_string(in_shape));
    };
    switch (spec.kind) {
        case LayerKind::Conv3x3: {
            want_rank(3);
            if (in_shape[2] != spec.in_channels)
                fail("conv3x3: input channel mismatch: expected " +
                     std::to_string(spec.in_channels) + ", got " + std::to_string(in_shape[2]) +
                     " (input " + Tensor::shape_string(in_shape) + ")");
            return {in_shape[0], in_shape[1], spec.out_channels};
        }
        case LayerKind::MaxPool2x2: {
            want_rank(3);
            if (in_shape[0] % 2 != 0 || in_shape[1] % 2 != 0)
                fail("maxpool2x2: odd spatial dimension in input " +
                     Tensor::shape_string(in_shape) + " (H and W must be even)");
            return {in_shape[0] / 2, in_shape[1] / 2, in_shape[2]};
        }
        case LayerKind::Relu:
        case LayerKind::Flatten: {
            if (in_shape.empty())
                fail(std::string(layer_kind_name(spec.kind)) + ": empty input shape");
            if (spec.kind == LayerKind::Relu) return in_shape;
            int total = 1;
            for (int d : in_shape) total *= d;
            return {total};
        }
        case LayerKind::Dense: {
            want_rank(1);
            if (in_shape[0] != spec.in_dim)
                fail("dense: input size mismatch: expected " + std::to_string(spec.in_dim) +
                     ", got " + std::to_string(in_shape[0]));
            return {spec.out_dim};
        }
        case LayerKind::Softmax: {
            want_rank(1);
            if (in_shape[0] < 2)
                fail("softmax: need at least 2 classes, got " + std::to_string(in_shape[0]));
            return in_shape;
        }
        case LayerKind::BatchNormInference: {
            want_rank(3);
            if (in_shape[2] != spec.in_channels)
                fail("batchnorm-inference: channel mismatch: expected " +
                     std::to_string(spec.in_channels) + ", got " + std::to_string(in_shape[2]));
            return in_shape;
        }
    }
    fail("output_shape: unknown layer kind");
}

namespace {

double stack_loss_value(const std::vector<LayerSpec>& specs,
                        const std::vector<const LayerParams<double>*>& params,
                        const Tensor& input, int label) {
    Tensor probs = stack_forward(specs, params, input);
    double p = probs.data[static_cast<size_t>(label)];
    return -std::log(std::max(p, kProbClampEps));
}

double rel_err(double a, double n) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-10});
}

} // namespace

double grad_check(const std::vector<LayerSpec>& specs, std::vector<LayerParams<double>>& params,
                  const Tensor& input, int label, double step) {
    std::vector<const LayerParams<double>*> refs;
    refs.reserve(params.size());
    for (auto& p : params) refs.push_back(&p);

    std::vector<LayerGrads<double>> analytic(specs.size());
    StackLossResult<double> r = stack_loss_backward(specs, refs, input, label, &analytic);

    double worst = 0;
    auto probe = [&](double* slot, double analytic_g) {
        double keep = *slot;
        *slot = keep + step;
        double lp = stack_loss_value(specs, refs, input, label);
        *slot = keep - step;
        double lm = stack_loss_value(specs, refs, input, label);
        *slot = keep;
        double numeric = (lp - lm) / (2 * step);
        worst = std::max(worst, rel_err(analytic_g, numeric));
    };

    for (size_t li = 0; li < specs.size(); ++li) {
        if (!specs[li].has_trainable_params()) continue;
        for (size_t j = 0; j < params[li].weight.size(); ++j)
            probe(&params[li].weight.data[j], analytic[li].grad_weight.data[j]);
        for (size_t j = 0; j < params[li].bias.size(); ++j)
            probe(&params[li].bias.data[j], analytic[li].grad_bias.data[j]);
    }

    Tensor in_copy = input;
    for (size_t j = 0; j < in_copy.size(); ++j) {
        double keep = in_copy.data[j];
        in_copy.data[j] = keep + step;
        double lp = stack_loss_value(specs, refs, in_copy, label);
        in_copy.data[j] = keep - step;
        double lm = stack_loss_value(specs, refs, in_copy, label);
        in_copy.data[j] = keep;
        double numeric = (lp - lm) / (2 * step);
        worst = std::max(worst, rel_err(r.grad_input.data[j], numeric));
    }
    return worst;
}

} // namespace c2f
