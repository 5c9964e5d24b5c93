#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "c2f/errors.hpp"
#include "c2f/kernels.hpp"
#include "c2f/rng.hpp"
#include "c2f/tensor.hpp"

namespace c2f {

enum class LayerKind {
    Conv3x3,
    MaxPool2x2,
    Relu,
    Dense,
    Flatten,
    Softmax,
    BatchNormInference,
};

const char* layer_kind_name(LayerKind k);

// Static description of one layer. Convolutions are fixed at 3x3 with
// same-padding; pooling is fixed at 2x2 stride 2.
struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int in_channels = 0;   // conv, batchnorm
    int out_channels = 0;  // conv
    int in_dim = 0;        // dense
    int out_dim = 0;       // dense

    static LayerSpec conv3x3(int cin, int cout) {
        return {LayerKind::Conv3x3, cin, cout, 0, 0};
    }
    static LayerSpec maxpool2x2() { return {LayerKind::MaxPool2x2, 0, 0, 0, 0}; }
    static LayerSpec relu() { return {LayerKind::Relu, 0, 0, 0, 0}; }
    static LayerSpec dense(int in, int out) { return {LayerKind::Dense, 0, 0, in, out}; }
    static LayerSpec flatten() { return {LayerKind::Flatten, 0, 0, 0, 0}; }
    static LayerSpec softmax() { return {LayerKind::Softmax, 0, 0, 0, 0}; }
    static LayerSpec batchnorm_inference(int channels) {
        return {LayerKind::BatchNormInference, channels, 0, 0, 0};
    }

    bool has_trainable_params() const {
        return kind == LayerKind::Conv3x3 || kind == LayerKind::Dense;
    }
};

// Shape transfer rule; throws Error naming expected vs actual on mismatch.
std::vector<int> output_shape(const LayerSpec& spec, const std::vector<int>& in_shape);

// Learned (or loaded) parameters of one layer.
template <typename T>
struct LayerParams {
    TensorT<T> weight;  // conv: (3,3,Cin,Cout); dense: (In,Out)
    TensorT<T> bias;    // conv: (Cout); dense: (Out)
    // batchnorm-inference statistics, one value per channel
    TensorT<T> bn_scale, bn_shift, bn_mean, bn_var;

    template <typename U>
    LayerParams<U> cast() const {
        LayerParams<U> p;
        p.weight = weight.template cast<U>();
        p.bias = bias.template cast<U>();
        p.bn_scale = bn_scale.template cast<U>();
        p.bn_shift = bn_shift.template cast<U>();
        p.bn_mean = bn_mean.template cast<U>();
        p.bn_var = bn_var.template cast<U>();
        return p;
    }
};

template <typename T>
struct LayerGrads {
    TensorT<T> grad_input;
    TensorT<T> grad_weight;
    TensorT<T> grad_bias;
};

constexpr double kBatchNormEps = 1e-5;

// Uniform(-sqrt(6/fan_in), +sqrt(6/fan_in)) weights, zero bias. Batch-norm
// starts as the identity transform until real statistics are loaded.
template <typename T>
LayerParams<T> init_layer_params(const LayerSpec& spec, Rng& rng) {
    LayerParams<T> p;
    switch (spec.kind) {
        case LayerKind::Conv3x3: {
            double bound = std::sqrt(6.0 / (9.0 * spec.in_channels));
            p.weight = TensorT<T>({3, 3, spec.in_channels, spec.out_channels});
            for (auto& v : p.weight.data) v = static_cast<T>(rng.next_range(-bound, bound));
            p.bias = TensorT<T>({spec.out_channels});
            break;
        }
        case LayerKind::Dense: {
            double bound = std::sqrt(6.0 / spec.in_dim);
            p.weight = TensorT<T>({spec.in_dim, spec.out_dim});
            for (auto& v : p.weight.data) v = static_cast<T>(rng.next_range(-bound, bound));
            p.bias = TensorT<T>({spec.out_dim});
            break;
        }
        case LayerKind::BatchNormInference: {
            p.bn_scale = TensorT<T>({spec.in_channels});
            p.bn_scale.fill(T(1));
            p.bn_shift = TensorT<T>({spec.in_channels});
            p.bn_mean = TensorT<T>({spec.in_channels});
            p.bn_var = TensorT<T>({spec.in_channels});
            p.bn_var.fill(T(1));
            break;
        }
        default:
            break;
    }
    return p;
}

template <typename T>
TensorT<T> softmax(const TensorT<T>& logits) {
    if (logits.rank() != 1)
        fail(std::string("softmax: expected rank-1 input, got ") + logits.shape_string());
    TensorT<T> out(logits.shape);
    T m = logits.data[0];
    for (T v : logits.data)
        if (v > m) m = v;
    double sum = 0;
    for (size_t i = 0; i < logits.size(); ++i) {
        double e = std::exp(static_cast<double>(logits.data[i] - m));
        out.data[i] = static_cast<T>(e);
        sum += e;
    }
    for (auto& v : out.data) v = static_cast<T>(static_cast<double>(v) / sum);
    return out;
}

template <typename T>
TensorT<T> forward(const LayerSpec& spec, const LayerParams<T>& params, const TensorT<T>& input) {
    std::vector<int> out_shape = output_shape(spec, input.shape);
    switch (spec.kind) {
        case LayerKind::Conv3x3: {
            TensorT<T> out(out_shape);
            kernels::conv3x3_forward(input.data.data(), input.dim(0), input.dim(1),
                                     spec.in_channels, params.weight.data.data(),
                                     params.bias.data.data(), spec.out_channels,
                                     out.data.data());
            return out;
        }
        case LayerKind::MaxPool2x2: {
            TensorT<T> out(out_shape);
            kernels::maxpool2x2_forward(input.data.data(), input.dim(0), input.dim(1),
                                        input.dim(2), out.data.data());
            return out;
        }
        case LayerKind::Relu: {
            TensorT<T> out(out_shape);
            for (size_t i = 0; i < input.size(); ++i)
                out.data[i] = input.data[i] > T(0) ? input.data[i] : T(0);
            return out;
        }
        case LayerKind::Dense: {
            TensorT<T> out(out_shape);
            kernels::dense_forward(input.data.data(), params.weight.data.data(),
                                   params.bias.data.data(), spec.in_dim, spec.out_dim,
                                   out.data.data());
            return out;
        }
        case LayerKind::Flatten: {
            TensorT<T> out = input;
            out.shape = out_shape;
            return out;
        }
        case LayerKind::Softmax:
            return softmax(input);
        case LayerKind::BatchNormInference: {
            TensorT<T> out(out_shape);
            int C = spec.in_channels;
            size_t pixels = input.size() / static_cast<size_t>(C);
            for (size_t p = 0; p < pixels; ++p)
                for (int c = 0; c < C; ++c) {
                    double inv = 1.0 / std::sqrt(static_cast<double>(params.bn_var.data[c]) + kBatchNormEps);
                    double v = (static_cast<double>(input.data[p * C + c]) -
                                static_cast<double>(params.bn_mean.data[c])) * inv;
                    out.data[p * C + c] = static_cast<T>(
                        static_cast<double>(params.bn_scale.data[c]) * v +
                        static_cast<double>(params.bn_shift.data[c]));
                }
            return out;
        }
    }
    fail("forward: unknown layer kind");
}

template <typename T>
LayerGrads<T> backward(const LayerSpec& spec, const LayerParams<T>& params,
                       const TensorT<T>& input, const TensorT<T>& grad_output) {
    std::vector<int> out_shape = output_shape(spec, input.shape);
    if (grad_output.shape != out_shape)
        fail(std::string("backward(") + layer_kind_name(spec.kind) +
             "): grad_output shape mismatch: expected " + Tensor::shape_string(out_shape) +
             ", got " + grad_output.shape_string());
    LayerGrads<T> g;
    switch (spec.kind) {
        case LayerKind::Conv3x3: {
            g.grad_input = TensorT<T>(input.shape);
            g.grad_weight = TensorT<T>(params.weight.shape);
            g.grad_bias = TensorT<T>(params.bias.shape);
            int H = input.dim(0), W = input.dim(1);
            kernels::conv3x3_grad_input(params.weight.data.data(), grad_output.data.data(),
                                        H, W, spec.in_channels, spec.out_channels,
                                        g.grad_input.data.data());
            kernels::conv3x3_grad_params(input.data.data(), grad_output.data.data(), H, W,
                                         spec.in_channels, spec.out_channels,
                                         g.grad_weight.data.data(), g.grad_bias.data.data());
            return g;
        }
        case LayerKind::MaxPool2x2: {
            g.grad_input = TensorT<T>(input.shape);
            kernels::maxpool2x2_backward(input.data.data(), grad_output.data.data(),
                                         input.dim(0), input.dim(1), input.dim(2),
                                         g.grad_input.data.data());
            return g;
        }
        case LayerKind::Relu: {
            g.grad_input = TensorT<T>(input.shape);
            for (size_t i = 0; i < input.size(); ++i)
                g.grad_input.data[i] = input.data[i] > T(0) ? grad_output.data[i] : T(0);
            return g;
        }
        case LayerKind::Dense: {
            g.grad_input = TensorT<T>(input.shape);
            g.grad_weight = TensorT<T>(params.weight.shape);
            g.grad_bias = TensorT<T>(params.bias.shape);
            kernels::dense_grad_input(params.weight.data.data(), grad_output.data.data(),
                                      spec.in_dim, spec.out_dim, g.grad_input.data.data());
            kernels::dense_grad_params(input.data.data(), grad_output.data.data(),
                                       spec.in_dim, spec.out_dim,
                                       g.grad_weight.data.data(), g.grad_bias.data.data());
            return g;
        }
        case LayerKind::Flatten: {
            g.grad_input = grad_output;
            g.grad_input.shape = input.shape;
            return g;
        }
        case LayerKind::Softmax: {
            // grad_in = p .* (go - <go, p>)
            TensorT<T> p = softmax(input);
            double dot = 0;
            for (size_t i = 0; i < p.size(); ++i)
                dot += static_cast<double>(grad_output.data[i]) * static_cast<double>(p.data[i]);
            g.grad_input = TensorT<T>(input.shape);
            for (size_t i = 0; i < p.size(); ++i)
                g.grad_input.data[i] = static_cast<T>(
                    static_cast<double>(p.data[i]) *
                    (static_cast<double>(grad_output.data[i]) - dot));
            return g;
        }
        case LayerKind::BatchNormInference: {
            // statistics are frozen, so only the input gradient exists
            g.grad_input = TensorT<T>(input.shape);
            int C = spec.in_channels;
            size_t pixels = input.size() / static_cast<size_t>(C);
            for (size_t p = 0; p < pixels; ++p)
                for (int c = 0; c < C; ++c) {
                    double inv = 1.0 / std::sqrt(static_cast<double>(params.bn_var.data[c]) + kBatchNormEps);
                    g.grad_input.data[p * C + c] = static_cast<T>(
                        static_cast<double>(grad_output.data[p * C + c]) *
                        static_cast<double>(params.bn_scale.data[c]) * inv);
                }
            return g;
        }
    }
    fail("backward: unknown layer kind");
}

constexpr double kProbClampEps = 1e-12;

template <typename T>
struct CrossEntropyResult {
    double loss = 0;
    TensorT<T> grad_logits;  // probs - one_hot(label), valid when probs came from softmax
    bool clamped = false;    // probs[label] was clamped at 1e-12 before the log
};

template <typename T>
CrossEntropyResult<T> cross_entropy(const TensorT<T>& probs, int label) {
    if (probs.rank() != 1)
        fail("cross_entropy: expected rank-1 probabilities, got " + probs.shape_string());
    int k = probs.dim(0);
    if (label < 0 || label >= k)
        fail("cross_entropy: label " + std::to_string(label) + " out of range [0," +
             std::to_string(k) + ")");
    double sum = 0;
    for (T v : probs.data) sum += static_cast<double>(v);
    if (std::abs(sum - 1.0) > 1e-6)
        fail("cross_entropy: probabilities sum to " + std::to_string(sum) + ", expected 1");
    CrossEntropyResult<T> r;
    double p = static_cast<double>(probs.data[static_cast<size_t>(label)]);
    if (p < kProbClampEps) {
        p = kProbClampEps;
        r.clamped = true;
    }
    r.loss = -std::log(p);
    r.grad_logits = probs;
    r.grad_logits.data[static_cast<size_t>(label)] -= T(1);
    return r;
}

// ---- layer stacks -------------------------------------------------------

// activations[i] is the input of layer i; activations[L] is the stack output.
template <typename T>
TensorT<T> stack_forward(const std::vector<LayerSpec>& specs,
                         const std::vector<const LayerParams<T>*>& params,
                         const TensorT<T>& input,
                         std::vector<TensorT<T>>* activations = nullptr) {
    if (specs.size() != params.size())
        fail("stack_forward: specs/params length mismatch");
    TensorT<T> cur = input;
    if (activations) {
        activations->clear();
        activations->push_back(cur);
    }
    for (size_t i = 0; i < specs.size(); ++i) {
        cur = forward(specs[i], *params[i], cur);
        if (activations) activations->push_back(cur);
    }
    return cur;
}

// Backward through layers [0, top_layer_count), where grad_top is the
// gradient w.r.t. the output of layer top_layer_count-1. Parameter gradients
// are ADDED into accum (one slot per layer; unused slots stay empty).
template <typename T>
TensorT<T> stack_backward(const std::vector<LayerSpec>& specs,
                          const std::vector<const LayerParams<T>*>& params,
                          const std::vector<TensorT<T>>& activations,
                          const TensorT<T>& grad_top, size_t top_layer_count,
                          std::vector<LayerGrads<T>>* accum = nullptr) {
    TensorT<T> grad = grad_top;
    for (size_t i = top_layer_count; i-- > 0;) {
        LayerGrads<T> g = backward(specs[i], *params[i], activations[i], grad);
        if (accum && specs[i].has_trainable_params()) {
            auto& slot = (*accum)[i];
            if (slot.grad_weight.size() == 0) {
                slot.grad_weight = g.grad_weight;
                slot.grad_bias = g.grad_bias;
            } else {
                for (size_t j = 0; j < g.grad_weight.size(); ++j)
                    slot.grad_weight.data[j] += g.grad_weight.data[j];
                for (size_t j = 0; j < g.grad_bias.size(); ++j)
                    slot.grad_bias.data[j] += g.grad_bias.data[j];
            }
        }
        grad = std::move(g.grad_input);
    }
    return grad;
}

// Forward + cross-entropy + backward for a stack that ends in softmax.
// The softmax/cross-entropy pair is fused: backward starts from
// probs - one_hot at the logits.
template <typename T>
struct StackLossResult {
    double loss = 0;
    TensorT<T> probs;
    TensorT<T> grad_input;
    bool clamped = false;
};

template <typename T>
StackLossResult<T> stack_loss_backward(const std::vector<LayerSpec>& specs,
                                       const std::vector<const LayerParams<T>*>& params,
                                       const TensorT<T>& input, int label,
                                       std::vector<LayerGrads<T>>* accum = nullptr) {
    if (specs.empty() || specs.back().kind != LayerKind::Softmax)
        fail("stack_loss_backward: stack must end with softmax");
    std::vector<TensorT<T>> acts;
    TensorT<T> probs = stack_forward(specs, params, input, &acts);
    CrossEntropyResult<T> ce = cross_entropy(probs, label);
    StackLossResult<T> r;
    r.loss = ce.loss;
    r.clamped = ce.clamped;
    r.probs = std::move(probs);
    r.grad_input = stack_backward(specs, params, acts, ce.grad_logits, specs.size() - 1, accum);
    return r;
}

// Max relative error between analytic gradients and central finite
// differences over every parameter element and every input element.
// 64-bit only; step should be in [1e-7, 1e-5].
double grad_check(const std::vector<LayerSpec>& specs,
                  std::vector<LayerParams<double>>& params, const Tensor& input, int label,
                  double step = 1e-6);

} // namespace c2f
