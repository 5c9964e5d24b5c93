#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "c2f/model.hpp"
#include "c2f/parallel.hpp"
#include "c2f/rng.hpp"

namespace c2f {

struct TrainConfig {
    enum class Optimizer { rmsprop, sgd };
    enum class Augmentation { none, flips_and_shifts };

    Optimizer optimizer = Optimizer::rmsprop;
    double learning_rate = 1e-4;
    double lr_decay_per_update = 1e-6;  // lr_t = lr / (1 + decay * t)
    double rmsprop_smoothing = 0.9;
    int batch_size = 128;
    int epochs = 1;
    Augmentation augmentation = Augmentation::none;
    // Whether stage-2 classifier training re-applies the stage-1 augmentation.
    bool augment_intermediate = true;
    uint64_t seed = 0;

    void validate() const {
        if (learning_rate <= 0 && learning_rate != 0.0)
            fail("train config: learning_rate must be >= 0");
        if (batch_size < 1) fail("train config: batch_size must be >= 1");
        if (epochs < 0) fail("train config: epochs must be >= 0");
        if (rmsprop_smoothing < 0 || rmsprop_smoothing >= 1)
            fail("train config: rmsprop_smoothing must be in [0,1)");
    }
};

enum class SplitTag { none, train, val, test };

template <typename T>
struct Dataset {
    std::vector<TensorT<T>> inputs;
    std::vector<int> labels;
    int num_classes = 0;
    SplitTag tag = SplitTag::none;

    size_t size() const { return inputs.size(); }

    void validate() const {
        if (inputs.size() != labels.size())
            fail("dataset: " + std::to_string(inputs.size()) + " inputs vs " +
                 std::to_string(labels.size()) + " labels");
        for (int l : labels)
            if (l < 0 || l >= num_classes)
                fail("dataset: label " + std::to_string(l) + " outside [0," +
                     std::to_string(num_classes) + ")");
    }

    template <typename U>
    Dataset<U> cast() const {
        Dataset<U> out;
        out.labels = labels;
        out.num_classes = num_classes;
        out.tag = tag;
        out.inputs.reserve(inputs.size());
        for (const auto& t : inputs) out.inputs.push_back(t.template cast<U>());
        return out;
    }
};

// ---- optimizer ----------------------------------------------------------

template <typename T>
struct OptimizerState {
    std::vector<TensorT<T>> acc;  // RMSprop squared-gradient accumulators
    long long update_count = 0;   // completed updates
};

inline double current_learning_rate(const TrainConfig& cfg, long long update_count) {
    return cfg.learning_rate /
           (1.0 + cfg.lr_decay_per_update * static_cast<double>(update_count));
}

template <typename T>
void init_optimizer_state(OptimizerState<T>& state, const std::vector<TensorT<T>*>& params) {
    state.acc.clear();
    state.update_count = 0;
    for (const auto* p : params) state.acc.emplace_back(p->shape);
}

// acc <- rho*acc + (1-rho)*g^2;  p <- p - lr_t * g / (sqrt(acc) + 1e-8)
template <typename T>
void rmsprop_step(const std::vector<TensorT<T>*>& params,
                  const std::vector<const TensorT<T>*>& grads, OptimizerState<T>& state,
                  const TrainConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.acc.size())
        fail("rmsprop_step: params/grads/state size mismatch");
    T lr = static_cast<T>(current_learning_rate(cfg, state.update_count));
    T rho = static_cast<T>(cfg.rmsprop_smoothing);
    T eps = static_cast<T>(1e-8);
    for (size_t i = 0; i < params.size(); ++i) {
        TensorT<T>& p = *params[i];
        const TensorT<T>& g = *grads[i];
        TensorT<T>& a = state.acc[i];
        if (!p.same_shape(g) || !p.same_shape(a))
            fail("rmsprop_step: shape mismatch at tensor " + std::to_string(i));
        for (size_t j = 0; j < p.size(); ++j) {
            a.data[j] = rho * a.data[j] + (T(1) - rho) * g.data[j] * g.data[j];
            p.data[j] -= lr * g.data[j] / (std::sqrt(a.data[j]) + eps);
        }
    }
    ++state.update_count;
}

template <typename T>
void sgd_step(const std::vector<TensorT<T>*>& params,
              const std::vector<const TensorT<T>*>& grads, OptimizerState<T>& state,
              const TrainConfig& cfg) {
    T lr = static_cast<T>(current_learning_rate(cfg, state.update_count));
    for (size_t i = 0; i < params.size(); ++i) {
        TensorT<T>& p = *params[i];
        const TensorT<T>& g = *grads[i];
        for (size_t j = 0; j < p.size(); ++j)
            p.data[j] -= lr * g.data[j];
    }
    ++state.update_count;
}

template <typename T>
void apply_update(const std::vector<TensorT<T>*>& params,
                  const std::vector<const TensorT<T>*>& grads, OptimizerState<T>& state,
                  const TrainConfig& cfg) {
    if (cfg.optimizer == TrainConfig::Optimizer::rmsprop)
        rmsprop_step(params, grads, state, cfg);
    else
        sgd_step(params, grads, state, cfg);
}

// ---- augmentation -------------------------------------------------------

template <typename T>
TensorT<T> hflip(const TensorT<T>& img) {
    int H = img.dim(0), W = img.dim(1), C = img.dim(2);
    TensorT<T> out(img.shape);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c)
                out.at3(y, x, c) = img.at3(y, W - 1 - x, c);
    return out;
}

// Positive dx moves content right, positive dy moves it down; vacated pixels
// become zero.
template <typename T>
TensorT<T> shift_image(const TensorT<T>& img, int dy, int dx) {
    int H = img.dim(0), W = img.dim(1), C = img.dim(2);
    TensorT<T> out(img.shape);
    for (int y = 0; y < H; ++y) {
        int sy = y - dy;
        if (sy < 0 || sy >= H) continue;
        for (int x = 0; x < W; ++x) {
            int sx = x - dx;
            if (sx < 0 || sx >= W) continue;
            for (int c = 0; c < C; ++c)
                out.at3(y, x, c) = img.at3(sy, sx, c);
        }
    }
    return out;
}

// Horizontal flip with probability 1/2, then independent width/height shifts
// uniform in +-10% of the dimension. Draw order: flip, dx, dy.
template <typename T>
TensorT<T> augment(const TensorT<T>& img, Rng& rng) {
    if (img.rank() != 3) fail("augment: expected (H, W, C) image, got " + img.shape_string());
    bool flip = rng.next_f64() < 0.5;
    int max_dx = img.dim(1) / 10;
    int max_dy = img.dim(0) / 10;
    int dx = static_cast<int>(rng.next_int(-max_dx, max_dx));
    int dy = static_cast<int>(rng.next_int(-max_dy, max_dy));
    TensorT<T> out = flip ? hflip(img) : img;
    if (dx != 0 || dy != 0) out = shift_image(out, dy, dx);
    return out;
}

// ---- training -----------------------------------------------------------

struct StageStats {
    std::vector<double> epoch_mean_loss;
    long long updates = 0;
    bool any_prob_clamped = false;
};

namespace detail {

// A trainable view over a sequence of layers from the store.
template <typename T>
struct TrainStack {
    std::vector<LayerSpec> specs;
    std::vector<LayerParams<T>*> params;

    std::vector<const LayerParams<T>*> cparams() const {
        return {params.begin(), params.end()};
    }

    std::vector<TensorT<T>*> trainable_tensors() const {
        std::vector<TensorT<T>*> out;
        for (size_t i = 0; i < specs.size(); ++i)
            if (specs[i].has_trainable_params()) {
                out.push_back(&params[i]->weight);
                out.push_back(&params[i]->bias);
            }
        return out;
    }
};

template <typename T>
TrainStack<T> finest_path_stack(const C2FArchitecture& arch, WeightStore<T>& store) {
    TrainStack<T> s;
    for (int l = 0; l < arch.num_levels(); ++l) {
        const auto& specs = arch.transformer[static_cast<size_t>(l)];
        auto& params = store.transformer[static_cast<size_t>(l)];
        for (size_t j = 0; j < specs.size(); ++j) {
            s.specs.push_back(specs[j]);
            s.params.push_back(&params[j]);
        }
    }
    int finest = arch.num_levels() - 1;
    const auto& specs = arch.classifier[static_cast<size_t>(finest)];
    auto& params = store.classifier[static_cast<size_t>(finest)];
    for (size_t j = 0; j < specs.size(); ++j) {
        s.specs.push_back(specs[j]);
        s.params.push_back(&params[j]);
    }
    return s;
}

template <typename T>
TrainStack<T> classifier_stack(const C2FArchitecture& arch, WeightStore<T>& store, int level) {
    TrainStack<T> s;
    const auto& specs = arch.classifier[static_cast<size_t>(level)];
    auto& params = store.classifier[static_cast<size_t>(level)];
    for (size_t j = 0; j < specs.size(); ++j) {
        s.specs.push_back(specs[j]);
        s.params.push_back(&params[j]);
    }
    return s;
}

// Mean gradient over a batch, computed in fixed-size chunks reduced in chunk
// order, so the result is bitwise identical for every worker count.
constexpr int kGradChunks = 16;

template <typename T>
struct BatchWorkspace {
    std::vector<std::vector<LayerGrads<T>>> chunk_grads;  // [chunk][layer]
    std::vector<double> chunk_loss;
    std::vector<char> chunk_clamped;
    std::vector<LayerGrads<T>> total;  // [layer]

    void init(const TrainStack<T>& stack) {
        chunk_grads.assign(kGradChunks, std::vector<LayerGrads<T>>(stack.specs.size()));
        chunk_loss.assign(kGradChunks, 0.0);
        chunk_clamped.assign(kGradChunks, 0);
        total.assign(stack.specs.size(), {});
        for (size_t i = 0; i < stack.specs.size(); ++i)
            if (stack.specs[i].has_trainable_params()) {
                total[i].grad_weight = TensorT<T>(stack.params[i]->weight.shape);
                total[i].grad_bias = TensorT<T>(stack.params[i]->bias.shape);
                for (int c = 0; c < kGradChunks; ++c) {
                    chunk_grads[static_cast<size_t>(c)][i].grad_weight =
                        TensorT<T>(stack.params[i]->weight.shape);
                    chunk_grads[static_cast<size_t>(c)][i].grad_bias =
                        TensorT<T>(stack.params[i]->bias.shape);
                }
            }
    }
};

// Accumulates mean-loss gradients for the batch; `example` maps a batch slot
// to (input tensor, label). Returns the mean loss.
template <typename T, typename ExampleFn>
double batch_gradients(const TrainStack<T>& stack, BatchWorkspace<T>& ws, int batch_size,
                       const ExampleFn& example, bool* any_clamped) {
    auto cparams = stack.cparams();
    int chunks = std::min(batch_size, kGradChunks);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_count()) if (par_enabled())
#endif
    for (int c = 0; c < chunks; ++c) {
        auto& grads = ws.chunk_grads[static_cast<size_t>(c)];
        for (auto& g : grads) {
            if (g.grad_weight.size()) g.grad_weight.fill(T(0));
            if (g.grad_bias.size()) g.grad_bias.fill(T(0));
        }
        double loss = 0;
        bool clamped = false;
        int begin = static_cast<int>((static_cast<long long>(c) * batch_size) / chunks);
        int end = static_cast<int>((static_cast<long long>(c + 1) * batch_size) / chunks);
        for (int k = begin; k < end; ++k) {
            TensorT<T> input;
            int label = 0;
            example(k, &input, &label);
            StackLossResult<T> r =
                stack_loss_backward(stack.specs, cparams, input, label, &grads);
            loss += r.loss;
            clamped = clamped || r.clamped;
        }
        ws.chunk_loss[static_cast<size_t>(c)] = loss;
        ws.chunk_clamped[static_cast<size_t>(c)] = clamped ? 1 : 0;
    }

    double loss_sum = 0;
    for (size_t i = 0; i < stack.specs.size(); ++i) {
        if (!stack.specs[i].has_trainable_params()) continue;
        ws.total[i].grad_weight.fill(T(0));
        ws.total[i].grad_bias.fill(T(0));
    }
    for (int c = 0; c < chunks; ++c) {
        loss_sum += ws.chunk_loss[static_cast<size_t>(c)];
        if (ws.chunk_clamped[static_cast<size_t>(c)] && any_clamped) *any_clamped = true;
        for (size_t i = 0; i < stack.specs.size(); ++i) {
            if (!stack.specs[i].has_trainable_params()) continue;
            const auto& g = ws.chunk_grads[static_cast<size_t>(c)][i];
            for (size_t j = 0; j < g.grad_weight.size(); ++j)
                ws.total[i].grad_weight.data[j] += g.grad_weight.data[j];
            for (size_t j = 0; j < g.grad_bias.size(); ++j)
                ws.total[i].grad_bias.data[j] += g.grad_bias.data[j];
        }
    }

    T inv = static_cast<T>(1.0 / batch_size);
    for (size_t i = 0; i < stack.specs.size(); ++i) {
        if (!stack.specs[i].has_trainable_params()) continue;
        for (auto& v : ws.total[i].grad_weight.data) v *= inv;
        for (auto& v : ws.total[i].grad_bias.data) v *= inv;
    }
    return loss_sum / batch_size;
}

template <typename T>
std::vector<const TensorT<T>*> total_grad_tensors(const TrainStack<T>& stack,
                                                  const BatchWorkspace<T>& ws) {
    std::vector<const TensorT<T>*> out;
    for (size_t i = 0; i < stack.specs.size(); ++i)
        if (stack.specs[i].has_trainable_params()) {
            out.push_back(&ws.total[i].grad_weight);
            out.push_back(&ws.total[i].grad_bias);
        }
    return out;
}

// Generic epoch loop shared by both training stages. `make_example` receives
// (epoch, dataset index) and must be pure given those, so augmentation stays
// deterministic under any scheduling.
template <typename T, typename MakeExample>
StageStats run_training_loop(const TrainStack<T>& stack, size_t dataset_size,
                             const TrainConfig& cfg, const MakeExample& make_example,
                             uint64_t shuffle_salt, const std::string& stage_name) {
    StageStats stats;
    if (dataset_size == 0 || cfg.epochs == 0) return stats;
    auto tensors = stack.trainable_tensors();
    OptimizerState<T> opt;
    init_optimizer_state(opt, tensors);
    BatchWorkspace<T> ws;
    ws.init(stack);

    std::vector<size_t> order(dataset_size);
    for (size_t i = 0; i < dataset_size; ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(cfg.seed, static_cast<uint64_t>(epoch), shuffle_salt));
        shuffle_rng.shuffle(order);
        double epoch_loss = 0;
        int batches = 0;
        for (size_t start = 0; start < dataset_size; start += static_cast<size_t>(cfg.batch_size)) {
            size_t end = std::min(dataset_size, start + static_cast<size_t>(cfg.batch_size));
            int bsize = static_cast<int>(end - start);
            bool clamped = false;
            double loss = batch_gradients<T>(
                stack, ws, bsize,
                [&](int k, TensorT<T>* input, int* label) {
                    make_example(epoch, order[start + static_cast<size_t>(k)], input, label);
                },
                &clamped);
            if (clamped) stats.any_prob_clamped = true;
            if (!std::isfinite(loss))
                fail("training diverged in " + stage_name + ": loss is not finite at epoch " +
                     std::to_string(epoch + 1) + ", batch " + std::to_string(batches + 1));
            auto grads = total_grad_tensors(stack, ws);
            apply_update(tensors, grads, opt, cfg);
            epoch_loss += loss;
            ++batches;
        }
        stats.epoch_mean_loss.push_back(epoch_loss / batches);
    }
    stats.updates = opt.update_count;
    return stats;
}

} // namespace detail

// Stage 1: train the finest path (all feature transformers plus the finest
// classifier) end to end with cross-entropy.
template <typename T>
StageStats train_feature_transformers(const C2FArchitecture& arch, WeightStore<T>& store,
                                      const Dataset<T>& data, const TrainConfig& cfg) {
    cfg.validate();
    data.validate();
    auto stack = detail::finest_path_stack(arch, store);
    bool do_augment = cfg.augmentation == TrainConfig::Augmentation::flips_and_shifts;
    return detail::run_training_loop<T>(
        stack, data.size(), cfg,
        [&](int epoch, size_t idx, TensorT<T>* input, int* label) {
            *label = data.labels[idx];
            if (do_augment) {
                Rng rng(mix_seed(cfg.seed ^ 0xA06, static_cast<uint64_t>(epoch), idx));
                *input = augment(data.inputs[idx], rng);
            } else {
                *input = data.inputs[idx];
            }
        },
        0x51, "feature-transformer training");
}

// Stage 2: with all feature transformers frozen, train classifiers of
// levels 1..T-1 on the full training set. The finest classifier is left as
// stage 1 trained it.
template <typename T>
std::vector<StageStats> train_intermediate_classifiers(const C2FArchitecture& arch,
                                                       WeightStore<T>& store,
                                                       const Dataset<T>& data,
                                                       const TrainConfig& cfg) {
    cfg.validate();
    data.validate();
    std::vector<StageStats> per_level;
    int T_levels = arch.num_levels();
    bool do_augment = cfg.augmentation == TrainConfig::Augmentation::flips_and_shifts &&
                      cfg.augment_intermediate;

    // With augmentation off, features are fixed, so each level's inputs are
    // computed once and advanced level by level.
    std::vector<TensorT<T>> cached;
    if (!do_augment && T_levels > 1 && cfg.epochs > 0 && data.size() > 0)
        cached.resize(data.size());

    for (int level = 0; level + 1 < T_levels; ++level) {
        if (!cached.empty()) {
            int n = static_cast<int>(data.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_count()) if (par_enabled())
#endif
            for (int i = 0; i < n; ++i) {
                const TensorT<T>& prev =
                    level == 0 ? data.inputs[static_cast<size_t>(i)] : cached[static_cast<size_t>(i)];
                cached[static_cast<size_t>(i)] = transform_features(arch, store, level, prev);
            }
        }
        auto stack = detail::classifier_stack(arch, store, level);
        StageStats stats = detail::run_training_loop<T>(
            stack, data.size(), cfg,
            [&](int epoch, size_t idx, TensorT<T>* input, int* label) {
                *label = data.labels[idx];
                if (cached.empty()) {
                    Rng rng(mix_seed(cfg.seed ^ 0xA06, static_cast<uint64_t>(epoch), idx));
                    TensorT<T> x = do_augment ? augment(data.inputs[idx], rng) : data.inputs[idx];
                    for (int l = 0; l <= level; ++l)
                        x = transform_features(arch, store, l, x);
                    *input = std::move(x);
                } else {
                    *input = cached[idx];
                }
            },
            0x52 + static_cast<uint64_t>(level),
            "intermediate-classifier training (level " + std::to_string(level + 1) + ")");
        per_level.push_back(std::move(stats));
    }
    return per_level;
}

// ---- evaluation helpers ---------------------------------------------------

// Fraction of examples whose level-`level` prediction matches the label.
template <typename T>
double level_accuracy(const C2FArchitecture& arch, const WeightStore<T>& store,
                      const Dataset<T>& data, int level) {
    if (data.size() == 0) return 0;
    int n = static_cast<int>(data.size());
    long long correct = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : correct) \
    num_threads(worker_count()) if (par_enabled())
#endif
    for (int i = 0; i < n; ++i) {
        LevelEval<T> ev = forward_to_level(arch, store, data.inputs[static_cast<size_t>(i)], level);
        std::vector<double> d(ev.probs.data.begin(), ev.probs.data.end());
        int pred = 0;
        for (size_t j = 1; j < d.size(); ++j)
            if (d[j] > d[static_cast<size_t>(pred)]) pred = static_cast<int>(j);
        if (pred == data.labels[static_cast<size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

template <typename T>
double finest_accuracy(const C2FArchitecture& arch, const WeightStore<T>& store,
                       const Dataset<T>& data) {
    return level_accuracy(arch, store, data, arch.num_levels() - 1);
}

} // namespace c2f
