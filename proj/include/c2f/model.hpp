#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "c2f/layers.hpp"
#include "c2f/rng.hpp"
#include "c2f/tensor.hpp"

namespace c2f {

// One cascade level as configured: M conv layers of N filters (each followed
// by relu) ending in a maxpool for the feature block, and
// [extra pools] -> flatten -> dense hidden(s) -> dense(K) -> softmax for the
// classifier block.
struct LevelConfig {
    int conv_layers = 1;
    int filters = 8;
    int extra_pools = 0;
    std::vector<int> classifier_hidden{256};
};

// Parsed and validated network description. Level i's feature path is the
// level i-1 path plus one more transformer block, so features are always
// reusable downward.
struct C2FArchitecture {
    std::vector<int> input_shape;  // (H, W, C)
    int num_classes = 10;
    std::vector<LevelConfig> levels;

    // built during validation
    std::vector<std::vector<LayerSpec>> transformer;  // per level
    std::vector<std::vector<LayerSpec>> classifier;   // per level
    std::vector<std::vector<int>> feature_shape;      // shape of x_i, i in [0, T]
    std::vector<int> classifier_flat_dim;             // flatten size seen by level i's first dense
    std::vector<std::string> warnings;

    int num_levels() const { return static_cast<int>(levels.size()); }

    static C2FArchitecture from_json_text(const std::string& text);
    static C2FArchitecture from_file(const std::string& path);
    std::string to_json_text() const;

    // Fills the derived fields; throws Error naming the violated rule.
    void build_plan();
};

template <typename T>
struct WeightStore {
    std::vector<std::vector<LayerParams<T>>> transformer;  // [level][layer]
    std::vector<std::vector<LayerParams<T>>> classifier;

    template <typename U>
    WeightStore<U> cast() const {
        WeightStore<U> out;
        out.transformer.resize(transformer.size());
        out.classifier.resize(classifier.size());
        for (size_t l = 0; l < transformer.size(); ++l)
            for (const auto& p : transformer[l])
                out.transformer[l].push_back(p.template cast<U>());
        for (size_t l = 0; l < classifier.size(); ++l)
            for (const auto& p : classifier[l])
                out.classifier[l].push_back(p.template cast<U>());
        return out;
    }
};

template <typename T>
WeightStore<T> build_network(const C2FArchitecture& arch, uint64_t seed) {
    Rng rng(seed);
    WeightStore<T> store;
    store.transformer.resize(arch.levels.size());
    store.classifier.resize(arch.levels.size());
    for (size_t l = 0; l < arch.levels.size(); ++l) {
        for (const auto& spec : arch.transformer[l])
            store.transformer[l].push_back(init_layer_params<T>(spec, rng));
        for (const auto& spec : arch.classifier[l])
            store.classifier[l].push_back(init_layer_params<T>(spec, rng));
    }
    return store;
}

// Applies level i's feature transformer block to x_{i-1}  (levels 0-based).
template <typename T>
TensorT<T> transform_features(const C2FArchitecture& arch, const WeightStore<T>& store,
                              int level, const TensorT<T>& x_prev) {
    std::vector<const LayerParams<T>*> refs;
    for (const auto& p : store.transformer[static_cast<size_t>(level)]) refs.push_back(&p);
    return stack_forward(arch.transformer[static_cast<size_t>(level)], refs, x_prev);
}

// Applies level i's classifier block to x_i; returns the class distribution.
template <typename T>
TensorT<T> classify_level(const C2FArchitecture& arch, const WeightStore<T>& store,
                          int level, const TensorT<T>& features) {
    std::vector<const LayerParams<T>*> refs;
    for (const auto& p : store.classifier[static_cast<size_t>(level)]) refs.push_back(&p);
    return stack_forward(arch.classifier[static_cast<size_t>(level)], refs, features);
}

template <typename T>
struct LevelEval {
    TensorT<T> features;
    TensorT<T> probs;
};

// Full pass from the raw input up to level i (0-based), no caching.
template <typename T>
LevelEval<T> forward_to_level(const C2FArchitecture& arch, const WeightStore<T>& store,
                              const TensorT<T>& input, int level) {
    if (level < 0 || level >= arch.num_levels())
        fail("forward_to_level: level " + std::to_string(level + 1) + " out of range [1," +
             std::to_string(arch.num_levels()) + "]");
    TensorT<T> x = input;
    for (int i = 0; i <= level; ++i)
        x = transform_features(arch, store, i, x);
    LevelEval<T> out;
    out.probs = classify_level(arch, store, level, x);
    out.features = std::move(x);
    return out;
}

// Canonical enumeration of every named parameter tensor, used by the weight
// file format, checkpointing, and the optimizer.
struct ParamName {
    int level;       // 0-based
    bool in_classifier;
    int layer;       // index within the block
    std::string field;  // "weight", "bias", "bn_scale", ...

    std::string str() const {
        return (in_classifier ? "c" : "t") + std::to_string(level) + "." +
               std::to_string(layer) + "." + field;
    }
};

template <typename T>
void for_each_param_tensor(const C2FArchitecture& arch, WeightStore<T>& store,
                           const std::function<void(const ParamName&, TensorT<T>&)>& fn) {
    auto visit_block = [&](int level, bool cls, const std::vector<LayerSpec>& specs,
                           std::vector<LayerParams<T>>& params) {
        for (size_t j = 0; j < specs.size(); ++j) {
            ParamName n{level, cls, static_cast<int>(j), ""};
            switch (specs[j].kind) {
                case LayerKind::Conv3x3:
                case LayerKind::Dense:
                    n.field = "weight"; fn(n, params[j].weight);
                    n.field = "bias"; fn(n, params[j].bias);
                    break;
                case LayerKind::BatchNormInference:
                    n.field = "bn_scale"; fn(n, params[j].bn_scale);
                    n.field = "bn_shift"; fn(n, params[j].bn_shift);
                    n.field = "bn_mean"; fn(n, params[j].bn_mean);
                    n.field = "bn_var"; fn(n, params[j].bn_var);
                    break;
                default:
                    break;
            }
        }
    };
    for (int l = 0; l < arch.num_levels(); ++l)
        visit_block(l, false, arch.transformer[static_cast<size_t>(l)],
                    store.transformer[static_cast<size_t>(l)]);
    for (int l = 0; l < arch.num_levels(); ++l)
        visit_block(l, true, arch.classifier[static_cast<size_t>(l)],
                    store.classifier[static_cast<size_t>(l)]);
}

// ---- weight file I/O ----------------------------------------------------
//
// Binary, little-endian. Header: magic "C2FW", version u32, flags u32
// (bit 0: payload stored as f32), tensor count u32. Per tensor: name length
// u32 + UTF-8 name, rank u32, dims u32[], payload.

struct NamedTensor {
    std::string name;
    std::vector<int> dims;
    std::vector<double> values;  // widened to f64 on read
};

struct WeightFileContents {
    bool f32_payload = false;
    std::vector<NamedTensor> tensors;
};

void write_weight_file(const std::string& path, const std::vector<NamedTensor>& tensors,
                       bool as_f32);
WeightFileContents read_weight_file(const std::string& path);

template <typename T>
void save_weights(const C2FArchitecture& arch, const WeightStore<T>& store,
                  const std::string& path, bool as_f32 = sizeof(T) == 4) {
    std::vector<NamedTensor> named;
    auto& mut = const_cast<WeightStore<T>&>(store);
    for_each_param_tensor<T>(arch, mut, [&](const ParamName& n, TensorT<T>& t) {
        NamedTensor nt;
        nt.name = n.str();
        nt.dims = t.shape;
        nt.values.assign(t.data.begin(), t.data.end());
        named.push_back(std::move(nt));
    });
    write_weight_file(path, named, as_f32);
}

template <typename T>
WeightStore<T> load_weights(const C2FArchitecture& arch, const std::string& path) {
    WeightFileContents file = read_weight_file(path);
    WeightStore<T> store = build_network<T>(arch, 0);
    size_t next = 0;
    for_each_param_tensor<T>(arch, store, [&](const ParamName& n, TensorT<T>& t) {
        if (next >= file.tensors.size())
            fail("weight file " + path + ": missing tensor " + n.str());
        const NamedTensor& nt = file.tensors[next++];
        if (nt.name != n.str())
            fail("weight file " + path + ": shape-table mismatch: expected tensor " + n.str() +
                 ", found " + nt.name);
        if (nt.dims != t.shape)
            fail("weight file " + path + ": shape-table mismatch for " + n.str() +
                 ": architecture wants " + Tensor::shape_string(t.shape) + ", file has " +
                 Tensor::shape_string(nt.dims));
        for (size_t i = 0; i < nt.values.size(); ++i)
            t.data[i] = static_cast<T>(nt.values[i]);
    });
    if (next != file.tensors.size())
        fail("weight file " + path + ": shape-table mismatch: file has " +
             std::to_string(file.tensors.size() - next) + " extra tensor(s)");
    return store;
}

} // namespace c2f
