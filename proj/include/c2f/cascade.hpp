#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "c2f/cost.hpp"
#include "c2f/model.hpp"
#include "c2f/parallel.hpp"

namespace c2f {

// How a class distribution is condensed to a confidence in [0,1]
// (larger = more confident):
//   max_prob: probability of the top label
//   margin:   top minus second probability
//   entropy:  1 - H(p)/ln K  (normalized entropy, inverted)
enum class ConfidenceKind { max_prob, margin, entropy };

const char* confidence_kind_name(ConfidenceKind k);
ConfidenceKind confidence_kind_from_string(const std::string& s);

double confidence_score(const std::vector<double>& dist, ConfidenceKind kind);

template <typename T>
double confidence_score_t(const TensorT<T>& dist, ConfidenceKind kind) {
    std::vector<double> d(dist.data.begin(), dist.data.end());
    return confidence_score(d, kind);
}

// Per-level exit thresholds, one for levels 1..T-1. A component set to the
// never-exit sentinel disables that exit entirely; this is distinct from 1.0,
// which still exits on a saturated one-hot distribution (the exit test is >=).
struct ThresholdVector {
    std::vector<double> values;

    static constexpr double kNeverExit = std::numeric_limits<double>::infinity();

    ThresholdVector() = default;
    explicit ThresholdVector(std::vector<double> v) : values(std::move(v)) { validate(); }

    static ThresholdVector zeros(int n) {
        return ThresholdVector(std::vector<double>(static_cast<size_t>(n), 0.0));
    }
    static ThresholdVector never_exit(int n) {
        return ThresholdVector(std::vector<double>(static_cast<size_t>(n), kNeverExit));
    }

    int size() const { return static_cast<int>(values.size()); }
    double operator[](int i) const { return values[static_cast<size_t>(i)]; }

    void validate() const {
        for (double v : values)
            if (!(v == kNeverExit || (v >= 0.0 && v <= 1.0)))
                fail("thresholds: component " + std::to_string(v) +
                     " outside [0,1] and not the never-exit sentinel");
    }
};

int argmax_lowest(const std::vector<double>& v);

struct PredictionTrace {
    struct LevelRecord {
        std::vector<double> distribution;
        double confidence = 0;
        int predicted = 0;
    };
    int exit_level = 0;  // 0-based
    int predicted_label = 0;
    std::vector<LevelRecord> per_level;  // exactly exit_level+1 entries
};

// Sequential early-exit inference: evaluate levels from the coarsest,
// reusing features, and stop at the first level whose confidence meets its
// threshold (the finest level always exits).
template <typename T>
PredictionTrace cascade_predict(const C2FArchitecture& arch, const WeightStore<T>& store,
                                const TensorT<T>& input, const ThresholdVector& thresholds,
                                ConfidenceKind kind) {
    int T_levels = arch.num_levels();
    if (thresholds.size() != T_levels - 1)
        fail("cascade_predict: expected " + std::to_string(T_levels - 1) + " thresholds, got " +
             std::to_string(thresholds.size()));
    PredictionTrace trace;
    TensorT<T> x = input;
    for (int i = 0; i < T_levels; ++i) {
        x = transform_features(arch, store, i, x);
        TensorT<T> probs = classify_level(arch, store, i, x);
        PredictionTrace::LevelRecord rec;
        rec.distribution.assign(probs.data.begin(), probs.data.end());
        rec.predicted = argmax_lowest(rec.distribution);
        rec.confidence = confidence_score(rec.distribution, kind);
        trace.per_level.push_back(std::move(rec));
        if (i == T_levels - 1 || trace.per_level.back().confidence >= thresholds[i]) {
            trace.exit_level = i;
            trace.predicted_label = trace.per_level.back().predicted;
            break;
        }
    }
    return trace;
}

// Full per-example, per-level cache of what the cascade could observe:
// predicted label and confidence at every level, plus the cumulative level
// costs. Thresholds can then be evaluated in O(N*T) without re-inference.
struct EvalTable {
    int num_examples = 0;
    int num_levels = 0;
    int num_classes = 0;
    std::vector<int32_t> true_labels;   // [N]
    std::vector<int32_t> predicted;     // [N*T]
    std::vector<double> confidences;    // [N*T]
    std::vector<double> level_cost;     // cumulative c_1..c_T

    int32_t pred(int n, int level) const {
        return predicted[static_cast<size_t>(n) * num_levels + level];
    }
    double conf(int n, int level) const {
        return confidences[static_cast<size_t>(n) * num_levels + level];
    }

    void save(const std::string& path) const;
    static EvalTable load(const std::string& path);
};

// First level whose cached confidence meets its threshold, else the finest.
int table_exit_level(const EvalTable& table, int n, const ThresholdVector& thresholds);

struct ObjectiveValue {
    double objective = 0;
    double error_norm = 0;
    double energy_norm = 0;
    double cascade_error = 0;  // raw 0/1 error of the cascade
    double finest_error = 0;   // raw 0/1 error of level T
    double mean_cost = 0;      // raw cost units
    std::vector<int> exit_histogram;     // [T]
    bool absolute_error_fallback = false;  // finest error was 0; error_norm is absolute
};

// O = lambda * error_norm + (1-lambda) * energy_norm, both normalized
// against predicting everything with the finest level.
ObjectiveValue evaluate_objective(const EvalTable& table, const ThresholdVector& thresholds,
                                  double lambda);

template <typename T>
EvalTable build_eval_table(const std::vector<TensorT<T>>& inputs,
                           const std::vector<int>& labels, const C2FArchitecture& arch,
                           const WeightStore<T>& store, ConfidenceKind kind,
                           const CostProfile& cost) {
    if (inputs.size() != labels.size())
        fail("build_eval_table: inputs/labels length mismatch");
    if (cost.num_levels() != arch.num_levels())
        fail("build_eval_table: cost profile has " + std::to_string(cost.num_levels()) +
             " levels, architecture has " + std::to_string(arch.num_levels()));
    cost.validate();
    EvalTable t;
    t.num_examples = static_cast<int>(inputs.size());
    t.num_levels = arch.num_levels();
    t.num_classes = arch.num_classes;
    t.level_cost = cost.cumulative;
    t.true_labels.assign(labels.begin(), labels.end());
    t.predicted.assign(static_cast<size_t>(t.num_examples) * t.num_levels, 0);
    t.confidences.assign(static_cast<size_t>(t.num_examples) * t.num_levels, 0.0);

    int n = t.num_examples;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_count()) if (par_enabled())
#endif
    for (int i = 0; i < n; ++i) {
        TensorT<T> x = inputs[static_cast<size_t>(i)];
        for (int level = 0; level < t.num_levels; ++level) {
            x = transform_features(arch, store, level, x);
            TensorT<T> probs = classify_level(arch, store, level, x);
            std::vector<double> d(probs.data.begin(), probs.data.end());
            size_t slot = static_cast<size_t>(i) * t.num_levels + level;
            t.predicted[slot] = argmax_lowest(d);
            t.confidences[slot] = confidence_score(d, kind);
        }
    }
    return t;
}

} // namespace c2f
