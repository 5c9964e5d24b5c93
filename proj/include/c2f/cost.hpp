#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "c2f/model.hpp"

namespace c2f {

// Per-level cumulative inference cost c_1..c_T, normalized against the
// finest level when plugged into the objective. The analytic MAC provider is
// deterministic and is what acceptance-grade runs use; the latency provider
// is a desk-scale EDP stand-in (latency squared, constant-power assumption).
struct CostProfile {
    enum class Provider { analytic_mac, measured_latency, user_table };

    Provider provider = Provider::analytic_mac;
    std::vector<double> cumulative;   // c_1..c_T, raw units
    std::vector<std::string> notes;   // provider assumptions, recorded in reports

    int num_levels() const { return static_cast<int>(cumulative.size()); }
    double reference() const { return cumulative.back(); }
    double normalized(int level) const {
        return cumulative[static_cast<size_t>(level)] / reference();
    }
    const char* provider_name() const;

    // 0 < c_1 <= ... <= c_T
    void validate() const;
};

// Multiply-accumulate count of one layer on the given input shape.
// conv3x3: H*W*9*Cin*Cout; dense: In*Out; everything else counts 0.
long long layer_macs(const LayerSpec& spec, const std::vector<int>& in_shape);

// MACs of a whole block, following the shape through it.
long long block_macs(const std::vector<LayerSpec>& specs, std::vector<int> shape);

// MACs of the full level-i inference path: transformer blocks 1..i plus the
// level-i classifier block. Level is 0-based.
long long cumulative_level_macs(const C2FArchitecture& arch, int level);

// Classifier block MACs alone (used to check the extra-pool design rule).
long long classifier_macs(const C2FArchitecture& arch, int level);

double normalized_level_cost(const C2FArchitecture& arch, int level);

CostProfile analytic_cost_profile(const C2FArchitecture& arch);

// "level,cost" CSV, one row per level, 1-based level indices.
CostProfile cost_profile_from_csv(const std::string& path, int num_levels);

struct LatencySample {
    int level = 0;             // 0-based
    double median_seconds = 0; // per example
    double edp_proxy = 0;      // median^2
    double cv = 0;             // stddev/mean across repetitions
    int reps = 0;
    bool timer_warning = false;  // median under ~100 clock ticks
};

LatencySample summarize_latency_reps(int level, const std::vector<double>& per_example_seconds);

// Times forward passes to `level` over the sample inputs; first rep is a
// discarded warm-up. Requires reps >= 3.
template <typename T>
LatencySample measure_level_latency(const C2FArchitecture& arch, const WeightStore<T>& store,
                                    const std::vector<TensorT<T>>& inputs, int level, int reps) {
    if (reps < 3) fail("measure_level_latency: need reps >= 3, got " + std::to_string(reps));
    if (inputs.empty()) fail("measure_level_latency: no sample inputs");
    using clock = std::chrono::steady_clock;
    std::vector<double> per_rep;
    for (int r = 0; r < reps + 1; ++r) {
        auto t0 = clock::now();
        for (const auto& in : inputs)
            forward_to_level(arch, store, in, level);
        auto t1 = clock::now();
        double secs = std::chrono::duration<double>(t1 - t0).count() /
                      static_cast<double>(inputs.size());
        if (r > 0) per_rep.push_back(secs);  // warm-up discarded
    }
    return summarize_latency_reps(level, per_rep);
}

// EDP-proxy cost profile: c_i = (median latency of the level-i path)^2.
// Medians are forced non-decreasing across levels before squaring so the
// profile invariant holds under timer noise; when that fires a note records it.
template <typename T>
CostProfile latency_edp_cost_profile(const C2FArchitecture& arch, const WeightStore<T>& store,
                                     const std::vector<TensorT<T>>& inputs, int reps,
                                     std::vector<LatencySample>* samples = nullptr) {
    CostProfile profile;
    profile.provider = CostProfile::Provider::measured_latency;
    profile.notes.push_back("edp=latency^2 under a constant-power assumption");
    double running = 0;
    bool adjusted = false;
    for (int l = 0; l < arch.num_levels(); ++l) {
        LatencySample s = measure_level_latency(arch, store, inputs, l, reps);
        if (samples) samples->push_back(s);
        double m = s.median_seconds;
        if (m < running) {
            m = running;
            adjusted = true;
        }
        running = m;
        profile.cumulative.push_back(m * m);
    }
    if (adjusted)
        profile.notes.push_back("non-monotone medians clamped to running max");
    profile.validate();
    return profile;
}

} // namespace c2f
