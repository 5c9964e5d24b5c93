#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "c2f/bo.hpp"
#include "c2f/cascade.hpp"
#include "c2f/trainer.hpp"

namespace c2f {

enum class Precision { f32, f64 };

// Everything a full experiment needs: data, architecture, training, cost
// provider, threshold search, and where to put artifacts. Loaded from JSON;
// CLI flags override individual fields.
struct ExperimentConfig {
    std::string arch_path;

    struct DatasetConfig {
        std::string kind = "mnist";  // mnist | cifar10 | synth
        std::string root;            // empty -> $C2F_DATA_ROOT/<kind>
        // train/val/test sizes; all zero means "split everything by ratio"
        std::array<int, 3> subset_sizes{0, 0, 0};
        int synth_count = 9000;      // corpus size when kind == synth
        uint64_t synth_seed = 7;
    } dataset;

    std::array<double, 3> split_ratio{4, 1, 1};
    ConfidenceKind confidence = ConfidenceKind::max_prob;

    struct CostConfig {
        std::string provider = "mac";  // mac | latency | table
        std::string table_path;        // provider == table
        int latency_reps = 5;
        int latency_sample_inputs = 8;
    } cost;

    std::vector<double> lambdas{0.0, 0.25, 0.5, 0.75, 1.0};
    BOBudget bo;
    AcquisitionConfig acquisition;
    GPConfig gp;  // empty length_scales -> per-dimension default 0.2
    TrainConfig train;

    uint64_t seed = 1;
    int workers = 0;  // 0 = hardware; results do not depend on this
    Precision precision = Precision::f64;
    std::string output_dir = "out";
    bool sweep_single_threshold = true;
    bool sweep_baselines = true;

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);
    std::string canonical_json() const;
    uint64_t config_hash() const;
    std::string resolved_data_root() const;  // applies the C2F_DATA_ROOT fallback
};

struct SweepRow {
    std::string kind;          // c2f | single_threshold | baseline
    double lambda = 0;         // meaningless for baseline rows
    int fixed_level = -1;      // baseline rows only, 1-based
    std::vector<double> gamma; // per-level thresholds (single mode: broadcast)
    uint64_t seed = 0;

    double val_objective = 0;
    double val_error_norm = 0;
    double val_energy_norm = 0;
    double val_accuracy = 0;
    bool val_abs_error_fallback = false;

    double test_accuracy = 0;
    double test_energy_norm = 0;
    std::vector<int> test_exit_histogram;
    std::vector<double> test_level_accuracy;  // -1 when no example exits there
};

struct SweepReport {
    std::vector<SweepRow> rows;

    uint64_t config_hash = 0;
    uint64_t seed = 0;
    std::string dataset_kind;
    std::string confidence_kind;
    std::string cost_provider;
    bool constant_power_edp_assumption = false;
    std::vector<std::string> cost_notes;
    int num_levels = 0;
    std::array<int, 3> split_sizes{0, 0, 0};
    std::vector<double> level_cost_normalized;
    double finest_test_accuracy = 0;
    double finest_val_accuracy = 0;
    std::vector<std::string> warnings;
};

// Per-level metrics of a threshold assignment against a cached table.
struct CascadeMetrics {
    double accuracy = 0;
    double energy_norm = 0;
    std::vector<int> exit_histogram;
    std::vector<double> level_accuracy;  // over examples exiting at each level; -1 if none
};

CascadeMetrics table_cascade_metrics(const EvalTable& table, const ThresholdVector& thresholds);

// ---- stages --------------------------------------------------------------
//
// Artifacts land under cfg.output_dir:
//   weights_stage1.c2fw + stage1.json   after feature-transformer training
//   weights.c2fw + stage2.json          after intermediate-classifier training
//   table_val.c2ft / table_test.c2ft     evaluation tables
//   history_<mode>_lambda<v>.csv         BO traces
//   report.csv / report.json / pareto.dat
// A manifest.json records the config hash; stages whose artifacts exist and
// match are skipped on re-runs.

void run_train_stages(const ExperimentConfig& cfg);
void run_table_stage(const ExperimentConfig& cfg);
BOResult run_tune(const ExperimentConfig& cfg, double lambda);
SweepReport run_pipeline(const ExperimentConfig& cfg);
SweepReport run_single_threshold_mode(const ExperimentConfig& cfg);
SweepReport run_baseline_mode(const ExperimentConfig& cfg);
SweepReport rebuild_report(const ExperimentConfig& cfg);

void emit_report(const SweepReport& report, const std::string& dir);
SweepReport parse_report_csv(const std::string& path);

PredictionTrace run_infer(const ExperimentConfig& cfg, const std::string& image_path,
                          const std::vector<double>& thresholds);

} // namespace c2f
