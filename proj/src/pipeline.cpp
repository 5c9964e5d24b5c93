#include "c2f/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "c2f/data.hpp"
#include "c2f/parallel.hpp"
#include "c2f/synth.hpp"

namespace fs = std::filesystem;

namespace c2f {

// ---- config --------------------------------------------------------------

namespace {

Precision precision_from_string(const std::string& s) {
    if (s == "f32") return Precision::f32;
    if (s == "f64") return Precision::f64;
    fail("config: precision must be f32 or f64, got '" + s + "'");
}

const char* precision_name(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

TrainConfig::Optimizer optimizer_from_string(const std::string& s) {
    if (s == "rmsprop") return TrainConfig::Optimizer::rmsprop;
    if (s == "sgd") return TrainConfig::Optimizer::sgd;
    fail("config: optimizer must be rmsprop or sgd, got '" + s + "'");
}

TrainConfig::Augmentation augmentation_from_string(const std::string& s) {
    if (s == "none") return TrainConfig::Augmentation::none;
    if (s == "flips_and_shifts") return TrainConfig::Augmentation::flips_and_shifts;
    fail("config: augmentation must be none or flips_and_shifts, got '" + s + "'");
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_lambda(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

} // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentConfig cfg = from_json_text(ss.str());
    if (!cfg.arch_path.empty() && cfg.arch_path[0] != '/') {
        // architecture path is relative to the config file
        fs::path base = fs::path(path).parent_path();
        cfg.arch_path = (base / cfg.arch_path).string();
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("config: invalid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    try {
        cfg.arch_path = j.at("arch").get<std::string>();
        if (j.contains("dataset")) {
            const auto& d = j["dataset"];
            cfg.dataset.kind = d.value("kind", cfg.dataset.kind);
            cfg.dataset.root = d.value("root", cfg.dataset.root);
            if (d.contains("subset_sizes")) {
                auto v = d["subset_sizes"].get<std::vector<int>>();
                if (v.size() != 3) fail("config: dataset.subset_sizes needs 3 entries");
                cfg.dataset.subset_sizes = {v[0], v[1], v[2]};
            }
            cfg.dataset.synth_count = d.value("synth_count", cfg.dataset.synth_count);
            cfg.dataset.synth_seed = d.value("synth_seed", cfg.dataset.synth_seed);
        }
        if (j.contains("split_ratio")) {
            auto v = j["split_ratio"].get<std::vector<double>>();
            if (v.size() != 3) fail("config: split_ratio needs 3 entries");
            cfg.split_ratio = {v[0], v[1], v[2]};
        }
        if (j.contains("confidence"))
            cfg.confidence = confidence_kind_from_string(j["confidence"].get<std::string>());
        if (j.contains("cost")) {
            const auto& c = j["cost"];
            cfg.cost.provider = c.value("provider", cfg.cost.provider);
            cfg.cost.table_path = c.value("table_path", cfg.cost.table_path);
            cfg.cost.latency_reps = c.value("latency_reps", cfg.cost.latency_reps);
            cfg.cost.latency_sample_inputs =
                c.value("latency_sample_inputs", cfg.cost.latency_sample_inputs);
        }
        if (j.contains("lambdas")) cfg.lambdas = j["lambdas"].get<std::vector<double>>();
        if (j.contains("bo")) {
            const auto& b = j["bo"];
            cfg.bo.init_random_evals = b.value("init_random_evals", cfg.bo.init_random_evals);
            cfg.bo.max_iterations = b.value("max_iterations", cfg.bo.max_iterations);
            cfg.bo.convergence_window = b.value("convergence_window", cfg.bo.convergence_window);
            cfg.bo.convergence_tol = b.value("convergence_tol", cfg.bo.convergence_tol);
            cfg.bo.acq_opt_evals = b.value("acq_opt_evals", cfg.bo.acq_opt_evals);
        }
        if (j.contains("acquisition")) {
            const auto& a = j["acquisition"];
            cfg.acquisition.ucb_beta = a.value("ucb_beta", cfg.acquisition.ucb_beta);
            std::string sched = a.value("schedule", std::string("fixed"));
            cfg.acquisition.schedule = sched == "log_growth"
                                           ? AcquisitionConfig::Schedule::log_growth
                                           : AcquisitionConfig::Schedule::fixed;
        }
        if (j.contains("gp")) {
            const auto& g = j["gp"];
            if (g.contains("length_scale"))
                cfg.gp.length_scales = {g["length_scale"].get<double>()};
            cfg.gp.noise_variance = g.value("noise_variance", cfg.gp.noise_variance);
            cfg.gp.refine_length_scale =
                g.value("refine_length_scale", cfg.gp.refine_length_scale);
        }
        if (j.contains("train")) {
            const auto& t = j["train"];
            if (t.contains("optimizer"))
                cfg.train.optimizer = optimizer_from_string(t["optimizer"].get<std::string>());
            cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
            cfg.train.lr_decay_per_update =
                t.value("lr_decay_per_update", cfg.train.lr_decay_per_update);
            cfg.train.rmsprop_smoothing =
                t.value("rmsprop_smoothing", cfg.train.rmsprop_smoothing);
            cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
            cfg.train.epochs = t.value("epochs", cfg.train.epochs);
            if (t.contains("augmentation"))
                cfg.train.augmentation =
                    augmentation_from_string(t["augmentation"].get<std::string>());
            cfg.train.augment_intermediate =
                t.value("augment_intermediate", cfg.train.augment_intermediate);
        }
        cfg.seed = j.value("seed", cfg.seed);
        cfg.workers = j.value("workers", cfg.workers);
        if (j.contains("precision"))
            cfg.precision = precision_from_string(j["precision"].get<std::string>());
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
        cfg.sweep_single_threshold = j.value("sweep_single_threshold", cfg.sweep_single_threshold);
        cfg.sweep_baselines = j.value("sweep_baselines", cfg.sweep_baselines);
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("config: ") + e.what());
    }
    return cfg;
}

std::string ExperimentConfig::canonical_json() const {
    nlohmann::json j;
    j["arch"] = arch_path;
    j["dataset"] = {{"kind", dataset.kind},
                    {"root", dataset.root},
                    {"subset_sizes", dataset.subset_sizes},
                    {"synth_count", dataset.synth_count},
                    {"synth_seed", dataset.synth_seed}};
    j["split_ratio"] = split_ratio;
    j["confidence"] = confidence_kind_name(confidence);
    j["cost"] = {{"provider", cost.provider},
                 {"table_path", cost.table_path},
                 {"latency_reps", cost.latency_reps},
                 {"latency_sample_inputs", cost.latency_sample_inputs}};
    j["lambdas"] = lambdas;
    j["bo"] = {{"init_random_evals", bo.init_random_evals},
               {"max_iterations", bo.max_iterations},
               {"convergence_window", bo.convergence_window},
               {"convergence_tol", bo.convergence_tol},
               {"acq_opt_evals", bo.acq_opt_evals}};
    j["acquisition"] = {{"ucb_beta", acquisition.ucb_beta},
                        {"schedule", acquisition.schedule == AcquisitionConfig::Schedule::fixed
                                         ? "fixed"
                                         : "log_growth"}};
    j["gp"] = {{"length_scales", gp.length_scales},
               {"noise_variance", gp.noise_variance},
               {"refine_length_scale", gp.refine_length_scale}};
    j["train"] = {{"optimizer",
                   train.optimizer == TrainConfig::Optimizer::rmsprop ? "rmsprop" : "sgd"},
                  {"learning_rate", train.learning_rate},
                  {"lr_decay_per_update", train.lr_decay_per_update},
                  {"rmsprop_smoothing", train.rmsprop_smoothing},
                  {"batch_size", train.batch_size},
                  {"epochs", train.epochs},
                  {"augmentation", train.augmentation == TrainConfig::Augmentation::none
                                       ? "none"
                                       : "flips_and_shifts"},
                  {"augment_intermediate", train.augment_intermediate}};
    j["seed"] = seed;
    j["precision"] = precision_name(precision);
    j["sweep_single_threshold"] = sweep_single_threshold;
    j["sweep_baselines"] = sweep_baselines;
    // workers and output_dir deliberately excluded: they must not change results
    return j.dump();
}

uint64_t ExperimentConfig::config_hash() const { return fnv1a(canonical_json()); }

std::string ExperimentConfig::resolved_data_root() const {
    if (!dataset.root.empty()) return dataset.root;
    if (const char* env = std::getenv("C2F_DATA_ROOT"))
        return (fs::path(env) / dataset.kind).string();
    if (dataset.kind == "synth")
        return (fs::path(output_dir) / "synth_data").string();
    fail("config: dataset.root is empty and C2F_DATA_ROOT is not set");
}

// ---- table metrics --------------------------------------------------------

CascadeMetrics table_cascade_metrics(const EvalTable& table, const ThresholdVector& thresholds) {
    CascadeMetrics m;
    m.exit_histogram.assign(static_cast<size_t>(table.num_levels), 0);
    std::vector<int> correct_at(static_cast<size_t>(table.num_levels), 0);
    long long correct = 0;
    double cost_sum = 0;
    for (int n = 0; n < table.num_examples; ++n) {
        int exit = table_exit_level(table, n, thresholds);
        m.exit_histogram[static_cast<size_t>(exit)]++;
        bool ok = table.pred(n, exit) == table.true_labels[static_cast<size_t>(n)];
        if (ok) {
            ++correct;
            correct_at[static_cast<size_t>(exit)]++;
        }
        cost_sum += table.level_cost[static_cast<size_t>(exit)];
    }
    if (table.num_examples > 0) {
        m.accuracy = static_cast<double>(correct) / table.num_examples;
        m.energy_norm = cost_sum / table.num_examples / table.level_cost.back();
    }
    for (int l = 0; l < table.num_levels; ++l)
        m.level_accuracy.push_back(
            m.exit_histogram[static_cast<size_t>(l)] == 0
                ? -1.0
                : static_cast<double>(correct_at[static_cast<size_t>(l)]) /
                      m.exit_histogram[static_cast<size_t>(l)]);
    return m;
}

// ---- pipeline runner ------------------------------------------------------

namespace {

template <typename Fn>
auto with_stage(const std::string& name, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error("[stage:" + name + "] " + e.what());
    }
}

struct Manifest {
    uint64_t config_hash = 0;
    nlohmann::json stages = nlohmann::json::object();
    std::string path;

    static Manifest open(const std::string& dir, uint64_t hash) {
        Manifest m;
        m.path = (fs::path(dir) / "manifest.json").string();
        m.config_hash = hash;
        std::ifstream in(m.path);
        if (in) {
            try {
                nlohmann::json j = nlohmann::json::parse(in);
                if (j.value("config_hash", std::string()) == std::to_string(hash))
                    m.stages = j.value("stages", nlohmann::json::object());
                else
                    std::fprintf(stderr,
                                 "note: %s belongs to a different config; stages rerun\n",
                                 m.path.c_str());
            } catch (...) {
                // unreadable manifest: rebuild everything
            }
        }
        return m;
    }

    bool done(const std::string& stage) const { return stages.value(stage, false); }

    void mark(const std::string& stage) {
        stages[stage] = true;
        nlohmann::json j;
        j["config_hash"] = std::to_string(config_hash);
        j["stages"] = stages;
        std::ofstream out(path);
        out << j.dump(2) << "\n";
    }
};

uint64_t bo_seed_for(uint64_t base, double lambda, uint64_t mode_salt) {
    return mix_seed(base, std::bit_cast<uint64_t>(lambda), mode_salt);
}

template <typename T>
class Runner {
public:
    explicit Runner(const ExperimentConfig& cfg)
        : cfg_(cfg), manifest_(Manifest::open(ensure_dir(cfg), cfg.config_hash())) {
        set_max_workers(cfg.workers);
        arch_ = C2FArchitecture::from_file(cfg.arch_path);
        for (const auto& w : arch_.warnings) warnings_.push_back(w);
    }

    void ensure_data() {
        if (data_ready_) return;
        with_stage("data", [&] {
            Dataset<T> full = load_full();
            size_t want = static_cast<size_t>(cfg_.dataset.subset_sizes[0]) +
                          cfg_.dataset.subset_sizes[1] + cfg_.dataset.subset_sizes[2];
            std::array<double, 3> ratio = cfg_.split_ratio;
            if (want > 0) {
                auto idx = stratified_subsample(full.labels, full.num_classes, want, cfg_.seed);
                full = take(full, idx, SplitTag::none);
                ratio = {static_cast<double>(cfg_.dataset.subset_sizes[0]),
                         static_cast<double>(cfg_.dataset.subset_sizes[1]),
                         static_cast<double>(cfg_.dataset.subset_sizes[2])};
            }
            splits_ = split_dataset(full, ratio, cfg_.seed);
            if (!splits_.warning.empty()) warnings_.push_back(splits_.warning);
            if (splits_.train.num_classes != arch_.num_classes)
                fail("dataset has " + std::to_string(splits_.train.num_classes) +
                     " classes, architecture wants " + std::to_string(arch_.num_classes));
            data_ready_ = true;
        });
    }

    void ensure_stage1() {
        if (stage1_ready_) return;
        std::string path = artifact("weights_stage1.c2fw");
        if (manifest_.done("train_features") && fs::exists(path)) {
            store_ = load_weights<T>(arch_, path);
            stage1_ready_ = true;
            return;
        }
        ensure_data();
        with_stage("train-features", [&] {
            store_ = build_network<T>(arch_, cfg_.seed);
            StageStats stats = train_feature_transformers(arch_, store_, splits_.train,
                                                          train_cfg());
            save_weights(arch_, store_, path);
            write_stage_sidecar("stage1.json", "train-features", {stats});
            manifest_.mark("train_features");
            stage1_ready_ = true;
        });
    }

    void ensure_stage2() {
        if (stage2_ready_) return;
        std::string path = artifact("weights.c2fw");
        if (manifest_.done("train_classifiers") && fs::exists(path)) {
            store_ = load_weights<T>(arch_, path);
            stage1_ready_ = true;
            stage2_ready_ = true;
            return;
        }
        ensure_stage1();
        ensure_data();
        with_stage("train-classifiers", [&] {
            auto stats = train_intermediate_classifiers(arch_, store_, splits_.train,
                                                        train_cfg());
            save_weights(arch_, store_, path);
            write_stage_sidecar("stage2.json", "train-classifiers", stats);
            manifest_.mark("train_classifiers");
            stage2_ready_ = true;
        });
    }

    void ensure_tables() {
        if (tables_ready_) return;
        std::string val_path = artifact("table_val.c2ft");
        std::string test_path = artifact("table_test.c2ft");
        if (manifest_.done("tables") && fs::exists(val_path) && fs::exists(test_path)) {
            val_table_ = EvalTable::load(val_path);
            test_table_ = EvalTable::load(test_path);
            if (val_table_.num_levels == arch_.num_levels()) {
                cost_notes_from_table();
                tables_ready_ = true;
                return;
            }
        }
        ensure_stage2();
        ensure_data();
        with_stage("table", [&] {
            CostProfile cost = make_cost_profile();
            cost_provider_ = cost.provider_name();
            cost_notes_ = cost.notes;
            val_table_ = build_eval_table(splits_.val.inputs, splits_.val.labels, arch_, store_,
                                          cfg_.confidence, cost);
            test_table_ = build_eval_table(splits_.test.inputs, splits_.test.labels, arch_,
                                           store_, cfg_.confidence, cost);
            val_table_.save(val_path);
            test_table_.save(test_path);
            manifest_.mark("tables");
            tables_ready_ = true;
        });
    }

    BOResult tune(double lambda, bool single_mode,
                  const std::vector<ThresholdVector>& warm = {}) {
        ensure_tables();
        return with_stage("tune", [&] {
            uint64_t seed = bo_seed_for(cfg_.seed, lambda, single_mode ? 0x731 : 0x730);
            BOResult r = single_mode
                             ? optimize_shared_threshold(val_table_, lambda, cfg_.bo,
                                                         cfg_.acquisition, cfg_.gp, seed)
                             : optimize_thresholds(val_table_, lambda, cfg_.bo,
                                                   cfg_.acquisition, cfg_.gp, seed, warm);
            std::string name = std::string("history_") + (single_mode ? "single" : "multi") +
                               "_lambda" + format_lambda(lambda) + ".csv";
            write_history_csv(artifact(name), r.history);
            return r;
        });
    }

    SweepRow result_row(const std::string& kind, double lambda, const BOResult& r,
                        uint64_t seed) {
        SweepRow row;
        row.kind = kind;
        row.lambda = lambda;
        row.seed = seed;
        row.gamma = r.best.values;
        row.val_objective = r.best_objective;
        row.val_error_norm = r.best_detail.error_norm;
        row.val_energy_norm = r.best_detail.energy_norm;
        row.val_accuracy = 1.0 - r.best_detail.cascade_error;
        row.val_abs_error_fallback = r.best_detail.absolute_error_fallback;
        CascadeMetrics tm = table_cascade_metrics(test_table_, r.best);
        row.test_accuracy = tm.accuracy;
        row.test_energy_norm = tm.energy_norm;
        row.test_exit_histogram = tm.exit_histogram;
        row.test_level_accuracy = tm.level_accuracy;
        return row;
    }

    SweepRow baseline_row(int level) {
        SweepRow row;
        row.kind = "baseline";
        row.fixed_level = level + 1;
        row.seed = cfg_.seed;
        long long correct_test = 0, correct_val = 0;
        for (int n = 0; n < test_table_.num_examples; ++n)
            if (test_table_.pred(n, level) == test_table_.true_labels[static_cast<size_t>(n)])
                ++correct_test;
        for (int n = 0; n < val_table_.num_examples; ++n)
            if (val_table_.pred(n, level) == val_table_.true_labels[static_cast<size_t>(n)])
                ++correct_val;
        row.test_accuracy = test_table_.num_examples
                                ? static_cast<double>(correct_test) / test_table_.num_examples
                                : 0;
        row.val_accuracy = val_table_.num_examples
                               ? static_cast<double>(correct_val) / val_table_.num_examples
                               : 0;
        row.test_energy_norm = test_table_.level_cost[static_cast<size_t>(level)] /
                               test_table_.level_cost.back();
        row.val_energy_norm = row.test_energy_norm;
        row.test_exit_histogram.assign(static_cast<size_t>(test_table_.num_levels), 0);
        row.test_exit_histogram[static_cast<size_t>(level)] = test_table_.num_examples;
        row.test_level_accuracy.assign(static_cast<size_t>(test_table_.num_levels), -1.0);
        row.test_level_accuracy[static_cast<size_t>(level)] = row.test_accuracy;
        return row;
    }

    SweepReport sweep() {
        ensure_tables();
        SweepReport report = report_shell();
        for (double lambda : cfg_.lambdas) {
            std::vector<ThresholdVector> warm;
            if (cfg_.sweep_single_threshold && arch_.num_levels() > 1) {
                BOResult single = tune(lambda, true);
                report.rows.push_back(result_row("single_threshold", lambda, single,
                                                 bo_seed_for(cfg_.seed, lambda, 0x731)));
                // the shared-threshold optimum embeds into the multi-threshold
                // space; seeding it makes the nested-search guarantee real
                warm.push_back(single.best);
            }
            BOResult multi = tune(lambda, false, warm);
            report.rows.push_back(
                result_row("c2f", lambda, multi, bo_seed_for(cfg_.seed, lambda, 0x730)));
        }
        if (cfg_.sweep_baselines)
            for (int l = 0; l < arch_.num_levels(); ++l)
                report.rows.push_back(baseline_row(l));
        finish_report(report);
        return report;
    }

    SweepReport single_threshold_only() {
        ensure_tables();
        SweepReport report = report_shell();
        for (double lambda : cfg_.lambdas) {
            BOResult single = tune(lambda, true);
            report.rows.push_back(result_row("single_threshold", lambda, single,
                                             bo_seed_for(cfg_.seed, lambda, 0x731)));
        }
        finish_report(report);
        return report;
    }

    SweepReport baselines_only() {
        ensure_tables();
        SweepReport report = report_shell();
        for (int l = 0; l < arch_.num_levels(); ++l)
            report.rows.push_back(baseline_row(l));
        finish_report(report);
        return report;
    }

    const EvalTable& val_table() {
        ensure_tables();
        return val_table_;
    }

private:
    static std::string ensure_dir(const ExperimentConfig& cfg) {
        fs::create_directories(cfg.output_dir);
        return cfg.output_dir;
    }

    std::string artifact(const std::string& name) const {
        return (fs::path(cfg_.output_dir) / name).string();
    }

    TrainConfig train_cfg() const {
        TrainConfig t = cfg_.train;
        t.seed = mix_seed(cfg_.seed, 0x7e, 0);
        return t;
    }

    Dataset<T> load_full() {
        const std::string root = cfg_.resolved_data_root();
        if (cfg_.dataset.kind == "mnist") return load_mnist<T>(root);
        if (cfg_.dataset.kind == "cifar10") return load_cifar10<T>(root);
        if (cfg_.dataset.kind == "synth") {
            if (!fs::exists(fs::path(root) / "train-images-idx3-ubyte")) {
                SynthConfig sc;
                sc.count = cfg_.dataset.synth_count;
                sc.seed = cfg_.dataset.synth_seed;
                write_synth_digit_corpus(root, sc);
            }
            return load_mnist<T>(root);
        }
        fail("config: unknown dataset kind '" + cfg_.dataset.kind + "'");
    }

    CostProfile make_cost_profile() {
        if (cfg_.cost.provider == "mac") return analytic_cost_profile(arch_);
        if (cfg_.cost.provider == "table")
            return cost_profile_from_csv(cfg_.cost.table_path, arch_.num_levels());
        if (cfg_.cost.provider == "latency") {
            std::vector<TensorT<T>> sample;
            size_t want = static_cast<size_t>(cfg_.cost.latency_sample_inputs);
            for (size_t i = 0; i < splits_.val.inputs.size() && i < want; ++i)
                sample.push_back(splits_.val.inputs[i]);
            return latency_edp_cost_profile(arch_, store_, sample, cfg_.cost.latency_reps);
        }
        fail("config: unknown cost provider '" + cfg_.cost.provider +
             "' (expected mac|latency|table)");
    }

    void cost_notes_from_table() {
        // tables were loaded from disk; provider metadata comes from config
        cost_provider_ = cfg_.cost.provider == "latency" ? "measured_latency"
                         : cfg_.cost.provider == "table" ? "user_table"
                                                         : "analytic_mac";
        if (cfg_.cost.provider == "latency")
            cost_notes_ = {"edp=latency^2 under a constant-power assumption"};
    }

    SweepReport report_shell() {
        SweepReport r;
        r.config_hash = cfg_.config_hash();
        r.seed = cfg_.seed;
        r.dataset_kind = cfg_.dataset.kind;
        r.confidence_kind = confidence_kind_name(cfg_.confidence);
        r.cost_provider = cost_provider_;
        r.constant_power_edp_assumption = cost_provider_ == "measured_latency";
        r.cost_notes = cost_notes_;
        r.num_levels = arch_.num_levels();
        r.split_sizes = {static_cast<int>(splits_.train.size()),
                         static_cast<int>(splits_.val.size()),
                         static_cast<int>(splits_.test.size())};
        for (size_t l = 0; l < val_table_.level_cost.size(); ++l)
            r.level_cost_normalized.push_back(val_table_.level_cost[l] /
                                              val_table_.level_cost.back());
        r.warnings = warnings_;
        return r;
    }

    void finish_report(SweepReport& r) {
        int finest = arch_.num_levels() - 1;
        long long ok_test = 0, ok_val = 0;
        for (int n = 0; n < test_table_.num_examples; ++n)
            if (test_table_.pred(n, finest) == test_table_.true_labels[static_cast<size_t>(n)])
                ++ok_test;
        for (int n = 0; n < val_table_.num_examples; ++n)
            if (val_table_.pred(n, finest) == val_table_.true_labels[static_cast<size_t>(n)])
                ++ok_val;
        r.finest_test_accuracy =
            test_table_.num_examples ? static_cast<double>(ok_test) / test_table_.num_examples : 0;
        r.finest_val_accuracy =
            val_table_.num_examples ? static_cast<double>(ok_val) / val_table_.num_examples : 0;
    }

    void write_stage_sidecar(const std::string& name, const std::string& stage,
                             const std::vector<StageStats>& stats) {
        nlohmann::json j;
        j["stage"] = stage;
        j["optimizer"] =
            cfg_.train.optimizer == TrainConfig::Optimizer::rmsprop ? "rmsprop" : "sgd";
        j["learning_rate"] = cfg_.train.learning_rate;
        j["lr_decay_per_update"] = cfg_.train.lr_decay_per_update;
        j["batch_size"] = cfg_.train.batch_size;
        j["epochs"] = cfg_.train.epochs;
        j["precision"] = precision_name(cfg_.precision);
        nlohmann::json parts = nlohmann::json::array();
        for (const auto& s : stats) {
            nlohmann::json p;
            p["updates"] = s.updates;
            p["epoch_mean_loss"] = s.epoch_mean_loss;
            p["any_prob_clamped"] = s.any_prob_clamped;
            parts.push_back(p);
        }
        j["runs"] = parts;
        std::ofstream out(artifact(name));
        out << j.dump(2) << "\n";
    }

    ExperimentConfig cfg_;
    Manifest manifest_;
    C2FArchitecture arch_;
    SplitDatasets<T> splits_;
    WeightStore<T> store_;
    EvalTable val_table_, test_table_;
    std::string cost_provider_ = "analytic_mac";
    std::vector<std::string> cost_notes_;
    std::vector<std::string> warnings_;
    bool data_ready_ = false;
    bool stage1_ready_ = false;
    bool stage2_ready_ = false;
    bool tables_ready_ = false;
};

} // namespace

// ---- public entry points --------------------------------------------------

namespace {

template <typename T>
SweepReport run_pipeline_impl(const ExperimentConfig& cfg) {
    Runner<T> r(cfg);
    SweepReport report = r.sweep();
    emit_report(report, cfg.output_dir);
    return report;
}

} // namespace

void run_train_stages(const ExperimentConfig& cfg) {
    if (cfg.precision == Precision::f64) {
        Runner<double> r(cfg);
        r.ensure_stage2();
    } else {
        Runner<float> r(cfg);
        r.ensure_stage2();
    }
}

void run_table_stage(const ExperimentConfig& cfg) {
    if (cfg.precision == Precision::f64) {
        Runner<double> r(cfg);
        r.ensure_tables();
    } else {
        Runner<float> r(cfg);
        r.ensure_tables();
    }
}

BOResult run_tune(const ExperimentConfig& cfg, double lambda) {
    if (cfg.precision == Precision::f64) {
        Runner<double> r(cfg);
        return r.tune(lambda, false);
    }
    Runner<float> r(cfg);
    return r.tune(lambda, false);
}

SweepReport run_pipeline(const ExperimentConfig& cfg) {
    return cfg.precision == Precision::f64 ? run_pipeline_impl<double>(cfg)
                                           : run_pipeline_impl<float>(cfg);
}

SweepReport run_single_threshold_mode(const ExperimentConfig& cfg) {
    if (cfg.precision == Precision::f64) {
        Runner<double> r(cfg);
        return r.single_threshold_only();
    }
    Runner<float> r(cfg);
    return r.single_threshold_only();
}

SweepReport run_baseline_mode(const ExperimentConfig& cfg) {
    if (cfg.precision == Precision::f64) {
        Runner<double> r(cfg);
        return r.baselines_only();
    }
    Runner<float> r(cfg);
    return r.baselines_only();
}

SweepReport rebuild_report(const ExperimentConfig& cfg) {
    // Stages already on disk are reused; only the threshold search and row
    // assembly recompute, deterministically.
    return run_pipeline(cfg);
}

// ---- report emission ------------------------------------------------------

namespace {

std::string join_gamma(const std::vector<double>& gamma) {
    std::string out;
    for (size_t i = 0; i < gamma.size(); ++i) {
        if (i) out += ";";
        out += format_g17(gamma[i]);
    }
    return out;
}

std::vector<double> parse_gamma(const std::string& s) {
    std::vector<double> out;
    if (s.empty()) return out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ';')) out.push_back(std::stod(part));
    return out;
}

} // namespace

void emit_report(const SweepReport& report, const std::string& dir) {
    fs::create_directories(dir);
    int levels = report.num_levels;

    // CSV
    {
        std::ofstream out(fs::path(dir) / "report.csv");
        if (!out) fail("report: cannot write report.csv under " + dir);
        out << "kind,lambda,fixed_level,seed,gamma,val_objective,val_error_norm,"
               "val_energy_norm,val_accuracy,val_abs_error_fallback,test_accuracy,"
               "test_energy_norm";
        for (int l = 1; l <= levels; ++l) out << ",exit_l" << l;
        for (int l = 1; l <= levels; ++l) out << ",acc_l" << l;
        out << "\n";
        for (const auto& row : report.rows) {
            out << row.kind << "," << format_g17(row.lambda) << "," << row.fixed_level << ","
                << row.seed << "," << join_gamma(row.gamma) << ","
                << format_g17(row.val_objective) << "," << format_g17(row.val_error_norm) << ","
                << format_g17(row.val_energy_norm) << "," << format_g17(row.val_accuracy) << ","
                << (row.val_abs_error_fallback ? 1 : 0) << ","
                << format_g17(row.test_accuracy) << "," << format_g17(row.test_energy_norm);
            for (int l = 0; l < levels; ++l)
                out << ","
                    << (l < static_cast<int>(row.test_exit_histogram.size())
                            ? row.test_exit_histogram[static_cast<size_t>(l)]
                            : 0);
            for (int l = 0; l < levels; ++l)
                out << ","
                    << format_g17(l < static_cast<int>(row.test_level_accuracy.size())
                                      ? row.test_level_accuracy[static_cast<size_t>(l)]
                                      : -1.0);
            out << "\n";
        }
    }

    // JSON with provenance
    {
        nlohmann::json j;
        j["config_hash"] = std::to_string(report.config_hash);
        j["seed"] = report.seed;
        j["dataset"] = report.dataset_kind;
        j["confidence"] = report.confidence_kind;
        j["cost_provider"] = report.cost_provider;
        j["constant_power_edp_assumption"] = report.constant_power_edp_assumption;
        j["cost_notes"] = report.cost_notes;
        j["num_levels"] = report.num_levels;
        j["split_sizes"] = report.split_sizes;
        j["level_cost_normalized"] = report.level_cost_normalized;
        j["finest_test_accuracy"] = report.finest_test_accuracy;
        j["finest_val_accuracy"] = report.finest_val_accuracy;
        j["warnings"] = report.warnings;
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : report.rows) {
            nlohmann::json r;
            r["kind"] = row.kind;
            r["lambda"] = row.lambda;
            r["fixed_level"] = row.fixed_level;
            r["seed"] = row.seed;
            r["gamma"] = row.gamma;
            r["val_objective"] = row.val_objective;
            r["val_error_norm"] = row.val_error_norm;
            r["val_energy_norm"] = row.val_energy_norm;
            r["val_accuracy"] = row.val_accuracy;
            r["val_abs_error_fallback"] = row.val_abs_error_fallback;
            r["test_accuracy"] = row.test_accuracy;
            r["test_energy_norm"] = row.test_energy_norm;
            r["test_exit_histogram"] = row.test_exit_histogram;
            r["test_level_accuracy"] = row.test_level_accuracy;
            rows.push_back(r);
        }
        j["rows"] = rows;
        std::ofstream out(fs::path(dir) / "report.json");
        if (!out) fail("report: cannot write report.json under " + dir);
        out << j.dump(2) << "\n";
    }

    // Pareto columns (gnuplot-style), energy ascending
    {
        std::vector<const SweepRow*> pts;
        for (const auto& row : report.rows)
            if (row.kind == "c2f") pts.push_back(&row);
        std::sort(pts.begin(), pts.end(), [](const SweepRow* a, const SweepRow* b) {
            if (a->test_energy_norm != b->test_energy_norm)
                return a->test_energy_norm < b->test_energy_norm;
            return a->lambda < b->lambda;
        });
        std::ofstream out(fs::path(dir) / "pareto.dat");
        if (!out) fail("report: cannot write pareto.dat under " + dir);
        out << "# energy_norm val_accuracy test_accuracy lambda\n";
        for (const auto* p : pts)
            out << format_g17(p->test_energy_norm) << " " << format_g17(p->val_accuracy) << " "
                << format_g17(p->test_accuracy) << " " << format_g17(p->lambda) << "\n";
    }
}

SweepReport parse_report_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("report: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) fail("report " + path + ": empty");
    int levels = 0;
    {
        std::stringstream ss(header);
        std::string col;
        while (std::getline(ss, col, ','))
            if (col.rfind("exit_l", 0) == 0) ++levels;
    }
    SweepReport report;
    report.num_levels = levels;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) f.push_back(col);
        if (static_cast<int>(f.size()) != 12 + 2 * levels)
            fail("report " + path + ": malformed row '" + line + "'");
        SweepRow row;
        size_t i = 0;
        row.kind = f[i++];
        row.lambda = std::stod(f[i++]);
        row.fixed_level = std::stoi(f[i++]);
        row.seed = std::stoull(f[i++]);
        row.gamma = parse_gamma(f[i++]);
        row.val_objective = std::stod(f[i++]);
        row.val_error_norm = std::stod(f[i++]);
        row.val_energy_norm = std::stod(f[i++]);
        row.val_accuracy = std::stod(f[i++]);
        row.val_abs_error_fallback = f[i++] == "1";
        row.test_accuracy = std::stod(f[i++]);
        row.test_energy_norm = std::stod(f[i++]);
        for (int l = 0; l < levels; ++l)
            row.test_exit_histogram.push_back(std::stoi(f[i++]));
        for (int l = 0; l < levels; ++l)
            row.test_level_accuracy.push_back(std::stod(f[i++]));
        report.rows.push_back(std::move(row));
    }
    return report;
}

// ---- single-image inference ------------------------------------------------

namespace {

template <typename T>
PredictionTrace run_infer_impl(const ExperimentConfig& cfg, const std::string& image_path,
                               const std::vector<double>& thresholds) {
    C2FArchitecture arch = C2FArchitecture::from_file(cfg.arch_path);
    std::string weights = (fs::path(cfg.output_dir) / "weights.c2fw").string();
    if (!fs::exists(weights))
        fail("infer: trained weights not found at " + weights + " (run `train` first)");
    WeightStore<T> store = load_weights<T>(arch, weights);

    RawImages raw = read_pnm_image(image_path);
    if (raw.channels != arch.input_shape[2])
        fail("infer: image has " + std::to_string(raw.channels) + " channel(s), architecture wants " +
             std::to_string(arch.input_shape[2]));
    Dataset<T> ds = to_dataset<T>(raw, arch.num_classes, arch.input_shape[0]);
    if (ds.inputs[0].shape != arch.input_shape)
        fail("infer: image shape " + ds.inputs[0].shape_string() + " does not match input " +
             Tensor::shape_string(arch.input_shape));

    ThresholdVector tv = thresholds.empty()
                             ? ThresholdVector::never_exit(arch.num_levels() - 1)
                             : ThresholdVector(thresholds);
    return cascade_predict(arch, store, ds.inputs[0], tv, cfg.confidence);
}

} // namespace

PredictionTrace run_infer(const ExperimentConfig& cfg, const std::string& image_path,
                          const std::vector<double>& thresholds) {
    set_max_workers(cfg.workers);
    return cfg.precision == Precision::f64
               ? run_infer_impl<double>(cfg, image_path, thresholds)
               : run_infer_impl<float>(cfg, image_path, thresholds);
}

} // namespace c2f
