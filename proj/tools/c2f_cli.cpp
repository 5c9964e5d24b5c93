// Command-line front end for training, threshold tuning, and reporting on
// coarse-to-fine cascade networks.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "c2f/pipeline.hpp"

namespace {

struct GlobalOpts {
    std::string config_path;
    int64_t seed = -1;
    int workers = -1;
    std::string precision;
    std::string cost;
    std::string output_dir;
};

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(std::stod(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::stod(cur));
    return out;
}

c2f::ExperimentConfig load_config(const GlobalOpts& g) {
    if (g.config_path.empty())
        throw c2f::Error("--config is required");
    c2f::ExperimentConfig cfg = c2f::ExperimentConfig::from_file(g.config_path);
    if (g.seed >= 0) cfg.seed = static_cast<uint64_t>(g.seed);
    if (g.workers >= 0) cfg.workers = g.workers;
    if (!g.precision.empty())
        cfg.precision = g.precision == "f32" ? c2f::Precision::f32 : c2f::Precision::f64;
    if (!g.output_dir.empty()) cfg.output_dir = g.output_dir;
    if (!g.cost.empty()) {
        if (g.cost == "mac" || g.cost == "latency") {
            cfg.cost.provider = g.cost;
        } else if (g.cost.rfind("table:", 0) == 0) {
            cfg.cost.provider = "table";
            cfg.cost.table_path = g.cost.substr(6);
        } else {
            throw c2f::Error("--cost must be mac, latency, or table:<csv>");
        }
    }
    return cfg;
}

void print_report_summary(const c2f::SweepReport& report) {
    std::printf("%-17s %8s %12s %12s %12s\n", "kind", "lambda", "val_obj", "test_acc",
                "energy_norm");
    for (const auto& row : report.rows) {
        if (row.kind == "baseline")
            std::printf("%-17s %8s %12s %12.4f %12.4f  (level %d)\n", row.kind.c_str(), "-", "-",
                        row.test_accuracy, row.test_energy_norm, row.fixed_level);
        else
            std::printf("%-17s %8.3f %12.6f %12.4f %12.4f\n", row.kind.c_str(), row.lambda,
                        row.val_objective, row.test_accuracy, row.test_energy_norm);
    }
    std::printf("finest: val_acc %.4f test_acc %.4f\n", report.finest_val_accuracy,
                report.finest_test_accuracy);
}

void print_trace(const c2f::PredictionTrace& trace) {
    for (size_t i = 0; i < trace.per_level.size(); ++i) {
        const auto& rec = trace.per_level[i];
        std::printf("level %zu: predicted %d, confidence %.6f, dist [", i + 1, rec.predicted,
                    rec.confidence);
        for (size_t k = 0; k < rec.distribution.size(); ++k)
            std::printf("%s%.4f", k ? " " : "", rec.distribution[k]);
        std::printf("]\n");
    }
    std::printf("exit level %d, label %d\n", trace.exit_level + 1, trace.predicted_label);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"coarse-to-fine cascade networks: stagewise training and "
                 "accuracy/energy threshold optimization"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "experiment config JSON")->required();
    app.add_option("--seed", g.seed, "override config seed");
    app.add_option("--workers", g.workers, "worker threads (1 = strict single-worker)");
    app.add_option("--precision", g.precision, "f32 or f64")
        ->check(CLI::IsMember({"f32", "f64"}));
    app.add_option("--cost", g.cost, "cost provider: mac | latency | table:<csv>");
    app.add_option("--output-dir", g.output_dir, "override config output_dir");

    auto* cmd_train = app.add_subcommand("train", "train feature transformers, then intermediate classifiers");
    auto* cmd_table = app.add_subcommand("table", "build the validation/test evaluation tables");

    double tune_lambda = 0.5;
    auto* cmd_tune = app.add_subcommand("tune", "optimize thresholds for one lambda");
    cmd_tune->add_option("--lambda", tune_lambda, "error/energy trade-off in [0,1]")->required();

    std::string sweep_lambdas;
    auto* cmd_sweep = app.add_subcommand("sweep", "full pipeline over a lambda list; writes the report");
    cmd_sweep->add_option("--lambdas", sweep_lambdas, "comma-separated lambda list");

    auto* cmd_baseline = app.add_subcommand("baseline", "fixed-level baselines (each level as sole predictor)");
    auto* cmd_single = app.add_subcommand("single-threshold", "shared-threshold mode over the lambda list");

    std::string infer_image;
    std::string infer_thresholds;
    auto* cmd_infer = app.add_subcommand("infer", "classify one PGM/PPM image through the cascade");
    cmd_infer->add_option("--image", infer_image, "P5 pgm or P6 ppm file")->required();
    cmd_infer->add_option("--thresholds", infer_thresholds,
                          "comma-separated per-level thresholds; omit to always run to the finest level");

    auto* cmd_report = app.add_subcommand("report", "re-emit report files from cached artifacts");

    CLI11_PARSE(app, argc, argv);

    try {
        c2f::ExperimentConfig cfg = load_config(g);
        if (*cmd_train) {
            c2f::run_train_stages(cfg);
            std::printf("trained weights written under %s\n", cfg.output_dir.c_str());
        } else if (*cmd_table) {
            c2f::run_table_stage(cfg);
            std::printf("evaluation tables written under %s\n", cfg.output_dir.c_str());
        } else if (*cmd_tune) {
            c2f::BOResult r = c2f::run_tune(cfg, tune_lambda);
            std::printf("best objective %.6f after %zu evaluations%s\n", r.best_objective,
                        r.history.size(), r.converged_early ? " (converged early)" : "");
            std::printf("thresholds:");
            for (double v : r.best.values) std::printf(" %.6f", v);
            std::printf("\n");
        } else if (*cmd_sweep) {
            if (!sweep_lambdas.empty()) cfg.lambdas = parse_double_list(sweep_lambdas);
            c2f::SweepReport report = c2f::run_pipeline(cfg);
            print_report_summary(report);
            std::printf("report files written under %s\n", cfg.output_dir.c_str());
        } else if (*cmd_baseline) {
            print_report_summary(c2f::run_baseline_mode(cfg));
        } else if (*cmd_single) {
            print_report_summary(c2f::run_single_threshold_mode(cfg));
        } else if (*cmd_infer) {
            std::vector<double> tv;
            if (!infer_thresholds.empty()) tv = parse_double_list(infer_thresholds);
            print_trace(c2f::run_infer(cfg, infer_image, tv));
        } else if (*cmd_report) {
            c2f::SweepReport report = c2f::rebuild_report(cfg);
            print_report_summary(report);
            std::printf("report files written under %s\n", cfg.output_dir.c_str());
        }
    } catch (const c2f::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
