// Benchmark comparing the OpenMP kernels against their serial references.
// Also reports the max |difference|, which must be exactly 0: the parallel
// loops keep the serial per-element reduction order.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "c2f/cascade.hpp"
#include "c2f/kernels.hpp"
#include "c2f/model.hpp"
#include "c2f/parallel.hpp"
#include "c2f/rng.hpp"

using namespace c2f;

namespace {

double now() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

double time_best_of(int reps, const std::function<void()>& fn) {
    fn();  // warm-up
    double best = 1e100;
    for (int r = 0; r < reps; ++r) {
        double t0 = now();
        fn();
        best = std::min(best, now() - t0);
    }
    return best;
}

std::vector<double> random_vec(size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.next_range(-1.0, 1.0);
    return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void report(const char* name, double serial_s, double omp_s, double diff) {
    std::printf("%-24s serial %9.3f ms   omp %9.3f ms   speedup %5.2fx   max|diff| %g\n", name,
                serial_s * 1e3, omp_s * 1e3, serial_s / omp_s, diff);
}

} // namespace

int main(int argc, char** argv) {
    int workers = 0;
    int reps = 5;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--workers" && i + 1 < argc) workers = std::atoi(argv[++i]);
        else if (a == "--reps" && i + 1 < argc) reps = std::atoi(argv[++i]);
        else {
            std::printf("usage: c2f_bench [--workers N] [--reps N]\n");
            return a == "--help" ? 0 : 1;
        }
    }
    set_max_workers(workers);
    std::printf("workers: %d, reps: %d (best-of timing)\n\n", worker_count(), reps);

    Rng rng(42);
    const int H = 64, W = 64, Cin = 32, Cout = 32;

    auto in = random_vec(static_cast<size_t>(H) * W * Cin, rng);
    auto w = random_vec(9ull * Cin * Cout, rng);
    auto bias = random_vec(Cout, rng);
    auto go = random_vec(static_cast<size_t>(H) * W * Cout, rng);
    std::vector<double> out_ref(static_cast<size_t>(H) * W * Cout);
    std::vector<double> out_omp(out_ref.size());

    {
        double ts = time_best_of(reps, [&] {
            kernels::ref::conv3x3_forward(in.data(), H, W, Cin, w.data(), bias.data(), Cout,
                                          out_ref.data());
        });
        double tp = time_best_of(reps, [&] {
            kernels::conv3x3_forward(in.data(), H, W, Cin, w.data(), bias.data(), Cout,
                                     out_omp.data());
        });
        report("conv3x3 forward", ts, tp, max_abs_diff(out_ref, out_omp));
    }
    {
        std::vector<double> gin_ref(in.size()), gin_omp(in.size());
        double ts = time_best_of(reps, [&] {
            kernels::ref::conv3x3_grad_input(w.data(), go.data(), H, W, Cin, Cout,
                                             gin_ref.data());
        });
        double tp = time_best_of(reps, [&] {
            kernels::conv3x3_grad_input(w.data(), go.data(), H, W, Cin, Cout, gin_omp.data());
        });
        report("conv3x3 grad_input", ts, tp, max_abs_diff(gin_ref, gin_omp));
    }
    {
        std::vector<double> gw_ref(w.size()), gw_omp(w.size());
        std::vector<double> gb_ref(bias.size()), gb_omp(bias.size());
        double ts = time_best_of(reps, [&] {
            kernels::ref::conv3x3_grad_params(in.data(), go.data(), H, W, Cin, Cout,
                                              gw_ref.data(), gb_ref.data());
        });
        double tp = time_best_of(reps, [&] {
            kernels::conv3x3_grad_params(in.data(), go.data(), H, W, Cin, Cout, gw_omp.data(),
                                         gb_omp.data());
        });
        report("conv3x3 grad_params", ts, tp,
               std::max(max_abs_diff(gw_ref, gw_omp), max_abs_diff(gb_ref, gb_omp)));
    }
    {
        const int In = 4096, Out = 512;
        auto din = random_vec(In, rng);
        auto dw = random_vec(static_cast<size_t>(In) * Out, rng);
        auto db = random_vec(Out, rng);
        std::vector<double> o_ref(Out), o_omp(Out);
        double ts = time_best_of(reps, [&] {
            kernels::ref::dense_forward(din.data(), dw.data(), db.data(), In, Out, o_ref.data());
        });
        double tp = time_best_of(reps, [&] {
            kernels::dense_forward(din.data(), dw.data(), db.data(), In, Out, o_omp.data());
        });
        report("dense forward", ts, tp, max_abs_diff(o_ref, o_omp));
    }

    // Whole-model workload: evaluation-table build, parallel over examples.
    {
        C2FArchitecture arch = C2FArchitecture::from_json_text(R"({
            "input_shape": [32, 32, 1], "num_classes": 10,
            "levels": [
              {"conv_layers": 2, "filters": 8, "extra_pools": 2, "classifier_hidden": [64]},
              {"conv_layers": 2, "filters": 16, "extra_pools": 1, "classifier_hidden": [64]},
              {"conv_layers": 2, "filters": 24, "extra_pools": 0, "classifier_hidden": [64]}
            ]})");
        WeightStore<double> store = build_network<double>(arch, 1);
        std::vector<Tensor> inputs;
        std::vector<int> labels;
        for (int i = 0; i < 64; ++i) {
            Tensor t({32, 32, 1});
            for (auto& v : t.data) v = rng.next_f64();
            inputs.push_back(std::move(t));
            labels.push_back(static_cast<int>(rng.next_int(0, 9)));
        }
        CostProfile cost = analytic_cost_profile(arch);
        int keep_workers = max_workers();
        set_max_workers(1);
        EvalTable serial_table;
        double ts = time_best_of(reps, [&] {
            serial_table = build_eval_table(inputs, labels, arch, store,
                                            ConfidenceKind::max_prob, cost);
        });
        set_max_workers(keep_workers);
        EvalTable par_table;
        double tp = time_best_of(reps, [&] {
            par_table = build_eval_table(inputs, labels, arch, store, ConfidenceKind::max_prob,
                                         cost);
        });
        report("eval-table build (64)", ts, tp,
               max_abs_diff(serial_table.confidences, par_table.confidences));
    }
    return 0;
}
