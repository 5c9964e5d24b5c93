#include "c2f/bo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>

#include "c2f/direct.hpp"
#include "c2f/rng.hpp"

namespace c2f {

std::vector<std::vector<double>> latin_hypercube(int n, int dim, uint64_t seed) {
    Rng rng(mix_seed(seed, 0x1b5, 0));
    std::vector<std::vector<double>> pts(static_cast<size_t>(n),
                                         std::vector<double>(static_cast<size_t>(dim)));
    for (int d = 0; d < dim; ++d) {
        std::vector<int> strata(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) strata[static_cast<size_t>(i)] = i;
        rng.shuffle(strata);
        for (int i = 0; i < n; ++i)
            pts[static_cast<size_t>(i)][static_cast<size_t>(d)] =
                (strata[static_cast<size_t>(i)] + rng.next_f64()) / n;
    }
    return pts;
}

ThresholdVector broadcast_threshold(double shared, int num_levels) {
    return ThresholdVector(std::vector<double>(static_cast<size_t>(num_levels - 1), shared));
}

namespace {

BORecord make_record(const std::vector<double>& gamma, const ObjectiveValue& v) {
    BORecord r;
    r.gamma = gamma;
    r.objective = v.objective;
    r.error_norm = v.error_norm;
    r.energy_norm = v.energy_norm;
    r.exit_histogram = v.exit_histogram;
    return r;
}

// The core loop over an arbitrary-dimension objective; `expand` maps the
// search-space point to the full threshold vector.
BOResult optimize_in_cube(const EvalTable& table, double lambda, const BOBudget& budget,
                          const AcquisitionConfig& acq, const GPConfig& gp_cfg_in,
                          uint64_t seed, int dim,
                          const std::function<ThresholdVector(const std::vector<double>&)>& expand,
                          const std::vector<std::vector<double>>& warm_points) {
    budget.validate();
    if (lambda < 0 || lambda > 1) fail("optimize_thresholds: lambda outside [0,1]");

    BOResult result;
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;  // -O, the maximized objective
    double best_obj = std::numeric_limits<double>::infinity();
    size_t best_idx = 0;

    auto query = [&](const std::vector<double>& g) {
        ObjectiveValue v = evaluate_objective(table, expand(g), lambda);
        xs.push_back(g);
        ys.push_back(-v.objective);
        result.history.push_back(make_record(g, v));
        if (v.objective < best_obj) {
            best_obj = v.objective;
            best_idx = xs.size() - 1;
            result.best_detail = v;
        }
    };

    int n_init = std::min(budget.init_random_evals, budget.max_iterations);
    for (const auto& p : latin_hypercube(n_init, dim, seed)) {
        if (static_cast<int>(xs.size()) >= budget.max_iterations) break;
        query(p);
    }
    for (const auto& p : warm_points) {
        if (static_cast<int>(xs.size()) >= budget.max_iterations) break;
        query(p);
    }

    GPConfig gp_cfg = gp_cfg_in;
    if (gp_cfg.length_scales.empty())
        gp_cfg.length_scales.assign(static_cast<size_t>(dim), 0.2);

    int stall_reference_iter = static_cast<int>(xs.size());
    double stall_reference_best = best_obj;
    while (static_cast<int>(xs.size()) < budget.max_iterations) {
        int t = static_cast<int>(xs.size());
        GPModel model = GPModel::fit(xs, ys, gp_cfg);
        std::vector<std::vector<double>> probe_pts;
        std::vector<double> probe_vals;
        DirectResult acq_best = direct_maximize(
            [&](const std::vector<double>& g) { return ucb_score(model, g, acq, t); }, dim,
            budget.acq_opt_evals, 1e-4,
            [&](const std::vector<double>& p, double v) {
                probe_pts.push_back(p);
                probe_vals.push_back(v);
            });

        // If the acquisition argmax is a point we already queried, fall back
        // to the best unseen point DIRECT probed; duplicates teach the GP
        // nothing on a noise-free table.
        auto seen = [&](const std::vector<double>& g) {
            for (const auto& x : xs) {
                double d2 = 0;
                for (size_t k = 0; k < x.size(); ++k)
                    d2 += (x[k] - g[k]) * (x[k] - g[k]);
                if (d2 < 1e-18) return true;
            }
            return false;
        };
        std::vector<double> next = acq_best.best_point;
        if (seen(next)) {
            double best_probe = -std::numeric_limits<double>::infinity();
            bool found = false;
            for (size_t i = 0; i < probe_pts.size(); ++i)
                if (probe_vals[i] > best_probe && !seen(probe_pts[i])) {
                    best_probe = probe_vals[i];
                    next = probe_pts[i];
                    found = true;
                }
            if (!found) break;  // search space exhausted at table granularity
        }
        query(next);

        int iter = static_cast<int>(xs.size());
        if (iter - stall_reference_iter >= budget.convergence_window) {
            if (stall_reference_best - best_obj < budget.convergence_tol) {
                result.converged_early = true;
                break;
            }
            stall_reference_iter = iter;
            stall_reference_best = best_obj;
        }
    }

    result.best = expand(xs[best_idx]);
    result.best_objective = best_obj;
    return result;
}

} // namespace

BOResult optimize_thresholds(const EvalTable& table, double lambda, const BOBudget& budget,
                             const AcquisitionConfig& acq, const GPConfig& gp_cfg,
                             uint64_t seed, const std::vector<ThresholdVector>& warm_starts) {
    int dim = table.num_levels - 1;
    if (dim == 0) {
        // Single-level cascade: nothing to tune.
        BOResult r;
        r.best = ThresholdVector();
        ObjectiveValue v = evaluate_objective(table, r.best, lambda);
        r.best_objective = v.objective;
        r.best_detail = v;
        r.history.push_back(make_record({}, v));
        return r;
    }
    std::vector<std::vector<double>> warm_points;
    for (const auto& w : warm_starts) {
        if (w.size() != dim)
            fail("optimize_thresholds: warm start has " + std::to_string(w.size()) +
                 " components, expected " + std::to_string(dim));
        warm_points.push_back(w.values);
    }
    return optimize_in_cube(
        table, lambda, budget, acq, gp_cfg, seed, dim,
        [](const std::vector<double>& g) { return ThresholdVector(g); }, warm_points);
}

BOResult optimize_shared_threshold(const EvalTable& table, double lambda,
                                   const BOBudget& budget, const AcquisitionConfig& acq,
                                   const GPConfig& gp_cfg, uint64_t seed) {
    int dim = table.num_levels - 1;
    if (dim == 0) return optimize_thresholds(table, lambda, budget, acq, gp_cfg, seed);
    int levels = table.num_levels;
    return optimize_in_cube(
        table, lambda, budget, acq, gp_cfg, seed, 1,
        [levels](const std::vector<double>& g) { return broadcast_threshold(g[0], levels); },
        {});
}

void write_history_csv(const std::string& path, const std::vector<BORecord>& history) {
    std::ofstream out(path);
    if (!out) fail("history csv: cannot open " + path + " for writing");
    size_t dim = history.empty() ? 0 : history.front().gamma.size();
    size_t levels = history.empty() ? 0 : history.front().exit_histogram.size();
    out << "iteration";
    for (size_t d = 0; d < dim; ++d) out << ",gamma" << (d + 1);
    out << ",objective,error_norm,energy_norm";
    for (size_t l = 0; l < levels; ++l) out << ",exit_l" << (l + 1);
    out << "\n";
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (size_t i = 0; i < history.size(); ++i) {
        out << (i + 1);
        for (double g : history[i].gamma) { out << ","; put(g); }
        out << ","; put(history[i].objective);
        out << ","; put(history[i].error_norm);
        out << ","; put(history[i].energy_norm);
        for (int h : history[i].exit_histogram) out << "," << h;
        out << "\n";
    }
    if (!out) fail("history csv: write failed for " + path);
}

} // namespace c2f
