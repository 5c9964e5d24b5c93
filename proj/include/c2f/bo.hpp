#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "c2f/cascade.hpp"
#include "c2f/gp.hpp"

namespace c2f {

struct BOBudget {
    int init_random_evals = 5;
    int max_iterations = 100;      // total objective evaluations, inits included
    int convergence_window = 15;   // stop when best O improves < tol over this many iters
    double convergence_tol = 1e-4;
    int acq_opt_evals = 200;       // DIRECT budget per acquisition maximization

    void validate() const {
        if (init_random_evals < 1) fail("bo budget: init_random_evals must be >= 1");
        if (max_iterations < init_random_evals)
            fail("bo budget: max_iterations must be >= init_random_evals");
    }
};

struct BORecord {
    std::vector<double> gamma;
    double objective = 0;
    double error_norm = 0;
    double energy_norm = 0;
    std::vector<int> exit_histogram;
};

struct BOResult {
    ThresholdVector best;
    double best_objective = 0;
    ObjectiveValue best_detail;
    std::vector<BORecord> history;
    bool converged_early = false;
};

// Seeded Latin hypercube sample of n points in [0,1]^dim.
std::vector<std::vector<double>> latin_hypercube(int n, int dim, uint64_t seed);

// Bayesian optimization of the per-level thresholds against the cached
// evaluation table: minimize O(gamma) = lambda*error_norm +
// (1-lambda)*energy_norm by maximizing -O with a GP surrogate, UCB
// acquisition, and DIRECT for the inner acquisition search. Returns the best
// *observed* point. warm_starts are evaluated after the Latin hypercube
// seeds and count against the budget.
BOResult optimize_thresholds(const EvalTable& table, double lambda, const BOBudget& budget,
                             const AcquisitionConfig& acq, const GPConfig& gp_cfg,
                             uint64_t seed,
                             const std::vector<ThresholdVector>& warm_starts = {});

// Single shared threshold applied at every level (the 1-D baseline mode).
// The returned best/history gammas hold the one shared component.
BOResult optimize_shared_threshold(const EvalTable& table, double lambda,
                                   const BOBudget& budget, const AcquisitionConfig& acq,
                                   const GPConfig& gp_cfg, uint64_t seed);

// Broadcast a shared threshold to a full per-level vector.
ThresholdVector broadcast_threshold(double shared, int num_levels);

// History CSV: iteration, gamma components, objective, error_norm,
// energy_norm, exit histogram.
void write_history_csv(const std::string& path, const std::vector<BORecord>& history);

} // namespace c2f
