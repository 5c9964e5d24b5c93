#pragma once

#include <cmath>
#include <vector>

#include "c2f/errors.hpp"

namespace c2f {

// Gaussian-process regression with a squared-exponential radial kernel,
//   k(a, b) = kappa0 * exp(-sum_d (a_d - b_d)^2 / (2 * l_d^2)),
// used as the surrogate for the threshold objective. Small dense problems
// only (at most a few hundred observations), solved by Cholesky.
struct GPConfig {
    std::vector<double> length_scales;   // per dimension; single entry broadcasts
    double signal_variance = -1;         // kappa0; < 0 means "variance of y"
    double noise_variance = 1e-6;
    double prior_mean = std::nan("");    // NaN means "mean of y"
    bool refine_length_scale = false;    // grid-search l in {0.1,0.2,0.4} by marginal likelihood

    static GPConfig defaults(int dim) {
        GPConfig c;
        c.length_scales.assign(static_cast<size_t>(dim), 0.2);
        return c;
    }
};

struct GPPosterior {
    double mean = 0;
    double stddev = 0;
};

class GPModel {
public:
    // Throws on degenerate kernels that stay non-positive-definite after
    // jitter escalation up to 1e-6.
    static GPModel fit(const std::vector<std::vector<double>>& inputs,
                       const std::vector<double>& values, GPConfig cfg);

    GPPosterior posterior(const std::vector<double>& g) const;

    double log_marginal_likelihood() const { return log_marginal_; }
    double prior_mean() const { return mu0_; }
    double signal_variance() const { return kappa0_; }
    const std::vector<double>& length_scales() const { return cfg_.length_scales; }
    double jitter_used() const { return jitter_; }
    int dim() const { return dim_; }
    int observation_count() const { return static_cast<int>(y_.size()); }

private:
    double kernel(const std::vector<double>& a, const std::vector<double>& b) const;

    GPConfig cfg_;
    std::vector<std::vector<double>> x_;
    std::vector<double> y_;
    std::vector<double> chol_;       // lower-triangular factor of K + noise*I, row-major
    std::vector<double> alpha_;      // (K + noise*I)^-1 (y - mu0)
    double mu0_ = 0;
    double kappa0_ = 1;
    double jitter_ = 0;
    double log_marginal_ = 0;
    int dim_ = 0;
};

// Acquisition: UCB_t(g) = mu(g) + sqrt(beta_t) * sigma(g).
struct AcquisitionConfig {
    enum class Schedule { fixed, log_growth };
    double ucb_beta = 4.0;
    Schedule schedule = Schedule::fixed;
};

// beta_t for iteration t (0-based). log_growth: 2*ln((t+1)^2 * pi^2 / 6).
double ucb_beta_at(const AcquisitionConfig& cfg, int t);

double ucb_score(const GPModel& model, const std::vector<double>& g,
                 const AcquisitionConfig& cfg, int t);

} // namespace c2f
