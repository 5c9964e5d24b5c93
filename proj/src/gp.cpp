#include "c2f/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace c2f {

namespace {

// In-place lower Cholesky of a row-major n x n matrix; returns false if a
// pivot goes non-positive.
bool cholesky(std::vector<double>& m, int n) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = m[static_cast<size_t>(i) * n + j];
            for (int k = 0; k < j; ++k)
                s -= m[static_cast<size_t>(i) * n + k] * m[static_cast<size_t>(j) * n + k];
            if (i == j) {
                if (s <= 0) return false;
                m[static_cast<size_t>(i) * n + j] = std::sqrt(s);
            } else {
                m[static_cast<size_t>(i) * n + j] = s / m[static_cast<size_t>(j) * n + j];
            }
        }
        for (int j = i + 1; j < n; ++j)
            m[static_cast<size_t>(i) * n + j] = 0;
    }
    return true;
}

void solve_lower(const std::vector<double>& L, int n, std::vector<double>& b) {
    for (int i = 0; i < n; ++i) {
        double s = b[static_cast<size_t>(i)];
        for (int k = 0; k < i; ++k)
            s -= L[static_cast<size_t>(i) * n + k] * b[static_cast<size_t>(k)];
        b[static_cast<size_t>(i)] = s / L[static_cast<size_t>(i) * n + i];
    }
}

void solve_upper_from_lower(const std::vector<double>& L, int n, std::vector<double>& b) {
    for (int i = n - 1; i >= 0; --i) {
        double s = b[static_cast<size_t>(i)];
        for (int k = i + 1; k < n; ++k)
            s -= L[static_cast<size_t>(k) * n + i] * b[static_cast<size_t>(k)];
        b[static_cast<size_t>(i)] = s / L[static_cast<size_t>(i) * n + i];
    }
}

} // namespace

double GPModel::kernel(const std::vector<double>& a, const std::vector<double>& b) const {
    double q = 0;
    for (int d = 0; d < dim_; ++d) {
        double l = cfg_.length_scales[static_cast<size_t>(d)];
        double diff = a[static_cast<size_t>(d)] - b[static_cast<size_t>(d)];
        q += diff * diff / (2.0 * l * l);
    }
    return kappa0_ * std::exp(-q);
}

GPModel GPModel::fit(const std::vector<std::vector<double>>& inputs,
                     const std::vector<double>& values, GPConfig cfg) {
    if (inputs.empty() || inputs.size() != values.size())
        fail("gp_fit: need matching, non-empty inputs and values");
    int n = static_cast<int>(inputs.size());
    int dim = static_cast<int>(inputs[0].size());
    if (dim < 1) fail("gp_fit: zero-dimensional inputs");
    for (const auto& x : inputs)
        if (static_cast<int>(x.size()) != dim) fail("gp_fit: ragged input dimensions");

    if (cfg.length_scales.empty()) cfg.length_scales.assign(static_cast<size_t>(dim), 0.2);
    if (cfg.length_scales.size() == 1 && dim > 1)
        cfg.length_scales.assign(static_cast<size_t>(dim), cfg.length_scales[0]);
    if (static_cast<int>(cfg.length_scales.size()) != dim)
        fail("gp_fit: length_scales size mismatch");
    for (double l : cfg.length_scales)
        if (l <= 0) fail("gp_fit: length scales must be positive");

    if (cfg.refine_length_scale) {
        GPConfig best = cfg;
        best.refine_length_scale = false;
        double best_lml = -std::numeric_limits<double>::infinity();
        for (double l : {0.1, 0.2, 0.4}) {
            GPConfig probe = cfg;
            probe.refine_length_scale = false;
            probe.length_scales.assign(static_cast<size_t>(dim), l);
            GPModel m = fit(inputs, values, probe);
            if (m.log_marginal_likelihood() > best_lml) {
                best_lml = m.log_marginal_likelihood();
                best = probe;
            }
        }
        cfg = best;
    }

    GPModel m;
    m.cfg_ = cfg;
    m.x_ = inputs;
    m.y_ = values;
    m.dim_ = dim;

    if (std::isnan(cfg.prior_mean)) {
        double s = 0;
        for (double v : values) s += v;
        m.mu0_ = s / n;
    } else {
        m.mu0_ = cfg.prior_mean;
    }

    if (cfg.signal_variance < 0) {
        double var = 0;
        double mean = 0;
        for (double v : values) mean += v;
        mean /= n;
        for (double v : values) var += (v - mean) * (v - mean);
        var /= n;
        m.kappa0_ = std::max(var, 1e-8);
    } else {
        m.kappa0_ = cfg.signal_variance;
    }

    std::vector<double> base(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            base[static_cast<size_t>(i) * n + j] =
                m.kernel(inputs[static_cast<size_t>(i)], inputs[static_cast<size_t>(j)]);

    double jitter = 0;
    for (;;) {
        m.chol_ = base;
        for (int i = 0; i < n; ++i)
            m.chol_[static_cast<size_t>(i) * n + i] += cfg.noise_variance + jitter;
        if (cholesky(m.chol_, n)) break;
        jitter = jitter == 0 ? 1e-10 : jitter * 10;
        if (jitter > 1e-6)
            fail("gp_fit: kernel matrix not positive definite even with jitter 1e-6 "
                 "(duplicate inputs with conflicting outputs under near-zero noise?)");
    }
    m.jitter_ = jitter;

    m.alpha_.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        m.alpha_[static_cast<size_t>(i)] = values[static_cast<size_t>(i)] - m.mu0_;
    solve_lower(m.chol_, n, m.alpha_);
    double quad = 0;
    double logdet = 0;
    for (int i = 0; i < n; ++i) {
        quad += m.alpha_[static_cast<size_t>(i)] * m.alpha_[static_cast<size_t>(i)];
        logdet += std::log(m.chol_[static_cast<size_t>(i) * n + i]);
    }
    solve_upper_from_lower(m.chol_, n, m.alpha_);
    m.log_marginal_ = -0.5 * quad - logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
    return m;
}

GPPosterior GPModel::posterior(const std::vector<double>& g) const {
    if (static_cast<int>(g.size()) != dim_)
        fail("gp_posterior: query dimension " + std::to_string(g.size()) + ", model wants " +
             std::to_string(dim_));
    int n = static_cast<int>(y_.size());
    std::vector<double> k(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) k[static_cast<size_t>(i)] = kernel(g, x_[static_cast<size_t>(i)]);

    GPPosterior p;
    p.mean = mu0_;
    for (int i = 0; i < n; ++i)
        p.mean += k[static_cast<size_t>(i)] * alpha_[static_cast<size_t>(i)];

    std::vector<double> v = k;
    solve_lower(chol_, n, v);
    double var = kappa0_;
    for (int i = 0; i < n; ++i) var -= v[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
    p.stddev = std::sqrt(std::max(0.0, var));
    return p;
}

double ucb_beta_at(const AcquisitionConfig& cfg, int t) {
    if (cfg.schedule == AcquisitionConfig::Schedule::fixed) return cfg.ucb_beta;
    double tt = static_cast<double>(t + 1);
    return 2.0 * std::log(tt * tt * std::numbers::pi * std::numbers::pi / 6.0);
}

double ucb_score(const GPModel& model, const std::vector<double>& g,
                 const AcquisitionConfig& cfg, int t) {
    GPPosterior p = model.posterior(g);
    return p.mean + std::sqrt(ucb_beta_at(cfg, t)) * p.stddev;
}

} // namespace c2f
