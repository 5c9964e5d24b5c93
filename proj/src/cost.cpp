#include "c2f/cost.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace c2f {

const char* CostProfile::provider_name() const {
    switch (provider) {
        case Provider::analytic_mac: return "analytic_mac";
        case Provider::measured_latency: return "measured_latency";
        case Provider::user_table: return "user_table";
    }
    return "?";
}

void CostProfile::validate() const {
    if (cumulative.empty()) fail("cost profile: empty");
    double prev = 0;
    for (size_t i = 0; i < cumulative.size(); ++i) {
        if (cumulative[i] <= 0)
            fail("cost profile: level " + std::to_string(i + 1) + " cost must be positive");
        if (cumulative[i] < prev)
            fail("cost profile: cumulative cost decreases at level " + std::to_string(i + 1));
        prev = cumulative[i];
    }
}

long long layer_macs(const LayerSpec& spec, const std::vector<int>& in_shape) {
    output_shape(spec, in_shape);  // shape validation
    switch (spec.kind) {
        case LayerKind::Conv3x3:
            return static_cast<long long>(in_shape[0]) * in_shape[1] * 9 *
                   spec.in_channels * spec.out_channels;
        case LayerKind::Dense:
            return static_cast<long long>(spec.in_dim) * spec.out_dim;
        default:
            return 0;  // pool/relu/softmax/flatten/batchnorm: negligible
    }
}

long long block_macs(const std::vector<LayerSpec>& specs, std::vector<int> shape) {
    long long total = 0;
    for (const auto& spec : specs) {
        total += layer_macs(spec, shape);
        shape = output_shape(spec, shape);
    }
    return total;
}

long long cumulative_level_macs(const C2FArchitecture& arch, int level) {
    if (level < 0 || level >= arch.num_levels())
        fail("cumulative_level_macs: level out of range");
    long long total = 0;
    for (int i = 0; i <= level; ++i)
        total += block_macs(arch.transformer[static_cast<size_t>(i)],
                            arch.feature_shape[static_cast<size_t>(i)]);
    total += classifier_macs(arch, level);
    return total;
}

long long classifier_macs(const C2FArchitecture& arch, int level) {
    return block_macs(arch.classifier[static_cast<size_t>(level)],
                      arch.feature_shape[static_cast<size_t>(level) + 1]);
}

double normalized_level_cost(const C2FArchitecture& arch, int level) {
    return static_cast<double>(cumulative_level_macs(arch, level)) /
           static_cast<double>(cumulative_level_macs(arch, arch.num_levels() - 1));
}

CostProfile analytic_cost_profile(const C2FArchitecture& arch) {
    CostProfile p;
    p.provider = CostProfile::Provider::analytic_mac;
    for (int l = 0; l < arch.num_levels(); ++l)
        p.cumulative.push_back(static_cast<double>(cumulative_level_macs(arch, l)));
    p.validate();
    return p;
}

CostProfile cost_profile_from_csv(const std::string& path, int num_levels) {
    std::ifstream in(path);
    if (!in) fail("cost table: cannot open " + path);
    CostProfile p;
    p.provider = CostProfile::Provider::user_table;
    p.cumulative.assign(static_cast<size_t>(num_levels), 0.0);
    std::vector<bool> seen(static_cast<size_t>(num_levels), false);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line.find("level") != std::string::npos) continue;  // header row
        std::istringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b))
            fail("cost table " + path + ": line " + std::to_string(lineno) +
                 ": expected 'level,cost'");
        int level = std::stoi(a);
        if (level < 1 || level > num_levels)
            fail("cost table " + path + ": level " + std::to_string(level) +
                 " out of range [1," + std::to_string(num_levels) + "]");
        p.cumulative[static_cast<size_t>(level - 1)] = std::stod(b);
        seen[static_cast<size_t>(level - 1)] = true;
    }
    for (int l = 0; l < num_levels; ++l)
        if (!seen[static_cast<size_t>(l)])
            fail("cost table " + path + ": missing level " + std::to_string(l + 1));
    p.notes.push_back("user-supplied per-level costs from " + path);
    p.validate();
    return p;
}

LatencySample summarize_latency_reps(int level, const std::vector<double>& per_rep) {
    LatencySample s;
    s.level = level;
    s.reps = static_cast<int>(per_rep.size());
    std::vector<double> sorted = per_rep;
    std::sort(sorted.begin(), sorted.end());
    size_t n = sorted.size();
    s.median_seconds = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    s.edp_proxy = s.median_seconds * s.median_seconds;
    double mean = 0;
    for (double v : per_rep) mean += v;
    mean /= static_cast<double>(n);
    double var = 0;
    for (double v : per_rep) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    s.cv = mean > 0 ? std::sqrt(var) / mean : 0;
    double tick = static_cast<double>(std::chrono::steady_clock::period::num) /
                  static_cast<double>(std::chrono::steady_clock::period::den);
    s.timer_warning = s.median_seconds < 100 * tick;
    return s;
}

} // namespace c2f
