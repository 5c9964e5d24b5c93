#include "c2f/cascade.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "binio.hpp"

namespace c2f {

const char* confidence_kind_name(ConfidenceKind k) {
    switch (k) {
        case ConfidenceKind::max_prob: return "max_prob";
        case ConfidenceKind::margin: return "margin";
        case ConfidenceKind::entropy: return "entropy";
    }
    return "?";
}

ConfidenceKind confidence_kind_from_string(const std::string& s) {
    if (s == "max_prob") return ConfidenceKind::max_prob;
    if (s == "margin") return ConfidenceKind::margin;
    if (s == "entropy") return ConfidenceKind::entropy;
    fail("unknown confidence kind '" + s + "' (expected max_prob|margin|entropy)");
}

double confidence_score(const std::vector<double>& dist, ConfidenceKind kind) {
    if (dist.size() < 2)
        fail("confidence: need at least 2 classes, got " + std::to_string(dist.size()));
    double sum = 0;
    for (double v : dist) {
        if (v < -1e-9) fail("confidence: negative probability " + std::to_string(v));
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        fail("confidence: distribution sums to " + std::to_string(sum) + ", expected 1");

    double score = 0;
    switch (kind) {
        case ConfidenceKind::max_prob: {
            double best = dist[0];
            for (double v : dist) best = std::max(best, v);
            score = best;
            break;
        }
        case ConfidenceKind::margin: {
            double best = -1, second = -1;
            for (double v : dist) {
                if (v > best) { second = best; best = v; }
                else if (v > second) second = v;
            }
            score = best - second;
            break;
        }
        case ConfidenceKind::entropy: {
            double h = 0;
            for (double v : dist)
                if (v > 0) h -= v * std::log(v);
            score = 1.0 - h / std::log(static_cast<double>(dist.size()));
            break;
        }
    }
    return std::min(1.0, std::max(0.0, score));
}

int argmax_lowest(const std::vector<double>& v) {
    int best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[static_cast<size_t>(best)]) best = static_cast<int>(i);
    return best;
}

int table_exit_level(const EvalTable& table, int n, const ThresholdVector& thresholds) {
    for (int i = 0; i + 1 < table.num_levels; ++i)
        if (table.conf(n, i) >= thresholds[i]) return i;
    return table.num_levels - 1;
}

ObjectiveValue evaluate_objective(const EvalTable& table, const ThresholdVector& thresholds,
                                  double lambda) {
    if (lambda < 0 || lambda > 1)
        fail("evaluate_objective: lambda " + std::to_string(lambda) + " outside [0,1]");
    if (thresholds.size() != table.num_levels - 1)
        fail("evaluate_objective: expected " + std::to_string(table.num_levels - 1) +
             " thresholds, got " + std::to_string(thresholds.size()));
    thresholds.validate();

    ObjectiveValue r;
    r.exit_histogram.assign(static_cast<size_t>(table.num_levels), 0);
    if (table.num_examples == 0) {
        r.energy_norm = 0;
        return r;
    }

    long long wrong_cascade = 0, wrong_finest = 0;
    double cost_sum = 0;
    int finest = table.num_levels - 1;
    for (int n = 0; n < table.num_examples; ++n) {
        int exit = table_exit_level(table, n, thresholds);
        r.exit_histogram[static_cast<size_t>(exit)]++;
        if (table.pred(n, exit) != table.true_labels[static_cast<size_t>(n)]) ++wrong_cascade;
        if (table.pred(n, finest) != table.true_labels[static_cast<size_t>(n)]) ++wrong_finest;
        cost_sum += table.level_cost[static_cast<size_t>(exit)];
    }

    double count = static_cast<double>(table.num_examples);
    r.cascade_error = static_cast<double>(wrong_cascade) / count;
    r.finest_error = static_cast<double>(wrong_finest) / count;
    r.mean_cost = cost_sum / count;
    r.energy_norm = r.mean_cost / table.level_cost.back();
    if (wrong_finest == 0) {
        // the finest level is perfect here; fall back to absolute error
        r.error_norm = r.cascade_error;
        r.absolute_error_fallback = true;
    } else {
        r.error_norm = r.cascade_error / r.finest_error;
    }
    r.objective = lambda * r.error_norm + (1.0 - lambda) * r.energy_norm;
    return r;
}

namespace {

constexpr char kTableMagic[4] = {'C', '2', 'F', 'T'};
constexpr uint32_t kTableVersion = 1;

} // namespace

void EvalTable::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("eval table: cannot open " + path + " for writing");
    out.write(kTableMagic, 4);
    binio::put_u32(out, kTableVersion);
    binio::put_u32(out, static_cast<uint32_t>(num_examples));
    binio::put_u32(out, static_cast<uint32_t>(num_levels));
    binio::put_u32(out, static_cast<uint32_t>(num_classes));
    for (int32_t v : true_labels) binio::put_u32(out, static_cast<uint32_t>(v));
    for (int32_t v : predicted) binio::put_u32(out, static_cast<uint32_t>(v));
    for (double v : confidences) binio::put_f64(out, v);
    for (double v : level_cost) binio::put_f64(out, v);
    if (!out) fail("eval table: write failed for " + path);
}

EvalTable EvalTable::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("eval table: cannot open " + path);
    char magic[4];
    if (!in.read(magic, 4)) fail("eval table " + path + ": truncated");
    if (std::memcmp(magic, kTableMagic, 4) != 0)
        fail("eval table " + path + ": magic/version mismatch: not a C2FT file");
    uint32_t version = binio::get_u32(in, path);
    if (version != kTableVersion)
        fail("eval table " + path + ": magic/version mismatch: unsupported version " +
             std::to_string(version));
    EvalTable t;
    t.num_examples = static_cast<int>(binio::get_u32(in, path));
    t.num_levels = static_cast<int>(binio::get_u32(in, path));
    t.num_classes = static_cast<int>(binio::get_u32(in, path));
    size_t nt = static_cast<size_t>(t.num_examples) * static_cast<size_t>(t.num_levels);
    t.true_labels.resize(static_cast<size_t>(t.num_examples));
    for (auto& v : t.true_labels) v = static_cast<int32_t>(binio::get_u32(in, path));
    t.predicted.resize(nt);
    for (auto& v : t.predicted) v = static_cast<int32_t>(binio::get_u32(in, path));
    t.confidences.resize(nt);
    for (auto& v : t.confidences) v = binio::get_f64(in, path);
    t.level_cost.resize(static_cast<size_t>(t.num_levels));
    for (auto& v : t.level_cost) v = binio::get_f64(in, path);
    return t;
}

} // namespace c2f
