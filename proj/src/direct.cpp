#include "c2f/direct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "c2f/errors.hpp"

namespace c2f {

namespace {

struct Rect {
    std::vector<double> center;
    std::vector<int> levels;  // trisection count per dim; side_d = 3^-levels[d]
    double value = 0;
    int id = 0;
};

// Center-to-vertex distance, computed from the sorted level multiset so
// equal-shaped rectangles always land in the same size group.
double rect_measure(const std::vector<int>& levels) {
    std::vector<int> sorted = levels;
    std::sort(sorted.begin(), sorted.end());
    double s = 0;
    for (int t : sorted) s += std::pow(9.0, -t);
    return 0.5 * std::sqrt(s);
}

} // namespace

DirectResult direct_maximize(const std::function<double(const std::vector<double>&)>& objective,
                             int dim, int max_evals, double eps,
                             const std::function<void(const std::vector<double>&, double)>&
                                 on_evaluation) {
    if (dim < 1) fail("direct_maximize: dimension must be >= 1");
    if (max_evals < 1) fail("direct_maximize: budget must be >= 1");

    std::vector<Rect> rects;
    DirectResult result;
    result.best_value = -std::numeric_limits<double>::infinity();

    auto evaluate = [&](const std::vector<double>& p) {
        double v = objective(p);
        ++result.evaluations;
        if (on_evaluation) on_evaluation(p, v);
        if (v > result.best_value) {
            result.best_value = v;
            result.best_point = p;
        }
        return v;
    };

    Rect first;
    first.center.assign(static_cast<size_t>(dim), 0.5);
    first.levels.assign(static_cast<size_t>(dim), 0);
    first.value = evaluate(first.center);
    first.id = 0;
    rects.push_back(std::move(first));

    while (result.evaluations + 2 <= max_evals) {
        // Best rectangle per distinct size group (ties -> lowest id).
        std::map<std::vector<int>, size_t> group_best;  // key: sorted levels
        for (size_t i = 0; i < rects.size(); ++i) {
            std::vector<int> key = rects[i].levels;
            std::sort(key.begin(), key.end());
            auto it = group_best.find(key);
            if (it == group_best.end() ||
                rects[i].value > rects[it->second].value ||
                (rects[i].value == rects[it->second].value && rects[i].id < rects[it->second].id))
                group_best[key] = i;
        }

        struct Candidate {
            double size;
            double value;
            size_t index;
        };
        std::vector<Candidate> cands;
        for (const auto& [key, idx] : group_best)
            cands.push_back({rect_measure(key), rects[idx].value, idx});
        std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
            return a.size < b.size;
        });

        double best_f = result.best_value;
        std::vector<size_t> selected;
        for (size_t j = 0; j < cands.size(); ++j) {
            // Feasible slope range for "potentially optimal" at this size.
            double k_min = 0;
            double k_max = std::numeric_limits<double>::infinity();
            bool feasible = true;
            for (size_t i = 0; i < cands.size(); ++i) {
                if (i == j) continue;
                double ds = cands[i].size - cands[j].size;
                double dv = cands[j].value - cands[i].value;
                if (ds > 0) {
                    k_max = std::min(k_max, dv / ds);
                } else if (ds < 0) {
                    k_min = std::max(k_min, -dv / (-ds));
                } else if (cands[i].value > cands[j].value) {
                    feasible = false;
                }
            }
            if (!feasible || k_max < k_min || k_max <= 0) continue;
            // Slack against the incumbent: reachable at the largest slope.
            double lhs = std::isinf(k_max)
                             ? std::numeric_limits<double>::infinity()
                             : cands[j].value + k_max * cands[j].size;
            if (lhs < best_f + eps * std::abs(best_f)) continue;
            selected.push_back(cands[j].index);
        }
        if (selected.empty()) break;  // cannot happen with finite data, but stay safe

        bool out_of_budget = false;
        for (size_t sel : selected) {
            if (result.evaluations + 2 > max_evals) { out_of_budget = true; break; }
            // Split along every longest side.
            int tmin = rects[sel].levels[0];
            for (int t : rects[sel].levels) tmin = std::min(tmin, t);
            double delta = std::pow(3.0, -(tmin + 1));

            struct Child {
                int dim;
                double w;  // better of the two new values
                std::vector<double> lo_point, hi_point;
                double lo_value, hi_value;
            };
            std::vector<Child> children;
            for (int d = 0; d < dim; ++d) {
                if (rects[sel].levels[static_cast<size_t>(d)] != tmin) continue;
                if (result.evaluations + 2 > max_evals) { out_of_budget = true; break; }
                Child c;
                c.dim = d;
                c.lo_point = rects[sel].center;
                c.lo_point[static_cast<size_t>(d)] -= delta;
                c.hi_point = rects[sel].center;
                c.hi_point[static_cast<size_t>(d)] += delta;
                c.lo_value = evaluate(c.lo_point);
                c.hi_value = evaluate(c.hi_point);
                c.w = std::max(c.lo_value, c.hi_value);
                children.push_back(std::move(c));
            }
            // Divide best dimension first so the strongest children keep the
            // largest boxes.
            std::stable_sort(children.begin(), children.end(),
                             [](const Child& a, const Child& b) { return a.w > b.w; });
            for (const Child& c : children) {
                rects[sel].levels[static_cast<size_t>(c.dim)]++;
                Rect lo;
                lo.center = c.lo_point;
                lo.levels = rects[sel].levels;
                lo.value = c.lo_value;
                lo.id = static_cast<int>(rects.size());
                rects.push_back(std::move(lo));
                Rect hi;
                hi.center = c.hi_point;
                hi.levels = rects[sel].levels;
                hi.value = c.hi_value;
                hi.id = static_cast<int>(rects.size());
                rects.push_back(std::move(hi));
            }
            if (out_of_budget) break;
        }
        if (out_of_budget) break;
    }
    return result;
}

} // namespace c2f
