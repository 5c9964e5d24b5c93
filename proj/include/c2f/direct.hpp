#pragma once

#include <functional>
#include <vector>

namespace c2f {

struct DirectResult {
    std::vector<double> best_point;
    double best_value = 0;
    int evaluations = 0;
};

// DIRECT (DIvided RECTangles) global maximization over the unit hypercube
// [0,1]^dim. Deterministic: hyperrectangles are tracked with integer
// trisection counts, potentially-optimal selection uses the convex hull over
// (size, value) with slack eps, and ties break by insertion index. Never
// evaluates outside the cube; stops when max_evals is reached (normal
// termination, not an error).
DirectResult direct_maximize(const std::function<double(const std::vector<double>&)>& objective,
                             int dim, int max_evals, double eps = 1e-4,
                             const std::function<void(const std::vector<double>&, double)>&
                                 on_evaluation = nullptr);

} // namespace c2f
