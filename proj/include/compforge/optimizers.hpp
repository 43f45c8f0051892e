#pragma once

#include <functional>
#include <span>
#include <vector>

namespace compforge::optim {

/// Returns f(x) and writes the gradient into `grad` (same size as x).
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsSettings {
    double lr = 1.0;
    int max_epochs = 10;
    int max_iter = 200;  // iterations per epoch
    int history_size = 10;
    double tolerance_grad = 1e-7;
    double tolerance_change = 1e-9;
    double armijo_c1 = 1e-4;  // sufficient decrease
    double wolfe_c2 = 0.9;    // curvature
    int max_line_evals = 40;  // objective evaluations per line search
};

struct AdamSettings {
    double lr = 2e-3;
    int max_epochs = 5000;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct RunResult {
    std::vector<double> x;
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
    /// A non-finite value was met at an accepted point; x/f hold the start point.
    bool failed = false;
};

/// Limited-memory BFGS: two-loop recursion for the search direction, strong
/// Wolfe line search (bracketing, then zoom by safeguarded cubic
/// interpolation, shrinking the step on failure), curvature pairs kept across
/// epochs. Trial steps with a non-finite objective count as too long.
RunResult lbfgs_minimize(const Objective& fn, std::vector<double> x0, const LbfgsSettings& cfg);

/// Full-batch Adam with bias correction; one step per epoch. Returns the best
/// iterate seen, not necessarily the last one.
RunResult adam_minimize(const Objective& fn, std::vector<double> x0, const AdamSettings& cfg);

}  // namespace compforge::optim
