#pragma once

#include <functional>
#include <vector>

namespace sabrdnn {

struct BoxBounds {
    std::vector<double> lo;
    std::vector<double> hi;
};

struct OptimOptions {
    int max_iterations = 400;
    double ftol = 1e-10;     // stop when the relative decrease of f falls below this
    double gtol = 1e-12;     // projected-gradient infinity norm, in unit-box coordinates
    double fd_step = 1e-6;   // central-difference step, fraction of each box width
};

struct OptimResult {
    std::vector<double> x;
    double f = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

using Objective = std::function<double(const std::vector<double>&)>;

// Projected BFGS on a box with central-difference gradients. Works in unit-box coordinates;
// steps are projected back onto the box and accepted by an Armijo backtracking search.
OptimResult minimize_box(const Objective& f, std::vector<double> x0, const BoxBounds& box,
                         const OptimOptions& opt = {});

}  // namespace sabrdnn
