#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace carnot::optim {

using Objective = std::function<double(const std::vector<double>&)>;

struct NelderMeadOptions {
    int max_evals = 600;
    double f_tol = 1e-14;  // absolute spread of simplex values
    double x_tol = 1e-12;  // simplex diameter
    double init_scale = 0.1;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    int evals = 0;
};

/// Downhill simplex minimization. Deterministic for fixed inputs.
NelderMeadResult nelder_mead(const Objective& f, const std::vector<double>& x0,
                             const NelderMeadOptions& opts = {});

using GradObjective =
    std::function<double(const std::vector<double>&, std::vector<double>&)>;

struct LbfgsOptions {
    int max_iters = 200;
    double g_tol = 1e-10;
    int history = 8;
};

struct LbfgsResult {
    std::vector<double> x;
    double f = 0.0;
    int iters = 0;
};

/// Limited-memory BFGS with backtracking line search. The line search uses
/// the cheap value-only objective; gradients are evaluated once per accepted
/// step, which matters when fg is a finite-difference wrapper.
LbfgsResult lbfgs(const Objective& f, const GradObjective& fg,
                  const std::vector<double>& x0, const LbfgsOptions& opts = {});

/// Central-difference gradient wrapper for derivative-free objectives.
GradObjective fd_gradient(const Objective& f, double step = 1e-6);

/// Halton point (index >= 1) in [0,1)^dim.
std::vector<double> halton(std::uint64_t index, int dim);

/// Standard normal quantile (Acklam's rational approximation).
double norminv(double u);

/// Low-discrepancy point in the Euclidean ball of given radius.
std::vector<double> ball_point(std::uint64_t index, int dim, double radius);

} // namespace carnot::optim
