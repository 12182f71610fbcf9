#pragma once

#include <string>

#include "iqcd/lmi.hpp"

namespace iqcd {

struct SdpOptions {
    double tol_feas = 1e-8;
    double tol_gap = 1e-8;
    int max_iter = 200;
    double var_bound = 1e7;  // box |x_i| <= var_bound keeps the barrier problem compact
};

enum class SdpStatus { Optimal, Feasible, Infeasible, NumericalFailure };

const char* to_string(SdpStatus status);

struct SdpSolution {
    Vec x;
    SdpStatus status = SdpStatus::NumericalFailure;
    double objective = 0.0;
    /// Most-negative eigenvalue over all constraint blocks after sense
    /// normalization (margin included); >= -tol_feas when feasible.
    double worst_residual = 0.0;
    int iterations = 0;
    double duality_gap = 0.0;
    std::string message;
};

/// Solve a dense SDP with linear objective and affine matrix-inequality
/// blocks. Phase 1 maximizes a uniform slack margin from the origin;
/// phase 2 minimizes the objective from the strictly feasible phase-1
/// point. A zero objective returns the phase-1 (max-margin) point.
SdpSolution solve(const SdpProblem& problem, const SdpOptions& opts = {});

/// Smallest eigenvalue of a symmetric matrix.
double min_eig(const Mat& sym);

/// Largest eigenvalue of a symmetric matrix.
double max_eig(const Mat& sym);

}  // namespace iqcd
