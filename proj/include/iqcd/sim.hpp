#pragma once

#include <map>
#include <string>
#include <vector>

#include "iqcd/statespace.hpp"

namespace iqcd {

/// Uniformly sampled named signals at t_k = k*dt, k = 0..K.
struct Trajectory {
    double dt = 0.0;
    std::map<std::string, std::vector<Vec>> channels;

    Eigen::Index samples() const;
    const std::vector<Vec>& at(const std::string& name) const;
    void add(const std::string& name, std::vector<Vec> samples);
};

/// Hold-consistent running integrals (left-rectangle on each hold interval):
/// exact for piecewise-constant integrands.
class EnergyAccumulator {
public:
    explicit EnergyAccumulator(double dt) : dt_(dt) {}

    /// Accumulate ||v||^2 * dt; returns the total so far.
    double add_norm_sq(const Vec& v);
    /// Accumulate v^T m v * dt (sign-indefinite form); returns the total.
    double add_form(const Mat& m, const Vec& v);
    double total() const { return total_; }

private:
    double dt_;
    double total_ = 0.0;
};

/// Closed loop of the uncertain plant at a fixed delta: input d, outputs
/// stacked col(z, w, e).
Realization closed_loop(const UncertainPlant& plant, double delta);

/// Exact zero-order-hold simulation; x0 optional (zero by default).
/// Returns channels "x", "y", "u".
Trajectory simulate_zoh(const Realization& r, const std::vector<Vec>& u, double dt,
                        const Vec& x0 = Vec());

/// Run a filter over input samples with xi(0) = 0; returns (y, xi) channels.
Trajectory filter_response(const Realization& filter, const std::vector<Vec>& u, double dt);

/// min over sample times T of  int_0^T y^T M y dt + xi(T)^T Z xi(T).
double check_finite_horizon_iqc(const Mat& m, const Mat& z_term, const std::vector<Vec>& y,
                                const std::vector<Vec>& xi, double dt);

/// min over T of -[ (xi,x)(T)^T (X - diag(Z,0)) (xi,x)(T)
///                  + int_0^T (1/gamma)||z||^2 - gamma||d||^2 dt ].
double check_dissipation(const Mat& xcal, const Mat& z_term, double gamma,
                         const std::vector<Vec>& xi, const std::vector<Vec>& x,
                         const std::vector<Vec>& z, const std::vector<Vec>& d, double dt);

/// Controllability gramian: solves a W + W a^T + b b^T = 0.
Mat gramian(const Mat& a, const Mat& b);

/// Finite-horizon gramian int_0^T e^{At} bb^T e^{A^Tt} dt for Hurwitz a.
Mat finite_horizon_gramian(const Mat& a, const Mat& b, double horizon);

struct WorstCaseInput {
    std::vector<Vec> d;   // sampled, discrete energy exactly 1
    Vec e_star;           // predicted boundary point of the gramian ellipse
    double dt = 0.0;
};

/// Minimum-energy disturbance steering e(T_f) to the boundary of the
/// finite-horizon output ellipse {e : e^T (C_e W_T C_e^T)^{-1} e <= 1}
/// along the given unit direction.
WorstCaseInput worst_case_disturbance(const UncertainPlant& plant, double delta,
                                      const Vec& direction, double horizon, double dt);

}  // namespace iqcd
