#pragma once

#include <Eigen/Dense>

#include "iqcd/errors.hpp"

namespace iqcd {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;

/// Real state-space realization (A,B,C,D) of C(sI-A)^{-1}B + D.
/// n = 0 (static gain) is a first-class citizen: all blocks may have
/// zero rows/columns as long as the shapes are mutually consistent.
struct Realization {
    Mat a;  // n x n
    Mat b;  // n x m
    Mat c;  // p x n
    Mat d;  // p x m

    Realization() = default;
    Realization(Mat a_, Mat b_, Mat c_, Mat d_);

    static Realization static_gain(const Mat& gain);

    Eigen::Index n() const { return a.rows(); }
    Eigen::Index m() const { return d.cols(); }
    Eigen::Index p() const { return d.rows(); }
};

/// Parametric uncertainty interval [alpha, beta] with 0 in the interior.
struct Interval {
    double alpha = 0.0;
    double beta = 0.0;

    Interval() = default;
    Interval(double alpha_, double beta_);
};

/// Uncertain plant: xdot = A x + B_w w + B_d d,
/// z = C_z x + D_zw w + D_zd d, e = C_e x.
struct UncertainPlant {
    Mat a;     // n x n
    Mat b_w;   // n x n_w
    Mat b_d;   // n x n_d
    Mat c_z;   // n_z x n
    Mat d_zw;  // n_z x n_w
    Mat d_zd;  // n_z x n_d
    Mat c_e;   // n_e x n

    UncertainPlant() = default;
    UncertainPlant(Mat a_, Mat b_w_, Mat b_d_, Mat c_z_, Mat d_zw_, Mat d_zd_, Mat c_e_);

    Eigen::Index n() const { return a.rows(); }
    Eigen::Index n_w() const { return b_w.cols(); }
    Eigen::Index n_d() const { return b_d.cols(); }
    Eigen::Index n_z() const { return c_z.rows(); }
    Eigen::Index n_e() const { return c_e.rows(); }

    /// The w-channel realization G = (A, B_w, C_z, D_zw).
    Realization loop_channel() const;
};

/// Basis filter col(1, 1/(s+1), ..., 1/(s+1)^nu) as a state chain:
/// nu states, 1 input, nu+1 outputs, all poles at -1.
Realization psi_basis(int nu);

/// Block-diagonal realization of diag(G1, G2).
Realization diag_join(const Realization& r1, const Realization& r2);

/// Series connection outer * inner with state col(xi_outer, x_inner).
Realization cascade(const Realization& outer, const Realization& inner);

/// Inverse-graph stacking F = col(G, I).
Realization inverse_graph(const Realization& g);

/// C(i w I - A)^{-1} B + D; throws NumericalError at a pole.
CMat freq_response(const Realization& r, double omega);

/// True iff all eigenvalues of a have real part < -tol.
bool is_hurwitz(const Mat& a, double tol = 1e-9);

/// The constant matrix T = [I, -I/beta; -alpha I, I] for an n-dim channel.
Mat parametric_t(const Interval& interval, Eigen::Index n);

/// J = col(I_n, I_n).
Mat stack_j(Eigen::Index n);

/// E = col(I_nz, 0_{nw x nz}).
Mat stack_e(Eigen::Index nz, Eigen::Index nw);

}  // namespace iqcd
