#pragma once

#include <vector>

#include "iqcd/statespace.hpp"

namespace iqcd {

/// Canonical (J-spectral) factorization Psi^* M Psi = Psi~^* M~ Psi~ with
/// Psi~ = (A_Psi, B_Psi, C~, I) square and bistable, certified by z_tilde.
struct CanonicalFactorization {
    Realization psi_tilde;
    Mat m_tilde;  // D_Psi^T M D_Psi
    Mat z_tilde;  // stabilizing Riccati solution
};

/// Terminal cost with the coupled zero-diagonal structure [[0,K],[K^T,0]].
struct StructuredTerminalCost {
    Mat k;
    Mat z;
};

/// Stabilizing solution of
/// A^T Z + Z A + C^T M C - (Z B + C^T M D)(D^T M D)^{-1}(B^T Z + D^T M C) = 0
/// via the stable invariant subspace (ordered real Schur form) of the
/// associated Hamiltonian-type matrix.
Mat solve_sym_are(const Realization& psi, const Mat& m);

/// Build the canonical factor from a stabilizing solution.
CanonicalFactorization canonical_factor(const Realization& psi, const Mat& m, const Mat& z_tilde);

/// Max over the grid of the relative deviation
/// ||Psi(iw)^* M Psi(iw) - Psi~(iw)^* M~ Psi~(iw)|| / (1 + ||Psi(iw)^* M Psi(iw)||).
double verify_factorization(const Realization& psi, const Mat& m,
                            const CanonicalFactorization& fac, const std::vector<double>& grid);

/// Stabilizing solution K of the non-symmetric Riccati equation
/// A1^T K + K A2 + C1^T P C2
///   - (K B2 + C1^T P D2)(D1^T P D2)^{-1}(B1^T K + D1^T P C2) = 0
/// with both closed-loop spectra in the open left half-plane.
Mat solve_nonsym_are(const Realization& psi1, const Realization& psi2, const Mat& p);

StructuredTerminalCost terminal_cost_from_k(const Mat& k);

/// Residual of the symmetric Riccati equation relative to
/// 1 + ||A^T Z|| + ||C^T M C||.
double sym_are_residual(const Realization& psi, const Mat& m, const Mat& z);

/// Residual of the non-symmetric Riccati equation (same scaling rule).
double nonsym_are_residual(const Realization& psi1, const Realization& psi2, const Mat& p,
                           const Mat& k);

}  // namespace iqcd
