#include "iqcd/riccati.hpp"

#include <lapacke.h>

#include <cmath>
#include <complex>

#include "iqcd/errors.hpp"
#include "iqcd/sdp.hpp"

namespace iqcd {
namespace {

extern "C" lapack_logical select_stable(const double* re, const double* /*im*/) {
    return *re < 0.0 ? 1 : 0;
}

// Stable invariant subspace of m via ordered real Schur form; returns the
// first `want` Schur vectors as columns. Eigenvalues within 1e-9 of the
// imaginary axis make the ordering ambiguous and are rejected.
Mat stable_subspace(const Mat& m, Eigen::Index want) {
    const lapack_int n = static_cast<lapack_int>(m.rows());
    if (n == 0) return Mat(0, 0);
    Mat a = m;  // Eigen default is column-major, matching LAPACK_COL_MAJOR
    Vec wr(n), wi(n);
    Mat vs(n, n);
    lapack_int sdim = 0;
    lapack_int info =
        LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', 'S', select_stable, n, a.data(),
                      n, &sdim, wr.data(), wi.data(), vs.data(), n);
    if (info < 0 || info > n + 2) throw NumericalError("dgees failed, info=" + std::to_string(info));
    for (lapack_int i = 0; i < n; ++i) {
        if (std::abs(wr(i)) < 1e-9)
            throw NumericalError("Riccati subspace ordering is ambiguous: eigenvalue with |Re| = " +
                                 std::to_string(std::abs(wr(i))) + " < 1e-9");
    }
    if (info != 0)
        throw NumericalError("dgees could not order the Schur form reliably (info=" +
                             std::to_string(info) + ")");
    if (sdim != static_cast<lapack_int>(want))
        throw NumericalError("stable invariant subspace has dimension " + std::to_string(sdim) +
                             ", expected " + std::to_string(want));
    return vs.leftCols(want);
}

// Shared core: K with A1^T K + K A2 + Q - (K B2 + S1) R^{-1} (B1^T K + S2) = 0
// via the stable subspace of the associated (n2 + n1) block matrix.
Mat riccati_subspace_solve(const Mat& a1, const Mat& a2, const Mat& b1, const Mat& b2,
                           const Mat& q, const Mat& s1, const Mat& s2, const Mat& r) {
    const Eigen::Index n1 = a1.rows();
    const Eigen::Index n2 = a2.rows();
    if (n1 == 0 || n2 == 0) return Mat::Zero(n1, n2);
    Eigen::FullPivLU<Mat> rlu(r);
    if (!rlu.isInvertible()) throw NumericalError("D1^T P D2 is singular");
    const Mat rinv_s2 = rlu.solve(s2);       // R^{-1} S2
    const Mat rinv_b1t = rlu.solve(b1.transpose());
    Mat h(n2 + n1, n2 + n1);
    h.topLeftCorner(n2, n2) = a2 - b2 * rinv_s2;
    h.topRightCorner(n2, n1) = -b2 * rinv_b1t;
    h.bottomLeftCorner(n1, n2) = -(q - s1 * rinv_s2);
    h.bottomRightCorner(n1, n1) = -(a1.transpose() - s1 * rinv_b1t);
    const Mat v = stable_subspace(h, n2);
    const Mat v1 = v.topRows(n2);
    const Mat v2 = v.bottomRows(n1);
    Eigen::JacobiSVD<Mat> svd(v1);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= 0 || smax / smin > 1e10)
        throw NumericalError("invariant subspace basis is ill-conditioned (cond > 1e10)");
    return v2 * v1.partialPivLu().solve(Mat::Identity(n2, n2));
}

double residual_core(const Mat& a1, const Mat& a2, const Mat& b1, const Mat& b2, const Mat& q,
                     const Mat& s1, const Mat& s2, const Mat& r, const Mat& k) {
    if (k.size() == 0) return 0.0;
    const Mat res = a1.transpose() * k + k * a2 + q -
                    (k * b2 + s1) * r.fullPivLu().solve(b1.transpose() * k + s2);
    const double scale = 1.0 + (a1.transpose() * k).norm() + q.norm();
    return res.norm() / scale;
}

}  // namespace

Mat solve_sym_are(const Realization& psi, const Mat& m) {
    if (m.rows() != psi.p() || m.cols() != psi.p()) throw DimensionError("M size mismatch");
    const Mat r = psi.d.transpose() * m * psi.d;
    if (psi.n() > 0 && !is_hurwitz(psi.a)) throw NumericalError("A_Psi is not Hurwitz");
    const Mat q = psi.c.transpose() * m * psi.c;
    const Mat s = psi.c.transpose() * m * psi.d;  // S1; S2 = S1^T here
    Mat z = riccati_subspace_solve(psi.a, psi.a, psi.b, psi.b, q, s, s.transpose(), r);
    z = 0.5 * (z + z.transpose());
    const double res = sym_are_residual(psi, m, z);
    if (res > 1e-8) throw NumericalError("symmetric ARE residual " + std::to_string(res));
    return z;
}

CanonicalFactorization canonical_factor(const Realization& psi, const Mat& m, const Mat& z_tilde) {
    const Mat m_tilde = psi.d.transpose() * m * psi.d;
    Eigen::FullPivLU<Mat> lu(m_tilde);
    if (!lu.isInvertible()) throw NumericalError("D_Psi^T M D_Psi is singular");
    const Mat c_tilde = lu.solve(psi.b.transpose() * z_tilde + psi.d.transpose() * m * psi.c);
    CanonicalFactorization fac;
    fac.psi_tilde = Realization{psi.a, psi.b, c_tilde, Mat::Identity(psi.m(), psi.m())};
    fac.m_tilde = 0.5 * (m_tilde + m_tilde.transpose());
    fac.z_tilde = z_tilde;
    if (psi.n() > 0 && !is_hurwitz(psi.a - psi.b * c_tilde))
        throw NumericalError("canonical factor inverse is not stable");
    return fac;
}

double verify_factorization(const Realization& psi, const Mat& m,
                            const CanonicalFactorization& fac, const std::vector<double>& grid) {
    double worst = 0.0;
    for (double omega : grid) {
        const CMat lhs_f = freq_response(psi, omega);
        const CMat rhs_f = freq_response(fac.psi_tilde, omega);
        const CMat lhs = lhs_f.adjoint() * m * lhs_f;
        const CMat rhs = rhs_f.adjoint() * fac.m_tilde * rhs_f;
        const double dev = (lhs - rhs).norm() / (1.0 + lhs.norm());
        worst = std::max(worst, dev);
    }
    return worst;
}

Mat solve_nonsym_are(const Realization& psi1, const Realization& psi2, const Mat& p) {
    if (p.rows() != psi1.p() || p.cols() != psi2.p()) throw DimensionError("P size mismatch");
    if ((psi1.n() > 0 && !is_hurwitz(psi1.a)) || (psi2.n() > 0 && !is_hurwitz(psi2.a)))
        throw NumericalError("psi_1 or psi_2 is not stable");
    const Mat r = psi1.d.transpose() * p * psi2.d;
    const Mat q = psi1.c.transpose() * p * psi2.c;
    const Mat s1 = psi1.c.transpose() * p * psi2.d;
    const Mat s2 = psi1.d.transpose() * p * psi2.c;
    const Mat k = riccati_subspace_solve(psi1.a, psi2.a, psi1.b, psi2.b, q, s1, s2, r);
    const double res = nonsym_are_residual(psi1, psi2, p, k);
    if (res > 1e-8) throw NumericalError("non-symmetric ARE residual " + std::to_string(res));
    if (k.size() > 0) {
        Eigen::FullPivLU<Mat> rlu(r);
        const Mat gain = rlu.solve(psi1.b.transpose() * k + s2);
        const Mat loop1 = psi1.a.transpose() - (k * psi2.b + s1) * rlu.solve(psi1.b.transpose());
        const Mat loop2 = psi2.a - psi2.b * gain;
        if (!is_hurwitz(loop1) || !is_hurwitz(loop2))
            throw NumericalError("non-symmetric ARE solution is not stabilizing");
    }
    return k;
}

StructuredTerminalCost terminal_cost_from_k(const Mat& k) {
    StructuredTerminalCost tc;
    tc.k = k;
    const Eigen::Index r = k.rows(), c = k.cols();
    tc.z = Mat::Zero(r + c, r + c);
    tc.z.topRightCorner(r, c) = k;
    tc.z.bottomLeftCorner(c, r) = k.transpose();
    return tc;
}

double sym_are_residual(const Realization& psi, const Mat& m, const Mat& z) {
    const Mat s = psi.c.transpose() * m * psi.d;
    return residual_core(psi.a, psi.a, psi.b, psi.b, psi.c.transpose() * m * psi.c, s,
                         s.transpose(), psi.d.transpose() * m * psi.d, z);
}

double nonsym_are_residual(const Realization& psi1, const Realization& psi2, const Mat& p,
                           const Mat& k) {
    return residual_core(psi1.a, psi2.a, psi1.b, psi2.b, psi1.c.transpose() * p * psi2.c,
                         psi1.c.transpose() * p * psi2.d, psi1.d.transpose() * p * psi2.c,
                         psi1.d.transpose() * p * psi2.d, k);
}

}  // namespace iqcd
