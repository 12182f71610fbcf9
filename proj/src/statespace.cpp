#include "iqcd/statespace.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <complex>
#include <sstream>

namespace iqcd {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw DimensionError(msg);
}

}  // namespace

Realization::Realization(Mat a_, Mat b_, Mat c_, Mat d_)
    : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)), d(std::move(d_)) {
    require(a.rows() == a.cols(), "Realization: A must be square");
    require(b.rows() == a.rows(), "Realization: B row count must match A");
    require(c.cols() == a.rows(), "Realization: C column count must match A");
    require(d.rows() == c.rows() && d.cols() == b.cols(),
            "Realization: D shape must be p x m");
}

Realization Realization::static_gain(const Mat& gain) {
    return Realization(Mat::Zero(0, 0), Mat::Zero(0, gain.cols()),
                       Mat::Zero(gain.rows(), 0), gain);
}

Interval::Interval(double alpha_, double beta_) : alpha(alpha_), beta(beta_) {
    if (!(alpha <= beta)) {
        std::ostringstream os;
        os << "Interval: alpha (" << alpha << ") must not exceed beta (" << beta << ")";
        throw ConfigError(os.str());
    }
}

UncertainPlant::UncertainPlant(Mat a_, Mat b_w_, Mat b_d_, Mat c_z_, Mat d_zw_, Mat d_zd_,
                               Mat c_e_)
    : a(std::move(a_)),
      b_w(std::move(b_w_)),
      b_d(std::move(b_d_)),
      c_z(std::move(c_z_)),
      d_zw(std::move(d_zw_)),
      d_zd(std::move(d_zd_)),
      c_e(std::move(c_e_)) {
    require(a.rows() == a.cols(), "UncertainPlant: A must be square");
    const Eigen::Index nn = a.rows();
    require(b_w.rows() == nn && b_d.rows() == nn, "UncertainPlant: B blocks must have n rows");
    require(c_z.cols() == nn && c_e.cols() == nn, "UncertainPlant: C blocks must have n columns");
    require(d_zw.rows() == c_z.rows() && d_zw.cols() == b_w.cols(),
            "UncertainPlant: D_zw must be n_z x n_w");
    require(d_zd.rows() == c_z.rows() && d_zd.cols() == b_d.cols(),
            "UncertainPlant: D_zd must be n_z x n_d");
}

Realization UncertainPlant::loop_channel() const {
    return Realization(a, b_w, c_z, d_zw);
}

Realization psi_basis(int nu) {
    if (nu < 0) throw DimensionError("psi_basis: nu must be nonnegative");
    Mat a = Mat::Zero(nu, nu);
    Mat b = Mat::Zero(nu, 1);
    for (int i = 0; i < nu; ++i) {
        a(i, i) = -1.0;
        if (i > 0) a(i, i - 1) = 1.0;
    }
    if (nu > 0) b(0, 0) = 1.0;
    Mat c = Mat::Zero(nu + 1, nu);
    c.bottomRows(nu) = Mat::Identity(nu, nu);
    Mat d = Mat::Zero(nu + 1, 1);
    d(0, 0) = 1.0;
    return Realization(a, b, c, d);
}

Realization diag_join(const Realization& r1, const Realization& r2) {
    const Eigen::Index n1 = r1.n(), n2 = r2.n();
    Mat a = Mat::Zero(n1 + n2, n1 + n2);
    a.topLeftCorner(n1, n1) = r1.a;
    a.bottomRightCorner(n2, n2) = r2.a;
    Mat b = Mat::Zero(n1 + n2, r1.m() + r2.m());
    b.topLeftCorner(n1, r1.m()) = r1.b;
    b.bottomRightCorner(n2, r2.m()) = r2.b;
    Mat c = Mat::Zero(r1.p() + r2.p(), n1 + n2);
    c.topLeftCorner(r1.p(), n1) = r1.c;
    c.bottomRightCorner(r2.p(), n2) = r2.c;
    Mat d = Mat::Zero(r1.p() + r2.p(), r1.m() + r2.m());
    d.topLeftCorner(r1.p(), r1.m()) = r1.d;
    d.bottomRightCorner(r2.p(), r2.m()) = r2.d;
    return Realization(a, b, c, d);
}

Realization cascade(const Realization& outer, const Realization& inner) {
    if (outer.m() != inner.p()) {
        std::ostringstream os;
        os << "cascade: outer input dim " << outer.m() << " != inner output dim " << inner.p();
        throw DimensionError(os.str());
    }
    const Eigen::Index no = outer.n(), ni = inner.n();
    Mat a = Mat::Zero(no + ni, no + ni);
    a.topLeftCorner(no, no) = outer.a;
    a.topRightCorner(no, ni) = outer.b * inner.c;
    a.bottomRightCorner(ni, ni) = inner.a;
    Mat b = Mat::Zero(no + ni, inner.m());
    b.topRows(no) = outer.b * inner.d;
    b.bottomRows(ni) = inner.b;
    Mat c = Mat::Zero(outer.p(), no + ni);
    c.leftCols(no) = outer.c;
    c.rightCols(ni) = outer.d * inner.c;
    Mat d = outer.d * inner.d;
    return Realization(a, b, c, d);
}

Realization inverse_graph(const Realization& g) {
    Mat c = Mat::Zero(g.p() + g.m(), g.n());
    c.topRows(g.p()) = g.c;
    Mat d = Mat::Zero(g.p() + g.m(), g.m());
    d.topRows(g.p()) = g.d;
    d.bottomRows(g.m()) = Mat::Identity(g.m(), g.m());
    return Realization(g.a, g.b, c, d);
}

CMat freq_response(const Realization& r, double omega) {
    if (r.n() == 0) return r.d.cast<std::complex<double>>();
    CMat shifted = -r.a.cast<std::complex<double>>();
    shifted.diagonal().array() += std::complex<double>(0.0, omega);
    Eigen::FullPivLU<CMat> lu(shifted);
    if (!lu.isInvertible()) {
        std::ostringstream os;
        os << "freq_response: i*" << omega << " is (numerically) an eigenvalue of A";
        throw NumericalError(os.str());
    }
    CMat x = lu.solve(r.b.cast<std::complex<double>>());
    return r.c.cast<std::complex<double>>() * x + r.d.cast<std::complex<double>>();
}

bool is_hurwitz(const Mat& a, double tol) {
    if (a.rows() != a.cols()) throw DimensionError("is_hurwitz: matrix must be square");
    if (a.rows() == 0) return true;
    Eigen::EigenSolver<Mat> es(a, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
        throw NumericalError("is_hurwitz: eigenvalue iteration did not converge");
    }
    return es.eigenvalues().real().maxCoeff() < -tol;
}

Mat parametric_t(const Interval& interval, Eigen::Index n) {
    if (interval.beta == 0.0) throw ConfigError("parametric_t: beta must be nonzero");
    Mat t = Mat::Zero(2 * n, 2 * n);
    t.topLeftCorner(n, n) = Mat::Identity(n, n);
    t.topRightCorner(n, n) = -(1.0 / interval.beta) * Mat::Identity(n, n);
    t.bottomLeftCorner(n, n) = -interval.alpha * Mat::Identity(n, n);
    t.bottomRightCorner(n, n) = Mat::Identity(n, n);
    return t;
}

Mat stack_j(Eigen::Index n) {
    Mat j = Mat::Zero(2 * n, n);
    j.topRows(n) = Mat::Identity(n, n);
    j.bottomRows(n) = Mat::Identity(n, n);
    return j;
}

Mat stack_e(Eigen::Index nz, Eigen::Index nw) {
    Mat e = Mat::Zero(nz + nw, nz);
    e.topRows(nz) = Mat::Identity(nz, nz);
    return e;
}

}  // namespace iqcd
