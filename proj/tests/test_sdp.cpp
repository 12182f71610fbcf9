#include <doctest.h>

#include <Eigen/Cholesky>
#include <random>

#include "iqcd/sdp.hpp"

using namespace iqcd;

namespace {

// Battery problem 1: minimize trace(Y) subject to Y >= diag(1,2).
SdpProblem battery_trace() {
    SdpProblem p;
    const int yb = p.layout.add_symmetric("Y", 2);
    AffineSym expr = sym_block_expr(p.layout, yb);
    Mat target(2, 2);
    target << 1.0, 0.0, 0.0, 2.0;
    expr.constant -= target;
    p.constraints.push_back(LmiConstraint{"cone", expr, Sense::PosSemidef, 0.0});
    p.objective = Vec::Zero(p.layout.size());
    Vec probe = Vec::Zero(p.layout.size());
    Mat sel = Mat::Identity(2, 2);
    p.layout.set_value(yb, sel, probe);
    for (Eigen::Index i = 0; i < probe.size(); ++i) p.objective[i] = probe[i];
    return p;
}

// Battery problem 2: minimize x subject to [[x,1],[1,x]] >= 0.
SdpProblem battery_eigen() {
    SdpProblem p;
    p.layout.add_scalar("x");
    AffineSym expr(2);
    expr.constant << 0.0, 1.0, 1.0, 0.0;
    expr.add_coeff(0, Mat::Identity(2, 2));
    p.constraints.push_back(LmiConstraint{"cone", expr, Sense::PosSemidef, 0.0});
    p.objective = Vec::Zero(1);
    p.objective[0] = 1.0;
    return p;
}

// Battery problem 3: feasibility of 2*(-1)*p <= -eps (scalar Lyapunov).
SdpProblem battery_feasibility() {
    SdpProblem p;
    p.layout.add_scalar("p");
    AffineSym expr(1);
    expr.constant << 0.0;
    expr.add_coeff(0, Mat::Constant(1, 1, -2.0));
    p.constraints.push_back(LmiConstraint{"lyap", expr, Sense::NegSemidef, 1e-6});
    p.objective = Vec::Zero(1);
    return p;
}

// Number of eigenvalues of sym strictly below lambda, via LDLT inertia.
int count_below(const Mat& sym, double lambda) {
    Mat shifted = sym - lambda * Mat::Identity(sym.rows(), sym.cols());
    Eigen::LDLT<Mat> ldlt(shifted);
    int neg = 0;
    Vec d = ldlt.vectorD();
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (d[i] < 0) ++neg;
    return neg;
}

}  // namespace

TEST_CASE("battery problem 1: projection onto the cone") {
    SdpSolution s = solve(battery_trace());
    CHECK(s.status == SdpStatus::Optimal);
    CHECK(s.objective == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(s.worst_residual >= -1e-8);
}

TEST_CASE("battery problem 2: eigenvalue constraint") {
    SdpSolution s = solve(battery_eigen());
    CHECK(s.status == SdpStatus::Optimal);
    CHECK(s.x[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("battery problem 3: scalar Lyapunov feasibility") {
    SdpSolution s = solve(battery_feasibility());
    CHECK(s.status == SdpStatus::Feasible);
    CHECK(s.x[0] >= 5e-7);
}

TEST_CASE("battery is deterministic across runs") {
    for (auto make : {battery_trace, battery_eigen, battery_feasibility}) {
        SdpSolution a = solve(make());
        SdpSolution b = solve(make());
        CHECK(a.status == b.status);
        CHECK((a.x - b.x).norm() == 0.0);
        CHECK(a.iterations == b.iterations);
    }
}

TEST_CASE("scaling one block by 10 preserves the battery statuses") {
    for (auto make : {battery_trace, battery_eigen, battery_feasibility}) {
        SdpProblem p = make();
        SdpProblem scaled = make();
        scaled.constraints[0].expr.constant *= 10.0;
        for (auto& [i, coeff] : scaled.constraints[0].expr.coeffs) coeff *= 10.0;
        scaled.constraints[0].margin *= 10.0;
        CHECK(solve(scaled).status == solve(p).status);
    }
}

TEST_CASE("reported residual matches re-evaluating the constraints") {
    SdpSolution s = solve(battery_trace());
    SdpProblem p = battery_trace();
    double worst = 1e300;
    for (const auto& con : p.constraints) {
        Mat v = con.expr.eval(s.x);
        if (con.sense == Sense::NegSemidef) v = -v;
        v.diagonal().array() -= con.margin;
        worst = std::min(worst, min_eig(v));
    }
    CHECK(std::abs(worst - s.worst_residual) <= 1e-10);
}

TEST_CASE("self-duality smoke on random diagonally dominant targets") {
    std::mt19937_64 rng(29);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int t = 0; t < 5; ++t) {
        const Eigen::Index dim = 3;
        Mat c(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i)
            for (Eigen::Index j = 0; j < dim; ++j) c(i, j) = normal(rng);
        c = 0.5 * (c + c.transpose()).eval();
        c.diagonal().array() += c.cwiseAbs().rowwise().sum().maxCoeff() + 1.0;

        SdpProblem p;
        const int yb = p.layout.add_symmetric("Y", dim);
        AffineSym expr = sym_block_expr(p.layout, yb);
        expr.constant -= c;
        p.constraints.push_back(LmiConstraint{"cone", expr, Sense::PosSemidef, 0.0});
        p.objective = Vec::Zero(p.layout.size());
        Vec probe = Vec::Zero(p.layout.size());
        p.layout.set_value(yb, Mat::Identity(dim, dim), probe);
        p.objective = probe;

        SdpSolution s = solve(p);
        CHECK(s.status == SdpStatus::Optimal);
        CHECK(s.objective == doctest::Approx(c.trace()).epsilon(1e-6));
    }
}

TEST_CASE("infeasible system is flagged") {
    // x >= 1 and x <= -1 simultaneously.
    SdpProblem p;
    p.layout.add_scalar("x");
    AffineSym lo(1), hi(1);
    lo.constant << -1.0;
    lo.add_coeff(0, Mat::Constant(1, 1, 1.0));
    hi.constant << -1.0;
    hi.add_coeff(0, Mat::Constant(1, 1, -1.0));
    p.constraints.push_back(LmiConstraint{"lo", lo, Sense::PosSemidef, 0.0});
    p.constraints.push_back(LmiConstraint{"hi", hi, Sense::PosSemidef, 0.0});
    p.objective = Vec::Zero(1);
    SdpSolution s = solve(p);
    CHECK(s.status == SdpStatus::Infeasible);
    CHECK(s.worst_residual < 0.0);
}

TEST_CASE("iteration exhaustion reports numerical failure") {
    SdpOptions opts;
    opts.max_iter = 1;
    SdpSolution s = solve(battery_trace(), opts);
    CHECK(s.status == SdpStatus::NumericalFailure);
    CHECK(!s.message.empty());
}

TEST_CASE("min_eig basics") {
    CHECK(min_eig(Mat::Identity(3, 3)) == doctest::Approx(1.0));
    Mat swap(2, 2);
    swap << 0.0, 1.0, 1.0, 0.0;
    CHECK(min_eig(swap) == doctest::Approx(-1.0));
    CHECK(max_eig(swap) == doctest::Approx(1.0));
    CHECK_THROWS_AS(min_eig(Mat::Zero(2, 3)), DimensionError);
}

TEST_CASE("min_eig agrees with an inertia-bisection oracle") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> normal(0.0, 1.0);
    Mat m(10, 10);
    for (Eigen::Index i = 0; i < 10; ++i)
        for (Eigen::Index j = 0; j < 10; ++j) m(i, j) = normal(rng);
    m = 0.5 * (m + m.transpose()).eval();

    double lo = -m.cwiseAbs().rowwise().sum().maxCoeff();
    double hi = -lo;
    REQUIRE(count_below(m, lo) == 0);
    REQUIRE(count_below(m, hi) == 10);
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (count_below(m, mid) == 0)
            lo = mid;
        else
            hi = mid;
    }
    CHECK(min_eig(m) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-8));
}
