#include "iqcd/analysis.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "iqcd/errors.hpp"

namespace iqcd {

std::vector<double> default_frequency_grid() {
    std::vector<double> grid;
    grid.reserve(202);
    grid.push_back(0.0);
    const int count = 200;
    for (int i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / (count - 1);
        grid.push_back(std::pow(10.0, -3.0 + 6.0 * t));
    }
    grid.push_back(1e6);
    return grid;
}

namespace {

void check_well_posed(const UncertainPlant& plant, const Interval& interval) {
    const Eigen::Index nz = plant.n_z();
    for (int i = 0; i <= 100; ++i) {
        const double delta =
            interval.alpha + (interval.beta - interval.alpha) * (static_cast<double>(i) / 100.0);
        const Mat loop = Mat::Identity(nz, nz) - plant.d_zw * delta;
        if (std::abs(loop.determinant()) < 1e-9)
            throw ConfigError("loop ill-posed at delta=" + std::to_string(delta));
    }
}

const LmiConstraint& find_constraint(const SdpProblem& problem, const std::string& name) {
    for (const auto& c : problem.constraints)
        if (c.name == name) return c;
    throw Error("constraint not found: " + name);
}

void raise_on_failure(const SdpSolution& sol, const SdpProblem& problem) {
    if (sol.status == SdpStatus::Infeasible) {
        // name the most violated LMI for the error message
        std::string worst_name = "unknown";
        double worst = 0.0;
        for (const auto& c : problem.constraints) {
            if (c.expr.dim == 0) continue;
            Mat v = c.expr.eval(sol.x);
            if (c.sense == Sense::NegSemidef) v = -v;
            const double viol = -(min_eig(v) - c.margin);
            if (viol > worst) {
                worst = viol;
                worst_name = c.name;
            }
        }
        throw InfeasibleError("LMI system infeasible; worst violation in '" + worst_name + "'");
    }
    if (sol.status == SdpStatus::NumericalFailure)
        throw NumericalError("SDP solver failed: " + sol.message);
}

}  // namespace

EllipsoidAnalysis robust_ellipsoid_analysis(const UncertainPlant& plant, const Interval& interval,
                                            int nu, const AnalysisOptions& opts) {
    check_well_posed(plant, interval);
    ExampleLmis lmis = assemble_example_lmis(plant, interval, nu, opts.eps_margin);
    SdpSolution sol = solve(lmis.problem, opts.sdp);
    raise_on_failure(sol, lmis.problem);

    const VarLayout& layout = lmis.problem.layout;
    CertificateBundle bundle;
    bundle.nu = nu;
    bundle.p = layout.value(lmis.p_block, sol.x);
    bundle.xcal = layout.value(lmis.x_block, sol.x);
    bundle.r = lmis.r_block >= 0 ? layout.value(lmis.r_block, sol.x) : Mat(0, 0);
    bundle.k = lmis.k_block >= 0 ? layout.value(lmis.k_block, sol.x) : Mat(0, 0);
    bundle.y = layout.value(lmis.y_block, sol.x);
    bundle.z_tilde = terminal_cost_from_k(bundle.k);
    bundle.coupling_margin = min_eig(find_constraint(lmis.problem, "coupling").expr.eval(sol.x));
    bundle.diagnostics = sol;

    const Mat m = bundle.p.rows() > 0
                      ? [&] {
                            const Eigen::Index m1 = bundle.p.rows();
                            Mat mm = Mat::Zero(2 * m1, 2 * m1);
                            mm.topRightCorner(m1, m1) = bundle.p;
                            mm.bottomLeftCorner(m1, m1) = bundle.p.transpose();
                            return mm;
                        }()
                      : Mat(0, 0);
    Realization psi_t(lmis.psi.a, lmis.psi.b * lmis.t, lmis.psi.c, lmis.psi.d * lmis.t);
    try {
        bundle.gamma = gamma_bisection(bundle.xcal, m, psi_t, plant.loop_channel(), 1e-6, 1e12,
                                       1e-3, 1e-9);
    } catch (const InfeasibleError&) {
        bundle.gamma.reset();
    }

    EllipsoidReport report;
    report.y = bundle.y;
    report.trace = bundle.y.trace();
    report.boundary = ellipse_boundary_points(bundle.y, opts.boundary_count);

    return EllipsoidAnalysis{std::move(bundle), std::move(report)};
}

StabilityVerdict robust_stability_test(const Realization& g, const Interval& interval, int nu,
                                       const AnalysisOptions& opts) {
    if (g.n() > 0 && !is_hurwitz(g.a)) throw ConfigError("nominal plant must be stable");
    if (g.p() != g.m()) throw DimensionError("robust_stability_test requires n_z = n_w");
    const Eigen::Index nz = g.p();
    const Eigen::Index m1 = (nu + 1) * nz;
    Realization basis = psi_basis(nu);
    Realization psi = diag_join(basis, basis);
    const Eigen::Index npsi = psi.n();

    VarLayout layout;
    const int p_block = layout.add_general("P", m1, m1);
    const int x_block = layout.add_symmetric("X", npsi + g.n());
    const int r_block = nu > 0 ? layout.add_symmetric("R", npsi) : -1;
    const int k_block = nu > 0 ? layout.add_general("K", nu, nu) : -1;

    AffineSym m_expr = pn_multiplier_expr(layout, p_block);
    AffineSym x_expr = sym_block_expr(layout, x_block);
    AffineSym r_expr = nu > 0 ? sym_block_expr(layout, r_block) : AffineSym(0);

    SdpProblem problem;
    PnLmis pn = assemble_pn_lmis(psi, interval, g, m_expr, r_expr, x_expr, opts.eps_margin);
    problem.constraints.push_back(pn.positivity);
    problem.constraints.push_back(pn.fdi);
    if (nu > 0) {
        auto rk = [&layout, r_block, k_block, nu](const Vec& v) -> Mat {
            Mat r = layout.value(r_block, v);
            Mat k = layout.value(k_block, v);
            r.block(0, nu, nu, nu) -= k;
            r.block(nu, 0, nu, nu) -= k.transpose();
            return r;
        };
        AffineSym rk_expr = lift_affine(layout, rk);
        problem.constraints.push_back(LmiConstraint{"terminal_cost_bound", rk_expr,
                                                    Sense::NegSemidef,
                                                    strictness_margin(rk_expr, opts.eps_margin)});
    }
    {
        const Eigen::Index n = g.n();
        auto coupling = [&layout, x_block, k_block, nu, n](const Vec& v) -> Mat {
            Mat x = layout.value(x_block, v);
            if (nu > 0) {
                Mat k = layout.value(k_block, v);
                x.block(0, nu, nu, nu) -= k;
                x.block(nu, 0, nu, nu) -= k.transpose();
            }
            return x;
        };
        AffineSym coupling_expr = lift_affine(layout, coupling);
        problem.constraints.push_back(LmiConstraint{"coupling", coupling_expr, Sense::PosSemidef,
                                                    strictness_margin(coupling_expr,
                                                                      opts.eps_margin)});
    }
    problem.objective = Vec::Zero(layout.size());
    problem.layout = layout;

    SdpSolution sol = solve(problem, opts.sdp);
    StabilityVerdict verdict;
    verdict.diagnostics = sol;
    if (sol.status == SdpStatus::Infeasible || sol.status == SdpStatus::NumericalFailure) {
        verdict.certified = false;
        return verdict;
    }
    verdict.certified = true;
    verdict.p = layout.value(p_block, sol.x);
    verdict.xcal = layout.value(x_block, sol.x);
    verdict.r = r_block >= 0 ? layout.value(r_block, sol.x) : Mat(0, 0);
    verdict.k = k_block >= 0 ? layout.value(k_block, sol.x) : Mat(0, 0);
    verdict.coupling_margin =
        min_eig(find_constraint(problem, "coupling").expr.eval(sol.x));
    return verdict;
}

double fdi_sample_check(const Realization& psi_filter, const Mat& m, const Realization& g,
                        const std::vector<double>& grid) {
    const Eigen::Index nz = g.p(), nw = g.m();
    if (psi_filter.m() != nz + nw) throw DimensionError("filter input dim must be n_z + n_w");
    double worst = -std::numeric_limits<double>::infinity();
    for (double omega : grid) {
        const CMat gw = freq_response(g, omega);
        CMat f(nz + nw, nw);
        f.topRows(nz) = gw;
        f.bottomRows(nw) = CMat::Identity(nw, nw);
        const CMat psi_w = freq_response(psi_filter, omega) * f;
        const CMat form = psi_w.adjoint() * m * psi_w;
        Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (form + form.adjoint()));
        worst = std::max(worst, es.eigenvalues().maxCoeff());
    }
    return worst;
}

double gamma_bisection(const Mat& xcal, const Mat& m, const Realization& psi_filter,
                       const Realization& g, double lo, double hi, double tol, double eps) {
    if (!(lo > 0) || hi < lo) throw ConfigError("gamma_bisection: bad range");
    auto feasible = [&](double gamma) {
        const Mat lmi = assemble_gamma_lmi(xcal, m, psi_filter, g, gamma);
        return max_eig(lmi) <= -eps;
    };
    // Very large gamma makes the test matrix so badly scaled that the
    // eigenvalue check drowns in roundoff; walk the upper end down until a
    // numerically clean feasible point is found.
    while (!feasible(hi)) {
        hi /= 10.0;
        if (hi < lo) throw InfeasibleError("no feasible gamma in range");
    }
    if (feasible(lo)) return lo;
    while ((hi - lo) > tol * hi) {
        const double mid = std::sqrt(lo * hi);  // log-scale bisection
        if (feasible(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

double positivity_check(const Mat& xcal, const Mat& z) {
    Mat shifted = xcal;
    if (z.size() > 0) shifted.topLeftCorner(z.rows(), z.cols()) -= z;
    return min_eig(shifted);
}

std::vector<Vec> ellipse_boundary_points(const Mat& y, int count) {
    if (y.rows() != 2 || y.cols() != 2) throw DimensionError("ellipse requires a 2x2 matrix");
    Eigen::SelfAdjointEigenSolver<Mat> es(y);
    if (es.eigenvalues().minCoeff() <= 0) throw NumericalError("Y is not positive definite");
    const Mat half = es.operatorSqrt();
    std::vector<Vec> pts;
    pts.reserve(static_cast<size_t>(count));
    for (int k = 0; k < count; ++k) {
        const double theta = 2.0 * M_PI * k / count;
        Vec dir(2);
        dir << std::cos(theta), std::sin(theta);
        pts.push_back(half * dir);
    }
    return pts;
}

std::vector<Vec> random_unit_energy_input(Eigen::Index dim, Eigen::Index samples, double dt,
                                          unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Vec> d(static_cast<size_t>(samples));
    for (auto& s : d) {
        s.resize(dim);
        for (Eigen::Index i = 0; i < dim; ++i) s[i] = normal(rng);
    }
    double energy = 0.0;
    for (Eigen::Index k = 0; k + 1 < samples; ++k) energy += d[static_cast<size_t>(k)].squaredNorm() * dt;
    if (energy <= 0) throw NumericalError("degenerate random input");
    const double scale = 1.0 / std::sqrt(energy);
    for (auto& s : d) s *= scale;
    return d;
}

void validate_invariance(const UncertainPlant& plant, const Interval& interval,
                         const SimOptions& sim, EllipsoidReport& report) {
    const Mat yinv = report.y.llt().solve(Mat::Identity(report.y.rows(), report.y.cols()));
    const auto steps = static_cast<Eigen::Index>(std::llround(sim.horizon / sim.dt));
    const Eigen::Index nd = plant.n_d(), ne = plant.n_e(), n = plant.n();

    std::mt19937_64 rng(sim.seed);
    std::uniform_real_distribution<double> unif(interval.alpha, interval.beta);
    std::normal_distribution<double> normal(0.0, 1.0);

    report.runs = sim.n_random_runs;
    report.violations = 0;
    report.worst_margin = std::numeric_limits<double>::infinity();

    for (int run = 0; run < sim.n_random_runs; ++run) {
        const double delta = unif(rng);
        Mat d(nd, steps + 1);
        for (Eigen::Index j = 0; j <= steps; ++j)
            for (Eigen::Index i = 0; i < nd; ++i) d(i, j) = normal(rng);
        double energy = d.leftCols(steps).squaredNorm() * sim.dt;
        d *= 1.0 / std::sqrt(energy);

        const Realization cl = closed_loop(plant, delta);
        Mat aug = Mat::Zero(n + nd, n + nd);
        aug.topLeftCorner(n, n) = cl.a;
        aug.topRightCorner(n, nd) = cl.b;
        const Mat phi = (aug * sim.dt).exp();
        const Mat ad = phi.topLeftCorner(n, n);
        const Mat bd = phi.topRightCorner(n, nd);
        const Mat ce = plant.c_e;

        const Mat q = ce.transpose() * yinv * ce;  // lhs = x' q x

        Vec x = Vec::Zero(n), xn(n), tmp(n);
        double acc = 0.0;  // integral of ||d||^2 up to the current sample
        bool violated = false;
        for (Eigen::Index k = 0; k <= steps; ++k) {
            tmp.noalias() = q * x;
            const double lhs = x.dot(tmp);
            const double tol = 1e-5 * (1.0 + acc);
            const double margin = acc + tol - lhs;
            report.worst_margin = std::min(report.worst_margin, margin);
            if (margin < 0) violated = true;
            if (k < steps) {
                acc += d.col(k).squaredNorm() * sim.dt;
                xn.noalias() = ad * x;
                xn.noalias() += bd * d.col(k);
                x.swap(xn);
            }
        }
        if (violated) ++report.violations;
    }
}

}  // namespace iqcd
