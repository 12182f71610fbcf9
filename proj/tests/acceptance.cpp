// Acceptance run: one pass/fail line per criterion, exit 0 iff all pass.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "example_data.hpp"
#include "iqcd/analysis.hpp"
#include "iqcd/lmi.hpp"
#include "iqcd/riccati.hpp"
#include "iqcd/sim.hpp"

using namespace iqcd;

namespace {

int g_failures = 0;

void report(int idx, const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] %2d. %-34s %s\n", ok ? "PASS" : "FAIL", idx, name.c_str(), detail.c_str());
    if (!ok) ++g_failures;
}

Mat pn_m(const Mat& p) {
    Mat m = Mat::Zero(2 * p.rows(), 2 * p.cols());
    m.topRightCorner(p.rows(), p.cols()) = p;
    m.bottomLeftCorner(p.cols(), p.rows()) = p.transpose();
    return m;
}

Realization joined_psi(int nu) { return diag_join(psi_basis(nu), psi_basis(nu)); }

Realization scaled_filter(int nu, const Mat& gain) {
    Realization psi = joined_psi(nu);
    return Realization(psi.a, psi.b * gain, psi.c, psi.d * gain);
}

Mat random_mat(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

int definiteness(const Mat& m) {
    const double tol = 1e-9 * (1.0 + m.cwiseAbs().maxCoeff());
    if (min_eig(m) > tol) return 1;
    if (max_eig(m) < -tol) return -1;
    return 0;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), f, a, b, c, d);
    return buf;
}

}  // namespace

int main() {
    const UncertainPlant plant = example_plant();
    const Interval interval = example_interval();
    const Mat t_gain = parametric_t(interval, 1);
    Mat j_gain(2, 1);
    j_gain << 1.0, 1.0;
    const std::vector<double> grid = default_frequency_grid();

    // 1. feasibility for nu = 0..3 within 10 s each
    std::map<int, EllipsoidAnalysis> sols;
    bool feas_ok = true;
    double worst_time = 0.0;
    std::string feas_note;
    for (int nu = 0; nu <= 3 && feas_ok; ++nu) {
        const auto start = std::chrono::steady_clock::now();
        try {
            sols.emplace(nu, robust_ellipsoid_analysis(plant, interval, nu));
        } catch (const Error& e) {
            feas_ok = false;
            feas_note = std::string("nu=") + std::to_string(nu) + ": " + e.what();
        }
        const double secs = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - start).count();
        worst_time = std::max(worst_time, secs);
        if (secs > 10.0) {
            feas_ok = false;
            feas_note = fmt("nu solve took %.1f s", secs);
        }
    }
    if (feas_ok) feas_note = fmt("all nu feasible, slowest solve %.2f s", worst_time);
    report(1, "example feasibility nu=0..3", feas_ok, feas_note);
    if (!feas_ok) {
        std::printf("aborting: remaining criteria need the solved example\n");
        return 1;
    }

    // 2. monotone traces with a visible nu=1 improvement
    {
        const double t0 = sols.at(0).report.trace, t1 = sols.at(1).report.trace,
                     t2 = sols.at(2).report.trace, t3 = sols.at(3).report.trace;
        const bool ok = t0 >= t1 - 1e-6 && t1 >= t2 - 1e-6 && t2 >= t3 - 1e-6 && t1 < 0.99 * t0;
        report(2, "monotone benefit of dynamics", ok,
               fmt("traces %.3f >= %.3f >= %.3f >= %.3f", t0, t1, t2, t3));
    }

    // 3. invariance soundness: 1000 randomized runs against the tight Y
    {
        EllipsoidReport rep = sols.at(3).report;
        SimOptions sim;  // 1000 runs, horizon 30, dt 1e-3, seed 42
        validate_invariance(plant, interval, sim, rep);
        report(3, "invariance soundness (1000 runs)", rep.violations == 0,
               fmt("%g violations, worst margin %.3g", rep.violations, rep.worst_margin));
    }

    // 4. tightness at nu=3: five worst-case trajectories at delta = -0.6
    {
        const Mat yinv = sols.at(3).report.y.inverse();
        const Realization cl = closed_loop(plant, interval.alpha);
        double best = 0.0;
        for (int k = 0; k < 5; ++k) {
            const double angle = 2.0 * M_PI * k / 5.0;
            Vec dir(2);
            dir << std::cos(angle), std::sin(angle);
            const WorstCaseInput wc =
                worst_case_disturbance(plant, interval.alpha, dir, 30.0, 1e-3);
            const Trajectory traj = simulate_zoh(cl, wc.d, wc.dt);
            for (const Vec& y : traj.at("y")) {
                const Vec e = y.tail(2);
                best = std::max(best, e.dot(yinv * e));
            }
        }
        report(4, "tightness at nu=3 (5 trajectories)", best >= 0.8,
               fmt("max e'Y3^-1 e = %.4f (>= 0.8)", best));
    }

    // 5. ARE correctness: scalar closed form plus every example solve
    {
        bool ok = true;
        std::string note;
        Mat a1(1, 1), one(1, 1);
        a1 << -1.0;
        one << 1.0;
        const Realization scalar(a1, one, one, one);
        const Mat z0 = solve_sym_are(scalar, one);
        if (std::abs(z0(0, 0)) > 1e-10 || sym_are_residual(scalar, one, z0) > 1e-8) ok = false;
        double worst_res = sym_are_residual(scalar, one, z0);
        for (int nu = 1; nu <= 3 && ok; ++nu) {
            const Realization basis = psi_basis(nu);
            const Mat& p = sols.at(nu).bundle.p;
            const Mat k = solve_nonsym_are(basis, basis, p);
            worst_res = std::max(worst_res, nonsym_are_residual(basis, basis, p, k));
            if (worst_res > 1e-8) ok = false;
            const Mat r = basis.d.transpose() * p * basis.d;
            const Mat s2 = basis.d.transpose() * p * basis.c;
            const Mat loop2 =
                basis.a - basis.b * r.inverse() * (basis.b.transpose() * k + s2);
            if (!is_hurwitz(loop2)) ok = false;
            const Mat s1 = basis.c.transpose() * p * basis.d;
            const Mat loop1 = basis.a.transpose() -
                              (k * basis.b + s1) * r.inverse() * basis.b.transpose();
            if (!is_hurwitz(loop1)) ok = false;
        }
        report(5, "ARE correctness", ok, fmt("worst residual %.2e", worst_res));
    }

    // 6. factorization identity on the frequency grid for all solved instances
    {
        double worst_dev = 0.0;
        for (int nu = 0; nu <= 3; ++nu) {
            const Mat& p = sols.at(nu).bundle.p;
            const Realization basis = psi_basis(nu);
            const Mat z_are = terminal_cost_from_k(solve_nonsym_are(basis, basis, p)).z;
            const Mat m = pn_m(p);
            const CanonicalFactorization fac = canonical_factor(joined_psi(nu), m, z_are);
            worst_dev = std::max(worst_dev, verify_factorization(joined_psi(nu), m, fac, grid));
        }
        report(6, "canonical factorization identity", worst_dev <= 1e-8,
               fmt("worst grid deviation %.2e", worst_dev));
    }

    // 7. coupling positivity for both terminal-cost routes
    {
        bool ok = true;
        double worst = 1e300;
        for (int nu = 0; nu <= 3; ++nu) {
            const CertificateBundle& b = sols.at(nu).bundle;
            worst = std::min(worst, positivity_check(b.xcal, b.z_tilde.z));
            const Realization basis = psi_basis(nu);
            const Mat k_are = solve_nonsym_are(basis, basis, b.p);
            worst = std::min(worst, positivity_check(b.xcal, terminal_cost_from_k(k_are).z));
            if (worst <= 0.0) ok = false;
        }
        report(7, "coupling positivity (both K)", ok, fmt("min eigenvalue %.3e", worst));
    }

    // 8. finite-horizon IQC margins on 100 random (delta, z) pairs
    {
        const CertificateBundle& b = sols.at(3).bundle;
        const Realization psi_t = scaled_filter(3, t_gain);
        const Mat m = pn_m(b.p);
        const double dt = 1e-3;
        const Eigen::Index steps = 10000;
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> unif(interval.alpha, interval.beta);
        std::normal_distribution<double> normal(0.0, 1.0);
        double worst = 1e300;
        for (int run = 0; run < 100; ++run) {
            const double delta = unif(rng);
            std::vector<Vec> u(static_cast<size_t>(steps + 1), Vec(2));
            double energy = 0.0;
            for (auto& v : u) {
                v[0] = normal(rng);
                v[1] = 0.0;
            }
            for (Eigen::Index k = 0; k < steps; ++k) energy += u[static_cast<size_t>(k)][0] *
                                                               u[static_cast<size_t>(k)][0] * dt;
            for (auto& v : u) {
                v[0] /= std::sqrt(energy);
                v[1] = delta * v[0];
            }
            const Trajectory resp = filter_response(psi_t, u, dt);
            const double margin = check_finite_horizon_iqc(m, b.z_tilde.z, resp.at("y"),
                                                           resp.at("xi"), dt);
            worst = std::min(worst, margin / (2.0 + delta * delta));
        }
        report(8, "finite-horizon IQC margins", worst >= -1e-5,
               fmt("worst normalized margin %.3e", worst));
    }

    // 9. soft-IQC identity on the grid for 10 random delta and all nu
    {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> unif(interval.alpha, interval.beta);
        double worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            const double delta = unif(rng);
            const double weight =
                (1.0 - delta / interval.beta) * (delta - interval.alpha);
            for (int nu = 0; nu <= 3; ++nu) {
                const Mat m = pn_m(sols.at(nu).bundle.p);
                const Realization psi_t = scaled_filter(nu, t_gain);
                const Realization psi_j = scaled_filter(nu, j_gain);
                CMat v(2, 1);
                v << 1.0, delta;
                for (double omega : {0.0, 0.01, 0.3, 1.0, 7.0, 100.0}) {
                    const CMat ft = freq_response(psi_t, omega) * v;
                    const CMat fj = freq_response(psi_j, omega).col(0);
                    const double lhs = (ft.adjoint() * m * ft)(0, 0).real();
                    const double rhs = weight * (fj.adjoint() * m * fj)(0, 0).real();
                    const double scale = 1.0 + std::abs(lhs) + std::abs(rhs);
                    worst = std::max(worst, std::abs(lhs - rhs) / scale);
                }
            }
        }
        report(9, "soft-IQC weight identity", worst <= 1e-8, fmt("worst residual %.2e", worst));
    }

    // 10. congruence preserves KYP definiteness verdicts on 50 random instances
    {
        std::mt19937_64 rng(23);
        int trials = 0, agreed = 0;
        while (trials < 50) {
            Mat t = random_mat(rng, 3, 3);
            if (std::abs(t.determinant()) < 1e-2) continue;
            ++trials;
            Realization r(random_mat(rng, 3, 3), random_mat(rng, 3, 2), random_mat(rng, 2, 3),
                          random_mat(rng, 2, 2));
            Mat x = random_mat(rng, 3, 3);
            x = 0.5 * (x + x.transpose()).eval();
            Mat mm = random_mat(rng, 2, 2);
            mm = 0.5 * (mm + mm.transpose()).eval();
            const Mat k1 = kyp_form_numeric(x, mm, r);
            const Mat tinv = t.inverse();
            Realization rt(tinv * r.a * t, tinv * r.b, r.c * t, r.d);
            const Mat k2 = kyp_form_numeric(t.transpose() * x * t, mm, rt);
            if (definiteness(k1) == definiteness(k2)) ++agreed;
        }
        report(10, "KYP congruence verdicts", agreed == 50, fmt("%g/50 agree", agreed));
    }

    // 11. SDP battery to 1e-8 gap, deterministic across runs
    {
        bool ok = true;
        SdpProblem trace_prob;
        {
            const int yb = trace_prob.layout.add_symmetric("Y", 2);
            AffineSym expr = sym_block_expr(trace_prob.layout, yb);
            Mat target(2, 2);
            target << 1.0, 0.0, 0.0, 2.0;
            expr.constant -= target;
            trace_prob.constraints.push_back(LmiConstraint{"cone", expr, Sense::PosSemidef, 0.0});
            Vec probe = Vec::Zero(trace_prob.layout.size());
            trace_prob.layout.set_value(yb, Mat::Identity(2, 2), probe);
            trace_prob.objective = probe;
        }
        SdpProblem eigen_prob;
        {
            eigen_prob.layout.add_scalar("x");
            AffineSym expr(2);
            expr.constant << 0.0, 1.0, 1.0, 0.0;
            expr.add_coeff(0, Mat::Identity(2, 2));
            eigen_prob.constraints.push_back(LmiConstraint{"cone", expr, Sense::PosSemidef, 0.0});
            eigen_prob.objective = Vec::Ones(1);
        }
        SdpProblem lyap_prob;
        {
            lyap_prob.layout.add_scalar("p");
            AffineSym expr(1);
            expr.constant << 0.0;
            expr.add_coeff(0, Mat::Constant(1, 1, -2.0));
            lyap_prob.constraints.push_back(LmiConstraint{"lyap", expr, Sense::NegSemidef, 1e-6});
            lyap_prob.objective = Vec::Zero(1);
        }
        const SdpSolution s1 = solve(trace_prob), s2 = solve(eigen_prob), s3 = solve(lyap_prob);
        if (s1.status != SdpStatus::Optimal || std::abs(s1.objective - 3.0) > 1e-6) ok = false;
        if (s2.status != SdpStatus::Optimal || std::abs(s2.x[0] - 1.0) > 1e-6) ok = false;
        if (s3.status != SdpStatus::Feasible && s3.status != SdpStatus::Optimal) ok = false;
        if (s1.duality_gap > 1e-8 || s2.duality_gap > 1e-8) ok = false;
        if ((solve(trace_prob).x - s1.x).norm() != 0.0 ||
            (solve(eigen_prob).x - s2.x).norm() != 0.0 ||
            (solve(lyap_prob).x - s3.x).norm() != 0.0)
            ok = false;
        report(11, "SDP battery, deterministic", ok,
               fmt("gaps %.1e / %.1e", s1.duality_gap, s2.duality_gap));
    }

    if (g_failures == 0) {
        std::printf("acceptance: all 11 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criteria failed\n", g_failures);
    return 1;
}
