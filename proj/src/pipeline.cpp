#include "iqcd/pipeline.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include "iqcd/errors.hpp"

namespace iqcd {
namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_tag(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

Mat pn_m(const Mat& p) {
    const Eigen::Index m1 = p.rows(), m2 = p.cols();
    Mat m = Mat::Zero(m1 + m2, m1 + m2);
    m.topRightCorner(m1, m2) = p;
    m.bottomLeftCorner(m2, m1) = p.transpose();
    return m;
}

Realization psi_t_filter(int nu, const Interval& interval, Eigen::Index nz) {
    Realization basis = psi_basis(nu);
    Realization psi = diag_join(basis, basis);
    const Mat t = parametric_t(interval, nz);
    return Realization(psi.a, psi.b * t, psi.c, psi.d * t);
}

struct Discrete {
    Mat ad, bd;
};

Discrete discretize(const Realization& r, double dt) {
    const Eigen::Index n = r.n(), m = r.m();
    Mat aug = Mat::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = r.a;
    aug.topRightCorner(n, m) = r.b;
    const Mat phi = (aug * dt).exp();
    return Discrete{phi.topLeftCorner(n, n), phi.topRightCorner(n, m)};
}

Json spectrum_json(const Mat& a) {
    Json arr = Json::array();
    if (a.size() == 0) return arr;
    Eigen::EigenSolver<Mat> es(a);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        arr.push_back({es.eigenvalues()[i].real(), es.eigenvalues()[i].imag()});
    }
    return arr;
}

struct CheckRecorder {
    Json checks = Json::array();
    bool all_passed = true;
    std::string first_failure;

    void add(const std::string& name, int nu, double value, const std::string& requirement,
             bool passed) {
        checks.push_back({{"name", name},
                          {"nu", nu},
                          {"value", value},
                          {"requirement", requirement},
                          {"passed", passed}});
        if (!passed && all_passed) {
            all_passed = false;
            first_failure = name + " (nu=" + std::to_string(nu) + ")";
        }
        if (!passed) all_passed = false;
    }
};

// Worst normalized finite-horizon IQC margin over random (delta, z) pairs,
// for both terminal costs at once (convex-route K and ARE-route K).
std::pair<double, double> iqc_margin_runs(const UncertainPlant& plant, const Interval& interval,
                                          const Mat& p, const Mat& z_convex, const Mat& z_are,
                                          const SimOptions& sim, int runs, int nu) {
    const Eigen::Index nz = plant.n_z();
    Realization psi_t = psi_t_filter(nu, interval, nz);
    const Discrete disc = discretize(psi_t, sim.dt);
    const Mat m = pn_m(p);
    const auto steps = static_cast<Eigen::Index>(std::llround(sim.horizon / sim.dt));

    std::mt19937_64 rng(sim.seed + 1);
    std::uniform_real_distribution<double> unif(interval.alpha, interval.beta);
    std::normal_distribution<double> normal(0.0, 1.0);

    double worst_convex = std::numeric_limits<double>::infinity();
    double worst_are = std::numeric_limits<double>::infinity();
    const Eigen::Index nxi = psi_t.n();
    Vec xi(nxi), xin(nxi), u(2 * nz), y(psi_t.p()), tmp(psi_t.p());
    for (int run = 0; run < runs; ++run) {
        const double delta = unif(rng);
        Mat z(nz, steps + 1);
        for (Eigen::Index j = 0; j <= steps; ++j)
            for (Eigen::Index i = 0; i < nz; ++i) z(i, j) = normal(rng);
        z *= 1.0 / std::sqrt(z.leftCols(steps).squaredNorm() * sim.dt);

        xi.setZero();
        double acc = 0.0, min_convex = 0.0, min_are = 0.0;
        const double u_energy = (1.0 + delta * delta);  // z has unit energy
        for (Eigen::Index k = 0; k <= steps; ++k) {
            const double tc = nxi > 0 && z_convex.size() > 0 ? xi.dot(z_convex * xi) : 0.0;
            const double ta = nxi > 0 && z_are.size() > 0 ? xi.dot(z_are * xi) : 0.0;
            min_convex = std::min(min_convex, acc + tc);
            min_are = std::min(min_are, acc + ta);
            if (k == steps) break;
            u.head(nz) = z.col(k);
            u.tail(nz) = delta * z.col(k);
            y.noalias() = psi_t.d * u;
            if (nxi > 0) y.noalias() += psi_t.c * xi;
            tmp.noalias() = m * y;
            acc += y.dot(tmp) * sim.dt;
            if (nxi > 0) {
                xin.noalias() = disc.ad * xi;
                xin.noalias() += disc.bd * u;
                xi.swap(xin);
            }
        }
        const double scale = 1.0 + u_energy;
        worst_convex = std::min(worst_convex, min_convex / scale);
        worst_are = std::min(worst_are, min_are / scale);
    }
    return {worst_convex, worst_are};
}

// Worst normalized dissipation-inequality margin over random (delta, d) runs
// for the additive loop z = G w + d, w = delta z.
double dissipation_margin_runs(const UncertainPlant& plant, const Interval& interval,
                               const Mat& xcal, const Mat& p, const Mat& z_term, double gamma,
                               const SimOptions& sim, int runs, int nu) {
    const Eigen::Index nz = plant.n_z(), n = plant.n();
    UncertainPlant alt(plant.a, plant.b_w, Mat::Zero(n, nz), plant.c_z, plant.d_zw,
                       Mat::Identity(nz, nz), plant.c_e);
    Realization psi_t = psi_t_filter(nu, interval, nz);
    const Mat m = pn_m(p);
    Mat shifted = xcal;
    if (z_term.size() > 0) shifted.topLeftCorner(z_term.rows(), z_term.cols()) -= z_term;
    const auto steps = static_cast<Eigen::Index>(std::llround(sim.horizon / sim.dt));

    std::mt19937_64 rng(sim.seed + 2);
    std::uniform_real_distribution<double> unif(interval.alpha, interval.beta);
    std::normal_distribution<double> normal(0.0, 1.0);

    double worst = std::numeric_limits<double>::infinity();
    for (int run = 0; run < runs; ++run) {
        const double delta = unif(rng);
        Mat d(nz, steps + 1);
        for (Eigen::Index j = 0; j <= steps; ++j)
            for (Eigen::Index i = 0; i < nz; ++i) d(i, j) = normal(rng);
        d *= 1.0 / std::sqrt(d.leftCols(steps).squaredNorm() * sim.dt);

        const Realization cl = closed_loop(alt, delta);
        Realization cl_zw(cl.a, cl.b, cl.c.topRows(2 * nz), cl.d.topRows(2 * nz));
        const Realization comb = cascade(psi_t, cl_zw);  // state (xi, x), input d
        const Discrete disc = discretize(comb, sim.dt);
        const Mat cz = cl.c.topRows(nz);   // z = cz x + dz d
        const Mat dz = cl.d.topRows(nz);

        const Eigen::Index ns = comb.n();
        Vec s = Vec::Zero(ns), sn(ns), tmp(ns), zk(nz);
        double acc = 0.0, sig_energy = 0.0, min_margin = 0.0;
        for (Eigen::Index k = 0; k <= steps; ++k) {
            tmp.noalias() = shifted * s;
            min_margin = std::min(min_margin, -(s.dot(tmp) + acc));
            if (k == steps) break;
            zk.noalias() = cz * s.tail(n);
            zk.noalias() += dz * d.col(k);
            const double z2 = zk.squaredNorm(), d2 = d.col(k).squaredNorm();
            acc += ((1.0 / gamma) * z2 - gamma * d2) * sim.dt;
            sig_energy += (z2 + d2) * sim.dt;
            sn.noalias() = disc.ad * s;
            sn.noalias() += disc.bd * d.col(k);
            s.swap(sn);
        }
        worst = std::min(worst, min_margin / (1.0 + sig_energy));
    }
    return worst;
}

}  // namespace

AnalyzeResult run_analyze(const AnalysisConfig& cfg) {
    AnalyzeResult result;
    for (int nu : cfg.nu_list) {
        EllipsoidAnalysis ea = robust_ellipsoid_analysis(cfg.plant, cfg.interval, nu,
                                                         cfg.analysis);
        std::ostringstream csv;
        csv << "theta,e1,e2\n";
        const int count = cfg.analysis.boundary_count;
        for (int k = 0; k < count; ++k) {
            const double theta = 2.0 * M_PI * k / count;
            const Vec& pt = ea.report.boundary[static_cast<size_t>(k)];
            csv << fmt17(theta) << ',' << fmt17(pt[0]) << ',' << fmt17(pt[1]) << '\n';
        }
        result.csv["ellipse_nu" + std::to_string(nu) + ".csv"] = csv.str();
        result.bundles.push_back(std::move(ea.bundle));
    }
    result.certificates = certificates_to_json(result.bundles);
    return result;
}

VerifyResult run_verify(const AnalysisConfig& cfg, const Json& certificates) {
    std::vector<CertificateBundle> bundles = certificates_from_json(certificates);
    const std::vector<double> grid = default_frequency_grid();
    const Realization g = cfg.plant.loop_channel();
    const Eigen::Index nz = cfg.plant.n_z();
    CheckRecorder rec;
    const int margin_runs = std::min(100, cfg.sim.n_random_runs);

    for (const auto& b : bundles) {
        const int nu = b.nu;
        const Mat m = pn_m(b.p);
        Realization basis = psi_basis(nu);
        Realization psi = diag_join(basis, basis);
        Realization psi_t = psi_t_filter(nu, cfg.interval, nz);

        rec.add("y_positive_definite", nu, min_eig(b.y), "> 0", min_eig(b.y) > 0);
        const double fdi = fdi_sample_check(psi_t, m, g, grid);
        rec.add("fdi_grid_max_eig", nu, fdi, "< 0", fdi < 0);
        const double pos_convex = positivity_check(b.xcal, b.z_tilde.z);
        rec.add("positivity_convex_k", nu, pos_convex, "> 0", pos_convex > 0);

        Mat z_are;
        try {
            const Mat k_are = solve_nonsym_are(basis, basis, b.p);
            const double res = nonsym_are_residual(basis, basis, b.p, k_are);
            rec.add("nonsym_are_residual", nu, res, "<= 1e-8", res <= 1e-8);
            const StructuredTerminalCost tc = terminal_cost_from_k(k_are);
            z_are = tc.z;
            const double pos_are = positivity_check(b.xcal, tc.z);
            rec.add("positivity_are_k", nu, pos_are, "> 0", pos_are > 0);
            const CanonicalFactorization fac = canonical_factor(psi, m, tc.z);
            const double dev = verify_factorization(psi, m, fac, grid);
            rec.add("factorization_deviation", nu, dev, "<= 1e-8", dev <= 1e-8);
        } catch (const Error&) {
            rec.add("are_route", nu, std::numeric_limits<double>::quiet_NaN(),
                    "solvable", false);
        }

        auto [iqc_convex, iqc_are] =
            iqc_margin_runs(cfg.plant, cfg.interval, b.p, b.z_tilde.z, z_are, cfg.sim,
                            margin_runs, nu);
        rec.add("iqc_margin_convex_k", nu, iqc_convex, ">= -1e-5", iqc_convex >= -1e-5);
        if (z_are.size() > 0 || nu == 0)
            rec.add("iqc_margin_are_k", nu, iqc_are, ">= -1e-5", iqc_are >= -1e-5);

        double gamma = b.gamma.value_or(0.0);
        if (!(gamma > 0)) {
            try {
                gamma = gamma_bisection(b.xcal, m, psi_t, g, 1e-6, 1e12, 1e-3, 1e-9);
            } catch (const Error&) {
                rec.add("gamma_exists", nu, 0.0, "> 0", false);
                gamma = 0.0;
            }
        }
        if (gamma > 0) {
            const double diss = dissipation_margin_runs(cfg.plant, cfg.interval, b.xcal, b.p,
                                                        b.z_tilde.z, gamma, cfg.sim, margin_runs,
                                                        nu);
            rec.add("dissipation_margin", nu, diss, ">= -1e-5", diss >= -1e-5);
        }

        EllipsoidReport rep;
        rep.y = b.y;
        rep.trace = b.y.trace();
        validate_invariance(cfg.plant, cfg.interval, cfg.sim, rep);
        rec.add("containment_violations", nu, static_cast<double>(rep.violations), "== 0",
                rep.violations == 0);
        rec.add("containment_worst_margin", nu, rep.worst_margin, ">= 0",
                rep.worst_margin >= 0);
    }

    VerifyResult out;
    out.passed = rec.all_passed;
    out.report = {{"passed", rec.all_passed},
                  {"failing_check", rec.all_passed ? Json(nullptr) : Json(rec.first_failure)},
                  {"n_random_runs", cfg.sim.n_random_runs},
                  {"margin_runs", margin_runs},
                  {"checks", rec.checks}};
    return out;
}

SimulateResult run_simulate(const AnalysisConfig& cfg, double delta, double direction_angle,
                            std::optional<double> horizon_opt) {
    if (delta < cfg.interval.alpha || delta > cfg.interval.beta)
        throw ConfigError("delta " + std::to_string(delta) + " lies outside [" +
                          std::to_string(cfg.interval.alpha) + ", " +
                          std::to_string(cfg.interval.beta) + "]");
    if (cfg.plant.n_e() != 2) throw ConfigError("simulate requires a 2-dimensional output e");
    const double horizon = horizon_opt.value_or(cfg.sim.horizon);
    if (horizon <= 0) throw ConfigError("horizon must be positive");

    Vec dir(2);
    dir << std::cos(direction_angle), std::sin(direction_angle);
    const WorstCaseInput wc =
        worst_case_disturbance(cfg.plant, delta, dir, horizon, cfg.sim.dt);
    const Realization cl = closed_loop(cfg.plant, delta);
    const Trajectory traj = simulate_zoh(cl, wc.d, cfg.sim.dt);

    const Eigen::Index nz = cfg.plant.n_z(), nw = cfg.plant.n_w(), ne = cfg.plant.n_e(),
                       nd = cfg.plant.n_d();
    auto col_names = [](const std::string& base, Eigen::Index dim) {
        std::vector<std::string> names;
        if (dim == 1) {
            names.push_back(base);
        } else {
            for (Eigen::Index i = 1; i <= dim; ++i) names.push_back(base + std::to_string(i));
        }
        return names;
    };
    std::ostringstream csv;
    csv << "t";
    for (const auto& c : col_names("d", nd)) csv << ',' << c;
    for (const auto& c : col_names("z", nz)) csv << ',' << c;
    for (const auto& c : col_names("w", nw)) csv << ',' << c;
    csv << ",e1,e2,energy\n";

    const auto& y = traj.at("y");
    const auto& u = traj.at("u");
    double energy = 0.0;
    Vec e_final = Vec::Zero(ne);
    for (size_t k = 0; k < y.size(); ++k) {
        const double t = static_cast<double>(k) * cfg.sim.dt;
        csv << fmt17(t);
        for (Eigen::Index i = 0; i < nd; ++i) csv << ',' << fmt17(u[k][i]);
        for (Eigen::Index i = 0; i < nz; ++i) csv << ',' << fmt17(y[k][i]);
        for (Eigen::Index i = 0; i < nw; ++i) csv << ',' << fmt17(y[k][nz + i]);
        for (Eigen::Index i = 0; i < ne; ++i) csv << ',' << fmt17(y[k][nz + nw + i]);
        csv << ',' << fmt17(energy) << '\n';
        if (k + 1 < y.size()) energy += u[k].squaredNorm() * cfg.sim.dt;
        e_final = y[k].tail(ne);
    }

    SimulateResult out;
    out.tag = std::string("delta") + fmt_tag(delta) + "_angle" + fmt_tag(direction_angle);
    out.csv = csv.str();
    out.meta = {{"delta", delta},
                {"direction_angle", direction_angle},
                {"horizon", horizon},
                {"e_star", {wc.e_star[0], wc.e_star[1]}},
                {"e_final", {e_final[0], e_final[1]}},
                {"input_energy", energy}};
    return out;
}

Json run_factorize(const AnalysisConfig& cfg, const std::optional<Json>& certificates) {
    std::vector<CertificateBundle> bundles;
    if (certificates) {
        bundles = certificates_from_json(*certificates);
    } else {
        bundles = run_analyze(cfg).bundles;
    }
    const std::vector<double> grid = default_frequency_grid();
    Json arr = Json::array();
    for (const auto& b : bundles) {
        Realization basis = psi_basis(b.nu);
        Realization psi = diag_join(basis, basis);
        const Mat m = pn_m(b.p);
        const Mat k = solve_nonsym_are(basis, basis, b.p);
        const double res = nonsym_are_residual(basis, basis, b.p, k);
        const StructuredTerminalCost tc = terminal_cost_from_k(k);
        const CanonicalFactorization fac = canonical_factor(psi, m, tc.z);
        const double dev = verify_factorization(psi, m, fac, grid);

        Json spec1 = Json::array(), spec2 = Json::array();
        if (k.size() > 0) {
            const Mat r = basis.d.transpose() * b.p * basis.d;
            Eigen::FullPivLU<Mat> rlu(r);
            const Mat s1 = basis.c.transpose() * b.p * basis.d;
            const Mat s2 = basis.d.transpose() * b.p * basis.c;
            const Mat loop1 =
                basis.a.transpose() - (k * basis.b + s1) * rlu.solve(basis.b.transpose());
            const Mat loop2 = basis.a - basis.b * rlu.solve(basis.b.transpose() * k + s2);
            spec1 = spectrum_json(loop1);
            spec2 = spectrum_json(loop2);
        }
        arr.push_back({{"nu", b.nu},
                       {"k", mat_to_json(k)},
                       {"z_tilde", mat_to_json(tc.z)},
                       {"residual", res},
                       {"spectrum_loop1", spec1},
                       {"spectrum_loop2", spec2},
                       {"m_tilde", mat_to_json(fac.m_tilde)},
                       {"c_tilde", mat_to_json(fac.psi_tilde.c)},
                       {"grid_deviation", dev}});
    }
    return Json{{"factorizations", arr}};
}

}  // namespace iqcd
