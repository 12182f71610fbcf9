#include "iqcd/sdp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <cstdlib>
#include <iostream>
#include <vector>

namespace iqcd {

const char* to_string(SdpStatus status) {
    switch (status) {
        case SdpStatus::Optimal: return "optimal";
        case SdpStatus::Feasible: return "feasible";
        case SdpStatus::Infeasible: return "infeasible";
        case SdpStatus::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
}

double min_eig(const Mat& sym) {
    if (sym.rows() != sym.cols()) throw DimensionError("min_eig: matrix must be square");
    if (sym.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("min_eig: eigen iteration failed");
    return es.eigenvalues().minCoeff();
}

double max_eig(const Mat& sym) { return -min_eig(Mat(-sym)); }

namespace {

// One normalized block G_j(x) = f0 + sum_i x_i * coeffs[i].second >= 0.
struct Block {
    Mat f0;
    std::vector<std::pair<int, Mat>> coeffs;
    Eigen::Index dim() const { return f0.rows(); }

    Mat eval(const Vec& x) const {
        Mat s = f0;
        for (const auto& [i, f] : coeffs) s += x[i] * f;
        return s;
    }
};

// Largest step alpha with S + alpha*dS > 0, capped at 1/tau.
double max_step(const Eigen::LLT<Mat>& llt, const Mat& ds) {
    Mat l = llt.matrixL();
    Mat m = l.triangularView<Eigen::Lower>().solve(ds);
    m = l.triangularView<Eigen::Lower>().solve(Mat(m.transpose()));
    double lam = min_eig(0.5 * (m + m.transpose()));
    if (lam >= 0.0) return std::numeric_limits<double>::infinity();
    return -1.0 / lam;
}

struct IpmResult {
    Vec x;
    bool converged = false;
    int iterations = 0;
    double gap = 0.0;
    std::string message;
};

// Primal-dual interior-point iteration with Nesterov-Todd scaling on the
// slack cone; x0 must make every block strictly positive definite. The dual
// iterate starts on the central path (Z = S(x0)^{-1}) so that wildly scaled
// blocks contribute equally to the initial gap. An objective value at or
// below stop_below ends the run early (used by the phase-1 margin search).
IpmResult run_ipm(const std::vector<Block>& blocks, const Vec& c, const Vec& x0,
                  const SdpOptions& opts,
                  double stop_below = -std::numeric_limits<double>::infinity()) {
    const Eigen::Index n = c.size();
    IpmResult res;
    res.x = x0;

    Eigen::Index n_tot = 0;
    for (const auto& b : blocks) n_tot += b.dim();

    std::vector<Mat> z(blocks.size());
    for (size_t j = 0; j < blocks.size(); ++j) {
        Eigen::LLT<Mat> llt(blocks[j].eval(x0));
        if (llt.info() != Eigen::Success) {
            res.message = "initial point is not strictly feasible";
            return res;
        }
        z[j] = llt.solve(Mat::Identity(blocks[j].dim(), blocks[j].dim()));
        z[j] = 0.5 * (z[j] + z[j].transpose()).eval();
    }

    const double c_scale = 1.0 + c.cwiseAbs().maxCoeff();
    const double tau = 0.99;

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        res.iterations = iter;

        std::vector<Mat> s(blocks.size());
        std::vector<Eigen::LLT<Mat>> s_llt(blocks.size());
        double gap = 0.0;
        for (size_t j = 0; j < blocks.size(); ++j) {
            s[j] = blocks[j].eval(res.x);
            s_llt[j].compute(s[j]);
            if (s_llt[j].info() != Eigen::Success) {
                res.message = "slack block lost positive definiteness";
                return res;
            }
            gap += s[j].cwiseProduct(z[j]).sum();
        }
        const double mu = gap / static_cast<double>(n_tot);
        res.gap = gap;

        Vec r_dual = c;
        for (size_t j = 0; j < blocks.size(); ++j)
            for (const auto& [i, f] : blocks[j].coeffs) r_dual[i] -= f.cwiseProduct(z[j]).sum();

        const double p_obj = c.dot(res.x);
        if (p_obj <= stop_below) {
            res.converged = true;
            res.message = "early stop at target objective";
            return res;
        }
        if (gap <= opts.tol_gap * (1.0 + std::abs(p_obj)) &&
            r_dual.cwiseAbs().maxCoeff() <= std::sqrt(opts.tol_gap) * c_scale) {
            res.converged = true;
            return res;
        }

        // NT scaling W_j with W S W = Z, plus the Schur complement H.
        std::vector<Mat> w(blocks.size());
        std::vector<Mat> s_inv(blocks.size());
        Mat h = Mat::Zero(n, n);
        Vec base_rhs = -c;  // rhs(mu_t) = base_rhs + mu_t * sum <F_i, S^-1>
        Vec sinv_proj = Vec::Zero(n);
        for (size_t j = 0; j < blocks.size(); ++j) {
            const Eigen::Index d = blocks[j].dim();
            Mat l = s_llt[j].matrixL();
            Mat t = l.transpose() * z[j] * l;
            Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (t + t.transpose()));
            if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
                res.message = "NT scaling breakdown";
                return res;
            }
            Mat linv_t = l.triangularView<Eigen::Lower>().solve(Mat::Identity(d, d));
            Mat root = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
                       es.eigenvectors().transpose();
            w[j] = linv_t.transpose() * root * linv_t;
            s_inv[j] = linv_t.transpose() * linv_t;

            const auto& coeffs = blocks[j].coeffs;
            std::vector<Mat> wfw(coeffs.size());
            for (size_t a = 0; a < coeffs.size(); ++a) {
                wfw[a] = w[j] * coeffs[a].second * w[j];
                sinv_proj[coeffs[a].first] += coeffs[a].second.cwiseProduct(s_inv[j]).sum();
            }
            for (size_t a = 0; a < coeffs.size(); ++a) {
                for (size_t bq = a; bq < coeffs.size(); ++bq) {
                    const double v = wfw[a].cwiseProduct(coeffs[bq].second).sum();
                    h(coeffs[a].first, coeffs[bq].first) += v;
                    if (a != bq) h(coeffs[bq].first, coeffs[a].first) += v;
                }
            }
        }
        h.diagonal().array() += 1e-13 * (1.0 + h.trace() / static_cast<double>(n));

        Eigen::LDLT<Mat> h_ldlt(h);
        if (h_ldlt.info() != Eigen::Success) {
            res.message = "Schur complement factorization failed";
            return res;
        }

        auto direction = [&](double mu_t, Vec& dx, std::vector<Mat>& dz,
                             std::vector<Mat>& ds) {
            const Vec rhs = base_rhs + mu_t * sinv_proj;
            dx = h_ldlt.solve(rhs);
            // Two rounds of iterative refinement; the Schur complement gets
            // severely ill-conditioned near the optimum and the raw solve
            // loses enough accuracy to wreck the dual update.
            for (int r = 0; r < 2; ++r) dx += h_ldlt.solve(rhs - h * dx);
            ds.assign(blocks.size(), Mat());
            dz.assign(blocks.size(), Mat());
            for (size_t j = 0; j < blocks.size(); ++j) {
                ds[j] = Mat::Zero(blocks[j].dim(), blocks[j].dim());
                for (const auto& [i, f] : blocks[j].coeffs) ds[j] += dx[i] * f;
                dz[j] = mu_t * s_inv[j] - z[j] - w[j] * ds[j] * w[j];
                dz[j] = 0.5 * (dz[j] + dz[j].transpose()).eval();
            }
        };

        auto step_lengths = [&](const std::vector<Mat>& ds, const std::vector<Mat>& dz,
                                double& ap, double& ad) {
            ap = 1.0;
            ad = 1.0;
            for (size_t j = 0; j < blocks.size(); ++j) {
                ap = std::min(ap, tau * max_step(s_llt[j], ds[j]));
                Eigen::LLT<Mat> zllt(z[j]);
                ad = std::min(ad, tau * max_step(zllt, dz[j]));
            }
        };

        // Mehrotra-style predictor to pick the centering weight.
        Vec dx;
        std::vector<Mat> dz, ds;
        direction(0.0, dx, dz, ds);
        double ap, ad;
        step_lengths(ds, dz, ap, ad);
        double gap_aff = 0.0;
        for (size_t j = 0; j < blocks.size(); ++j)
            gap_aff += (s[j] + ap * ds[j]).cwiseProduct(z[j] + ad * dz[j]).sum();
        double sigma = std::pow(std::max(gap_aff, 0.0) / gap, 3.0);
        sigma = std::clamp(sigma, 1e-4, 0.99);

        direction(sigma * mu, dx, dz, ds);
        step_lengths(ds, dz, ap, ad);
        // A common step keeps duality-gap progress and dual-feasibility
        // progress coupled; separate steps let the gap collapse while the
        // dual iterate is still infeasible, which is unrecoverable.
        const double alpha = std::min(ap, ad);
        if (alpha < 1e-12) {
            res.message = "step length collapsed";
            return res;
        }
        res.x += alpha * dx;
        for (size_t j = 0; j < blocks.size(); ++j) z[j] += alpha * dz[j];
        if (std::getenv("IQCD_SDP_TRACE")) {
            std::cerr << "it=" << iter << " gap=" << gap << " rd=" << r_dual.cwiseAbs().maxCoeff()
                      << " obj=" << p_obj << " sigma=" << sigma << " ap=" << ap << " ad=" << ad
                      << "\n";
        }
    }
    res.iterations = opts.max_iter;
    res.message = "iteration limit reached";
    return res;
}

std::vector<Block> normalize(const SdpProblem& problem) {
    std::vector<Block> blocks;
    for (const auto& con : problem.constraints) {
        if (con.expr.dim == 0) continue;  // size-0 constraints are satisfied by convention
        Block b;
        const double sign = con.sense == Sense::PosSemidef ? 1.0 : -1.0;
        b.f0 = sign * con.expr.constant;
        b.f0.diagonal().array() -= con.margin;
        for (const auto& [i, coeff] : con.expr.coeffs) b.coeffs.emplace_back(i, sign * coeff);
        blocks.push_back(std::move(b));
    }
    return blocks;
}

void append_boxes(std::vector<Block>& blocks, Eigen::Index n, double bound) {
    for (Eigen::Index i = 0; i < n; ++i) {
        Block lo, hi;
        lo.f0 = Mat::Constant(1, 1, bound);
        lo.coeffs.emplace_back(static_cast<int>(i), Mat::Constant(1, 1, 1.0));
        hi.f0 = Mat::Constant(1, 1, bound);
        hi.coeffs.emplace_back(static_cast<int>(i), Mat::Constant(1, 1, -1.0));
        blocks.push_back(std::move(lo));
        blocks.push_back(std::move(hi));
    }
}

}  // namespace

SdpSolution solve(const SdpProblem& problem, const SdpOptions& opts) {
    const Eigen::Index n = problem.layout.size();
    for (const auto& con : problem.constraints) {
        for (const auto& [i, coeff] : con.expr.coeffs) {
            if (i < 0 || i >= n) throw DimensionError("solve: constraint references unknown variable");
            (void)coeff;
        }
        if (!std::isfinite(con.margin) || con.margin < 0.0) {
            throw ConfigError("solve: constraint margin must be finite and nonnegative");
        }
    }
    Vec c = problem.objective.size() == n ? problem.objective : Vec(Vec::Zero(n));
    const bool feasibility_only = c.isZero(0.0);

    std::vector<Block> core = normalize(problem);

    SdpSolution sol;
    sol.x = Vec::Zero(n);
    if (core.empty()) {
        sol.status = feasibility_only ? SdpStatus::Feasible : SdpStatus::Optimal;
        sol.message = "no constraints";
        return sol;
    }

    // Phase 1: maximize a uniform slack margin t from the origin.
    const double t_cap = 1e3;
    std::vector<Block> ph1 = core;
    double t0 = 1.0;
    for (auto& b : ph1) {
        t0 = std::max(t0, -min_eig(b.f0) + 1.0);
        Mat eye = Mat::Identity(b.dim(), b.dim());
        b.coeffs.emplace_back(static_cast<int>(n), eye);
    }
    {
        Block floor;  // t >= -t_cap
        floor.f0 = Mat::Constant(1, 1, t_cap);
        floor.coeffs.emplace_back(static_cast<int>(n), Mat::Constant(1, 1, 1.0));
        ph1.push_back(std::move(floor));
    }
    append_boxes(ph1, n, opts.var_bound);

    Vec c1 = Vec::Zero(n + 1);
    c1[n] = 1.0;
    Vec x1 = Vec::Zero(n + 1);
    x1[n] = t0;
    IpmResult r1 = run_ipm(ph1, c1, x1, opts, -1.0);
    sol.iterations = r1.iterations;
    const double t_star = r1.x[n];

    if (!r1.converged && t_star >= 0.0) {
        sol.status = SdpStatus::NumericalFailure;
        sol.message = "phase-1 failure: " + r1.message;
        return sol;
    }
    if (t_star > opts.tol_feas) {
        sol.status = SdpStatus::Infeasible;
        sol.x = r1.x.head(n);
        std::ostringstream os;
        os << "phase-1 margin " << -t_star << " (best uniform slack is negative)";
        sol.message = os.str();
        sol.objective = c.dot(sol.x);
        sol.worst_residual = -t_star;
        return sol;
    }

    Vec x_feas = r1.x.head(n);
    if (feasibility_only) {
        sol.x = x_feas;
        sol.status = SdpStatus::Feasible;
        sol.duality_gap = r1.gap;
        std::ostringstream os;
        os << "feasible with uniform margin " << -t_star;
        sol.message = os.str();
    } else {
        // Phase 2: minimize the objective from the strictly feasible point.
        std::vector<Block> ph2 = core;
        append_boxes(ph2, n, opts.var_bound);
        IpmResult r2 = run_ipm(ph2, c, x_feas, opts);
        sol.iterations += r2.iterations;
        sol.x = r2.x;
        sol.duality_gap = r2.gap;
        if (r2.converged) {
            sol.status = SdpStatus::Optimal;
            sol.message = "optimal";
        } else {
            // Near the optimum the dual certificate can be lost to roundoff
            // while the primal iterate is already converged; the iterates
            // stay strictly feasible by construction, so report the best
            // point as feasible when the gap estimate is small.
            double worst = std::numeric_limits<double>::infinity();
            for (const auto& b : core) worst = std::min(worst, min_eig(b.eval(sol.x)));
            const double obj = c.dot(sol.x);
            if (worst >= -opts.tol_feas &&
                r2.gap <= std::sqrt(opts.tol_gap) * (1.0 + std::abs(obj))) {
                sol.status = SdpStatus::Feasible;
                sol.message = "near-optimal (dual certificate stalled: " + r2.message + ")";
            } else {
                sol.status = SdpStatus::NumericalFailure;
                sol.message = "phase-2 failure: " + r2.message;
                sol.objective = obj;
                return sol;
            }
        }
    }

    sol.objective = c.dot(sol.x);
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& b : core) worst = std::min(worst, min_eig(b.eval(sol.x)));
    sol.worst_residual = worst;
    if (worst < -opts.tol_feas) {
        sol.status = SdpStatus::NumericalFailure;
        sol.message += "; residual check failed";
    }
    return sol;
}

}  // namespace iqcd
