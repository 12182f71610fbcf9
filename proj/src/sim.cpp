#include "iqcd/sim.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>

#include "iqcd/errors.hpp"

namespace iqcd {

Eigen::Index Trajectory::samples() const {
    if (channels.empty()) return 0;
    return static_cast<Eigen::Index>(channels.begin()->second.size());
}

const std::vector<Vec>& Trajectory::at(const std::string& name) const {
    auto it = channels.find(name);
    if (it == channels.end()) throw Error("unknown trajectory channel: " + name);
    return it->second;
}

void Trajectory::add(const std::string& name, std::vector<Vec> s) {
    if (!channels.empty() && static_cast<Eigen::Index>(s.size()) != samples())
        throw DimensionError("channel " + name + " sample count mismatch");
    channels[name] = std::move(s);
}

double EnergyAccumulator::add_norm_sq(const Vec& v) {
    total_ += v.squaredNorm() * dt_;
    return total_;
}

double EnergyAccumulator::add_form(const Mat& m, const Vec& v) {
    total_ += v.dot(m * v) * dt_;
    return total_;
}

Realization closed_loop(const UncertainPlant& plant, double delta) {
    const Eigen::Index nz = plant.n_z();
    const Mat loop = Mat::Identity(nz, nz) - plant.d_zw * delta;
    Eigen::FullPivLU<Mat> lu(loop);
    if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-9)
        throw NumericalError("loop is ill-posed at delta=" + std::to_string(delta) +
                             ": det(I - D_zw*delta) = " + std::to_string(lu.determinant()));
    const Mat cz_cl = lu.solve(plant.c_z);           // z = cz_cl x + dzd_cl d
    const Mat dzd_cl = lu.solve(plant.d_zd);
    const Mat a_cl = plant.a + plant.b_w * delta * cz_cl;
    const Mat b_cl = plant.b_d + plant.b_w * delta * dzd_cl;
    const Eigen::Index nw = plant.n_w(), ne = plant.n_e(), nd = plant.n_d();
    Mat c(nz + nw + ne, plant.n()), d(nz + nw + ne, nd);
    c << cz_cl, delta * cz_cl, plant.c_e;
    d << dzd_cl, delta * dzd_cl, Mat::Zero(ne, nd);
    return Realization{a_cl, b_cl, c, d};
}

Trajectory simulate_zoh(const Realization& r, const std::vector<Vec>& u, double dt, const Vec& x0) {
    if (dt <= 0) throw ConfigError("dt must be positive");
    const Eigen::Index n = r.n(), m = r.m();
    Mat aug = Mat::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = r.a;
    aug.topRightCorner(n, m) = r.b;
    const Mat phi = (aug * dt).exp();
    const Mat ad = phi.topLeftCorner(n, n);
    const Mat bd = phi.topRightCorner(n, m);

    Vec x = x0.size() == 0 ? Vec(Vec::Zero(n)) : x0;
    if (x.size() != n) throw DimensionError("x0 size mismatch");
    std::vector<Vec> xs, ys;
    xs.reserve(u.size());
    ys.reserve(u.size());
    for (size_t k = 0; k < u.size(); ++k) {
        if (u[k].size() != m) throw DimensionError("input sample size mismatch");
        xs.push_back(x);
        ys.push_back(r.c * x + r.d * u[k]);
        if (k + 1 < u.size()) x = ad * x + bd * u[k];
    }
    Trajectory traj;
    traj.dt = dt;
    traj.add("x", std::move(xs));
    traj.add("y", std::move(ys));
    traj.add("u", u);
    return traj;
}

Trajectory filter_response(const Realization& filter, const std::vector<Vec>& u, double dt) {
    Trajectory run = simulate_zoh(filter, u, dt);
    Trajectory out;
    out.dt = dt;
    out.add("y", run.at("y"));
    out.add("xi", run.at("x"));
    return out;
}

double check_finite_horizon_iqc(const Mat& m, const Mat& z_term, const std::vector<Vec>& y,
                                const std::vector<Vec>& xi, double dt) {
    if (y.size() != xi.size()) throw DimensionError("y/xi sample count mismatch");
    EnergyAccumulator acc(dt);
    double worst = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < y.size(); ++k) {
        const double terminal = z_term.size() == 0 ? 0.0 : xi[k].dot(z_term * xi[k]);
        worst = std::min(worst, acc.total() + terminal);
        acc.add_form(m, y[k]);
    }
    return worst;
}

double check_dissipation(const Mat& xcal, const Mat& z_term, double gamma,
                         const std::vector<Vec>& xi, const std::vector<Vec>& x,
                         const std::vector<Vec>& z, const std::vector<Vec>& d, double dt) {
    if (gamma <= 0) throw ConfigError("gamma must be positive");
    const size_t count = x.size();
    if (xi.size() != count || z.size() != count || d.size() != count)
        throw DimensionError("trajectory channel sample counts differ");
    const Eigen::Index n_xi = xi.empty() ? 0 : xi.front().size();
    Mat shifted = xcal;
    if (z_term.size() > 0) shifted.topLeftCorner(n_xi, n_xi) -= z_term;
    EnergyAccumulator acc(dt);
    double worst = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < count; ++k) {
        Vec state(n_xi + x[k].size());
        state << xi[k], x[k];
        const double stored = state.dot(shifted * state);
        worst = std::min(worst, -(stored + acc.total()));
        acc.add_norm_sq(z[k] / std::sqrt(gamma));
        acc.add_form(-gamma * Mat::Identity(d[k].size(), d[k].size()), d[k]);
    }
    return worst;
}

Mat gramian(const Mat& a, const Mat& b) {
    const Eigen::Index n = a.rows();
    if (n == 0) return Mat(0, 0);
    if (!is_hurwitz(a)) throw NumericalError("gramian requires a Hurwitz state matrix");
    const Mat eye = Mat::Identity(n, n);
    const Mat lhs = Eigen::kroneckerProduct(eye, a) + Eigen::kroneckerProduct(a, eye);
    const Mat q = b * b.transpose();
    Vec rhs = Eigen::Map<const Vec>(q.data(), n * n);
    Vec wvec = lhs.partialPivLu().solve(-rhs);
    Mat w = Eigen::Map<Mat>(wvec.data(), n, n);
    w = 0.5 * (w + w.transpose());
    const double res = (a * w + w * a.transpose() + q).norm() / (1.0 + q.norm());
    if (res > 1e-10) throw NumericalError("Lyapunov residual " + std::to_string(res));
    return w;
}

Mat finite_horizon_gramian(const Mat& a, const Mat& b, double horizon) {
    // W_T = W - e^{AT} W e^{A^T T}, exact for Hurwitz a; avoids the
    // blow-up of the augmented-exponential route at long horizons.
    const Mat w = gramian(a, b);
    const Mat phi = (a * horizon).exp();
    Mat wt = w - phi * w * phi.transpose();
    return 0.5 * (wt + wt.transpose());
}

WorstCaseInput worst_case_disturbance(const UncertainPlant& plant, double delta,
                                      const Vec& direction, double horizon, double dt) {
    if (direction.size() != plant.n_e()) throw DimensionError("direction dimension mismatch");
    const Realization cl = closed_loop(plant, delta);
    if (!is_hurwitz(cl.a))
        throw NumericalError("closed loop unstable at delta=" + std::to_string(delta));
    const Mat wt = finite_horizon_gramian(cl.a, cl.b, horizon);
    const Mat h = plant.c_e * wt * plant.c_e.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    if (es.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff()))
        throw NumericalError("output ellipse matrix C_e W_T C_e^T is rank-deficient");
    const Mat hinv = es.operatorInverseSqrt() * es.operatorInverseSqrt();
    const Vec dir = direction.normalized();
    const Vec e_star = dir / std::sqrt(dir.dot(hinv * dir));
    const Vec x_f = wt * plant.c_e.transpose() * (hinv * e_star);

    const auto steps = static_cast<Eigen::Index>(std::llround(horizon / dt));
    const Mat back = (cl.a.transpose() * dt).exp();
    Vec g = wt.ldlt().solve(x_f);  // e^{A^T (T_f - t)} W_T^{-1} x_f at t = T_f
    std::vector<Vec> d(static_cast<size_t>(steps) + 1);
    for (Eigen::Index k = steps; k >= 0; --k) {
        d[static_cast<size_t>(k)] = cl.b.transpose() * g;
        g = back * g;
    }
    double energy = 0.0;
    for (Eigen::Index k = 0; k < steps; ++k) energy += d[static_cast<size_t>(k)].squaredNorm() * dt;
    if (energy <= 0) throw NumericalError("degenerate worst-case input");
    const double scale = 1.0 / std::sqrt(energy);
    for (auto& s : d) s *= scale;

    WorstCaseInput out;
    out.d = std::move(d);
    out.e_star = e_star;
    out.dt = dt;
    return out;
}

}  // namespace iqcd
