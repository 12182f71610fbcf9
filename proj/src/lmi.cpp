#include "iqcd/lmi.hpp"

#include <algorithm>
#include <sstream>

namespace iqcd {

Eigen::Index VarBlock::count() const {
    switch (kind) {
        case Kind::Symmetric: return rows * (rows + 1) / 2;
        case Kind::General: return rows * cols;
        case Kind::Scalar: return 1;
    }
    return 0;
}

int VarLayout::add_symmetric(const std::string& name, Eigen::Index s) {
    VarBlock b{name, VarBlock::Kind::Symmetric, s, s, total_};
    total_ += b.count();
    blocks_.push_back(std::move(b));
    return block_count() - 1;
}

int VarLayout::add_general(const std::string& name, Eigen::Index r, Eigen::Index c) {
    VarBlock b{name, VarBlock::Kind::General, r, c, total_};
    total_ += b.count();
    blocks_.push_back(std::move(b));
    return block_count() - 1;
}

int VarLayout::add_scalar(const std::string& name) {
    VarBlock b{name, VarBlock::Kind::Scalar, 1, 1, total_};
    total_ += b.count();
    blocks_.push_back(std::move(b));
    return block_count() - 1;
}

Mat VarLayout::value(int id, const Vec& x) const {
    const VarBlock& b = block(id);
    Mat v = Mat::Zero(b.rows, b.cols);
    Eigen::Index k = b.offset;
    switch (b.kind) {
        case VarBlock::Kind::Symmetric:
            for (Eigen::Index j = 0; j < b.cols; ++j) {
                for (Eigen::Index i = j; i < b.rows; ++i) {
                    v(i, j) = x[k];
                    v(j, i) = x[k];
                    ++k;
                }
            }
            break;
        case VarBlock::Kind::General:
            for (Eigen::Index j = 0; j < b.cols; ++j)
                for (Eigen::Index i = 0; i < b.rows; ++i) v(i, j) = x[k++];
            break;
        case VarBlock::Kind::Scalar:
            v(0, 0) = x[k];
            break;
    }
    return v;
}

void VarLayout::set_value(int id, const Mat& v, Vec& x) const {
    const VarBlock& b = block(id);
    if (v.rows() != b.rows || v.cols() != b.cols) {
        throw DimensionError("VarLayout::set_value: shape mismatch for block " + b.name);
    }
    Eigen::Index k = b.offset;
    switch (b.kind) {
        case VarBlock::Kind::Symmetric:
            for (Eigen::Index j = 0; j < b.cols; ++j)
                for (Eigen::Index i = j; i < b.rows; ++i) x[k++] = 0.5 * (v(i, j) + v(j, i));
            break;
        case VarBlock::Kind::General:
            for (Eigen::Index j = 0; j < b.cols; ++j)
                for (Eigen::Index i = 0; i < b.rows; ++i) x[k++] = v(i, j);
            break;
        case VarBlock::Kind::Scalar:
            x[k] = v(0, 0);
            break;
    }
}

AffineSym::AffineSym(Eigen::Index dim_) : dim(dim_), constant(Mat::Zero(dim_, dim_)) {}

AffineSym AffineSym::constant_of(const Mat& m) {
    AffineSym e(m.rows());
    e.constant = 0.5 * (m + m.transpose());
    return e;
}

Mat AffineSym::eval(const Vec& x) const {
    Mat v = constant;
    for (const auto& [idx, coeff] : coeffs) v += x[idx] * coeff;
    return v;
}

void AffineSym::add_coeff(int var, const Mat& m) {
    if (m.rows() != dim || m.cols() != dim) {
        throw DimensionError("AffineSym::add_coeff: coefficient size mismatch");
    }
    Mat sym = 0.5 * (m + m.transpose());
    auto it = std::lower_bound(coeffs.begin(), coeffs.end(), var,
                               [](const auto& p, int v) { return p.first < v; });
    if (it != coeffs.end() && it->first == var) {
        it->second += sym;
    } else {
        coeffs.insert(it, {var, std::move(sym)});
    }
}

AffineSym sym_block_expr(const VarLayout& layout, int block_id) {
    const VarBlock& b = layout.block(block_id);
    if (b.kind != VarBlock::Kind::Symmetric) {
        throw DimensionError("sym_block_expr: block " + b.name + " is not symmetric");
    }
    AffineSym e(b.rows);
    Eigen::Index k = b.offset;
    for (Eigen::Index j = 0; j < b.cols; ++j) {
        for (Eigen::Index i = j; i < b.rows; ++i) {
            Mat basis = Mat::Zero(b.rows, b.rows);
            basis(i, j) = 1.0;
            basis(j, i) = 1.0;
            e.add_coeff(static_cast<int>(k++), basis);
        }
    }
    return e;
}

AffineSym pn_multiplier_expr(const VarLayout& layout, int p_block) {
    const VarBlock& b = layout.block(p_block);
    const Eigen::Index m1 = b.rows, m2 = b.cols;
    AffineSym e(m1 + m2);
    Eigen::Index k = b.offset;
    for (Eigen::Index j = 0; j < m2; ++j) {
        for (Eigen::Index i = 0; i < m1; ++i) {
            Mat basis = Mat::Zero(m1 + m2, m1 + m2);
            basis(i, m1 + j) = 1.0;
            basis(m1 + j, i) = 1.0;
            e.add_coeff(static_cast<int>(k++), basis);
        }
    }
    return e;
}

AffineSym diag_cat(const AffineSym& a, const AffineSym& b) {
    AffineSym e(a.dim + b.dim);
    e.constant.topLeftCorner(a.dim, a.dim) = a.constant;
    e.constant.bottomRightCorner(b.dim, b.dim) = b.constant;
    for (const auto& [idx, coeff] : a.coeffs) {
        Mat c = Mat::Zero(e.dim, e.dim);
        c.topLeftCorner(a.dim, a.dim) = coeff;
        e.add_coeff(idx, c);
    }
    for (const auto& [idx, coeff] : b.coeffs) {
        Mat c = Mat::Zero(e.dim, e.dim);
        c.bottomRightCorner(b.dim, b.dim) = coeff;
        e.add_coeff(idx, c);
    }
    return e;
}

AffineSym lift_affine(const VarLayout& layout, const std::function<Mat(const Vec&)>& assemble) {
    const Eigen::Index n = layout.size();
    Vec zero = Vec::Zero(n);
    Mat constant = assemble(zero);
    AffineSym e = AffineSym::constant_of(constant);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vec probe = Vec::Zero(n);
        probe[i] = 1.0;
        Mat coeff = assemble(probe) - constant;
        if (coeff.norm() > 1e-14) e.add_coeff(static_cast<int>(i), coeff);
    }
    return e;
}

Mat kyp_form_numeric(const Mat& x, const Mat& m, const Realization& r) {
    const Eigen::Index n = r.n(), nm = r.m();
    if (x.rows() != n || x.cols() != n) {
        throw DimensionError("kyp_form: X size must match the state dimension");
    }
    if (m.rows() != r.p() || m.cols() != r.p()) {
        throw DimensionError("kyp_form: M size must match the output dimension");
    }
    Mat out = Mat::Zero(n + nm, n + nm);
    if (n > 0) {
        out.topLeftCorner(n, n) = r.a.transpose() * x + x * r.a + r.c.transpose() * m * r.c;
        out.topRightCorner(n, nm) = x * r.b + r.c.transpose() * m * r.d;
        out.bottomLeftCorner(nm, n) = out.topRightCorner(n, nm).transpose();
    }
    out.bottomRightCorner(nm, nm) = r.d.transpose() * m * r.d;
    return out;
}

AffineSym kyp_form(const AffineSym& x, const AffineSym& m, const Realization& r) {
    const Eigen::Index n = r.n(), nm = r.m();
    AffineSym e(n + nm);
    const Mat zero_x = Mat::Zero(n, n);
    const Mat zero_m = Mat::Zero(r.p(), r.p());
    e.constant = kyp_form_numeric(x.constant, m.constant, r);
    for (const auto& [idx, coeff] : x.coeffs) e.add_coeff(idx, kyp_form_numeric(coeff, zero_m, r));
    for (const auto& [idx, coeff] : m.coeffs) e.add_coeff(idx, kyp_form_numeric(zero_x, coeff, r));
    return e;
}

double strictness_margin(const AffineSym& expr, double eps_base) {
    return eps_base * std::max(1.0, expr.constant.norm());
}

LmiConstraint assemble_fdi_lmi(const Realization& filtered, const AffineSym& xcal,
                               const AffineSym& m, double eps_base) {
    AffineSym expr = kyp_form(xcal, m, filtered);
    return LmiConstraint{"fdi_kyp", expr, Sense::NegSemidef, strictness_margin(expr, eps_base)};
}

namespace {

/// Realization of the disturbance-extended filtered loop: input (w, d),
/// output col(Psi_f col(z, w), d) with z = G w + d-channel feedthrough.
Realization disturbance_extended(const Realization& psi_filter, const Realization& g,
                                 const Mat& b_dist, const Mat& d_dist) {
    const Eigen::Index n = g.n(), nz = g.p(), nw = g.m(), nd = d_dist.cols();
    // col(G, I) with the disturbance input appended: (w, d) -> col(z, w)
    Mat c_f = Mat::Zero(nz + nw, n);
    c_f.topRows(nz) = g.c;
    Mat d_f = Mat::Zero(nz + nw, nw + nd);
    d_f.topLeftCorner(nz, nw) = g.d;
    d_f.topRightCorner(nz, nd) = d_dist;
    d_f.block(nz, 0, nw, nw) = Mat::Identity(nw, nw);
    Mat b_f = Mat::Zero(n, nw + nd);
    b_f.leftCols(nw) = g.b;
    b_f.rightCols(nd) = b_dist;
    Realization fd(g.a, b_f, c_f, d_f);
    Realization filtered = cascade(psi_filter, fd);
    // append the raw disturbance as an extra output row
    Mat c = Mat::Zero(filtered.p() + nd, filtered.n());
    c.topRows(filtered.p()) = filtered.c;
    Mat d = Mat::Zero(filtered.p() + nd, filtered.m());
    d.topRows(filtered.p()) = filtered.d;
    d.bottomRightCorner(nd, nd) = Mat::Identity(nd, nd);
    return Realization(filtered.a, filtered.b, c, d);
}

}  // namespace

Mat assemble_gamma_lmi(const Mat& xcal, const Mat& m, const Realization& psi_filter,
                       const Realization& g, double gamma) {
    if (gamma <= 0.0) throw ConfigError("assemble_gamma_lmi: gamma must be positive");
    const Eigen::Index nz = g.p();
    if (psi_filter.m() != g.p() + g.m()) {
        throw DimensionError("assemble_gamma_lmi: filter input dim must be n_z + n_w");
    }
    // disturbance enters z directly: b_dist = 0, d_dist = I_nz
    Realization ext = disturbance_extended(psi_filter, g, Mat::Zero(g.n(), nz),
                                           Mat::Identity(nz, nz));
    const Eigen::Index ny = psi_filter.p();
    Mat middle = Mat::Zero(ny + 2 * nz, ny + 2 * nz);
    middle.topLeftCorner(ny, ny) = m;
    // the z-rows of ext are not emitted by disturbance_extended; rebuild them here
    // output stack: (y, z, d) with z = C x + D w + I d
    Mat c = Mat::Zero(ny + 2 * nz, ext.n());
    c.topRows(ny) = ext.c.topRows(ny);
    c.block(ny, ext.n() - g.n(), nz, g.n()) = g.c;
    Mat d = Mat::Zero(ny + 2 * nz, ext.m());
    d.topRows(ny) = ext.d.topRows(ny);
    d.block(ny, 0, nz, g.m()) = g.d;
    d.block(ny, g.m(), nz, nz) = Mat::Identity(nz, nz);
    d.bottomRightCorner(nz, nz) = Mat::Identity(nz, nz);
    Realization full(ext.a, ext.b, c, d);
    middle.block(ny, ny, nz, nz) = (1.0 / gamma) * Mat::Identity(nz, nz);
    middle.bottomRightCorner(nz, nz) = -gamma * Mat::Identity(nz, nz);
    return kyp_form_numeric(xcal, middle, full);
}

PnLmis assemble_pn_lmis(const Realization& psi, const Interval& interval, const Realization& g,
                        const AffineSym& m, const AffineSym& r, const AffineSym& xcal,
                        double eps_base) {
    const Eigen::Index nz = g.p();
    if (g.m() != nz) throw DimensionError("assemble_pn_lmis: plant must have n_z = n_w");
    Mat t = parametric_t(interval, nz);
    Mat j = stack_j(nz);
    Realization psi_j(psi.a, psi.b * j, psi.c, psi.d * j);
    Realization psi_t(psi.a, psi.b * t, psi.c, psi.d * t);
    Realization filtered = cascade(psi_t, inverse_graph(g));

    AffineSym pos_expr = kyp_form(r, m, psi_j);
    AffineSym fdi_expr = kyp_form(xcal, m, filtered);
    return PnLmis{
        LmiConstraint{"multiplier_positivity", pos_expr, Sense::PosSemidef,
                      strictness_margin(pos_expr, eps_base)},
        LmiConstraint{"loop_fdi", fdi_expr, Sense::NegSemidef,
                      strictness_margin(fdi_expr, eps_base)},
    };
}

ExampleLmis assemble_example_lmis(const UncertainPlant& plant, const Interval& interval, int nu,
                                  double eps_base) {
    if (plant.n_z() != plant.n_w()) {
        throw DimensionError("assemble_example_lmis: plant requires n_z = n_w");
    }
    const Eigen::Index nz = plant.n_z();
    const Eigen::Index n = plant.n();
    const Eigen::Index nd = plant.n_d();
    const Eigen::Index ne = plant.n_e();
    const Eigen::Index m1 = (nu + 1) * nz;

    ExampleLmis out;
    out.nu = nu;
    Realization basis = psi_basis(nu);
    out.psi = diag_join(basis, basis);
    out.t = parametric_t(interval, nz);
    const Eigen::Index npsi = out.psi.n();  // 2 nu

    VarLayout layout;
    out.p_block = layout.add_general("P", m1, m1);
    out.x_block = layout.add_symmetric("X", npsi + n);
    out.r_block = nu > 0 ? layout.add_symmetric("R", npsi) : -1;
    out.k_block = nu > 0 ? layout.add_general("K", nu, nu) : -1;
    out.y_block = layout.add_symmetric("Y", ne);

    AffineSym m_expr = pn_multiplier_expr(layout, out.p_block);
    AffineSym x_expr = sym_block_expr(layout, out.x_block);

    SdpProblem problem;
    problem.objective = Vec::Zero(layout.size());
    {
        // minimize trace(Y)
        const VarBlock& yb = layout.block(out.y_block);
        Eigen::Index k = yb.offset;
        for (Eigen::Index j = 0; j < yb.cols; ++j)
            for (Eigen::Index i = j; i < yb.rows; ++i) problem.objective[k++] = (i == j) ? 1.0 : 0.0;
    }

    // (i) disturbance-extended KYP with middle diag(M, -I)
    Realization psi_t(out.psi.a, out.psi.b * out.t, out.psi.c, out.psi.d * out.t);
    Realization ext = disturbance_extended(psi_t, plant.loop_channel(), plant.b_d, plant.d_zd);
    AffineSym middle = diag_cat(m_expr, AffineSym::constant_of(-Mat::Identity(nd, nd)));
    AffineSym kyp_expr = kyp_form(x_expr, middle, ext);
    problem.constraints.push_back(LmiConstraint{"invariance_kyp", kyp_expr, Sense::NegSemidef,
                                                strictness_margin(kyp_expr, eps_base)});

    // (ii) coupling LMI [[Y,0,0,Ce],[0,X11,X12-K,X13],[0,X21-K',X22,X23],[Ce',X31,X32,X33]]
    const Mat c_e = plant.c_e;
    const int x_block = out.x_block, k_block = out.k_block, y_block = out.y_block;
    auto coupling = [&layout, x_block, k_block, y_block, c_e, nu, n, ne](const Vec& v) -> Mat {
        Mat x = layout.value(x_block, v);
        Mat y = layout.value(y_block, v);
        Mat k = k_block >= 0 ? layout.value(k_block, v) : Mat::Zero(0, 0);
        const Eigen::Index nx = x.rows();
        Mat out_m = Mat::Zero(ne + nx, ne + nx);
        out_m.topLeftCorner(ne, ne) = y;
        out_m.bottomRightCorner(nx, nx) = x;
        if (nu > 0) {
            out_m.block(ne, ne + nu, nu, nu) -= k;
            out_m.block(ne + nu, ne, nu, nu) -= k.transpose();
        }
        out_m.topRightCorner(ne, n) = c_e;
        out_m.bottomLeftCorner(n, ne) = c_e.transpose();
        return out_m;
    };
    AffineSym coupling_expr = lift_affine(layout, coupling);
    problem.constraints.push_back(LmiConstraint{"coupling", coupling_expr, Sense::PosSemidef,
                                                strictness_margin(coupling_expr, eps_base)});

    // (iii) [[R11, R12-K],[R21-K', R22]] <= -eps I (vacuous for nu = 0)
    if (nu > 0) {
        const int r_block = out.r_block;
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
                                                    strictness_margin(rk_expr, eps_base)});
    }

    // (iv) multiplier positivity kyp(R, M, Psi*J) >= eps I
    Mat j = stack_j(nz);
    Realization psi_j(out.psi.a, out.psi.b * j, out.psi.c, out.psi.d * j);
    AffineSym r_expr = nu > 0 ? sym_block_expr(layout, out.r_block) : AffineSym(0);
    AffineSym pos_expr = kyp_form(r_expr, m_expr, psi_j);
    problem.constraints.push_back(LmiConstraint{"multiplier_positivity", pos_expr,
                                                Sense::PosSemidef,
                                                strictness_margin(pos_expr, eps_base)});

    problem.layout = layout;
    out.problem = std::move(problem);
    return out;
}

}  // namespace iqcd
