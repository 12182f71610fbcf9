#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "iqcd/statespace.hpp"

namespace iqcd {

/// One named block of decision scalars inside the flat vector.
struct VarBlock {
    enum class Kind { Symmetric, General, Scalar };
    std::string name;
    Kind kind = Kind::Scalar;
    Eigen::Index rows = 1;
    Eigen::Index cols = 1;
    Eigen::Index offset = 0;

    Eigen::Index count() const;
};

/// Ordered decision-variable layout; offsets partition [0, size()).
///
/// Symmetric blocks are packed as the lower triangle in column-major
/// order with plain E_ij + E_ji basis matrices (off-diagonal scaling 1),
/// so certificates serialize deterministically.
class VarLayout {
public:
    int add_symmetric(const std::string& name, Eigen::Index s);
    int add_general(const std::string& name, Eigen::Index r, Eigen::Index c);
    int add_scalar(const std::string& name);

    Eigen::Index size() const { return total_; }
    int block_count() const { return static_cast<int>(blocks_.size()); }
    const VarBlock& block(int id) const { return blocks_.at(static_cast<size_t>(id)); }

    /// Materialize a block's value from the flat vector.
    Mat value(int id, const Vec& x) const;
    /// Write a block value into the flat vector (symmetrizing if needed).
    void set_value(int id, const Mat& v, Vec& x) const;

private:
    std::vector<VarBlock> blocks_;
    Eigen::Index total_ = 0;
};

/// Symmetric-matrix-valued affine function of the flat decision vector:
/// eval(x) = constant + sum_i x[i] * coeff_i.
struct AffineSym {
    Eigen::Index dim = 0;
    Mat constant;
    std::vector<std::pair<int, Mat>> coeffs;  // sorted by variable index

    AffineSym() = default;
    explicit AffineSym(Eigen::Index dim_);

    static AffineSym constant_of(const Mat& m);

    Mat eval(const Vec& x) const;
    void add_coeff(int var, const Mat& m);
};

/// Affine expression equal to a symmetric variable block itself.
AffineSym sym_block_expr(const VarLayout& layout, int block_id);

/// The structured multiplier M = [[0, P], [P^T, 0]] over a general P block.
AffineSym pn_multiplier_expr(const VarLayout& layout, int p_block);

/// diag(a, b) as an affine expression.
AffineSym diag_cat(const AffineSym& a, const AffineSym& b);

/// Lift an arbitrary (assumed affine) numeric assembler into coefficient
/// form by probing the basis vectors of the layout; coefficients with
/// norm below 1e-14 are dropped.
AffineSym lift_affine(const VarLayout& layout, const std::function<Mat(const Vec&)>& assemble);

/// Numeric KYP triple product
/// [I 0; A B; C D]^T [0 X 0; X 0 0; 0 0 M] [I 0; A B; C D].
Mat kyp_form_numeric(const Mat& x, const Mat& m, const Realization& r);

/// Affine KYP form; affine because X and M enter linearly.
AffineSym kyp_form(const AffineSym& x, const AffineSym& m, const Realization& r);

enum class Sense { PosSemidef, NegSemidef };

/// One affine matrix-inequality block: expr >= margin*I or expr <= -margin*I.
struct LmiConstraint {
    std::string name;
    AffineSym expr;
    Sense sense = Sense::PosSemidef;
    double margin = 0.0;
};

struct SdpProblem {
    VarLayout layout;
    Vec objective;  // length layout.size(); empty or zero means feasibility
    std::vector<LmiConstraint> constraints;
};

/// Margin for strict inequalities: eps_base * max(1, ||constant term||).
double strictness_margin(const AffineSym& expr, double eps_base);

/// KYP certificate constraint for the filtered inverse graph:
/// kyp_form(xcal, m, filtered) <= -eps I.
LmiConstraint assemble_fdi_lmi(const Realization& filtered, const AffineSym& xcal,
                               const AffineSym& m, double eps_base);

/// Numeric disturbance-extended KYP matrix with middle diag(M, I/gamma, -gamma I),
/// evaluated at fixed (xcal, m) for definiteness testing during bisection.
/// psi_filter is the multiplier outer factor (input dim n_z + n_w), g the loop plant.
Mat assemble_gamma_lmi(const Mat& xcal, const Mat& m, const Realization& psi_filter,
                       const Realization& g, double gamma);

struct PnLmis {
    LmiConstraint positivity;  // filter on J, >= eps
    LmiConstraint fdi;         // filter through T on col(G, I), <= -eps
};

/// The two frequency-domain-inequality certificates for the parametric class:
/// kyp(R, M, Psi*J) >= eps I and kyp(xcal, M, (Psi T)*col(G,I)) <= -eps I.
PnLmis assemble_pn_lmis(const Realization& psi, const Interval& interval, const Realization& g,
                        const AffineSym& m, const AffineSym& r, const AffineSym& xcal,
                        double eps_base);

/// Assembled invariance-analysis program for one basis order nu.
struct ExampleLmis {
    SdpProblem problem;
    int nu = 0;
    int p_block = -1;
    int x_block = -1;
    int y_block = -1;
    int k_block = -1;  // -1 when nu = 0
    int r_block = -1;  // -1 when nu = 0
    Realization psi;   // diag(psi_1, psi_2)
    Mat t;             // parametric T
};

/// The full trace-minimization program of the invariance analysis:
/// disturbance-extended KYP, coupling LMI, the K/R coupling, and the
/// multiplier positivity FDI, with objective trace(Y).
ExampleLmis assemble_example_lmis(const UncertainPlant& plant, const Interval& interval, int nu,
                                  double eps_base);

}  // namespace iqcd
