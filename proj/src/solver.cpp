#include "dlmp/solver.hpp"

#include "dlmp/grid.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace dlmp::conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/* ---------------------------------------------------------------- lowering */

struct SocBlockInfo {
    int source = -1;    ///< index into program.socs(), -1 for epigraph cones
    bool collapsed = false;
    int lin_row = -1;   ///< row in the linear cone part when collapsed
    int first_row = -1; ///< first row of the block within the cone part
    int dim = 0;
    double tail_norm = 0.0; ///< ||constant tail|| for collapsed blocks
};

/// Model constraints lowered over the program's own variables:
///   A x = b,  G x + s = h,  s in R_+^{num_lin} x SOC(q_1) x ...
/// The quadratic objective is kept as 1/2 x'P x + q'x (+ qp_const); the
/// epigraph-lowered pure-conic equivalent is derived on demand for backends
/// without native quadratic support.
struct Lowered {
    int num_orig = 0;
    Eigen::VectorXd q; ///< linear objective incl. quadratic cross terms
    double qp_const = 0.0;
    Eigen::MatrixXd P; ///< Hessian of the objective (possibly zero)
    bool has_quad = false;

    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::MatrixXd G;
    Eigen::VectorXd h;
    int num_lin = 0;
    std::vector<int> soc_dims;
    std::vector<SocBlockInfo> blocks;
};

/// Pure-conic epigraph form of a Lowered program: one extra variable and a
/// dim-3 cone per quadratic term.
struct ConicForm {
    int num_vars = 0;
    Eigen::VectorXd c;
    double c_const = 0.0;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::MatrixXd G;
    Eigen::VectorXd h;
    int num_lin = 0;
    std::vector<int> soc_dims;
};

Lowered lower(const ConicProgram& p)
{
    p.validate();
    Lowered lo;
    lo.num_orig = p.num_variables();

    lo.q = Eigen::VectorXd::Zero(lo.num_orig);
    for (const auto& [var, coef] : p.linear_cost().coeffs()) {
        lo.q(var) += coef;
    }
    lo.qp_const = p.linear_cost().constant();
    lo.P = Eigen::MatrixXd::Zero(lo.num_orig, lo.num_orig);
    for (const QuadCost& qc : p.quadratic_costs()) {
        lo.has_quad = true;
        // w (a'x + m)^2 contributes 2w aa' to P, 2wm a to q, wm^2 to const.
        for (const auto& [vi, ci] : qc.expr.coeffs()) {
            for (const auto& [vj, cj] : qc.expr.coeffs()) {
                lo.P(vi, vj) += 2.0 * qc.weight * ci * cj;
            }
            lo.q(vi) += 2.0 * qc.weight * qc.expr.constant() * ci;
        }
        lo.qp_const += qc.weight * qc.expr.constant() * qc.expr.constant();
    }

    const auto& eqs = p.equalities();
    lo.A = Eigen::MatrixXd::Zero(static_cast<int>(eqs.size()), lo.num_orig);
    lo.b = Eigen::VectorXd::Zero(static_cast<int>(eqs.size()));
    for (size_t i = 0; i < eqs.size(); ++i) {
        for (const auto& [var, coef] : eqs[i].lhs.coeffs()) {
            lo.A(static_cast<int>(i), var) = coef;
        }
        lo.b(static_cast<int>(i)) = eqs[i].rhs - eqs[i].lhs.constant();
    }

    // Linear cone rows: program inequalities first, then collapsed cones.
    struct PendingRow {
        LinExpr lhs;
        double rhs;
    };
    std::vector<PendingRow> lin_rows;
    for (const IneqConstraint& c : p.inequalities()) {
        lin_rows.push_back({c.lhs, c.rhs});
    }

    std::vector<const SocConstraint*> live_socs;
    for (size_t si = 0; si < p.socs().size(); ++si) {
        const SocConstraint& c = p.socs()[si];
        bool constant_tail = true;
        double norm2 = 0.0;
        for (const LinExpr& e : c.tail) {
            if (!e.coeffs().empty()) {
                constant_tail = false;
                break;
            }
            norm2 += e.constant() * e.constant();
        }
        SocBlockInfo info;
        info.source = static_cast<int>(si);
        if (constant_tail) {
            // ||m|| <= head(x) degenerates to one linear row.
            info.collapsed = true;
            info.tail_norm = std::sqrt(norm2);
            info.lin_row = static_cast<int>(lin_rows.size());
            lin_rows.push_back({-c.head, -info.tail_norm});
            lo.blocks.push_back(info);
        } else {
            info.dim = static_cast<int>(c.tail.size()) + 1;
            lo.blocks.push_back(info);
            live_socs.push_back(&c);
        }
    }

    lo.num_lin = static_cast<int>(lin_rows.size());
    int cone_rows = 0;
    for (const SocConstraint* c : live_socs) {
        cone_rows += static_cast<int>(c->tail.size()) + 1;
    }

    lo.G = Eigen::MatrixXd::Zero(lo.num_lin + cone_rows, lo.num_orig);
    lo.h = Eigen::VectorXd::Zero(lo.num_lin + cone_rows);
    for (int i = 0; i < lo.num_lin; ++i) {
        for (const auto& [var, coef] : lin_rows[static_cast<size_t>(i)].lhs.coeffs()) {
            lo.G(i, var) = coef;
        }
        lo.h(i) = lin_rows[static_cast<size_t>(i)].rhs -
                  lin_rows[static_cast<size_t>(i)].lhs.constant();
    }

    // s_block = (head(x), tail(x)) in the cone; as G x + s = h rows.
    int row = lo.num_lin;
    auto emit_expr = [&](const LinExpr& e, int r) {
        for (const auto& [var, coef] : e.coeffs()) {
            lo.G(r, var) = -coef;
        }
        lo.h(r) = e.constant();
    };
    size_t live_idx = 0;
    for (SocBlockInfo& info : lo.blocks) {
        if (info.collapsed) {
            continue;
        }
        const SocConstraint& c = *live_socs[live_idx++];
        info.first_row = row;
        emit_expr(c.head, row++);
        for (const LinExpr& e : c.tail) {
            emit_expr(e, row++);
        }
        lo.soc_dims.push_back(info.dim);
    }

    // A fully unused variable makes the KKT system singular and is always a
    // model-construction bug; reject it early with a name.
    for (int v = 0; v < lo.num_orig; ++v) {
        if (lo.q(v) == 0.0 && lo.P.col(v).isZero(0.0) && lo.A.col(v).isZero(0.0) &&
            lo.G.col(v).isZero(0.0)) {
            throw Error("conic program: variable '" + p.variable_name(v) +
                        "' appears in no constraint or cost");
        }
    }
    return lo;
}

ConicForm epigraph_form(const ConicProgram& p, const Lowered& lo)
{
    const int n_quad = static_cast<int>(p.quadratic_costs().size());
    ConicForm cf;
    cf.num_vars = lo.num_orig + n_quad;
    cf.c = Eigen::VectorXd::Zero(cf.num_vars);
    for (const auto& [var, coef] : p.linear_cost().coeffs()) {
        cf.c(var) += coef;
    }
    for (int k = 0; k < n_quad; ++k) {
        cf.c(lo.num_orig + k) = 1.0;
    }
    cf.c_const = p.linear_cost().constant();

    cf.A = Eigen::MatrixXd::Zero(lo.A.rows(), cf.num_vars);
    cf.A.leftCols(lo.num_orig) = lo.A;
    cf.b = lo.b;

    const int base_rows = static_cast<int>(lo.G.rows());
    cf.G = Eigen::MatrixXd::Zero(base_rows + 3 * n_quad, cf.num_vars);
    cf.h = Eigen::VectorXd::Zero(base_rows + 3 * n_quad);
    cf.G.topLeftCorner(base_rows, lo.num_orig) = lo.G;
    cf.h.head(base_rows) = lo.h;
    cf.num_lin = lo.num_lin;
    cf.soc_dims = lo.soc_dims;

    int row = base_rows;
    for (int k = 0; k < n_quad; ++k) {
        const QuadCost& qc = p.quadratic_costs()[static_cast<size_t>(k)];
        const int t = lo.num_orig + k;
        // t >= w e(x)^2 as || (2 sqrt(w) e, t - 1) || <= t + 1.
        cf.G(row, t) = -1.0;
        cf.h(row) = 1.0;
        ++row;
        const double f = 2.0 * std::sqrt(qc.weight);
        for (const auto& [var, coef] : qc.expr.coeffs()) {
            cf.G(row, var) = -f * coef;
        }
        cf.h(row) = f * qc.expr.constant();
        ++row;
        cf.G(row, t) = -1.0;
        cf.h(row) = -1.0;
        ++row;
        cf.soc_dims.push_back(3);
    }
    return cf;
}

/* ----------------------------------------------------------- cone algebra */

struct ConeLayout {
    int num_lin = 0;
    std::vector<int> soc_dims;
    int rows = 0;
    int degree = 0;
};

struct SocScaling {
    double eta2 = 1.0;
    double eta = 1.0;
    double w0 = 1.0;
    Eigen::VectorXd w1;
};

struct Scaling {
    Eigen::VectorXd lin_w2; // elementwise s/z
    std::vector<SocScaling> socs;
};

/// Shifts r until it lies well inside the cone.
Eigen::VectorXd bring_to_cone(const ConeLayout& cl, const Eigen::VectorXd& r)
{
    double alpha = -0.99;
    for (int i = 0; i < cl.num_lin; ++i) {
        alpha = std::max(alpha, -r(i));
    }
    int at = cl.num_lin;
    for (int q : cl.soc_dims) {
        const double res = r(at) - r.segment(at + 1, q - 1).norm();
        alpha = std::max(alpha, -res);
        at += q;
    }
    Eigen::VectorXd s = r;
    const double shift = alpha + 1.0;
    for (int i = 0; i < cl.num_lin; ++i) {
        s(i) += shift;
    }
    at = cl.num_lin;
    for (int q : cl.soc_dims) {
        s(at) += shift;
        at += q;
    }
    return s;
}

/// Nesterov-Todd scaling for (s, z); returns false when an iterate left the
/// cone interior. lambda receives W z.
bool update_scaling(const ConeLayout& cl, const Eigen::VectorXd& s, const Eigen::VectorXd& z,
                    Scaling& w, Eigen::VectorXd& lambda)
{
    w.lin_w2.resize(cl.num_lin);
    for (int i = 0; i < cl.num_lin; ++i) {
        if (s(i) <= 0.0 || z(i) <= 0.0) {
            return false;
        }
        w.lin_w2(i) = s(i) / z(i);
        lambda(i) = std::sqrt(s(i) * z(i));
    }
    w.socs.assign(cl.soc_dims.size(), {});
    int at = cl.num_lin;
    for (size_t k = 0; k < cl.soc_dims.size(); ++k) {
        const int q = cl.soc_dims[k];
        const double shead = s(at);
        const double zhead = z(at);
        const double sres = shead * shead - s.segment(at + 1, q - 1).squaredNorm();
        const double zres = zhead * zhead - z.segment(at + 1, q - 1).squaredNorm();
        if (sres <= 0.0 || zres <= 0.0 || shead <= 0.0 || zhead <= 0.0) {
            return false;
        }
        const double snorm = std::sqrt(sres);
        const double znorm = std::sqrt(zres);
        Eigen::VectorXd sbar = s.segment(at, q) / snorm;
        Eigen::VectorXd zbar = z.segment(at, q) / znorm;
        const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
        SocScaling& sc = w.socs[k];
        sc.eta2 = snorm / znorm;
        sc.eta = std::sqrt(sc.eta2);
        sc.w0 = (0.5 / gamma) * (sbar(0) + zbar(0));
        sc.w1 = (0.5 / gamma) * (sbar.tail(q - 1) - zbar.tail(q - 1));

        const double zeta = sc.w1.dot(z.segment(at + 1, q - 1));
        lambda(at) = sc.eta * (sc.w0 * zhead + zeta);
        lambda.segment(at + 1, q - 1) =
            sc.eta * (z.segment(at + 1, q - 1) + (zhead + zeta / (1.0 + sc.w0)) * sc.w1);
        at += q;
    }
    return true;
}

/// y = W v.
Eigen::VectorXd scale_mult(const ConeLayout& cl, const Scaling& w, const Eigen::VectorXd& v)
{
    Eigen::VectorXd y(v.size());
    for (int i = 0; i < cl.num_lin; ++i) {
        y(i) = std::sqrt(w.lin_w2(i)) * v(i);
    }
    int at = cl.num_lin;
    for (size_t k = 0; k < cl.soc_dims.size(); ++k) {
        const int q = cl.soc_dims[k];
        const SocScaling& sc = w.socs[k];
        const double zeta = sc.w1.dot(v.segment(at + 1, q - 1));
        y(at) = sc.eta * (sc.w0 * v(at) + zeta);
        y.segment(at + 1, q - 1) =
            sc.eta * (v.segment(at + 1, q - 1) + (v(at) + zeta / (1.0 + sc.w0)) * sc.w1);
        at += q;
    }
    return y;
}

Eigen::VectorXd conic_product(const ConeLayout& cl, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& v)
{
    Eigen::VectorXd y(u.size());
    for (int i = 0; i < cl.num_lin; ++i) {
        y(i) = u(i) * v(i);
    }
    int at = cl.num_lin;
    for (int q : cl.soc_dims) {
        y(at) = u.segment(at, q).dot(v.segment(at, q));
        y.segment(at + 1, q - 1) =
            u(at) * v.segment(at + 1, q - 1) + v(at) * u.segment(at + 1, q - 1);
        at += q;
    }
    return y;
}

/// Solves u o y = v for y.
Eigen::VectorXd conic_division(const ConeLayout& cl, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& v)
{
    Eigen::VectorXd y(u.size());
    for (int i = 0; i < cl.num_lin; ++i) {
        y(i) = v(i) / u(i);
    }
    int at = cl.num_lin;
    for (int q : cl.soc_dims) {
        const double det = u(at) * u(at) - u.segment(at + 1, q - 1).squaredNorm();
        const double y0 =
            (u(at) * v(at) - u.segment(at + 1, q - 1).dot(v.segment(at + 1, q - 1))) / det;
        y(at) = y0;
        y.segment(at + 1, q - 1) =
            (v.segment(at + 1, q - 1) - y0 * u.segment(at + 1, q - 1)) / u(at);
        at += q;
    }
    return y;
}

Eigen::VectorXd cone_identity(const ConeLayout& cl)
{
    Eigen::VectorXd e = Eigen::VectorXd::Zero(cl.rows);
    for (int i = 0; i < cl.num_lin; ++i) {
        e(i) = 1.0;
    }
    int at = cl.num_lin;
    for (int q : cl.soc_dims) {
        e(at) = 1.0;
        at += q;
    }
    return e;
}

/// Longest step alpha keeping (lambda + alpha ds, lambda + alpha dz) inside
/// the scaled cone; tau/kappa bounds apply when dtau/dkap are negative.
double line_search(const ConeLayout& cl, const Eigen::VectorXd& lambda, const Eigen::VectorXd& ds,
                   const Eigen::VectorXd& dz, double tau, double dtau, double kap, double dkap)
{
    double alpha = 10.0;
    if (cl.num_lin > 0) {
        double worst = kInf;
        for (int i = 0; i < cl.num_lin; ++i) {
            worst = std::min({worst, ds(i) / lambda(i), dz(i) / lambda(i)});
        }
        if (worst < 0.0) {
            alpha = std::min(alpha, 1.0 / (-worst));
        }
    }
    if (dtau < 0.0) {
        alpha = std::min(alpha, -tau / dtau);
    }
    if (dkap < 0.0) {
        alpha = std::min(alpha, -kap / dkap);
    }

    int at = cl.num_lin;
    for (int q : cl.soc_dims) {
        const double lk2 = lambda(at) * lambda(at) - lambda.segment(at + 1, q - 1).squaredNorm();
        if (lk2 <= 0.0) {
            at += q;
            continue;
        }
        const double lknorm = std::sqrt(lk2);
        Eigen::VectorXd lkbar = lambda.segment(at, q) / lknorm;

        auto block_step = [&](const Eigen::VectorXd& d) {
            const double lkbar_d =
                lkbar(0) * d(at) - lkbar.tail(q - 1).dot(d.segment(at + 1, q - 1));
            const double factor = (lkbar_d + d(at)) / (lkbar(0) + 1.0);
            const double rho0 = lkbar_d / lknorm;
            const Eigen::VectorXd rho1 =
                (d.segment(at + 1, q - 1) - factor * lkbar.tail(q - 1)) / lknorm;
            return rho1.norm() - rho0;
        };
        const double step = std::max({0.0, block_step(ds), block_step(dz)});
        if (step > 0.0) {
            alpha = std::min(alpha, 1.0 / step);
        }
        at += q;
    }
    return std::clamp(alpha, 1e-6, 0.999);
}

/* --------------------------------------------------- shared KKT machinery */

class KktSystem {
public:
    /// P may be null (pure conic). The system is
    ///   [ P  A'  G' ] [x]   with the lower-right block -W^2 (or -I before
    ///   [ A  0   0  ] [y]   a scaling exists).
    ///   [ G  0  -W^2] [z]
    KktSystem(const Eigen::MatrixXd* P, const Eigen::MatrixXd& A, const Eigen::MatrixXd& G,
              const ConeLayout& cl)
        : P_(P), A_(A), G_(G), cl_(cl)
    {
        nv_ = static_cast<int>(G.cols());
        p_ = static_cast<int>(A.rows());
        m_ = static_cast<int>(G.rows());
        n_ = nv_ + p_ + m_;
        K_ = Eigen::MatrixXd::Zero(n_, n_);
        if (P_ != nullptr) {
            K_.topLeftCorner(nv_, nv_) = *P_;
        }
        K_.block(0, nv_, nv_, p_) = A.transpose();
        K_.block(0, nv_ + p_, nv_, m_) = G.transpose();
        K_.block(nv_, 0, p_, nv_) = A;
        K_.block(nv_ + p_, 0, m_, nv_) = G;
    }

    void factor(const Scaling* w)
    {
        w_ = w;
        auto wblock = K_.block(nv_ + p_, nv_ + p_, m_, m_);
        wblock.setZero();
        if (w == nullptr) {
            wblock.diagonal().setConstant(-1.0);
        } else {
            for (int i = 0; i < cl_.num_lin; ++i) {
                wblock(i, i) = -w->lin_w2(i);
            }
            int at = cl_.num_lin;
            for (size_t k = 0; k < cl_.soc_dims.size(); ++k) {
                const int q = cl_.soc_dims[k];
                const SocScaling& sc = w->socs[k];
                Eigen::VectorXd wbar(q);
                wbar(0) = sc.w0;
                wbar.tail(q - 1) = sc.w1;
                Eigen::MatrixXd blk = 2.0 * wbar * wbar.transpose();
                blk(0, 0) -= 1.0;
                blk.diagonal().tail(q - 1).array() += 1.0;
                wblock.block(at, at, q, q) = -sc.eta2 * blk;
                at += q;
            }
        }
        // Static regularization keeps the factorization well-posed; the
        // refinement below runs against the exact operator.
        Eigen::MatrixXd kreg = K_;
        kreg.diagonal().head(nv_).array() += 1e-11;
        kreg.diagonal().tail(p_ + m_).array() -= 1e-11;
        lu_.compute(kreg);
    }

    /// Applies the exact (unregularized) operator.
    Eigen::VectorXd multiply(const Eigen::VectorXd& u) const
    {
        Eigen::VectorXd r(n_);
        const auto ux = u.head(nv_);
        const auto uy = u.segment(nv_, p_);
        const auto uz = u.tail(m_);
        r.head(nv_) = A_.transpose() * uy + G_.transpose() * uz;
        if (P_ != nullptr) {
            r.head(nv_) += *P_ * ux;
        }
        r.segment(nv_, p_) = A_ * ux;
        r.tail(m_) = G_ * ux;
        if (w_ == nullptr) {
            r.tail(m_) -= uz;
        } else {
            for (int i = 0; i < cl_.num_lin; ++i) {
                r(nv_ + p_ + i) -= w_->lin_w2(i) * uz(i);
            }
            int at = cl_.num_lin;
            for (size_t k = 0; k < cl_.soc_dims.size(); ++k) {
                const int q = cl_.soc_dims[k];
                const SocScaling& sc = w_->socs[k];
                Eigen::VectorXd wbar(q);
                wbar(0) = sc.w0;
                wbar.tail(q - 1) = sc.w1;
                const auto vz = uz.segment(at, q);
                Eigen::VectorXd blk = 2.0 * wbar.dot(vz) * wbar;
                blk(0) -= vz(0);
                blk.tail(q - 1) += vz.tail(q - 1);
                r.segment(nv_ + p_ + at, q) -= sc.eta2 * blk;
                at += q;
            }
        }
        return r;
    }

    struct Parts {
        Eigen::VectorXd x, y, z;
    };

    Parts solve(const Eigen::VectorXd& rhs) const
    {
        Eigen::VectorXd u = lu_.solve(rhs);
        double best_err = kInf;
        Eigen::VectorXd best = u;
        for (int round = 0; round < 3; ++round) {
            Eigen::VectorXd resid = rhs - multiply(u);
            const double err = resid.lpNorm<Eigen::Infinity>();
            if (err < best_err) {
                best_err = err;
                best = u;
            }
            if (err < 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>()) || round == 2) {
                break;
            }
            u += lu_.solve(resid);
        }
        return {best.head(nv_), best.segment(nv_, p_), best.tail(m_)};
    }

private:
    const Eigen::MatrixXd* P_;
    const Eigen::MatrixXd& A_;
    const Eigen::MatrixXd& G_;
    ConeLayout cl_;
    int nv_ = 0, p_ = 0, m_ = 0, n_ = 0;
    Eigen::MatrixXd K_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    const Scaling* w_ = nullptr;
};

struct IpmResult {
    SolveStatus status = SolveStatus::NumericalFailure;
    Eigen::VectorXd x, y, z, s; ///< already normalized
    int iterations = 0;
    double pres = kInf, dres = kInf, gap = kInf, relgap = kInf;
    double pcost = 0.0, dcost = 0.0;
    std::string note;
};

/* ------------------------------------- homogeneous self-dual conic solver */

IpmResult run_conic_ipm(const ConicForm& cf, const SolveOptions& opt)
{
    ConeLayout cl;
    cl.num_lin = cf.num_lin;
    cl.soc_dims = cf.soc_dims;
    cl.rows = static_cast<int>(cf.G.rows());
    cl.degree = cf.num_lin + static_cast<int>(cf.soc_dims.size());

    const int nv = cf.num_vars;
    const int p = static_cast<int>(cf.A.rows());
    const int m = cl.rows;

    KktSystem kkt(nullptr, cf.A, cf.G, cl);
    kkt.factor(nullptr);

    struct State {
        Eigen::VectorXd x, y, z, s;
        double tau = 1.0, kap = 1.0;
        double pres = kInf, dres = kInf, gap = kInf, relgap = kInf;
        double pcost = 0.0, dcost = 0.0, pinfres = kInf, dinfres = kInf;
        double score() const { return std::max({pres, dres, relgap}); }
    } cur;

    Eigen::VectorXd rhs(nv + p + m);
    rhs.setZero();
    rhs.segment(nv, p) = cf.b;
    rhs.tail(m) = cf.h;
    auto init1 = kkt.solve(rhs);
    cur.x = init1.x;
    cur.s = bring_to_cone(cl, -init1.z);
    rhs.setZero();
    rhs.head(nv) = -cf.c;
    auto init2 = kkt.solve(rhs);
    cur.y = init2.y;
    cur.z = bring_to_cone(cl, init2.z);

    const double resx0 = std::max(1.0, cf.c.norm());
    const double resy0 = std::max(1.0, cf.b.norm());
    const double resz0 = std::max(1.0, cf.h.norm());

    Eigen::VectorXd lambda(m);
    Scaling w;
    Eigen::VectorXd rhs1(nv + p + m);
    rhs1.head(nv) = -cf.c;
    rhs1.segment(nv, p) = cf.b;
    rhs1.tail(m) = cf.h;

    IpmResult out;
    State best = cur;
    bool have_best = false;

    auto finish = [&](const State& st, SolveStatus status, const std::string& note) {
        out.status = status;
        out.x = st.x / st.tau;
        out.y = st.y / st.tau;
        out.z = st.z / st.tau;
        out.s = st.s / st.tau;
        out.pres = st.pres;
        out.dres = st.dres;
        out.gap = st.gap;
        out.relgap = st.relgap;
        out.pcost = st.pcost;
        out.dcost = st.dcost;
        out.note = note;
        return out;
    };

    for (int iter = 0;; ++iter) {
        out.iterations = iter;

        Eigen::VectorXd rx = -cf.A.transpose() * cur.y - cf.G.transpose() * cur.z;
        const double hresx = rx.norm();
        rx -= cur.tau * cf.c;
        Eigen::VectorXd ry = cf.A * cur.x;
        const double hresy = ry.norm();
        ry -= cur.tau * cf.b;
        Eigen::VectorXd rz = cur.s + cf.G * cur.x;
        const double hresz = rz.norm();
        rz -= cur.tau * cf.h;
        const double cx = cf.c.dot(cur.x);
        const double by = cf.b.dot(cur.y);
        const double hz = cf.h.dot(cur.z);
        const double rt = cur.kap + cx + by + hz;

        const double nx = cur.x.norm(), ny = cur.y.norm(), nz = cur.z.norm(), ns = cur.s.norm();
        cur.gap = cur.s.dot(cur.z) / (cur.tau * cur.tau);
        const double mu = (cur.s.dot(cur.z) + cur.kap * cur.tau) / (cl.degree + 1);
        cur.pcost = cx / cur.tau;
        cur.dcost = -(by + hz) / cur.tau;
        if (cur.pcost < 0.0) {
            cur.relgap = cur.gap / (-cur.pcost);
        } else if (cur.dcost > 0.0) {
            cur.relgap = cur.gap / cur.dcost;
        } else {
            cur.relgap = kInf;
        }
        cur.pres = std::max(ry.norm() / std::max(1.0, resy0 + nx),
                            rz.norm() / std::max(1.0, resz0 + nx + ns)) /
                   cur.tau;
        cur.dres = rx.norm() / std::max(1.0, resx0 + ny + nz) / cur.tau;
        cur.pinfres = (by + hz) / std::max(1.0, ny + nz) < -1e-9 ? hresx / std::max(1.0, ny + nz)
                                                                 : kInf;
        cur.dinfres = cx / std::max(1.0, nx) < -1e-9
                          ? std::max(hresy / std::max(1.0, nx), hresz / std::max(1.0, nx + ns))
                          : kInf;

        if (opt.verbose) {
            std::fprintf(stderr,
                         "conic it %2d pcost %+12.5e gap %8.2e pres %8.2e dres %8.2e k/t %8.2e\n",
                         iter, cur.pcost, cur.gap, cur.pres, cur.dres, cur.kap / cur.tau);
        }

        if (!have_best || cur.score() < best.score()) {
            best = cur;
            have_best = true;
        }

        const bool gap_ok = cur.gap < opt.gap_tol_abs || cur.relgap < opt.gap_tol_rel;
        if ((-cx > 0.0 || -by - hz >= -opt.gap_tol_abs) && cur.pres < opt.feas_tol &&
            cur.dres < opt.feas_tol && gap_ok) {
            return finish(cur, SolveStatus::Optimal, "");
        }
        if (cur.dinfres < opt.feas_tol && cur.tau < cur.kap) {
            return finish(cur, SolveStatus::Unbounded,
                          "dual infeasibility certificate, c'x = " + std::to_string(cx));
        }
        if (cur.pinfres < opt.feas_tol && cur.tau < cur.kap) {
            return finish(cur, SolveStatus::Infeasible,
                          "primal infeasibility certificate, b'y + h'z = " +
                              std::to_string(by + hz));
        }
        if (iter >= opt.max_iterations || !std::isfinite(cur.pcost)) {
            break;
        }
        if (!update_scaling(cl, cur.s, cur.z, w, lambda)) {
            break;
        }
        kkt.factor(&w);
        auto u1 = kkt.solve(rhs1);

        rhs.head(nv) = rx;
        rhs.segment(nv, p) = -ry;
        rhs.tail(m) = cur.s - rz;
        auto u2 = kkt.solve(rhs);

        const double dtau_denom =
            cur.kap / cur.tau - (cf.c.dot(u1.x) + cf.b.dot(u1.y) + cf.h.dot(u1.z));
        const double dtau_aff =
            (rt - cur.kap + cf.c.dot(u2.x) + cf.b.dot(u2.y) + cf.h.dot(u2.z)) / dtau_denom;
        Eigen::VectorXd dz_aff = u2.z + dtau_aff * u1.z;
        Eigen::VectorXd w_dz_aff = scale_mult(cl, w, dz_aff);
        Eigen::VectorXd ds_by_w = -w_dz_aff - lambda;
        const double dkap_aff = -(cur.kap * cur.tau + cur.kap * dtau_aff) / cur.tau;

        const double alpha_aff =
            line_search(cl, lambda, ds_by_w, w_dz_aff, cur.tau, dtau_aff, cur.kap, dkap_aff);
        const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3.0), 1e-8, 0.9999);

        Eigen::VectorXd ds_comb = conic_product(cl, lambda, lambda) +
                                  conic_product(cl, ds_by_w, w_dz_aff) -
                                  sigma * mu * cone_identity(cl);
        Eigen::VectorXd lam_div = conic_division(cl, lambda, ds_comb);
        rhs.head(nv) = (1.0 - sigma) * rx;
        rhs.segment(nv, p) = -(1.0 - sigma) * ry;
        rhs.tail(m) = -(1.0 - sigma) * rz + scale_mult(cl, w, lam_div);
        u2 = kkt.solve(rhs);

        const double bkap = cur.kap * cur.tau + dkap_aff * dtau_aff - sigma * mu;
        const double dtau = ((1.0 - sigma) * rt - bkap / cur.tau + cf.c.dot(u2.x) +
                             cf.b.dot(u2.y) + cf.h.dot(u2.z)) /
                            dtau_denom;
        Eigen::VectorXd dx = u2.x + dtau * u1.x;
        Eigen::VectorXd dy = u2.y + dtau * u1.y;
        Eigen::VectorXd dz = u2.z + dtau * u1.z;
        Eigen::VectorXd w_dz = scale_mult(cl, w, dz);
        Eigen::VectorXd ds_by_w_c = -(lam_div + w_dz);
        const double dkap = -(bkap + cur.kap * dtau) / cur.tau;

        const double alpha =
            0.99 * line_search(cl, lambda, ds_by_w_c, w_dz, cur.tau, dtau, cur.kap, dkap);
        Eigen::VectorXd ds = scale_mult(cl, w, ds_by_w_c);

        cur.x += alpha * dx;
        cur.y += alpha * dy;
        cur.z += alpha * dz;
        cur.s += alpha * ds;
        cur.kap += alpha * dkap;
        cur.tau += alpha * dtau;

        if (alpha <= 1e-6) {
            break;
        }
    }

    const State& fin = have_best ? best : cur;
    if (fin.pres < opt.feas_accept && fin.dres < opt.feas_accept &&
        (fin.relgap < opt.gap_accept_rel || fin.gap < opt.gap_accept_rel)) {
        return finish(fin, SolveStatus::Optimal, "");
    }
    if (fin.pinfres < 1e-6 && fin.kap > fin.tau) {
        return finish(fin, SolveStatus::Infeasible, "primal infeasibility (reduced accuracy)");
    }
    if (fin.dinfres < 1e-6 && fin.kap > fin.tau) {
        return finish(fin, SolveStatus::Unbounded, "dual infeasibility (reduced accuracy)");
    }
    std::ostringstream os;
    os << "no convergence: pres " << fin.pres << " dres " << fin.dres << " relgap " << fin.relgap;
    return finish(fin, SolveStatus::NumericalFailure, os.str());
}

/* --------------------------------- primal-dual solver with quadratic cost */

IpmResult run_qp_ipm(const Lowered& lo, const SolveOptions& opt)
{
    ConeLayout cl;
    cl.num_lin = lo.num_lin;
    cl.soc_dims = lo.soc_dims;
    cl.rows = static_cast<int>(lo.G.rows());
    cl.degree = lo.num_lin + static_cast<int>(lo.soc_dims.size());

    const int nv = lo.num_orig;
    const int p = static_cast<int>(lo.A.rows());
    const int m = cl.rows;

    KktSystem kkt(&lo.P, lo.A, lo.G, cl);
    kkt.factor(nullptr);

    Eigen::VectorXd rhs(nv + p + m);
    rhs.head(nv) = -lo.q;
    rhs.segment(nv, p) = lo.b;
    rhs.tail(m) = lo.h;
    auto init = kkt.solve(rhs);
    Eigen::VectorXd x = init.x;
    Eigen::VectorXd y = init.y;
    Eigen::VectorXd s = bring_to_cone(cl, -init.z);
    Eigen::VectorXd z = bring_to_cone(cl, init.z);

    const double resx0 = std::max(1.0, lo.q.norm());
    const double resy0 = std::max(1.0, lo.b.norm());
    const double resz0 = std::max(1.0, lo.h.norm());

    Eigen::VectorXd lambda(m);
    Scaling w;

    IpmResult out;
    IpmResult best;
    double best_score = kInf;
    bool have_best = false;

    for (int iter = 0;; ++iter) {
        out.iterations = iter;

        Eigen::VectorXd px = lo.P * x;
        Eigen::VectorXd rx = px + lo.q + lo.A.transpose() * y + lo.G.transpose() * z;
        Eigen::VectorXd ry = lo.A * x - lo.b;
        Eigen::VectorXd rz = lo.G * x + s - lo.h;

        const double gap = s.dot(z);
        const double mu = gap / cl.degree;
        const double pcost = 0.5 * x.dot(px) + lo.q.dot(x);
        const double dcost = pcost + y.dot(ry) + z.dot(rz) - gap;
        double relgap = kInf;
        if (pcost < 0.0) {
            relgap = gap / (-pcost);
        } else if (dcost > 0.0) {
            relgap = gap / dcost;
        }
        const double pres =
            std::max(ry.norm() / std::max(1.0, resy0), rz.norm() / std::max(1.0, resz0));
        const double dres = rx.norm() / std::max(1.0, resx0);

        if (opt.verbose) {
            std::fprintf(stderr, "qp it %2d pcost %+12.5e gap %8.2e pres %8.2e dres %8.2e\n",
                         iter, pcost, gap, pres, dres);
        }

        const double score = std::max({pres, dres, std::min(relgap, gap)});
        if (!have_best || score < best_score) {
            best_score = score;
            best.x = x;
            best.y = y;
            best.z = z;
            best.s = s;
            best.pres = pres;
            best.dres = dres;
            best.gap = gap;
            best.relgap = relgap;
            best.pcost = pcost;
            best.dcost = dcost;
            have_best = true;
        }

        if (pres < opt.feas_tol && dres < opt.feas_tol &&
            (gap < opt.gap_tol_abs || relgap < opt.gap_tol_rel)) {
            out.status = SolveStatus::Optimal;
            out.x = x;
            out.y = y;
            out.z = z;
            out.s = s;
            out.pres = pres;
            out.dres = dres;
            out.gap = gap;
            out.relgap = relgap;
            out.pcost = pcost;
            out.dcost = dcost;
            return out;
        }
        if (iter >= opt.max_iterations || !std::isfinite(pcost)) {
            break;
        }
        if (!update_scaling(cl, s, z, w, lambda)) {
            break;
        }
        kkt.factor(&w);

        // Affine direction.
        rhs.head(nv) = -rx;
        rhs.segment(nv, p) = -ry;
        rhs.tail(m) = -rz + s;
        auto aff = kkt.solve(rhs);
        Eigen::VectorXd w_dz_aff = scale_mult(cl, w, aff.z);
        Eigen::VectorXd ds_by_w = -w_dz_aff - lambda;
        const double alpha_aff = line_search(cl, lambda, ds_by_w, w_dz_aff, 1.0, 0.0, 1.0, 0.0);

        Eigen::VectorXd s_aff = s + alpha_aff * scale_mult(cl, w, ds_by_w);
        Eigen::VectorXd z_aff = z + alpha_aff * aff.z;
        const double sigma =
            std::clamp(std::pow(s_aff.dot(z_aff) / gap, 3.0), 1e-8, 0.9999);

        // Combined direction with Mehrotra correction.
        Eigen::VectorXd ds_comb = conic_product(cl, lambda, lambda) +
                                  conic_product(cl, ds_by_w, w_dz_aff) -
                                  sigma * mu * cone_identity(cl);
        Eigen::VectorXd lam_div = conic_division(cl, lambda, ds_comb);
        rhs.head(nv) = -rx;
        rhs.segment(nv, p) = -ry;
        rhs.tail(m) = -rz + scale_mult(cl, w, lam_div);
        auto dir = kkt.solve(rhs);
        Eigen::VectorXd w_dz = scale_mult(cl, w, dir.z);
        Eigen::VectorXd ds_by_w_c = -(lam_div + w_dz);

        const double alpha =
            0.99 * line_search(cl, lambda, ds_by_w_c, w_dz, 1.0, 0.0, 1.0, 0.0);
        x += alpha * dir.x;
        y += alpha * dir.y;
        z += alpha * dir.z;
        s += alpha * scale_mult(cl, w, ds_by_w_c);

        if (alpha <= 1e-6) {
            break;
        }
    }

    if (have_best && best.pres < opt.feas_accept && best.dres < opt.feas_accept &&
        (best.relgap < opt.gap_accept_rel || best.gap < opt.gap_accept_rel)) {
        best.status = SolveStatus::Optimal;
        best.iterations = out.iterations;
        return best;
    }
    best.status = SolveStatus::NumericalFailure;
    best.iterations = out.iterations;
    std::ostringstream os;
    os << "no convergence: pres " << best.pres << " dres " << best.dres << " relgap "
       << best.relgap;
    best.note = os.str();
    return best;
}

/* ------------------------------------------------------- solution mapping */

Solution map_solution(const ConicProgram& p, const Lowered& lo, SolveStatus status,
                      const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& z, const SolverStats& stats)
{
    Solution sol;
    sol.status = status;
    sol.stats = stats;
    if (status != SolveStatus::Optimal) {
        return sol;
    }
    sol.primal = x.head(lo.num_orig);
    sol.objective = 0.5 * sol.primal.dot(lo.P * sol.primal) + lo.q.dot(sol.primal) + lo.qp_const;
    sol.stats.primal_objective = sol.objective;

    const auto& eqs = p.equalities();
    for (size_t i = 0; i < eqs.size(); ++i) {
        sol.duals[eqs[i].label.str()] = -y(static_cast<int>(i));
    }
    const auto& ineqs = p.inequalities();
    for (size_t i = 0; i < ineqs.size(); ++i) {
        sol.duals[ineqs[i].label.str()] = z(static_cast<int>(i));
    }
    for (const SocBlockInfo& info : lo.blocks) {
        const SocConstraint& c = p.socs()[static_cast<size_t>(info.source)];
        if (info.collapsed) {
            const double z0 = z(info.lin_row);
            Eigen::VectorXd block(static_cast<int>(c.tail.size()) + 1);
            block(0) = z0;
            if (info.tail_norm > 0.0) {
                for (size_t t = 0; t < c.tail.size(); ++t) {
                    block(static_cast<int>(t) + 1) = -z0 * c.tail[t].constant() / info.tail_norm;
                }
            } else {
                block.tail(block.size() - 1).setZero();
            }
            sol.duals[c.label.str()] = z0;
            sol.soc_dual_blocks[c.label.str()] = block;
        } else {
            sol.duals[c.label.str()] = z(info.first_row);
            sol.soc_dual_blocks[c.label.str()] = z.segment(info.first_row, info.dim);
        }
    }
    return sol;
}

/* ---------------------------------------------------------------- backends */

nlohmann::json standard_form_json(const ConicProgram& p, const Lowered& lo)
{
    const ConicForm cf = epigraph_form(p, lo);
    nlohmann::json j;
    j["num_vars"] = cf.num_vars;
    j["num_orig"] = lo.num_orig;
    j["c"] = std::vector<double>(cf.c.data(), cf.c.data() + cf.c.size());
    j["c_const"] = cf.c_const;
    auto triplets = [](const Eigen::MatrixXd& mat) {
        nlohmann::json t = nlohmann::json::array();
        for (int i = 0; i < mat.rows(); ++i) {
            for (int k = 0; k < mat.cols(); ++k) {
                if (mat(i, k) != 0.0) {
                    t.push_back({i, k, mat(i, k)});
                }
            }
        }
        return t;
    };
    j["A"] = triplets(cf.A);
    j["b"] = std::vector<double>(cf.b.data(), cf.b.data() + cf.b.size());
    j["G"] = triplets(cf.G);
    j["h"] = std::vector<double>(cf.h.data(), cf.h.data() + cf.h.size());
    j["num_eq"] = cf.A.rows();
    j["num_lin"] = cf.num_lin;
    j["soc_dims"] = cf.soc_dims;

    nlohmann::json labels = nlohmann::json::object();
    nlohmann::json eq_labels = nlohmann::json::array();
    for (const auto& c : p.equalities()) {
        eq_labels.push_back(c.label.str());
    }
    nlohmann::json lin_labels = nlohmann::json::array();
    for (const auto& c : p.inequalities()) {
        lin_labels.push_back(c.label.str());
    }
    labels["eq"] = eq_labels;
    labels["lin"] = lin_labels;
    j["labels"] = labels;
    return j;
}

Solution solve_with_reference(const ConicProgram& p, const Lowered& lo)
{
    const char* cmd = std::getenv("DLMP_REFERENCE_SOLVER");
    if (cmd == nullptr || *cmd == '\0') {
        throw Error("reference backend requested but DLMP_REFERENCE_SOLVER is not set");
    }
    char tmpl_in[] = "/tmp/dlmp_ref_in_XXXXXX";
    char tmpl_out[] = "/tmp/dlmp_ref_out_XXXXXX";
    if (mkstemp(tmpl_in) < 0 || mkstemp(tmpl_out) < 0) {
        throw Error("reference backend: cannot create temp files");
    }
    {
        std::ofstream f(tmpl_in);
        f << standard_form_json(p, lo).dump();
    }
    const std::string call = std::string(cmd) + " " + tmpl_in + " " + tmpl_out;
    const int rc = std::system(call.c_str());
    std::remove(tmpl_in);
    if (rc != 0) {
        std::remove(tmpl_out);
        throw Error("reference backend failed with exit code " + std::to_string(rc));
    }
    nlohmann::json j;
    {
        std::ifstream f(tmpl_out);
        f >> j;
    }
    std::remove(tmpl_out);

    SolverStats stats;
    stats.backend = "reference";
    const std::string status = j["status"].get<std::string>();
    if (status != "optimal") {
        Solution sol;
        sol.stats = stats;
        sol.status = status == "infeasible"
                         ? SolveStatus::Infeasible
                         : (status == "unbounded" ? SolveStatus::Unbounded
                                                  : SolveStatus::NumericalFailure);
        return sol;
    }
    auto vec = [&](const char* key) {
        const auto& arr = j[key];
        Eigen::VectorXd v(arr.size());
        for (size_t i = 0; i < arr.size(); ++i) {
            v(static_cast<int>(i)) = arr[i].get<double>();
        }
        return v;
    };
    Eigen::VectorXd x = vec("x"), y = vec("y"), z = vec("z");
    stats.iterations = j.value("iterations", 0);
    stats.gap_rel = j.value("relgap", 0.0);
    Solution sol = map_solution(p, lo, SolveStatus::Optimal, x.head(lo.num_orig), y, z, stats);
    sol.stats.dual_objective = sol.objective; // reference reports optimal pair
    return sol;
}

} // namespace

Solution solve(const ConicProgram& program, const SolveOptions& options)
{
    SolveOptions opt = options;
    if (const char* env = std::getenv("DLMP_BACKEND"); env != nullptr && *env != '\0') {
        opt.backend = env;
    }
    const Lowered lo = lower(program);
    if (opt.backend == "reference") {
        return solve_with_reference(program, lo);
    }
    if (opt.backend != "ipm") {
        throw Error("unknown solver backend '" + opt.backend + "'");
    }

    const auto t0 = std::chrono::steady_clock::now();
    IpmResult out;
    if (lo.has_quad) {
        out = run_qp_ipm(lo, opt);
        if (out.status == SolveStatus::NumericalFailure) {
            // The quadratic path carries no infeasibility certificates; let
            // the homogeneous solver classify the failure.
            IpmResult probe = run_conic_ipm(epigraph_form(program, lo), opt);
            if (probe.status == SolveStatus::Infeasible ||
                probe.status == SolveStatus::Unbounded) {
                out = probe;
            }
        }
    } else {
        ConicForm cf = epigraph_form(program, lo);
        out = run_conic_ipm(cf, opt);
    }
    const auto t1 = std::chrono::steady_clock::now();

    SolverStats stats;
    stats.backend = "ipm";
    stats.iterations = out.iterations;
    stats.primal_residual = out.pres;
    stats.dual_residual = out.dres;
    stats.gap_abs = out.gap;
    stats.gap_rel = out.relgap;
    stats.primal_objective = out.pcost + lo.qp_const;
    stats.dual_objective = out.dcost + lo.qp_const;
    stats.solve_seconds = std::chrono::duration<double>(t1 - t0).count();
    stats.note = out.note;

    if (out.status == SolveStatus::Optimal) {
        Solution sol = map_solution(program, lo, SolveStatus::Optimal, out.x.head(lo.num_orig),
                                    out.y, out.z, stats);
        sol.stats.dual_objective = out.dcost + lo.qp_const;
        return sol;
    }
    Solution sol;
    sol.status = out.status;
    sol.stats = stats;
    if (out.status == SolveStatus::NumericalFailure) {
        throw Error("conic solve failed: " + out.note);
    }
    return sol;
}

KktReport kkt_residuals(const ConicProgram& program, const Solution& solution)
{
    if (solution.status != SolveStatus::Optimal) {
        throw Error("kkt_residuals: solution is not optimal");
    }
    if (solution.primal.size() != program.num_variables()) {
        throw Error("kkt_residuals: solution does not match program");
    }
    const Eigen::VectorXd& x = solution.primal;

    // Stationarity: objective gradient at the primal point, minus
    // equality-dual terms, plus inequality/cone-dual terms.
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(program.num_variables());
    for (const auto& [var, coef] : program.linear_cost().coeffs()) {
        grad(var) += coef;
    }
    for (const QuadCost& q : program.quadratic_costs()) {
        const double e = q.expr.eval(x);
        for (const auto& [var, coef] : q.expr.coeffs()) {
            grad(var) += 2.0 * q.weight * e * coef;
        }
    }
    for (const EqConstraint& c : program.equalities()) {
        const double lam = solution.dual(c.label);
        for (const auto& [var, coef] : c.lhs.coeffs()) {
            grad(var) -= lam * coef;
        }
    }
    for (const IneqConstraint& c : program.inequalities()) {
        const double z = solution.dual(c.label);
        for (const auto& [var, coef] : c.lhs.coeffs()) {
            grad(var) += z * coef;
        }
    }
    for (const SocConstraint& c : program.socs()) {
        auto it = solution.soc_dual_blocks.find(c.label.str());
        if (it == solution.soc_dual_blocks.end()) {
            throw Error("kkt_residuals: missing cone dual for '" + c.label.str() + "'");
        }
        const Eigen::VectorXd& blk = it->second;
        for (const auto& [var, coef] : c.head.coeffs()) {
            grad(var) -= blk(0) * coef;
        }
        for (size_t t = 0; t < c.tail.size(); ++t) {
            for (const auto& [var, coef] : c.tail[t].coeffs()) {
                grad(var) -= blk(static_cast<int>(t) + 1) * coef;
            }
        }
    }

    KktReport rep;
    for (int v = 0; v < program.num_variables(); ++v) {
        const std::string& name = program.variable_name(v);
        const std::string group = name.substr(0, name.find('['));
        double& slot = rep.stationarity_by_group[group];
        slot = std::max(slot, std::abs(grad(v)));
        rep.max_stationarity = std::max(rep.max_stationarity, std::abs(grad(v)));
    }

    for (const EqConstraint& c : program.equalities()) {
        rep.max_primal_infeasibility =
            std::max(rep.max_primal_infeasibility, std::abs(c.lhs.eval(x) - c.rhs));
    }
    for (const IneqConstraint& c : program.inequalities()) {
        const double slack = c.rhs - c.lhs.eval(x);
        rep.max_primal_infeasibility = std::max(rep.max_primal_infeasibility, -slack);
        rep.max_complementarity =
            std::max(rep.max_complementarity, std::abs(solution.dual(c.label) * slack));
    }
    for (const SocConstraint& c : program.socs()) {
        double tail2 = 0.0;
        for (const LinExpr& e : c.tail) {
            const double v = e.eval(x);
            tail2 += v * v;
        }
        const double head = c.head.eval(x);
        rep.max_primal_infeasibility =
            std::max(rep.max_primal_infeasibility, std::sqrt(tail2) - head);
        const Eigen::VectorXd& blk = solution.soc_dual_blocks.at(c.label.str());
        double sz = head * blk(0);
        for (size_t t = 0; t < c.tail.size(); ++t) {
            sz += c.tail[t].eval(x) * blk(static_cast<int>(t) + 1);
        }
        rep.max_complementarity = std::max(rep.max_complementarity, std::abs(sz));
    }
    return rep;
}

double duality_gap(const ConicProgram& program, const Solution& solution)
{
    (void)program;
    if (solution.status != SolveStatus::Optimal) {
        throw Error("duality_gap: solution is not optimal");
    }
    const double p = solution.stats.primal_objective;
    const double d = solution.stats.dual_objective;
    return std::abs(p - d) / (1.0 + std::abs(p));
}

std::string dump_standard_form(const ConicProgram& program)
{
    const Lowered lo = lower(program);
    return standard_form_json(program, lo).dump(2);
}

} // namespace dlmp::conic
