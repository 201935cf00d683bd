#include "dlmp/opf.hpp"

#include <cmath>

namespace dlmp::opf {

using conic::LinExpr;
using conic::term;

const char* to_string(ScenarioKind k)
{
    switch (k) {
    case ScenarioKind::Det:
        return "det";
    case ScenarioKind::GenCC:
        return "gen-cc";
    case ScenarioKind::VoltCC:
        return "volt-cc";
    case ScenarioKind::LossVoltCC:
        return "lvolt-cc";
    }
    return "?";
}

ScenarioKind scenario_from_string(const std::string& s)
{
    if (s == "det") {
        return ScenarioKind::Det;
    }
    if (s == "gen-cc") {
        return ScenarioKind::GenCC;
    }
    if (s == "volt-cc") {
        return ScenarioKind::VoltCC;
    }
    if (s == "lvolt-cc") {
        return ScenarioKind::LossVoltCC;
    }
    throw Error("unknown scenario '" + s + "' (expected det|gen-cc|volt-cc|lvolt-cc)");
}

PolygonApprox build_polygon()
{
    PolygonApprox poly;
    const double pi = std::acos(-1.0);
    const double offset = -std::cos(pi / 12.0);
    for (int c = 1; c <= 12; ++c) {
        const double phi = (2 * c - 1) * pi / 12.0;
        poly.coeffs[static_cast<size_t>(c - 1)] = {std::cos(phi), std::sin(phi), offset};
    }
    return poly;
}

void add_expected_cost(conic::ConicProgram& program, const DerData& der, double total_std,
                       int gp_var, int alpha_var)
{
    if (!(der.b > 0.0)) {
        throw Error("expected cost: generator at node " + std::to_string(der.node) +
                    " has non-positive curvature");
    }
    LinExpr shifted = term(gp_var, 1.0);
    shifted.add_constant(der.a);
    program.add_quadratic_cost(shifted, 1.0 / (2.0 * der.b));
    program.add_linear_cost(LinExpr(der.cost_offset));
    if (alpha_var >= 0 && total_std > 0.0) {
        program.add_quadratic_cost(term(alpha_var, 1.0),
                                   total_std * total_std / (2.0 * der.b));
    }
}

namespace {

struct Builder {
    const RadialNetwork& net;
    const TopologyMatrices& tm;
    const BuildOptions& opt;
    const std::optional<LossAmendments>& loss;
    OpfModel m;
    int n;

    Builder(const RadialNetwork& net_, const TopologyMatrices& tm_, const BuildOptions& opt_,
            const std::optional<LossAmendments>& loss_)
        : net(net_), tm(tm_), opt(opt_), loss(loss_), n(net_.node_count())
    {
    }

    void declare_variables()
    {
        auto& p = m.program;
        const auto none = std::vector<int>(static_cast<size_t>(n) + 1, -1);
        m.var_gp = m.var_gq = m.var_alpha = none;
        m.var_fp = m.var_fq = m.var_u = none;
        m.var_tv = m.var_rhov = m.var_tf = m.var_rhof = none;

        for (const DerData& der : net.ders) {
            m.var_gp[static_cast<size_t>(der.node)] =
                p.add_variable("gP[" + std::to_string(der.node) + "]");
            m.var_gq[static_cast<size_t>(der.node)] =
                p.add_variable("gQ[" + std::to_string(der.node) + "]");
            if (m.stochastic()) {
                m.var_alpha[static_cast<size_t>(der.node)] =
                    p.add_variable("alpha[" + std::to_string(der.node) + "]");
            }
        }
        for (int i = 1; i <= n; ++i) {
            m.var_fp[static_cast<size_t>(i)] = p.add_variable("fP[" + std::to_string(i) + "]");
            m.var_fq[static_cast<size_t>(i)] = p.add_variable("fQ[" + std::to_string(i) + "]");
            m.var_u[static_cast<size_t>(i)] = p.add_variable("u[" + std::to_string(i) + "]");
        }
        const bool volt_cc =
            (m.scenario == ScenarioKind::VoltCC || m.scenario == ScenarioKind::LossVoltCC) &&
            m.stochastic();
        if (volt_cc) {
            for (int i = 1; i <= n; ++i) {
                m.var_tv[static_cast<size_t>(i)] = p.add_variable("tv[" + std::to_string(i) + "]");
                m.var_rhov[static_cast<size_t>(i)] =
                    p.add_variable("rhov[" + std::to_string(i) + "]");
            }
        }
        if (m.flow_cc && m.stochastic()) {
            for (int i = 1; i <= n; ++i) {
                m.var_tf[static_cast<size_t>(i)] = p.add_variable("tf[" + std::to_string(i) + "]");
                m.var_rhof[static_cast<size_t>(i)] =
                    p.add_variable("rhof[" + std::to_string(i) + "]");
            }
        }
    }

    void add_objective()
    {
        for (const DerData& der : net.ders) {
            add_expected_cost(m.program, der, m.stochastic() ? net.uncertainty.total_std : 0.0,
                              m.var_gp[static_cast<size_t>(der.node)],
                              m.var_alpha[static_cast<size_t>(der.node)]);
        }
    }

    void add_balances()
    {
        auto& p = m.program;
        for (int i = 0; i <= n; ++i) {
            LinExpr lhs_p, lhs_q;
            double rhs_p = net.nodes[static_cast<size_t>(i)].demand_p;
            double rhs_q = net.nodes[static_cast<size_t>(i)].demand_q;
            if (i > 0) {
                lhs_p.add(m.var_fp[static_cast<size_t>(i)], 1.0);
                lhs_q.add(m.var_fq[static_cast<size_t>(i)], 1.0);
            }
            if (m.var_gp[static_cast<size_t>(i)] >= 0) {
                lhs_p.add(m.var_gp[static_cast<size_t>(i)], 1.0);
                lhs_q.add(m.var_gq[static_cast<size_t>(i)], 1.0);
            }
            for (int j : net.children(i)) {
                lhs_p.add(m.var_fp[static_cast<size_t>(j)], -1.0);
                lhs_q.add(m.var_fq[static_cast<size_t>(j)], -1.0);
            }
            if (loss) {
                // Linearized fictitious nodal demand around the anchor
                // dispatch, plus the constant loss allocation.
                rhs_p += loss->fnd_p(i);
                rhs_q += loss->fnd_q(i);
                for (const DerData& der : net.ders) {
                    if (der.node == 0) {
                        continue;
                    }
                    const int j = der.node;
                    const int gp = m.var_gp[static_cast<size_t>(j)];
                    const int gq = m.var_gq[static_cast<size_t>(j)];
                    lhs_p.add(gp, loss->pp(i, j - 1));
                    lhs_p.add(gq, loss->pq(i, j - 1));
                    lhs_q.add(gp, loss->qp(i, j - 1));
                    lhs_q.add(gq, loss->qq(i, j - 1));
                    rhs_p += loss->pp(i, j - 1) * loss->anchor_gp(j) +
                             loss->pq(i, j - 1) * loss->anchor_gq(j);
                    rhs_q += loss->qp(i, j - 1) * loss->anchor_gp(j) +
                             loss->qq(i, j - 1) * loss->anchor_gq(j);
                }
            }
            p.add_eq(lhs_p, rhs_p, {"balance_p", i});
            p.add_eq(lhs_q, rhs_q, {"balance_q", i});
        }
    }

    void add_voltage_recursion()
    {
        auto& p = m.program;
        for (int i = 1; i <= n; ++i) {
            const EdgeData& e = net.edge(i);
            LinExpr lhs = term(m.var_u[static_cast<size_t>(i)], 1.0);
            lhs.add(m.var_fp[static_cast<size_t>(i)], 2.0 * e.resistance);
            lhs.add(m.var_fq[static_cast<size_t>(i)], 2.0 * e.reactance);
            double rhs = 0.0;
            if (e.ancestor == 0) {
                rhs = net.root_voltage_sq;
            } else {
                lhs.add(m.var_u[static_cast<size_t>(e.ancestor)], -1.0);
            }
            p.add_eq(lhs, rhs, {"volt_drop", i});
        }
    }

    void add_voltage_limits()
    {
        auto& p = m.program;
        const bool volt_cc = m.var_tv[1] >= 0;
        const double margin = 2.0 * net.uncertainty.z_voltage;
        for (int i = 1; i <= n; ++i) {
            const NodeData& nd = net.nodes[static_cast<size_t>(i)];
            LinExpr upper = term(m.var_u[static_cast<size_t>(i)], 1.0);
            LinExpr lower = term(m.var_u[static_cast<size_t>(i)], -1.0);
            if (volt_cc) {
                upper.add(m.var_tv[static_cast<size_t>(i)], margin);
                lower.add(m.var_tv[static_cast<size_t>(i)], margin);
            }
            p.add_ineq(upper, nd.u_max, {"volt_upper", i});
            p.add_ineq(lower, -nd.u_min, {"volt_lower", i});
        }
    }

    void add_generation_limits()
    {
        auto& p = m.program;
        const double margin =
            m.stochastic() ? net.uncertainty.z_gen * net.uncertainty.total_std : 0.0;
        for (const DerData& der : net.ders) {
            const int i = der.node;
            const int gp = m.var_gp[static_cast<size_t>(i)];
            const int gq = m.var_gq[static_cast<size_t>(i)];
            const int al = m.var_alpha[static_cast<size_t>(i)];
            // The substation models an unbounded source: no output chance
            // constraints, only explicit finite limits if the data has any.
            if (std::isfinite(der.p_max)) {
                LinExpr e = term(gp, 1.0);
                if (i != 0 && al >= 0 && margin > 0.0) {
                    e.add(al, margin);
                }
                p.add_ineq(e, der.p_max, {"gen_upper", i});
            }
            if (std::isfinite(der.p_min)) {
                LinExpr e = term(gp, -1.0);
                if (i != 0 && al >= 0 && margin > 0.0) {
                    e.add(al, margin);
                }
                p.add_ineq(e, -der.p_min, {"gen_lower", i});
            }
            if (std::isfinite(der.q_max)) {
                p.add_ineq(term(gq, 1.0), der.q_max, {"qgen_upper", i});
            }
            if (std::isfinite(der.q_min)) {
                p.add_ineq(term(gq, -1.0), -der.q_min, {"qgen_lower", i});
            }
        }
    }

    void add_participation()
    {
        if (!m.stochastic()) {
            return;
        }
        LinExpr sum;
        for (const DerData& der : net.ders) {
            sum.add(m.var_alpha[static_cast<size_t>(der.node)], 1.0);
        }
        m.program.add_eq(sum, 1.0, {"participation"});
    }

    void add_voltage_cc()
    {
        const bool volt_cc = m.var_tv[1] >= 0;
        if (!volt_cc) {
            return;
        }
        auto& p = m.program;
        const Eigen::MatrixXd& sens = tm.volt_sens_eff();
        const Eigen::MatrixXd& sens_inv = tm.volt_sens_inv_eff();
        const Eigen::MatrixXd& sqrt_cov = net.uncertainty.sigma_sqrt;
        const Eigen::RowVectorXd col_sums = Eigen::RowVectorXd::Ones(n) * sqrt_cov;

        for (int i = 1; i <= n; ++i) {
            // t_i >= || (sens_row_i + rho_i 1') sqrt_cov ||
            const Eigen::RowVectorXd base = sens.row(i - 1) * sqrt_cov;
            std::vector<LinExpr> tail;
            tail.reserve(static_cast<size_t>(n));
            for (int k = 0; k < n; ++k) {
                LinExpr e(base(k));
                e.add(m.var_rhov[static_cast<size_t>(i)], col_sums(k));
                tail.push_back(std::move(e));
            }
            p.add_soc(std::move(tail), term(m.var_tv[static_cast<size_t>(i)], 1.0),
                      {"volt_std", i});
        }
        for (int i = 1; i <= n; ++i) {
            LinExpr couple;
            for (int j = 1; j <= n; ++j) {
                couple.add(m.var_rhov[static_cast<size_t>(j)], sens_inv(i - 1, j - 1));
            }
            if (i != 0 && m.var_alpha[static_cast<size_t>(i)] >= 0) {
                couple.add(m.var_alpha[static_cast<size_t>(i)], -1.0);
            }
            p.add_eq(couple, 0.0, {"volt_couple", i});
        }
    }

    void add_flow_limits()
    {
        auto& p = m.program;
        const bool cc = m.flow_cc && m.stochastic();
        if (m.flow_cc && !cc) {
            // Deterministic polygonal limits (margins dropped).
            for (int i = 1; i <= n; ++i) {
                const double cap = net.edge(i).flow_limit;
                for (int c = 0; c < 12; ++c) {
                    const auto& a = m.polygon.coeffs[static_cast<size_t>(c)];
                    LinExpr e = term(m.var_fp[static_cast<size_t>(i)], a[0]);
                    e.add(m.var_fq[static_cast<size_t>(i)], a[1]);
                    p.add_ineq(e, -a[2] * cap, {"polygon", i, c + 1});
                }
            }
            return;
        }
        if (!cc) {
            for (int i = 1; i <= n; ++i) {
                p.add_soc({term(m.var_fp[static_cast<size_t>(i)], 1.0),
                           term(m.var_fq[static_cast<size_t>(i)], 1.0)},
                          LinExpr(net.edge(i).flow_limit), {"flow_limit", i});
            }
            return;
        }

        const Eigen::MatrixXd& path = tm.path_eff();
        Eigen::MatrixXd path_inv;
        if (tm.loss_aware) {
            path_inv = Eigen::PartialPivLU<Eigen::MatrixXd>(path).solve(
                Eigen::MatrixXd::Identity(n, n));
        } else {
            path_inv = tm.path_inv;
        }
        const Eigen::MatrixXd& sqrt_cov = net.uncertainty.sigma_sqrt;
        const Eigen::RowVectorXd col_sums = Eigen::RowVectorXd::Ones(n) * sqrt_cov;
        const double zf = net.uncertainty.z_flow;

        for (int i = 1; i <= n; ++i) {
            const Eigen::RowVectorXd base = path.row(i - 1) * sqrt_cov;
            std::vector<LinExpr> tail;
            tail.reserve(static_cast<size_t>(n));
            for (int k = 0; k < n; ++k) {
                LinExpr e(base(k));
                e.add(m.var_rhof[static_cast<size_t>(i)], -col_sums(k));
                tail.push_back(std::move(e));
            }
            p.add_soc(std::move(tail), term(m.var_tf[static_cast<size_t>(i)], 1.0),
                      {"flow_std", i});
        }
        for (int i = 1; i <= n; ++i) {
            LinExpr couple;
            for (int j = 1; j <= n; ++j) {
                couple.add(m.var_rhof[static_cast<size_t>(j)], path_inv(i - 1, j - 1));
            }
            if (m.var_alpha[static_cast<size_t>(i)] >= 0) {
                couple.add(m.var_alpha[static_cast<size_t>(i)], -1.0);
            }
            p.add_eq(couple, 0.0, {"flow_couple", i});
        }
        for (int i = 1; i <= n; ++i) {
            const double cap = net.edge(i).flow_limit;
            for (int c = 0; c < 12; ++c) {
                const auto& a = m.polygon.coeffs[static_cast<size_t>(c)];
                LinExpr e = term(m.var_fp[static_cast<size_t>(i)], a[0]);
                // The margin tightens every face along its own normal, so
                // it enters with |a1|; a signed margin would loosen the
                // faces that cap exports.
                e.add(m.var_tf[static_cast<size_t>(i)], std::abs(a[0]) * zf);
                e.add(m.var_fq[static_cast<size_t>(i)], a[1]);
                p.add_ineq(e, -a[2] * cap, {"polygon", i, c + 1});
            }
        }
    }
};

} // namespace

OpfModel build_model(const RadialNetwork& net, const TopologyMatrices& matrices,
                     const BuildOptions& options, const std::optional<LossAmendments>& loss)
{
    if (options.scenario == ScenarioKind::LossVoltCC && (!loss || !matrices.loss_aware)) {
        throw Error("lvolt-cc requires loss factors and loss-aware matrices");
    }
    Builder b(net, matrices, options, loss);
    b.m.scenario = options.scenario;
    b.m.flow_cc = options.flow_cc;
    b.m.network = net;
    b.m.matrices = matrices;
    b.m.loss = loss;
    b.m.polygon = build_polygon();
    b.m.recourse = options.scenario != ScenarioKind::Det && !net.uncertainty.degenerate();

    b.declare_variables();
    b.add_objective();
    b.add_balances();
    b.add_voltage_recursion();
    b.add_voltage_limits();
    b.add_generation_limits();
    b.add_participation();
    b.add_voltage_cc();
    b.add_flow_limits();
    return std::move(b.m);
}

double OpfModel::gen_p(const conic::Solution& s, int node) const
{
    const int v = var_gp.at(static_cast<size_t>(node));
    return v >= 0 ? s.value(v) : 0.0;
}

double OpfModel::gen_q(const conic::Solution& s, int node) const
{
    const int v = var_gq.at(static_cast<size_t>(node));
    return v >= 0 ? s.value(v) : 0.0;
}

double OpfModel::alpha(const conic::Solution& s, int node) const
{
    const int v = var_alpha.at(static_cast<size_t>(node));
    return v >= 0 ? s.value(v) : 0.0;
}

double OpfModel::flow_p(const conic::Solution& s, int edge) const
{
    return s.value(var_fp.at(static_cast<size_t>(edge)));
}

double OpfModel::flow_q(const conic::Solution& s, int edge) const
{
    return s.value(var_fq.at(static_cast<size_t>(edge)));
}

double OpfModel::voltage_sq(const conic::Solution& s, int node) const
{
    if (node == 0) {
        return network.root_voltage_sq;
    }
    return s.value(var_u.at(static_cast<size_t>(node)));
}

double OpfModel::flow_limit_dual(const conic::Solution& s, int edge) const
{
    const conic::Label label{"flow_limit", edge};
    if (!s.has_dual(label)) {
        return 0.0;
    }
    return s.dual(label) / (2.0 * network.edge(edge).flow_limit);
}

double OpfModel::flow_congestion_p(const conic::Solution& s, int edge) const
{
    const conic::Label cone{"flow_limit", edge};
    if (s.has_dual(cone)) {
        // Exact stationarity contribution of the cone; equals 2 fP eta at
        // perfect complementarity but stays exact at a flow-direction vertex.
        return -s.soc_dual_blocks.at(cone.str())(1);
    }
    double acc = 0.0;
    for (int c = 1; c <= 12; ++c) {
        acc += s.dual_or_zero({"polygon", edge, c}) * polygon.coeffs[static_cast<size_t>(c - 1)][0];
    }
    return acc;
}

double OpfModel::flow_congestion_q(const conic::Solution& s, int edge) const
{
    const conic::Label cone{"flow_limit", edge};
    if (s.has_dual(cone)) {
        return -s.soc_dual_blocks.at(cone.str())(2);
    }
    double acc = 0.0;
    for (int c = 1; c <= 12; ++c) {
        acc += s.dual_or_zero({"polygon", edge, c}) * polygon.coeffs[static_cast<size_t>(c - 1)][1];
    }
    return acc;
}

BranchFlowModel build_branch_flow_model(const RadialNetwork& net)
{
    const int n = net.node_count();
    BranchFlowModel m;
    auto& p = m.program;
    const auto none = std::vector<int>(static_cast<size_t>(n) + 1, -1);
    m.var_gp = m.var_gq = m.var_alpha = none;
    m.var_fp = m.var_fq = m.var_u = m.var_lcur = none;

    const bool stochastic = !net.uncertainty.degenerate();
    for (const DerData& der : net.ders) {
        m.var_gp[static_cast<size_t>(der.node)] =
            p.add_variable("gP[" + std::to_string(der.node) + "]");
        m.var_gq[static_cast<size_t>(der.node)] =
            p.add_variable("gQ[" + std::to_string(der.node) + "]");
        if (stochastic) {
            m.var_alpha[static_cast<size_t>(der.node)] =
                p.add_variable("alpha[" + std::to_string(der.node) + "]");
        }
    }
    for (int i = 1; i <= n; ++i) {
        m.var_fp[static_cast<size_t>(i)] = p.add_variable("fP[" + std::to_string(i) + "]");
        m.var_fq[static_cast<size_t>(i)] = p.add_variable("fQ[" + std::to_string(i) + "]");
        m.var_u[static_cast<size_t>(i)] = p.add_variable("u[" + std::to_string(i) + "]");
        m.var_lcur[static_cast<size_t>(i)] = p.add_variable("lcur[" + std::to_string(i) + "]");
    }

    for (const DerData& der : net.ders) {
        add_expected_cost(p, der, stochastic ? net.uncertainty.total_std : 0.0,
                          m.var_gp[static_cast<size_t>(der.node)],
                          m.var_alpha[static_cast<size_t>(der.node)]);
    }

    // Nodal balances with child-edge losses allocated upstream.
    for (int i = 0; i <= n; ++i) {
        LinExpr lhs_p, lhs_q;
        if (i > 0) {
            lhs_p.add(m.var_fp[static_cast<size_t>(i)], 1.0);
            lhs_q.add(m.var_fq[static_cast<size_t>(i)], 1.0);
        }
        if (m.var_gp[static_cast<size_t>(i)] >= 0) {
            lhs_p.add(m.var_gp[static_cast<size_t>(i)], 1.0);
            lhs_q.add(m.var_gq[static_cast<size_t>(i)], 1.0);
        }
        for (int j : net.children(i)) {
            const EdgeData& e = net.edge(j);
            lhs_p.add(m.var_fp[static_cast<size_t>(j)], -1.0);
            lhs_p.add(m.var_lcur[static_cast<size_t>(j)], -e.resistance);
            lhs_q.add(m.var_fq[static_cast<size_t>(j)], -1.0);
            lhs_q.add(m.var_lcur[static_cast<size_t>(j)], -e.reactance);
        }
        p.add_eq(lhs_p, net.nodes[static_cast<size_t>(i)].demand_p, {"balance_p", i});
        p.add_eq(lhs_q, net.nodes[static_cast<size_t>(i)].demand_q, {"balance_q", i});
    }

    for (int i = 1; i <= n; ++i) {
        const EdgeData& e = net.edge(i);
        // Receiving-end convention: u_i = u_anc - 2(r fP + x fQ) - (r^2+x^2) l.
        LinExpr lhs = term(m.var_u[static_cast<size_t>(i)], 1.0);
        lhs.add(m.var_fp[static_cast<size_t>(i)], 2.0 * e.resistance);
        lhs.add(m.var_fq[static_cast<size_t>(i)], 2.0 * e.reactance);
        lhs.add(m.var_lcur[static_cast<size_t>(i)],
                e.resistance * e.resistance + e.reactance * e.reactance);
        double rhs = 0.0;
        if (e.ancestor == 0) {
            rhs = net.root_voltage_sq;
        } else {
            lhs.add(m.var_u[static_cast<size_t>(e.ancestor)], -1.0);
        }
        p.add_eq(lhs, rhs, {"volt_drop", i});

        // fP^2 + fQ^2 <= l u as a rotated cone.
        LinExpr head = term(m.var_lcur[static_cast<size_t>(i)], 1.0);
        head.add(m.var_u[static_cast<size_t>(i)], 1.0);
        LinExpr diff = term(m.var_lcur[static_cast<size_t>(i)], 1.0);
        diff.add(m.var_u[static_cast<size_t>(i)], -1.0);
        p.add_soc({term(m.var_fp[static_cast<size_t>(i)], 2.0),
                   term(m.var_fq[static_cast<size_t>(i)], 2.0), diff},
                  head, {"current_cone", i});

        const NodeData& nd = net.nodes[static_cast<size_t>(i)];
        p.add_ineq(term(m.var_u[static_cast<size_t>(i)], 1.0), nd.u_max, {"volt_upper", i});
        p.add_ineq(term(m.var_u[static_cast<size_t>(i)], -1.0), -nd.u_min, {"volt_lower", i});

        // Apparent-power limits at both edge ends. The sending end carries
        // the edge loss on top of the receiving-end flow.
        p.add_soc({term(m.var_fp[static_cast<size_t>(i)], 1.0),
                   term(m.var_fq[static_cast<size_t>(i)], 1.0)},
                  LinExpr(e.flow_limit), {"flow_limit", i});
        LinExpr send_p = term(m.var_fp[static_cast<size_t>(i)], 1.0);
        send_p.add(m.var_lcur[static_cast<size_t>(i)], e.resistance);
        LinExpr send_q = term(m.var_fq[static_cast<size_t>(i)], 1.0);
        send_q.add(m.var_lcur[static_cast<size_t>(i)], e.reactance);
        p.add_soc({send_p, send_q}, LinExpr(e.flow_limit), {"flow_limit_send", i});
    }

    const double margin = stochastic ? net.uncertainty.z_gen * net.uncertainty.total_std : 0.0;
    for (const DerData& der : net.ders) {
        const int i = der.node;
        const int al = m.var_alpha[static_cast<size_t>(i)];
        if (std::isfinite(der.p_max)) {
            LinExpr e = term(m.var_gp[static_cast<size_t>(i)], 1.0);
            if (i != 0 && al >= 0 && margin > 0.0) {
                e.add(al, margin);
            }
            p.add_ineq(e, der.p_max, {"gen_upper", i});
        }
        if (std::isfinite(der.p_min)) {
            LinExpr e = term(m.var_gp[static_cast<size_t>(i)], -1.0);
            if (i != 0 && al >= 0 && margin > 0.0) {
                e.add(al, margin);
            }
            p.add_ineq(e, -der.p_min, {"gen_lower", i});
        }
        if (std::isfinite(der.q_max)) {
            p.add_ineq(term(m.var_gq[static_cast<size_t>(i)], 1.0), der.q_max, {"qgen_upper", i});
        }
        if (std::isfinite(der.q_min)) {
            p.add_ineq(term(m.var_gq[static_cast<size_t>(i)], -1.0), -der.q_min,
                       {"qgen_lower", i});
        }
    }
    if (stochastic) {
        LinExpr sum;
        for (const DerData& der : net.ders) {
            sum.add(m.var_alpha[static_cast<size_t>(der.node)], 1.0);
        }
        p.add_eq(sum, 1.0, {"participation"});
    }
    return m;
}

} // namespace dlmp::opf
