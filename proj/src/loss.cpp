#include "dlmp/loss.hpp"

#include <cmath>
#include <sstream>

namespace dlmp::loss {

const char* to_string(SensitivityMode m)
{
    return m == SensitivityMode::Paper ? "paper" : "corrected";
}

SensitivityMode sensitivity_mode_from_string(const std::string& s)
{
    if (s == "paper") {
        return SensitivityMode::Paper;
    }
    if (s == "corrected") {
        return SensitivityMode::Corrected;
    }
    throw Error("unknown loss sensitivity mode '" + s + "' (expected paper|corrected)");
}

LinearizationPoint solve_linearization_point(const RadialNetwork& net,
                                             const conic::SolveOptions& options)
{
    const int n = net.node_count();
    opf::BranchFlowModel model = opf::build_branch_flow_model(net);
    conic::Solution sol = conic::solve(model.program, options);
    if (sol.status != conic::SolveStatus::Optimal) {
        throw Error(std::string("branch-flow model did not solve: ") +
                    conic::to_string(sol.status));
    }

    LinearizationPoint pt;
    pt.gen_p = Eigen::VectorXd::Zero(n + 1);
    pt.gen_q = Eigen::VectorXd::Zero(n + 1);
    pt.alpha = Eigen::VectorXd::Zero(n + 1);
    pt.flow_p = Eigen::VectorXd::Zero(n + 1);
    pt.flow_q = Eigen::VectorXd::Zero(n + 1);
    pt.current_sq = Eigen::VectorXd::Zero(n + 1);
    pt.volt_sq = Eigen::VectorXd::Zero(n + 1);
    pt.volt_sq(0) = net.root_voltage_sq;
    pt.objective = sol.objective;

    for (int i = 0; i <= n; ++i) {
        if (model.var_gp[static_cast<size_t>(i)] >= 0) {
            pt.gen_p(i) = sol.value(model.var_gp[static_cast<size_t>(i)]);
            pt.gen_q(i) = sol.value(model.var_gq[static_cast<size_t>(i)]);
        }
        if (model.var_alpha[static_cast<size_t>(i)] >= 0) {
            pt.alpha(i) = sol.value(model.var_alpha[static_cast<size_t>(i)]);
        }
        if (i > 0) {
            pt.flow_p(i) = sol.value(model.var_fp[static_cast<size_t>(i)]);
            pt.flow_q(i) = sol.value(model.var_fq[static_cast<size_t>(i)]);
            pt.current_sq(i) = sol.value(model.var_lcur[static_cast<size_t>(i)]);
            pt.volt_sq(i) = sol.value(model.var_u[static_cast<size_t>(i)]);
        }
    }

    for (int i = 1; i <= n; ++i) {
        const double implied =
            (pt.flow_p(i) * pt.flow_p(i) + pt.flow_q(i) * pt.flow_q(i)) / pt.volt_sq(i);
        const double gap = std::abs(pt.current_sq(i) - implied);
        pt.max_relaxation_gap = std::max(pt.max_relaxation_gap, gap);
        if (gap > kTightnessWarn) {
            pt.loose_edges.push_back(i);
        }
    }
    if (pt.max_relaxation_gap > kTightnessFail) {
        std::ostringstream os;
        os << "branch-flow relaxation is not tight (max gap " << pt.max_relaxation_gap
           << " on edges";
        for (int e : pt.loose_edges) {
            os << ' ' << e;
        }
        os << "); loss factors would be invalid";
        throw Error(os.str());
    }
    return pt;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> current_sensitivities(
    const LinearizationPoint& point, const TopologyMatrices& matrices, SensitivityMode mode)
{
    const int n = static_cast<int>(matrices.path.rows());
    Eigen::MatrixXd lp(n, n), lq(n, n);
    for (int i = 1; i <= n; ++i) {
        const double u = point.volt_sq(i);
        if (!(u > 0.0)) {
            throw Error("current sensitivities: zero squared voltage at node " +
                        std::to_string(i));
        }
        for (int k = 1; k <= n; ++k) {
            const double on_path = matrices.path(i - 1, k - 1);
            if (mode == SensitivityMode::Paper) {
                const double v =
                    (2.0 * point.flow_p(i) + 2.0 * point.flow_q(i)) * on_path / u;
                lp(i - 1, k - 1) = v;
                lq(i - 1, k - 1) = v;
            } else {
                lp(i - 1, k - 1) = 2.0 * point.flow_p(i) * on_path / u;
                lq(i - 1, k - 1) = 2.0 * point.flow_q(i) * on_path / u;
            }
        }
    }
    return {lp, lq};
}

LossFactorSet fnd_sensitivities(const Eigen::MatrixXd& edge_p, const Eigen::MatrixXd& edge_q,
                                const RadialNetwork& net, const LinearizationPoint& point,
                                SensitivityMode mode)
{
    const int n = net.node_count();
    if (edge_p.rows() != n || edge_p.cols() != n || edge_q.rows() != n || edge_q.cols() != n) {
        throw Error("fnd sensitivities: edge matrices must be n x n");
    }
    LossFactorSet set;
    set.mode = mode;
    set.edge_p = edge_p;
    set.edge_q = edge_q;
    set.node_pp = Eigen::MatrixXd::Zero(n + 1, n);
    set.node_pq = Eigen::MatrixXd::Zero(n + 1, n);
    set.node_qp = Eigen::MatrixXd::Zero(n + 1, n);
    set.node_qq = Eigen::MatrixXd::Zero(n + 1, n);
    set.fnd_p = Eigen::VectorXd::Zero(n + 1);
    set.fnd_q = Eigen::VectorXd::Zero(n + 1);

    for (int i = 0; i <= n; ++i) {
        for (int k : net.children(i)) {
            const EdgeData& e = net.edge(k);
            set.fnd_p(i) += point.current_sq(k) * e.resistance;
            set.fnd_q(i) += point.current_sq(k) * e.reactance;
            for (int j = 1; j <= n; ++j) {
                set.node_pp(i, j - 1) += edge_p(k - 1, j - 1) * e.resistance;
                set.node_pq(i, j - 1) += edge_q(k - 1, j - 1) * e.resistance;
                set.node_qp(i, j - 1) += edge_p(k - 1, j - 1) * e.reactance;
                set.node_qq(i, j - 1) += edge_q(k - 1, j - 1) * e.reactance;
            }
        }
    }
    return set;
}

opf::LossAmendments loss_aware_balances(const LossFactorSet& set,
                                        const LinearizationPoint& point,
                                        const RadialNetwork& net)
{
    const int n = net.node_count();
    if (set.node_pp.rows() != n + 1 || set.node_pp.cols() != n) {
        throw Error("loss-aware balances: factor set does not match the network");
    }
    opf::LossAmendments am;
    am.fnd_p = set.fnd_p;
    am.fnd_q = set.fnd_q;
    am.pp = set.node_pp;
    am.pq = set.node_pq;
    am.qp = set.node_qp;
    am.qq = set.node_qq;
    am.anchor_gp = point.gen_p;
    am.anchor_gq = point.gen_q;
    return am;
}

TopologyMatrices build_matrices(const RadialNetwork& net, const LossFactorSet& set)
{
    const int n = net.node_count();
    return dlmp::build_matrices(net, set.node_pp.bottomRows(n), set.node_qp.bottomRows(n));
}

LossModel compute_loss_model(const RadialNetwork& net, SensitivityMode mode,
                             const conic::SolveOptions& options)
{
    LossModel lm;
    lm.point = solve_linearization_point(net, options);
    TopologyMatrices plain = dlmp::build_matrices(net);
    auto [lp, lq] = current_sensitivities(lm.point, plain, mode);
    lm.factors = fnd_sensitivities(lp, lq, net, lm.point, mode);
    lm.matrices = build_matrices(net, lm.factors);
    lm.amendments = loss_aware_balances(lm.factors, lm.point, net);
    return lm;
}

} // namespace dlmp::loss
