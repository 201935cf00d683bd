#pragma once

#include "dlmp/conic.hpp"
#include "dlmp/grid.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace dlmp::opf {

enum class ScenarioKind { Det, GenCC, VoltCC, LossVoltCC };

const char* to_string(ScenarioKind k);
ScenarioKind scenario_from_string(const std::string& s);

/// Inner polygonal approximation of the apparent-power disc: twelve
/// half-planes a1 fP + a2 fQ + a3 S <= 0.
struct PolygonApprox {
    std::array<std::array<double, 3>, 12> coeffs;
};

/// Regular inscribed dodecagon: face normals at angles (2c-1)pi/12 and
/// offset cos(pi/12) S, so the vertices touch the disc and the inradius is
/// cos(pi/12) S.
PolygonApprox build_polygon();

/// Fictitious-demand data extracted from a loss linearization, in the form
/// the model builder injects into nodal balances. Rows cover nodes 0..n,
/// columns the non-root injection nodes 1..n.
struct LossAmendments {
    Eigen::VectorXd fnd_p, fnd_q;             ///< constant offsets, size n+1
    Eigen::MatrixXd pp, pq, qp, qq;           ///< sensitivities, (n+1) x n
    Eigen::VectorXd anchor_gp, anchor_gq;     ///< linearization dispatch, size n+1
};

struct BuildOptions {
    ScenarioKind scenario = ScenarioKind::Det;
    bool flow_cc = false; ///< polygonal chance-constrained flow limits
};

/// A labeled scenario model plus the index maps needed to read its solution.
struct OpfModel {
    conic::ConicProgram program;
    ScenarioKind scenario = ScenarioKind::Det;
    bool flow_cc = false;
    RadialNetwork network;
    TopologyMatrices matrices;
    std::optional<LossAmendments> loss;
    PolygonApprox polygon;

    // Variable ids by node (or edge = downstream node); -1 when absent.
    std::vector<int> var_gp, var_gq, var_alpha;
    std::vector<int> var_fp, var_fq, var_u;
    std::vector<int> var_tv, var_rhov, var_tf, var_rhof;

    /// True when the model carries participation variables and chance
    /// margins. A stochastic scenario with zero covariance collapses onto
    /// the deterministic model, where the regulation price is identically
    /// zero.
    bool recourse = false;

    bool stochastic() const { return recourse; }

    double gen_p(const conic::Solution& s, int node) const;
    double gen_q(const conic::Solution& s, int node) const;
    double alpha(const conic::Solution& s, int node) const;
    double flow_p(const conic::Solution& s, int edge) const;
    double flow_q(const conic::Solution& s, int edge) const;
    double voltage_sq(const conic::Solution& s, int node) const; ///< node 0 gives u0

    /// Dual of the apparent-power limit in squared form (paper semantics):
    /// cone-head dual divided by 2 S_max. Zero when the scenario uses the
    /// polygonal form instead.
    double flow_limit_dual(const conic::Solution& s, int edge) const;

    /// Net stationarity contribution of the flow-limit machinery to the fP
    /// (resp. fQ) row of an edge; equals 2 fP eta for the cone form and the
    /// dual-weighted facet-normal sum for the polygonal form.
    double flow_congestion_p(const conic::Solution& s, int edge) const;
    double flow_congestion_q(const conic::Solution& s, int edge) const;
};

/// Objective contribution of one generator: (g+a)^2/(2b) plus, when an
/// alpha variable is given, alpha^2 s^2 / (2b).
void add_expected_cost(conic::ConicProgram& program, const DerData& der, double total_std,
                       int gp_var, int alpha_var);

/// Builds the scenario model. LossVoltCC requires `loss`.
OpfModel build_model(const RadialNetwork& net, const TopologyMatrices& matrices,
                     const BuildOptions& options,
                     const std::optional<LossAmendments>& loss = std::nullopt);

/// Relaxed branch-flow model with squared-current variables and losses;
/// used to compute the loss linearization point.
struct BranchFlowModel {
    conic::ConicProgram program;
    std::vector<int> var_gp, var_gq, var_alpha;
    std::vector<int> var_fp, var_fq, var_u, var_lcur;
};

BranchFlowModel build_branch_flow_model(const RadialNetwork& net);

} // namespace dlmp::opf
