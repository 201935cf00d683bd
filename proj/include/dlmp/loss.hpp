#pragma once

#include "dlmp/grid.hpp"
#include "dlmp/opf.hpp"
#include "dlmp/solver.hpp"

#include <string>
#include <utility>
#include <vector>

namespace dlmp::loss {

/// The printed sensitivity formulas lump active and reactive flow into both
/// matrices; the corrected mode differentiates the squared-current identity
/// instead. Both are kept selectable.
enum class SensitivityMode { Paper, Corrected };

const char* to_string(SensitivityMode m);
SensitivityMode sensitivity_mode_from_string(const std::string& s);

/// Optimum of the relaxed branch-flow model, used as the anchor for the
/// loss linearization. Vectors are indexed by node id (entry 0 unused for
/// edge quantities).
struct LinearizationPoint {
    Eigen::VectorXd gen_p, gen_q, alpha;
    Eigen::VectorXd flow_p, flow_q, current_sq;
    Eigen::VectorXd volt_sq; ///< includes the root at entry 0
    double objective = 0.0;
    double max_relaxation_gap = 0.0; ///< max over edges of |l - (fP^2+fQ^2)/u|
    std::vector<int> loose_edges;    ///< edges beyond the warning threshold
};

/// Tightness thresholds for the current-cone relaxation.
constexpr double kTightnessWarn = 1e-6;
constexpr double kTightnessFail = 1e-4;

/// Solves the branch-flow model and verifies relaxation tightness.
/// Edges beyond the warning threshold are listed in the result; beyond the
/// failure threshold the loss factors would be meaningless and this throws.
LinearizationPoint solve_linearization_point(const RadialNetwork& net,
                                             const conic::SolveOptions& options = {});

/// Edge-level squared-current sensitivities to nodal injections,
/// n x n (edges x non-root nodes). Requires positive voltages at the anchor.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> current_sensitivities(
    const LinearizationPoint& point, const TopologyMatrices& matrices, SensitivityMode mode);

/// Node-level fictitious-demand sensitivities and constant offsets.
struct LossFactorSet {
    SensitivityMode mode = SensitivityMode::Paper;
    Eigen::MatrixXd edge_p, edge_q;                     ///< n x n
    Eigen::MatrixXd node_pp, node_pq, node_qp, node_qq; ///< (n+1) x n
    Eigen::VectorXd fnd_p, fnd_q;                       ///< (n+1)
};

LossFactorSet fnd_sensitivities(const Eigen::MatrixXd& edge_p, const Eigen::MatrixXd& edge_q,
                                const RadialNetwork& net, const LinearizationPoint& point,
                                SensitivityMode mode);

/// Balance-constraint amendments for the model builder: linearized
/// fictitious demands around the anchor dispatch.
opf::LossAmendments loss_aware_balances(const LossFactorSet& set,
                                        const LinearizationPoint& point,
                                        const RadialNetwork& net);

/// Loss-aware structural matrices from a factor set.
TopologyMatrices build_matrices(const RadialNetwork& net, const LossFactorSet& set);

/// Full pipeline: linearization solve, sensitivities, matrices, amendments.
struct LossModel {
    LinearizationPoint point;
    LossFactorSet factors;
    TopologyMatrices matrices;
    opf::LossAmendments amendments;
};

LossModel compute_loss_model(const RadialNetwork& net, SensitivityMode mode,
                             const conic::SolveOptions& options = {});

} // namespace dlmp::loss
