#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace dlmp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input data failed schema or structural checks. Messages carry the
/// offending node/edge identifier.
struct ValidationError : Error {
    using Error::Error;
};

struct NodeData {
    double demand_p = 0.0; ///< net active demand, p.u.
    double demand_q = 0.0; ///< net reactive demand, p.u.
    double u_min = 0.0;    ///< squared-voltage lower bound, p.u.^2
    double u_max = 0.0;    ///< squared-voltage upper bound, p.u.^2
};

struct EdgeData {
    int node = 0;     ///< downstream node; edges are indexed by it
    int ancestor = 0; ///< upstream node
    double resistance = 0.0;
    double reactance = 0.0;
    double flow_limit = 0.0; ///< apparent-power limit, p.u.
};

/// Controllable generator. The entry at node 0 models the substation
/// supply; its output limits default to unbounded.
struct DerData {
    static constexpr double kUnbounded = std::numeric_limits<double>::infinity();

    int node = 0;
    double p_min = -kUnbounded;
    double p_max = kUnbounded;
    double q_min = -kUnbounded;
    double q_max = kUnbounded;

    // Quadratic cost in standard form plus the shifted form used by the
    // closed-form pricing expressions: c2 = 1/(2b), c1 = a/b.
    double c2 = 0.0;
    double c1 = 0.0;
    double c0 = 0.0;
    double a = 0.0;
    double b = 0.0;

    /// Constant offset between the stated c0 and the shifted-form constant
    /// a^2/(2b); added to reported objectives so they match the input data.
    double cost_offset = 0.0;

    bool has_p_limits() const { return std::isfinite(p_min) || std::isfinite(p_max); }
    bool has_q_limits() const { return std::isfinite(q_min) || std::isfinite(q_max); }
};

/// Forecast-error model over the non-root nodes 1..n.
struct UncertaintySpec {
    Eigen::MatrixXd sigma;      ///< covariance, n x n
    Eigen::MatrixXd sigma_sqrt; ///< symmetric PSD square root of sigma
    double total_std = 0.0;     ///< s = sqrt(e' sigma e)

    double eps_gen = 0.05;
    double eps_voltage = 0.01;
    double eps_flow = 0.05;
    double z_gen = 0.0;     ///< (1-eps_gen)-quantile
    double z_voltage = 0.0; ///< (1-eps_voltage)-quantile
    double z_flow = 0.0;    ///< (1-eps_flow)-quantile

    bool degenerate() const { return total_std <= 0.0; }

    static UncertaintySpec from_covariance(Eigen::MatrixXd sigma, double eps_gen,
                                           double eps_voltage, double eps_flow);
    static UncertaintySpec from_std_devs(const Eigen::VectorXd& std_devs, double eps_gen,
                                         double eps_voltage, double eps_flow);
    /// Returns a copy with the covariance scaled by `factor` (variance scale).
    UncertaintySpec scaled(double factor) const;
};

struct TopologySets {
    int ancestor = -1; ///< -1 for the root
    std::vector<int> children;
    std::vector<int> downstream; ///< includes the node itself, ascending order
};

/// Rooted radial network. Node ids are 0..n with 0 the substation; the edge
/// feeding node i is indexed by i. Immutable once validated.
class RadialNetwork {
public:
    double base_mva = 1.0;
    double root_voltage_sq = 1.0;
    std::vector<NodeData> nodes; ///< size n+1
    std::vector<EdgeData> edges; ///< size n, edges[i-1] feeds node i
    std::vector<DerData> ders;   ///< ascending by node, substation entry first
    UncertaintySpec uncertainty;

    int node_count() const { return static_cast<int>(nodes.size()) - 1; }

    const EdgeData& edge(int node) const { return edges.at(static_cast<size_t>(node) - 1); }
    int ancestor(int node) const { return node == 0 ? -1 : edge(node).ancestor; }
    const std::vector<int>& children(int node) const { return children_.at(static_cast<size_t>(node)); }
    /// Non-root nodes ordered ancestors-first.
    const std::vector<int>& topological_order() const { return topo_; }

    const DerData* der_at(int node) const;
    bool has_der(int node) const { return der_at(node) != nullptr; }

    Eigen::VectorXd demand_p_vec() const; ///< entries 1..n
    Eigen::VectorXd demand_q_vec() const;

    /// Builds adjacency and checks every structural invariant.
    /// Throws ValidationError identifying the offending node or edge.
    void finalize();

private:
    std::vector<std::vector<int>> children_;
    std::vector<int> topo_;
};

TopologySets topology_sets(const RadialNetwork& net, int node);

/// Structural matrices shared by every model builder. `path` is the 0/1
/// edge-on-path-to-node matrix; `volt_sens` maps nodal active injections to
/// squared-voltage drops; `volt_sens_x` is its reactance analogue.
struct TopologyMatrices {
    Eigen::MatrixXd path;          // n x n, rows = edges, cols = nodes
    Eigen::MatrixXd path_inv;      // closed-form inverse of path
    Eigen::MatrixXd volt_sens;     // path' diag(r) path
    Eigen::MatrixXd volt_sens_inv; // inverse of volt_sens
    Eigen::MatrixXd volt_sens_x;   // path' diag(x) path

    bool loss_aware = false;
    Eigen::MatrixXd path_loss;          // loss-aware path matrix
    Eigen::MatrixXd volt_sens_loss;     // loss-aware voltage sensitivity
    Eigen::MatrixXd volt_sens_loss_inv; // its inverse

    /// Matrices actually used by chance-constraint machinery: the loss-aware
    /// variants when present, the plain ones otherwise.
    const Eigen::MatrixXd& path_eff() const { return loss_aware ? path_loss : path; }
    const Eigen::MatrixXd& volt_sens_eff() const { return loss_aware ? volt_sens_loss : volt_sens; }
    const Eigen::MatrixXd& volt_sens_inv_eff() const
    {
        return loss_aware ? volt_sens_loss_inv : volt_sens_inv;
    }
};

TopologyMatrices build_matrices(const RadialNetwork& net);

/// Loss-aware variant. `fnd_sens_pp` and `fnd_sens_qp` are the n x n blocks
/// (non-root rows) of the fictitious-demand sensitivities with respect to
/// active injections.
TopologyMatrices build_matrices(const RadialNetwork& net, const Eigen::MatrixXd& fnd_sens_pp,
                                const Eigen::MatrixXd& fnd_sens_qp);

RadialNetwork load_network(const std::string& json_text);
RadialNetwork load_network_file(const std::filesystem::path& path);

} // namespace dlmp
