#pragma once

#include "dlmp/conic.hpp"
#include "dlmp/grid.hpp"
#include "dlmp/opf.hpp"

#include <string>
#include <vector>

namespace dlmp::pricing {

/// Itemized nodal price: both the neighbor-recursive and the
/// voltage-constraint forms of the active-power price identity, with their
/// reconstruction residuals.
struct NodePrice {
    int node = 0;
    double price_p = 0.0;
    double price_q = 0.0;

    // Recursive form: price = ancestor + reactive coupling + congestion.
    double ancestor_price_p = 0.0;
    double reactive_coupling = 0.0;  ///< (price_q - ancestor_price_q) r/x
    double congestion_recursive = 0.0;
    double recursive_residual = 0.0;

    // Voltage form: price = ancestor + voltage term + congestion.
    double voltage_term = 0.0; ///< -2 r sum of downstream (mu+ - mu-)
    double congestion_direct = 0.0;
    double voltage_residual = 0.0;

    double mu_upper = 0.0;
    double mu_lower = 0.0;
};

struct DlmpReport {
    double root_price_p = 0.0;
    double root_price_q = 0.0;
    std::vector<NodePrice> nodes; ///< non-root nodes in id order
    double max_recursive_residual = 0.0;
    double max_voltage_residual = 0.0;
};

DlmpReport decompose_dlmp(const opf::OpfModel& model, const conic::Solution& sol);

/// Balancing-regulation price decomposition. All components are already
/// divided by the curvature sum so they add up to the dual itself.
struct GammaReport {
    double dual = 0.0;            ///< dual of the participation constraint
    double term_uncertainty = 0.0; ///< s^2 / sum b
    double term_gen_limits = 0.0;  ///< z s sum (delta+ + delta-) b / sum b
    double term_voltage = 0.0;     ///< sum b nu / sum b
    double term_flow = 0.0;        ///< flow-coupling analogue when flow CC is on
    double reconstructed = 0.0;
    double residual = 0.0;

    std::vector<double> nu_dual;     ///< voltage coupling duals by node 1..n
    std::vector<double> nu_analytic; ///< recomputed from binding voltage data
    std::vector<double> nu_flow_dual; ///< flow coupling duals by node 1..n
    double max_nu_mismatch = 0.0;
    std::vector<int> degenerate_nodes; ///< zero stddev with nonzero mu
};

GammaReport decompose_gamma(const opf::OpfModel& model, const conic::Solution& sol);

/// Closed-form profit-maximizing dispatch of one producer at given prices.
struct ProducerResponse {
    double gen_p = 0.0;
    double alpha = 0.0;
    int binding_case = 1; ///< 1 interior, 2 upper, 3 lower, 4 both
    std::string condition; ///< the price-region condition that selected it
};

ProducerResponse best_response(double price_gen, double price_alpha, const DerData& der,
                               const UncertaintySpec& u);

struct EquilibriumEntry {
    int node = 0;
    double gen_dso = 0.0, alpha_dso = 0.0;
    double gen_der = 0.0, alpha_der = 0.0;
    double gen_deviation = 0.0;   ///< gen_der - gen_dso
    double alpha_deviation = 0.0; ///< alpha_der - alpha_dso
    double predicted_alpha_deviation = 0.0; ///< b nu / s^2
    double gen_limit_duals = 0.0;           ///< delta+ + delta- at the DSO optimum
    int binding_case = 1;
};

struct EquilibriumReport {
    std::vector<EquilibriumEntry> producers; ///< non-root DERs
    double max_gen_deviation = 0.0;
    double max_alpha_deviation = 0.0;
    /// max |alpha_deviation - predicted| over producers with inactive
    /// generation limits (the closed-form identity presumes them inactive).
    double max_distortion_residual = 0.0;
};

EquilibriumReport equilibrium_check(const opf::OpfModel& model, const conic::Solution& sol);

/// Reconstructs each non-root producer's optimal output from prices and
/// loss factors; requires a loss-aware model.
struct ReconstructedOutput {
    int node = 0;
    double gen_p = 0.0;
    double loss_price_term = 0.0; ///< the loss-factor price adjustment
};

std::vector<ReconstructedOutput> production_from_prices(const opf::OpfModel& model,
                                                        const conic::Solution& sol);

/// Standard deviation of a node's squared voltage implied by the solved
/// participation vector (twice the cone norm).
double voltage_stddev(const opf::OpfModel& model, const conic::Solution& sol, int node);

} // namespace dlmp::pricing
