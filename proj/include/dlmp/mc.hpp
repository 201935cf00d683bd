#pragma once

#include "dlmp/conic.hpp"
#include "dlmp/opf.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dlmp::mc {

struct McOptions {
    long samples = 100000;
    uint64_t seed = 0;
    int threads = 0; ///< 0 = hardware concurrency
};

/// Empirical chance-constraint validation of a solved scenario. Rates are
/// indexed by node/edge id; entries without a corresponding constraint stay
/// at zero. Families that the scenario actually chance-constrains are
/// asserted against eps + 3 sigma; the others are reported only.
struct MonteCarloReport {
    long samples = 0;
    uint64_t seed = 0;

    std::vector<double> volt_upper_rate, volt_lower_rate, volt_joint_rate;
    std::vector<double> gen_upper_rate, gen_lower_rate, gen_joint_rate;
    std::vector<double> flow_rate;

    double sigma_volt = 0.0; ///< binomial std of a rate estimate at eps_v
    double sigma_gen = 0.0;
    double sigma_flow = 0.0;

    bool gen_asserted = false;
    bool volt_asserted = false;
    bool flow_asserted = false;

    double cost_sample_mean = 0.0;
    double cost_analytic = 0.0;
    double cost_rel_error = 0.0;

    std::vector<double> volt_std_sample;   ///< per node 1..n
    std::vector<double> volt_std_analytic; ///< formula value at the solved alpha
    double volt_std_max_rel_error = 0.0;

    bool pass = true;
    std::vector<std::string> failures;
};

MonteCarloReport monte_carlo_validate(const opf::OpfModel& model, const conic::Solution& sol,
                                      const McOptions& options);

} // namespace dlmp::mc
