#pragma once

#include "dlmp/grid.hpp"
#include "dlmp/loss.hpp"
#include "dlmp/mc.hpp"
#include "dlmp/opf.hpp"
#include "dlmp/pricing.hpp"
#include "dlmp/solver.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace dlmp::run {

struct RunOptions {
    std::filesystem::path network_path;
    opf::ScenarioKind scenario = opf::ScenarioKind::Det;
    bool flow_cc = false;
    loss::SensitivityMode loss_mode = loss::SensitivityMode::Paper;
    long mc_samples = 0; ///< 0 disables the Monte Carlo stage
    uint64_t seed = 0;
    std::filesystem::path out_dir; ///< empty disables report files
    conic::SolveOptions solve;
};

/// One end-to-end scenario execution with all derived reports. Every
/// sub-report refers to the same solution instance.
struct ScenarioRun {
    RunOptions options;
    opf::OpfModel model;
    conic::Solution solution;
    conic::KktReport kkt;
    double rel_duality_gap = 0.0;
    pricing::DlmpReport dlmp;
    std::optional<pricing::GammaReport> gamma;
    std::optional<pricing::EquilibriumReport> equilibrium;
    std::optional<mc::MonteCarloReport> monte_carlo;
    std::optional<loss::LossModel> loss_model;
    std::map<std::string, double> stage_seconds;

    bool checks_pass = true;
    std::vector<std::string> check_failures;
};

/// Executes load, optional loss linearization, build, solve, decompositions,
/// equilibrium check and Monte Carlo validation; evaluates the invariant
/// checks; writes report files when an output directory is set.
ScenarioRun run_scenario(const RunOptions& options);

/// Same pipeline on an already-loaded network.
ScenarioRun run_scenario(const RadialNetwork& net, const RunOptions& options);

/// Per-node active-price differences b minus a. Throws when the runs are on
/// different networks.
std::vector<double> diff_scenarios(const ScenarioRun& a, const ScenarioRun& b);

void write_reports(const ScenarioRun& run, const std::filesystem::path& dir);

/// Fixed-precision number formatting shared by all report writers so that
/// identical inputs yield byte-identical files.
std::string fmt(double v);

} // namespace dlmp::run
