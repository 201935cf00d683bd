#pragma once

#include "dlmp/conic.hpp"

#include <map>
#include <string>

namespace dlmp::conic {

struct SolveOptions {
    /// "ipm" for the built-in interior-point backend, "reference" for the
    /// external cross-check backend (requires DLMP_REFERENCE_SOLVER to point
    /// at the solver script). DLMP_BACKEND overrides when set.
    std::string backend = "ipm";

    // Targets the interior-point iteration aims for.
    double feas_tol = 1e-10;
    double gap_tol_abs = 1e-12;
    double gap_tol_rel = 5e-13;
    // Thresholds a returned iterate must meet to count as optimal.
    double feas_accept = 1e-8;
    double gap_accept_rel = 1e-8;
    int max_iterations = 100;
    bool verbose = false;
};

/// Solves the program with the selected backend. Duals are returned under a
/// fixed sign convention: inequality and cone multipliers are nonnegative,
/// equality duals equal the sensitivity of the optimal objective to the
/// right-hand side.
Solution solve(const ConicProgram& program, const SolveOptions& options = {});

struct KktReport {
    /// Max |stationarity residual| per variable group (name prefix before '[').
    std::map<std::string, double> stationarity_by_group;
    double max_stationarity = 0.0;
    double max_complementarity = 0.0;
    double max_primal_infeasibility = 0.0;
};

/// Evaluates first-order optimality residuals of `solution` against
/// `program`, with quadratic objective terms differentiated at the primal
/// point. Throws if the solution does not carry duals.
KktReport kkt_residuals(const ConicProgram& program, const Solution& solution);

/// Relative duality gap |primal - dual| / (1 + |primal|) of an optimal
/// solution. Throws on non-optimal status.
double duality_gap(const ConicProgram& program, const Solution& solution);

/// Serializes the lowered standard form plus labels; this is the exchange
/// format consumed by the reference backend script.
std::string dump_standard_form(const ConicProgram& program);

} // namespace dlmp::conic
