#include "dlmp/run.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace dlmp::run {

namespace {

class StageTimer {
public:
    StageTimer(std::map<std::string, double>& sink, std::string name)
        : sink_(sink), name_(std::move(name)), t0_(std::chrono::steady_clock::now())
    {
    }
    ~StageTimer()
    {
        sink_[name_] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::map<std::string, double>& sink_;
    std::string name_;
    std::chrono::steady_clock::time_point t0_;
};

void evaluate_checks(ScenarioRun& r)
{
    auto fail = [&](const std::string& why) {
        r.checks_pass = false;
        r.check_failures.push_back(why);
    };
    if (r.kkt.max_stationarity > 1e-6) {
        fail("stationarity residual " + fmt(r.kkt.max_stationarity) + " above 1e-6");
    }
    if (r.kkt.max_complementarity > 1e-6) {
        fail("complementarity residual " + fmt(r.kkt.max_complementarity) + " above 1e-6");
    }
    if (r.kkt.max_primal_infeasibility > 1e-8) {
        fail("primal infeasibility " + fmt(r.kkt.max_primal_infeasibility) + " above 1e-8");
    }
    if (r.rel_duality_gap > 1e-8) {
        fail("relative duality gap " + fmt(r.rel_duality_gap) + " above 1e-8");
    }
    if (r.dlmp.max_recursive_residual > 1e-5) {
        fail("recursive price identity residual " + fmt(r.dlmp.max_recursive_residual) +
             " above 1e-5");
    }
    if (r.dlmp.max_voltage_residual > 1e-5) {
        fail("voltage-form price identity residual " + fmt(r.dlmp.max_voltage_residual) +
             " above 1e-5");
    }
    if (r.gamma) {
        if (std::abs(r.gamma->residual) > 1e-5) {
            fail("regulation price reconstruction residual " + fmt(r.gamma->residual) +
                 " above 1e-5");
        }
        if (r.gamma->max_nu_mismatch > 1e-4) {
            fail("voltage-coupling dual vs analytic mismatch " + fmt(r.gamma->max_nu_mismatch) +
                 " above 1e-4");
        }
    }
    if (r.equilibrium) {
        if (r.model.scenario == opf::ScenarioKind::GenCC) {
            if (r.equilibrium->max_gen_deviation > 1e-5 ||
                r.equilibrium->max_alpha_deviation > 1e-5) {
                fail("producer best responses deviate from dispatch beyond 1e-5");
            }
        } else if (r.equilibrium->max_distortion_residual > 1e-4) {
            fail("participation distortion identity residual " +
                 fmt(r.equilibrium->max_distortion_residual) + " above 1e-4");
        }
    }
    if (r.monte_carlo && !r.monte_carlo->pass) {
        for (const std::string& f : r.monte_carlo->failures) {
            fail("monte carlo: " + f);
        }
    }
    if (r.model.scenario == opf::ScenarioKind::LossVoltCC) {
        for (const auto& rec : pricing::production_from_prices(r.model, r.solution)) {
            const double solved = r.model.gen_p(r.solution, rec.node);
            if (std::abs(rec.gen_p - solved) > 1e-5) {
                fail("price-reconstructed output at node " + std::to_string(rec.node) +
                     " deviates by " + fmt(rec.gen_p - solved));
            }
        }
    }
}

} // namespace

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

ScenarioRun run_scenario(const RunOptions& options)
{
    RadialNetwork net;
    {
        net = load_network_file(options.network_path);
    }
    return run_scenario(net, options);
}

ScenarioRun run_scenario(const RadialNetwork& net, const RunOptions& options)
{
    ScenarioRun r;
    r.options = options;

    std::optional<opf::LossAmendments> amendments;
    TopologyMatrices matrices;
    if (options.scenario == opf::ScenarioKind::LossVoltCC) {
        StageTimer t(r.stage_seconds, "loss_linearization");
        r.loss_model = loss::compute_loss_model(net, options.loss_mode, options.solve);
        matrices = r.loss_model->matrices;
        amendments = r.loss_model->amendments;
    } else {
        StageTimer t(r.stage_seconds, "matrices");
        matrices = build_matrices(net);
    }

    {
        StageTimer t(r.stage_seconds, "build");
        opf::BuildOptions bo;
        bo.scenario = options.scenario;
        bo.flow_cc = options.flow_cc;
        r.model = opf::build_model(net, matrices, bo, amendments);
    }
    {
        StageTimer t(r.stage_seconds, "solve");
        r.solution = conic::solve(r.model.program, options.solve);
    }
    if (r.solution.status != conic::SolveStatus::Optimal) {
        throw Error(std::string("scenario solve ended with status ") +
                    conic::to_string(r.solution.status) +
                    (r.solution.stats.note.empty() ? "" : ": " + r.solution.stats.note));
    }
    {
        StageTimer t(r.stage_seconds, "diagnostics");
        r.kkt = conic::kkt_residuals(r.model.program, r.solution);
        r.rel_duality_gap = conic::duality_gap(r.model.program, r.solution);
        r.dlmp = pricing::decompose_dlmp(r.model, r.solution);
        if (r.model.stochastic()) {
            r.gamma = pricing::decompose_gamma(r.model, r.solution);
            r.equilibrium = pricing::equilibrium_check(r.model, r.solution);
        }
    }
    if (options.mc_samples > 0) {
        StageTimer t(r.stage_seconds, "monte_carlo");
        mc::McOptions mo;
        mo.samples = options.mc_samples;
        mo.seed = options.seed;
        r.monte_carlo = mc::monte_carlo_validate(r.model, r.solution, mo);
    }
    evaluate_checks(r);
    if (!options.out_dir.empty()) {
        write_reports(r, options.out_dir);
    }
    return r;
}

std::vector<double> diff_scenarios(const ScenarioRun& a, const ScenarioRun& b)
{
    const RadialNetwork& na = a.model.network;
    const RadialNetwork& nb = b.model.network;
    if (na.node_count() != nb.node_count()) {
        throw Error("diff: runs are on different networks (node counts differ)");
    }
    for (int i = 0; i <= na.node_count(); ++i) {
        if (na.nodes[static_cast<size_t>(i)].demand_p != nb.nodes[static_cast<size_t>(i)].demand_p ||
            na.nodes[static_cast<size_t>(i)].demand_q != nb.nodes[static_cast<size_t>(i)].demand_q) {
            throw Error("diff: runs are on different networks (demand at node " +
                        std::to_string(i) + " differs)");
        }
    }
    std::vector<double> deltas(static_cast<size_t>(na.node_count()) + 1, 0.0);
    deltas[0] = b.dlmp.root_price_p - a.dlmp.root_price_p;
    for (int i = 1; i <= na.node_count(); ++i) {
        deltas[static_cast<size_t>(i)] = b.dlmp.nodes[static_cast<size_t>(i - 1)].price_p -
                                         a.dlmp.nodes[static_cast<size_t>(i - 1)].price_p;
    }
    return deltas;
}

namespace {

void write_matrix_table(std::ofstream& f, const std::string& name, const Eigen::MatrixXd& m,
                        int row0, int col0)
{
    f << "# " << name << "\nnode";
    for (int j = 0; j < m.cols(); ++j) {
        f << ',' << (col0 + j);
    }
    f << '\n';
    for (int i = 0; i < m.rows(); ++i) {
        f << (row0 + i);
        for (int j = 0; j < m.cols(); ++j) {
            f << ',' << fmt(m(i, j));
        }
        f << '\n';
    }
}

} // namespace

void write_reports(const ScenarioRun& r, const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const RadialNetwork& net = r.model.network;
    const int n = net.node_count();
    const double price_scale = 1.0 / net.base_mva;

    {
        std::ofstream f(dir / "prices.csv");
        f << "node,gen_p,gen_q,alpha,flow_apparent,voltage,price_p,price_q\n";
        for (int i = 0; i <= n; ++i) {
            const bool der = net.has_der(i);
            f << i << ',' << (der ? fmt(r.model.gen_p(r.solution, i)) : "")
              << ',' << (der ? fmt(r.model.gen_q(r.solution, i)) : "")
              << ',' << (der && r.model.stochastic() ? fmt(r.model.alpha(r.solution, i)) : "");
            if (i == 0) {
                f << ",0," << fmt(std::sqrt(net.root_voltage_sq)) << ','
                  << fmt(r.dlmp.root_price_p * price_scale) << ','
                  << fmt(r.dlmp.root_price_q * price_scale) << '\n';
            } else {
                const double fp = r.model.flow_p(r.solution, i);
                const double fq = r.model.flow_q(r.solution, i);
                const auto& row = r.dlmp.nodes[static_cast<size_t>(i - 1)];
                f << ',' << fmt(std::hypot(fp, fq)) << ','
                  << fmt(std::sqrt(r.model.voltage_sq(r.solution, i))) << ','
                  << fmt(row.price_p * price_scale) << ',' << fmt(row.price_q * price_scale)
                  << '\n';
            }
        }
    }
    {
        std::ofstream f(dir / "dlmp_decomposition.csv");
        f << "node,price_p,ancestor_price,reactive_coupling,congestion_recursive,"
             "recursive_residual,voltage_term,congestion_direct,voltage_residual,"
             "mu_upper,mu_lower\n";
        for (const auto& row : r.dlmp.nodes) {
            f << row.node << ',' << fmt(row.price_p * price_scale) << ','
              << fmt(row.ancestor_price_p * price_scale) << ','
              << fmt(row.reactive_coupling * price_scale) << ','
              << fmt(row.congestion_recursive * price_scale) << ','
              << fmt(row.recursive_residual * price_scale) << ','
              << fmt(row.voltage_term * price_scale) << ','
              << fmt(row.congestion_direct * price_scale) << ','
              << fmt(row.voltage_residual * price_scale) << ',' << fmt(row.mu_upper * price_scale)
              << ',' << fmt(row.mu_lower * price_scale) << '\n';
        }
    }
    if (r.gamma) {
        std::ofstream f(dir / "gamma_decomposition.csv");
        f << "regulation_price," << fmt(r.gamma->dual * price_scale) << '\n';
        f << "term_uncertainty," << fmt(r.gamma->term_uncertainty * price_scale) << '\n';
        f << "term_gen_limits," << fmt(r.gamma->term_gen_limits * price_scale) << '\n';
        f << "term_voltage," << fmt(r.gamma->term_voltage * price_scale) << '\n';
        f << "residual," << fmt(r.gamma->residual * price_scale) << '\n';
        f << "node,curvature,delta_upper,delta_lower,nu_dual,nu_analytic\n";
        for (int i = 1; i <= n; ++i) {
            const DerData* der = net.der_at(i);
            f << i << ',' << (der ? fmt(der->b) : "") << ','
              << fmt(r.solution.dual_or_zero({"gen_upper", i}) * price_scale) << ','
              << fmt(r.solution.dual_or_zero({"gen_lower", i}) * price_scale) << ','
              << fmt(r.gamma->nu_dual[static_cast<size_t>(i)] * price_scale) << ','
              << fmt(r.gamma->nu_analytic[static_cast<size_t>(i)] * price_scale) << '\n';
        }
    }
    if (r.equilibrium) {
        std::ofstream f(dir / "equilibrium.csv");
        f << "node,gen_dso,gen_response,alpha_dso,alpha_response,gen_deviation,"
             "alpha_deviation,predicted_alpha_deviation,binding_case\n";
        for (const auto& e : r.equilibrium->producers) {
            f << e.node << ',' << fmt(e.gen_dso) << ',' << fmt(e.gen_der) << ','
              << fmt(e.alpha_dso) << ',' << fmt(e.alpha_der) << ',' << fmt(e.gen_deviation)
              << ',' << fmt(e.alpha_deviation) << ',' << fmt(e.predicted_alpha_deviation) << ','
              << e.binding_case << '\n';
        }
    }
    if (r.monte_carlo) {
        const auto& m = *r.monte_carlo;
        std::ofstream f(dir / "mc_report.csv");
        f << "samples," << m.samples << "\nseed," << m.seed << "\npass," << (m.pass ? 1 : 0)
          << '\n';
        f << "cost_sample_mean," << fmt(m.cost_sample_mean) << "\ncost_analytic,"
          << fmt(m.cost_analytic) << "\ncost_rel_error," << fmt(m.cost_rel_error) << '\n';
        f << "volt_std_max_rel_error," << fmt(m.volt_std_max_rel_error) << '\n';
        f << "node,volt_upper_rate,volt_lower_rate,volt_joint_rate,gen_upper_rate,"
             "gen_lower_rate,flow_rate,volt_std_sample,volt_std_analytic\n";
        for (int i = 1; i <= n; ++i) {
            const auto k = static_cast<size_t>(i);
            f << i << ',' << fmt(m.volt_upper_rate[k]) << ',' << fmt(m.volt_lower_rate[k]) << ','
              << fmt(m.volt_joint_rate[k]) << ',' << fmt(m.gen_upper_rate[k]) << ','
              << fmt(m.gen_lower_rate[k]) << ',' << fmt(m.flow_rate[k]) << ','
              << fmt(m.volt_std_sample[k]) << ',' << fmt(m.volt_std_analytic[k]) << '\n';
        }
        for (const std::string& msg : m.failures) {
            f << "# " << msg << '\n';
        }
    }
    if (r.loss_model) {
        {
            std::ofstream f(dir / "loss_factors.csv");
            write_matrix_table(f, "fnd_active_wrt_active", r.loss_model->factors.node_pp, 0, 1);
            write_matrix_table(f, "fnd_active_wrt_reactive", r.loss_model->factors.node_pq, 0, 1);
            write_matrix_table(f, "fnd_reactive_wrt_active", r.loss_model->factors.node_qp, 0, 1);
            write_matrix_table(f, "fnd_reactive_wrt_reactive", r.loss_model->factors.node_qq, 0,
                               1);
        }
        {
            std::ofstream f(dir / "linearization.csv");
            f << "node,gen_p,gen_q,flow_p,flow_q,current_sq,voltage_sq\n";
            const auto& pt = r.loss_model->point;
            for (int i = 0; i <= n; ++i) {
                f << i << ',' << fmt(pt.gen_p(i)) << ',' << fmt(pt.gen_q(i)) << ','
                  << fmt(pt.flow_p(i)) << ',' << fmt(pt.flow_q(i)) << ','
                  << fmt(pt.current_sq(i)) << ',' << fmt(pt.volt_sq(i)) << '\n';
            }
        }
    }

    nlohmann::json j;
    j["scenario"] = opf::to_string(r.model.scenario);
    j["flow_cc"] = r.model.flow_cc;
    j["network"] = r.options.network_path.string();
    j["seed"] = r.options.seed;
    j["loss_mode"] = loss::to_string(r.options.loss_mode);
    j["objective"] = r.solution.objective;
    j["root_price_p"] = r.dlmp.root_price_p * price_scale;
    j["solver"] = {{"backend", r.solution.stats.backend},
                   {"iterations", r.solution.stats.iterations},
                   {"primal_residual", r.solution.stats.primal_residual},
                   {"dual_residual", r.solution.stats.dual_residual},
                   {"rel_gap", r.solution.stats.gap_rel}};
    j["kkt"] = {{"stationarity", r.kkt.max_stationarity},
                {"complementarity", r.kkt.max_complementarity},
                {"primal_infeasibility", r.kkt.max_primal_infeasibility}};
    j["rel_duality_gap"] = r.rel_duality_gap;
    j["identity_residuals"] = {{"recursive", r.dlmp.max_recursive_residual},
                               {"voltage_form", r.dlmp.max_voltage_residual}};
    if (r.gamma) {
        j["regulation_price"] = r.gamma->dual * price_scale;
        j["gamma_residual"] = r.gamma->residual;
        j["nu_max_mismatch"] = r.gamma->max_nu_mismatch;
    }
    if (r.equilibrium) {
        j["equilibrium"] = {{"max_gen_deviation", r.equilibrium->max_gen_deviation},
                            {"max_alpha_deviation", r.equilibrium->max_alpha_deviation},
                            {"max_distortion_residual", r.equilibrium->max_distortion_residual}};
    }
    if (r.monte_carlo) {
        j["monte_carlo_pass"] = r.monte_carlo->pass;
    }
    j["stage_seconds"] = r.stage_seconds;
    j["checks_pass"] = r.checks_pass;
    j["check_failures"] = r.check_failures;
    std::ofstream f(dir / "summary.json");
    f << j.dump(2) << '\n';
}

} // namespace dlmp::run
