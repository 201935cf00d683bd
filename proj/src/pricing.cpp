#include "dlmp/pricing.hpp"

#include <cmath>
#include <sstream>

namespace dlmp::pricing {

using conic::Label;

namespace {

Eigen::VectorXd alpha_vector(const opf::OpfModel& model, const conic::Solution& sol)
{
    const int n = model.network.node_count();
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    for (int i = 1; i <= n; ++i) {
        a(i - 1) = model.alpha(sol, i);
    }
    return a;
}

} // namespace

double voltage_stddev(const opf::OpfModel& model, const conic::Solution& sol, int node)
{
    const Eigen::MatrixXd& sens = model.matrices.volt_sens_eff();
    const Eigen::MatrixXd& sqrt_cov = model.network.uncertainty.sigma_sqrt;
    const int n = model.network.node_count();
    const Eigen::VectorXd a = alpha_vector(model, sol);
    const double rho = sens.row(node - 1) * a;
    const Eigen::RowVectorXd row =
        (sens.row(node - 1) + rho * Eigen::RowVectorXd::Ones(n)) * sqrt_cov;
    return 2.0 * row.norm();
}

DlmpReport decompose_dlmp(const opf::OpfModel& model, const conic::Solution& sol)
{
    if (sol.status != conic::SolveStatus::Optimal) {
        throw Error("decompose_dlmp: solution is not optimal");
    }
    const RadialNetwork& net = model.network;
    const int n = net.node_count();

    DlmpReport rep;
    rep.root_price_p = sol.dual({"balance_p", 0});
    rep.root_price_q = sol.dual({"balance_q", 0});

    for (int i = 1; i <= n; ++i) {
        const EdgeData& e = net.edge(i);
        NodePrice row;
        row.node = i;
        row.price_p = sol.dual({"balance_p", i});
        row.price_q = sol.dual({"balance_q", i});
        const int anc = e.ancestor;
        row.ancestor_price_p = sol.dual({"balance_p", anc});
        const double anc_q = sol.dual({"balance_q", anc});
        const double ratio = e.resistance / e.reactance;

        const double cong_p = model.flow_congestion_p(sol, i);
        const double cong_q = model.flow_congestion_q(sol, i);

        row.reactive_coupling = (row.price_q - anc_q) * ratio;
        row.congestion_recursive = cong_p - ratio * cong_q;
        row.recursive_residual =
            row.price_p - (row.ancestor_price_p + row.reactive_coupling + row.congestion_recursive);

        row.mu_upper = sol.dual_or_zero({"volt_upper", i});
        row.mu_lower = sol.dual_or_zero({"volt_lower", i});
        double downstream_mu = 0.0;
        for (int j : topology_sets(net, i).downstream) {
            downstream_mu +=
                sol.dual_or_zero({"volt_upper", j}) - sol.dual_or_zero({"volt_lower", j});
        }
        row.voltage_term = -2.0 * e.resistance * downstream_mu;
        row.congestion_direct = cong_p;
        row.voltage_residual =
            row.price_p - (row.ancestor_price_p + row.voltage_term + row.congestion_direct);

        rep.max_recursive_residual =
            std::max(rep.max_recursive_residual, std::abs(row.recursive_residual));
        rep.max_voltage_residual =
            std::max(rep.max_voltage_residual, std::abs(row.voltage_residual));
        rep.nodes.push_back(row);
    }
    return rep;
}

GammaReport decompose_gamma(const opf::OpfModel& model, const conic::Solution& sol)
{
    if (sol.status != conic::SolveStatus::Optimal) {
        throw Error("decompose_gamma: solution is not optimal");
    }
    if (!model.stochastic()) {
        throw Error("decompose_gamma: deterministic scenario has no regulation price");
    }
    const RadialNetwork& net = model.network;
    const UncertaintySpec& u = net.uncertainty;
    const int n = net.node_count();

    GammaReport rep;
    rep.dual = sol.dual({"participation"});

    double curv_sum = 0.0;
    for (const DerData& der : net.ders) {
        curv_sum += der.b;
    }
    const double s = u.total_std;
    rep.term_uncertainty = s * s / curv_sum;

    double gen_term = 0.0;
    for (const DerData& der : net.ders) {
        if (der.node == 0) {
            continue;
        }
        const double delta = sol.dual_or_zero({"gen_upper", der.node}) +
                             sol.dual_or_zero({"gen_lower", der.node});
        gen_term += delta * der.b;
    }
    rep.term_gen_limits = u.z_gen * s * gen_term / curv_sum;

    rep.nu_dual.assign(static_cast<size_t>(n) + 1, 0.0);
    rep.nu_analytic.assign(static_cast<size_t>(n) + 1, 0.0);
    const bool volt_cc = model.scenario == opf::ScenarioKind::VoltCC ||
                         model.scenario == opf::ScenarioKind::LossVoltCC;
    if (volt_cc) {
        const Eigen::MatrixXd& sens = model.matrices.volt_sens_eff();
        const Eigen::MatrixXd& sqrt_cov = u.sigma_sqrt;
        const Eigen::VectorXd a = alpha_vector(model, sol);
        const Eigen::VectorXd sig_e = u.sigma * Eigen::VectorXd::Ones(n);

        // Per-node weight: cone dual over cone norm, from binding voltage
        // limits and the tight standard-deviation cone.
        Eigen::VectorXd weight = Eigen::VectorXd::Zero(n);
        for (int j = 1; j <= n; ++j) {
            const double mu_sum =
                sol.dual_or_zero({"volt_upper", j}) + sol.dual_or_zero({"volt_lower", j});
            if (mu_sum == 0.0) {
                continue;
            }
            const double rho = sens.row(j - 1) * a;
            const double norm =
                ((sens.row(j - 1) + rho * Eigen::RowVectorXd::Ones(n)) * sqrt_cov).norm();
            if (norm <= 1e-12) {
                rep.degenerate_nodes.push_back(j);
                continue;
            }
            const double drive = sens.row(j - 1) * (sig_e + s * s * a);
            weight(j - 1) = 2.0 * u.z_voltage * mu_sum * drive / norm;
        }
        for (int i = 1; i <= n; ++i) {
            double nu = 0.0;
            for (int j = 1; j <= n; ++j) {
                nu += sens(j - 1, i - 1) * weight(j - 1);
            }
            rep.nu_analytic[static_cast<size_t>(i)] = nu;
            rep.nu_dual[static_cast<size_t>(i)] = sol.dual_or_zero({"volt_couple", i});
            rep.max_nu_mismatch =
                std::max(rep.max_nu_mismatch,
                         std::abs(rep.nu_analytic[static_cast<size_t>(i)] -
                                  rep.nu_dual[static_cast<size_t>(i)]));
        }
        double volt_term = 0.0;
        for (const DerData& der : net.ders) {
            if (der.node == 0) {
                continue;
            }
            volt_term += der.b * rep.nu_dual[static_cast<size_t>(der.node)];
        }
        rep.term_voltage = volt_term / curv_sum;
    }

    rep.nu_flow_dual.assign(static_cast<size_t>(n) + 1, 0.0);
    if (model.flow_cc) {
        double flow_term = 0.0;
        for (int i = 1; i <= n; ++i) {
            rep.nu_flow_dual[static_cast<size_t>(i)] = sol.dual_or_zero({"flow_couple", i});
        }
        for (const DerData& der : net.ders) {
            if (der.node != 0) {
                flow_term += der.b * rep.nu_flow_dual[static_cast<size_t>(der.node)];
            }
        }
        rep.term_flow = flow_term / curv_sum;
    }

    rep.reconstructed =
        rep.term_uncertainty + rep.term_gen_limits + rep.term_voltage + rep.term_flow;
    rep.residual = rep.reconstructed - rep.dual;
    return rep;
}

ProducerResponse best_response(double price_gen, double price_alpha, const DerData& der,
                               const UncertaintySpec& u)
{
    const double s = u.total_std;
    const double z = u.z_gen;
    const double b = der.b;
    const double a = der.a;
    if (!(b > 0.0) || !(s > 0.0) || !(z > 0.0)) {
        throw Error("best_response: requires b > 0, s > 0, z > 0");
    }
    const double zs = z * s;
    const double s2 = s * s;
    const double tol = 1e-11;
    std::ostringstream cond;

    // Case 4: both output limits bind.
    if (std::isfinite(der.p_min) && std::isfinite(der.p_max)) {
        const double g = 0.5 * (der.p_max + der.p_min);
        const double al = (der.p_max - der.p_min) / (2.0 * zs);
        // Multipliers from the two stationarity rows.
        const double sum = (price_alpha - al * s2 / b) / zs;
        const double diff = price_gen - (g + a) / b;
        const double dplus = 0.5 * (sum + diff);
        const double dminus = 0.5 * (sum - diff);
        if (dplus >= -tol && dminus >= -tol) {
            ProducerResponse r{g, al, 4, ""};
            cond << "price_alpha >= " << (al * s2 / b) << " + z s |price_gen - marginal cost|";
            r.condition = cond.str();
            return r;
        }
    }
    // Case 2: upper limit binds.
    if (std::isfinite(der.p_max)) {
        const double al =
            (zs * (der.p_max + a - b * price_gen) + price_alpha * b) / (s2 * (1.0 + z * z));
        const double g = der.p_max - zs * al;
        const double dplus = price_gen - (g + a) / b;
        const bool lower_ok = !std::isfinite(der.p_min) || g - zs * al >= der.p_min - tol;
        if (dplus >= -tol && lower_ok) {
            ProducerResponse r{g, al, 2, ""};
            cond << "price_gen >= " << ((der.p_max + a) / b) << " - z/s * price_alpha";
            r.condition = cond.str();
            return r;
        }
    }
    // Case 3: lower limit binds.
    if (std::isfinite(der.p_min)) {
        const double al =
            (zs * (b * price_gen - der.p_min - a) + price_alpha * b) / (s2 * (1.0 + z * z));
        const double g = der.p_min + zs * al;
        const double dminus = (g + a) / b - price_gen;
        const bool upper_ok = !std::isfinite(der.p_max) || g + zs * al <= der.p_max + tol;
        if (dminus >= -tol && upper_ok) {
            ProducerResponse r{g, al, 3, ""};
            cond << "price_gen <= " << ((der.p_min + a) / b) << " + z/s * price_alpha";
            r.condition = cond.str();
            return r;
        }
    }
    // Case 1: interior.
    {
        const double g = price_gen * b - a;
        const double al = price_alpha * b / s2;
        const bool upper_ok = !std::isfinite(der.p_max) || g + zs * al <= der.p_max + tol;
        const bool lower_ok = !std::isfinite(der.p_min) || g - zs * al >= der.p_min - tol;
        if (upper_ok && lower_ok) {
            ProducerResponse r{g, al, 1, ""};
            cond << "marginal cost range admits price_gen = " << price_gen;
            r.condition = cond.str();
            return r;
        }
    }
    throw Error("best_response: no dispatch case matched the given prices");
}

EquilibriumReport equilibrium_check(const opf::OpfModel& model, const conic::Solution& sol)
{
    if (sol.status != conic::SolveStatus::Optimal) {
        throw Error("equilibrium_check: solution is not optimal");
    }
    if (!model.stochastic()) {
        throw Error("equilibrium_check: deterministic scenario has no balancing market");
    }
    const RadialNetwork& net = model.network;
    const UncertaintySpec& u = net.uncertainty;
    const double gamma = sol.dual({"participation"});
    const bool volt_cc = model.scenario == opf::ScenarioKind::VoltCC ||
                         model.scenario == opf::ScenarioKind::LossVoltCC;

    EquilibriumReport rep;
    for (const DerData& der : net.ders) {
        if (der.node == 0) {
            continue;
        }
        EquilibriumEntry e;
        e.node = der.node;
        e.gen_dso = model.gen_p(sol, der.node);
        e.alpha_dso = model.alpha(sol, der.node);
        const double price = sol.dual({"balance_p", der.node});
        ProducerResponse r = best_response(price, gamma, der, u);
        e.gen_der = r.gen_p;
        e.alpha_der = r.alpha;
        e.binding_case = r.binding_case;
        e.gen_deviation = e.gen_der - e.gen_dso;
        e.alpha_deviation = e.alpha_der - e.alpha_dso;
        e.gen_limit_duals = sol.dual_or_zero({"gen_upper", der.node}) +
                            sol.dual_or_zero({"gen_lower", der.node});
        double nu = sol.dual_or_zero({"flow_couple", der.node});
        if (volt_cc) {
            nu += sol.dual_or_zero({"volt_couple", der.node});
        }
        e.predicted_alpha_deviation = der.b * nu / (u.total_std * u.total_std);
        rep.max_gen_deviation = std::max(rep.max_gen_deviation, std::abs(e.gen_deviation));
        rep.max_alpha_deviation = std::max(rep.max_alpha_deviation, std::abs(e.alpha_deviation));
        if (e.gen_limit_duals < 1e-7 && e.binding_case == 1) {
            rep.max_distortion_residual =
                std::max(rep.max_distortion_residual,
                         std::abs(e.alpha_deviation - e.predicted_alpha_deviation));
        }
        rep.producers.push_back(e);
    }
    return rep;
}

std::vector<ReconstructedOutput> production_from_prices(const opf::OpfModel& model,
                                                        const conic::Solution& sol)
{
    if (!model.loss) {
        throw Error("production_from_prices: model carries no loss factors");
    }
    const RadialNetwork& net = model.network;
    const int n = net.node_count();
    std::vector<ReconstructedOutput> out;
    for (const DerData& der : net.ders) {
        if (der.node == 0) {
            continue;
        }
        const int k = der.node;
        double xi = 0.0;
        for (int j = 0; j <= n; ++j) {
            xi += model.loss->pp(j, k - 1) * sol.dual({"balance_p", j});
            xi += model.loss->qp(j, k - 1) * sol.dual({"balance_q", j});
        }
        const double delta_net =
            sol.dual_or_zero({"gen_upper", k}) - sol.dual_or_zero({"gen_lower", k});
        ReconstructedOutput r;
        r.node = k;
        r.loss_price_term = xi;
        r.gen_p = der.b * (sol.dual({"balance_p", k}) - delta_net + xi) - der.a;
        out.push_back(r);
    }
    return out;
}

} // namespace dlmp::pricing
