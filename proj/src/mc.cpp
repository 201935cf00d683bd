#include "dlmp/mc.hpp"

#include "dlmp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace dlmp::mc {

namespace {

struct Tally {
    std::vector<long> volt_upper, volt_lower, volt_joint;
    std::vector<long> gen_upper, gen_lower, gen_joint;
    std::vector<long> flow;
    double cost_sum = 0.0;
    std::vector<double> u_sum, u_sq_sum;

    explicit Tally(int n)
        : volt_upper(static_cast<size_t>(n) + 1, 0), volt_lower(volt_upper),
          volt_joint(volt_upper), gen_upper(volt_upper), gen_lower(volt_upper),
          gen_joint(volt_upper), flow(volt_upper),
          u_sum(static_cast<size_t>(n) + 1, 0.0), u_sq_sum(u_sum)
    {
    }

    void merge(const Tally& o)
    {
        for (size_t i = 0; i < volt_upper.size(); ++i) {
            volt_upper[i] += o.volt_upper[i];
            volt_lower[i] += o.volt_lower[i];
            volt_joint[i] += o.volt_joint[i];
            gen_upper[i] += o.gen_upper[i];
            gen_lower[i] += o.gen_lower[i];
            gen_joint[i] += o.gen_joint[i];
            flow[i] += o.flow[i];
            u_sum[i] += o.u_sum[i];
            u_sq_sum[i] += o.u_sq_sum[i];
        }
        cost_sum += o.cost_sum;
    }
};

} // namespace

MonteCarloReport monte_carlo_validate(const opf::OpfModel& model, const conic::Solution& sol,
                                      const McOptions& options)
{
    if (sol.status != conic::SolveStatus::Optimal) {
        throw Error("monte_carlo_validate: solution is not optimal");
    }
    if (options.samples < 10000) {
        throw Error("monte_carlo_validate: needs at least 10^4 samples");
    }
    const RadialNetwork& net = model.network;
    const UncertaintySpec& unc = net.uncertainty;
    const int n = net.node_count();
    const long samples = options.samples;

    MonteCarloReport rep;
    rep.samples = samples;
    rep.seed = options.seed;

    // Scheduled point and per-node sensitivity rows of the realizations.
    Eigen::VectorXd u0(n + 1), fp0(n + 1), fq0(n + 1);
    u0(0) = net.root_voltage_sq;
    fp0(0) = fq0(0) = 0.0;
    for (int i = 1; i <= n; ++i) {
        u0(i) = model.voltage_sq(sol, i);
        fp0(i) = model.flow_p(sol, i);
        fq0(i) = model.flow_q(sol, i);
    }
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    double alpha_root = 0.0;
    for (const DerData& der : net.ders) {
        if (der.node == 0) {
            alpha_root = model.alpha(sol, 0);
        } else {
            alpha(der.node - 1) = model.alpha(sol, der.node);
        }
    }

    const Eigen::MatrixXd& sens = model.matrices.volt_sens_eff();
    const Eigen::MatrixXd& path = model.matrices.path_eff();
    // Row i of volt_rows dotted with a disturbance draw gives the voltage
    // deviation; flow_rows likewise for the active flow.
    Eigen::MatrixXd volt_rows(n, n), flow_rows(n, n);
    const Eigen::VectorXd rho_v = sens * alpha;
    const Eigen::VectorXd rho_f = path * alpha;
    for (int i = 1; i <= n; ++i) {
        volt_rows.row(i - 1) =
            sens.row(i - 1) + rho_v(i - 1) * Eigen::RowVectorXd::Ones(n);
        flow_rows.row(i - 1) =
            path.row(i - 1) - rho_f(i - 1) * Eigen::RowVectorXd::Ones(n);
    }

    // Analytic references.
    rep.volt_std_analytic.assign(static_cast<size_t>(n) + 1, 0.0);
    for (int i = 1; i <= n; ++i) {
        rep.volt_std_analytic[static_cast<size_t>(i)] =
            2.0 * (volt_rows.row(i - 1) * unc.sigma_sqrt).norm();
    }
    rep.cost_analytic = 0.0;
    const double s2 = unc.total_std * unc.total_std;
    for (const DerData& der : net.ders) {
        const double g = model.gen_p(sol, der.node);
        const double al = model.alpha(sol, der.node);
        rep.cost_analytic += (g + der.a) * (g + der.a) / (2.0 * der.b) + der.cost_offset;
        rep.cost_analytic += al * al * s2 / (2.0 * der.b);
    }

    const rng::Philox gen(options.seed);
    const Eigen::MatrixXd& sqrt_cov = unc.sigma_sqrt;

    int threads = options.threads > 0
                      ? options.threads
                      : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<long>(threads, std::max<long>(1, samples / 10000));
    const long chunk = (samples + threads - 1) / threads;

    std::vector<Tally> tallies(static_cast<size_t>(threads), Tally(n));
    auto worker = [&](int t) {
        Tally& tl = tallies[static_cast<size_t>(t)];
        const long lo = t * chunk;
        const long hi = std::min(samples, lo + chunk);
        Eigen::VectorXd xi(n), omega(n);
        for (long d = lo; d < hi; ++d) {
            for (int k = 0; k < n; ++k) {
                xi(k) = gen.normal(static_cast<uint64_t>(d) * static_cast<uint64_t>(n) +
                                   static_cast<uint64_t>(k));
            }
            omega.noalias() = sqrt_cov * xi;
            const double total = omega.sum();

            for (const DerData& der : net.ders) {
                if (der.node == 0) {
                    continue;
                }
                const double g = model.gen_p(sol, der.node) +
                                 alpha(der.node - 1) * total;
                const bool up = std::isfinite(der.p_max) && g > der.p_max;
                const bool dn = std::isfinite(der.p_min) && g < der.p_min;
                tl.gen_upper[static_cast<size_t>(der.node)] += up;
                tl.gen_lower[static_cast<size_t>(der.node)] += dn;
                tl.gen_joint[static_cast<size_t>(der.node)] += (up || dn);
            }
            for (int i = 1; i <= n; ++i) {
                const double u = u0(i) - 2.0 * volt_rows.row(i - 1).dot(omega);
                const NodeData& nd = net.nodes[static_cast<size_t>(i)];
                const bool up = u > nd.u_max;
                const bool dn = u < nd.u_min;
                tl.volt_upper[static_cast<size_t>(i)] += up;
                tl.volt_lower[static_cast<size_t>(i)] += dn;
                tl.volt_joint[static_cast<size_t>(i)] += (up || dn);
                tl.u_sum[static_cast<size_t>(i)] += u;
                tl.u_sq_sum[static_cast<size_t>(i)] += u * u;

                const double fp = fp0(i) + flow_rows.row(i - 1).dot(omega);
                const double cap = net.edge(i).flow_limit;
                tl.flow[static_cast<size_t>(i)] += (fp * fp + fq0(i) * fq0(i) > cap * cap);
            }
            double cost = 0.0;
            for (const DerData& der : net.ders) {
                const double al = der.node == 0 ? alpha_root : alpha(der.node - 1);
                const double g = model.gen_p(sol, der.node) + al * total;
                cost += (g + der.a) * (g + der.a) / (2.0 * der.b) + der.cost_offset;
            }
            tl.cost_sum += cost;
        }
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back(worker, t);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    Tally total(n);
    for (const Tally& t : tallies) {
        total.merge(t);
    }

    auto rate = [&](const std::vector<long>& counts) {
        std::vector<double> r(counts.size(), 0.0);
        for (size_t i = 0; i < counts.size(); ++i) {
            r[i] = static_cast<double>(counts[i]) / static_cast<double>(samples);
        }
        return r;
    };
    rep.volt_upper_rate = rate(total.volt_upper);
    rep.volt_lower_rate = rate(total.volt_lower);
    rep.volt_joint_rate = rate(total.volt_joint);
    rep.gen_upper_rate = rate(total.gen_upper);
    rep.gen_lower_rate = rate(total.gen_lower);
    rep.gen_joint_rate = rate(total.gen_joint);
    rep.flow_rate = rate(total.flow);

    auto binom_sigma = [&](double eps) {
        return std::sqrt(eps * (1.0 - eps) / static_cast<double>(samples));
    };
    rep.sigma_gen = binom_sigma(unc.eps_gen);
    rep.sigma_volt = binom_sigma(unc.eps_voltage);
    rep.sigma_flow = binom_sigma(unc.eps_flow);

    rep.cost_sample_mean = total.cost_sum / static_cast<double>(samples);
    rep.cost_rel_error = std::abs(rep.cost_sample_mean - rep.cost_analytic) /
                         std::max(1e-12, std::abs(rep.cost_analytic));

    rep.volt_std_sample.assign(static_cast<size_t>(n) + 1, 0.0);
    for (int i = 1; i <= n; ++i) {
        const double mean = total.u_sum[static_cast<size_t>(i)] / static_cast<double>(samples);
        const double var =
            total.u_sq_sum[static_cast<size_t>(i)] / static_cast<double>(samples) - mean * mean;
        rep.volt_std_sample[static_cast<size_t>(i)] = std::sqrt(std::max(0.0, var));
        const double ana = rep.volt_std_analytic[static_cast<size_t>(i)];
        if (ana > 1e-9) {
            rep.volt_std_max_rel_error =
                std::max(rep.volt_std_max_rel_error,
                         std::abs(rep.volt_std_sample[static_cast<size_t>(i)] - ana) / ana);
        }
    }

    // Assertions for the families the scenario chance-constrains. Each side
    // of a two-sided family is guaranteed individually; the joint rate is
    // reported but may legitimately approach twice the target.
    const bool stochastic = model.stochastic();
    rep.gen_asserted = stochastic;
    rep.volt_asserted = model.scenario == opf::ScenarioKind::VoltCC ||
                        model.scenario == opf::ScenarioKind::LossVoltCC;
    rep.flow_asserted = stochastic && model.flow_cc;

    auto check = [&](bool asserted, double r, double eps, double sigma, const std::string& what) {
        if (!asserted) {
            return;
        }
        if (r > eps + 3.0 * sigma) {
            std::ostringstream os;
            os << what << ": empirical rate " << r << " exceeds " << eps << " + 3*" << sigma;
            rep.failures.push_back(os.str());
            rep.pass = false;
        }
    };
    for (const DerData& der : net.ders) {
        if (der.node == 0) {
            continue;
        }
        if (std::isfinite(der.p_max)) {
            check(rep.gen_asserted, rep.gen_upper_rate[static_cast<size_t>(der.node)],
                  unc.eps_gen, rep.sigma_gen,
                  "generation upper at node " + std::to_string(der.node));
        }
        if (std::isfinite(der.p_min)) {
            check(rep.gen_asserted, rep.gen_lower_rate[static_cast<size_t>(der.node)],
                  unc.eps_gen, rep.sigma_gen,
                  "generation lower at node " + std::to_string(der.node));
        }
    }
    for (int i = 1; i <= n; ++i) {
        check(rep.volt_asserted, rep.volt_upper_rate[static_cast<size_t>(i)], unc.eps_voltage,
              rep.sigma_volt, "voltage upper at node " + std::to_string(i));
        check(rep.volt_asserted, rep.volt_lower_rate[static_cast<size_t>(i)], unc.eps_voltage,
              rep.sigma_volt, "voltage lower at node " + std::to_string(i));
        check(rep.flow_asserted, rep.flow_rate[static_cast<size_t>(i)], unc.eps_flow,
              rep.sigma_flow, "apparent flow on edge " + std::to_string(i));
    }
    return rep;
}

} // namespace dlmp::mc
