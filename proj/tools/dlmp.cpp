#include "dlmp/acceptance.hpp"
#include "dlmp/run.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

int cmd_run(const std::string& network, const std::string& scenario, const std::string& flow_cc,
            const std::string& loss_mode, const std::string& validate, uint64_t seed,
            const std::string& out_dir)
{
    dlmp::run::RunOptions o;
    o.network_path = network;
    o.scenario = dlmp::opf::scenario_from_string(scenario);
    if (flow_cc == "on") {
        o.flow_cc = true;
    } else if (flow_cc != "off") {
        throw dlmp::Error("--flow-cc expects on|off");
    }
    o.loss_mode = dlmp::loss::sensitivity_mode_from_string(loss_mode);
    if (!validate.empty()) {
        if (validate.rfind("mc:", 0) != 0) {
            throw dlmp::Error("--validate expects mc:<samples>");
        }
        o.mc_samples = std::stol(validate.substr(3));
    }
    o.seed = seed;
    o.out_dir = out_dir;

    dlmp::run::ScenarioRun r = dlmp::run::run_scenario(o);
    const double scale = 1.0 / r.model.network.base_mva;

    std::printf("scenario %s on %s  (objective %.6f, %d iterations)\n",
                dlmp::opf::to_string(r.model.scenario), network.c_str(), r.solution.objective,
                r.solution.stats.iterations);
    std::printf("%4s %10s %10s %8s %10s %9s %12s %12s\n", "node", "gen_p", "gen_q", "alpha",
                "|flow|", "voltage", "price_p", "price_q");
    const auto& net = r.model.network;
    for (int i = 0; i <= net.node_count(); ++i) {
        const bool der = net.has_der(i);
        char gp[16] = "--", gq[16] = "--", al[16] = "--";
        if (der) {
            std::snprintf(gp, sizeof(gp), "%.4f", r.model.gen_p(r.solution, i));
            std::snprintf(gq, sizeof(gq), "%.4f", r.model.gen_q(r.solution, i));
            if (r.model.stochastic()) {
                std::snprintf(al, sizeof(al), "%.4f", r.model.alpha(r.solution, i));
            }
        }
        const double flow =
            i == 0 ? 0.0
                   : std::hypot(r.model.flow_p(r.solution, i), r.model.flow_q(r.solution, i));
        const double price_p =
            (i == 0 ? r.dlmp.root_price_p : r.dlmp.nodes[static_cast<size_t>(i - 1)].price_p) *
            scale;
        const double price_q =
            (i == 0 ? r.dlmp.root_price_q : r.dlmp.nodes[static_cast<size_t>(i - 1)].price_q) *
            scale;
        std::printf("%4d %10s %10s %8s %10.4f %9.4f %12.4f %12.4f\n", i, gp, gq, al, flow,
                    std::sqrt(r.model.voltage_sq(r.solution, i)), price_p, price_q);
    }
    if (r.gamma) {
        std::printf("regulation price %.6f  (reconstruction residual %.2e)\n",
                    r.gamma->dual * scale, r.gamma->residual);
    }
    std::printf("checks: %s\n", r.checks_pass ? "pass" : "FAIL");
    for (const auto& f : r.check_failures) {
        std::printf("  %s\n", f.c_str());
    }
    if (!out_dir.empty()) {
        std::printf("reports written to %s\n", out_dir.c_str());
    }
    return r.checks_pass ? 0 : 1;
}

int cmd_diff(const std::string& dir_a, const std::string& dir_b)
{
    auto read_prices = [](const std::string& dir) {
        std::ifstream f(dir + "/prices.csv");
        if (!f) {
            throw dlmp::Error("cannot open " + dir + "/prices.csv");
        }
        std::string line;
        std::getline(f, line); // header
        std::vector<std::pair<int, double>> rows;
        while (std::getline(f, line)) {
            // columns: node,...,price_p,price_q
            const auto first = line.find(',');
            const int node = std::stoi(line.substr(0, first));
            size_t pos = line.size();
            int commas = 0;
            size_t last = std::string::npos, second_last = std::string::npos;
            for (size_t k = line.size(); k-- > 0;) {
                if (line[k] == ',') {
                    ++commas;
                    if (commas == 1) {
                        last = k;
                    } else if (commas == 2) {
                        second_last = k;
                        break;
                    }
                }
            }
            (void)pos;
            rows.emplace_back(node,
                              std::stod(line.substr(second_last + 1, last - second_last - 1)));
        }
        return rows;
    };
    auto network_of = [](const std::string& dir) {
        std::ifstream f(dir + "/summary.json");
        if (!f) {
            throw dlmp::Error("cannot open " + dir + "/summary.json");
        }
        nlohmann::json j;
        f >> j;
        return j["network"].get<std::string>();
    };
    if (network_of(dir_a) != network_of(dir_b)) {
        throw dlmp::Error("diff: runs reference different networks");
    }
    auto a = read_prices(dir_a);
    auto b = read_prices(dir_b);
    if (a.size() != b.size()) {
        throw dlmp::Error("diff: price tables have different sizes");
    }
    std::printf("%4s %14s\n", "node", "delta_price_p");
    for (size_t i = 0; i < a.size(); ++i) {
        std::printf("%4d %14.6f\n", a[i].first, b[i].second - a[i].second);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"chance-constrained distribution pricing toolkit"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "solve one scenario and emit reports");
    std::string network, scenario = "det", flow_cc = "off", loss_mode = "paper", validate,
                out_dir;
    uint64_t seed = 0;
    run->add_option("--network", network, "network document (json)")->required();
    run->add_option("--scenario", scenario, "det|gen-cc|volt-cc|lvolt-cc");
    run->add_option("--flow-cc", flow_cc, "on|off polygonal flow chance constraints");
    run->add_option("--loss-mode", loss_mode, "paper|corrected sensitivity mode");
    run->add_option("--validate", validate, "mc:<samples> Monte Carlo validation");
    run->add_option("--seed", seed, "sampling seed");
    run->add_option("--out", out_dir, "report output directory");

    auto* diff = app.add_subcommand("diff", "per-node price difference of two runs");
    std::string dir_a, dir_b;
    diff->add_option("--a", dir_a, "first run directory")->required();
    diff->add_option("--b", dir_b, "second run directory")->required();

    auto* check = app.add_subcommand("check-fixtures", "run the acceptance suite");
    std::string fixtures = "fixtures", reference = "python3 tools/reference_backend.py";
    long mc_samples = 100000;
    check->add_option("--fixtures", fixtures, "fixtures directory");
    check->add_option("--reference-solver", reference, "cross-check solver command");
    check->add_option("--mc-samples", mc_samples, "Monte Carlo sample count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return cmd_run(network, scenario, flow_cc, loss_mode, validate, seed, out_dir);
        }
        if (diff->parsed()) {
            return cmd_diff(dir_a, dir_b);
        }
        dlmp::acceptance::Config cfg;
        cfg.fixtures_dir = fixtures;
        cfg.reference_solver = reference;
        cfg.mc_samples = mc_samples;
        return dlmp::acceptance::run_all(cfg, std::cout) == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
