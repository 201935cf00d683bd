#include "dlmp/grid.hpp"

#include "dlmp/normal.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dlmp {

namespace {

[[noreturn]] void fail(const std::string& what)
{
    throw ValidationError(what);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* what)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) {
        fail(std::string(what) + ": eigendecomposition failed");
    }
    Eigen::VectorXd vals = eig.eigenvalues();
    const double scale = std::max(1.0, vals.cwiseAbs().maxCoeff());
    for (int i = 0; i < vals.size(); ++i) {
        if (vals(i) < -1e-10 * scale) {
            fail(std::string(what) + ": matrix is not positive semidefinite (eigenvalue " +
                 std::to_string(vals(i)) + ")");
        }
        vals(i) = std::max(vals(i), 0.0);
    }
    return eig.eigenvectors() * vals.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

void check_eps(double eps, const char* name)
{
    if (!(eps > 0.0) || !(eps < 0.5)) {
        fail(std::string("uncertainty: ") + name + " must lie strictly in (0, 0.5), got " +
             std::to_string(eps));
    }
}

} // namespace

UncertaintySpec UncertaintySpec::from_covariance(Eigen::MatrixXd sigma, double eps_gen,
                                                 double eps_voltage, double eps_flow)
{
    check_eps(eps_gen, "eps_g");
    check_eps(eps_voltage, "eps_v");
    check_eps(eps_flow, "eps_f");
    if (sigma.rows() != sigma.cols()) {
        fail("uncertainty: sigma must be square");
    }
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        fail("uncertainty: sigma must be symmetric");
    }
    sigma = 0.5 * (sigma + sigma.transpose().eval());

    UncertaintySpec spec;
    spec.sigma = sigma;
    spec.sigma_sqrt = psd_sqrt(sigma, "uncertainty");
    spec.total_std = std::sqrt(std::max(0.0, sigma.sum()));
    spec.eps_gen = eps_gen;
    spec.eps_voltage = eps_voltage;
    spec.eps_flow = eps_flow;
    spec.z_gen = gaussian_quantile(eps_gen);
    spec.z_voltage = gaussian_quantile(eps_voltage);
    spec.z_flow = gaussian_quantile(eps_flow);
    return spec;
}

UncertaintySpec UncertaintySpec::from_std_devs(const Eigen::VectorXd& std_devs, double eps_gen,
                                               double eps_voltage, double eps_flow)
{
    for (int i = 0; i < std_devs.size(); ++i) {
        if (std_devs(i) < 0.0) {
            fail("uncertainty: sigma_diag entry " + std::to_string(i + 1) + " is negative");
        }
    }
    return from_covariance(std_devs.cwiseAbs2().asDiagonal(), eps_gen, eps_voltage, eps_flow);
}

UncertaintySpec UncertaintySpec::scaled(double factor) const
{
    return from_covariance(factor * sigma, eps_gen, eps_voltage, eps_flow);
}

const DerData* RadialNetwork::der_at(int node) const
{
    for (const DerData& d : ders) {
        if (d.node == node) {
            return &d;
        }
    }
    return nullptr;
}

Eigen::VectorXd RadialNetwork::demand_p_vec() const
{
    Eigen::VectorXd d(node_count());
    for (int i = 1; i <= node_count(); ++i) {
        d(i - 1) = nodes[static_cast<size_t>(i)].demand_p;
    }
    return d;
}

Eigen::VectorXd RadialNetwork::demand_q_vec() const
{
    Eigen::VectorXd d(node_count());
    for (int i = 1; i <= node_count(); ++i) {
        d(i - 1) = nodes[static_cast<size_t>(i)].demand_q;
    }
    return d;
}

void RadialNetwork::finalize()
{
    const int n = node_count();
    if (n < 1) {
        fail("network: needs at least one non-root node");
    }
    if (static_cast<int>(edges.size()) != n) {
        fail("network: expected " + std::to_string(n) + " edges, got " +
             std::to_string(edges.size()));
    }

    std::vector<bool> has_edge(static_cast<size_t>(n) + 1, false);
    for (const EdgeData& e : edges) {
        if (e.node < 1 || e.node > n) {
            fail("edge " + std::to_string(e.node) + ": downstream node id out of range 1.." +
                 std::to_string(n));
        }
        if (e.ancestor < 0 || e.ancestor > n) {
            fail("edge " + std::to_string(e.node) + ": missing ancestor node " +
                 std::to_string(e.ancestor));
        }
        if (e.ancestor == e.node) {
            fail("edge " + std::to_string(e.node) + ": cycle detected (self loop)");
        }
        if (has_edge[static_cast<size_t>(e.node)]) {
            fail("edge " + std::to_string(e.node) + ": node has more than one ancestor");
        }
        has_edge[static_cast<size_t>(e.node)] = true;
        if (!(e.resistance > 0.0)) {
            fail("edge " + std::to_string(e.node) + ": non-positive resistance");
        }
        if (!(e.reactance > 0.0)) {
            fail("edge " + std::to_string(e.node) + ": non-positive reactance");
        }
        if (!(e.flow_limit > 0.0)) {
            fail("edge " + std::to_string(e.node) + ": non-positive apparent-power limit");
        }
    }
    std::sort(edges.begin(), edges.end(),
              [](const EdgeData& a, const EdgeData& b) { return a.node < b.node; });
    for (int i = 1; i <= n; ++i) {
        if (!has_edge[static_cast<size_t>(i)]) {
            fail("node " + std::to_string(i) + ": disconnected (no incoming edge)");
        }
    }

    // Walk ancestor chains; a chain longer than n edges means a cycle.
    for (int i = 1; i <= n; ++i) {
        int cur = i;
        int steps = 0;
        while (cur != 0) {
            cur = edge(cur).ancestor;
            if (++steps > n) {
                fail("node " + std::to_string(i) + ": cycle detected on ancestor path");
            }
        }
    }

    children_.assign(static_cast<size_t>(n) + 1, {});
    for (const EdgeData& e : edges) {
        children_[static_cast<size_t>(e.ancestor)].push_back(e.node);
    }
    for (auto& c : children_) {
        std::sort(c.begin(), c.end());
    }

    // Topological order, ancestors first.
    topo_.clear();
    topo_.reserve(static_cast<size_t>(n));
    std::vector<int> stack = children_[0];
    std::reverse(stack.begin(), stack.end());
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        topo_.push_back(v);
        for (auto it = children_[static_cast<size_t>(v)].rbegin();
             it != children_[static_cast<size_t>(v)].rend(); ++it) {
            stack.push_back(*it);
        }
    }
    if (static_cast<int>(topo_.size()) != n) {
        fail("network: disconnected component detected");
    }

    for (int i = 1; i <= n; ++i) {
        const NodeData& nd = nodes[static_cast<size_t>(i)];
        if (!(nd.u_min < nd.u_max)) {
            fail("node " + std::to_string(i) + ": u_min must be below u_max");
        }
        if (!(nd.u_min >= 0.0)) {
            fail("node " + std::to_string(i) + ": negative squared-voltage bound");
        }
    }
    if (!(root_voltage_sq > 0.0)) {
        fail("node 0: root squared voltage must be positive");
    }

    if (ders.empty() || der_at(0) == nullptr) {
        fail("ders: substation cost entry at node 0 is required");
    }
    std::sort(ders.begin(), ders.end(),
              [](const DerData& a, const DerData& b) { return a.node < b.node; });
    for (size_t k = 0; k + 1 < ders.size(); ++k) {
        if (ders[k].node == ders[k + 1].node) {
            fail("ders: duplicate entry for node " + std::to_string(ders[k].node));
        }
    }
    for (const DerData& d : ders) {
        if (d.node < 0 || d.node > n) {
            fail("ders: node id " + std::to_string(d.node) + " out of range");
        }
        if (!(d.b > 0.0)) {
            fail("der at node " + std::to_string(d.node) + ": cost curvature must be positive");
        }
        if (d.a < 0.0) {
            fail("der at node " + std::to_string(d.node) + ": cost parameter a must be >= 0");
        }
        if (d.p_min > d.p_max || d.q_min > d.q_max) {
            fail("der at node " + std::to_string(d.node) + ": lower limit exceeds upper limit");
        }
    }

    if (uncertainty.sigma.rows() != n) {
        fail("uncertainty: sigma dimension " + std::to_string(uncertainty.sigma.rows()) +
             " does not match node count " + std::to_string(n));
    }
}

TopologySets topology_sets(const RadialNetwork& net, int node)
{
    if (node < 0 || node > net.node_count()) {
        throw ValidationError("topology_sets: node " + std::to_string(node) + " out of range");
    }
    TopologySets out;
    out.ancestor = net.ancestor(node);
    out.children = net.children(node);
    std::vector<int> stack = {node};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        out.downstream.push_back(v);
        for (int c : net.children(v)) {
            stack.push_back(c);
        }
    }
    std::sort(out.downstream.begin(), out.downstream.end());
    return out;
}

namespace {

Eigen::MatrixXd build_path_matrix(const RadialNetwork& net)
{
    const int n = net.node_count();
    Eigen::MatrixXd path = Eigen::MatrixXd::Zero(n, n);
    // Edge i lies on the path to node j exactly when j is downstream of i.
    for (int i = 1; i <= n; ++i) {
        for (int j : topology_sets(net, i).downstream) {
            path(i - 1, j - 1) = 1.0;
        }
    }
    return path;
}

Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& m, const char* what)
{
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        fail(std::string(what) + ": matrix is numerically singular");
    }
    Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
    const double cond = m.cwiseAbs().rowwise().sum().maxCoeff() *
                        inv.cwiseAbs().rowwise().sum().maxCoeff();
    if (!std::isfinite(cond) || cond > 1e14) {
        std::ostringstream os;
        os << what << ": matrix is numerically singular (condition estimate " << cond << ")";
        fail(os.str());
    }
    return inv;
}

} // namespace

TopologyMatrices build_matrices(const RadialNetwork& net)
{
    const int n = net.node_count();
    TopologyMatrices tm;
    tm.path = build_path_matrix(net);

    // The inverse of the path matrix is I minus the child-indicator matrix.
    tm.path_inv = Eigen::MatrixXd::Identity(n, n);
    for (int j = 1; j <= n; ++j) {
        const int anc = net.ancestor(j);
        if (anc != 0) {
            tm.path_inv(anc - 1, j - 1) = -1.0;
        }
    }

    Eigen::VectorXd r(n), x(n);
    for (int i = 1; i <= n; ++i) {
        r(i - 1) = net.edge(i).resistance;
        x(i - 1) = net.edge(i).reactance;
    }
    tm.volt_sens = tm.path.transpose() * r.asDiagonal() * tm.path;
    tm.volt_sens_x = tm.path.transpose() * x.asDiagonal() * tm.path;
    tm.volt_sens_inv = invert_spd(tm.volt_sens, "voltage sensitivity");
    return tm;
}

TopologyMatrices build_matrices(const RadialNetwork& net, const Eigen::MatrixXd& fnd_sens_pp,
                                const Eigen::MatrixXd& fnd_sens_qp)
{
    TopologyMatrices tm = build_matrices(net);
    const int n = net.node_count();
    if (fnd_sens_pp.rows() != n || fnd_sens_pp.cols() != n || fnd_sens_qp.rows() != n ||
        fnd_sens_qp.cols() != n) {
        fail("loss-aware matrices: sensitivity blocks must be n x n");
    }
    Eigen::VectorXd r(n), x(n);
    for (int i = 1; i <= n; ++i) {
        r(i - 1) = net.edge(i).resistance;
        x(i - 1) = net.edge(i).reactance;
    }
    tm.loss_aware = true;
    tm.path_loss = tm.path * (Eigen::MatrixXd::Identity(n, n) + fnd_sens_pp);
    tm.volt_sens_loss = tm.path.transpose() *
                        (r.asDiagonal() * tm.path_loss + x.asDiagonal() * tm.path * fnd_sens_qp);
    // The loss-aware sensitivity is no longer symmetric; invert by LU.
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(tm.volt_sens_loss);
    tm.volt_sens_loss_inv = lu.solve(Eigen::MatrixXd::Identity(n, n));
    const double resid =
        (tm.volt_sens_loss_inv * tm.volt_sens_loss - Eigen::MatrixXd::Identity(n, n))
            .cwiseAbs()
            .maxCoeff();
    if (!std::isfinite(resid) || resid > 1e-8) {
        std::ostringstream os;
        os << "loss-aware voltage sensitivity: inversion residual " << resid;
        fail(os.str());
    }
    return tm;
}

namespace {

using nlohmann::json;

double need_number(const json& obj, const char* key, const std::string& where)
{
    if (!obj.contains(key) || !obj[key].is_number()) {
        fail(where + ": missing or malformed field '" + key + "'");
    }
    return obj[key].get<double>();
}

int need_int(const json& obj, const char* key, const std::string& where)
{
    if (!obj.contains(key) || !obj[key].is_number_integer()) {
        fail(where + ": missing or malformed field '" + key + "'");
    }
    return obj[key].get<int>();
}

double opt_number(const json& obj, const char* key, double fallback)
{
    if (!obj.contains(key) || obj[key].is_null()) {
        return fallback;
    }
    return obj[key].get<double>();
}

} // namespace

RadialNetwork load_network(const std::string& json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(std::string("network document: ") + e.what());
    }

    RadialNetwork net;
    if (doc.contains("base") && doc["base"].is_object()) {
        net.base_mva = opt_number(doc["base"], "power_mva", 1.0);
        if (!(net.base_mva > 0.0)) {
            fail("base: power_mva must be positive");
        }
    }

    if (!doc.contains("nodes") || !doc["nodes"].is_array() || doc["nodes"].empty()) {
        fail("network document: missing 'nodes' array");
    }
    const auto& jnodes = doc["nodes"];
    net.nodes.resize(jnodes.size());
    std::vector<bool> seen(jnodes.size(), false);
    for (const auto& jn : jnodes) {
        const int id = need_int(jn, "id", "node");
        const std::string where = "node " + std::to_string(id);
        if (id < 0 || id >= static_cast<int>(jnodes.size())) {
            fail(where + ": ids must cover 0.." + std::to_string(jnodes.size() - 1));
        }
        if (seen[static_cast<size_t>(id)]) {
            fail(where + ": duplicate id");
        }
        seen[static_cast<size_t>(id)] = true;
        NodeData nd;
        nd.demand_p = need_number(jn, "dP", where);
        nd.demand_q = need_number(jn, "dQ", where);
        if (id == 0) {
            if (jn.contains("u0")) {
                net.root_voltage_sq = jn["u0"].get<double>();
            } else {
                const double lo = opt_number(jn, "u_min", 1.0);
                const double hi = opt_number(jn, "u_max", 1.0);
                if (lo != hi) {
                    fail("node 0: root voltage is fixed; give 'u0' or equal bounds");
                }
                net.root_voltage_sq = lo;
            }
            nd.u_min = nd.u_max = net.root_voltage_sq;
        } else {
            nd.u_min = need_number(jn, "u_min", where);
            nd.u_max = need_number(jn, "u_max", where);
        }
        net.nodes[static_cast<size_t>(id)] = nd;
    }

    if (!doc.contains("edges") || !doc["edges"].is_array()) {
        fail("network document: missing 'edges' array");
    }
    for (const auto& je : doc["edges"]) {
        EdgeData e;
        e.node = need_int(je, "to", "edge");
        const std::string where = "edge " + std::to_string(e.node);
        if (je.contains("id") && je["id"].get<int>() != e.node) {
            fail(where + ": edge id must equal its downstream node");
        }
        e.ancestor = need_int(je, "from", where);
        e.resistance = need_number(je, "r", where);
        e.reactance = need_number(je, "x", where);
        e.flow_limit = need_number(je, "s_max", where);
        net.edges.push_back(e);
    }

    if (doc.contains("ders") && doc["ders"].is_array()) {
        for (const auto& jd : doc["ders"]) {
            DerData d;
            d.node = need_int(jd, "node", "der");
            const std::string where = "der at node " + std::to_string(d.node);
            d.p_min = opt_number(jd, "gP_min", -DerData::kUnbounded);
            d.p_max = opt_number(jd, "gP_max", DerData::kUnbounded);
            d.q_min = opt_number(jd, "gQ_min", -DerData::kUnbounded);
            d.q_max = opt_number(jd, "gQ_max", DerData::kUnbounded);
            if (jd.contains("c2") || jd.contains("c1")) {
                d.c2 = need_number(jd, "c2", where);
                d.c1 = opt_number(jd, "c1", 0.0);
                d.c0 = opt_number(jd, "c0", 0.0);
                if (!(d.c2 > 0.0)) {
                    fail(where + ": c2 must be positive");
                }
                d.b = 1.0 / (2.0 * d.c2);
                d.a = d.c1 * d.b;
                d.cost_offset = d.c0 - d.a * d.a / (2.0 * d.b);
            } else if (jd.contains("a") || jd.contains("b")) {
                d.a = need_number(jd, "a", where);
                d.b = need_number(jd, "b", where);
                if (!(d.b > 0.0)) {
                    fail(where + ": b must be positive");
                }
                d.c2 = 1.0 / (2.0 * d.b);
                d.c1 = d.a / d.b;
                d.c0 = d.a * d.a / (2.0 * d.b);
                d.cost_offset = 0.0;
            } else {
                fail(where + ": cost parameters required ((c2,c1,c0) or (a,b))");
            }
            net.ders.push_back(d);
        }
    }

    const int n = static_cast<int>(net.nodes.size()) - 1;
    if (!doc.contains("uncertainty") || !doc["uncertainty"].is_object()) {
        fail("network document: missing 'uncertainty' object");
    }
    const auto& ju = doc["uncertainty"];
    const double eps_g = need_number(ju, "eps_g", "uncertainty");
    const double eps_v = need_number(ju, "eps_v", "uncertainty");
    const double eps_f = need_number(ju, "eps_f", "uncertainty");
    if (ju.contains("sigma_diag")) {
        const auto& sd = ju["sigma_diag"];
        if (!sd.is_array() || static_cast<int>(sd.size()) != n) {
            fail("uncertainty: sigma_diag must list one standard deviation per non-root node");
        }
        Eigen::VectorXd devs(n);
        for (int i = 0; i < n; ++i) {
            devs(i) = sd[static_cast<size_t>(i)].get<double>();
        }
        net.uncertainty = UncertaintySpec::from_std_devs(devs, eps_g, eps_v, eps_f);
    } else if (ju.contains("sigma")) {
        const auto& sm = ju["sigma"];
        if (!sm.is_array() || static_cast<int>(sm.size()) != n) {
            fail("uncertainty: sigma must be an n x n matrix");
        }
        Eigen::MatrixXd sigma(n, n);
        for (int i = 0; i < n; ++i) {
            const auto& row = sm[static_cast<size_t>(i)];
            if (!row.is_array() || static_cast<int>(row.size()) != n) {
                fail("uncertainty: sigma row " + std::to_string(i + 1) + " has wrong length");
            }
            for (int j = 0; j < n; ++j) {
                sigma(i, j) = row[static_cast<size_t>(j)].get<double>();
            }
        }
        net.uncertainty = UncertaintySpec::from_covariance(sigma, eps_g, eps_v, eps_f);
    } else {
        fail("uncertainty: either 'sigma_diag' or 'sigma' is required");
    }

    net.finalize();
    return net;
}

RadialNetwork load_network_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open network file: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_network(buf.str());
}

} // namespace dlmp
