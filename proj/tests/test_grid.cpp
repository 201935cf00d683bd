#include "dlmp/grid.hpp"
#include "dlmp/normal.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace dlmp;

namespace {

std::string two_node_doc()
{
    return R"({
      "base": {"power_mva": 1.0},
      "nodes": [
        {"id": 0, "dP": 0.0, "dQ": 0.0, "u0": 1.0},
        {"id": 1, "dP": 0.1, "dQ": 0.05, "u_min": 0.81, "u_max": 1.21}
      ],
      "edges": [{"id": 1, "from": 0, "to": 1, "r": 0.1, "x": 0.1, "s_max": 1.0}],
      "ders": [{"node": 0, "c2": 1.0, "c1": 10.0, "c0": 0.0}],
      "uncertainty": {"sigma_diag": [0.02], "eps_g": 0.05, "eps_v": 0.01, "eps_f": 0.05}
    })";
}

std::string chain3_doc(double r1 = 0.1, double r2 = 0.2)
{
    std::ostringstream os;
    os << R"({
      "nodes": [
        {"id": 0, "dP": 0, "dQ": 0, "u0": 1.0},
        {"id": 1, "dP": 0.1, "dQ": 0.0, "u_min": 0.8, "u_max": 1.2},
        {"id": 2, "dP": 0.1, "dQ": 0.0, "u_min": 0.8, "u_max": 1.2}
      ],
      "edges": [
        {"from": 0, "to": 1, "r": )"
       << r1 << R"(, "x": 0.1, "s_max": 1.0},
        {"from": 1, "to": 2, "r": )"
       << r2 << R"(, "x": 0.1, "s_max": 1.0}
      ],
      "ders": [{"node": 0, "c2": 1.0, "c1": 10.0, "c0": 0.0}],
      "uncertainty": {"sigma_diag": [0.0, 0.0], "eps_g": 0.05, "eps_v": 0.01, "eps_f": 0.05}
    })";
    return os.str();
}

std::string star_doc()
{
    return R"({
      "nodes": [
        {"id": 0, "dP": 0, "dQ": 0, "u0": 1.0},
        {"id": 1, "dP": 0.1, "dQ": 0.0, "u_min": 0.8, "u_max": 1.2},
        {"id": 2, "dP": 0.1, "dQ": 0.0, "u_min": 0.8, "u_max": 1.2}
      ],
      "edges": [
        {"from": 0, "to": 1, "r": 0.1, "x": 0.1, "s_max": 1.0},
        {"from": 0, "to": 2, "r": 0.2, "x": 0.1, "s_max": 1.0}
      ],
      "ders": [{"node": 0, "c2": 1.0, "c1": 10.0, "c0": 0.0}],
      "uncertainty": {"sigma_diag": [0.0, 0.0], "eps_g": 0.05, "eps_v": 0.01, "eps_f": 0.05}
    })";
}

} // namespace

TEST_CASE("two-node document loads as the smallest legal tree")
{
    RadialNetwork net = load_network(two_node_doc());
    CHECK(net.node_count() == 1);
    CHECK(net.edges.size() == 1);
    CHECK(net.edge(1).resistance == doctest::Approx(0.1));
    CHECK(net.root_voltage_sq == doctest::Approx(1.0));
    CHECK(net.has_der(0));
    CHECK_FALSE(net.has_der(1));
    // c2 = 1 implies b = 0.5, a = c1 b = 5.
    CHECK(net.der_at(0)->b == doctest::Approx(0.5));
    CHECK(net.der_at(0)->a == doctest::Approx(5.0));
}

TEST_CASE("cycle in the edge list is rejected")
{
    std::string doc = R"({
      "nodes": [
        {"id": 0, "dP": 0, "dQ": 0, "u0": 1.0},
        {"id": 1, "dP": 0.1, "dQ": 0, "u_min": 0.8, "u_max": 1.2},
        {"id": 2, "dP": 0.1, "dQ": 0, "u_min": 0.8, "u_max": 1.2}
      ],
      "edges": [
        {"from": 2, "to": 1, "r": 0.1, "x": 0.1, "s_max": 1.0},
        {"from": 1, "to": 2, "r": 0.1, "x": 0.1, "s_max": 1.0}
      ],
      "ders": [{"node": 0, "c2": 1.0, "c1": 10.0, "c0": 0.0}],
      "uncertainty": {"sigma_diag": [0, 0], "eps_g": 0.05, "eps_v": 0.01, "eps_f": 0.05}
    })";
    CHECK_THROWS_WITH_AS(load_network(doc), doctest::Contains("cycle"), ValidationError);
}

TEST_CASE("malformed and inconsistent fields are rejected with identifiers")
{
    // Non-positive impedance.
    CHECK_THROWS_WITH_AS(load_network(R"({
      "nodes": [{"id":0,"dP":0,"dQ":0,"u0":1.0},{"id":1,"dP":0.1,"dQ":0,"u_min":0.8,"u_max":1.2}],
      "edges": [{"from":0,"to":1,"r":0.0,"x":0.1,"s_max":1.0}],
      "ders": [{"node":0,"c2":1.0,"c1":10.0,"c0":0.0}],
      "uncertainty": {"sigma_diag":[0],"eps_g":0.05,"eps_v":0.01,"eps_f":0.05}
    })"),
                         doctest::Contains("edge 1"), ValidationError);
    // Missing ancestor node.
    CHECK_THROWS_WITH_AS(load_network(R"({
      "nodes": [{"id":0,"dP":0,"dQ":0,"u0":1.0},{"id":1,"dP":0.1,"dQ":0,"u_min":0.8,"u_max":1.2}],
      "edges": [{"from":7,"to":1,"r":0.1,"x":0.1,"s_max":1.0}],
      "ders": [{"node":0,"c2":1.0,"c1":10.0,"c0":0.0}],
      "uncertainty": {"sigma_diag":[0],"eps_g":0.05,"eps_v":0.01,"eps_f":0.05}
    })"),
                         doctest::Contains("ancestor"), ValidationError);
    // Disconnected node (self-contained two-component doc).
    CHECK_THROWS_AS(load_network(R"({
      "nodes": [{"id":0,"dP":0,"dQ":0,"u0":1.0},{"id":1,"dP":0.1,"dQ":0,"u_min":0.8,"u_max":1.2},
                {"id":2,"dP":0.1,"dQ":0,"u_min":0.8,"u_max":1.2}],
      "edges": [{"from":0,"to":1,"r":0.1,"x":0.1,"s_max":1.0},
                {"from":2,"to":2,"r":0.1,"x":0.1,"s_max":1.0}],
      "ders": [{"node":0,"c2":1.0,"c1":10.0,"c0":0.0}],
      "uncertainty": {"sigma_diag":[0,0],"eps_g":0.05,"eps_v":0.01,"eps_f":0.05}
    })"),
                    ValidationError);
    // Malformed field.
    CHECK_THROWS_WITH_AS(load_network(R"({
      "nodes": [{"id":0,"dP":0,"dQ":0,"u0":1.0},{"id":1,"dQ":0,"u_min":0.8,"u_max":1.2}],
      "edges": [{"from":0,"to":1,"r":0.1,"x":0.1,"s_max":1.0}],
      "ders": [{"node":0,"c2":1.0,"c1":10.0,"c0":0.0}],
      "uncertainty": {"sigma_diag":[0],"eps_g":0.05,"eps_v":0.01,"eps_f":0.05}
    })"),
                         doctest::Contains("dP"), ValidationError);
}

TEST_CASE("topology sets on chain and star")
{
    RadialNetwork chain = load_network(chain3_doc());
    TopologySets t1 = topology_sets(chain, 1);
    CHECK(t1.ancestor == 0);
    CHECK(t1.children == std::vector<int>{2});
    CHECK(t1.downstream == std::vector<int>{1, 2});

    RadialNetwork star = load_network(star_doc());
    TopologySets t0 = topology_sets(star, 0);
    CHECK(t0.ancestor == -1);
    CHECK(t0.children == std::vector<int>{1, 2});
    CHECK(t0.downstream == std::vector<int>{0, 1, 2});

    CHECK_THROWS_AS(topology_sets(star, 9), ValidationError);
}

TEST_CASE("matrices of the 3-node chain match hand evaluation")
{
    RadialNetwork net = load_network(chain3_doc(0.1, 0.2));
    TopologyMatrices tm = build_matrices(net);
    Eigen::MatrixXd a_expect(2, 2);
    a_expect << 1, 1, 0, 1;
    CHECK((tm.path - a_expect).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    Eigen::MatrixXd r_expect(2, 2);
    r_expect << 0.1, 0.1, 0.1, 0.3;
    CHECK((tm.volt_sens - r_expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("star yields identity path matrix and diagonal sensitivity")
{
    RadialNetwork net = load_network(star_doc());
    TopologyMatrices tm = build_matrices(net);
    CHECK((tm.path - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(tm.volt_sens(0, 0) == doctest::Approx(0.1));
    CHECK(tm.volt_sens(1, 1) == doctest::Approx(0.2));
    CHECK(tm.volt_sens(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("zero loss sensitivities leave the matrices unchanged")
{
    RadialNetwork net = load_network(chain3_doc());
    const int n = net.node_count();
    TopologyMatrices plain = build_matrices(net);
    TopologyMatrices lossy =
        build_matrices(net, Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n));
    CHECK(lossy.loss_aware);
    CHECK((lossy.path_loss - plain.path).cwiseAbs().maxCoeff() == 0.0);
    CHECK((lossy.volt_sens_loss - plain.volt_sens).cwiseAbs().maxCoeff() == 0.0);
    CHECK((lossy.volt_sens_loss_inv * lossy.volt_sens_loss - Eigen::MatrixXd::Identity(n, n))
              .cwiseAbs()
              .maxCoeff() < 1e-8);
}

namespace {

/// Random tree on n nodes: each node's ancestor is drawn among lower ids.
RadialNetwork random_network(int n, unsigned seed)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> imp(0.01, 0.3);
    std::uniform_real_distribution<double> dem(-0.2, 0.5);
    std::ostringstream os;
    os << R"({ "nodes": [ {"id":0,"dP":0,"dQ":0,"u0":1.0} )";
    for (int i = 1; i <= n; ++i) {
        os << ",{\"id\":" << i << ",\"dP\":" << dem(rng) << ",\"dQ\":" << dem(rng) * 0.4
           << ",\"u_min\":0.8,\"u_max\":1.25}";
    }
    os << R"( ], "edges": [ )";
    for (int i = 1; i <= n; ++i) {
        const int anc = std::uniform_int_distribution<int>(0, i - 1)(rng);
        os << (i > 1 ? "," : "") << "{\"from\":" << anc << ",\"to\":" << i
           << ",\"r\":" << imp(rng) << ",\"x\":" << imp(rng) << ",\"s_max\":2.0}";
    }
    os << R"( ], "ders": [{"node":0,"c2":1.0,"c1":10.0,"c0":0.0}],
      "uncertainty": {"sigma_diag": [)";
    for (int i = 1; i <= n; ++i) {
        os << (i > 1 ? "," : "") << 0.05;
    }
    os << R"(], "eps_g":0.05,"eps_v":0.01,"eps_f":0.05} })";
    return load_network(os.str());
}

} // namespace

TEST_CASE("path matrix from downstream sets equals the direct construction")
{
    for (unsigned seed : {1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u}) {
        const int n = 3 + static_cast<int>(seed) % 8;
        RadialNetwork net = random_network(n, seed);
        TopologyMatrices tm = build_matrices(net);
        Eigen::MatrixXd from_sets = Eigen::MatrixXd::Zero(n, n);
        for (int i = 1; i <= n; ++i) {
            for (int j : topology_sets(net, i).downstream) {
                from_sets(i - 1, j - 1) = 1.0;
            }
        }
        CHECK((tm.path - from_sets).cwiseAbs().maxCoeff() == 0.0);

        // Structural inverses.
        CHECK((tm.path_inv * tm.path - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <=
              1e-12);
        CHECK((tm.volt_sens_inv * tm.volt_sens - Eigen::MatrixXd::Identity(n, n))
                  .cwiseAbs()
                  .maxCoeff() <= 1e-10);

        // Exact symmetry and positive definiteness of the sensitivity.
        CHECK((tm.volt_sens - tm.volt_sens.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(tm.volt_sens);
        CHECK(eig.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("total standard deviation squares to the covariance sum")
{
    Eigen::MatrixXd sigma(2, 2);
    sigma << 0.04, 0.01, 0.01, 0.09;
    UncertaintySpec u = UncertaintySpec::from_covariance(sigma, 0.05, 0.01, 0.05);
    CHECK(u.total_std * u.total_std == doctest::Approx(sigma.sum()).epsilon(1e-14));
    CHECK((u.sigma_sqrt * u.sigma_sqrt - sigma).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0; // indefinite
    CHECK_THROWS_AS(UncertaintySpec::from_covariance(bad, 0.05, 0.01, 0.05), ValidationError);
}

TEST_CASE("gaussian quantile matches a bisection oracle to 1e-9")
{
    // Oracle: bisect the erfc-based CDF, independent of the production path.
    auto oracle = [](double eps) {
        long double lo = 0.0L, hi = 40.0L;
        const long double target = 1.0L - static_cast<long double>(eps);
        for (int it = 0; it < 200; ++it) {
            const long double mid = 0.5L * (lo + hi);
            const long double cdf = 0.5L * erfcl(-mid / sqrtl(2.0L));
            (cdf < target ? lo : hi) = mid;
        }
        return static_cast<double>(0.5L * (lo + hi));
    };

    CHECK(gaussian_quantile(0.05) == doctest::Approx(1.644854).epsilon(1e-6));
    CHECK(gaussian_quantile(0.01) == doctest::Approx(2.326348).epsilon(1e-6));
    for (double eps : {0.4999, 0.25, 0.1, 0.05, 0.01, 0.001, 1e-6, 1e-9}) {
        CHECK(std::abs(gaussian_quantile(eps) - oracle(eps)) < 1e-9);
    }
    CHECK_THROWS_AS(gaussian_quantile(0.5), std::invalid_argument);
    CHECK_THROWS_AS(gaussian_quantile(0.0), std::invalid_argument);
    CHECK_THROWS_AS(gaussian_quantile(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(gaussian_quantile(0.7), std::invalid_argument);
}
