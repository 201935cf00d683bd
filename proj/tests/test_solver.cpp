#include "dlmp/solver.hpp"

#include <doctest.h>

#include <cstdlib>
#include <random>

using namespace dlmp::conic;

namespace {

void use_reference_script()
{
    setenv("DLMP_REFERENCE_SOLVER",
           "python3 " DLMP_SOURCE_DIR "/tools/reference_backend.py", 0);
}

} // namespace

TEST_CASE("one-variable LP: bound dual is the objective sensitivity")
{
    ConicProgram p;
    const int x = p.add_variable("x");
    p.add_linear_cost(term(x, 1.0));
    p.add_ineq(term(x, -1.0), -3.0, {"bound", 0}); // x >= 3
    Solution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.value(x) == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(sol.dual({"bound", 0}) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(duality_gap(p, sol) < 1e-12);
}

TEST_CASE("quadratic epigraph: min x^2 subject to x >= 1")
{
    ConicProgram p;
    const int x = p.add_variable("x");
    p.add_quadratic_cost(term(x, 1.0), 1.0);
    p.add_ineq(term(x, -1.0), -1.0, {"bound", 0});
    Solution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.value(x) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-7));
    // Stationarity at x = 1: 2x = dual.
    CHECK(sol.dual({"bound", 0}) == doctest::Approx(2.0).epsilon(1e-6));

    KktReport kkt = kkt_residuals(p, sol);
    CHECK(kkt.max_stationarity < 1e-6);
    CHECK(kkt.max_complementarity < 1e-6);
    CHECK(kkt.max_primal_infeasibility < 1e-8);
}

TEST_CASE("second-order cone with analytic solution")
{
    // min -x - y s.t. ||(x, y)|| <= sqrt(2): optimum at x = y = 1.
    ConicProgram p;
    const int x = p.add_variable("x");
    const int y = p.add_variable("y");
    LinExpr cost;
    cost.add(x, -1.0).add(y, -1.0);
    p.add_linear_cost(cost);
    p.add_soc({term(x, 1.0), term(y, 1.0)}, LinExpr(std::sqrt(2.0)), {"disc", 0});
    Solution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.value(x) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(sol.value(y) == doctest::Approx(1.0).epsilon(1e-7));
    // Head dual balances the objective gradient: z0 * x/||.|| = 1 => z0 = sqrt(2)...
    // gradient (-1,-1) balanced by z0 * (1,1)/sqrt(2): z0 = sqrt(2).
    CHECK(sol.dual({"disc", 0}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("infeasible and unbounded programs are certified")
{
    {
        ConicProgram p;
        const int x = p.add_variable("x");
        p.add_ineq(term(x, 1.0), 1.0, {"ub", 0});
        p.add_ineq(term(x, -1.0), -2.0, {"lb", 0}); // x >= 2 contradicts x <= 1
        p.add_linear_cost(term(x, 1.0));
        Solution sol = solve(p);
        CHECK(sol.status == SolveStatus::Infeasible);
        CHECK_THROWS(duality_gap(p, sol));
    }
    {
        ConicProgram p;
        const int x = p.add_variable("x");
        p.add_ineq(term(x, 1.0), 1.0, {"ub", 0});
        p.add_linear_cost(term(x, 1.0)); // min x, x unbounded below
        Solution sol = solve(p);
        CHECK(sol.status == SolveStatus::Unbounded);
    }
}

TEST_CASE("degenerate cone with constant tail collapses to a linear row")
{
    // t >= ||(0.3, 0.4)|| = 0.5 with cost t.
    ConicProgram p;
    const int t = p.add_variable("t");
    p.add_linear_cost(term(t, 1.0));
    p.add_soc({LinExpr(0.3), LinExpr(0.4)}, term(t, 1.0), {"fixed", 0});
    Solution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.value(t) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(sol.dual({"fixed", 0}) == doctest::Approx(1.0).epsilon(1e-7));
    // Reconstructed dual block lies in the cone and is complementary.
    const Eigen::VectorXd& blk = sol.soc_dual_blocks.at(Label{"fixed", 0}.str());
    CHECK(blk(0) >= blk.tail(2).norm() - 1e-9);
    CHECK(std::abs(0.5 * blk(0) + 0.3 * blk(1) + 0.4 * blk(2)) < 1e-7);
}

TEST_CASE("duplicate labels and undeclared variables are construction errors")
{
    ConicProgram p;
    const int x = p.add_variable("x");
    p.add_ineq(term(x, 1.0), 1.0, {"c", 0});
    CHECK_THROWS(p.add_ineq(term(x, 1.0), 2.0, {"c", 0}));
    CHECK_THROWS(p.add_eq(term(7, 1.0), 0.0, {"bad", 0}));
}

namespace {

/// Random bounded program: quadratic costs, box bounds, a few couplings.
ConicProgram random_program(unsigned seed, int nvars)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    ConicProgram p;
    std::vector<int> vars;
    for (int i = 0; i < nvars; ++i) {
        vars.push_back(p.add_variable("v[" + std::to_string(i) + "]"));
    }
    LinExpr cost;
    for (int v : vars) {
        cost.add(v, coef(rng));
        p.add_ineq(term(v, 1.0), 1.0 + std::abs(coef(rng)), {"ub", v});
        p.add_ineq(term(v, -1.0), 1.0 + std::abs(coef(rng)), {"lb", v});
        if (coef(rng) > 0.0) {
            LinExpr q = term(v, 1.0);
            q.add_constant(coef(rng));
            p.add_quadratic_cost(q, 0.2 + std::abs(coef(rng)));
        }
    }
    p.add_linear_cost(cost);
    // A coupling equality and one cone over the first three variables.
    LinExpr eq;
    for (int v : vars) {
        eq.add(v, coef(rng));
    }
    p.add_eq(eq, 0.1, {"couple", 0});
    if (nvars >= 3) {
        p.add_soc({term(vars[0], 1.0), term(vars[1], 0.5)},
                  term(vars[2], 0.7).add_constant(2.0), {"cone", 0});
    }
    return p;
}

} // namespace

TEST_CASE("random programs agree with the reference backend")
{
    use_reference_script();
    for (unsigned seed : {11u, 12u, 13u, 14u, 15u, 16u}) {
        ConicProgram p = random_program(seed, 4 + static_cast<int>(seed % 3));
        Solution mine = solve(p);
        REQUIRE(mine.status == SolveStatus::Optimal);

        SolveOptions ref_opt;
        ref_opt.backend = "reference";
        Solution ref = solve(p, ref_opt);
        REQUIRE(ref.status == SolveStatus::Optimal);

        CHECK(std::abs(mine.objective - ref.objective) < 1e-6);
        for (const auto& [label, val] : mine.duals) {
            const double other = ref.duals.at(label);
            CHECK(std::abs(val - other) < 1e-4);
        }
        CHECK(duality_gap(p, mine) < 1e-8);
        KktReport kkt = kkt_residuals(p, mine);
        CHECK(kkt.max_stationarity < 1e-6);
        CHECK(kkt.max_complementarity < 1e-6);
        CHECK(kkt.max_primal_infeasibility < 1e-8);
    }
}

TEST_CASE("equality duals are right-hand-side sensitivities")
{
    // min (x+2)^2 + y^2 s.t. x + y = d. Optimal objective has known
    // derivative with respect to d; check the stored dual against a
    // finite-difference re-solve.
    auto build = [](double d) {
        ConicProgram p;
        const int x = p.add_variable("x");
        const int y = p.add_variable("y");
        LinExpr ex = term(x, 1.0);
        ex.add_constant(2.0);
        p.add_quadratic_cost(ex, 1.0);
        p.add_quadratic_cost(term(y, 1.0), 1.0);
        LinExpr bal;
        bal.add(x, 1.0).add(y, 1.0);
        p.add_eq(bal, d, {"bal", 0});
        return p;
    };
    const double d0 = 0.7, h = 1e-4;
    ConicProgram p = build(d0);
    Solution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    Solution up = solve(build(d0 + h));
    Solution dn = solve(build(d0 - h));
    const double fd = (up.objective - dn.objective) / (2.0 * h);
    CHECK(sol.dual({"bal", 0}) == doctest::Approx(fd).epsilon(1e-5));

    // Perturbing a primal value must surface in the stationarity residual.
    Solution broken = sol;
    broken.primal(0) += 0.1;
    KktReport kkt = kkt_residuals(p, broken);
    CHECK(kkt.max_stationarity > 1e-3);
}

TEST_CASE("standard form dump is stable and complete")
{
    ConicProgram p = random_program(3, 4);
    const std::string dump = dump_standard_form(p);
    CHECK(dump.find("soc_dims") != std::string::npos);
    CHECK(dump.find("labels") != std::string::npos);
    CHECK(dump == dump_standard_form(p));
}
