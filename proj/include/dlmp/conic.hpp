#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dlmp::conic {

/// Identifies a constraint for dual retrieval: a kind tag plus up to two
/// indices (node/edge, and a facet index for polygonal cuts).
struct Label {
    std::string kind;
    int index = -1;
    int sub = -1;

    std::string str() const;
    friend bool operator<(const Label& a, const Label& b)
    {
        return std::tie(a.kind, a.index, a.sub) < std::tie(b.kind, b.index, b.sub);
    }
    friend bool operator==(const Label& a, const Label& b)
    {
        return a.kind == b.kind && a.index == b.index && a.sub == b.sub;
    }
};

/// Sparse affine expression over program variables.
class LinExpr {
public:
    LinExpr() = default;
    explicit LinExpr(double constant) : constant_(constant) {}

    LinExpr& add(int var, double coef);
    LinExpr& add_constant(double c)
    {
        constant_ += c;
        return *this;
    }

    const std::map<int, double>& coeffs() const { return coeffs_; }
    double constant() const { return constant_; }
    double eval(const Eigen::VectorXd& x) const;

    LinExpr operator-() const;
    LinExpr& operator+=(const LinExpr& other);
    LinExpr& operator-=(const LinExpr& other);
    LinExpr& operator*=(double k);

private:
    std::map<int, double> coeffs_;
    double constant_ = 0.0;
};

LinExpr term(int var, double coef = 1.0);

struct EqConstraint {
    LinExpr lhs; // lhs == rhs
    double rhs = 0.0;
    Label label;
};

struct IneqConstraint {
    LinExpr lhs; // lhs <= rhs
    double rhs = 0.0;
    Label label;
};

struct SocConstraint {
    std::vector<LinExpr> tail; // ||tail(x)||_2 <= head(x)
    LinExpr head;
    Label label;
};

struct QuadCost {
    LinExpr expr; // contributes weight * expr(x)^2 to the objective
    double weight = 0.0;
};

/// Labeled conic optimization model: linear objective plus convex quadratic
/// terms (lowered to cone epigraphs by the backend), linear equalities and
/// inequalities, and second-order cone constraints. Immutable once handed to
/// a solver.
class ConicProgram {
public:
    int add_variable(const std::string& name);
    int variable(const std::string& name) const; ///< throws if unknown
    std::optional<int> find_variable(const std::string& name) const;

    void add_linear_cost(const LinExpr& e);
    void add_quadratic_cost(const LinExpr& e, double weight);

    /// lhs == rhs. The stored dual is the sensitivity of the optimal
    /// objective to an increase of rhs.
    void add_eq(LinExpr lhs, double rhs, Label label);
    /// lhs <= rhs. The stored dual is >= 0.
    void add_ineq(LinExpr lhs, double rhs, Label label);
    /// ||tail(x)|| <= head(x). The stored dual is the multiplier on the
    /// head row of the dual cone block (>= 0).
    void add_soc(std::vector<LinExpr> tail, LinExpr head, Label label);

    int num_variables() const { return static_cast<int>(names_.size()); }
    const std::string& variable_name(int v) const { return names_.at(static_cast<size_t>(v)); }
    const LinExpr& linear_cost() const { return linear_cost_; }
    const std::vector<QuadCost>& quadratic_costs() const { return quad_costs_; }
    const std::vector<EqConstraint>& equalities() const { return eqs_; }
    const std::vector<IneqConstraint>& inequalities() const { return ineqs_; }
    const std::vector<SocConstraint>& socs() const { return socs_; }

    /// Structural checks: declared variables, unique labels, consistent
    /// cone dimensions. Throws Error on violation.
    void validate() const;

    /// Serializes the model (objective, cones, labels) to a text benchmark
    /// format for cross-solver verification.
    std::string dump() const;

private:
    void check_label(const Label& label);
    void check_expr(const LinExpr& e) const;

    std::vector<std::string> names_;
    std::map<std::string, int> by_name_;
    LinExpr linear_cost_;
    std::vector<QuadCost> quad_costs_;
    std::vector<EqConstraint> eqs_;
    std::vector<IneqConstraint> ineqs_;
    std::vector<SocConstraint> socs_;
    std::map<std::string, int> label_seen_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

const char* to_string(SolveStatus s);

struct SolverStats {
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap_abs = 0.0;
    double gap_rel = 0.0;
    double primal_objective = 0.0; ///< without constant offset
    double dual_objective = 0.0;   ///< without constant offset
    double solve_seconds = 0.0;
    std::string backend;
    std::string note; ///< certificate or failure detail
};

struct Solution {
    SolveStatus status = SolveStatus::NumericalFailure;
    double objective = 0.0;    ///< includes constant offsets
    Eigen::VectorXd primal;    ///< by variable id
    std::map<std::string, double> duals; ///< by Label::str()
    /// Full dual cone blocks for SOC constraints, by Label::str(); entry 0
    /// is the head multiplier.
    std::map<std::string, Eigen::VectorXd> soc_dual_blocks;
    SolverStats stats;

    double value(int var) const { return primal(var); }
    double dual(const Label& label) const;
    bool has_dual(const Label& label) const;
    /// Dual if present, 0 otherwise (for constraints omitted in a scenario).
    double dual_or_zero(const Label& label) const;
};

} // namespace dlmp::conic
