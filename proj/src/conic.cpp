#include "dlmp/conic.hpp"

#include "dlmp/grid.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace dlmp::conic {

std::string Label::str() const
{
    std::string s = kind;
    if (index >= 0) {
        s += '[';
        s += std::to_string(index);
        if (sub >= 0) {
            s += ',';
            s += std::to_string(sub);
        }
        s += ']';
    }
    return s;
}

LinExpr& LinExpr::add(int var, double coef)
{
    if (coef != 0.0) {
        auto [it, inserted] = coeffs_.emplace(var, coef);
        if (!inserted) {
            it->second += coef;
            if (it->second == 0.0) {
                coeffs_.erase(it);
            }
        }
    }
    return *this;
}

double LinExpr::eval(const Eigen::VectorXd& x) const
{
    double v = constant_;
    for (const auto& [var, coef] : coeffs_) {
        v += coef * x(var);
    }
    return v;
}

LinExpr LinExpr::operator-() const
{
    LinExpr out;
    out.constant_ = -constant_;
    for (const auto& [var, coef] : coeffs_) {
        out.coeffs_[var] = -coef;
    }
    return out;
}

LinExpr& LinExpr::operator+=(const LinExpr& other)
{
    constant_ += other.constant_;
    for (const auto& [var, coef] : other.coeffs_) {
        add(var, coef);
    }
    return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& other)
{
    constant_ -= other.constant_;
    for (const auto& [var, coef] : other.coeffs_) {
        add(var, -coef);
    }
    return *this;
}

LinExpr& LinExpr::operator*=(double k)
{
    constant_ *= k;
    for (auto& [var, coef] : coeffs_) {
        coef *= k;
    }
    return *this;
}

LinExpr term(int var, double coef)
{
    LinExpr e;
    e.add(var, coef);
    return e;
}

int ConicProgram::add_variable(const std::string& name)
{
    if (by_name_.count(name)) {
        throw Error("conic program: duplicate variable '" + name + "'");
    }
    const int id = static_cast<int>(names_.size());
    names_.push_back(name);
    by_name_[name] = id;
    return id;
}

int ConicProgram::variable(const std::string& name) const
{
    auto it = by_name_.find(name);
    if (it == by_name_.end()) {
        throw Error("conic program: unknown variable '" + name + "'");
    }
    return it->second;
}

std::optional<int> ConicProgram::find_variable(const std::string& name) const
{
    auto it = by_name_.find(name);
    if (it == by_name_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void ConicProgram::add_linear_cost(const LinExpr& e)
{
    check_expr(e);
    linear_cost_ += e;
}

void ConicProgram::add_quadratic_cost(const LinExpr& e, double weight)
{
    if (weight < 0.0) {
        throw Error("conic program: quadratic cost weight must be nonnegative");
    }
    if (weight == 0.0) {
        return;
    }
    check_expr(e);
    quad_costs_.push_back({e, weight});
}

void ConicProgram::add_eq(LinExpr lhs, double rhs, Label label)
{
    check_expr(lhs);
    check_label(label);
    eqs_.push_back({std::move(lhs), rhs, std::move(label)});
}

void ConicProgram::add_ineq(LinExpr lhs, double rhs, Label label)
{
    check_expr(lhs);
    check_label(label);
    ineqs_.push_back({std::move(lhs), rhs, std::move(label)});
}

void ConicProgram::add_soc(std::vector<LinExpr> tail, LinExpr head, Label label)
{
    if (tail.empty()) {
        throw Error("conic program: cone '" + label.str() + "' has an empty tail");
    }
    for (const LinExpr& e : tail) {
        check_expr(e);
    }
    check_expr(head);
    check_label(label);
    socs_.push_back({std::move(tail), std::move(head), std::move(label)});
}

void ConicProgram::check_label(const Label& label)
{
    if (label.kind.empty()) {
        throw Error("conic program: constraint without a label");
    }
    const std::string key = label.str();
    if (label_seen_.count(key)) {
        throw Error("conic program: duplicate constraint label '" + key + "'");
    }
    label_seen_[key] = 1;
}

void ConicProgram::check_expr(const LinExpr& e) const
{
    for (const auto& [var, coef] : e.coeffs()) {
        if (var < 0 || var >= num_variables()) {
            throw Error("conic program: expression references undeclared variable id " +
                        std::to_string(var));
        }
        if (!std::isfinite(coef)) {
            throw Error("conic program: non-finite coefficient on variable '" +
                        variable_name(var) + "'");
        }
    }
}

void ConicProgram::validate() const
{
    // Labels and variable references are checked on insertion; re-verify
    // cone row consistency here.
    for (const SocConstraint& c : socs_) {
        if (c.tail.empty()) {
            throw Error("conic program: cone '" + c.label.str() + "' has no rows");
        }
    }
}

std::string ConicProgram::dump() const
{
    nlohmann::json j;
    j["variables"] = names_;
    auto expr_json = [](const LinExpr& e) {
        nlohmann::json o;
        o["const"] = e.constant();
        nlohmann::json terms = nlohmann::json::array();
        for (const auto& [var, coef] : e.coeffs()) {
            terms.push_back({var, coef});
        }
        o["terms"] = terms;
        return o;
    };
    j["objective"]["linear"] = expr_json(linear_cost_);
    j["objective"]["quadratic"] = nlohmann::json::array();
    for (const QuadCost& q : quad_costs_) {
        j["objective"]["quadratic"].push_back(
            {{"weight", q.weight}, {"expr", expr_json(q.expr)}});
    }
    j["eq"] = nlohmann::json::array();
    for (const EqConstraint& c : eqs_) {
        j["eq"].push_back({{"label", c.label.str()}, {"lhs", expr_json(c.lhs)}, {"rhs", c.rhs}});
    }
    j["ineq"] = nlohmann::json::array();
    for (const IneqConstraint& c : ineqs_) {
        j["ineq"].push_back(
            {{"label", c.label.str()}, {"lhs", expr_json(c.lhs)}, {"rhs", c.rhs}});
    }
    j["soc"] = nlohmann::json::array();
    for (const SocConstraint& c : socs_) {
        nlohmann::json tail = nlohmann::json::array();
        for (const LinExpr& e : c.tail) {
            tail.push_back(expr_json(e));
        }
        j["soc"].push_back({{"label", c.label.str()}, {"head", expr_json(c.head)}, {"tail", tail}});
    }
    return j.dump(2);
}

const char* to_string(SolveStatus s)
{
    switch (s) {
    case SolveStatus::Optimal:
        return "optimal";
    case SolveStatus::Infeasible:
        return "infeasible";
    case SolveStatus::Unbounded:
        return "unbounded";
    case SolveStatus::NumericalFailure:
        return "numerical-failure";
    }
    return "unknown";
}

double Solution::dual(const Label& label) const
{
    auto it = duals.find(label.str());
    if (it == duals.end()) {
        throw Error("solution: no dual stored for label '" + label.str() + "'");
    }
    return it->second;
}

bool Solution::has_dual(const Label& label) const
{
    return duals.count(label.str()) > 0;
}

double Solution::dual_or_zero(const Label& label) const
{
    auto it = duals.find(label.str());
    return it == duals.end() ? 0.0 : it->second;
}

} // namespace dlmp::conic
