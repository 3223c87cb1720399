#pragma once

// JSON input specs and report serialization. Non-finite numbers are written
// as the strings "inf", "-inf" and "nan" and read back the same way.

#include "na1lab/arbitrage.hpp"
#include "na1lab/errors.hpp"
#include "na1lab/factor.hpp"
#include "na1lab/hedging.hpp"
#include "na1lab/market.hpp"
#include "na1lab/portfolio.hpp"
#include "na1lab/tree.hpp"

#include <Eigen/Dense>

#include "json.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace na1lab::io {

using nlohmann::json;

/// Input that is valid JSON but does not match the expected layout.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what) : Error(what) {}
};

// ---- numbers and vectors -------------------------------------------------

inline json number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

inline double to_double(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw SchemaError(where + ": expected a number");
}

inline json vector(const Eigen::VectorXd& v) {
    json out = json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
    return out;
}

inline json vector(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(number(x));
    return out;
}

inline json matrix(const Eigen::MatrixXd& M) {
    json out = json::array();
    for (int i = 0; i < M.rows(); ++i) out.push_back(vector(Eigen::VectorXd(M.row(i).transpose())));
    return out;
}

inline const json& field(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw SchemaError(where + ": missing field \"" + key + "\"");
    return j.at(key);
}

inline Eigen::VectorXd read_vector(const json& j, const std::string& where) {
    if (!j.is_array()) throw SchemaError(where + ": expected an array of numbers");
    Eigen::VectorXd v(static_cast<int>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = to_double(j[i], where);
    return v;
}

inline Eigen::MatrixXd read_matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw SchemaError(where + ": expected a nonempty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Eigen::MatrixXd M(static_cast<int>(j.size()), static_cast<int>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto row = read_vector(j[i], where);
        if (static_cast<std::size_t>(row.size()) != cols) throw SchemaError(where + ": rows have different lengths");
        M.row(static_cast<int>(i)) = row.transpose();
    }
    return M;
}

// ---- input specs ---------------------------------------------------------

/// {"preset": "no_short" | "no_short_no_borrow" | "borrow_limit" | "box", "c", "alpha", "beta"}
/// or {"normals": [[...]], "bounds": [...]}; null means unconstrained.
inline ConstraintSet read_constraints(const json& j, int dim, const std::string& where = "constraints") {
    if (j.is_null()) return ConstraintSet(dim);
    if (!j.is_object()) throw SchemaError(where + ": expected an object");
    if (j.contains("preset")) {
        const auto name = j.at("preset").get<std::string>();
        if (name == "no_short") return preset_constraints(Preset::no_short(), dim);
        if (name == "no_short_no_borrow") return preset_constraints(Preset::no_short_no_borrow(), dim);
        if (name == "borrow_limit")
            return preset_constraints(Preset::borrow_limit(to_double(field(j, "c", where), where + ".c")), dim);
        if (name == "box")
            return preset_constraints(Preset::box(read_vector(field(j, "alpha", where), where + ".alpha"),
                                                  read_vector(field(j, "beta", where), where + ".beta")),
                                      dim);
        throw SchemaError(where + ": unknown preset \"" + name + "\"");
    }
    const auto b = read_vector(field(j, "bounds", where), where + ".bounds");
    if (b.size() == 0) return ConstraintSet(dim);
    const auto A = read_matrix(field(j, "normals", where), where + ".normals");
    if (A.cols() != dim) throw SchemaError(where + ": normals need one column per asset");
    return ConstraintSet(A, b, j.value("tag", std::string{}));
}

inline json write_constraints(const ConstraintSet& c) {
    json out;
    out["normals"] = c.size() > 0 ? matrix(c.normals()) : json::array();
    out["bounds"] = vector(c.bounds());
    if (!c.preset_tag().empty()) out["tag"] = c.preset_tag();
    return out;
}

/// {"probs": [...], "returns": [[...], ...], "constraints": {...}}
inline DiscreteMarket read_market(const json& j) {
    const auto R = read_matrix(field(j, "returns", "market"), "market.returns");
    const auto p = read_vector(field(j, "probs", "market"), "market.probs");
    const json cons = j.contains("constraints") ? j.at("constraints") : json();
    return DiscreteMarket(p, R, read_constraints(cons, static_cast<int>(R.cols())));
}

inline json write_market(const DiscreteMarket& m) {
    json out;
    out["probs"] = vector(m.probs());
    out["returns"] = matrix(m.returns());
    out["constraints"] = write_constraints(m.constraints());
    return out;
}

/// {"type": "log"} | {"type": "power", "gamma"} | {"type": "piecewise_linear", "pieces": [[slope, intercept], ...]}
inline UtilitySpec read_utility(const json& j) {
    const auto type = field(j, "type", "utility").get<std::string>();
    if (type == "log") return UtilitySpec::log();
    if (type == "power") return UtilitySpec::power(to_double(field(j, "gamma", "utility"), "utility.gamma"));
    if (type == "piecewise_linear") {
        std::vector<Piece> pieces;
        for (const auto& p : field(j, "pieces", "utility")) {
            const auto v = read_vector(p, "utility.pieces");
            if (v.size() != 2) throw SchemaError("utility.pieces: each piece is [slope, intercept]");
            pieces.push_back(Piece{v(0), v(1)});
        }
        return UtilitySpec::piecewise_linear(std::move(pieces));
    }
    throw SchemaError("utility: unknown type \"" + type + "\"");
}

inline json write_utility(const UtilitySpec& u) {
    json out;
    out["type"] = to_string(u.kind());
    if (u.kind() == UtilitySpec::Kind::power) out["gamma"] = number(u.gamma());
    if (u.kind() == UtilitySpec::Kind::piecewise_linear) {
        out["pieces"] = json::array();
        for (const auto& p : u.pieces()) out["pieces"].push_back({number(p.slope), number(p.intercept)});
    }
    return out;
}

inline FactorDistribution read_distribution(const json& j, const std::string& where) {
    const auto type = field(j, "type", where).get<std::string>();
    if (type == "point_mass") {
        PointMass p;
        for (const auto& v : field(j, "values", where)) p.values.push_back(to_double(v, where + ".values"));
        for (const auto& v : field(j, "probs", where)) p.probs.push_back(to_double(v, where + ".probs"));
        return p;
    }
    if (type == "exponential")
        return Exponential{to_double(field(j, "rate", where), where), j.contains("shift") ? to_double(j["shift"], where) : 0.0};
    if (type == "lognormal")
        return Lognormal{to_double(field(j, "mu", where), where), to_double(field(j, "sigma", where), where),
                         j.contains("shift") ? to_double(j["shift"], where) : 0.0};
    if (type == "uniform") return Uniform{to_double(field(j, "a", where), where), to_double(field(j, "b", where), where)};
    throw SchemaError(where + ": unknown distribution type \"" + type + "\"");
}

/// {"Q": [[...]], "c": ..., "factors": [{"inf", "sup", "dist": {...}}, ...]}
inline FactorModel read_factor_model(const json& j) {
    const auto Q = read_matrix(field(j, "Q", "factor"), "factor.Q");
    std::vector<Factor> factors;
    const auto& fs = field(j, "factors", "factor");
    for (std::size_t k = 0; k < fs.size(); ++k) {
        const std::string where = "factor.factors[" + std::to_string(k) + "]";
        factors.push_back(Factor{to_double(field(fs[k], "inf", where), where + ".inf"),
                                 to_double(field(fs[k], "sup", where), where + ".sup"),
                                 read_distribution(field(fs[k], "dist", where), where + ".dist")});
    }
    return FactorModel(Q, std::move(factors), to_double(field(j, "c", "factor"), "factor.c"));
}

/// {"dim": d, "constraints": {"name": {...}}, "nodes": [{"parent", "prob", "returns", "constraint"}, ...]}
inline ScenarioTree read_tree(const json& j) {
    const int d = field(j, "dim", "tree").get<int>();
    std::map<std::string, ConstraintSet> named;
    if (j.contains("constraints"))
        for (const auto& [name, spec] : j.at("constraints").items())
            named.emplace(name, read_constraints(spec, d, "tree.constraints." + name));
    std::vector<TreeNode> nodes;
    std::vector<ConstraintSet> cons;
    const auto& ns = field(j, "nodes", "tree");
    for (std::size_t n = 0; n < ns.size(); ++n) {
        const std::string where = "tree.nodes[" + std::to_string(n) + "]";
        const auto& nd = ns[n];
        TreeNode t;
        t.parent = nd.value("parent", -1);
        if (t.parent >= 0) {
            t.prob = to_double(field(nd, "prob", where), where + ".prob");
            t.returns = read_vector(field(nd, "returns", where), where + ".returns");
        }
        nodes.push_back(t);
        if (nd.contains("constraint")) {
            const auto name = nd.at("constraint").get<std::string>();
            auto it = named.find(name);
            if (it == named.end()) throw SchemaError(where + ": unknown constraint \"" + name + "\"");
            cons.push_back(it->second);
        } else {
            cons.push_back(ConstraintSet(d));
        }
    }
    return ScenarioTree(d, std::move(nodes), std::move(cons));
}

inline json write_tree(const ScenarioTree& t) {
    json out;
    out["dim"] = t.dim();
    out["constraints"] = json::object();
    out["nodes"] = json::array();
    for (int n = 0; n < t.size(); ++n) {
        json nd;
        nd["parent"] = t.node(n).parent;
        if (n > 0) {
            nd["prob"] = number(t.node(n).prob);
            nd["returns"] = vector(t.node(n).returns);
        }
        const std::string name = "node" + std::to_string(n);
        out["constraints"][name] = write_constraints(t.constraints(n));
        nd["constraint"] = name;
        out["nodes"].push_back(nd);
    }
    return out;
}

// ---- reports -------------------------------------------------------------

inline json optional_vector(const std::optional<Eigen::VectorXd>& v) { return v ? vector(*v) : json(); }

inline json write(const ArbitrageCertificate& c) {
    return json{{"verdict", to_string(c.verdict)},
                {"strategy", optional_vector(c.strategy)},
                {"gains", optional_vector(c.gains)},
                {"lp_value", number(c.lp_value)},
                {"threshold", number(c.threshold)},
                {"cap", number(c.cap)}};
}

inline json write(const Na1Certificate& c) {
    return json{{"verdict", to_string(c.verdict)},
                {"holds", c.holds()},
                {"witness_ray", optional_vector(c.witness_ray)},
                {"bound_radius", c.bound_radius ? number(*c.bound_radius) : json()},
                {"threshold", number(c.threshold)}};
}

inline json write(const Esmm& q) {
    return json{{"density", vector(q.density)},
                {"measure", vector(q.measure)},
                {"log_measure", vector(q.log_measure)},
                {"strategy", vector(q.strategy)},
                {"supermartingale_value", number(q.supermartingale_value)},
                {"iterations", q.iterations}};
}

inline json write(const OptimalPortfolio& p) {
    return json{{"strategy", vector(p.strategy)},
                {"value", number(p.value)},
                {"gradient_norm", number(p.gradient_norm)},
                {"iterations", p.iterations},
                {"active_constraints", p.active_constraints},
                {"wealth_floor_states", p.wealth_floor_states},
                {"diverged", p.diverged}};
}

inline json write(const ValuationReport& r) {
    return json{{"primal_value", number(r.primal_value)},
                {"strategy", vector(r.strategy)},
                {"dual_value", number(r.dual_value)},
                {"dual_deflator", vector(r.dual_deflator)},
                {"gap", number(r.gap)},
                {"attainable", r.attainable},
                {"residual", number(r.residual)},
                {"deflator_lp_value", number(r.deflator_lp_value)},
                {"perturbed_states", r.perturbed_states},
                {"lp_status", r.lp_status}};
}

inline ValuationReport read_valuation_report(const json& j) {
    ValuationReport r;
    r.primal_value = to_double(field(j, "primal_value", "report"), "report.primal_value");
    r.strategy = read_vector(field(j, "strategy", "report"), "report.strategy");
    r.dual_value = to_double(field(j, "dual_value", "report"), "report.dual_value");
    r.dual_deflator = read_vector(field(j, "dual_deflator", "report"), "report.dual_deflator");
    r.gap = to_double(field(j, "gap", "report"), "report.gap");
    r.attainable = field(j, "attainable", "report").get<bool>();
    r.residual = to_double(field(j, "residual", "report"), "report.residual");
    r.deflator_lp_value = to_double(field(j, "deflator_lp_value", "report"), "report.deflator_lp_value");
    r.perturbed_states = field(j, "perturbed_states", "report").get<int>();
    r.lp_status = field(j, "lp_status", "report").get<std::string>();
    return r;
}

inline OptimalPortfolio read_optimal_portfolio(const json& j) {
    OptimalPortfolio p;
    p.strategy = read_vector(field(j, "strategy", "portfolio"), "portfolio.strategy");
    p.value = to_double(field(j, "value", "portfolio"), "portfolio.value");
    p.gradient_norm = to_double(field(j, "gradient_norm", "portfolio"), "portfolio.gradient_norm");
    p.iterations = field(j, "iterations", "portfolio").get<int>();
    p.active_constraints = field(j, "active_constraints", "portfolio").get<std::vector<int>>();
    p.wealth_floor_states = field(j, "wealth_floor_states", "portfolio").get<std::vector<int>>();
    p.diverged = field(j, "diverged", "portfolio").get<bool>();
    return p;
}

inline json write(const PositivityReport& r) {
    json out{{"all_ok", r.all_ok()},
             {"asset_ok", r.asset_ok},
             {"worst_return", vector(r.worst_return)},
             {"violations", r.violations},
             {"triangular", r.triangular}};
    if (r.triangular) out["triangular_ok"] = r.triangular_ok;
    return out;
}

inline json write(const ShortfallResult& r) {
    return json{{"capital", number(r.capital)},
                {"strategy", vector(r.strategy)},
                {"risk", number(r.risk)},
                {"lp_status", r.lp_status}};
}

inline json strategies(const std::vector<Eigen::VectorXd>& s) {
    json out = json::array();
    for (const auto& v : s) out.push_back(v.size() > 0 ? vector(v) : json());
    return out;
}

}  // namespace na1lab::io
