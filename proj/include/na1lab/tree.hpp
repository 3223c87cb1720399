#pragma once

// Multi-period markets on a finite scenario tree. Every question about the
// tree reduces to one-period markets at the non-leaf nodes.

#include "na1lab/arbitrage.hpp"
#include "na1lab/errors.hpp"
#include "na1lab/hedging.hpp"
#include "na1lab/lp.hpp"
#include "na1lab/market.hpp"
#include "na1lab/portfolio.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace na1lab {

struct TreeNode {
    int parent = -1;           // -1 for the root
    double prob = 1.0;         // branch probability from the parent
    Eigen::VectorXd returns;   // R on the incoming edge; empty at the root
};

/// Nodes are stored in topological order: node 0 is the root and parents precede children.
class ScenarioTree {
public:
    ScenarioTree() = default;

    /// `constraints[n]` governs the strategy chosen at node n; leaves ignore theirs.
    /// An empty `constraints` vector means no trading constraints anywhere.
    ScenarioTree(int dim, std::vector<TreeNode> nodes, std::vector<ConstraintSet> constraints = {})
        : dim_(dim), nodes_(std::move(nodes)), constraints_(std::move(constraints)) {
        if (constraints_.empty()) constraints_.assign(nodes_.size(), ConstraintSet(dim_));
        validate();
    }

    int dim() const { return dim_; }
    int size() const { return static_cast<int>(nodes_.size()); }
    int depth() const { return depth_; }
    const TreeNode& node(int n) const { return nodes_.at(n); }
    int time(int n) const { return time_.at(n); }
    const std::vector<int>& children(int n) const { return children_.at(n); }
    bool leaf(int n) const { return children_.at(n).empty(); }
    const ConstraintSet& constraints(int n) const { return constraints_.at(n); }
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const std::vector<ConstraintSet>& all_constraints() const { return constraints_; }

    std::vector<int> leaves() const {
        std::vector<int> out;
        for (int n = 0; n < size(); ++n)
            if (leaf(n)) out.push_back(n);
        return out;
    }

    /// Probability of reaching node n from the root.
    double path_probability(int n) const {
        double p = 1.0;
        for (; n > 0; n = nodes_[n].parent) p *= nodes_[n].prob;
        return p;
    }

private:
    void validate() {
        if (dim_ < 1) throw InvalidParameter("tree: at least one asset is required");
        if (nodes_.empty()) throw InvalidParameter("tree: at least a root node is required");
        if (constraints_.size() != nodes_.size())
            throw InvalidParameter("tree: one constraint set per node is required");
        if (nodes_[0].parent != -1) throw InvalidParameter("tree: node 0 must be the root");
        children_.assign(nodes_.size(), {});
        time_.assign(nodes_.size(), 0);
        for (int n = 1; n < size(); ++n) {
            const auto& nd = nodes_[n];
            std::ostringstream where;
            where << "tree: node " << n;
            if (nd.parent < 0 || nd.parent >= n)
                throw InvalidParameter(where.str() + " must have a parent listed before it (single root, no cycles)");
            if (nd.returns.size() != dim_) throw InvalidParameter(where.str() + " has a return vector of wrong size");
            if (!nd.returns.allFinite() || (nd.returns.array() < -1.0).any())
                throw InvalidParameter(where.str() + " has returns below -1 or non-finite");
            if (!(nd.prob > 0.0)) throw InvalidParameter(where.str() + " needs a positive branch probability");
            children_[nd.parent].push_back(n);
            time_[n] = time_[nd.parent] + 1;
        }
        for (const auto& c : constraints_)
            if (c.dim() != dim_) throw InvalidParameter("tree: constraint dimension differs from asset count");
        depth_ = -1;
        for (int n = 0; n < size(); ++n) {
            if (leaf(n)) {
                if (depth_ < 0) depth_ = time_[n];
                if (time_[n] != depth_) throw InvalidParameter("tree: all leaves must sit at the same depth");
                continue;
            }
            double s = 0.0;
            for (int c : children_[n]) s += nodes_[c].prob;
            if (std::abs(s - 1.0) > kProbSumTol) {
                std::ostringstream os;
                os.precision(17);
                os << "tree: branch probabilities at node " << n << " sum to " << s << ", expected 1";
                throw InvalidParameter(os.str());
            }
        }
    }

    int dim_ = 0;
    std::vector<TreeNode> nodes_;
    std::vector<ConstraintSet> constraints_;
    std::vector<std::vector<int>> children_;
    std::vector<int> time_;
    int depth_ = 0;
};

/// One-period market of the children of a non-leaf node.
inline DiscreteMarket node_market(const ScenarioTree& tree, int n) {
    if (n < 0 || n >= tree.size()) throw InvalidParameter("node_market: node id out of range");
    if (tree.leaf(n)) {
        std::ostringstream os;
        os << "node_market: node " << n << " is a leaf";
        throw InvalidParameter(os.str());
    }
    const auto& ch = tree.children(n);
    const int k = static_cast<int>(ch.size());
    Eigen::VectorXd p(k);
    Eigen::MatrixXd R(k, tree.dim());
    for (int j = 0; j < k; ++j) {
        p(j) = tree.node(ch[j]).prob;
        R.row(j) = tree.node(ch[j]).returns.transpose();
    }
    return DiscreteMarket(p, R, tree.constraints(n));
}

/// T periods in which every node repeats the one-period market.
inline ScenarioTree iid_tree(const DiscreteMarket& market, int periods) {
    if (periods < 1) throw InvalidParameter("iid_tree: need at least one period");
    std::vector<TreeNode> nodes{TreeNode{}};
    std::vector<int> frontier{0};
    for (int t = 0; t < periods; ++t) {
        std::vector<int> next;
        for (int parent : frontier) {
            for (int s = 0; s < market.states(); ++s) {
                nodes.push_back(TreeNode{parent, market.probs()(s), market.returns().row(s).transpose()});
                next.push_back(static_cast<int>(nodes.size()) - 1);
            }
        }
        frontier = std::move(next);
    }
    std::vector<ConstraintSet> cons(nodes.size(), market.constraints());
    return ScenarioTree(market.dim(), std::move(nodes), std::move(cons));
}

struct GlobalNa1 {
    bool holds = true;
    std::vector<std::optional<Na1Certificate>> nodes;  // empty at leaves
    std::vector<int> failing;
};

/// NA1 on the tree holds iff it holds in every node market.
inline GlobalNa1 global_na1(const ScenarioTree& tree) {
    GlobalNa1 out;
    out.nodes.resize(tree.size());
    for (int n = 0; n < tree.size(); ++n) {
        if (tree.leaf(n)) continue;
        out.nodes[n] = check_na1(node_market(tree, n));
        if (!out.nodes[n]->holds()) {
            out.holds = false;
            out.failing.push_back(n);
        }
    }
    return out;
}

struct PolicyProcess {
    std::vector<Eigen::VectorXd> strategies;  // empty at leaves
    std::vector<double> wealth;               // V along the tree from V_root = 1
};

struct DeflatorProcess {
    std::vector<double> values;  // Z_n, Z_root = 1
    std::vector<double> slack;   // 1 - per-node LP value of Z_children / Z_n; NaN at leaves
};

struct BackwardOptions {
    MaximizeOptions inner;
    std::optional<std::vector<double>> wealth_grid;           // piecewise-linear utilities
    std::optional<std::vector<Eigen::VectorXd>> candidates;  // restrict strategies to this set
};

struct BackwardResult {
    PolicyProcess policy;
    double value = 0.0;               // U_0(1)
    std::vector<double> node_values;  // U_n(V_n) along the realized policy
    double interpolation_gap = 0.0;   // max |direct - interpolated| on the realized path (grid DP only)
};

namespace detail {

inline std::string node_tag(const char* who, int n) {
    std::ostringstream os;
    os << who << " at node " << n;
    return os.str();
}

inline void require_tree_na1(const ScenarioTree& tree, const char* who) {
    const auto g = global_na1(tree);
    if (!g.holds) {
        std::ostringstream os;
        os << who << ": NA1 fails at node";
        for (int n : g.failing) os << " " << n;
        os << "; expected utility is not finite without NA1";
        throw PreconditionError(os.str());
    }
}

// Best allowed candidate for sum_c p_c f(c, 1 + <pi, R_c>).
template <class F>
std::pair<Eigen::VectorXd, double> best_candidate(const DiscreteMarket& m, const std::vector<Eigen::VectorXd>& cand,
                                                  F f, int node) {
    double best = -std::numeric_limits<double>::infinity();
    std::optional<Eigen::VectorXd> arg;
    for (const auto& pi : cand) {
        if (pi.size() != m.dim()) throw InvalidParameter("backward_induction: candidate has wrong dimension");
        if (!m.allowed().contains(pi, 1e-12)) continue;
        const Eigen::VectorXd V = Eigen::VectorXd::Ones(m.states()) + m.returns() * pi;
        double v = 0.0;
        for (int c = 0; c < m.states(); ++c) v += m.probs()(c) * f(c, V(c));
        if (!arg || v > best) {
            best = v;
            arg = pi;
        }
    }
    if (!arg) throw InvalidParameter(node_tag("backward_induction: no candidate strategy is allowed", node));
    return {*arg, best};
}

// Concave piecewise-linear interpolant through (x_i, y_i) as a list of secant pieces.
inline std::vector<Piece> secant_pieces(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<Piece> out;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        double slope = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        // Flat stretches of the value function still need a positive slope in the utility table.
        slope = std::max(slope, 1e-300);
        out.push_back(Piece{slope, y[i] - slope * x[i]});
    }
    return out;
}

inline double eval_pieces(const std::vector<Piece>& pieces, double x) {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& p : pieces) v = std::min(v, p.slope * x + p.intercept);
    return v;
}

}  // namespace detail

/// Range of wealth reachable under allowed strategies, by propagating per-node multiplier bounds.
inline std::vector<double> default_wealth_grid(const ScenarioTree& tree, int points = 257) {
    if (points < 2) throw InvalidParameter("default_wealth_grid: need at least 2 points");
    std::vector<double> lo(tree.size(), 1.0), hi(tree.size(), 1.0);
    double wmin = 1.0, wmax = 1.0;
    for (int n = 0; n < tree.size(); ++n) {
        if (tree.leaf(n)) continue;
        const auto m = node_market(tree, n);
        const auto& L = m.subspace();
        const ConstraintSet& th = m.allowed();
        const Eigen::MatrixXd A = th.normals() * L.basis;
        const auto& ch = tree.children(n);
        for (int j = 0; j < static_cast<int>(ch.size()); ++j) {
            double mlo = 1.0, mhi = 1.0;
            if (L.rank > 0) {
                const Eigen::VectorXd g = m.reduced_returns().row(j).transpose();
                const auto up = lp::maximize(g, A, th.bounds());
                const auto dn = lp::maximize(-g, A, th.bounds());
                if (!up.optimal() || !dn.optimal())
                    throw PreconditionError(detail::node_tag("default_wealth_grid: unbounded wealth range", n));
                mhi = 1.0 + up.objective;
                mlo = std::max(0.0, 1.0 - dn.objective);
            }
            lo[ch[j]] = lo[n] * mlo;
            hi[ch[j]] = hi[n] * mhi;
            wmin = std::min(wmin, lo[ch[j]]);
            wmax = std::max(wmax, hi[ch[j]]);
        }
    }
    // Geometric spacing needs a positive floor; wealth below it uses the first secant.
    wmin = std::max(wmin, 1e-6 * wmax);
    if (wmax <= wmin * (1.0 + 1e-12)) wmax = wmin * 2.0;
    std::vector<double> grid(points);
    const double r = std::log(wmax / wmin);
    for (int i = 0; i < points; ++i) grid[i] = wmin * std::exp(r * i / (points - 1));
    grid.back() = wmax;
    return grid;
}

/// Dynamic programming on the tree for U_0(1) = sup E[u(V_T)].
inline BackwardResult backward_induction(const ScenarioTree& tree, const UtilitySpec& u,
                                         const BackwardOptions& opt = {}) {
    if (u.state_dependent()) throw InvalidParameter("backward_induction: utility must not be state dependent");
    detail::require_tree_na1(tree, "backward_induction");
    const int N = tree.size();
    BackwardResult out;
    out.policy.strategies.assign(N, Eigen::VectorXd());
    out.policy.wealth.assign(N, 1.0);
    out.node_values.assign(N, 0.0);

    auto solve = [&](int n, const DiscreteMarket& m, const UtilitySpec& node_u) {
        try {
            return maximize_utility(m, node_u, opt.inner);
        } catch (const NumericError& e) {
            throw NumericError(detail::node_tag("backward_induction", n) + ": " + e.what());
        }
    };
    auto forward_wealth = [&]() {
        for (int n = 0; n < N; ++n)
            for (int c : tree.children(n))
                out.policy.wealth[c] =
                    out.policy.wealth[n] * (1.0 + tree.node(c).returns.dot(out.policy.strategies[n]));
    };

    if (u.kind() == UtilitySpec::Kind::log || u.kind() == UtilitySpec::Kind::power) {
        const bool is_log = u.kind() == UtilitySpec::Kind::log;
        const double gamma = u.gamma();
        // log: U_n(x) = a_n + log x.  power: U_n(x) = b_n x^gamma / gamma.
        std::vector<double> coef(N, is_log ? 0.0 : 1.0);
        for (int n = N - 1; n >= 0; --n) {
            if (tree.leaf(n)) continue;
            const auto m = node_market(tree, n);
            const auto& ch = tree.children(n);
            Eigen::VectorXd cc(ch.size());
            for (int j = 0; j < cc.size(); ++j) cc(j) = coef[ch[j]];
            double best;
            if (opt.candidates) {
                auto f = [&](int c, double V) {
                    return is_log ? cc(c) + (V > 0 ? std::log(V) : -std::numeric_limits<double>::infinity())
                                  : cc(c) * u.base(V);
                };
                auto [pi, v] = detail::best_candidate(m, *opt.candidates, f, n);
                out.policy.strategies[n] = pi;
                best = v;
            } else if (is_log) {
                auto r = solve(n, m, UtilitySpec::log());
                out.policy.strategies[n] = r.strategy;
                best = r.value + m.probs().dot(cc);
            } else {
                auto r = solve(n, m, UtilitySpec::power(gamma).transformed(1.0, {}, cc));
                out.policy.strategies[n] = r.strategy;
                best = r.value;
            }
            coef[n] = is_log ? best : gamma * best;
        }
        forward_wealth();
        for (int n = 0; n < N; ++n) {
            const double x = out.policy.wealth[n];
            out.node_values[n] = is_log ? coef[n] + std::log(x) : coef[n] * u.base(x);
        }
        out.value = out.node_values[0];
        return out;
    }

    // Piecewise-linear utility.
    if (opt.candidates) {
        // Exact recursion over the candidate set; exponential in depth, meant for small trees.
        std::function<std::pair<double, Eigen::VectorXd>(int, double)> value = [&](int n, double x) {
            if (tree.leaf(n)) return std::pair<double, Eigen::VectorXd>{u.base(x), Eigen::VectorXd()};
            const auto m = node_market(tree, n);
            const auto& ch = tree.children(n);
            auto f = [&](int c, double V) { return value(ch[c], x * V).first; };
            auto [pi, v] = detail::best_candidate(m, *opt.candidates, f, n);
            return std::pair<double, Eigen::VectorXd>{v, pi};
        };
        for (int n = 0; n < N; ++n) {
            if (tree.leaf(n)) continue;
            out.policy.strategies[n] = value(n, out.policy.wealth[n]).second;
            for (int c : tree.children(n))
                out.policy.wealth[c] = out.policy.wealth[n] * (1.0 + tree.node(c).returns.dot(out.policy.strategies[n]));
        }
        for (int n = 0; n < N; ++n) out.node_values[n] = value(n, out.policy.wealth[n]).first;
        out.value = out.node_values[0];
        return out;
    }

    if (!opt.wealth_grid)
        throw InvalidParameter("backward_induction: piecewise-linear utilities need a wealth grid "
                               "(see default_wealth_grid)");
    const std::vector<double>& grid = *opt.wealth_grid;
    if (grid.size() < 2) throw InvalidParameter("backward_induction: wealth grid needs at least 2 points");
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (!(grid[i] > 0.0) || (i > 0 && !(grid[i] > grid[i - 1])))
            throw InvalidParameter("backward_induction: wealth grid must be positive and strictly increasing");

    std::vector<std::vector<Piece>> table(N);
    auto node_problem = [&](int n, const DiscreteMarket& m, double x) {
        std::vector<std::vector<Piece>> tabs;
        for (int c : tree.children(n)) tabs.push_back(table[c]);
        return solve(n, m, UtilitySpec::state_piecewise_linear(std::move(tabs)).transformed(x));
    };
    for (int n = N - 1; n >= 0; --n) {
        if (tree.leaf(n)) {
            table[n] = u.pieces();
            continue;
        }
        const auto m = node_market(tree, n);
        std::vector<double> y(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) y[i] = node_problem(n, m, grid[i]).value;
        table[n] = detail::secant_pieces(grid, y);
    }
    for (int n = 0; n < N; ++n) {
        if (tree.leaf(n)) continue;
        const auto m = node_market(tree, n);
        const auto r = node_problem(n, m, out.policy.wealth[n]);
        out.policy.strategies[n] = r.strategy;
        out.node_values[n] = r.value;
        out.interpolation_gap =
            std::max(out.interpolation_gap, std::abs(r.value - detail::eval_pieces(table[n], out.policy.wealth[n])));
        for (int c : tree.children(n))
            out.policy.wealth[c] = out.policy.wealth[n] * (1.0 + tree.node(c).returns.dot(r.strategy));
    }
    for (int n = 0; n < N; ++n)
        if (tree.leaf(n)) out.node_values[n] = u.base(out.policy.wealth[n]);
    out.value = out.node_values[0];
    return out;
}

struct NumeraireProcess {
    PolicyProcess policy;
    DeflatorProcess deflator;
};

/// Per-node log-optimal strategies and the deflator Z = 1 / V^rho, certified node by node.
inline NumeraireProcess numeraire_process(const ScenarioTree& tree, const MaximizeOptions& opt = {}) {
    detail::require_tree_na1(tree, "numeraire_process");
    const int N = tree.size();
    NumeraireProcess out;
    out.policy.strategies.assign(N, Eigen::VectorXd());
    out.policy.wealth.assign(N, 1.0);
    out.deflator.values.assign(N, 1.0);
    out.deflator.slack.assign(N, std::numeric_limits<double>::quiet_NaN());
    for (int n = 0; n < N; ++n) {
        if (tree.leaf(n)) continue;
        const auto m = node_market(tree, n);
        OptimalPortfolio rho;
        try {
            rho = numeraire_portfolio(m, opt);
        } catch (const NumericError& e) {
            throw NumericError(detail::node_tag("numeraire_process", n) + ": " + e.what());
        }
        out.policy.strategies[n] = rho.strategy;
        const auto& ch = tree.children(n);
        Eigen::VectorXd ratio(ch.size());
        for (int j = 0; j < ratio.size(); ++j) {
            const double growth = 1.0 + tree.node(ch[j]).returns.dot(rho.strategy);
            out.policy.wealth[ch[j]] = out.policy.wealth[n] * growth;
            out.deflator.values[ch[j]] = 1.0 / out.policy.wealth[ch[j]];
            ratio(j) = 1.0 / growth;
        }
        const double lpv = deflator_lp_value(m, ratio);
        out.deflator.slack[n] = 1.0 - lpv;
        if (lpv > 1.0 + 1e-8) {
            std::ostringstream os;
            os.precision(17);
            os << "numeraire_process: deflator fails the supermartingale check at node " << n << ", LP value " << lpv;
            throw NumericError(os.str());
        }
    }
    return out;
}

struct TreeHedge {
    double value = 0.0;
    std::vector<double> node_values;
    std::vector<Eigen::VectorXd> strategies;  // empty at leaves
};

/// Super-hedging value of a claim paid at the leaves, by backward recursion of one-period LPs.
/// `payoff` has one entry per node; only the leaf entries are read.
inline TreeHedge superhedge_tree(const ScenarioTree& tree, const Eigen::VectorXd& payoff) {
    if (payoff.size() != tree.size()) throw InvalidParameter("superhedge_tree: payoff needs one entry per node");
    detail::require_tree_na1(tree, "superhedge_tree");
    const int N = tree.size();
    TreeHedge out;
    out.node_values.assign(N, 0.0);
    out.strategies.assign(N, Eigen::VectorXd());
    for (int n = N - 1; n >= 0; --n) {
        if (tree.leaf(n)) {
            if (!std::isfinite(payoff(n)) || payoff(n) < 0.0)
                throw InvalidParameter("superhedge_tree: leaf payoffs must be finite and nonnegative");
            out.node_values[n] = payoff(n);
            continue;
        }
        const auto& ch = tree.children(n);
        Eigen::VectorXd xi(ch.size());
        for (int j = 0; j < xi.size(); ++j) xi(j) = out.node_values[ch[j]];
        const auto rep = superhedge(node_market(tree, n), Claim{xi});
        out.node_values[n] = rep.primal_value;
        out.strategies[n] = rep.strategy;
    }
    out.value = out.node_values[0];
    return out;
}

}  // namespace na1lab
