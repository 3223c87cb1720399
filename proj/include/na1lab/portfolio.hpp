#pragma once

// Expected-utility maximization over allowed strategies, the log-optimal
// (numeraire) portfolio and the deflators it induces.

#include "na1lab/arbitrage.hpp"
#include "na1lab/errors.hpp"
#include "na1lab/lp.hpp"
#include "na1lab/market.hpp"
#include "na1lab/qp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace na1lab {

/// One affine piece  x -> slope x + intercept  of a concave utility.
struct Piece {
    double slope = 1.0;
    double intercept = 0.0;
};

/// Utility u on wealth, optionally random through a per-state transform
///     U(omega, x) = weight(omega) * u_omega(scale * x + shift(omega)),
/// where u_omega is a state table for piecewise-linear utilities and u otherwise.
class UtilitySpec {
public:
    enum class Kind { log, power, piecewise_linear };

    static UtilitySpec log() { return UtilitySpec(Kind::log, 0.0); }

    static UtilitySpec power(double gamma) {
        if (!(gamma < 1.0) || gamma == 0.0 || !std::isfinite(gamma))
            throw InvalidParameter("power utility needs gamma < 1 and gamma != 0");
        return UtilitySpec(Kind::power, gamma);
    }

    /// Concave utility min_k (slope_k x + intercept_k); all slopes must be positive.
    static UtilitySpec piecewise_linear(std::vector<Piece> pieces) {
        check_pieces(pieces);
        UtilitySpec u(Kind::piecewise_linear, 0.0);
        u.pieces_ = std::move(pieces);
        return u;
    }

    /// One piecewise-linear table per state.
    static UtilitySpec state_piecewise_linear(std::vector<std::vector<Piece>> tables) {
        if (tables.empty()) throw InvalidParameter("state utility tables must not be empty");
        for (const auto& t : tables) check_pieces(t);
        UtilitySpec u(Kind::piecewise_linear, 0.0);
        u.state_pieces_ = std::move(tables);
        return u;
    }

    /// Same utility with wealth mapped to scale * x + shift(omega) and values weighted.
    UtilitySpec transformed(double scale, Eigen::VectorXd shift = {}, Eigen::VectorXd weight = {}) const {
        if (!(scale > 0.0)) throw InvalidParameter("utility transform: scale must be positive");
        if (shift.size() > 0 && (shift.array() < 0.0).any())
            throw InvalidParameter("utility transform: shift must be nonnegative");
        if (weight.size() > 0 && (weight.array() <= 0.0).any())
            throw InvalidParameter("utility transform: weights must be positive");
        UtilitySpec u = *this;
        u.scale_ = scale;
        u.shift_ = std::move(shift);
        u.weight_ = std::move(weight);
        return u;
    }

    Kind kind() const { return kind_; }
    double gamma() const { return gamma_; }
    double scale() const { return scale_; }
    const Eigen::VectorXd& shift() const { return shift_; }
    const Eigen::VectorXd& weight() const { return weight_; }
    const std::vector<Piece>& pieces() const { return pieces_; }
    const std::vector<std::vector<Piece>>& state_pieces() const { return state_pieces_; }
    bool state_dependent() const { return shift_.size() > 0 || weight_.size() > 0 || !state_pieces_.empty(); }

    /// Pieces used in a given state (piecewise-linear only).
    const std::vector<Piece>& pieces_for(int state) const {
        if (state_pieces_.empty()) return pieces_;
        return state_pieces_.at(static_cast<std::size_t>(state) % state_pieces_.size());
    }

    double shift_at(int state) const { return shift_.size() > 0 ? shift_(state) : 0.0; }
    double weight_at(int state) const { return weight_.size() > 0 ? weight_(state) : 1.0; }

    /// Untransformed u_omega(y); -infinity where log/power are undefined.
    double base(double y, int state = 0) const {
        switch (kind_) {
            case Kind::log: return y > 0.0 ? std::log(y) : -std::numeric_limits<double>::infinity();
            case Kind::power:
                if (y > 0.0) return std::pow(y, gamma_) / gamma_;
                if (y == 0.0 && gamma_ > 0.0) return 0.0;
                return -std::numeric_limits<double>::infinity();
            case Kind::piecewise_linear: {
                double v = std::numeric_limits<double>::infinity();
                for (const auto& p : pieces_for(state)) v = std::min(v, p.slope * y + p.intercept);
                return v;
            }
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    /// Derivative of u_omega (a supergradient for piecewise-linear utilities).
    double base_derivative(double y, int state = 0) const {
        switch (kind_) {
            case Kind::log: return 1.0 / y;
            case Kind::power: return std::pow(y, gamma_ - 1.0);
            case Kind::piecewise_linear: {
                double v = std::numeric_limits<double>::infinity();
                double slope = 0.0;
                for (const auto& p : pieces_for(state)) {
                    const double w = p.slope * y + p.intercept;
                    if (w < v) {
                        v = w;
                        slope = p.slope;
                    }
                }
                return slope;
            }
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    /// U(omega, x).
    double operator()(int state, double x) const {
        return weight_at(state) * base(scale_ * x + shift_at(state), state);
    }

    /// dU/dx (omega, x).
    double derivative(int state, double x) const {
        return weight_at(state) * scale_ * base_derivative(scale_ * x + shift_at(state), state);
    }

    /// u(x) for x > 0; finite by construction.
    double lower_bound_at(double x) const {
        if (!(x > 0.0)) throw InvalidParameter("utility lower bound needs x > 0");
        return base(x);
    }

    /// Log and power utilities need strictly positive wealth.
    bool needs_positive_wealth() const { return kind_ != Kind::piecewise_linear; }

private:
    UtilitySpec(Kind k, double g) : kind_(k), gamma_(g) {}

    static void check_pieces(const std::vector<Piece>& pieces) {
        if (pieces.empty()) throw InvalidParameter("piecewise-linear utility needs at least one piece");
        for (const auto& p : pieces)
            if (!(p.slope > 0.0) || !std::isfinite(p.intercept))
                throw InvalidParameter("piecewise-linear utility pieces need positive slopes and finite intercepts");
    }

    Kind kind_;
    double gamma_ = 0.0;
    std::vector<Piece> pieces_;
    std::vector<std::vector<Piece>> state_pieces_;
    double scale_ = 1.0;
    Eigen::VectorXd shift_;
    Eigen::VectorXd weight_;
};

inline std::string to_string(UtilitySpec::Kind k) {
    switch (k) {
        case UtilitySpec::Kind::log: return "log";
        case UtilitySpec::Kind::power: return "power";
        case UtilitySpec::Kind::piecewise_linear: return "piecewise_linear";
    }
    return "unknown";
}

/// pi -> sum_omega p_omega U(omega, 1 + <pi, R(omega)>) and its gradient.
class UtilityObjective {
public:
    UtilityObjective(Eigen::VectorXd probs, Eigen::MatrixXd returns, UtilitySpec u)
        : probs_(std::move(probs)), returns_(std::move(returns)), u_(std::move(u)) {}

    double value(const Eigen::VectorXd& pi) const {
        const Eigen::VectorXd x = Eigen::VectorXd::Ones(returns_.rows()) + returns_ * pi;
        double v = 0.0;
        for (int s = 0; s < x.size(); ++s) {
            const double term = u_(s, x(s));
            if (term == -std::numeric_limits<double>::infinity()) return term;
            v += probs_(s) * term;
        }
        return v;
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& pi) const {
        const Eigen::VectorXd x = Eigen::VectorXd::Ones(returns_.rows()) + returns_ * pi;
        Eigen::VectorXd w(x.size());
        for (int s = 0; s < x.size(); ++s) w(s) = probs_(s) * u_.derivative(s, x(s));
        return returns_.transpose() * w;
    }

    const UtilitySpec& utility() const { return u_; }

private:
    Eigen::VectorXd probs_;
    Eigen::MatrixXd returns_;
    UtilitySpec u_;
};

struct OptimalPortfolio {
    Eigen::VectorXd strategy;
    double value = 0.0;
    double gradient_norm = 0.0;  // projected-gradient stationarity measure
    int iterations = 0;
    std::vector<int> active_constraints;  // rows of the trading constraints held at equality
    std::vector<int> wealth_floor_states;  // states held at the wealth floor epsilon
    bool diverged = false;                 // only with require_na1 = false
};

struct MaximizeOptions {
    double tol = 1e-8;
    int max_iterations = 10000;
    double epsilon = 1e-9;  // wealth floor for log and power utilities
    bool require_na1 = true;
    double divergence_radius = std::numeric_limits<double>::infinity();
    std::optional<Eigen::VectorXd> start;
};

namespace detail {

struct EpsilonSet {
    Eigen::MatrixXd A;  // in subspace coordinates
    Eigen::VectorXd b;
    int constraint_rows = 0;  // first rows come from the trading constraints
    std::vector<int> floor_state;  // state index of each wealth-floor row
};

// Trading constraints plus wealth >= floor in every state, in L coordinates.
inline EpsilonSet epsilon_set(const DiscreteMarket& market, double floor) {
    const auto& L = market.subspace();
    const ConstraintSet& tc = market.constraints();
    EpsilonSet out;
    out.constraint_rows = tc.size();
    std::vector<int> rows;
    {
        std::map<std::vector<double>, int> seen;
        const Eigen::MatrixXd& G = market.reduced_returns();
        for (int s = 0; s < market.states(); ++s) {
            if (market.returns().row(s).cwiseAbs().maxCoeff() == 0.0) continue;
            std::vector<double> key(G.cols());
            for (int j = 0; j < G.cols(); ++j) key[j] = G(s, j);
            if (seen.emplace(std::move(key), s).second) rows.push_back(s);
        }
    }
    const int m = tc.size() + static_cast<int>(rows.size());
    out.A.resize(m, L.rank);
    out.b.resize(m);
    if (tc.size() > 0) {
        out.A.topRows(tc.size()) = tc.normals() * L.basis;
        out.b.head(tc.size()) = tc.bounds();
    }
    for (int k = 0; k < static_cast<int>(rows.size()); ++k) {
        out.A.row(tc.size() + k) = -market.reduced_returns().row(rows[k]);
        out.b(tc.size() + k) = 1.0 - floor;
        out.floor_state.push_back(rows[k]);
    }
    return out;
}

// Center of the largest inscribed ball, radius capped at 1.
inline Eigen::VectorXd chebyshev_center(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    const int n = static_cast<int>(A.cols());
    if (n == 0) return Eigen::VectorXd(0);
    Eigen::MatrixXd M(A.rows() + 1, n + 1);
    M << A, A.rowwise().norm(), Eigen::RowVectorXd::Zero(n + 1);
    M(A.rows(), n) = 1.0;
    Eigen::VectorXd rhs(A.rows() + 1);
    rhs << b, 1.0;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 1);
    c(n) = 1.0;
    auto sol = lp::maximize(c, M, rhs);
    if (!sol.optimal()) throw NumericError(lp_failure("Chebyshev center", sol));
    return sol.x.head(n);
}

inline OptimalPortfolio maximize_piecewise_linear(const DiscreteMarket& market, const UtilitySpec& u) {
    const auto& L = market.subspace();
    const int r = L.rank;
    const int k = market.states();
    const Eigen::MatrixXd& G = market.reduced_returns();
    const ConstraintSet& th = market.allowed();

    int rows = th.size();
    for (int s = 0; s < k; ++s) rows += static_cast<int>(u.pieces_for(s).size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, r + k);
    Eigen::VectorXd b(rows);
    A.topLeftCorner(th.size(), r) = th.normals() * L.basis;
    b.head(th.size()) = th.bounds();
    int row = th.size();
    for (int s = 0; s < k; ++s) {
        const double x0 = u.scale() + u.shift_at(s);
        for (const auto& p : u.pieces_for(s)) {
            // t_s <= slope (scale (1 + G_s w) + shift_s) + intercept
            A.block(row, 0, 1, r) = -p.slope * u.scale() * G.row(s);
            A(row, r + s) = 1.0;
            b(row) = p.slope * x0 + p.intercept;
            ++row;
        }
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(r + k);
    for (int s = 0; s < k; ++s) c(r + s) = market.probs()(s) * u.weight_at(s);
    auto sol = lp::maximize(c, A, b);
    if (!sol.optimal()) throw NumericError(lp_failure("piecewise-linear utility", sol));

    OptimalPortfolio out;
    out.strategy = L.basis * sol.x.head(r);
    out.value = UtilityObjective(market.probs(), market.returns(), u).value(out.strategy);
    out.iterations = sol.iterations;
    for (int i = 0; i < market.constraints().size(); ++i)
        if (market.constraints().bounds()(i) - market.constraints().normals().row(i).dot(out.strategy) <= 1e-9)
            out.active_constraints.push_back(i);
    return out;
}

}  // namespace detail

/// Maximizes E[U(1 + <pi, R>)] over the allowed strategies in L.
inline OptimalPortfolio maximize_utility(const DiscreteMarket& market, const UtilitySpec& u,
                                         const MaximizeOptions& opt = {}) {
    if (!(opt.tol > 0.0)) throw InvalidParameter("maximize_utility: tolerance must be positive");
    if (u.shift().size() > 0 && u.shift().size() != market.states())
        throw InvalidParameter("maximize_utility: utility shift needs one entry per state");
    if (u.weight().size() > 0 && u.weight().size() != market.states())
        throw InvalidParameter("maximize_utility: utility weight needs one entry per state");
    if (opt.require_na1) {
        const auto na1 = check_na1(market);
        if (!na1.holds())
            throw PreconditionError(
                "maximize_utility: NA1 fails, so expected utility is unbounded along the witness ray "
                "(viability requires NA1)");
    }

    const auto& L = market.subspace();
    const int r = L.rank;
    if (u.kind() == UtilitySpec::Kind::piecewise_linear) return detail::maximize_piecewise_linear(market, u);

    const UtilityObjective J(market.probs(), market.reduced_returns(), u);
    OptimalPortfolio out;
    if (r == 0) {
        out.strategy = Eigen::VectorXd::Zero(market.dim());
        out.value = J.value(Eigen::VectorXd(0));
        return out;
    }

    const auto eps = detail::epsilon_set(market, opt.epsilon);
    Eigen::VectorXd w = detail::chebyshev_center(eps.A, eps.b);
    if (opt.start) {
        if (opt.start->size() != market.dim()) throw InvalidParameter("maximize_utility: start has wrong dimension");
        w = qp::project(L.coordinates(*opt.start), eps.A, eps.b, w).point;
    }
    auto project = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& from) {
        return qp::project(x, eps.A, eps.b, from).point;
    };

    double f = J.value(w);
    Eigen::VectorXd g = J.gradient(w);
    double step = 1.0 / std::max(1.0, g.norm());
    int it = 0;
    double stationarity = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (; it < opt.max_iterations; ++it) {
        stationarity = (project(w + g, w) - w).norm();
        if (stationarity <= opt.tol) {
            converged = true;
            break;
        }
        if (w.norm() > opt.divergence_radius) {
            out.diverged = true;
            break;
        }
        Eigen::VectorXd w_new;
        double f_new = -std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
            w_new = project(w + step * g, w);
            f_new = J.value(w_new);
            if (f_new >= f + 1e-4 * g.dot(w_new - w)) {
                accepted = true;
                break;
            }
            // Below round-off in f, concavity still certifies ascent via the slope at w_new.
            if (f_new >= f - 1e-14 * std::max(1.0, std::abs(f)) && std::isfinite(f_new) &&
                J.gradient(w_new).dot(w_new - w) >= 0.0) {
                accepted = true;
                break;
            }
        }
        if (!accepted || (w_new - w).norm() == 0.0) break;  // no progress at working precision
        const Eigen::VectorXd g_new = J.gradient(w_new);
        const Eigen::VectorXd s = w_new - w;
        const double sy = -s.dot(g_new - g);
        step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-12, 1e12) : std::min(step * 4.0, 1e12);
        w = w_new;
        f = f_new;
        g = g_new;
    }

    out.strategy = L.basis * w;
    out.value = f;
    out.gradient_norm = stationarity;
    out.iterations = it;
    for (int i = 0; i < eps.A.rows(); ++i) {
        if (eps.b(i) - eps.A.row(i).dot(w) > 1e-9) continue;
        if (i < eps.constraint_rows)
            out.active_constraints.push_back(i);
        else
            out.wealth_floor_states.push_back(eps.floor_state[i - eps.constraint_rows]);
    }
    if (!converged && !out.diverged) {
        // Stalled line search counts as converged when stationarity is at the noise floor.
        const double noise = 1e-9 * std::max(1.0, g.norm());
        if (stationarity > std::max(opt.tol, noise)) {
            std::ostringstream os;
            os.precision(10);
            os << "maximize_utility: no convergence after " << it << " iterations; best strategy [";
            for (int i = 0; i < out.strategy.size(); ++i) os << (i ? ", " : "") << out.strategy(i);
            os << "], value " << f << ", projected gradient " << stationarity;
            throw NumericError(os.str());
        }
    }
    return out;
}

/// max over Theta cap L of E[(1 + <pi, R>) / (1 + <rho, R>)].
inline double verify_numeraire(const DiscreteMarket& market, const Eigen::VectorXd& rho) {
    if (rho.size() != market.dim()) throw InvalidParameter("verify_numeraire: rho has the wrong dimension");
    const Eigen::VectorXd v = Eigen::VectorXd::Ones(market.states()) + market.returns() * rho;
    if ((v.array() <= 0.0).any()) throw InvalidParameter("verify_numeraire: wealth of rho is not positive in every state");
    const Eigen::VectorXd weight = market.probs().cwiseQuotient(v);
    return weight.sum() + supermartingale_lp_value(market, weight);
}

/// Log-optimal portfolio, certified to be the numeraire.
inline OptimalPortfolio numeraire_portfolio(const DiscreteMarket& market, const MaximizeOptions& base = {}) {
    MaximizeOptions opt = base;
    opt.tol = std::min(opt.tol, 1e-10);
    auto rho = maximize_utility(market, UtilitySpec::log(), opt);
    const double lpv = verify_numeraire(market, rho.strategy);
    if (lpv > 1.0 + 1e-8) {
        std::ostringstream os;
        os.precision(17);
        os << "numeraire_portfolio: log-optimal strategy fails the numeraire check, LP value " << lpv;
        throw NumericError(os.str());
    }
    return rho;
}

struct Deflator {
    Eigen::VectorXd values;
    double lp_value = 0.0;  // max over Theta cap L of E[Z (1 + <pi, R>)]
};

/// max over Theta cap L of E[Z (1 + <pi, R>)].
inline double deflator_lp_value(const DiscreteMarket& market, const Eigen::VectorXd& Z) {
    const Eigen::VectorXd weight = market.probs().cwiseProduct(Z);
    return weight.sum() + supermartingale_lp_value(market, weight);
}

inline Deflator deflator_from_numeraire(const DiscreteMarket& market, const Eigen::VectorXd& rho) {
    const double lpv = verify_numeraire(market, rho);
    if (lpv > 1.0 + 1e-8) {
        std::ostringstream os;
        os.precision(17);
        os << "deflator_from_numeraire: rho is not a numeraire, LP value " << lpv << " > 1 + 1e-8";
        throw PreconditionError(os.str());
    }
    Deflator out;
    out.values = (Eigen::VectorXd::Ones(market.states()) + market.returns() * rho).cwiseInverse();
    out.lp_value = deflator_lp_value(market, out.values);
    return out;
}

/// E[log(V^pi / V^rho)], with -inf when pi loses everything somewhere and +inf when rho does.
inline double relative_log_optimality_gap(const DiscreteMarket& market, const Eigen::VectorXd& rho,
                                          const Eigen::VectorXd& pi) {
    const Eigen::VectorXd vr = Eigen::VectorXd::Ones(market.states()) + market.returns() * rho;
    const Eigen::VectorXd vp = Eigen::VectorXd::Ones(market.states()) + market.returns() * pi;
    if ((vp.array() <= 0.0).any()) return -std::numeric_limits<double>::infinity();
    if ((vr.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
    double gap = 0.0;
    for (int s = 0; s < market.states(); ++s) gap += market.probs()(s) * (std::log(vp(s)) - std::log(vr(s)));
    return gap;
}

}  // namespace na1lab
