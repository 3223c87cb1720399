#pragma once

// Valuation of nonnegative claims: super-hedging by LP with its dual deflator,
// hedging with minimal shortfall risk, utility indifference prices and the
// real-world price under the numeraire.

#include "na1lab/arbitrage.hpp"
#include "na1lab/errors.hpp"
#include "na1lab/lp.hpp"
#include "na1lab/market.hpp"
#include "na1lab/portfolio.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace na1lab {

/// Nonnegative payoff xi(omega), one entry per state.
struct Claim {
    Eigen::VectorXd payoff;
};

inline void validate_claim(const DiscreteMarket& market, const Claim& claim) {
    if (claim.payoff.size() != market.states())
        throw InvalidParameter("claim: payoff needs one entry per state");
    if (!claim.payoff.allFinite() || (claim.payoff.array() < 0.0).any())
        throw InvalidParameter("claim: payoff must be finite and nonnegative");
}

struct ValuationReport {
    double primal_value = 0.0;   // least capital v with v (1 + <pi, R>) >= xi
    Eigen::VectorXd strategy;    // pi
    double dual_value = 0.0;     // E[Z* xi]
    Eigen::VectorXd dual_deflator;
    double gap = 0.0;
    bool attainable = false;
    double residual = 0.0;          // min_omega v (1 + <pi, R>) - xi
    double deflator_lp_value = 0.0;  // max over Theta cap L of E[Z* V^pi]
    int perturbed_states = 0;        // zero multipliers raised to 1e-12
    std::string lp_status;
};

inline constexpr double kDeflatorFloor = 1e-12;

namespace detail {

inline void require_na1(const DiscreteMarket& market, const char* who) {
    if (!check_na1(market).holds()) {
        std::ostringstream os;
        os << who << ": NA1 fails, so nonzero claims can be super-hedged from arbitrarily small capital";
        throw PreconditionError(os.str());
    }
}

// Rows of Theta in (v, w) coordinates: a'B w - b v <= 0.
inline void homogenized_theta(const DiscreteMarket& market, int cols, Eigen::MatrixXd& A, Eigen::VectorXd& b) {
    const auto& L = market.subspace();
    const ConstraintSet& th = market.allowed();
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(th.size(), cols);
    rows.col(0) = -th.bounds();
    rows.block(0, 1, th.size(), L.rank) = th.normals() * L.basis;
    append_rows(A, b, rows, Eigen::VectorXd::Zero(th.size()));
}

}  // namespace detail

/// Super-hedging value by the homogenized LP in (v, w), pi = B w / v.
inline ValuationReport superhedge(const DiscreteMarket& market, const Claim& claim) {
    validate_claim(market, claim);
    detail::require_na1(market, "superhedge");
    const auto& L = market.subspace();
    const int r = L.rank;
    const int k = market.states();
    const Eigen::VectorXd& xi = claim.payoff;
    ValuationReport rep;
    rep.strategy = Eigen::VectorXd::Zero(market.dim());

    if (xi.maxCoeff() == 0.0) {
        rep.dual_deflator = Eigen::VectorXd::Ones(k);
        rep.attainable = true;
        rep.deflator_lp_value = deflator_lp_value(market, rep.dual_deflator);
        rep.lp_status = "trivial";
        return rep;
    }

    // -v - G_s w <= -xi_s, Theta rows, -v <= 0.
    Eigen::MatrixXd A(k, r + 1);
    A.col(0).setConstant(-1.0);
    A.rightCols(r) = -market.reduced_returns();
    Eigen::VectorXd b = -xi;
    detail::homogenized_theta(market, r + 1, A, b);
    Eigen::MatrixXd nonneg = Eigen::MatrixXd::Zero(1, r + 1);
    nonneg(0, 0) = -1.0;
    detail::append_rows(A, b, nonneg, Eigen::VectorXd::Zero(1));

    Eigen::VectorXd c = Eigen::VectorXd::Zero(r + 1);
    c(0) = 1.0;
    const auto sol = lp::minimize(c, A, b);
    rep.lp_status = lp::to_string(sol.status);
    if (!sol.optimal()) throw NumericError(detail::lp_failure("superhedge", sol));

    const double v = sol.x(0);
    rep.primal_value = v;
    if (v > 0.0) rep.strategy = L.basis * sol.x.tail(r) / v;
    const Eigen::VectorXd wealth = Eigen::VectorXd::Constant(k, v) + market.reduced_returns() * sol.x.tail(r);
    rep.residual = (wealth - xi).minCoeff();

    Eigen::VectorXd Z(k);
    for (int s = 0; s < k; ++s) {
        const double lam = std::max(sol.duals(s), 0.0);
        Z(s) = lam / market.probs()(s);
        if (Z(s) < kDeflatorFloor) {
            Z(s) = kDeflatorFloor;
            ++rep.perturbed_states;
        }
    }
    rep.dual_deflator = Z;
    rep.dual_value = market.probs().cwiseProduct(Z).dot(xi);
    rep.gap = std::abs(rep.primal_value - rep.dual_value);
    rep.deflator_lp_value = deflator_lp_value(market, Z);
    if (rep.deflator_lp_value > 1.0 + 1e-8) {
        std::ostringstream os;
        os.precision(17);
        os << "superhedge: dual deflator fails the deflator check, LP value " << rep.deflator_lp_value;
        throw NumericError(os.str());
    }
    rep.attainable = (wealth - xi).cwiseAbs().maxCoeff() <= 1e-9 && rep.perturbed_states == 0;
    return rep;
}

/// Convex loss l(x) = max(0, max_k slope_k x + intercept_k), slopes >= 0, intercepts <= 0.
struct ShortfallLoss {
    std::vector<Piece> pieces;

    static ShortfallLoss positive_part() { return ShortfallLoss{{Piece{1.0, 0.0}}}; }

    double operator()(double x) const {
        double v = 0.0;
        for (const auto& p : pieces) v = std::max(v, p.slope * x + p.intercept);
        return v;
    }
};

struct ShortfallResult {
    double capital = 0.0;  // v <= v0 actually committed
    Eigen::VectorXd strategy;
    double risk = 0.0;  // E[l(xi - v V^pi)]
    std::string lp_status;
};

/// Minimizes E[l(xi - v (1 + <pi, R>))] over 0 <= v <= v0 and allowed pi.
inline ShortfallResult shortfall_hedge(const DiscreteMarket& market, const Claim& claim, const ShortfallLoss& loss,
                                       double v0) {
    validate_claim(market, claim);
    if (!(v0 > 0.0) || !std::isfinite(v0)) throw InvalidParameter("shortfall_hedge: v0 must be positive");
    if (loss.pieces.empty()) throw InvalidParameter("shortfall_hedge: loss needs at least one piece");
    for (const auto& p : loss.pieces)
        if (!(p.slope >= 0.0) || !(p.intercept <= 0.0))
            throw InvalidParameter("shortfall_hedge: loss pieces need slope >= 0 and intercept <= 0");
    detail::require_na1(market, "shortfall_hedge");

    const auto& L = market.subspace();
    const int r = L.rank;
    const int k = market.states();
    const int n = 1 + r + k;
    const Eigen::MatrixXd& G = market.reduced_returns();
    const Eigen::VectorXd& xi = claim.payoff;

    Eigen::MatrixXd A(0, n);
    Eigen::VectorXd b(0);
    {
        // s_s >= a (xi_s - v - G_s w) + c  and  s_s >= 0.
        const int np = static_cast<int>(loss.pieces.size());
        Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(k * (np + 1), n);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k * (np + 1));
        int row = 0;
        for (int s = 0; s < k; ++s) {
            for (const auto& p : loss.pieces) {
                rows(row, 0) = -p.slope;
                rows.block(row, 1, 1, r) = -p.slope * G.row(s);
                rows(row, 1 + r + s) = -1.0;
                rhs(row) = -p.slope * xi(s) - p.intercept;
                ++row;
            }
            rows(row, 1 + r + s) = -1.0;
            ++row;
        }
        detail::append_rows(A, b, rows, rhs);
    }
    detail::homogenized_theta(market, n, A, b);
    {
        Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(2, n);
        rows(0, 0) = 1.0;
        rows(1, 0) = -1.0;
        Eigen::VectorXd rhs(2);
        rhs << v0, 0.0;
        detail::append_rows(A, b, rows, rhs);
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    c.tail(k) = market.probs();
    const auto sol = lp::minimize(c, A, b);
    if (!sol.optimal()) throw NumericError(detail::lp_failure("shortfall_hedge", sol));

    ShortfallResult out;
    out.lp_status = lp::to_string(sol.status);
    out.capital = std::max(sol.x(0), 0.0);
    const Eigen::VectorXd w = sol.x.segment(1, r);
    out.strategy = out.capital > 0.0 ? Eigen::VectorXd(L.basis * w / out.capital) : Eigen::VectorXd::Zero(market.dim());
    const Eigen::VectorXd wealth = Eigen::VectorXd::Constant(k, sol.x(0)) + G * w;
    for (int s = 0; s < k; ++s) out.risk += market.probs()(s) * loss(xi(s) - wealth(s));
    return out;
}

struct IndifferenceOptions {
    double tol = 1e-8;      // on p
    double margin = 1e-9;   // search on [0, v - margin]
    MaximizeOptions inner = [] {
        MaximizeOptions o;
        o.tol = 1e-10;
        return o;
    }();
};

/// p with sup E[u(v V^pi)] = sup E[u((v - p) V^pi + xi)], by bisection.
inline double indifference_price(const DiscreteMarket& market, const Claim& claim, const UtilitySpec& u, double v,
                                 const IndifferenceOptions& opt = {}) {
    validate_claim(market, claim);
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidParameter("indifference_price: v must be positive");
    if (u.shift().size() > 0 || u.weight().size() > 0)
        throw InvalidParameter("indifference_price: pass the untransformed utility");
    detail::require_na1(market, "indifference_price");

    const double lhs = maximize_utility(market, u.transformed(v), opt.inner).value;
    if (!std::isfinite(lhs)) throw DomainError("indifference_price: optimal utility without the claim is not finite");
    auto rhs = [&](double p) { return maximize_utility(market, u.transformed(v - p, claim.payoff), opt.inner).value; };

    if (claim.payoff.maxCoeff() == 0.0) return 0.0;
    // Optimizer noise on equal values must not flip the sign at p = 0.
    const double slack = 1e-10 * std::max(1.0, std::abs(lhs));
    const double r0 = rhs(0.0);
    if (r0 < lhs - slack) {
        std::ostringstream os;
        os.precision(12);
        os << "indifference_price: utility with the claim at p = 0 (" << r0 << ") is below utility without it (" << lhs
           << "); no price in [0, v)";
        throw DomainError(os.str());
    }
    double lo = 0.0, hi = v - opt.margin;
    if (rhs(hi) > lhs) throw DomainError("indifference_price: claim is worth more than the whole capital v");
    while (hi - lo > opt.tol) {
        const double mid = 0.5 * (lo + hi);
        (rhs(mid) > lhs ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// E[xi / V^rho] under the numeraire; +inf when rho loses everything where xi > 0.
inline double real_world_price(const DiscreteMarket& market, const Claim& claim) {
    validate_claim(market, claim);
    const auto rho = numeraire_portfolio(market);
    const Eigen::VectorXd V = Eigen::VectorXd::Ones(market.states()) + market.returns() * rho.strategy;
    double price = 0.0;
    for (int s = 0; s < market.states(); ++s) {
        if (claim.payoff(s) == 0.0) continue;
        if (V(s) <= 0.0) return std::numeric_limits<double>::infinity();
        price += market.probs()(s) * claim.payoff(s) / V(s);
    }
    return price;
}

}  // namespace na1lab
