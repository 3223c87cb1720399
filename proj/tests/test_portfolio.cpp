#include <gtest/gtest.h>

#include "na1lab/factor.hpp"
#include "na1lab/portfolio.hpp"

#include <cmath>
#include <random>

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace na1lab;

namespace {

VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

ConstraintSet interval(double lo, double hi) {
    MatrixXd A(2, 1);
    A << 1, -1;
    return ConstraintSet(A, vec({hi, -lo}));
}

// Returns in (-1, 2], both signs present in every column, simplex constraints.
DiscreteMarket random_market(std::mt19937_64& rng, int d, int k) {
    std::uniform_real_distribution<double> U(-0.9, 2.0);
    std::uniform_real_distribution<double> P(0.1, 1.0);
    MatrixXd R(k, d);
    for (int s = 0; s < k; ++s)
        for (int i = 0; i < d; ++i) R(s, i) = U(rng);
    for (int i = 0; i < d; ++i) {
        R(0, i) = -0.5;
        R(1, i) = 0.8;
    }
    VectorXd p(k);
    for (int s = 0; s < k; ++s) p(s) = P(rng);
    p /= p.sum();
    return DiscreteMarket(p, R, preset_constraints(Preset::no_short_no_borrow(), d));
}

VectorXd random_simplex_point(std::mt19937_64& rng, int d) {
    std::exponential_distribution<double> E(1.0);
    VectorXd x(d + 1);
    for (int i = 0; i <= d; ++i) x(i) = E(rng);
    return x.head(d) / x.sum();
}

// Bisection on the derivative of a concave one-dimensional objective over [lo, hi].
double argmax_1d(const std::function<double(double)>& dfun, double lo, double hi) {
    if (dfun(lo) <= 0.0) return lo;
    if (dfun(hi) >= 0.0) return hi;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (dfun(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST(UtilitySpec, Validation) {
    EXPECT_THROW(UtilitySpec::power(1.0), InvalidParameter);
    EXPECT_THROW(UtilitySpec::power(0.0), InvalidParameter);
    EXPECT_THROW(UtilitySpec::piecewise_linear({}), InvalidParameter);
    EXPECT_THROW(UtilitySpec::piecewise_linear({{-1.0, 0.0}}), InvalidParameter);
    EXPECT_THROW(UtilitySpec::log().transformed(0.0), InvalidParameter);
    EXPECT_THROW(UtilitySpec::log().lower_bound_at(0.0), InvalidParameter);
    EXPECT_EQ(UtilitySpec::log()(0, 0.0), -std::numeric_limits<double>::infinity());
    EXPECT_EQ(UtilitySpec::power(0.5)(0, 0.0), 0.0);
    EXPECT_NEAR(UtilitySpec::power(-1.0)(0, 2.0), -0.5, 1e-15);
    auto pl = UtilitySpec::piecewise_linear({{2.0, 0.0}, {0.5, 1.5}});
    EXPECT_NEAR(pl(0, 0.5), 1.0, 1e-15);
    EXPECT_NEAR(pl(0, 3.0), 3.0, 1e-15);
    EXPECT_EQ(pl.derivative(0, 3.0), 0.5);
    auto t = UtilitySpec::log().transformed(2.0, vec({0.0, 1.0}), vec({1.0, 3.0}));
    EXPECT_NEAR(t(1, 1.0), 3.0 * std::log(3.0), 1e-15);
    EXPECT_NEAR(t.derivative(1, 1.0), 3.0 * 2.0 / 3.0, 1e-15);
}

TEST(UtilityObjective, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(11);
    const std::vector<UtilitySpec> us = {UtilitySpec::log(), UtilitySpec::power(0.5), UtilitySpec::power(-2.0),
                                         UtilitySpec::log().transformed(1.5, VectorXd::Constant(5, 0.2))};
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 1 + trial % 3;
        auto m = random_market(rng, d, 5);
        const VectorXd pi = 0.8 * random_simplex_point(rng, d);
        const UtilityObjective J(m.probs(), m.returns(), us[trial % us.size()]);
        const VectorXd g = J.gradient(pi);
        VectorXd fd(d);
        for (int i = 0; i < d; ++i) {
            const double h = 1e-6;
            VectorXd a = pi, b = pi;
            a(i) += h;
            b(i) -= h;
            fd(i) = (J.value(a) - J.value(b)) / (2 * h);
        }
        EXPECT_LE((g - fd).norm() / std::max(1.0, g.norm()), 1e-5) << trial;
    }
}

TEST(MaximizeUtility, BinaryMarketClosedForms) {
    // R in {-0.5, 1}: log optimum 1/2, power optimum from the first-order condition.
    MatrixXd R(2, 1);
    R << -0.5, 1.0;
    DiscreteMarket m(vec({0.5, 0.5}), R, interval(-10, 10));
    auto lg = maximize_utility(m, UtilitySpec::log());
    EXPECT_NEAR(lg.strategy(0), 0.5, 1e-7);
    for (double gamma : {0.5, -1.0, -3.0}) {
        auto dJ = [&](double x) {
            return 0.5 * -0.5 * std::pow(1 - 0.5 * x, gamma - 1) + 0.5 * std::pow(1 + x, gamma - 1);
        };
        const double oracle = argmax_1d(dJ, -0.999, 1.999);
        auto pw = maximize_utility(m, UtilitySpec::power(gamma));
        EXPECT_NEAR(pw.strategy(0), oracle, 1e-6) << gamma;
    }
}

TEST(MaximizeUtility, ConstraintBindsAndIsReported) {
    MatrixXd R(2, 1);
    R << -0.5, 1.0;
    DiscreteMarket m(vec({0.5, 0.5}), R, interval(0, 0.2));
    auto lg = maximize_utility(m, UtilitySpec::log());
    EXPECT_NEAR(lg.strategy(0), 0.2, 1e-9);
    ASSERT_EQ(lg.active_constraints.size(), 1u);
    EXPECT_EQ(lg.active_constraints[0], 0);
}

TEST(MaximizeUtility, PiecewiseLinearMatchesGridSearch) {
    std::mt19937_64 rng(5);
    auto u = UtilitySpec::piecewise_linear({{3.0, -1.0}, {1.0, 0.2}, {0.2, 1.0}});
    for (int trial = 0; trial < 20; ++trial) {
        auto m = random_market(rng, 1, 4);
        auto opt = maximize_utility(m, u);
        const UtilityObjective J(m.probs(), m.returns(), u);
        double best = -1e300;
        for (int i = 0; i <= 20000; ++i) best = std::max(best, J.value(vec({i / 20000.0})));
        EXPECT_GE(opt.value, best - 1e-9);
        EXPECT_LE(opt.value, best + 1e-3);
        EXPECT_LE(m.allowed().max_violation(opt.strategy), 1e-9);
    }
}

TEST(MaximizeUtility, ViabilityRequiresNa1) {
    // Strictly positive return: unbounded arbitrage without constraints.
    MatrixXd R(2, 1);
    R << 0.1, 0.5;
    DiscreteMarket m(vec({0.5, 0.5}), R, ConstraintSet(1));
    EXPECT_THROW(maximize_utility(m, UtilitySpec::log()), PreconditionError);
    MaximizeOptions opt;
    opt.require_na1 = false;
    opt.divergence_radius = 1e3;
    for (const auto& u : {UtilitySpec::log(), UtilitySpec::power(0.5)}) {
        auto r = maximize_utility(m, u, opt);
        EXPECT_TRUE(r.diverged);
        EXPECT_GT(r.strategy.norm(), 1e3);
    }
    // Power utility grows without bound along the ray.
    auto r = maximize_utility(m, UtilitySpec::power(0.5), opt);
    EXPECT_GT(r.value, 10.0);
}

TEST(Numeraire, LognormalLogOptimum) {
    auto m = lognormal_market(64, interval(0, 1));
    auto rho = numeraire_portfolio(m);
    EXPECT_NEAR(rho.strategy(0), 0.5, 1e-3);
    EXPECT_NEAR(verify_numeraire(m, rho.strategy), 1.0, 1e-8);
}

TEST(Numeraire, LognormalBindingBound) {
    auto m = lognormal_market(64, interval(0, 0.3));
    auto rho = numeraire_portfolio(m);
    EXPECT_NEAR(rho.strategy(0), 0.3, 1e-9);
    const VectorXd v = VectorXd::Ones(m.states()) + m.returns() * rho.strategy;
    const double e_inv = m.probs().cwiseQuotient(v).sum();
    EXPECT_LT(e_inv, 1.0 - 1e-4);
    auto d = deflator_from_numeraire(m, rho.strategy);
    EXPECT_LE(d.lp_value, 1.0 + 1e-8);
    auto q = construct_esmm(m);
    EXPECT_LE(q.supermartingale_value, 1e-8);
}

TEST(Numeraire, RandomMarketsCertify) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        const int d = 1 + trial % 3;
        auto m = random_market(rng, d, d + 2 + trial % 3);
        auto rho = numeraire_portfolio(m);
        const double v = verify_numeraire(m, rho.strategy);
        EXPECT_NEAR(v, 1.0, 1e-6) << trial;
        for (int k = 0; k < 20; ++k) {
            const VectorXd pi = random_simplex_point(rng, d);
            EXPECT_LE(relative_log_optimality_gap(m, rho.strategy, pi), 1e-6);
        }
        // Uniqueness of the wealth: a restart from elsewhere lands on the same V.
        MaximizeOptions opt;
        opt.start = random_simplex_point(rng, d);
        auto again = numeraire_portfolio(m, opt);
        EXPECT_LE((m.returns() * (again.strategy - rho.strategy)).cwiseAbs().maxCoeff(), 1e-5);
    }
}

TEST(Numeraire, NonNumeraireIsRejected) {
    MatrixXd R(2, 1);
    R << -0.5, 1.0;
    DiscreteMarket m(vec({0.5, 0.5}), R, interval(-1, 1));
    EXPECT_GT(verify_numeraire(m, vec({0.0})), 1.0 + 1e-3);
    EXPECT_THROW(deflator_from_numeraire(m, vec({0.0})), PreconditionError);
    EXPECT_THROW(verify_numeraire(m, vec({-2.0})), InvalidParameter);
    EXPECT_EQ(relative_log_optimality_gap(m, vec({0.5}), vec({2.0})), -std::numeric_limits<double>::infinity());
    EXPECT_EQ(relative_log_optimality_gap(m, vec({-2.0}), vec({0.5})), std::numeric_limits<double>::infinity());
}

TEST(Numeraire, ExponentialFactorExampleAvoidsMaximalArbitrage) {
    MatrixXd Q(2, 2);
    Q << 1, 0.5, 0, 1;
    Factor y1{0.0, kInf, Exponential{1.0, 0.0}};
    Factor y2{-1.0, kInf, Exponential{0.3, -1.0}};
    FactorModel model(Q, {y1, y2}, 1.0);
    auto disc = discretize(model, 64);
    auto rho = numeraire_portfolio(disc.market);
    EXPECT_NEAR(rho.strategy(0), 1.335, 0.01);
    EXPECT_NEAR(rho.strategy(1), -0.335, 0.01);
    EXPECT_NEAR(rho.strategy.sum(), 1.0, 1e-8);
    const VectorXd pimax = max_arbitrage_strategy(model);
    EXPECT_GT(verify_numeraire(disc.market, pimax), 1.0);
}
