#include <gtest/gtest.h>

#include "na1lab/market.hpp"

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

DiscreteMarket one_asset(std::initializer_list<double> returns, ConstraintSet c = ConstraintSet(1)) {
    const int k = static_cast<int>(returns.size());
    MatrixXd R(k, 1);
    int i = 0;
    for (double r : returns) R(i++, 0) = r;
    return DiscreteMarket(VectorXd::Constant(k, 1.0 / k), R, std::move(c));
}

}  // namespace

TEST(Presets, SimplexInTwoDimensions) {
    auto s = preset_constraints(Preset::no_short_no_borrow(), 2);
    EXPECT_EQ(s.size(), 3);
    EXPECT_TRUE(s.contains(vec({0.5, 0.5})));
    EXPECT_TRUE(s.contains(vec({0, 0})));
    EXPECT_FALSE(s.contains(vec({0.7, 0.4})));
    EXPECT_FALSE(s.contains(vec({-0.1, 0.4})));
    EXPECT_EQ(s.preset_tag(), "no_short_no_borrow");
}

TEST(Presets, BorrowLimitIsOneHalfspace) {
    auto s = preset_constraints(Preset::borrow_limit(2.5), 2);
    ASSERT_EQ(s.size(), 1);
    EXPECT_EQ(s.normals().row(0), Eigen::RowVector2d(1, 1));
    EXPECT_EQ(s.bounds()(0), 2.5);
}

TEST(Presets, SymmetricBox) {
    auto s = preset_constraints(Preset::box(vec({1, 1}), vec({1, 1})), 2);
    EXPECT_TRUE(s.contains(vec({1, -1})));
    EXPECT_FALSE(s.contains(vec({1.1, 0})));
    EXPECT_FALSE(s.contains(vec({0, -1.1})));
}

TEST(Presets, RejectsNonpositiveParameters) {
    EXPECT_THROW(preset_constraints(Preset::borrow_limit(0.0), 2), InvalidParameter);
    EXPECT_THROW(preset_constraints(Preset::box(vec({1, 0}), vec({1, 1})), 2), InvalidParameter);
    EXPECT_THROW(preset_constraints(Preset::no_short(), 0), InvalidParameter);
}

TEST(Support, CollapsesDuplicates) {
    MatrixXd R(2, 2);
    R << 1, 0, 1, 0;
    DiscreteMarket m(vec({0.5, 0.5}), R, ConstraintSet(2));
    EXPECT_EQ(m.support().rows(), 1);

    R << 1, 0, -0.5, 2;
    EXPECT_EQ(DiscreteMarket(vec({0.5, 0.5}), R, ConstraintSet(2)).support().rows(), 2);

    R.setZero();
    auto z = DiscreteMarket(vec({0.5, 0.5}), R, ConstraintSet(2)).support();
    ASSERT_EQ(z.rows(), 1);
    EXPECT_EQ(z.norm(), 0.0);
}

TEST(Span, FullRankOneAndZero) {
    MatrixXd S = MatrixXd::Identity(2, 2);
    auto full = span_and_projection(S);
    EXPECT_EQ(full.rank, 2);
    EXPECT_LE((full.projector() - MatrixXd::Identity(2, 2)).norm(), 1e-12);

    MatrixXd one(1, 2);
    one << 1, 1;
    auto line = span_and_projection(one);
    EXPECT_EQ(line.rank, 1);
    EXPECT_LE((line.project(vec({2, 0})) - vec({1, 1})).norm(), 1e-12);

    auto null = span_and_projection(MatrixXd::Zero(1, 2));
    EXPECT_EQ(null.rank, 0);
    EXPECT_EQ(null.project(vec({3, -1})).norm(), 0.0);
}

TEST(Span, ProjectionIsIdempotentAndOrthonormal) {
    std::mt19937 rng(3);
    std::normal_distribution<double> n01;
    for (int t = 0; t < 50; ++t) {
        MatrixXd S(3, 4);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j) S(i, j) = n01(rng);
        auto L = span_and_projection(S);
        EXPECT_EQ(L.rank, 3);
        EXPECT_LE((L.basis.transpose() * L.basis - MatrixXd::Identity(3, 3)).norm(), 1e-10);
        VectorXd x(4);
        for (int j = 0; j < 4; ++j) x(j) = n01(rng);
        EXPECT_LE((L.project(L.project(x)) - L.project(x)).norm(), 1e-10);
        for (int i = 0; i < 3; ++i) EXPECT_LE(L.project_perp(S.row(i).transpose()).norm(), 1e-10);
    }
}

TEST(Admissible, SymmetricSupportGivesInterval) {
    auto m = one_asset({-1.0, 1.0});
    auto adm = admissible_polyhedron(m);
    EXPECT_EQ(adm.size(), 2);
    EXPECT_TRUE(adm.contains(vec({1.0})));
    EXPECT_TRUE(adm.contains(vec({-1.0})));
    EXPECT_FALSE(adm.contains(vec({1.01})));
    EXPECT_FALSE(adm.contains(vec({-1.01})));
    EXPECT_TRUE(adm.contains(vec({0.0})));
}

TEST(Admissible, LognormalSupportDownToMinusOne) {
    // Returns e^y - 1 reaching -1 from above: admissible set becomes [0, 1].
    auto m = one_asset({-1.0, std::exp(-3.0) - 1, std::exp(0.5) - 1, std::exp(4.0) - 1});
    auto adm = m.admissible();
    EXPECT_TRUE(adm.contains(vec({0.0})));
    EXPECT_TRUE(adm.contains(vec({1.0})));
    EXPECT_FALSE(adm.contains(vec({1.0 + 1e-6})));
    EXPECT_FALSE(adm.contains(vec({-0.02})));
}

TEST(Admissible, NoExtraConstraintsMeansAllowedEqualsAdmissible) {
    auto m = one_asset({-0.5, 0.5});
    EXPECT_EQ(m.allowed().normals(), m.admissible().normals());
    EXPECT_EQ(m.allowed().bounds(), m.admissible().bounds());
}

TEST(RecessionCone, BoundedSetAndCone) {
    auto m = one_asset({-1.0, 1.0}, preset_constraints(Preset::no_short(), 1));
    auto cone = recession_cone(m.allowed());
    EXPECT_TRUE(cone.contains(vec({0.0})));
    EXPECT_FALSE(cone.contains(vec({1.0})));

    auto ns = preset_constraints(Preset::no_short(), 2);
    auto c2 = recession_cone(ns);
    EXPECT_TRUE(c2.contains(vec({3, 4})));
    EXPECT_FALSE(c2.contains(vec({-1, 4})));
}

TEST(RecessionCone, InfeasibleSetThrows) {
    MatrixXd A(2, 1);
    A << 1, -1;
    EXPECT_THROW(recession_cone(ConstraintSet(A, vec({-1, -1}))), InfeasibleError);
}

TEST(RecessionCone, ClosedUnderPositiveScaling) {
    std::mt19937 rng(11);
    std::normal_distribution<double> n01;
    MatrixXd A(3, 2);
    A << -1, 0, -1, -1, 0.5, -1;
    auto cone = recession_cone(ConstraintSet(A, vec({1, 2, 0.5})));
    int members = 0;
    while (members < 100) {
        VectorXd y(2);
        y << n01(rng), n01(rng);
        if (!cone.contains(y, 0.0)) continue;
        ++members;
        for (double lam : {0.5, 2.0, 10.0}) EXPECT_TRUE(cone.contains(lam * y, 1e-12));
    }
}

TEST(Wealth, BasicIdentities) {
    MatrixXd R(2, 2);
    R << 0.2, -0.1, -0.3, 0.4;
    DiscreteMarket m(vec({0.4, 0.6}), R, ConstraintSet(2));
    EXPECT_EQ(wealth(vec({0, 0}), 3.0, m), vec({3, 3}));
    EXPECT_NEAR(wealth(vec({1, 0}), 1.0, m)(0), 1.2, 1e-15);
    VectorXd pi = vec({0.3, -0.7});
    EXPECT_LE((wealth(pi, 2.0, m) - 2.0 * wealth(pi, 1.0, m)).norm(), 1e-15);
}

TEST(Wealth, RedundantDirectionsDoNotMatter) {
    // Two identical assets: (1, -1) is orthogonal to the return span.
    MatrixXd R(3, 2);
    R << 0.1, 0.1, -0.2, -0.2, 0.05, 0.05;
    DiscreteMarket m(vec({0.2, 0.3, 0.5}), R, ConstraintSet(2));
    EXPECT_EQ(m.subspace().rank, 1);
    std::mt19937 rng(5);
    std::normal_distribution<double> n01;
    for (int t = 0; t < 20; ++t) {
        VectorXd pi = vec({n01(rng), n01(rng)});
        VectorXd x = m.subspace().project_perp(vec({n01(rng), n01(rng)})) * 100.0;
        EXPECT_LE((wealth(pi + x, 1.5, m) - wealth(pi, 1.5, m)).lpNorm<Eigen::Infinity>(), 1e-10);
    }
}

TEST(Market, Validation) {
    MatrixXd R(2, 1);
    R << 0.1, -0.1;
    EXPECT_THROW(DiscreteMarket(vec({0.5, 0.6}), R, ConstraintSet(1)), InvalidParameter);
    EXPECT_THROW(DiscreteMarket(vec({1.0, 0.0}), R, ConstraintSet(1)), InvalidParameter);
    R(1, 0) = -1.5;
    EXPECT_THROW(DiscreteMarket(vec({0.5, 0.5}), R, ConstraintSet(1)), InvalidParameter);
    R(1, 0) = -0.1;
    EXPECT_THROW(DiscreteMarket(vec({0.5, 0.5}), R, ConstraintSet(2)), InvalidParameter);
}

TEST(Market, ConstraintsMustLeaveOrthogonalDirectionsFree) {
    MatrixXd R(2, 2);
    R << 0.1, 0.1, -0.2, -0.2;
    // No-short restricts (1, -1), which is invisible to the returns.
    EXPECT_THROW(DiscreteMarket(vec({0.5, 0.5}), R, preset_constraints(Preset::no_short(), 2)), InvalidParameter);
    // The borrow limit only restricts the return-relevant direction (1, 1).
    EXPECT_NO_THROW(DiscreteMarket(vec({0.5, 0.5}), R, preset_constraints(Preset::borrow_limit(1.0), 2)));
}

TEST(Market, AdmissibleContainsZero) {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    for (int t = 0; t < 30; ++t) {
        MatrixXd R(4, 3);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 3; ++j) R(i, j) = u(rng);
        DiscreteMarket m(VectorXd::Constant(4, 0.25), R, ConstraintSet(3));
        EXPECT_TRUE(m.admissible().contains(VectorXd::Zero(3), 0.0));
    }
}
