#pragma once

// Gauss quadrature rules from the three-term recurrence of the orthonormal
// polynomials. Nodes start from the eigenvalues of the Jacobi matrix and are
// polished by Newton steps; weights use the Christoffel formula
// w_i = 1 / sum_k p_k(x_i)^2, which keeps full relative accuracy for the tiny
// tail weights of the Hermite rule.

#include "na1lab/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>

namespace na1lab::quadrature {

struct Rule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

namespace detail {

// Symmetric recurrence b_{k+1} p_{k+1} = x p_k - b_k p_{k-1}, p_0 = mu0^{-1/2}.
inline Rule gauss_rule(int n, const std::function<double(int)>& b, double mu0) {
    if (n < 1) throw InvalidParameter("quadrature: need at least one node");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = b(k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
    Rule rule;
    rule.nodes = eig.eigenvalues();
    rule.weights.resize(n);
    const double p0 = 1.0 / std::sqrt(mu0);

    for (int i = 0; i < n; ++i) {
        double x = rule.nodes(i);
        for (int newton = 0; newton < 3; ++newton) {
            double pm = 0.0, p = p0, dpm = 0.0, dp = 0.0;
            for (int k = 0; k < n; ++k) {
                const double bk = k > 0 ? b(k) : 0.0;
                const double pn = (x * p - bk * pm) / b(k + 1);
                const double dpn = (p + x * dp - bk * dpm) / b(k + 1);
                pm = p;
                p = pn;
                dpm = dp;
                dp = dpn;
            }
            if (dp == 0.0) break;
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) <= 1e-16 * std::max(1.0, std::abs(x))) break;
        }
        rule.nodes(i) = x;
        double pm = 0.0, p = p0, sum = p0 * p0;
        for (int k = 0; k + 1 < n; ++k) {
            const double bk = k > 0 ? b(k) : 0.0;
            const double pn = (x * p - bk * pm) / b(k + 1);
            pm = p;
            p = pn;
            sum += p * p;
        }
        rule.weights(i) = 1.0 / sum;
    }
    return rule;
}

}  // namespace detail

/// Gauss-Legendre rule on [-1, 1].
inline Rule gauss_legendre(int n) {
    return detail::gauss_rule(
        n, [](int k) { return k / std::sqrt(4.0 * k * k - 1.0); }, 2.0);
}

/// Gauss-Hermite rule for the weight exp(-x^2) on the real line.
inline Rule gauss_hermite(int n) {
    return detail::gauss_rule(
        n, [](int k) { return std::sqrt(k / 2.0); }, std::sqrt(std::numbers::pi));
}

}  // namespace na1lab::quadrature
