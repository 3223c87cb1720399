#pragma once

// Euclidean projection onto a polyhedron { u : A u <= b } by a primal
// active-set method. The Hessian is the identity, so every equality-
// constrained subproblem is a small least-squares solve in the active rows.

#include "na1lab/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace na1lab::qp {

struct Projection {
    Eigen::VectorXd point;
    std::vector<int> active;  // rows of A held at equality
    int iterations = 0;
};

/// Projects x onto { u : A u <= b }. `start` must be feasible; it seeds the
/// working set with the rows it satisfies with equality.
inline Projection project(const Eigen::VectorXd& x, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& start, double tol = 1e-12) {
    const int n = static_cast<int>(x.size());
    const int m = static_cast<int>(A.rows());
    Projection out;
    out.point = start;
    if (m == 0) {
        out.point = x;
        return out;
    }

    Eigen::VectorXd norms = A.rowwise().norm();
    Eigen::VectorXd& u = out.point;
    std::vector<int> work;
    std::vector<char> in_work(m, 0);

    auto scale = [&](int i) { return std::max(1.0, std::abs(b(i))) * tol * 1e3; };

    // Seed with rows active at the start, keeping them linearly independent.
    {
        Eigen::MatrixXd W(0, n);
        for (int i = 0; i < m; ++i) {
            if (norms(i) == 0.0) continue;
            if (b(i) - A.row(i).dot(u) > scale(i)) continue;
            Eigen::MatrixXd trial(W.rows() + 1, n);
            trial << W, A.row(i);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(trial);
            lu.setThreshold(1e-10);
            if (lu.rank() == trial.rows()) {
                W = trial;
                work.push_back(i);
                in_work[i] = 1;
            }
            if (static_cast<int>(work.size()) == n) break;
        }
    }

    const int max_iter = 20 * (m + n) + 100;
    bool done = false;
    for (int it = 0; it < max_iter; ++it) {
        out.iterations = it + 1;
        const int k = static_cast<int>(work.size());
        Eigen::MatrixXd W(k, n);
        for (int j = 0; j < k; ++j) W.row(j) = A.row(work[j]);

        // Step p = argmin |u + p - x|^2 with W p = 0, and multipliers at p = 0.
        Eigen::VectorXd r = x - u;
        Eigen::VectorXd p = r;
        Eigen::VectorXd lambda;
        if (k > 0) {
            Eigen::MatrixXd G = W * W.transpose();
            Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
            lambda = ldlt.solve(W * r);
            p = r - W.transpose() * lambda;
        }

        if (p.norm() <= tol * (1.0 + x.norm() + u.norm())) {
            if (k == 0) {
                done = true;
                break;
            }
            int worst = -1;
            double most_negative = -tol * (1.0 + r.norm());
            for (int j = 0; j < k; ++j) {
                if (lambda(j) < most_negative) {
                    most_negative = lambda(j);
                    worst = j;
                }
            }
            if (worst < 0) {
                done = true;
                break;
            }
            in_work[work[worst]] = 0;
            work.erase(work.begin() + worst);
            continue;
        }

        double alpha = 1.0;
        int blocking = -1;
        for (int i = 0; i < m; ++i) {
            if (in_work[i]) continue;
            const double ap = A.row(i).dot(p);
            if (ap <= 1e-14 * norms(i) * p.norm()) continue;
            const double room = std::max(0.0, b(i) - A.row(i).dot(u));
            const double t = room / ap;
            if (t < alpha) {
                alpha = t;
                blocking = i;
            }
        }
        u += alpha * p;
        if (blocking >= 0) {
            work.push_back(blocking);
            in_work[blocking] = 1;
        }
    }
    if (!done) throw NumericError("projection: active-set iteration limit reached");
    out.active = work;
    return out;
}

}  // namespace na1lab::qp
