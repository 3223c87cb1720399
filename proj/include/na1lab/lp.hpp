#pragma once

// Dense linear programming for the small, tall systems that appear in the
// arbitrage certificates: few variables, possibly thousands of halfspaces.
//
// The primal problem is always
//
//     maximize   c'x
//     subject to A x <= b,   x free.
//
// It is solved through its dual  min b'l  s.t.  A'l = c, l >= 0  with a
// two-phase revised simplex. The dual has one equality row per primal
// variable, so the basis stays n x n however many halfspaces there are; the
// simplex multipliers of the final dual basis are the primal optimum.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace na1lab::lp {

enum class Status { optimal, infeasible, unbounded, iteration_limit };

inline std::string to_string(Status s) {
    switch (s) {
        case Status::optimal: return "optimal";
        case Status::infeasible: return "infeasible";
        case Status::unbounded: return "unbounded";
        case Status::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

struct Options {
    double feasibility_tol = 1e-9;   // phase-one residual, rows normalized to unit length
    double optimality_tol = 1e-11;   // reduced-cost tolerance, scaled by max(1, |x|_inf)
    double pivot_tol = 1e-10;
    int max_iterations = 0;          // 0 selects 50 (m + n) + 1000 per phase
};

/// Process-wide defaults used when no options are passed; set once at startup, not concurrently.
inline Options& defaults() {
    static Options opt;
    return opt;
}

struct Solution {
    Status status = Status::iteration_limit;
    double objective = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd x;      // primal point (feasible point when unbounded)
    Eigen::VectorXd duals;  // l >= 0 with A'l = c, one per row of A
    int iterations = 0;
    double max_violation = 0.0;  // max_i (A x - b)_i^+

    bool optimal() const { return status == Status::optimal; }
};

namespace detail {

// Revised simplex for  min cost'l  s.t.  [cols | I] l = rhs,  l >= 0,  rhs >= 0.
// Columns m..m+n-1 are artificials; they start basic and never re-enter.
class DualSystem {
public:
    DualSystem(const Eigen::MatrixXd& cols, const Eigen::VectorXd& cost, const Eigen::VectorXd& rhs,
               const Options& opt)
        : cols_(cols), cost_(cost), rhs_(rhs), opt_(opt),
          n_(static_cast<int>(cols.rows())), m_(static_cast<int>(cols.cols())),
          basis_(n_), in_basis_(m_ + n_, 0) {
        for (int k = 0; k < n_; ++k) {
            basis_[k] = m_ + k;
            in_basis_[m_ + k] = 1;
        }
        limit_ = opt.max_iterations > 0 ? opt.max_iterations : 50 * (m_ + n_) + 1000;
    }

    enum class Outcome { optimal, unbounded, iteration_limit };

    Outcome phase_one() { return run(true); }

    double artificial_mass() const {
        double s = 0.0;
        for (int r = 0; r < n_; ++r)
            if (basis_[r] >= m_) s += std::max(0.0, xb_(r));
        return s;
    }

    // Pivot artificials out of the basis where a real column can replace them.
    // Artificials that stay sit on redundant rows and never move again.
    void drive_out_artificials() {
        for (int r = 0; r < n_; ++r) {
            if (basis_[r] < m_) continue;
            factor();
            Eigen::VectorXd er = Eigen::VectorXd::Unit(n_, r);
            Eigen::VectorXd row = lu_.transpose().solve(er);
            Eigen::VectorXd alpha = cols_.transpose() * row;
            int best = -1;
            double best_abs = 1e-9;
            for (int j = 0; j < m_; ++j) {
                if (in_basis_[j]) continue;
                if (std::abs(alpha(j)) > best_abs) {
                    best_abs = std::abs(alpha(j));
                    best = j;
                }
            }
            if (best >= 0) {
                in_basis_[basis_[r]] = 0;
                basis_[r] = best;
                in_basis_[best] = 1;
            }
        }
        factor();
    }

    Outcome phase_two() { return run(false); }

    // Basic solution l (real columns only) and simplex multipliers y.
    Eigen::VectorXd real_solution() const {
        Eigen::VectorXd l = Eigen::VectorXd::Zero(m_);
        for (int r = 0; r < n_; ++r)
            if (basis_[r] < m_) l(basis_[r]) = std::max(0.0, xb_(r));
        return l;
    }
    const Eigen::VectorXd& multipliers() const { return y_; }
    int iterations() const { return iterations_; }

private:
    Eigen::VectorXd column(int j) const {
        if (j < m_) return cols_.col(j);
        return Eigen::VectorXd::Unit(n_, j - m_);
    }

    double cost_of(int j, bool phase1) const {
        if (phase1) return j >= m_ ? 1.0 : 0.0;
        return j >= m_ ? 0.0 : cost_(j);
    }

    void factor() {
        Eigen::MatrixXd B(n_, n_);
        for (int r = 0; r < n_; ++r) B.col(r) = column(basis_[r]);
        lu_.compute(B);
        xb_ = lu_.solve(rhs_);
    }

    Outcome run(bool phase1) {
        int degenerate_run = 0;
        bool bland = false;
        int local = 0;
        for (;;) {
            factor();
            Eigen::VectorXd cb(n_);
            for (int r = 0; r < n_; ++r) cb(r) = cost_of(basis_[r], phase1);
            y_ = lu_.transpose().solve(cb);

            const double scale = std::max(1.0, y_.lpNorm<Eigen::Infinity>());
            const double tol = opt_.optimality_tol * scale;
            Eigen::VectorXd reduced = -(cols_.transpose() * y_);
            if (!phase1) reduced += cost_;

            int entering = -1;
            double most_negative = -tol;
            for (int j = 0; j < m_; ++j) {
                if (in_basis_[j]) continue;
                if (reduced(j) < most_negative) {
                    entering = j;
                    if (bland) break;
                    most_negative = reduced(j);
                }
            }
            if (entering < 0) return Outcome::optimal;
            if (++local > limit_) return Outcome::iteration_limit;
            ++iterations_;

            Eigen::VectorXd w = lu_.solve(column(entering));
            int leaving = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (int r = 0; r < n_; ++r) {
                if (w(r) <= opt_.pivot_tol) continue;
                const double ratio = std::max(0.0, xb_(r)) / w(r);
                if (leaving < 0 || ratio < best_ratio - 1e-12 * (1.0 + best_ratio)) {
                    leaving = r;
                    best_ratio = ratio;
                } else if (ratio <= best_ratio + 1e-12 * (1.0 + best_ratio)) {
                    const bool prefer = bland ? basis_[r] < basis_[leaving] : w(r) > w(leaving);
                    if (prefer) {
                        leaving = r;
                        best_ratio = std::min(best_ratio, ratio);
                    }
                }
            }
            if (leaving < 0) return Outcome::unbounded;

            if (best_ratio <= 1e-14) {
                if (++degenerate_run > 30) bland = true;
            } else {
                degenerate_run = 0;
            }
            in_basis_[basis_[leaving]] = 0;
            basis_[leaving] = entering;
            in_basis_[entering] = 1;
        }
    }

    const Eigen::MatrixXd& cols_;
    const Eigen::VectorXd& cost_;
    const Eigen::VectorXd& rhs_;
    Options opt_;
    int n_;
    int m_;
    std::vector<int> basis_;
    std::vector<char> in_basis_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    Eigen::VectorXd xb_;
    Eigen::VectorXd y_;
    int iterations_ = 0;
    int limit_ = 0;
};

struct DualRun {
    DualSystem::Outcome outcome;
    bool dual_feasible;
    Eigen::VectorXd x;
    Eigen::VectorXd scaled_duals;
    int iterations;
};

inline DualRun run_dual(const Eigen::MatrixXd& cols, const Eigen::VectorXd& cost, const Eigen::VectorXd& c,
                        const Options& opt) {
    const int n = static_cast<int>(cols.rows());
    Eigen::VectorXd sign = Eigen::VectorXd::Ones(n);
    for (int k = 0; k < n; ++k)
        if (c(k) < 0) sign(k) = -1.0;
    Eigen::MatrixXd flipped = sign.asDiagonal() * cols;
    Eigen::VectorXd rhs = sign.cwiseProduct(c);

    DualSystem sys(flipped, cost, rhs, opt);
    auto out = sys.phase_one();
    if (out == DualSystem::Outcome::iteration_limit) return {out, false, {}, {}, sys.iterations()};
    const double mass_tol = opt.feasibility_tol * std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
    if (sys.artificial_mass() > mass_tol) return {out, false, {}, {}, sys.iterations()};
    sys.drive_out_artificials();
    out = sys.phase_two();
    Eigen::VectorXd x = sign.cwiseProduct(sys.multipliers());
    return {out, true, x, sys.real_solution(), sys.iterations()};
}

}  // namespace detail

/// Solves  max c'x  s.t.  A x <= b  with x free.
inline Solution maximize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const Options& opt = defaults()) {
    const int n = static_cast<int>(A.cols());
    const int m = static_cast<int>(A.rows());
    Solution sol;
    sol.duals = Eigen::VectorXd::Zero(m);

    // Unit-length rows; zero rows are checked directly and dropped.
    std::vector<int> kept;
    std::vector<double> norms;
    kept.reserve(m);
    for (int i = 0; i < m; ++i) {
        const double nrm = A.row(i).norm();
        if (nrm == 0.0) {
            if (b(i) < -opt.feasibility_tol) {
                sol.status = Status::infeasible;
                return sol;
            }
            continue;
        }
        kept.push_back(i);
        norms.push_back(nrm);
    }
    const int mk = static_cast<int>(kept.size());

    if (n == 0) {
        sol.status = Status::optimal;
        sol.objective = 0.0;
        sol.x = Eigen::VectorXd::Zero(0);
        return sol;
    }

    Eigen::MatrixXd cols(n, mk);
    Eigen::VectorXd cost(mk);
    for (int k = 0; k < mk; ++k) {
        cols.col(k) = A.row(kept[k]).transpose() / norms[k];
        cost(k) = b(kept[k]) / norms[k];
    }

    auto finish = [&](Status st, const Eigen::VectorXd& x) {
        sol.status = st;
        sol.x = x;
        Eigen::VectorXd slack = A * x - b;
        sol.max_violation = m > 0 ? std::max(0.0, slack.maxCoeff()) : 0.0;
        if (st == Status::optimal) sol.objective = c.dot(x);
        return sol;
    };

    auto run = detail::run_dual(cols, cost, c, opt);
    sol.iterations = run.iterations;
    if (run.outcome == detail::DualSystem::Outcome::iteration_limit) {
        sol.status = Status::iteration_limit;
        return sol;
    }
    if (run.dual_feasible) {
        if (run.outcome == detail::DualSystem::Outcome::unbounded) {
            sol.status = Status::infeasible;
            return sol;
        }
        for (int k = 0; k < mk; ++k) sol.duals(kept[k]) = run.scaled_duals(k) / norms[k];
        return finish(Status::optimal, run.x);
    }

    // Dual infeasible: the primal is unbounded if it has any feasible point.
    auto feas = detail::run_dual(cols, cost, Eigen::VectorXd::Zero(n), opt);
    sol.iterations += feas.iterations;
    if (feas.outcome == detail::DualSystem::Outcome::iteration_limit) {
        sol.status = Status::iteration_limit;
        return sol;
    }
    if (feas.outcome == detail::DualSystem::Outcome::unbounded) {
        sol.status = Status::infeasible;
        return sol;
    }
    return finish(Status::unbounded, feas.x);
}

/// Solves  min c'x  s.t.  A x <= b.  Duals satisfy A'l = -c.
inline Solution minimize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const Options& opt = defaults()) {
    Solution s = maximize(-c, A, b, opt);
    if (s.status == Status::optimal) s.objective = -s.objective;
    return s;
}

/// True when {x : A x <= b} is nonempty.
inline bool feasible(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Options& opt = defaults()) {
    return maximize(Eigen::VectorXd::Zero(A.cols()), A, b, opt).status == Status::optimal;
}

}  // namespace na1lab::lp
