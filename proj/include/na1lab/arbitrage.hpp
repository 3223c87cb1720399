#pragma once

// Classical arbitrage, arbitrage of the first kind and equivalent
// supermartingale measures for one-period constrained markets. Every verdict
// comes with a certificate that can be re-checked from the raw market data.
//
// All optimization happens in coordinates of the return span L: a strategy
// pi in L is written pi = B w with B the orthonormal basis of L, and the
// state gains are G w with G = R B.

#include "na1lab/errors.hpp"
#include "na1lab/lp.hpp"
#include "na1lab/market.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace na1lab {

inline constexpr double kArbitrageCap = 1e6;
inline constexpr double kPositiveGain = 1e-9;
inline constexpr double kEsmmTolerance = 1e-8;

enum class ArbitrageVerdict { no_arbitrage, arbitrage_found };

inline std::string to_string(ArbitrageVerdict v) {
    return v == ArbitrageVerdict::arbitrage_found ? "arbitrage_found" : "no_arbitrage";
}

struct ArbitrageCertificate {
    ArbitrageVerdict verdict = ArbitrageVerdict::no_arbitrage;
    std::optional<Eigen::VectorXd> strategy;
    std::optional<Eigen::VectorXd> gains;  // <pi - theta, R(omega)> per state
    double lp_value = 0.0;                 // expected gain at the LP optimum (before rescaling)
    double threshold = kPositiveGain;
    double cap = kArbitrageCap;

    bool found() const { return verdict == ArbitrageVerdict::arbitrage_found; }
};

enum class Na1Verdict { na1_holds, na1_fails };

inline std::string to_string(Na1Verdict v) { return v == Na1Verdict::na1_holds ? "na1_holds" : "na1_fails"; }

struct Na1Certificate {
    Na1Verdict verdict = Na1Verdict::na1_holds;
    std::optional<Eigen::VectorXd> witness_ray;  // in the recession cone, nonnegative gains
    std::optional<double> bound_radius;          // Theta cap L inside the sup-norm ball of this radius
    double threshold = kPositiveGain;

    bool holds() const { return verdict == Na1Verdict::na1_holds; }
};

/// Equivalent supermartingale measure with its log-space representation:
/// `measure` may underflow to 0 in double precision for extreme states, while
/// `log_measure` stays finite for every state.
struct Esmm {
    Eigen::VectorXd density;      // q / p
    Eigen::VectorXd measure;      // q
    Eigen::VectorXd log_measure;  // log q
    Eigen::VectorXd strategy;     // minimizer of the exponential criterion over cone(Theta) cap L
    double supermartingale_value = 0.0;  // max over Theta cap L of E_Q[<pi, R>]
    int iterations = 0;
};

namespace detail {

inline std::string lp_failure(const std::string& what, const lp::Solution& s) {
    std::ostringstream os;
    os << what << ": LP " << lp::to_string(s.status) << " after " << s.iterations
       << " iterations (max violation " << s.max_violation << ")";
    return os.str();
}

/// Appends rows to a stacked system A x <= b.
inline void append_rows(Eigen::MatrixXd& A, Eigen::VectorXd& b, const Eigen::MatrixXd& rows,
                        const Eigen::VectorXd& rhs) {
    const auto m = A.rows();
    A.conservativeResize(m + rows.rows(), rows.cols());
    b.conservativeResize(m + rows.rows());
    A.bottomRows(rows.rows()) = rows;
    b.tail(rows.rows()) = rhs;
}

// Maximizes the expected gain of delta = pi - theta over Theta cap L with
// nonnegative gains and |delta|_inf <= cap.
inline ArbitrageCertificate arbitrage_lp(const DiscreteMarket& market, const Eigen::VectorXd& theta) {
    ArbitrageCertificate cert;
    const auto& L = market.subspace();
    const int r = L.rank;
    if (r == 0) return cert;

    const Eigen::MatrixXd& G = market.reduced_returns();
    const Eigen::MatrixXd& B = L.basis;
    const ConstraintSet& th = market.allowed();

    Eigen::MatrixXd A = th.normals() * B;
    Eigen::VectorXd b = th.bounds() - th.normals() * theta;
    append_rows(A, b, -G, Eigen::VectorXd::Zero(G.rows()));
    append_rows(A, b, B, Eigen::VectorXd::Constant(B.rows(), kArbitrageCap));
    append_rows(A, b, -B, Eigen::VectorXd::Constant(B.rows(), kArbitrageCap));
    const Eigen::VectorXd c = G.transpose() * market.probs();

    auto sol = lp::maximize(c, A, b);
    if (!sol.optimal()) throw NumericError(lp_failure("arbitrage search", sol));
    cert.lp_value = sol.objective;
    if (sol.objective <= kPositiveGain) return cert;

    Eigen::VectorXd delta = B * sol.x;
    Eigen::VectorXd gains = market.returns() * delta;
    // Shrink towards theta (still allowed by convexity) to keep round-off small.
    const double size = delta.lpNorm<Eigen::Infinity>();
    if (size > 1.0 && gains.maxCoeff() / size > kPositiveGain) {
        delta /= size;
        gains /= size;
    }
    cert.verdict = ArbitrageVerdict::arbitrage_found;
    cert.strategy = theta + delta;
    cert.gains = gains;
    return cert;
}

}  // namespace detail

/// Searches an allowed strategy in L with nonnegative, non-null gain.
inline ArbitrageCertificate find_classical_arbitrage(const DiscreteMarket& market) {
    return detail::arbitrage_lp(market, Eigen::VectorXd::Zero(market.dim()));
}

/// Searches an allowed pi whose wealth dominates that of theta and differs somewhere.
inline ArbitrageCertificate relative_arbitrage(const DiscreteMarket& market, const Eigen::VectorXd& theta) {
    if (theta.size() != market.dim()) throw InvalidParameter("relative arbitrage: theta has the wrong dimension");
    const double viol = market.allowed().max_violation(theta);
    if (viol > 1e-9) {
        std::ostringstream os;
        os << "relative arbitrage: reference strategy is not allowed (violation " << viol << ")";
        throw InvalidParameter(os.str());
    }
    return detail::arbitrage_lp(market, theta);
}

/// Decides NA1 by looking for a nonzero direction of the recession cone in L;
/// when none exists, bounds Theta cap L in the sup norm.
inline Na1Certificate check_na1(const DiscreteMarket& market) {
    Na1Certificate cert;
    const auto& L = market.subspace();
    const int r = L.rank;
    const int d = market.dim();
    if (r == 0) {
        cert.bound_radius = 0.0;
        return cert;
    }
    const Eigen::MatrixXd& B = L.basis;
    const ConstraintSet& th = market.allowed();
    const Eigen::MatrixXd A = th.normals() * B;

    Eigen::MatrixXd Ac = A;
    Eigen::VectorXd bc = Eigen::VectorXd::Zero(A.rows());
    detail::append_rows(Ac, bc, Eigen::MatrixXd::Identity(r, r), Eigen::VectorXd::Ones(r));
    detail::append_rows(Ac, bc, -Eigen::MatrixXd::Identity(r, r), Eigen::VectorXd::Ones(r));

    for (int i = 0; i < r; ++i) {
        for (double sign : {1.0, -1.0}) {
            Eigen::VectorXd c = Eigen::VectorXd::Zero(r);
            c(i) = sign;
            auto sol = lp::maximize(c, Ac, bc);
            if (sol.status == lp::Status::infeasible) throw InfeasibleError("NA1 check: allowed set is empty");
            if (!sol.optimal()) throw NumericError(detail::lp_failure("NA1 cone search", sol));
            if (sol.objective <= kPositiveGain) continue;

            Eigen::VectorXd ray = B * sol.x;
            ray /= ray.lpNorm<Eigen::Infinity>();
            const Eigen::VectorXd gains = market.returns() * ray;
            if (gains.minCoeff() < -1e-12 || gains.maxCoeff() <= kPositiveGain)
                throw NumericError("NA1 check: recession direction without arbitrage gains");
            cert.verdict = Na1Verdict::na1_fails;
            cert.witness_ray = ray;
            return cert;
        }
    }

    const Eigen::VectorXd& b = th.bounds();
    double radius = 0.0;
    for (int j = 0; j < d; ++j) {
        for (double sign : {1.0, -1.0}) {
            const Eigen::VectorXd c = sign * B.row(j).transpose();
            auto sol = lp::maximize(c, A, b);
            if (!sol.optimal()) throw NumericError(detail::lp_failure("NA1 bounding radius", sol));
            radius = std::max(radius, sol.objective);
        }
    }
    cert.bound_radius = radius;
    return cert;
}

/// Independent route to NA1: Theta cap L is bounded iff no coordinate LP over
/// it is unbounded.
inline bool theta_l_bounded(const DiscreteMarket& market) {
    const auto& L = market.subspace();
    const ConstraintSet& th = market.allowed();
    const Eigen::MatrixXd A = th.normals() * L.basis;
    for (int i = 0; i < L.rank; ++i) {
        for (double sign : {1.0, -1.0}) {
            Eigen::VectorXd c = Eigen::VectorXd::Zero(L.rank);
            c(i) = sign;
            auto sol = lp::maximize(c, A, th.bounds());
            if (sol.status == lp::Status::unbounded) return false;
            if (!sol.optimal()) throw NumericError(detail::lp_failure("boundedness check", sol));
        }
    }
    return true;
}

/// Largest expected gain E_q[<pi, R>] over Theta cap L for a state measure q.
inline double supermartingale_lp_value(const DiscreteMarket& market, const Eigen::VectorXd& q) {
    const auto& L = market.subspace();
    if (L.rank == 0) return 0.0;
    const ConstraintSet& th = market.allowed();
    auto sol = lp::maximize(market.reduced_returns().transpose() * q, th.normals() * L.basis, th.bounds());
    if (!sol.optimal()) throw NumericError(detail::lp_failure("supermartingale check", sol));
    return sol.objective;
}

struct EsmmOptions {
    double gradient_tol = 1e-10;
    double mu_initial = 1.0;
    double mu_final = 1e-12;
    int max_newton_per_stage = 200;
};

namespace detail {

inline double log_sum_exp(const Eigen::VectorXd& x) {
    const double m = x.maxCoeff();
    return m + std::log((x.array() - m).exp().sum());
}

}  // namespace detail

/// Builds Q ~ P with E_Q[1 + <pi, R>] <= 1 on Theta from the minimizer of
/// pi -> E[exp(-1 - <pi, R>) exp(-|R|^2)] over cone(Theta) cap L.
inline Esmm construct_esmm(const DiscreteMarket& market, const EsmmOptions& opt = {}) {
    if (find_classical_arbitrage(market).found())
        throw PreconditionError("ESMM: the market admits classical arbitrage, so no supermartingale measure exists");

    const int k = market.states();
    const auto& L = market.subspace();
    const int r = L.rank;
    const Eigen::MatrixXd& G = market.reduced_returns();

    Eigen::VectorXd log_weight(k);
    for (int s = 0; s < k; ++s) log_weight(s) = std::log(market.probs()(s)) - market.returns().row(s).squaredNorm();

    // cone(Theta) is cut out by the constraints through the origin.
    const ConstraintSet& th = market.allowed();
    std::vector<int> through_origin;
    for (int i = 0; i < th.size(); ++i)
        if (std::abs(th.bounds()(i)) <= 1e-12 && th.normals().row(i).norm() > 0.0) through_origin.push_back(i);
    Eigen::MatrixXd C(static_cast<int>(through_origin.size()), r);
    for (int j = 0; j < C.rows(); ++j) {
        Eigen::RowVectorXd row = th.normals().row(through_origin[j]) * L.basis;
        const double nrm = row.norm();
        C.row(j) = nrm > 0.0 ? Eigen::RowVectorXd(row / nrm) : row;
    }

    // Split cone rows into implicit equalities and rows with slack somewhere.
    Eigen::MatrixXd Cbox = C;
    Eigen::VectorXd bbox = Eigen::VectorXd::Zero(C.rows());
    detail::append_rows(Cbox, bbox, Eigen::MatrixXd::Identity(r, r), Eigen::VectorXd::Ones(r));
    detail::append_rows(Cbox, bbox, -Eigen::MatrixXd::Identity(r, r), Eigen::VectorXd::Ones(r));
    std::vector<int> eq_rows, slack_rows;
    for (int j = 0; j < C.rows(); ++j) {
        if (C.row(j).norm() < 1e-14) continue;
        auto sol = lp::maximize(-C.row(j).transpose(), Cbox, bbox);
        if (!sol.optimal()) throw NumericError(detail::lp_failure("ESMM cone facets", sol));
        (sol.objective <= 1e-12 ? eq_rows : slack_rows).push_back(j);
    }
    Eigen::MatrixXd N = Eigen::MatrixXd::Identity(r, r);
    if (!eq_rows.empty()) {
        Eigen::MatrixXd E(static_cast<int>(eq_rows.size()), r);
        for (int j = 0; j < E.rows(); ++j) E.row(j) = C.row(eq_rows[j]);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(E, Eigen::ComputeFullV);
        int rank = 0;
        for (int t = 0; t < svd.singularValues().size(); ++t)
            if (svd.singularValues()(t) > 1e-10 * svd.singularValues()(0)) ++rank;
        N = svd.matrixV().rightCols(r - rank);
    }
    const int n = static_cast<int>(N.cols());
    Eigen::MatrixXd Ci(static_cast<int>(slack_rows.size()), n);
    for (int j = 0; j < Ci.rows(); ++j) {
        Eigen::RowVectorXd row = C.row(slack_rows[j]) * N;
        Ci.row(j) = row / row.norm();
    }
    const Eigen::MatrixXd GN = G * N;

    // Strictly interior start.
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    if (Ci.rows() > 0) {
        Eigen::MatrixXd A(Ci.rows(), n + 1);
        A << Ci, Eigen::VectorXd::Ones(Ci.rows());
        Eigen::VectorXd b = Eigen::VectorXd::Zero(Ci.rows());
        Eigen::MatrixXd box(2 * n + 1, n + 1);
        box.setZero();
        box.topLeftCorner(n, n).setIdentity();
        box.block(n, 0, n, n) = -Eigen::MatrixXd::Identity(n, n);
        box(2 * n, n) = 1.0;
        detail::append_rows(A, b, box, Eigen::VectorXd::Ones(2 * n + 1));
        Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 1);
        c(n) = 1.0;
        auto sol = lp::maximize(c, A, b);
        if (!sol.optimal() || sol.objective <= 0.0) throw NumericError(detail::lp_failure("ESMM interior start", sol));
        z = sol.x.head(n);
    }

    auto objective = [&](const Eigen::VectorXd& zz, double mu, bool& inside) {
        inside = true;
        double barrier = 0.0;
        for (int j = 0; j < Ci.rows(); ++j) {
            const double slack = -Ci.row(j).dot(zz);
            if (!(slack > 0.0)) {
                inside = false;
                return std::numeric_limits<double>::infinity();
            }
            barrier -= std::log(slack);
        }
        return detail::log_sum_exp(log_weight - GN * zz) + mu * barrier;
    };

    int iterations = 0;
    double mu = opt.mu_initial;
    while (true) {
        int it = 0;
        for (; it < opt.max_newton_per_stage; ++it) {
            const Eigen::VectorXd logits = log_weight - GN * z;
            const Eigen::VectorXd q = (logits.array() - detail::log_sum_exp(logits)).exp();
            const Eigen::VectorXd mean = GN.transpose() * q;
            Eigen::VectorXd grad = -mean;
            Eigen::MatrixXd H = GN.transpose() * q.asDiagonal() * GN - mean * mean.transpose();
            for (int j = 0; j < Ci.rows(); ++j) {
                const double slack = -Ci.row(j).dot(z);
                grad += mu * Ci.row(j).transpose() / slack;
                H += mu * Ci.row(j).transpose() * Ci.row(j) / (slack * slack);
            }
            if (grad.norm() <= opt.gradient_tol) break;
            H.diagonal().array() += 1e-14 * std::max(1.0, H.trace());
            const Eigen::VectorXd step = -H.ldlt().solve(grad);
            const double decrement = -grad.dot(step);
            if (!(decrement >= 0.0) || !step.allFinite()) throw NumericError("ESMM: Newton system is not positive definite");
            if (decrement <= 1e-20) break;

            bool inside = true;
            const double f0 = objective(z, mu, inside);
            double t = 1.0;
            bool accepted = false;
            // In the quadratic regime the decrease is below the rounding of f,
            // so a feasible full step is taken without the sufficient-decrease test.
            const bool quadratic = decrement <= 1e-12 * std::max(1.0, std::abs(f0));
            for (int ls = 0; ls < 80; ++ls, t *= 0.5) {
                const Eigen::VectorXd trial = z + t * step;
                const double f1 = objective(trial, mu, inside);
                if (inside && (quadratic || f1 <= f0 - 0.25 * t * decrement)) {
                    z = trial;
                    accepted = true;
                    break;
                }
            }
            ++iterations;
            if (!accepted) break;  // no further decrease at working precision
        }
        if (it == opt.max_newton_per_stage) {
            std::ostringstream os;
            os << "ESMM: Newton iteration did not converge at barrier weight " << mu;
            throw NumericError(os.str());
        }
        if (Ci.rows() == 0 || mu <= opt.mu_final) break;
        mu = std::max(mu / 10.0, opt.mu_final);
    }

    Esmm out;
    out.iterations = iterations;
    const Eigen::VectorXd w = N * z;
    out.strategy = L.basis * w;
    const Eigen::VectorXd logits = log_weight - G * w;
    out.log_measure = logits.array() - detail::log_sum_exp(logits);
    out.measure = out.log_measure.array().exp();
    out.density = (out.log_measure.array() - market.probs().array().log()).exp();
    out.supermartingale_value = supermartingale_lp_value(market, out.measure);
    if (out.supermartingale_value > kEsmmTolerance) {
        std::ostringstream os;
        os << "ESMM: supermartingale check failed, max E_Q[<pi,R>] = " << out.supermartingale_value;
        throw NumericError(os.str());
    }
    if (!out.log_measure.allFinite()) throw NumericError("ESMM: measure is not equivalent to P");
    return out;
}

}  // namespace na1lab
