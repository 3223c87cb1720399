#pragma once

// Linear factor models R = Q Y with a borrowing bound <pi, 1> <= c: price
// positivity, the arbitrage ray, NA1, the maximal arbitrage strategy, the
// unit-triangular case and discretization to finite-state markets.

#include "na1lab/errors.hpp"
#include "na1lab/market.hpp"
#include "na1lab/quadrature.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/exponential.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/uniform.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace na1lab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct PointMass {
    std::vector<double> values;
    std::vector<double> probs;
};

/// shift + Exp(rate).
struct Exponential {
    double rate = 1.0;
    double shift = 0.0;
};

/// shift + exp(N(mu, sigma^2)).
struct Lognormal {
    double mu = 0.0;
    double sigma = 1.0;
    double shift = 0.0;
};

struct Uniform {
    double a = 0.0;
    double b = 1.0;
};

using FactorDistribution = std::variant<PointMass, Exponential, Lognormal, Uniform>;

/// Declared support bounds and distribution of one factor.
struct Factor {
    double inf = 0.0;
    double sup = kInf;
    FactorDistribution dist;
};

/// Closed hull [lo, hi] of the distribution's support.
inline std::pair<double, double> distribution_support(const FactorDistribution& dist) {
    struct Visitor {
        std::pair<double, double> operator()(const PointMass& p) const {
            double lo = kInf, hi = -kInf;
            for (double v : p.values) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            return {lo, hi};
        }
        std::pair<double, double> operator()(const Exponential& e) const { return {e.shift, kInf}; }
        std::pair<double, double> operator()(const Lognormal& l) const { return {l.shift, kInf}; }
        std::pair<double, double> operator()(const Uniform& u) const { return {u.a, u.b}; }
    };
    return std::visit(Visitor{}, dist);
}

inline double distribution_mean(const FactorDistribution& dist) {
    struct Visitor {
        double operator()(const PointMass& p) const {
            double m = 0.0;
            for (std::size_t i = 0; i < p.values.size(); ++i) m += p.values[i] * p.probs[i];
            return m;
        }
        double operator()(const Exponential& e) const { return e.shift + 1.0 / e.rate; }
        double operator()(const Lognormal& l) const { return l.shift + std::exp(l.mu + 0.5 * l.sigma * l.sigma); }
        double operator()(const Uniform& u) const { return 0.5 * (u.a + u.b); }
    };
    return std::visit(Visitor{}, dist);
}

inline void validate_distribution(const FactorDistribution& dist) {
    struct Visitor {
        void operator()(const PointMass& p) const {
            if (p.values.empty() || p.values.size() != p.probs.size())
                throw InvalidParameter("point mass: values and probabilities must be nonempty and of equal length");
            double s = 0.0;
            for (std::size_t i = 0; i < p.probs.size(); ++i) {
                if (!(p.probs[i] > 0.0) || !std::isfinite(p.values[i]))
                    throw InvalidParameter("point mass: probabilities must be positive and values finite");
                s += p.probs[i];
            }
            if (std::abs(s - 1.0) > 1e-12) throw InvalidParameter("point mass: probabilities must sum to 1");
        }
        void operator()(const Exponential& e) const {
            if (!(e.rate > 0.0) || !std::isfinite(e.shift)) throw InvalidParameter("exponential: rate must be positive");
        }
        void operator()(const Lognormal& l) const {
            if (!(l.sigma > 0.0) || !std::isfinite(l.mu) || !std::isfinite(l.shift))
                throw InvalidParameter("lognormal: sigma must be positive");
        }
        void operator()(const Uniform& u) const {
            if (!(u.a < u.b) || !std::isfinite(u.a) || !std::isfinite(u.b)) throw InvalidParameter("uniform: need a < b");
        }
    };
    std::visit(Visitor{}, dist);
}

/// Inverse CDF at u, with uc = 1 - u supplied separately for accuracy near 1.
inline double distribution_quantile(const FactorDistribution& dist, double u, double uc) {
    struct Visitor {
        double u, uc;
        double operator()(const PointMass&) const { throw InvalidParameter("point masses have no continuous quantile"); }
        double operator()(const Exponential& e) const {
            boost::math::exponential_distribution<double> d(e.rate);
            return e.shift + (u < 0.5 ? boost::math::quantile(d, u) : boost::math::quantile(boost::math::complement(d, uc)));
        }
        double operator()(const Lognormal& l) const {
            boost::math::lognormal_distribution<double> d(l.mu, l.sigma);
            return l.shift + (u < 0.5 ? boost::math::quantile(d, u) : boost::math::quantile(boost::math::complement(d, uc)));
        }
        double operator()(const Uniform& un) const {
            boost::math::uniform_distribution<double> d(un.a, un.b);
            return u < 0.5 ? boost::math::quantile(d, u) : boost::math::quantile(boost::math::complement(d, uc));
        }
    };
    return std::visit(Visitor{u, uc}, dist);
}

/// E[g(Y)]: exact for point masses, tanh-sinh over the quantile function otherwise.
template <class F>
double distribution_expectation(const FactorDistribution& dist, F g) {
    if (const auto* p = std::get_if<PointMass>(&dist)) {
        double s = 0.0;
        for (std::size_t i = 0; i < p->values.size(); ++i) s += p->probs[i] * g(p->values[i]);
        return s;
    }
    boost::math::quadrature::tanh_sinh<double> integrator;
    auto f = [&](double, double xc) {
        // Boost passes the signed distance to the nearer endpoint: a - x on the left half, b - x on the right.
        const double u = xc < 0.0 ? -xc : 1.0 - xc;
        const double uc = xc < 0.0 ? 1.0 + xc : xc;
        return g(distribution_quantile(dist, u, uc));
    };
    return integrator.integrate(f, 0.0, 1.0, 1e-12);
}

class FactorModel {
public:
    FactorModel(Eigen::MatrixXd Q, std::vector<Factor> factors, double c)
        : Q_(std::move(Q)), factors_(std::move(factors)), c_(c) {
        validate();
    }

    int dim() const { return static_cast<int>(Q_.rows()); }
    int factor_count() const { return static_cast<int>(Q_.cols()); }
    const Eigen::MatrixXd& Q() const { return Q_; }
    const std::vector<Factor>& factors() const { return factors_; }
    double c() const { return c_; }

    /// Borrowing constraint <pi, 1> <= c.
    ConstraintSet constraints() const { return preset_constraints(Preset::borrow_limit(c_), dim()); }

private:
    void validate() const {
        const int d = dim(), l = factor_count();
        if (d < 1 || l < 1) throw InvalidParameter("factor model: Q must be nonempty");
        if (static_cast<int>(factors_.size()) != l)
            throw InvalidParameter("factor model: one factor descriptor per column of Q is required");
        if (!(c_ > 0.0)) throw InvalidParameter("factor model: borrowing bound c must be positive");
        if (!Q_.allFinite()) throw InvalidParameter("factor model: Q must be finite");
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Q_);
        const auto& sv = svd.singularValues();
        if (l < d || sv(sv.size() - 1) <= kRankTol * sv(0))
            throw InvalidParameter("factor model: Q must have full row rank d");

        const auto& f1 = factors_[0];
        if (f1.inf != 0.0 || !(f1.sup > 0.0))
            throw InvalidParameter("factor model: the first factor must have support bounds inf = 0 < sup");
        for (int k = 1; k < l; ++k)
            if (!(factors_[k].inf < 0.0 && 0.0 < factors_[k].sup)) {
                std::ostringstream os;
                os << "factor model: factor " << k + 1 << " must have inf < 0 < sup";
                throw InvalidParameter(os.str());
            }
        for (int k = 0; k < l; ++k) {
            validate_distribution(factors_[k].dist);
            const auto [lo, hi] = distribution_support(factors_[k].dist);
            if (lo < factors_[k].inf - 1e-12 || hi > factors_[k].sup + 1e-12) {
                std::ostringstream os;
                os << "factor model: distribution of factor " << k + 1 << " leaves its declared support";
                throw InvalidParameter(os.str());
            }
        }
    }

    Eigen::MatrixXd Q_;
    std::vector<Factor> factors_;
    double c_;
};

/// Q = [mean | B | I_d] for the standard multi-factor form, before distributions are chosen.
struct FactorSkeleton {
    Eigen::MatrixXd Q;
    std::vector<std::string> slots;  // "premium", "common_k", "idiosyncratic_i"

    FactorModel complete(std::vector<Factor> factors, double c) const { return FactorModel(Q, std::move(factors), c); }
};

inline FactorSkeleton from_standard_form(const Eigen::VectorXd& mean, const Eigen::MatrixXd& B, bool idio) {
    const int d = static_cast<int>(mean.size());
    if (d < 1) throw InvalidParameter("standard form: mean must be nonempty");
    if (B.cols() > 0 && B.rows() != d) throw InvalidParameter("standard form: loadings need one row per asset");
    const int k = static_cast<int>(B.cols());
    const int l = 1 + k + (idio ? d : 0);
    FactorSkeleton out;
    out.Q.resize(d, l);
    out.Q.col(0) = mean;
    if (k > 0) out.Q.middleCols(1, k) = B;
    if (idio) out.Q.rightCols(d) = Eigen::MatrixXd::Identity(d, d);
    out.slots.push_back("premium");
    for (int j = 0; j < k; ++j) out.slots.push_back("common_" + std::to_string(j + 1));
    if (idio)
        for (int i = 0; i < d; ++i) out.slots.push_back("idiosyncratic_" + std::to_string(i + 1));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.Q);
    const auto& sv = svd.singularValues();
    if (l < d || sv(0) == 0.0 || sv(sv.size() - 1) <= kRankTol * sv(0))
        throw InvalidParameter("standard form: assembled Q does not have rank d");
    return out;
}

namespace detail {

// a * y with 0 * (+-inf) = 0.
inline double times(double a, double y) { return a == 0.0 ? 0.0 : a * y; }

// sum_k (a_k^+ y_k^inf - a_k^- y_k^sup) over k in [from, l).
inline double worst_case(const Eigen::RowVectorXd& a, const std::vector<Factor>& f, int from) {
    double s = 0.0;
    for (int k = from; k < a.size(); ++k) {
        s += times(std::max(a(k), 0.0), f[k].inf);
        s -= times(std::max(-a(k), 0.0), f[k].sup);
    }
    return s;
}

inline bool unit_upper_triangular(const Eigen::MatrixXd& Q) {
    if (Q.rows() != Q.cols()) return false;
    for (int i = 0; i < Q.rows(); ++i) {
        if (std::abs(Q(i, i) - 1.0) > 1e-12) return false;
        for (int j = 0; j < i; ++j)
            if (std::abs(Q(i, j)) > 1e-12) return false;
    }
    return true;
}

}  // namespace detail

struct PositivityReport {
    std::vector<bool> asset_ok;
    std::vector<double> worst_return;  // q_{i1} y_1^inf + sum_k (q^+ y^inf - q^- y^sup)
    std::vector<std::string> violations;
    bool triangular = false;  // recursive unit-triangular form also evaluated
    std::vector<bool> triangular_ok;

    bool all_ok() const {
        for (bool b : asset_ok)
            if (!b) return false;
        return true;
    }
};

/// Checks R^i >= -1 for every asset from Q and the declared factor supports.
inline PositivityReport validate_positivity(const FactorModel& model) {
    PositivityReport rep;
    const auto& Q = model.Q();
    const auto& f = model.factors();
    for (int i = 0; i < model.dim(); ++i) {
        const Eigen::RowVectorXd row = Q.row(i);
        const double rest = detail::worst_case(row, f, 1);
        bool ok = true;
        if (row(0) < 0.0) {
            ok = false;
            std::ostringstream os;
            os << "asset " << i + 1 << ": loading on the first factor is negative (" << row(0) << ")";
            rep.violations.push_back(os.str());
        }
        if (rest < -1.0 - 1e-12) {
            ok = false;
            std::ostringstream os;
            os << "asset " << i + 1 << ": worst-case return from factors 2.." << model.factor_count() << " is " << rest
               << " < -1";
            rep.violations.push_back(os.str());
        }
        rep.asset_ok.push_back(ok);
        rep.worst_return.push_back(detail::times(row(0), f[0].inf) + rest);
    }
    if (detail::unit_upper_triangular(Q)) {
        rep.triangular = true;
        const int d = model.dim();
        for (int i = 0; i < d; ++i) {
            // y_i^inf >= -1 - sum_{k > i} (q^+ y^inf - q^- y^sup)
            const double bound = -1.0 - detail::worst_case(Q.row(i), f, i + 1);
            rep.triangular_ok.push_back(f[i].inf >= bound - 1e-12);
        }
    }
    return rep;
}

/// (Q Q')^{-1} Q e_1 when e_1 lies in the range of Q'.
inline std::optional<Eigen::VectorXd> arbitrage_ray(const FactorModel& model) {
    const auto& Q = model.Q();
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(model.factor_count());
    e1(0) = 1.0;
    const Eigen::VectorXd g = (Q * Q.transpose()).ldlt().solve(Q * e1);
    if ((Q.transpose() * g - e1).norm() > 1e-10) return std::nullopt;
    return g;
}

/// NA1 holds iff <g, 1> > 0 for the arbitrage ray g.
inline bool na1_factor(const FactorModel& model) {
    const auto g = arbitrage_ray(model);
    if (!g) throw DomainError("na1_factor: e_1 is not in the range of Q', so the criterion does not apply");
    return g->sum() > 1e-12;
}

/// c g / <g, 1>: the arbitrage strategy that exhausts the borrowing bound.
inline Eigen::VectorXd max_arbitrage_strategy(const FactorModel& model) {
    const auto g = arbitrage_ray(model);
    if (!g) throw DomainError("max_arbitrage_strategy: the model has no arbitrage opportunities");
    if (!(g->sum() > 1e-12))
        throw DomainError("max_arbitrage_strategy: NA1 fails, arbitrage can be scaled without bound and no maximal "
                          "arbitrage strategy exists");
    Eigen::VectorXd pi = model.c() / g->sum() * *g;
    if (std::abs(pi.sum() - model.c()) > 1e-10 * std::max(1.0, model.c()))
        throw NumericError("max_arbitrage_strategy: <pi_max, 1> differs from c");
    return pi;
}

/// Signed sum over increasing chains 1 = j_1 < ... < j_r = k of prod q_{j_l, j_{l+1}}.
inline Eigen::VectorXd alpha_subset_sum(const Eigen::MatrixXd& Q) {
    if (!detail::unit_upper_triangular(Q)) throw InvalidParameter("alpha: Q must be unit upper-triangular");
    const int d = static_cast<int>(Q.rows());
    if (d > 30) throw InvalidParameter("alpha: chain enumeration limited to d <= 30");
    // Depth-first walk over every chain 0 = j_1 < ... < j_r = k; each chain contributes
    // (-1)^(r-1) times its product of entries.
    auto chains = [&Q](auto&& self, int from, int k, double prod, int len) -> double {
        double total = (len % 2 == 0 ? 1.0 : -1.0) * prod * Q(from, k);
        for (int j = from + 1; j < k; ++j) total += self(self, j, k, prod * Q(from, j), len + 1);
        return total;
    };
    Eigen::VectorXd alpha(d);
    alpha(0) = 1.0;
    for (int k = 1; k < d; ++k) alpha(k) = chains(chains, 0, k, 1.0, 1);
    return alpha;
}

/// First row of Q^{-1} by the recursion pi_k = -sum_{i<k} pi_i q_{i,k}, cross-checked
/// against a triangular solve and the chain sum.
inline Eigen::VectorXd alpha_recursion(const Eigen::MatrixXd& Q) {
    if (!detail::unit_upper_triangular(Q)) throw InvalidParameter("alpha_recursion: Q must be unit upper-triangular");
    const int d = static_cast<int>(Q.rows());
    Eigen::VectorXd alpha(d);
    alpha(0) = 1.0;
    for (int k = 1; k < d; ++k) {
        double s = 0.0;
        for (int i = 0; i < k; ++i) s += alpha(i) * Q(i, k);
        alpha(k) = -s;
    }
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(d);
    e1(0) = 1.0;
    const Eigen::VectorXd inv_row = Q.transpose().triangularView<Eigen::Lower>().solve(e1);
    auto close = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        for (int i = 0; i < a.size(); ++i)
            if (std::abs(a(i) - b(i)) > 1e-10 * std::max(1.0, std::abs(b(i)))) return false;
        return true;
    };
    if (!close(alpha, inv_row)) throw NumericError("alpha_recursion: recursion disagrees with the inverse of Q");
    if (d <= 20 && !close(alpha, alpha_subset_sum(Q)))
        throw NumericError("alpha_recursion: recursion disagrees with the chain sum");
    return alpha;
}

/// 1 + sum over chains starting at 1 of signed products > 0.
inline bool na1_triangular(const Eigen::MatrixXd& Q) {
    const Eigen::VectorXd chains = alpha_subset_sum(Q);
    const double s = chains.sum();
    const double check = alpha_recursion(Q).sum();
    if (std::abs(s - check) > 1e-10 * std::max(1.0, std::abs(s)))
        throw NumericError("na1_triangular: chain sum disagrees with <alpha, 1>");
    return s > 1e-12;
}

/// Admissibility for Q = [[1, gamma], [0, 1]] with the largest factor supports.
inline bool two_dim_admissibility(double gamma, const Eigen::Vector2d& pi) {
    const double tol = 1e-12;
    const double p1 = pi(0), p2 = pi(1);
    if (p1 < -tol) return false;
    if (gamma >= 0.0 && gamma < 1.0) return -gamma * p1 <= p2 + tol && p2 <= 1.0 - gamma * p1 + tol;
    if (gamma >= 1.0) return -gamma * p1 <= p2 + tol && p2 <= gamma - gamma * p1 + tol;
    return gamma - gamma * p1 <= p2 + tol && p2 <= 1.0 - gamma * p1 + tol;
}

struct DiscretizedMarket {
    DiscreteMarket market;
    double truncated_mass = 0.0;  // probability outside the quadrature quantile window, all factors
    int clipped = 0;              // return entries raised to -1 + 1e-12
    std::string provenance;
};

struct FactorNodes {
    std::vector<double> values;
    std::vector<double> probs;
    double truncated = 0.0;
};

/// Quantile-mapped Gauss-Legendre nodes on (tm/2, 1 - tm/2), or the exact atoms.
inline FactorNodes factor_nodes(const FactorDistribution& dist, int n, double truncation_mass) {
    FactorNodes out;
    if (const auto* p = std::get_if<PointMass>(&dist)) {
        out.values = p->values;
        out.probs = p->probs;
        return out;
    }
    const auto rule = quadrature::gauss_legendre(n);
    const double lo = 0.5 * truncation_mass, hi = 1.0 - 0.5 * truncation_mass;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = lo + (hi - lo) * 0.5 * (rule.nodes(i) + 1.0);
        const double uc = (1.0 - hi) + (hi - lo) * 0.5 * (1.0 - rule.nodes(i));
        out.values.push_back(distribution_quantile(dist, u, uc));
        out.probs.push_back(rule.weights(i));
        total += rule.weights(i);
    }
    for (double& w : out.probs) w /= total;
    out.truncated = truncation_mass;
    return out;
}

/// Tensor-product discretization of independent factors.
inline DiscretizedMarket discretize(const FactorModel& model, int nodes_per_factor, double truncation_mass = 1e-6) {
    if (nodes_per_factor < 2) throw InvalidParameter("discretize: need at least 2 nodes per factor");
    if (!(truncation_mass > 0.0 && truncation_mass < 1.0))
        throw InvalidParameter("discretize: truncation mass must lie in (0, 1)");
    const int l = model.factor_count();
    std::vector<FactorNodes> per;
    double kept = 1.0;
    std::size_t states = 1;
    for (const auto& f : model.factors()) {
        per.push_back(factor_nodes(f.dist, nodes_per_factor, truncation_mass));
        kept *= 1.0 - per.back().truncated;
        states *= per.back().values.size();
    }
    if (states > 2'000'000) throw InvalidParameter("discretize: tensor grid too large");

    const int S = static_cast<int>(states);
    Eigen::MatrixXd Y(S, l);
    Eigen::VectorXd p(S);
    std::vector<std::size_t> idx(l, 0);
    for (int s = 0; s < S; ++s) {
        double prob = 1.0;
        for (int k = 0; k < l; ++k) {
            Y(s, k) = per[k].values[idx[k]];
            prob *= per[k].probs[idx[k]];
        }
        p(s) = prob;
        for (int k = l - 1; k >= 0; --k) {
            if (++idx[k] < per[k].values.size()) break;
            idx[k] = 0;
        }
    }
    p /= p.sum();
    Eigen::MatrixXd R = Y * model.Q().transpose();
    int clipped = 0;
    for (int s = 0; s < S; ++s)
        for (int i = 0; i < R.cols(); ++i)
            if (R(s, i) < -1.0) {
                R(s, i) = -1.0 + 1e-12;
                ++clipped;
            }
    std::ostringstream prov;
    prov << "tensor quadrature: " << nodes_per_factor << " quantile-mapped Gauss-Legendre nodes per continuous factor "
         << "on (" << truncation_mass / 2 << ", " << 1 - truncation_mass / 2 << "), exact atoms for point masses; "
         << "finite truncation of the symbolic supports";
    return DiscretizedMarket{DiscreteMarket(p, R, model.constraints()), 1.0 - kept, clipped, prov.str()};
}

/// Single asset with R = exp(mu + sigma Y) - 1, Y standard normal, on Gauss-Hermite nodes.
inline DiscreteMarket lognormal_market(int nodes, ConstraintSet constraints, double mu = 0.0, double sigma = 1.0) {
    if (nodes < 2) throw InvalidParameter("lognormal_market: need at least 2 nodes");
    const auto rule = quadrature::gauss_hermite(nodes);
    Eigen::VectorXd p = rule.weights / std::sqrt(std::numbers::pi);
    p /= p.sum();
    Eigen::MatrixXd R(nodes, 1);
    for (int i = 0; i < nodes; ++i) R(i, 0) = std::expm1(mu + sigma * std::numbers::sqrt2 * rule.nodes(i));
    return DiscreteMarket(p, R, std::move(constraints));
}

/// (sqrt(e) / (2 beta)) * int_{1/2}^inf e^{-x} / x dx.
inline double exponential_tail_ratio(double beta) {
    if (!(beta > 0.0)) throw InvalidParameter("exponential_tail_ratio: beta must be positive");
    double err = 0.0;
    const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [](double x) { return std::exp(-x) / x; }, 0.5, std::numeric_limits<double>::infinity(), 20, 1e-14, &err);
    if (err > 1e-10) throw NumericError("exponential_tail_ratio: quadrature error above 1e-10");
    return std::sqrt(std::numbers::e) / (2.0 * beta) * integral;
}

/// E[Y1/(1 + k Y1)] - (1 - gamma) E[Y2] E[1/(1 + k Y1)], k = c / (1 - gamma), for
/// Q = [[1, gamma], [0, 1]] with gamma < 0.
inline double triangular_first_order_condition(const FactorModel& model) {
    const auto& Q = model.Q();
    if (Q.rows() != 2 || Q.cols() != 2 || !detail::unit_upper_triangular(Q))
        throw InvalidParameter("triangular_first_order_condition: Q must be [[1, gamma], [0, 1]]");
    const double gamma = Q(0, 1);
    if (!(gamma < 0.0)) throw InvalidParameter("triangular_first_order_condition: gamma must be negative");
    const double k = model.c() / (1.0 - gamma);
    const auto& y1 = model.factors()[0].dist;
    const double lhs = distribution_expectation(y1, [k](double y) { return y / (1.0 + k * y); });
    const double inv = distribution_expectation(y1, [k](double y) { return 1.0 / (1.0 + k * y); });
    const double mean2 = distribution_mean(model.factors()[1].dist);
    if (!std::isfinite(mean2)) throw DomainError("triangular_first_order_condition: E[Y2] is not finite");
    return lhs - (1.0 - gamma) * mean2 * inv;
}

}  // namespace na1lab
