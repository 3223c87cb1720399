#pragma once

// One-period constrained markets: return distributions on finitely many
// states, polyhedral trading constraints, the linear span of the return
// support and the polyhedron of allowed strategies.

#include "na1lab/errors.hpp"
#include "na1lab/lp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace na1lab {

inline constexpr double kProbSumTol = 1e-12;
inline constexpr double kSupportRounding = 1e-12;
inline constexpr double kRankTol = 1e-10;
inline constexpr double kSubspaceTol = 1e-10;

/// Closed convex polyhedron { pi : <a_i, pi> <= b_i } in H-representation.
class ConstraintSet {
public:
    ConstraintSet() = default;

    /// The whole space R^dim.
    explicit ConstraintSet(int dim) : dim_(dim), normals_(0, dim), bounds_(0) {}

    ConstraintSet(Eigen::MatrixXd normals, Eigen::VectorXd bounds, std::string tag = {})
        : dim_(static_cast<int>(normals.cols())), normals_(std::move(normals)), bounds_(std::move(bounds)),
          tag_(std::move(tag)) {
        if (normals_.rows() != bounds_.size())
            throw InvalidParameter("constraint set: normals and bounds have different lengths");
    }

    int dim() const { return dim_; }
    int size() const { return static_cast<int>(bounds_.size()); }
    const Eigen::MatrixXd& normals() const { return normals_; }
    const Eigen::VectorXd& bounds() const { return bounds_; }
    const std::string& preset_tag() const { return tag_; }

    ConstraintSet tagged(std::string tag) const {
        ConstraintSet out = *this;
        out.tag_ = std::move(tag);
        return out;
    }

    ConstraintSet with_halfspace(const Eigen::VectorXd& a, double b) const {
        if (a.size() != dim_) throw InvalidParameter("halfspace dimension mismatch");
        ConstraintSet out = *this;
        out.normals_.conservativeResize(size() + 1, dim_);
        out.bounds_.conservativeResize(size() + 1);
        out.normals_.row(size()) = a.transpose();
        out.bounds_(size()) = b;
        return out;
    }

    ConstraintSet intersect(const ConstraintSet& other) const {
        if (other.dim_ != dim_) throw InvalidParameter("cannot intersect constraint sets of different dimension");
        Eigen::MatrixXd A(size() + other.size(), dim_);
        Eigen::VectorXd b(size() + other.size());
        A << normals_, other.normals_;
        b << bounds_, other.bounds_;
        std::string tag = tag_;
        if (!other.tag_.empty()) tag = tag.empty() ? other.tag_ : tag + "+" + other.tag_;
        return ConstraintSet(std::move(A), std::move(b), std::move(tag));
    }

    /// Largest positive part of <a_i, pi> - b_i.
    double max_violation(const Eigen::VectorXd& pi) const {
        if (size() == 0) return 0.0;
        return std::max(0.0, (normals_ * pi - bounds_).maxCoeff());
    }

    bool contains(const Eigen::VectorXd& pi, double tol = 1e-9) const { return max_violation(pi) <= tol; }

private:
    int dim_ = 0;
    Eigen::MatrixXd normals_;
    Eigen::VectorXd bounds_;
    std::string tag_;
};

/// The named trading restrictions: no short sales, no short sales and no
/// borrowing, a cap c on the total risky fraction, and position boxes.
struct Preset {
    enum class Kind { no_short, no_short_no_borrow, borrow_limit, box };
    Kind kind = Kind::no_short;
    double c = 0.0;
    Eigen::VectorXd alpha;
    Eigen::VectorXd beta;

    static Preset no_short() { return {Kind::no_short, 0.0, {}, {}}; }
    static Preset no_short_no_borrow() { return {Kind::no_short_no_borrow, 0.0, {}, {}}; }
    static Preset borrow_limit(double c) { return {Kind::borrow_limit, c, {}, {}}; }
    static Preset box(Eigen::VectorXd alpha, Eigen::VectorXd beta) {
        return {Kind::box, 0.0, std::move(alpha), std::move(beta)};
    }
};

inline std::string to_string(Preset::Kind k) {
    switch (k) {
        case Preset::Kind::no_short: return "no_short";
        case Preset::Kind::no_short_no_borrow: return "no_short_no_borrow";
        case Preset::Kind::borrow_limit: return "borrow_limit";
        case Preset::Kind::box: return "box";
    }
    return "unknown";
}

inline ConstraintSet preset_constraints(const Preset& preset, int dim) {
    if (dim < 1) throw InvalidParameter("preset constraints need dim >= 1");
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
    const std::string tag = to_string(preset.kind);
    switch (preset.kind) {
        case Preset::Kind::no_short:
            return ConstraintSet(-I, Eigen::VectorXd::Zero(dim), tag);
        case Preset::Kind::no_short_no_borrow: {
            Eigen::MatrixXd A(dim + 1, dim);
            A << -I, Eigen::RowVectorXd::Ones(dim);
            Eigen::VectorXd b = Eigen::VectorXd::Zero(dim + 1);
            b(dim) = 1.0;
            return ConstraintSet(std::move(A), std::move(b), tag);
        }
        case Preset::Kind::borrow_limit: {
            if (!(preset.c > 0.0)) throw InvalidParameter("borrow limit c must be positive");
            Eigen::MatrixXd A = Eigen::RowVectorXd::Ones(dim);
            Eigen::VectorXd b(1);
            b(0) = preset.c;
            return ConstraintSet(std::move(A), std::move(b), tag);
        }
        case Preset::Kind::box: {
            if (preset.alpha.size() != dim || preset.beta.size() != dim)
                throw InvalidParameter("box bounds must have one entry per asset");
            if ((preset.alpha.array() <= 0.0).any() || (preset.beta.array() <= 0.0).any())
                throw InvalidParameter("box bounds alpha_i, beta_i must be positive");
            Eigen::MatrixXd A(2 * dim, dim);
            A << I, -I;
            Eigen::VectorXd b(2 * dim);
            b << preset.beta, preset.alpha;
            return ConstraintSet(std::move(A), std::move(b), tag);
        }
    }
    throw InvalidParameter("unknown preset");
}

/// Orthonormal basis of the span L of the return support.
struct SubspaceBasis {
    Eigen::MatrixXd basis;  // d x r, orthonormal columns
    int rank = 0;

    int dim() const { return static_cast<int>(basis.rows()); }
    Eigen::MatrixXd projector() const { return basis * basis.transpose(); }
    Eigen::VectorXd project(const Eigen::VectorXd& x) const { return basis * (basis.transpose() * x); }
    Eigen::VectorXd project_perp(const Eigen::VectorXd& x) const { return x - project(x); }
    /// Coordinates of x in the basis (x is assumed to lie in L).
    Eigen::VectorXd coordinates(const Eigen::VectorXd& x) const { return basis.transpose() * x; }
};

/// Closed convex cone { y : <a_i, y> <= 0 }.
struct Cone {
    Eigen::MatrixXd normals;

    bool contains(const Eigen::VectorXd& y, double tol = 1e-9) const {
        if (normals.rows() == 0) return true;
        return (normals * y).maxCoeff() <= tol;
    }
};

/// Deduplicated rows of a return matrix, compared after rounding to 1e-12.
inline Eigen::MatrixXd unique_rows(const Eigen::MatrixXd& returns) {
    const int d = static_cast<int>(returns.cols());
    std::map<std::vector<double>, int> seen;
    std::vector<int> order;
    for (int s = 0; s < returns.rows(); ++s) {
        std::vector<double> key(d);
        for (int i = 0; i < d; ++i) {
            const double v = std::round(returns(s, i) / kSupportRounding) * kSupportRounding;
            key[i] = v == 0.0 ? 0.0 : v;
        }
        if (seen.emplace(std::move(key), s).second) order.push_back(s);
    }
    Eigen::MatrixXd out(static_cast<int>(order.size()), d);
    for (int k = 0; k < static_cast<int>(order.size()); ++k) out.row(k) = returns.row(order[k]);
    return out;
}

/// Span of the rows of `support`: rank decided by singular values above 1e-10 of the largest.
inline SubspaceBasis span_and_projection(const Eigen::MatrixXd& support) {
    const int d = static_cast<int>(support.cols());
    SubspaceBasis out;
    if (support.rows() == 0 || support.cwiseAbs().maxCoeff() == 0.0) {
        out.basis = Eigen::MatrixXd(d, 0);
        return out;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(support, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int r = 0;
    for (int k = 0; k < sv.size(); ++k)
        if (sv(k) > kRankTol * sv(0)) ++r;
    out.basis = svd.matrixV().leftCols(r);
    out.rank = r;
    return out;
}

/// Finite-state market with returns R(omega) >= -1 and polyhedral constraints.
class DiscreteMarket {
public:
    DiscreteMarket(Eigen::VectorXd probs, Eigen::MatrixXd returns, ConstraintSet constraints)
        : probs_(std::move(probs)), returns_(std::move(returns)), constraints_(std::move(constraints)) {
        validate();
        support_ = unique_rows(returns_);
        subspace_ = span_and_projection(support_);
        check_constraints_contain_complement();
        build_allowed();
        reduced_returns_ = returns_ * subspace_.basis;
    }

    int dim() const { return static_cast<int>(returns_.cols()); }
    int states() const { return static_cast<int>(returns_.rows()); }
    const Eigen::VectorXd& probs() const { return probs_; }
    const Eigen::MatrixXd& returns() const { return returns_; }
    const ConstraintSet& constraints() const { return constraints_; }

    /// Distinct return rows.
    const Eigen::MatrixXd& support() const { return support_; }
    const SubspaceBasis& subspace() const { return subspace_; }
    /// Natural constraints <pi, z> >= -1 over the support.
    const ConstraintSet& admissible() const { return admissible_; }
    /// Allowed strategies: admissible intersected with the trading constraints.
    const ConstraintSet& allowed() const { return allowed_; }
    /// Returns expressed in coordinates of the subspace basis (states x r).
    const Eigen::MatrixXd& reduced_returns() const { return reduced_returns_; }

    /// Replaces the trading constraints, keeping the distribution.
    DiscreteMarket with_constraints(ConstraintSet c) const { return DiscreteMarket(probs_, returns_, std::move(c)); }

private:
    void validate() const {
        if (returns_.rows() != probs_.size())
            throw InvalidParameter("market: one probability per return row is required");
        if (probs_.size() == 0) throw InvalidParameter("market: at least one state is required");
        if (returns_.cols() < 1) throw InvalidParameter("market: at least one asset is required");
        if ((probs_.array() <= 0.0).any()) throw InvalidParameter("market: state probabilities must be positive");
        if (std::abs(probs_.sum() - 1.0) > kProbSumTol) {
            std::ostringstream os;
            os.precision(17);
            os << "market: probabilities sum to " << probs_.sum() << ", expected 1";
            throw InvalidParameter(os.str());
        }
        if (!returns_.allFinite()) throw InvalidParameter("market: returns must be finite");
        if ((returns_.array() < -1.0).any()) throw InvalidParameter("market: returns must be >= -1");
        if (constraints_.dim() != returns_.cols())
            throw InvalidParameter("market: constraint dimension differs from asset count");
    }

    // Redundant directions must stay tradable: every constraint normal lies in L
    // and 0 is feasible.
    void check_constraints_contain_complement() const {
        const auto& A = constraints_.normals();
        for (int i = 0; i < A.rows(); ++i) {
            const Eigen::VectorXd a = A.row(i).transpose();
            const double nrm = a.norm();
            if (nrm == 0.0) continue;
            const double off = subspace_.project_perp(a / nrm).norm();
            if (off > kSubspaceTol) {
                std::ostringstream os;
                os << "market: constraint " << i << " restricts directions orthogonal to the return span "
                   << "(|p_perp(a)| = " << off << "); redundant strategies must remain allowed";
                throw InvalidParameter(os.str());
            }
            if (constraints_.bounds()(i) < -kProbSumTol) {
                std::ostringstream os;
                os << "market: constraint " << i << " excludes the zero strategy";
                throw InvalidParameter(os.str());
            }
        }
    }

    void build_allowed() {
        const int d = dim();
        std::vector<int> rows;
        for (int k = 0; k < support_.rows(); ++k)
            if (support_.row(k).cwiseAbs().maxCoeff() > 0.0) rows.push_back(k);
        Eigen::MatrixXd A(static_cast<int>(rows.size()), d);
        for (int k = 0; k < static_cast<int>(rows.size()); ++k) A.row(k) = -support_.row(rows[k]);
        admissible_ = ConstraintSet(std::move(A), Eigen::VectorXd::Ones(static_cast<int>(rows.size())), "admissible");
        allowed_ = admissible_.intersect(constraints_);
    }

    Eigen::VectorXd probs_;
    Eigen::MatrixXd returns_;
    ConstraintSet constraints_;
    Eigen::MatrixXd support_;
    SubspaceBasis subspace_;
    ConstraintSet admissible_;
    ConstraintSet allowed_;
    Eigen::MatrixXd reduced_returns_;
};

inline Eigen::MatrixXd support(const DiscreteMarket& market) { return market.support(); }

inline ConstraintSet admissible_polyhedron(const DiscreteMarket& market) { return market.admissible(); }

/// Recession cone of a nonempty polyhedron: same normals, zero right-hand sides.
inline Cone recession_cone(const ConstraintSet& theta) {
    if (theta.size() > 0 && !lp::feasible(theta.normals(), theta.bounds()))
        throw InfeasibleError("recession cone: the constraint set is empty");
    return Cone{theta.normals()};
}

/// State-wise wealth v (1 + <pi, R(omega)>).
inline Eigen::VectorXd wealth(const Eigen::VectorXd& pi, double v, const DiscreteMarket& market) {
    if (!(v > 0.0)) throw InvalidParameter("wealth: initial capital must be positive");
    if (pi.size() != market.dim()) throw InvalidParameter("wealth: strategy dimension mismatch");
    return v * (Eigen::VectorXd::Ones(market.states()) + market.returns() * pi);
}

/// Polyhedron {u : A B u <= b} of a constraint set restricted to the subspace
/// spanned by the columns of B.
struct ReducedPolyhedron {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
};

inline ReducedPolyhedron restrict_to(const ConstraintSet& set, const SubspaceBasis& L) {
    return {set.normals() * L.basis, set.bounds()};
}

}  // namespace na1lab
