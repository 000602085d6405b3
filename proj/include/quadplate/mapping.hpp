#pragma once

// Geometry mapping between the bi-unit square and a straight-edged
// quadrilateral: the standard bilinear scheme, the 8-node serendipity scheme
// and the complete second-order Pascal scheme whose two extra nodes are the
// poles where opposite edges meet.

#include <quadplate/errors.hpp>
#include <quadplate/geometry.hpp>

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace quadplate {

enum class SchemeKind { bilinear, serendipity8, pascal6 };

inline std::string_view to_string(SchemeKind k) {
    switch (k) {
    case SchemeKind::bilinear: return "bilinear";
    case SchemeKind::serendipity8: return "serendipity8";
    case SchemeKind::pascal6: return "pascal6";
    }
    return "?";
}

inline SchemeKind parse_scheme(std::string_view s) {
    if (s == "bilinear") return SchemeKind::bilinear;
    if (s == "serendipity8") return SchemeKind::serendipity8;
    if (s == "pascal6") return SchemeKind::pascal6;
    throw InputError("unknown mapping scheme '" + std::string(s) +
                     "' (expected bilinear|serendipity8|pascal6)");
}

/// theta1^p1 * theta2^p2
struct Monomial {
    int p1 = 0;
    int p2 = 0;
    friend bool operator==(const Monomial&, const Monomial&) = default;
};

using MonomialBasis = std::vector<Monomial>;

inline const MonomialBasis& basis_for(SchemeKind k) {
    static const MonomialBasis bil{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    static const MonomialBasis pas{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    static const MonomialBasis ser{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}, {2, 1}, {1, 2}};
    switch (k) {
    case SchemeKind::bilinear: return bil;
    case SchemeKind::serendipity8: return ser;
    case SchemeKind::pascal6: return pas;
    }
    return bil;
}

namespace detail {

inline double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

/// d^order/dx^order of x^n evaluated at x.
inline double dpow(double x, int n, int order) {
    if (order > n) return 0.0;
    double c = 1.0;
    for (int i = 0; i < order; ++i) c *= static_cast<double>(n - i);
    return c * ipow(x, n - order);
}

} // namespace detail

/// Row of monomial values (or their partial derivatives d1 in theta1, d2 in theta2).
inline Eigen::RowVectorXd monomial_row(const MonomialBasis& basis, const NaturalPoint& t,
                                       int d1 = 0, int d2 = 0) {
    Eigen::RowVectorXd row(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t m = 0; m < basis.size(); ++m)
        row(static_cast<Eigen::Index>(m)) =
            detail::dpow(t.x(), basis[m].p1, d1) * detail::dpow(t.y(), basis[m].p2, d2);
    return row;
}

/// Per-node natural coordinates used to build an interpolation.
struct NaturalNodeTable {
    std::vector<NaturalPoint> rows;

    static NaturalNodeTable corners() {
        const auto& c = corner_naturals();
        return {{c.begin(), c.end()}};
    }
    static NaturalNodeTable serendipity() {
        NaturalNodeTable t = corners();
        t.rows.insert(t.rows.end(), {NaturalPoint(0, -1), NaturalPoint(1, 0), NaturalPoint(0, 1),
                                     NaturalPoint(-1, 0)});
        return t;
    }
    static NaturalNodeTable pascal(const NaturalPoint& pole5, const NaturalPoint& pole6) {
        NaturalNodeTable t = corners();
        t.rows.push_back(pole5);
        t.rows.push_back(pole6);
        return t;
    }
    std::size_t size() const { return rows.size(); }
};

/**
 * Polynomial coefficients of the map x~i(theta) = sum_q M_q(theta) a_q^i.
 *
 * Row q of `coeffs` belongs to monomial `basis[q]`; column i to Cartesian
 * direction i. The constant row is the geometric centre, the linear rows are
 * the covariant base vectors at the centre and the quadratic rows their
 * derivatives there.
 */
struct GeneralizedParams {
    MonomialBasis basis;
    Eigen::MatrixX2d coeffs;

    /// Coefficient of a monomial, zero when the basis does not contain it.
    Eigen::RowVector2d coefficient(Monomial m) const {
        for (std::size_t q = 0; q < basis.size(); ++q)
            if (basis[q] == m) return coeffs.row(static_cast<Eigen::Index>(q));
        return Eigen::RowVector2d::Zero();
    }

    Point evaluate(const NaturalPoint& t) const {
        return (monomial_row(basis, t) * coeffs).transpose();
    }

    /// J(i, alpha) = d x~i / d theta_alpha
    Eigen::Matrix2d gradient(const NaturalPoint& t) const {
        Eigen::Matrix2d J;
        J.col(0) = (monomial_row(basis, t, 1, 0) * coeffs).transpose();
        J.col(1) = (monomial_row(basis, t, 0, 1) * coeffs).transpose();
        return J;
    }

    Point center() const { return coefficient({0, 0}).transpose(); }

    /// Covariant base vector components at the centre, g_alpha^{x~i}.
    Eigen::Matrix2d center_base_vectors() const { return gradient(NaturalPoint::Zero()); }

    /// Second derivatives d^2 x~i / d theta_alpha d theta_beta at the centre, one 2x2 per direction i.
    std::array<Eigen::Matrix2d, 2> center_base_vector_derivatives() const {
        std::array<Eigen::Matrix2d, 2> h;
        const NaturalPoint z = NaturalPoint::Zero();
        const Eigen::RowVector2d d11 = monomial_row(basis, z, 2, 0) * coeffs;
        const Eigen::RowVector2d d12 = monomial_row(basis, z, 1, 1) * coeffs;
        const Eigen::RowVector2d d22 = monomial_row(basis, z, 0, 2) * coeffs;
        for (int i = 0; i < 2; ++i) h[i] << d11(i), d12(i), d12(i), d22(i);
        return h;
    }
};

/// Shape functions N^(q)(theta) = sum_m C(q, m) * monomial_m(theta).
struct ShapeFunctionSet {
    SchemeKind kind = SchemeKind::bilinear;
    MonomialBasis basis;
    Eigen::MatrixXd C;
    NaturalNodeTable nodes;

    Eigen::VectorXd values(const NaturalPoint& t) const {
        return C * monomial_row(basis, t).transpose();
    }

    /// max |sum_q C(q, m) - delta_{m0}| over monomials m.
    double partition_of_unity_residual() const {
        Eigen::RowVectorXd sums = C.colwise().sum();
        sums(0) -= 1.0;
        return sums.cwiseAbs().maxCoeff();
    }

    /// max |N^(q)(theta_p) - delta_qp| over the node table.
    double kronecker_residual() const {
        double r = 0.0;
        for (std::size_t p = 0; p < nodes.size(); ++p) {
            Eigen::VectorXd n = values(nodes.rows[p]);
            n(static_cast<Eigen::Index>(p)) -= 1.0;
            r = std::max(r, n.cwiseAbs().maxCoeff());
        }
        return r;
    }
};

/// Covariant components at one natural point; `cov(i, alpha) = d x~i / d theta_alpha`.
struct Jacobian {
    Eigen::Matrix2d cov;
    double det = 0.0;

    /// Contravariant components g_i^alpha = d theta_alpha / d x~i, stored (alpha, i).
    Eigen::Matrix2d contravariant() const { return cov.inverse(); }
};

/// Generalized parameters of the bilinear map (closed form, one row per monomial 1, t1, t2, t1*t2).
inline GeneralizedParams bilinear_params(const QuadGeometry& quad) {
    const auto& x = quad.vertices();
    GeneralizedParams g{basis_for(SchemeKind::bilinear), Eigen::MatrixX2d(4, 2)};
    g.coeffs.row(0) = ((x[0] + x[1] + x[2] + x[3]) / 4.0).transpose();
    g.coeffs.row(1) = (((x[1] - x[0]) - (x[3] - x[2])) / 4.0).transpose();
    g.coeffs.row(2) = (((x[2] - x[1]) + (x[3] - x[0])) / 4.0).transpose();
    g.coeffs.row(3) = (((x[2] + x[0]) - (x[3] + x[1])) / 4.0).transpose();
    return g;
}

/// Vandermonde-type matrix: row p is the basis evaluated at node p.
inline Eigen::MatrixXd interpolation_matrix(const MonomialBasis& basis, const NaturalNodeTable& nodes) {
    Eigen::MatrixXd A(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t p = 0; p < nodes.size(); ++p)
        A.row(static_cast<Eigen::Index>(p)) = monomial_row(basis, nodes.rows[p]);
    return A;
}

inline Eigen::MatrixXd pascal_interpolation_matrix(const NaturalNodeTable& nodes) {
    if (nodes.size() != 6) throw InputError("Pascal interpolation needs exactly 6 nodes");
    return interpolation_matrix(basis_for(SchemeKind::pascal6), nodes);
}

/// Square interpolation matrix inverted in extended precision.
struct InterpolationInverse {
    Eigen::MatrixXd B;
    double condition_1norm = 0.0;
};

inline InterpolationInverse invert_interpolation(const Eigen::MatrixXd& A) {
    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    const MatL Al = A.cast<long double>();
    Eigen::FullPivLU<MatL> lu(Al);
    if (!lu.isInvertible()) return {Eigen::MatrixXd::Zero(A.rows(), A.cols()), INFINITY};
    const MatL Bl = lu.inverse();
    auto norm1 = [](const MatL& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); };
    return {Bl.cast<double>(), static_cast<double>(norm1(Al) * norm1(Bl))};
}

/// The eight serendipity shape functions in closed form, nodes ordered corners then
/// midpoints (0,-1),(1,0),(0,1),(-1,0).
inline std::array<double, 8> serendipity_shapes(const NaturalPoint& t) {
    const double a = t.x(), b = t.y();
    const double aa = a * a, bb = b * b, ab = a * b;
    return {(-1 + aa + bb + ab - aa * b - a * bb) / 4, (-1 + aa + bb - ab - aa * b + a * bb) / 4,
            (-1 + aa + bb + ab + aa * b + a * bb) / 4, (-1 + aa + bb - ab + aa * b - a * bb) / 4,
            (1 - aa - b + aa * b) / 2,                 (1 + a - bb - a * bb) / 2,
            (1 + b - aa - aa * b) / 2,                 (1 - a - bb + a * bb) / 2};
}

/// Cartesian and natural coordinates of the two poles p(5), p(6).
struct PoleSet {
    Point p5_xy = Point::Zero();
    Point p6_xy = Point::Zero();
    NaturalPoint p5_nat = NaturalPoint::Zero();
    NaturalPoint p6_nat = NaturalPoint::Zero();
    /// parallel[0] for edges (1)(2)/(3)(4), parallel[1] for (2)(3)/(4)(1)
    std::array<bool, 2> parallel{false, false};
    bool naturals_set = false;

    bool any_parallel() const { return parallel[0] || parallel[1]; }
};

namespace detail {

/// Intersection of the lines through a0-a1 and b0-b1; nullopt when (nearly) parallel.
inline std::optional<Point> line_intersection(const Point& a0, const Point& a1, const Point& b0,
                                              const Point& b1) {
    const Eigen::Vector2d da = a1 - a0, db = b1 - b0;
    const double den = cross2(da, db);
    if (std::abs(den) <= 1e-12 * da.norm() * db.norm()) return std::nullopt;
    const double s = cross2(b0 - a0, db) / den;
    return Point(a0 + s * da);
}

} // namespace detail

/// Poles as intersections of opposite edge lines; parallel pairs are flagged, not errors.
inline PoleSet compute_poles_cartesian(const QuadGeometry& quad) {
    const auto& x = quad.vertices();
    PoleSet ps;
    if (auto p = detail::line_intersection(x[0], x[1], x[2], x[3])) ps.p5_xy = *p;
    else ps.parallel[0] = true;
    if (auto p = detail::line_intersection(x[1], x[2], x[3], x[0])) ps.p6_xy = *p;
    else ps.parallel[1] = true;
    return ps;
}

/// Newton start: solution of the bilinear map linearized about the centre.
inline NaturalPoint default_pole_guess(const QuadGeometry& quad, const Point& pole_xy) {
    const GeneralizedParams g = bilinear_params(quad);
    return g.center_base_vectors().lu().solve(pole_xy - g.center());
}

/**
 * Natural coordinates of a pole by Newton iteration on the bilinear map.
 *
 * Several roots exist (each edge-line pair carries one); the root reached
 * depends on `guess`.
 */
inline NaturalPoint solve_pole_natural(const QuadGeometry& quad, const Point& pole_xy,
                                       const NaturalPoint& guess) {
    const GeneralizedParams g = bilinear_params(quad);
    const double scale = quad.diameter() + (pole_xy - g.center()).norm();
    constexpr int max_iter = 50;
    constexpr int max_restarts = 4;
    double last = INFINITY;
    for (int restart = 0; restart <= max_restarts; ++restart) {
        NaturalPoint t = guess;
        if (restart > 0)
            t += 0.1 * restart * (1.0 + guess.norm()) * NaturalPoint(1.0, -0.7);
        bool singular = false;
        for (int it = 0; it < max_iter; ++it) {
            const Eigen::Vector2d r = g.evaluate(t) - pole_xy;
            last = r.norm();
            if (last <= 1e-13 * scale) return t;
            const Eigen::Matrix2d J = g.gradient(t);
            if (std::abs(J.determinant()) <= 1e-14 * J.squaredNorm()) {
                singular = true;
                break;
            }
            const Eigen::Vector2d step = J.lu().solve(r);
            t -= step;
            // stagnation at roundoff level still counts as converged
            if (step.norm() <= 1e-14 * (1.0 + t.norm())) {
                last = (g.evaluate(t) - pole_xy).norm();
                if (last <= 1e-10 * scale) return t;
            }
        }
        if (!singular) break;
    }
    throw NonConvergenceError("pole Newton iteration did not converge", last / scale);
}

/// Pole data with natural coordinates filled from the given (or default) starting points.
inline PoleSet compute_poles(const QuadGeometry& quad, std::optional<NaturalPoint> guess5 = {},
                             std::optional<NaturalPoint> guess6 = {}) {
    PoleSet ps = compute_poles_cartesian(quad);
    if (ps.any_parallel()) return ps;
    ps.p5_nat = solve_pole_natural(quad, ps.p5_xy, guess5.value_or(default_pole_guess(quad, ps.p5_xy)));
    ps.p6_nat = solve_pole_natural(quad, ps.p6_xy, guess6.value_or(default_pole_guess(quad, ps.p6_xy)));
    ps.naturals_set = true;
    return ps;
}

struct PascalConstruction {
    ShapeFunctionSet shapes;
    GeneralizedParams params;
    double condition = 0.0;
};

/// Shape functions and generalized parameters of the six-node Pascal scheme.
inline PascalConstruction pascal_shape_set(const QuadGeometry& quad, const PoleSet& poles) {
    if (poles.any_parallel() || !poles.naturals_set)
        throw InputError("Pascal scheme needs two finite poles with natural coordinates");
    const NaturalNodeTable nodes = NaturalNodeTable::pascal(poles.p5_nat, poles.p6_nat);
    const Eigen::MatrixXd A = pascal_interpolation_matrix(nodes);
    const InterpolationInverse inv = invert_interpolation(A);
    if (!(inv.condition_1norm <= 1e12))
        throw DegeneratePolesError("pole configuration makes the interpolation matrix singular "
                                   "(condition estimate " + std::to_string(inv.condition_1norm) + ")");
    Eigen::MatrixX2d X(6, 2);
    for (int p = 0; p < 4; ++p) X.row(p) = quad.vertex(p).transpose();
    X.row(4) = poles.p5_xy.transpose();
    X.row(5) = poles.p6_xy.transpose();
    PascalConstruction out;
    out.shapes = {SchemeKind::pascal6, basis_for(SchemeKind::pascal6), inv.B.transpose(), nodes};
    out.params = {basis_for(SchemeKind::pascal6), inv.B * X};
    out.condition = inv.condition_1norm;
    return out;
}

/// Knobs for building a scheme.
struct SchemeOptions {
    std::optional<NaturalPoint> pole5_guess;
    std::optional<NaturalPoint> pole6_guess;
    /// Degrade pascal6 to bilinear when a pole is at infinity or the pole nodes are degenerate.
    bool allow_fallback = true;
};

/**
 * A geometry mapping built for one quadrilateral.
 *
 * Immutable after construction. `kind` is the scheme actually in use; when a
 * Pascal request had to fall back, `requested` keeps the original choice.
 */
class MappingScheme {
public:
    static MappingScheme build(const QuadGeometry& quad, SchemeKind kind, const SchemeOptions& opt = {}) {
        MappingScheme s(quad);
        s.requested_ = kind;
        switch (kind) {
        case SchemeKind::bilinear: s.make_lagrange(SchemeKind::bilinear); break;
        case SchemeKind::serendipity8: s.make_lagrange(SchemeKind::serendipity8); break;
        case SchemeKind::pascal6: s.make_pascal(opt); break;
        }
        return s;
    }

    SchemeKind kind() const { return kind_; }
    SchemeKind requested() const { return requested_; }
    bool fell_back() const { return kind_ != requested_; }
    const std::string& fallback_reason() const { return fallback_reason_; }

    const QuadGeometry& quad() const { return quad_; }
    const GeneralizedParams& params() const { return params_; }
    const ShapeFunctionSet& shapes() const { return shapes_; }
    const std::optional<PoleSet>& poles() const { return poles_; }
    double condition() const { return condition_; }

    /// Cartesian nodal coordinates in node-table order.
    const std::vector<Point>& node_points() const { return node_xy_; }

private:
    explicit MappingScheme(const QuadGeometry& q) : quad_(q) {}

    void make_lagrange(SchemeKind k) {
        kind_ = k;
        const NaturalNodeTable nodes =
            k == SchemeKind::bilinear ? NaturalNodeTable::corners() : NaturalNodeTable::serendipity();
        node_xy_.assign(quad_.vertices().begin(), quad_.vertices().end());
        if (k == SchemeKind::serendipity8)
            for (int e = 0; e < 4; ++e) node_xy_.push_back(0.5 * (quad_.vertex(e) + quad_.vertex((e + 1) % 4)));
        const MonomialBasis& basis = basis_for(k);
        const InterpolationInverse inv = invert_interpolation(interpolation_matrix(basis, nodes));
        condition_ = inv.condition_1norm;
        shapes_ = {k, basis, inv.B.transpose(), nodes};
        Eigen::MatrixX2d X(static_cast<Eigen::Index>(node_xy_.size()), 2);
        for (std::size_t p = 0; p < node_xy_.size(); ++p) X.row(static_cast<Eigen::Index>(p)) = node_xy_[p].transpose();
        params_ = {basis, inv.B * X};
    }

    void make_pascal(const SchemeOptions& opt) {
        try {
            PoleSet ps = compute_poles_cartesian(quad_);
            poles_ = ps;
            if (ps.any_parallel()) throw DegeneratePolesError("opposite edges are parallel (pole at infinity)");
            ps = compute_poles(quad_, opt.pole5_guess, opt.pole6_guess);
            poles_ = ps;
            PascalConstruction pc = pascal_shape_set(quad_, ps);
            kind_ = SchemeKind::pascal6;
            shapes_ = std::move(pc.shapes);
            params_ = std::move(pc.params);
            condition_ = pc.condition;
            node_xy_.assign(quad_.vertices().begin(), quad_.vertices().end());
            node_xy_.push_back(ps.p5_xy);
            node_xy_.push_back(ps.p6_xy);
        } catch (const NumericalError& e) {
            if (!opt.allow_fallback) throw;
            fallback_reason_ = e.what();
            make_lagrange(SchemeKind::bilinear);
        }
    }

    QuadGeometry quad_;
    SchemeKind kind_ = SchemeKind::bilinear;
    SchemeKind requested_ = SchemeKind::bilinear;
    std::string fallback_reason_;
    GeneralizedParams params_;
    ShapeFunctionSet shapes_;
    std::optional<PoleSet> poles_;
    double condition_ = 0.0;
    std::vector<Point> node_xy_;
};

inline Point map_point(const MappingScheme& scheme, const NaturalPoint& t) {
    return scheme.params().evaluate(t);
}

/// Map through the shape functions, sum_q N^(q)(theta) x_(q); agrees with map_point.
inline Point map_point_by_shapes(const MappingScheme& scheme, const NaturalPoint& t) {
    const Eigen::VectorXd n = scheme.shapes().values(t);
    Point x = Point::Zero();
    for (std::size_t q = 0; q < scheme.node_points().size(); ++q)
        x += n(static_cast<Eigen::Index>(q)) * scheme.node_points()[q];
    return x;
}

inline Jacobian jacobian(const MappingScheme& scheme, const NaturalPoint& t) {
    Jacobian j;
    j.cov = scheme.params().gradient(t);
    j.det = j.cov.determinant();
    const double d = scheme.quad().diameter();
    if (!(std::abs(j.det) >= 1e-12 * d * d))
        throw SingularJacobianError("singular Jacobian at theta = (" + std::to_string(t.x()) + ", " +
                                    std::to_string(t.y()) + ")");
    return j;
}

} // namespace quadplate
