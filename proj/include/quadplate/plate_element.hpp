#pragma once

// Compatible 12-DOF thin-plate bending element formulated on the bi-unit
// square. Nodal DOFs are (u, phi1, phi2) at (i),(j),(k),(l) = corners
// (-1,-1),(+1,-1),(+1,+1),(-1,+1). Along each edge the deflection is a
// Hermite cubic; phi1 = du/dtheta2 and phi2 = -du/dtheta1 at the nodes.
// The interior rotations blend the rotations of opposite edges linearly and
// the natural curvatures follow from the rotation field.

#include <quadplate/errors.hpp>
#include <quadplate/mapping.hpp>
#include <quadplate/quadrature.hpp>

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>

namespace quadplate {

using Mat12 = Eigen::Matrix<double, 12, 12>;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Row12 = Eigen::Matrix<double, 1, 12>;

/// DOF slot inside the element vector (u, phi1, phi2) x (i, j, k, l).
enum class Dof : int { u = 0, phi1 = 1, phi2 = 2 };
constexpr int dof_index(int node, Dof d) { return 3 * node + static_cast<int>(d); }

struct PlateMaterial {
    double E = 0.0;
    double nu = 0.0;
    double t = 0.0;
    double rho = 0.0;

    double rigidity() const { return E * t * t * t / (12.0 * (1.0 - nu * nu)); }
    double mass_per_area() const { return rho * t; }
    double rotary_inertia() const { return rho * t * t * t / 12.0; }

    void validate() const {
        if (!(E > 0.0) || !(t > 0.0) || !(rho > 0.0) || !(nu >= 0.0 && nu < 0.5))
            throw InputError("material: need E > 0, t > 0, rho > 0 and 0 <= nu < 0.5");
    }

    /// E = 1365, t = 0.2, nu = 0.3, rho = 5: D = 1 and rho*t = 1.
    static PlateMaterial normalized() { return {1365.0, 0.3, 0.2, 5.0}; }
};

/// Four Hermite cubics on [-1, 1] with first and second derivatives.
struct HermiteValues {
    std::array<double, 4> h{};
    std::array<double, 4> d1{};
    std::array<double, 4> d2{};
};

/**
 * Hermite cubics along natural direction 1 or 2.
 *
 * Direction 1 uses slope DOF phi2 = -du/dtheta1, direction 2 uses
 * phi1 = +du/dtheta2, so the slope cubics h2, h4 differ in sign between
 * the two sets.
 */
inline HermiteValues hermite_basis(double x, int direction) {
    if (direction != 1 && direction != 2) throw InputError("Hermite direction must be 1 or 2");
    const double s = direction == 1 ? 1.0 : -1.0;
    const double x2 = x * x, x3 = x2 * x;
    HermiteValues v;
    v.h = {0.25 * (2 - 3 * x + x3), s * 0.25 * (-1 + x + x2 - x3), 0.25 * (2 + 3 * x - x3),
           s * 0.25 * (1 + x - x2 - x3)};
    v.d1 = {0.25 * (-3 + 3 * x2), s * 0.25 * (1 + 2 * x - 3 * x2), 0.25 * (3 - 3 * x2),
            s * 0.25 * (1 - 2 * x - 3 * x2)};
    v.d2 = {1.5 * x, s * 0.25 * (2 - 6 * x), -1.5 * x, s * 0.25 * (-2 - 6 * x)};
    return v;
}

namespace detail {

/**
 * Rows phi2^(i)(j), phi1^(j)(k), phi2^(l)(k), phi1^(i)(l). With `edge_derivative`
 * = 1 each row is differentiated once more along its own edge parameter.
 */
inline Eigen::Matrix<double, 4, 12> edge_rotation_rows(const NaturalPoint& t, int edge_derivative) {
    const HermiteValues a = hermite_basis(t.x(), 1);
    const HermiteValues b = hermite_basis(t.y(), 2);
    const auto& da = edge_derivative == 0 ? a.d1 : a.d2;
    const auto& db = edge_derivative == 0 ? b.d1 : b.d2;
    constexpr int i = 0, j = 1, k = 2, l = 3;
    Eigen::Matrix<double, 4, 12> R = Eigen::Matrix<double, 4, 12>::Zero();
    R(0, dof_index(i, Dof::u)) = -da[0];
    R(0, dof_index(i, Dof::phi2)) = -da[1];
    R(0, dof_index(j, Dof::u)) = -da[2];
    R(0, dof_index(j, Dof::phi2)) = -da[3];

    R(1, dof_index(j, Dof::u)) = db[0];
    R(1, dof_index(j, Dof::phi1)) = db[1];
    R(1, dof_index(k, Dof::u)) = db[2];
    R(1, dof_index(k, Dof::phi1)) = db[3];

    R(2, dof_index(k, Dof::u)) = -da[2];
    R(2, dof_index(k, Dof::phi2)) = -da[3];
    R(2, dof_index(l, Dof::u)) = -da[0];
    R(2, dof_index(l, Dof::phi2)) = -da[1];

    R(3, dof_index(i, Dof::u)) = db[0];
    R(3, dof_index(i, Dof::phi1)) = db[1];
    R(3, dof_index(l, Dof::u)) = db[2];
    R(3, dof_index(l, Dof::phi1)) = db[3];
    return R;
}

} // namespace detail

/// Boundary rotations as functions of the element DOFs (4 x 12).
inline Eigen::Matrix<double, 4, 12> boundary_rotation_matrix(const NaturalPoint& t) {
    return detail::edge_rotation_rows(t, 0);
}

/// Deflection along the four edges in the same row order as the boundary rotations.
inline Eigen::Matrix<double, 4, 12> boundary_deflection_matrix(const NaturalPoint& t) {
    const HermiteValues a = hermite_basis(t.x(), 1);
    const HermiteValues b = hermite_basis(t.y(), 2);
    constexpr int i = 0, j = 1, k = 2, l = 3;
    Eigen::Matrix<double, 4, 12> W = Eigen::Matrix<double, 4, 12>::Zero();
    W(0, dof_index(i, Dof::u)) = a.h[0];
    W(0, dof_index(i, Dof::phi2)) = a.h[1];
    W(0, dof_index(j, Dof::u)) = a.h[2];
    W(0, dof_index(j, Dof::phi2)) = a.h[3];
    W(1, dof_index(j, Dof::u)) = b.h[0];
    W(1, dof_index(j, Dof::phi1)) = b.h[1];
    W(1, dof_index(k, Dof::u)) = b.h[2];
    W(1, dof_index(k, Dof::phi1)) = b.h[3];
    W(2, dof_index(k, Dof::u)) = a.h[2];
    W(2, dof_index(k, Dof::phi2)) = a.h[3];
    W(2, dof_index(l, Dof::u)) = a.h[0];
    W(2, dof_index(l, Dof::phi2)) = a.h[1];
    W(3, dof_index(i, Dof::u)) = b.h[0];
    W(3, dof_index(i, Dof::phi1)) = b.h[1];
    W(3, dof_index(l, Dof::u)) = b.h[2];
    W(3, dof_index(l, Dof::phi1)) = b.h[3];
    return W;
}

/// Interior rotations (phi1; phi2) blended from opposite boundaries (2 x 12).
inline Eigen::Matrix<double, 2, 12> rotation_field(const NaturalPoint& t) {
    const auto R = boundary_rotation_matrix(t);
    Eigen::Matrix<double, 2, 12> P;
    P.row(0) = 0.5 * (1 - t.x()) * R.row(3) + 0.5 * (1 + t.x()) * R.row(1);
    P.row(1) = 0.5 * (1 - t.y()) * R.row(0) + 0.5 * (1 + t.y()) * R.row(2);
    return P;
}

/**
 * Natural curvatures (chi11, chi22, 2 chi12) as a 3 x 12 operator.
 *
 * chi11 = d phi2/d theta1, chi22 = -d phi1/d theta2 and
 * 2 chi12 = d phi2/d theta2 - d phi1/d theta1, i.e. chi = -u,ab for the
 * Hermite interpolant on a rectangle.
 */
inline Eigen::Matrix<double, 3, 12> curvature_operator(const NaturalPoint& t) {
    const auto R = detail::edge_rotation_rows(t, 0);
    const auto dR = detail::edge_rotation_rows(t, 1);
    Eigen::Matrix<double, 3, 12> B;
    B.row(0) = 0.5 * (1 - t.y()) * dR.row(0) + 0.5 * (1 + t.y()) * dR.row(2);
    B.row(1) = -(0.5 * (1 - t.x()) * dR.row(3) + 0.5 * (1 + t.x()) * dR.row(1));
    B.row(2) = 0.5 * (R.row(2) - R.row(0)) - 0.5 * (R.row(1) - R.row(3));
    return B;
}

/**
 * Curvature operator of the mapped element, adding the connection terms
 * Gamma^g_ab u,g to the plain operator, with Gamma^g_ab = (J^-1)_gi x^i,ab.
 */
inline Eigen::Matrix<double, 3, 12> curvature_operator(const MappingScheme& scheme, const NaturalPoint& t,
                                                       const Jacobian& jac) {
    Eigen::Matrix<double, 3, 12> B = curvature_operator(t);
    const auto P = rotation_field(t);
    Eigen::Matrix<double, 2, 12> du;
    du.row(0) = -P.row(1);
    du.row(1) = P.row(0);
    const auto& g = scheme.params();
    const Eigen::Matrix2d G = jac.contravariant();
    const Eigen::Vector2d c11 = G * (monomial_row(g.basis, t, 2, 0) * g.coeffs).transpose();
    const Eigen::Vector2d c22 = G * (monomial_row(g.basis, t, 0, 2) * g.coeffs).transpose();
    const Eigen::Vector2d c12 = G * (monomial_row(g.basis, t, 1, 1) * g.coeffs).transpose();
    B.row(0) += c11(0) * du.row(0) + c11(1) * du.row(1);
    B.row(1) += c22(0) * du.row(0) + c22(1) * du.row(1);
    B.row(2) += 2.0 * (c12(0) * du.row(0) + c12(1) * du.row(1));
    return B;
}

using Rigidity4 = std::array<std::array<std::array<std::array<double, 2>, 2>, 2>, 2>;

/// Isotropic Kirchhoff moment-curvature tensor E^{ijkl} in Cartesian components.
inline Rigidity4 cartesian_rigidity_tensor(const PlateMaterial& m) {
    const double D = m.rigidity();
    Rigidity4 E{};
    auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l)
                    E[i][j][k][l] = D * (m.nu * delta(i, j) * delta(k, l) +
                                         0.5 * (1 - m.nu) * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k)));
    return E;
}

/// Voigt condensation for the pairing with (chi11, chi22, 2 chi12).
inline Eigen::Matrix3d to_voigt(const Rigidity4& E) {
    constexpr int a[3] = {0, 1, 0};
    constexpr int b[3] = {0, 1, 1};
    Eigen::Matrix3d V;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) V(r, c) = E[a[r]][b[r]][a[c]][b[c]];
    return V;
}

/// Rigidity pushed to natural indices with the contravariant components (alpha, i).
inline Eigen::Matrix3d natural_rigidity(const PlateMaterial& m, const Eigen::Matrix2d& contravariant) {
    const Rigidity4 E = cartesian_rigidity_tensor(m);
    const Eigen::Matrix2d& G = contravariant;
    Rigidity4 En{};
    for (int al = 0; al < 2; ++al)
        for (int be = 0; be < 2; ++be)
            for (int ga = 0; ga < 2; ++ga)
                for (int de = 0; de < 2; ++de) {
                    double s = 0.0;
                    for (int i = 0; i < 2; ++i)
                        for (int j = 0; j < 2; ++j)
                            for (int k = 0; k < 2; ++k)
                                for (int l = 0; l < 2; ++l)
                                    s += G(al, i) * G(be, j) * G(ga, k) * G(de, l) * E[i][j][k][l];
                    En[al][be][ga][de] = s;
                }
    return to_voigt(En);
}

inline Eigen::Matrix3d natural_rigidity(const PlateMaterial& m, const Jacobian& jac) {
    if (jac.det == 0.0) throw SingularJacobianError("natural rigidity: singular Jacobian");
    return natural_rigidity(m, jac.contravariant());
}

/// Fractions A_(p)/A of the element area in the natural quadrant at each corner.
struct SubareaWeights {
    std::array<double, 4> w{};
    double sum() const { return w[0] + w[1] + w[2] + w[3]; }
};

inline SubareaWeights subarea_weights(const MappingScheme& scheme, const GaussRule& rule = gauss_rule(3)) {
    std::array<double, 4> part{};
    double total = 0.0;
    const auto& c = corner_naturals();
    for (int p = 0; p < 4; ++p) {
        // quadrant [min(0, c), max(0, c)] in each direction
        const NaturalPoint mid = 0.5 * c[p];
        for_each_gauss_point(rule, [&](const NaturalPoint& xi, double w) {
            const NaturalPoint t = mid + 0.5 * xi;
            part[p] += 0.25 * w * jacobian(scheme, t).det;
        });
        total += part[p];
    }
    SubareaWeights sw;
    for (int p = 0; p < 4; ++p) sw.w[p] = part[p] / total;
    return sw;
}

/**
 * Deflection row of the linear expansion about the centre:
 * u(theta) = sum_p (A_p/A) u_p + theta1 du/dtheta1(0) + theta2 du/dtheta2(0),
 * with du/dtheta1 = -phi2 and du/dtheta2 = phi1 taken from the rotation field.
 */
inline Row12 deflection_row(const NaturalPoint& t, const SubareaWeights& weights) {
    Row12 r = Row12::Zero();
    for (int p = 0; p < 4; ++p) r(dof_index(p, Dof::u)) = weights.w[p];
    const auto P0 = rotation_field(NaturalPoint::Zero());
    r += t.x() * (-P0.row(1)) + t.y() * P0.row(0);
    return r;
}

/**
 * Deflection row of the transfinite (Coons) blend of the four Hermite edge
 * deflections; reproduces the edge cubics exactly on the boundary.
 */
inline Row12 deflection_field_row(const NaturalPoint& t) {
    const auto W = boundary_deflection_matrix(t);
    const double s1 = t.x(), s2 = t.y();
    Row12 r = 0.5 * (1 - s2) * W.row(0) + 0.5 * (1 + s2) * W.row(2) + 0.5 * (1 - s1) * W.row(3) +
              0.5 * (1 + s1) * W.row(1);
    const std::array<double, 4> corner{0.25 * (1 - s1) * (1 - s2), 0.25 * (1 + s1) * (1 - s2),
                                       0.25 * (1 + s1) * (1 + s2), 0.25 * (1 - s1) * (1 + s2)};
    for (int p = 0; p < 4; ++p) r(dof_index(p, Dof::u)) -= corner[static_cast<std::size_t>(p)];
    return r;
}

struct ElementMatrices {
    Mat12 K = Mat12::Zero();
    Mat12 M = Mat12::Zero();
    Vec12 f = Vec12::Zero();
};

inline Mat12 element_stiffness(const MappingScheme& scheme, const PlateMaterial& material,
                               const GaussRule& rule) {
    Mat12 K = Mat12::Zero();
    for_each_gauss_point(rule, [&](const NaturalPoint& t, double w) {
        const Jacobian j = jacobian(scheme, t);
        const Eigen::Matrix3d E = natural_rigidity(material, j);
        const auto B = curvature_operator(scheme, t, j);
        K.noalias() += (w * j.det) * (B.transpose() * E * B);
    });
    return 0.5 * (K + K.transpose());
}

/// Consistent mass from the deflection expansion and, optionally, rotary inertia.
inline Mat12 element_mass(const MappingScheme& scheme, const PlateMaterial& material, const GaussRule& rule,
                          bool rotary = false) {
    const SubareaWeights sw = subarea_weights(scheme, rule);
    const double m = material.mass_per_area();
    const double r = rotary ? material.rotary_inertia() : 0.0;
    Mat12 M = Mat12::Zero();
    for_each_gauss_point(rule, [&](const NaturalPoint& t, double w) {
        const double wd = w * jacobian(scheme, t).det;
        const Row12 n = deflection_row(t, sw);
        M.noalias() += (wd * m) * (n.transpose() * n);
        if (r != 0.0) {
            const auto P = rotation_field(t);
            M.noalias() += (wd * r) * (P.transpose() * P);
        }
    });
    return 0.5 * (M + M.transpose());
}

/// Consistent load of a uniform pressure qbar.
inline Vec12 element_load(const MappingScheme& scheme, const GaussRule& rule, double qbar) {
    const SubareaWeights sw = subarea_weights(scheme, rule);
    Vec12 f = Vec12::Zero();
    for_each_gauss_point(rule, [&](const NaturalPoint& t, double w) {
        f += (w * jacobian(scheme, t).det * qbar) * deflection_row(t, sw).transpose();
    });
    return f;
}

inline ElementMatrices element_matrices(const MappingScheme& scheme, const PlateMaterial& material,
                                        const GaussRule& rule, bool rotary = false, double qbar = 0.0) {
    if (rule.order < 3) throw InputError("plate element needs a Gauss rule of order >= 3");
    return {element_stiffness(scheme, material, rule), element_mass(scheme, material, rule, rotary),
            element_load(scheme, rule, qbar)};
}

/**
 * Maps Cartesian nodal rotations (phi_x = u,2 ; phi_y = -u,1) to the natural
 * rotations of one element corner: (phi1, phi2) = adj(J) (phi_x, phi_y), with
 * J the covariant Jacobian at that corner.
 */
inline Eigen::Matrix2d corner_rotation_transform(const MappingScheme& scheme, int corner) {
    const Eigen::Matrix2d J = jacobian(scheme, corner_naturals()[static_cast<std::size_t>(corner)]).cov;
    Eigen::Matrix2d T;
    T << J(1, 1), -J(0, 1), -J(1, 0), J(0, 0);
    return T;
}

/// Block-diagonal 12 x 12 map from Cartesian-frame to natural-frame element DOFs.
inline Mat12 element_frame_transform(const MappingScheme& scheme) {
    Mat12 T = Mat12::Zero();
    for (int p = 0; p < 4; ++p) {
        T(3 * p, 3 * p) = 1.0;
        T.block<2, 2>(3 * p + 1, 3 * p + 1) = corner_rotation_transform(scheme, p);
    }
    return T;
}

} // namespace quadplate
