#pragma once

// Mesh-level assembly, boundary conditions and the generalized symmetric
// eigensolution for free vibration, plus structured mesh generators.

#include <quadplate/errors.hpp>
#include <quadplate/geometry.hpp>
#include <quadplate/mapping.hpp>
#include <quadplate/plate_element.hpp>
#include <quadplate/quadrature.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <map>
#include <numbers>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace quadplate {

enum class BoundaryCondition { free, simply_supported, clamped };

inline std::string_view to_string(BoundaryCondition c) {
    switch (c) {
    case BoundaryCondition::free: return "free";
    case BoundaryCondition::simply_supported: return "simply_supported";
    case BoundaryCondition::clamped: return "clamped";
    }
    return "?";
}

inline BoundaryCondition parse_boundary_condition(std::string_view s) {
    if (s == "free") return BoundaryCondition::free;
    if (s == "simply_supported") return BoundaryCondition::simply_supported;
    if (s == "clamped") return BoundaryCondition::clamped;
    throw InputError("unknown boundary condition '" + std::string(s) + "'");
}

struct BoundarySet {
    std::string name;
    BoundaryCondition condition = BoundaryCondition::free;
    std::vector<int> nodes;
};

struct Mesh {
    std::vector<Point> nodes;
    std::vector<std::array<int, 4>> elements;
    std::vector<BoundarySet> boundary_sets;

    std::array<Point, 4> element_vertices(std::size_t e) const {
        const auto& el = elements[e];
        return {nodes[static_cast<std::size_t>(el[0])], nodes[static_cast<std::size_t>(el[1])],
                nodes[static_cast<std::size_t>(el[2])], nodes[static_cast<std::size_t>(el[3])]};
    }

    BoundarySet* find_set(std::string_view name) {
        for (auto& s : boundary_sets)
            if (s.name == name) return &s;
        return nullptr;
    }

    /// Checks indices, element orientation and shared-edge consistency.
    void validate() const {
        const int n = static_cast<int>(nodes.size());
        std::map<std::pair<int, int>, std::size_t> directed;
        for (std::size_t e = 0; e < elements.size(); ++e) {
            for (int idx : elements[e])
                if (idx < 0 || idx >= n)
                    throw InputError("element " + std::to_string(e) + " references missing node " + std::to_string(idx));
            const auto v = element_vertices(e);
            const QuadGeometry q = QuadGeometry::from_vertices(v);
            if (q.was_reordered())
                throw InputError("element " + std::to_string(e) + " is not counterclockwise");
            for (int s = 0; s < 4; ++s) {
                const std::pair<int, int> edge{elements[e][s], elements[e][(s + 1) % 4]};
                if (!directed.emplace(edge, e).second)
                    throw InputError("elements " + std::to_string(directed[edge]) + " and " + std::to_string(e) +
                                     " traverse a shared edge in the same direction");
            }
        }
        for (const auto& bs : boundary_sets)
            for (int idx : bs.nodes)
                if (idx < 0 || idx >= n)
                    throw InputError("boundary set '" + bs.name + "' references missing node " + std::to_string(idx));
    }
};

namespace detail {

inline Point bilinear_blend(const std::array<Point, 4>& v, double s, double t) {
    return (1 - s) * (1 - t) * v[0] + s * (1 - t) * v[1] + s * t * v[2] + (1 - s) * t * v[3];
}

inline bool on_segment(const Point& p, const Point& a, const Point& b, double tol) {
    const Eigen::Vector2d d = b - a;
    const double len2 = d.squaredNorm();
    const double s = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
    return (a + s * d - p).norm() <= tol;
}

inline std::vector<int> nodes_on_segment(const std::vector<Point>& nodes, const Point& a, const Point& b,
                                         double tol) {
    std::vector<int> out;
    for (std::size_t k = 0; k < nodes.size(); ++k)
        if (on_segment(nodes[k], a, b, tol)) out.push_back(static_cast<int>(k));
    return out;
}

} // namespace detail

/// m x n structured grid by bilinear transfinite interpolation of four vertices.
inline Mesh mesh_quad(const std::array<Point, 4>& vertices, int m, int n) {
    if (m < 1 || n < 1) throw InputError("quad mesh divisions must be >= 1");
    const QuadGeometry q = QuadGeometry::from_vertices(vertices);
    const auto& v = q.vertices();
    Mesh mesh;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= m; ++i)
            mesh.nodes.push_back(detail::bilinear_blend(v, double(i) / m, double(j) / n));
    auto id = [m](int i, int j) { return j * (m + 1) + i; };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i) mesh.elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    BoundarySet e12{"edge12", BoundaryCondition::free, {}}, e23{"edge23", BoundaryCondition::free, {}},
        e34{"edge34", BoundaryCondition::free, {}}, e41{"edge41", BoundaryCondition::free, {}};
    for (int i = 0; i <= m; ++i) {
        e12.nodes.push_back(id(i, 0));
        e34.nodes.push_back(id(i, n));
    }
    for (int j = 0; j <= n; ++j) {
        e23.nodes.push_back(id(m, j));
        e41.nodes.push_back(id(0, j));
    }
    mesh.boundary_sets = {e12, e23, e34, e41};
    return mesh;
}

/**
 * Triangle split into three quads (vertex, edge midpoint, centroid, edge
 * midpoint), each refined into level x level cells: 3 level^2 elements.
 * Boundary sets "edgeAB", "edgeBC", "edgeCA" follow the input vertex order.
 */
inline Mesh mesh_triangle(const std::array<Point, 3>& tri, int level) {
    if (level < 1) throw InputError("triangle mesh level must be >= 1");
    std::array<Point, 3> v = tri;
    const double diam = std::max({(v[0] - v[1]).norm(), (v[1] - v[2]).norm(), (v[2] - v[0]).norm()});
    const double area = signed_area(v);
    if (!(std::abs(area) > 1e-12 * diam * diam)) throw InputError("degenerate triangle");
    const bool flipped = area < 0;
    if (flipped) std::swap(v[1], v[2]);
    const Point g = (v[0] + v[1] + v[2]) / 3.0;
    auto mid = [&](int a, int b) { return Point(0.5 * (v[a] + v[b])); };
    const std::array<std::array<Point, 4>, 3> sub{{{v[0], mid(0, 1), g, mid(2, 0)},
                                                   {v[1], mid(1, 2), g, mid(0, 1)},
                                                   {v[2], mid(2, 0), g, mid(1, 2)}}};
    Mesh mesh;
    const double tol = 1e-9 * diam;
    auto node_id = [&](const Point& p) {
        for (std::size_t k = 0; k < mesh.nodes.size(); ++k)
            if ((mesh.nodes[k] - p).norm() <= tol) return static_cast<int>(k);
        mesh.nodes.push_back(p);
        return static_cast<int>(mesh.nodes.size() - 1);
    };
    for (const auto& quad : sub) {
        std::vector<int> ids;
        for (int j = 0; j <= level; ++j)
            for (int i = 0; i <= level; ++i)
                ids.push_back(node_id(detail::bilinear_blend(quad, double(i) / level, double(j) / level)));
        auto at = [&](int i, int j) { return ids[static_cast<std::size_t>(j * (level + 1) + i)]; };
        for (int j = 0; j < level; ++j)
            for (int i = 0; i < level; ++i) mesh.elements.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)});
    }
    // names refer to the caller's vertex order
    const std::array<Point, 3>& o = tri;
    mesh.boundary_sets = {{"edgeAB", BoundaryCondition::free, detail::nodes_on_segment(mesh.nodes, o[0], o[1], tol)},
                          {"edgeBC", BoundaryCondition::free, detail::nodes_on_segment(mesh.nodes, o[1], o[2], tol)},
                          {"edgeCA", BoundaryCondition::free, detail::nodes_on_segment(mesh.nodes, o[2], o[0], tol)}};
    return mesh;
}

/// Global matrices with a DOF map; index -1 marks an eliminated DOF.
struct GlobalSystem {
    Eigen::MatrixXd K;
    Eigen::MatrixXd M;
    Eigen::VectorXd f;
    std::vector<std::array<int, 3>> dof_map;

    Eigen::Index size() const { return K.rows(); }

    /// Reduced vector scattered back to 3 * n_nodes entries, zeros at constrained DOFs.
    Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const {
        Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * dof_map.size()));
        for (std::size_t n = 0; n < dof_map.size(); ++n)
            for (int c = 0; c < 3; ++c)
                if (dof_map[n][static_cast<std::size_t>(c)] >= 0)
                    full(static_cast<Eigen::Index>(3 * n + c)) = reduced(dof_map[n][static_cast<std::size_t>(c)]);
        return full;
    }
};

struct AssemblyOptions {
    SchemeKind scheme = SchemeKind::pascal6;
    int gauss_order = 3;
    bool rotary = false;
    double qbar = 0.0;
    /// 0 picks std::thread::hardware_concurrency().
    unsigned threads = 1;
};

struct AssemblyInfo {
    int fallbacks = 0; ///< elements where pascal6 degraded to bilinear
};

/**
 * Assembles K, M, f over the mesh. Rotation DOFs are global Cartesian
 * (phi_x = u,2 ; phi_y = -u,1); each element's natural-frame matrices are
 * transformed with its corner Jacobians before the scatter. Element work may
 * run on several threads; the scatter is serial in element order, so the
 * result does not depend on the thread count.
 */
inline GlobalSystem assemble(const Mesh& mesh, const PlateMaterial& material, const AssemblyOptions& opt = {},
                             AssemblyInfo* info = nullptr) {
    mesh.validate();
    material.validate();
    const GaussRule rule = gauss_rule(opt.gauss_order);
    const std::size_t ne = mesh.elements.size();
    std::vector<ElementMatrices> em(ne);
    std::vector<char> fell(ne, 0);
    std::vector<std::exception_ptr> errors(ne);

    auto work = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t e = begin; e < ne; e += stride) {
            try {
                const QuadGeometry q = QuadGeometry::from_vertices(mesh.element_vertices(e));
                const MappingScheme s = MappingScheme::build(q, opt.scheme);
                fell[e] = s.fell_back() ? 1 : 0;
                ElementMatrices nat = element_matrices(s, material, rule, opt.rotary, opt.qbar);
                const Mat12 T = element_frame_transform(s);
                em[e].K = T.transpose() * nat.K * T;
                em[e].M = T.transpose() * nat.M * T;
                em[e].f = T.transpose() * nat.f;
            } catch (...) {
                errors[e] = std::current_exception();
            }
        }
    };
    unsigned nt = opt.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opt.threads;
    nt = static_cast<unsigned>(std::min<std::size_t>(nt, std::max<std::size_t>(ne, 1)));
    if (nt <= 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < nt; ++k) pool.emplace_back(work, k, nt);
        for (auto& th : pool) th.join();
    }
    for (auto& ep : errors)
        if (ep) std::rethrow_exception(ep);

    const Eigen::Index n = static_cast<Eigen::Index>(3 * mesh.nodes.size());
    GlobalSystem sys{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n), {}};
    sys.dof_map.resize(mesh.nodes.size());
    for (std::size_t k = 0; k < mesh.nodes.size(); ++k) {
        const int b = static_cast<int>(3 * k);
        sys.dof_map[k] = {b, b + 1, b + 2};
    }
    int fallbacks = 0;
    for (std::size_t e = 0; e < ne; ++e) {
        fallbacks += fell[e];
        for (int a = 0; a < 4; ++a)
            for (int ca = 0; ca < 3; ++ca) {
                const Eigen::Index ga = 3 * mesh.elements[e][static_cast<std::size_t>(a)] + ca;
                sys.f(ga) += em[e].f(3 * a + ca);
                for (int b = 0; b < 4; ++b)
                    for (int cb = 0; cb < 3; ++cb) {
                        const Eigen::Index gb = 3 * mesh.elements[e][static_cast<std::size_t>(b)] + cb;
                        sys.K(ga, gb) += em[e].K(3 * a + ca, 3 * b + cb);
                        sys.M(ga, gb) += em[e].M(3 * a + ca, 3 * b + cb);
                    }
            }
    }
    if (info) info->fallbacks = fallbacks;
    return sys;
}

/// Eliminates constrained DOFs: clamped removes (u, phi_x, phi_y), simply supported removes u.
inline GlobalSystem apply_bcs(const GlobalSystem& full, const Mesh& mesh) {
    const std::size_t nn = mesh.nodes.size();
    if (full.dof_map.size() != nn) throw InputError("system and mesh disagree on node count");
    std::vector<BoundaryCondition> bc(nn, BoundaryCondition::free);
    std::vector<std::string> owner(nn);
    for (const auto& set : mesh.boundary_sets) {
        if (set.condition == BoundaryCondition::free) continue;
        for (int idx : set.nodes) {
            if (idx < 0 || static_cast<std::size_t>(idx) >= nn)
                throw InputError("boundary set '" + set.name + "' references missing node " + std::to_string(idx));
            auto& cur = bc[static_cast<std::size_t>(idx)];
            if (cur != BoundaryCondition::free && cur != set.condition)
                throw InputError("node " + std::to_string(idx) + " is in conflicting boundary sets '" +
                                 owner[static_cast<std::size_t>(idx)] + "' and '" + set.name + "'");
            cur = set.condition;
            owner[static_cast<std::size_t>(idx)] = set.name;
        }
    }
    GlobalSystem red;
    red.dof_map.resize(nn);
    std::vector<Eigen::Index> keep;
    for (std::size_t k = 0; k < nn; ++k)
        for (int c = 0; c < 3; ++c) {
            const bool fixed = bc[k] == BoundaryCondition::clamped ||
                               (bc[k] == BoundaryCondition::simply_supported && c == 0);
            const int old = full.dof_map[k][static_cast<std::size_t>(c)];
            if (fixed || old < 0) {
                red.dof_map[k][static_cast<std::size_t>(c)] = -1;
            } else {
                red.dof_map[k][static_cast<std::size_t>(c)] = static_cast<int>(keep.size());
                keep.push_back(old);
            }
        }
    const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
    red.K.resize(m, m);
    red.M.resize(m, m);
    red.f.resize(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        red.f(a) = full.f(keep[a]);
        for (Eigen::Index b = 0; b < m; ++b) {
            red.K(a, b) = full.K(keep[a], keep[b]);
            red.M(a, b) = full.M(keep[a], keep[b]);
        }
    }
    return red;
}

struct ModalSpectrum {
    Eigen::VectorXd omega2;  ///< ascending
    Eigen::VectorXd omega;   ///< sqrt(max(omega2, 0))
    Eigen::MatrixXd modes;   ///< columns, mass-normalized, reduced DOFs
    int requested = 0;
    /// Requested modes that do not exist because the mass matrix is singular there.
    int infinite = 0;
    double shift = 0.0;

    Eigen::Index count() const { return omega.size(); }
};

/**
 * The k smallest eigenpairs of K phi = omega^2 M phi.
 *
 * Solved in the inverted form M phi = mu (K + sigma M) phi with a Cholesky
 * factor of K + sigma M; sigma stays 0 when K itself is safely positive
 * definite. Directions with mu = 0 belong to infinite eigenvalues (the plate
 * mass matrix is rank deficient) and are never returned.
 */
inline ModalSpectrum solve_modes(const GlobalSystem& sys, int k) {
    const Eigen::Index n = sys.size();
    if (k < 1 || k > n)
        throw InputError("requested " + std::to_string(k) + " modes but the system has " + std::to_string(n) + " DOFs");
    const Eigen::MatrixXd& K = sys.K;
    const Eigen::MatrixXd& M = sys.M;

    double sigma = 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    auto well_posed = [&](const Eigen::LLT<Eigen::MatrixXd>& f) {
        if (f.info() != Eigen::Success) return false;
        const Eigen::VectorXd d = f.matrixLLT().diagonal().cwiseAbs2();
        return d.minCoeff() > 1e-10 * d.maxCoeff();
    };
    if (!well_posed(llt)) {
        sigma = 1e-3 * K.diagonal().cwiseAbs().maxCoeff() / std::max(M.diagonal().cwiseAbs().maxCoeff(), 1e-300);
        llt.compute(K + sigma * M);
        if (llt.info() != Eigen::Success)
            throw NumericalError("pencil (K, M) is indefinite after a spectral shift of " + std::to_string(sigma));
    }
    const auto L = llt.matrixL();
    Eigen::MatrixXd C = L.solve(M);
    C = L.solve(C.transpose()).eval();
    C = 0.5 * (C + C.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
    const Eigen::VectorXd& mu = es.eigenvalues(); // ascending
    const double mu_max = std::max(mu.cwiseAbs().maxCoeff(), 1e-300);

    ModalSpectrum sp;
    sp.requested = k;
    sp.shift = sigma;
    std::vector<Eigen::Index> picks;
    for (Eigen::Index r = n - 1; r >= 0 && static_cast<int>(picks.size()) < k; --r) {
        if (mu(r) <= 1e-12 * mu_max) break;
        picks.push_back(r);
    }
    sp.infinite = k - static_cast<int>(picks.size());
    const Eigen::Index m = static_cast<Eigen::Index>(picks.size());
    sp.omega2.resize(m);
    sp.omega.resize(m);
    sp.modes.resize(n, m);
    for (Eigen::Index c = 0; c < m; ++c) {
        const Eigen::Index r = picks[static_cast<std::size_t>(c)];
        Eigen::VectorXd phi = L.transpose().solve(es.eigenvectors().col(r));
        phi /= std::sqrt(phi.dot(M * phi));
        // Rayleigh quotient is more accurate than 1/mu - sigma for small eigenvalues
        double lam = phi.dot(K * phi);
        if (std::abs(lam) < 1e-300) lam = 0.0;
        Eigen::Index big = 0;
        phi.cwiseAbs().maxCoeff(&big);
        if (phi(big) < 0) phi = -phi;
        sp.omega2(c) = lam;
        sp.omega(c) = std::sqrt(std::max(lam, 0.0));
        sp.modes.col(c) = phi;
    }
    return sp;
}

enum class Normalization { plain, per_pi2 };

/// omega a^2 sqrt(rho t / D), optionally divided by pi^2.
inline double frequency_parameter(double omega, double a, const PlateMaterial& material, Normalization norm) {
    if (!(a > 0.0)) throw InputError("reference length must be positive");
    const double p = omega * a * a * std::sqrt(material.mass_per_area() / material.rigidity());
    return norm == Normalization::per_pi2 ? p / (std::numbers::pi * std::numbers::pi) : p;
}

} // namespace quadplate
