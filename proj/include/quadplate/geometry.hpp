#pragma once

#include <quadplate/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>

namespace quadplate {

/// Cartesian point (x~1, x~2).
using Point = Eigen::Vector2d;
/// Natural coordinate pair (theta1, theta2) on the computational domain.
using NaturalPoint = Eigen::Vector2d;

inline double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.x() * b.y() - a.y() * b.x();
}

/// Shoelace signed area; positive for counterclockwise polygons.
inline double signed_area(std::span<const Point> poly) {
    double s = 0.0;
    for (std::size_t k = 0; k < poly.size(); ++k)
        s += cross2(poly[k], poly[(k + 1) % poly.size()]);
    return 0.5 * s;
}

/**
 * @brief Straight-edged quadrilateral given by its four vertices.
 *
 * Vertices are stored counterclockwise as (1),(2),(3),(4), matching the
 * natural corners (-1,-1),(+1,-1),(+1,+1),(-1,+1). A clockwise input is
 * reversed to (1),(4),(3),(2) and the fact is recorded so callers can warn.
 */
class QuadGeometry {
public:
    static QuadGeometry from_vertices(const std::array<Point, 4>& v) {
        QuadGeometry q;
        q.v_ = v;
        for (const auto& p : v)
            if (!p.allFinite()) throw InputError("quadrilateral: vertices must be finite and distinct");
        const double diam = q.diameter();
        if (!(diam > 0.0) || !std::isfinite(diam))
            throw InputError("quadrilateral: vertices must be finite and distinct");
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b)
                if ((v[a] - v[b]).norm() <= 1e-12 * diam)
                    throw InputError("quadrilateral: vertices " + std::to_string(a + 1) + " and " +
                                     std::to_string(b + 1) + " coincide");
        double area = signed_area(q.v_);
        if (std::abs(area) <= 1e-12 * diam * diam)
            throw InputError("quadrilateral: zero area");
        if (area < 0.0) {
            std::swap(q.v_[1], q.v_[3]);
            q.reordered_ = true;
        }
        return q;
    }

    const std::array<Point, 4>& vertices() const { return v_; }
    const Point& vertex(int p) const { return v_[static_cast<std::size_t>(p)]; }

    /// True when the input was clockwise and has been reversed.
    bool was_reordered() const { return reordered_; }

    double area() const { return signed_area(v_); }

    double diameter() const {
        double d = 0.0;
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b) d = std::max(d, (v_[a] - v_[b]).norm());
        return d;
    }

    Point centroid_of_vertices() const { return 0.25 * (v_[0] + v_[1] + v_[2] + v_[3]); }

    QuadGeometry translated(const Point& shift) const {
        QuadGeometry q = *this;
        for (auto& p : q.v_) p += shift;
        return q;
    }

private:
    QuadGeometry() = default;
    std::array<Point, 4> v_{};
    bool reordered_ = false;
};

/// Natural coordinates of the four corners, in vertex order.
inline const std::array<NaturalPoint, 4>& corner_naturals() {
    static const std::array<NaturalPoint, 4> c{NaturalPoint(-1, -1), NaturalPoint(1, -1),
                                               NaturalPoint(1, 1), NaturalPoint(-1, 1)};
    return c;
}

} // namespace quadplate
