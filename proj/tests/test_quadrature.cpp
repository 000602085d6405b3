#include <gtest/gtest.h>

#include <quadplate/cli_io.hpp>
#include <quadplate/quadrature.hpp>

#include <random>

using namespace quadplate;

namespace {

// exact integral of x^k over [-1, 1]
double monomial_integral(int k) { return k % 2 ? 0.0 : 2.0 / (k + 1); }

struct Moments {
    double a, ixx, iyy, ixy;
};

// independent oracle: split the convex quad into two triangles and use the
// triangle moment formulas (mean of vertex and midpoint products)
Moments triangle_moments(const Point& p, const Point& q, const Point& r) {
    const double area = 0.5 * cross2(q - p, r - p);
    const Point mids[3] = {0.5 * (p + q), 0.5 * (q + r), 0.5 * (r + p)};
    Moments m{area, 0, 0, 0};
    // three-midpoint rule is exact for quadratics on a triangle
    for (const auto& s : mids) {
        m.ixx += area / 3.0 * s.y() * s.y();
        m.iyy += area / 3.0 * s.x() * s.x();
        m.ixy += area / 3.0 * s.x() * s.y();
    }
    return m;
}

Moments quad_moments(const std::array<Point, 4>& v) {
    const Moments a = triangle_moments(v[0], v[1], v[2]);
    const Moments b = triangle_moments(v[0], v[2], v[3]);
    return {a.a + b.a, a.ixx + b.ixx, a.iyy + b.iyy, a.ixy + b.ixy};
}

} // namespace

TEST(Gauss, RulesIntegrateMonomialsExactly) {
    for (int n = 1; n <= 6; ++n) {
        const GaussRule r = gauss_rule(n);
        ASSERT_EQ(r.nodes.size(), static_cast<std::size_t>(n));
        for (int k = 0; k <= 2 * n - 1; ++k) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
            EXPECT_NEAR(s, monomial_integral(k), 1e-14) << "n=" << n << " k=" << k;
        }
        // one degree higher is not exact
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.nodes[i], 2 * n);
        EXPECT_GT(std::abs(s - monomial_integral(2 * n)), 1e-6) << "n=" << n;
    }
}

TEST(Gauss, NodesAscendingAndSymmetric) {
    for (int n = 1; n <= 6; ++n) {
        const GaussRule r = gauss_rule(n);
        for (int i = 0; i < n; ++i) {
            EXPECT_NEAR(r.nodes[i], -r.nodes[n - 1 - i], 1e-15);
            EXPECT_NEAR(r.weights[i], r.weights[n - 1 - i], 1e-15);
            if (i > 0) EXPECT_LT(r.nodes[i - 1], r.nodes[i]);
        }
    }
}

TEST(Gauss, OutOfRangeOrderRejected) {
    EXPECT_THROW(gauss_rule(0), InputError);
    EXPECT_THROW(gauss_rule(7), InputError);
}

TEST(Gauss, TensorProductVisitsAllPoints) {
    int count = 0;
    double wsum = 0.0;
    for_each_gauss_point(gauss_rule(4), [&](const NaturalPoint&, double w) {
        ++count;
        wsum += w;
    });
    EXPECT_EQ(count, 16);
    EXPECT_NEAR(wsum, 4.0, 1e-14);
}

TEST(SectionProperties, SkewQuadAllSchemes) {
    const QuadGeometry q = QuadGeometry::from_vertices({Point(0, 0), Point(8, 0), Point(4, 3), Point(0, 5)});
    for (SchemeKind k : io::all_schemes) {
        const SectionProperties sp = section_properties(MappingScheme::build(q, k), gauss_rule(3));
        EXPECT_NEAR(sp.area, 22.0, 1e-9);
        EXPECT_NEAR(sp.I_x1, 299.0 / 3.0, 1e-9);
        EXPECT_NEAR(sp.I_x2, 752.0 / 3.0, 1e-9);
        EXPECT_NEAR(sp.I_x1x2, 254.0 / 3.0, 1e-9);
    }
}

TEST(SectionProperties, UnitSquare) {
    const QuadGeometry q = QuadGeometry::from_vertices({Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)});
    const SectionProperties sp = section_properties(MappingScheme::build(q, SchemeKind::bilinear), gauss_rule(2));
    EXPECT_NEAR(sp.area, 1.0, 1e-14);
    EXPECT_NEAR(sp.I_x1, 1.0 / 3.0, 1e-14);
    EXPECT_NEAR(sp.I_x2, 1.0 / 3.0, 1e-14);
    EXPECT_NEAR(sp.I_x1x2, 0.25, 1e-14);
}

TEST(SectionProperties, RandomQuadsMatchTriangleSplit) {
    std::mt19937_64 rng(21);
    for (int n = 0; n < 50; ++n) {
        const auto v = io::random_convex_quad(rng);
        const QuadGeometry q = QuadGeometry::from_vertices(v);
        const Moments m = quad_moments(q.vertices());
        for (SchemeKind k : io::all_schemes) {
            const SectionProperties sp = section_properties(MappingScheme::build(q, k), gauss_rule(3));
            const double s = 1.0 + std::abs(m.ixx) + std::abs(m.iyy);
            EXPECT_NEAR(sp.area, m.a, 1e-11 * m.a);
            EXPECT_NEAR(sp.I_x1, m.ixx, 1e-11 * s);
            EXPECT_NEAR(sp.I_x2, m.iyy, 1e-11 * s);
            EXPECT_NEAR(sp.I_x1x2, m.ixy, 1e-11 * s);
        }
    }
}

TEST(SectionProperties, ReflectedInputSameMagnitudes) {
    const QuadGeometry q = QuadGeometry::from_vertices({Point(0, 0), Point(0, 5), Point(4, 3), Point(8, 0)});
    EXPECT_TRUE(q.was_reordered());
    const SectionProperties sp = section_properties(MappingScheme::build(q, SchemeKind::pascal6), gauss_rule(3));
    EXPECT_NEAR(sp.area, 22.0, 1e-9);
    EXPECT_NEAR(sp.I_x1x2, 254.0 / 3.0, 1e-9);
}

TEST(Integrate, ParallelAxisTheorem) {
    const QuadGeometry q = QuadGeometry::from_vertices({Point(0, 0), Point(8, 0), Point(4, 3), Point(0, 5)});
    const Point shift(2.5, -1.5);
    const MappingScheme a = MappingScheme::build(q, SchemeKind::pascal6);
    const MappingScheme b = MappingScheme::build(q.translated(shift), SchemeKind::pascal6);
    const GaussRule r = gauss_rule(3);
    const double area = integrate_element(a, [](const NaturalPoint&, const Point&) { return 1.0; }, r);
    const double sx = integrate_element(a, [](const NaturalPoint&, const Point& x) { return x.x(); }, r);
    const double ixx_a = integrate_element(a, [](const NaturalPoint&, const Point& x) { return x.x() * x.x(); }, r);
    const double ixx_b = integrate_element(b, [](const NaturalPoint&, const Point& x) { return x.x() * x.x(); }, r);
    EXPECT_NEAR(ixx_b, ixx_a + 2 * shift.x() * sx + shift.x() * shift.x() * area, 1e-9);
}
