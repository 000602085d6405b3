#include <gtest/gtest.h>

#include <quadplate/cli_io.hpp>
#include <quadplate/mapping.hpp>

#include <random>

using namespace quadplate;

namespace {

QuadGeometry skew_quad() {
    return QuadGeometry::from_vertices({Point(0, 0), Point(8, 0), Point(4, 3), Point(0, 5)});
}

std::vector<QuadGeometry> random_quads(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<QuadGeometry> out;
    for (int k = 0; k < n; ++k) out.push_back(QuadGeometry::from_vertices(io::random_convex_quad(rng)));
    return out;
}

constexpr std::array<SchemeKind, 3> kSchemes{SchemeKind::bilinear, SchemeKind::serendipity8, SchemeKind::pascal6};

} // namespace

// ---------------------------------------------------------------- geometry

TEST(Geometry, CounterclockwiseInputIsKept) {
    const QuadGeometry q = skew_quad();
    EXPECT_FALSE(q.was_reordered());
    EXPECT_DOUBLE_EQ(q.area(), 22.0);
}

TEST(Geometry, ClockwiseInputIsReordered) {
    const QuadGeometry q = QuadGeometry::from_vertices({Point(0, 0), Point(0, 5), Point(4, 3), Point(8, 0)});
    EXPECT_TRUE(q.was_reordered());
    EXPECT_DOUBLE_EQ(q.area(), 22.0);
    EXPECT_EQ(q.vertex(1), Point(8, 0));
    EXPECT_EQ(q.vertex(3), Point(0, 5));
}

TEST(Geometry, CoincidentVerticesRejected) {
    EXPECT_THROW(QuadGeometry::from_vertices({Point(0, 0), Point(1, 0), Point(1, 0), Point(0, 1)}), InputError);
}

TEST(Geometry, ZeroAreaRejected) {
    EXPECT_THROW(QuadGeometry::from_vertices({Point(0, 0), Point(1, 0), Point(2, 0), Point(3, 0)}), InputError);
}

TEST(Geometry, NonFiniteRejected) {
    EXPECT_THROW(QuadGeometry::from_vertices({Point(0, 0), Point(NAN, 0), Point(1, 1), Point(0, 1)}), InputError);
}

// ---------------------------------------------------------------- schemes

TEST(Scheme, ParseAndPrint) {
    for (SchemeKind k : kSchemes) EXPECT_EQ(parse_scheme(to_string(k)), k);
    EXPECT_THROW(parse_scheme("quadratic"), InputError);
}

TEST(Scheme, BilinearParamsOfSkewQuad) {
    const GeneralizedParams g = bilinear_params(skew_quad());
    EXPECT_NEAR(g.coefficient({0, 0}).x(), 3.0, 1e-14);
    EXPECT_NEAR(g.coefficient({1, 0}).x(), 3.0, 1e-14);
    EXPECT_NEAR(g.coefficient({0, 1}).x(), -1.0, 1e-14);
    EXPECT_NEAR(g.coefficient({1, 1}).x(), -1.0, 1e-14);
    EXPECT_NEAR(g.coefficient({0, 0}).y(), 2.0, 1e-14);
    EXPECT_NEAR(g.coefficient({1, 0}).y(), -0.5, 1e-14);
    EXPECT_NEAR(g.coefficient({0, 1}).y(), 2.0, 1e-14);
    EXPECT_NEAR(g.coefficient({1, 1}).y(), -0.5, 1e-14);
}

TEST(Scheme, AllSchemesGiveTheSameMapOnSkewQuad) {
    const QuadGeometry q = skew_quad();
    for (SchemeKind k : kSchemes) {
        const MappingScheme s = MappingScheme::build(q, k);
        EXPECT_FALSE(s.fell_back()) << to_string(k);
        const GeneralizedParams& g = s.params();
        const Eigen::Vector2d expect[6] = {{3, 2}, {3, -0.5}, {-1, 2}, {0, 0}, {-1, -0.5}, {0, 0}};
        const Monomial mono[6] = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
        for (int m = 0; m < 6; ++m) EXPECT_LT((g.coefficient(mono[m]).transpose() - expect[m]).norm(), 1e-9) << to_string(k);
        EXPECT_LT(g.coefficient({2, 1}).norm() + g.coefficient({1, 2}).norm(), 1e-9) << to_string(k);
    }
}

TEST(Scheme, CentreRowIsVertexMean) {
    for (const auto& q : random_quads(20, 11)) {
        const MappingScheme s = MappingScheme::build(q, SchemeKind::pascal6);
        EXPECT_LT((map_point(s, NaturalPoint::Zero()) - q.centroid_of_vertices()).norm(), 1e-10 * q.diameter());
    }
}

TEST(Scheme, CentreBaseVectorsOfSkewQuad) {
    const MappingScheme s = MappingScheme::build(skew_quad(), SchemeKind::pascal6);
    const Jacobian j = jacobian(s, NaturalPoint::Zero());
    Eigen::Matrix2d expect;
    expect << 3, -1, -0.5, 2;
    EXPECT_LT((j.cov - expect).norm(), 1e-10);
    EXPECT_NEAR(j.det, 5.5, 1e-10);
}

TEST(Scheme, SerendipityClosedFormMatchesInvertedBasis) {
    const MappingScheme s = MappingScheme::build(skew_quad(), SchemeKind::serendipity8);
    for (double a : {-1.0, -0.3, 0.0, 0.6, 1.0})
        for (double b : {-1.0, -0.5, 0.2, 1.0}) {
            const NaturalPoint t(a, b);
            const auto closed = serendipity_shapes(t);
            const Eigen::VectorXd inv = s.shapes().values(t);
            for (int q = 0; q < 8; ++q) EXPECT_NEAR(closed[q], inv(q), 1e-13);
        }
}

TEST(Scheme, ShapesAndParamsGiveSameMap) {
    for (const auto& q : random_quads(20, 12))
        for (SchemeKind k : kSchemes) {
            const MappingScheme s = MappingScheme::build(q, k);
            for (double a : {-1.0, -0.4, 0.3, 1.0})
                for (double b : {-0.8, 0.0, 1.0}) {
                    const NaturalPoint t(a, b);
                    EXPECT_LT((map_point(s, t) - map_point_by_shapes(s, t)).norm(), 1e-10 * q.diameter());
                }
        }
}

TEST(Scheme, PartitionOfUnityAndKroneckerOnRandomQuads) {
    for (const auto& q : random_quads(100, 13))
        for (SchemeKind k : kSchemes) {
            const MappingScheme s = MappingScheme::build(q, k);
            ASSERT_FALSE(s.fell_back());
            EXPECT_LE(s.shapes().partition_of_unity_residual(), 1e-12);
            EXPECT_LE(s.shapes().kronecker_residual(), 1e-10);
        }
}

TEST(Scheme, VerticesAreMappedFromCorners) {
    for (const auto& q : random_quads(20, 14))
        for (SchemeKind k : kSchemes) {
            const MappingScheme s = MappingScheme::build(q, k);
            for (int p = 0; p < 4; ++p)
                EXPECT_LT((map_point(s, corner_naturals()[p]) - q.vertex(p)).norm(), 1e-10 * q.diameter());
        }
}

TEST(Scheme, ParallelogramPascalFallsBack) {
    const QuadGeometry q = QuadGeometry::from_vertices({Point(0, 0), Point(2, 0), Point(3, 1), Point(1, 1)});
    const MappingScheme s = MappingScheme::build(q, SchemeKind::pascal6);
    EXPECT_TRUE(s.fell_back());
    EXPECT_EQ(s.kind(), SchemeKind::bilinear);
    EXPECT_EQ(s.requested(), SchemeKind::pascal6);
    EXPECT_FALSE(s.fallback_reason().empty());
    SchemeOptions strict;
    strict.allow_fallback = false;
    EXPECT_THROW(MappingScheme::build(q, SchemeKind::pascal6, strict), DegeneratePolesError);
}

TEST(Scheme, TrapezoidHasOneParallelPair) {
    const QuadGeometry q = QuadGeometry::from_vertices({Point(0, 0), Point(4, 0), Point(3, 1), Point(1, 1)});
    const PoleSet ps = compute_poles_cartesian(q);
    EXPECT_TRUE(ps.parallel[0]);
    EXPECT_FALSE(ps.parallel[1]);
    EXPECT_LT((ps.p6_xy - Point(2, 2)).norm(), 1e-12);
}

TEST(Scheme, PascalNodeTableNeedsSixRows) {
    EXPECT_THROW(pascal_interpolation_matrix(NaturalNodeTable::corners()), InputError);
}

TEST(Scheme, SingularJacobianDetected) {
    // vertex 3 on the segment 2-4: the corner Jacobian at (1,1) is singular
    const QuadGeometry q = QuadGeometry::from_vertices({Point(0, 0), Point(2, 0), Point(1, 1), Point(0, 2)});
    const MappingScheme s = MappingScheme::build(q, SchemeKind::bilinear);
    EXPECT_THROW(jacobian(s, NaturalPoint(1, 1)), SingularJacobianError);
    EXPECT_NO_THROW(jacobian(s, NaturalPoint(0, 0)));
}

TEST(Scheme, JacobianMatchesCentralDifferences) {
    const double h = 1e-6;
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const auto& q : random_quads(30, 16))
        for (SchemeKind k : kSchemes) {
            const MappingScheme s = MappingScheme::build(q, k);
            for (int n = 0; n < 10; ++n) {
                const NaturalPoint t(u(rng), u(rng));
                Eigen::Matrix2d fd;
                fd.col(0) = (map_point(s, t + NaturalPoint(h, 0)) - map_point(s, t - NaturalPoint(h, 0))) / (2 * h);
                fd.col(1) = (map_point(s, t + NaturalPoint(0, h)) - map_point(s, t - NaturalPoint(0, h))) / (2 * h);
                const Jacobian j = jacobian(s, t);
                EXPECT_LE((j.cov - fd).norm(), 1e-6 * j.cov.norm());
                EXPECT_NEAR(j.det, j.cov.determinant(), 1e-12 * q.diameter() * q.diameter());
            }
        }
}

TEST(Scheme, ContravariantIsInverse) {
    const MappingScheme s = MappingScheme::build(skew_quad(), SchemeKind::pascal6);
    const Jacobian j = jacobian(s, NaturalPoint(0.3, -0.7));
    EXPECT_LT((j.contravariant() * j.cov - Eigen::Matrix2d::Identity()).norm(), 1e-13);
}

TEST(Scheme, InterpolationInverseConditionOfCorners) {
    const auto inv = invert_interpolation(interpolation_matrix(basis_for(SchemeKind::bilinear), NaturalNodeTable::corners()));
    EXPECT_NEAR(inv.condition_1norm, 4.0, 1e-12);
}

// ---------------------------------------------------------------- poles

TEST(Poles, SkewQuadCartesianPoles) {
    const PoleSet ps = compute_poles_cartesian(skew_quad());
    EXPECT_FALSE(ps.any_parallel());
    EXPECT_LT((ps.p5_xy - Point(10, 0)).norm(), 1e-12);
    EXPECT_LT((ps.p6_xy - Point(0, 6)).norm(), 1e-12);
}

TEST(Poles, DefaultGuessRoundTrips) {
    const QuadGeometry q = skew_quad();
    const PoleSet ps = compute_poles(q);
    ASSERT_TRUE(ps.naturals_set);
    const GeneralizedParams g = bilinear_params(q);
    EXPECT_LT((g.evaluate(ps.p5_nat) - ps.p5_xy).norm(), 1e-10);
    EXPECT_LT((g.evaluate(ps.p6_nat) - ps.p6_xy).norm(), 1e-10);
}

TEST(Poles, BothNaturalPoleSetsAreRoots) {
    const QuadGeometry q = skew_quad();
    const GeneralizedParams g = bilinear_params(q);
    const std::array<std::pair<NaturalPoint, NaturalPoint>, 2> sets{
        std::pair{NaturalPoint(4, 1), NaturalPoint(1, 3)}, std::pair{NaturalPoint(1.5, -1), NaturalPoint(-1, 1.4)}};
    for (const auto& [g5, g6] : sets) {
        const PoleSet ps = compute_poles(q, g5, g6);
        EXPECT_LT((ps.p5_nat - g5).norm(), 1e-10);
        EXPECT_LT((ps.p6_nat - g6).norm(), 1e-10);
        EXPECT_LT((g.evaluate(ps.p5_nat) - Point(10, 0)).norm(), 1e-10);
        EXPECT_LT((g.evaluate(ps.p6_nat) - Point(0, 6)).norm(), 1e-10);
        // both sets describe the same geometry
        SchemeOptions opt;
        opt.pole5_guess = g5;
        opt.pole6_guess = g6;
        const MappingScheme s = MappingScheme::build(q, SchemeKind::pascal6, opt);
        EXPECT_FALSE(s.fell_back());
        EXPECT_LT((map_point(s, NaturalPoint(0.25, -0.5)) - g.evaluate(NaturalPoint(0.25, -0.5))).norm(), 1e-9);
    }
}

TEST(Poles, PerturbedStartConverges) {
    const QuadGeometry q = skew_quad();
    const NaturalPoint t = solve_pole_natural(q, Point(10, 0), NaturalPoint(3.7, 1.2));
    EXPECT_LT((bilinear_params(q).evaluate(t) - Point(10, 0)).norm(), 1e-10);
}

TEST(Poles, RandomQuadsRoundTrip) {
    for (const auto& q : random_quads(50, 17)) {
        const PoleSet ps = compute_poles(q);
        const GeneralizedParams g = bilinear_params(q);
        const double scale = q.diameter() + (ps.p5_xy - g.center()).norm() + (ps.p6_xy - g.center()).norm();
        EXPECT_LT((g.evaluate(ps.p5_nat) - ps.p5_xy).norm(), 1e-10 * scale);
        EXPECT_LT((g.evaluate(ps.p6_nat) - ps.p6_xy).norm(), 1e-10 * scale);
    }
}

TEST(Poles, PascalMatchesBilinearOnGrid) {
    for (const auto& q : random_quads(50, 18)) {
        const MappingScheme p = MappingScheme::build(q, SchemeKind::pascal6);
        const MappingScheme b = MappingScheme::build(q, SchemeKind::bilinear);
        ASSERT_FALSE(p.fell_back());
        for (int i = 0; i < 9; ++i)
            for (int j = 0; j < 9; ++j) {
                const NaturalPoint t(-1 + 0.25 * i, -1 + 0.25 * j);
                EXPECT_LE((map_point_by_shapes(p, t) - map_point(b, t)).norm(), 1e-9 * q.diameter());
            }
    }
}
