#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "fuzzreg/error.hpp"
#include "fuzzreg/metrics.hpp"
#include "fuzzreg/registration.hpp"
#include "fixtures.hpp"

using namespace fuzzreg;

namespace {

// Dense barycentric sampling; an upper bound that converges from above.
double sampled_triangle_distance(const Point3& p, const Point3& a, const Point3& b, const Point3& c) {
    double best = std::numeric_limits<double>::infinity();
    const int n = 300;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; i + j <= n; ++j) {
            const Point3 q = a + (double(i) / n) * (b - a) + (double(j) / n) * (c - a);
            best = std::min(best, (q - p).norm());
        }
    return best;
}

}  // namespace

TEST(Metrics, MeanVertexDistance) {
    SimilarityTransform a, b;
    b.t = {0, 0, 2};
    const PointSet m{{0, 0, 0}, {1, 1, 1}};
    EXPECT_DOUBLE_EQ(mean_vertex_distance(a, b, m), 2.0);
    EXPECT_DOUBLE_EQ(mean_vertex_distance(a, a, m), 0.0);
    EXPECT_THROW(mean_vertex_distance(a, b, PointSet{}), DegenerateInput);
}

TEST(Metrics, PointTriangleRegions) {
    const Point3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
    EXPECT_DOUBLE_EQ(point_triangle_distance({0.2, 0.2, 3}, a, b, c), 3.0);       // face
    EXPECT_DOUBLE_EQ(point_triangle_distance({-1, -1, 0}, a, b, c), std::sqrt(2.0));  // vertex
    EXPECT_DOUBLE_EQ(point_triangle_distance({0.5, -2, 0}, a, b, c), 2.0);          // edge
    EXPECT_NEAR(point_triangle_distance({1, 1, 0}, a, b, c), std::sqrt(0.5), 1e-15);  // hypotenuse
}

TEST(Metrics, PointTriangleAgainstSampling) {
    Rng rng(1);
    for (int t = 0; t < 40; ++t) {
        Point3 v[4];
        for (auto& p : v) p = Point3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        const double exact = point_triangle_distance(v[3], v[0], v[1], v[2]);
        const double sampled = sampled_triangle_distance(v[3], v[0], v[1], v[2]);
        EXPECT_LE(exact, sampled + 1e-12);
        EXPECT_NEAR(exact, sampled, 1e-2);
    }
}

TEST(Metrics, DegenerateTriangle) {
    const Point3 a(0, 0, 0), b(1, 0, 0), c(2, 0, 0);
    EXPECT_DOUBLE_EQ(point_triangle_distance({1.5, 1, 0}, a, b, c), 1.0);
    EXPECT_DOUBLE_EQ(point_triangle_distance({3, 0, 0}, a, b, c), 1.0);
    EXPECT_DOUBLE_EQ(point_triangle_distance({0, 0, 2}, a, a, a), 2.0);
}

TEST(Metrics, CloudToCube) {
    const Mesh cube = fuzzreg::testing::box_mesh({0, 0, 0}, {1, 1, 1});
    const PointSet pts{{0.5, 0.5, 0.5}, {0.5, 0.5, 3}, {0.2, 0.3, 1}};
    const auto d = cloud_to_mesh_distance(pts, cube);
    EXPECT_DOUBLE_EQ(d.per_point[0], 0.5);
    EXPECT_DOUBLE_EQ(d.per_point[1], 2.0);
    EXPECT_NEAR(d.per_point[2], 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(d.max, 2.0);
    EXPECT_DOUBLE_EQ(d.mean, 2.5 / 3);
    EXPECT_THROW(cloud_to_mesh_distance(pts, Mesh{}), DegenerateInput);
}

TEST(Metrics, Axis) {
    EXPECT_EQ(parse_axis("y"), Axis::Y);
    EXPECT_EQ(axis_name(Axis::Z), 'z');
    EXPECT_THROW(parse_axis("w"), InvalidParameter);
    EXPECT_EQ(axis_vector(Axis::X), Point3::UnitX());
}

TEST(Sweep, Angles) {
    SweepSpec s;
    EXPECT_EQ(s.angles().size(), 13u);
    EXPECT_EQ(s.angles().back(), 60.0);
    s.step_degrees = 0;
    EXPECT_THROW(s.validate(), InvalidParameter);
}

TEST(Sweep, OracleRegistrarAlwaysSucceeds) {
    // Returns the adjusted ground truth exactly, so every error is ~0.
    const PointSet model = fuzzreg::testing::creature(300, 2);
    SimilarityTransform gt;
    gt.t = {0.4, 0, 0};
    const PointSet scene = transform_apply(transform_inverse(gt), model);
    SweepSpec spec;
    spec.step_degrees = 20;
    std::size_t calls = 0;
    const Registrar reg = [&](std::span<const Point3> src, std::span<const Point3> tgt, const SimilarityTransform&) {
        // src and tgt are index-aligned here, so the closed-form fit is exact
        ++calls;
        return rigid_fit(src, tgt);
    };
    const auto rep = rotation_sweep(model, scene, gt, scene, spec, reg);
    EXPECT_EQ(calls, 4u);
    EXPECT_DOUBLE_EQ(rep.success_rate(), 1.0);
    for (const auto& t : rep.trials) EXPECT_LT(t.mean_error, 1e-9);
}

TEST(Sweep, IdentityRegistrarFailsBeyondZero) {
    const PointSet model = fuzzreg::testing::creature(300, 2);
    SweepSpec spec;
    spec.step_degrees = 30;
    const Registrar reg = [](std::span<const Point3>, std::span<const Point3>, const SimilarityTransform& t0) {
        return t0;
    };
    const auto rep = rotation_sweep(model, model, SimilarityTransform::identity(), model, spec, reg);
    ASSERT_EQ(rep.trials.size(), 3u);
    EXPECT_TRUE(rep.trials[0].success);
    EXPECT_FALSE(rep.trials[1].success);
    EXPECT_NEAR(rep.success_rate(), 1.0 / 3, 1e-15);
    EXPECT_EQ(success_rate(rep, 1e9), 1.0);
}

TEST(Sweep, ThrowingRegistrarCountsAsFailure) {
    const PointSet model = fuzzreg::testing::creature(100, 2);
    SweepSpec spec;
    spec.max_degrees = 5;
    const Registrar reg = [](std::span<const Point3>, std::span<const Point3>, const SimilarityTransform&)
        -> SimilarityTransform { throw NumericalFailure("x"); };
    const auto rep = rotation_sweep(model, model, SimilarityTransform::identity(), model, spec, reg);
    for (const auto& t : rep.trials) {
        EXPECT_TRUE(t.failed);
        EXPECT_TRUE(std::isinf(t.mean_error));
    }
}

TEST(RigidFit, RecoversTransform) {
    Rng rng(3);
    const PointSet a = fuzzreg::testing::random_points(30, rng);
    const auto T = fuzzreg::testing::random_transform(rng, 3.0, 1.0, false);
    const auto fit = rigid_fit(a, transform_apply(T, a));
    EXPECT_LE((fit.matrix() - T.matrix()).cwiseAbs().maxCoeff(), 1e-12);
    bool failed = false;
    rigid_fit(PointSet{{0, 0, 0}, {1, 0, 0}}, PointSet{{0, 0, 0}, {0, 1, 0}}, &failed);
    EXPECT_TRUE(failed);
}

TEST(Icp, ConvergesFromSmallOffset) {
    const PointSet model = fuzzreg::testing::creature(1000, 4);
    SimilarityTransform gt;
    gt.q = Quaternion::from_axis_angle({0, 1, 0}, 0.1);
    gt.t = {0.02, 0.01, 0};
    const PointSet src = transform_apply(transform_inverse(gt), model);
    const auto r = icp_baseline(src, model);
    EXPECT_TRUE(r.converged);
    EXPECT_LT(mean_vertex_distance(r.theta, gt, src), 1e-6);
    for (std::size_t i = 1; i < r.mse_trace.size(); ++i) EXPECT_LE(r.mse_trace[i], r.mse_trace[i - 1] + 1e-15);
}

TEST(Icp, FailsFromLargeRotation) {
    const PointSet model = fuzzreg::testing::creature(1000, 4);
    SimilarityTransform gt;
    gt.q = Quaternion::from_axis_angle({1, 0, 0}, 2.5);
    const PointSet src = transform_apply(transform_inverse(gt), model);
    const auto r = icp_baseline(src, model, {}, centroid_alignment(src, model));
    EXPECT_GT(mean_vertex_distance(r.theta, gt, src), 0.01 * Aabb::of(model).diagonal());
}
