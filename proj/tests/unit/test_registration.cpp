#include <cmath>

#include <gtest/gtest.h>

#include "fuzzreg/error.hpp"
#include "fuzzreg/registration.hpp"
#include "fixtures.hpp"

using namespace fuzzreg;

namespace {

double mean_err(const SimilarityTransform& a, const SimilarityTransform& b, const PointSet& pts) {
    double s = 0.0;
    for (const auto& p : pts) s += (a.apply(p) - b.apply(p)).norm();
    return s / pts.size();
}

RegistrationOptions quick(TransformMode mode) {
    auto o = default_options(mode);
    o.schedule.sigma_final = 0.05;
    return o;
}

}  // namespace

TEST(Ladder, Examples) {
    EXPECT_EQ(make_sigma_ladder(0.5, 0.02, 2.0), (std::vector<double>{0.5, 0.25, 0.125, 0.0625, 0.03125, 0.02}));
    EXPECT_EQ(make_sigma_ladder(0.1, 0.1, 2.0), std::vector<double>{0.1});
    EXPECT_THROW(make_sigma_ladder(0.1, 0.2, 2.0), InvalidParameter);
    EXPECT_THROW(make_sigma_ladder(0.5, 0.1, 1.0), InvalidParameter);
}

TEST(Schedule, FractionPadding) {
    Schedule s;
    EXPECT_EQ(s.fraction_at(0), 0.1);
    EXPECT_EQ(s.fraction_at(3), 1.0);
    EXPECT_EQ(s.fraction_at(9), 1.0);
    s.resolution_fractions = {0.5, 0.8};
    EXPECT_THROW(s.validate(), InvalidParameter);
}

TEST(Registration, CentroidAlignment) {
    const PointSet a{{0, 0, 0}, {2, 0, 0}}, b{{5, 5, 5}, {7, 5, 5}};
    const auto T = centroid_alignment(a, b);
    EXPECT_LE((T.t - Point3(5, 5, 5)).norm(), 1e-15);
    EXPECT_EQ(T.s, 1.0);
}

TEST(Registration, RecoversSmallRigidMotion) {
    const PointSet model = fuzzreg::testing::creature(800, 3);
    SimilarityTransform gt;
    gt.q = Quaternion::from_axis_angle({0.2, 1.0, 0.1}, 0.3);
    gt.t = {0.3, -0.1, 0.2};
    const PointSet src = transform_apply(transform_inverse(gt), model);
    const auto r = register_points(src, model, quick(TransformMode::Rigid));
    EXPECT_LT(mean_err(r.theta, gt, src), 0.01 * Aabb::of(model).diagonal());
    EXPECT_TRUE(r.converged);
    for (const auto& l : r.levels) EXPECT_LE(l.final_energy, l.initial_energy);
}

TEST(Registration, RecoversScale) {
    const PointSet model = fuzzreg::testing::creature(800, 4);
    SimilarityTransform gt;
    gt.q = Quaternion::from_axis_angle({1.0, 0.3, 0.1}, 0.25);
    gt.s = 1.5;
    const PointSet src = transform_apply(transform_inverse(gt), model);
    const auto r = register_points(src, model, quick(TransformMode::Similarity));
    EXPECT_NEAR(r.theta.s, 1.5, 0.03);
}

TEST(Registration, IdenticalSetsStayPut) {
    const PointSet model = fuzzreg::testing::creature(500, 5);
    const auto r = register_points(model, model, quick(TransformMode::Rigid));
    EXPECT_LT(mean_err(r.theta, SimilarityTransform::identity(), model), 1e-4);
}

TEST(Registration, Deterministic) {
    const PointSet model = fuzzreg::testing::creature(600, 6);
    SimilarityTransform gt;
    gt.q = Quaternion::from_axis_angle({0, 0, 1}, 0.4);
    const PointSet src = transform_apply(gt, model);
    const auto a = register_points(src, model, quick(TransformMode::Rigid));
    const auto b = register_points(src, model, quick(TransformMode::Rigid));
    EXPECT_EQ(a.theta.matrix(), b.theta.matrix());
    ASSERT_EQ(a.levels.size(), b.levels.size());
    for (std::size_t i = 0; i < a.levels.size(); ++i) EXPECT_EQ(a.levels[i].final_energy, b.levels[i].final_energy);
}

TEST(Registration, SerialBackendAgrees) {
    const PointSet model = fuzzreg::testing::creature(400, 8);
    SimilarityTransform gt;
    gt.q = Quaternion::from_axis_angle({1, 1, 0}, 0.2);
    const PointSet src = transform_apply(gt, model);
    auto o = quick(TransformMode::Rigid);
    const auto a = register_points(src, model, o);
    o.backend = KernelBackend::Serial;
    const auto b = register_points(src, model, o);
    EXPECT_LT(mean_err(a.theta, b.theta, src), 1e-6);
}

TEST(Registration, RejectsBadInput) {
    const PointSet model = fuzzreg::testing::creature(100, 9);
    EXPECT_THROW(register_points(PointSet{}, model, quick(TransformMode::Rigid)), DegenerateInput);
    auto o = quick(TransformMode::Rigid);
    o.schedule.sigma0 = -1.0;
    EXPECT_THROW(register_points(model, model, o), InvalidParameter);
}

TEST(Registration, RaysFromSmallOffset) {
    PointSet scene = fuzzreg::testing::creature(300, 10);
    SimilarityTransform gt;
    gt.t = {0, 0, 6};
    RayBundle rays;
    for (const auto& p : scene) rays.push_back(Ray::through(gt.apply(p)));
    SimilarityTransform init = gt;
    init.t += Point3(0.05, -0.03, 0.1);
    const auto r = register_rays(scene, rays, default_ray_options(), init);
    double err = 0.0;
    for (const auto& p : scene) {
        const Point3 a = r.theta.apply(p), b = gt.apply(p);
        err += (a.head<2>() / a.z() - b.head<2>() / b.z()).norm();
    }
    EXPECT_LT(1000.0 * err / scene.size(), 1.0);  // pixels at f = 1000
    EXPECT_EQ(r.theta.s, 1.0);
}
