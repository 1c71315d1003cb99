#pragma once

// Pairwise correspondence sums behind the fuzzy objective.
//
// Every kernel evaluates, for transformed source points z_i and target
// elements (points y_j or rays r_j), the normalized row sums
//   a_i = sum_j K_ij / rho_j        (proximity side)
// and column sums
//   b_j = sum_i K_ij / eta_i        (coverage side)
// plus, on request, their derivatives with respect to a twist of the
// similarity transform: (omega, t, log s), where omega is an infinitesimal
// rotation applied on the left, dz = omega x (z - t) + dt + (z - t) dlog s.
//
// `serial` is the plain double-loop reference. `parallel` is the blocked,
// fused OpenMP kernel used by the solver; its reductions have a fixed shape
// so results do not depend on the thread count.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fuzzreg/geometry.hpp"
#include "fuzzreg/spatial_grid.hpp"

namespace fuzzreg::kernels {

using Twist = Eigen::Matrix<double, 7, 1>;

struct PointInputs {
    std::span<const Point3> z;  // transformed source
    std::span<const Point3> p;  // z - t
    std::span<const Point3> y;  // target points
    std::span<const double> target_density;
    std::span<const double> source_density;
    // d(eta_i)/d(log s) / eta_i; empty when the scale is fixed
    std::span<const double> source_density_dlogs;
    Point3 t = Point3::Zero();
    double sigma = 1.0;
    double cutoff_radius = 0.0;  // <= 0 means exact
    // optional prebuilt grid over y with cell >= cutoff_radius (parallel kernel only)
    const SpatialGrid* target_grid = nullptr;
};

struct RayInputs {
    std::span<const Point3> z;
    std::span<const Point3> p;
    std::span<const Ray> r;
    std::span<const double> target_density;
    std::span<const double> source_density;
    // twist gradient of eta_i divided by eta_i; empty skips the term
    std::span<const Twist> source_density_grad;
    Point3 t = Point3::Zero();
    double sigma = 1.0;
};

struct Sums {
    std::vector<double> row;
    std::vector<double> col;
    std::vector<Twist> row_grad;  // filled only when gradients are requested
    std::vector<Twist> col_grad;
};

struct RaySourceDensity {
    std::vector<double> values;
    std::vector<Twist> grad_over_value;  // empty when gradients were not requested
};

namespace serial {
void point_sums(const PointInputs& in, Sums& out, bool with_grad);
void ray_sums(const RayInputs& in, Sums& out, bool with_grad);
RaySourceDensity ray_source_density(std::span<const Point3> z, std::span<const Point3> p, double sigma,
                                    bool with_grad);
}  // namespace serial

namespace parallel {
void point_sums(const PointInputs& in, Sums& out, bool with_grad);
void ray_sums(const RayInputs& in, Sums& out, bool with_grad);
RaySourceDensity ray_source_density(std::span<const Point3> z, std::span<const Point3> p, double sigma,
                                    bool with_grad);
}  // namespace parallel

// Twist of a point-side gradient G = d(value)/dz at a point with offset p = z - t.
inline Twist point_twist(const Point3& p, const Point3& g) {
    Twist tw;
    tw.head<3>() = p.cross(g);
    tw.segment<3>(3) = g;
    tw(6) = p.dot(g);
    return tw;
}

// 3x4 map from a quaternion increment to the left rotation increment omega,
// for storage q (not necessarily unit).
Eigen::Matrix<double, 3, 4> omega_from_dq(const Quaternion& q);

}  // namespace fuzzreg::kernels
