#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace fuzzreg {

using Point3 = Eigen::Vector3d;
using PointSet = std::vector<Point3>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Quaternion stored as (w, x, y, z). Storage may be unnormalized; every
// rotation built from it uses q / |q|.
struct Quaternion {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    static Quaternion identity() { return {}; }
    static Quaternion from_axis_angle(const Point3& axis, double radians);
    static Quaternion from_matrix(const Mat3& rotation);

    double norm() const;
    Quaternion normalized() const;
    Eigen::Vector4d as_vector() const { return {w, x, y, z}; }

    // Rotation matrix of q / |q|. Throws InvalidParameter for q = 0.
    Mat3 rotation_matrix() const;
};

Quaternion operator*(const Quaternion& a, const Quaternion& b);

// Rotates p by q / |q|. Throws InvalidParameter for the zero quaternion.
Point3 quat_rotate(const Quaternion& q, const Point3& p);

// x -> s * R(q) * x + t
struct SimilarityTransform {
    Quaternion q;
    Point3 t = Point3::Zero();
    double s = 1.0;

    static SimilarityTransform identity() { return {}; }
    static SimilarityTransform from_parts(const Mat3& rotation, const Point3& translation,
                                          double scale = 1.0);

    Point3 apply(const Point3& p) const;
    Mat3 linear() const;  // s * R
    Mat4 matrix() const;  // homogeneous, row-major semantics as usual for Eigen
};

PointSet transform_apply(const SimilarityTransform& T, std::span<const Point3> points);

// apply(compose(A, B), p) == apply(A, apply(B, p))
SimilarityTransform transform_compose(const SimilarityTransform& A, const SimilarityTransform& B);

SimilarityTransform transform_inverse(const SimilarityTransform& T);

struct Ray {
    Point3 d = Point3::UnitZ();

    // Normalizes the given direction. Throws InvalidParameter on zero length.
    static Ray through(const Point3& direction);
};

using RayBundle = std::vector<Ray>;

struct Aabb {
    Point3 min = Point3::Zero();
    Point3 max = Point3::Zero();

    static Aabb of(std::span<const Point3> points);

    Point3 center() const { return 0.5 * (min + max); }
    Point3 extent() const { return max - min; }
    double largest_edge() const { return extent().maxCoeff(); }
    double diagonal() const { return extent().norm(); }
    bool contains(const Point3& p) const;
};

// Maps x -> scale * (x - center).
struct Normalization {
    Point3 center = Point3::Zero();
    double scale = 1.0;

    Point3 apply(const Point3& p) const { return scale * (p - center); }
    Point3 invert(const Point3& p) const { return p / scale + center; }
    SimilarityTransform as_transform() const;
};

struct NormalizedPair {
    PointSet target;
    PointSet source;
    Normalization normalization;
};

// Normalization is computed from the target alone and applied to both sets.
NormalizedPair normalize_to_unit_cube(std::span<const Point3> target, std::span<const Point3> source);

// Unit-cube solution mapped back to original coordinates: N^-1 o theta o N.
SimilarityTransform denormalize_transform(const SimilarityTransform& theta_unit, const Normalization& n);

// Inverse of denormalize_transform: N o theta o N^-1.
SimilarityTransform normalize_transform(const SimilarityTransform& theta, const Normalization& n);

// Distance to the infinite line through the origin along r.d.
double point_ray_distance(const Point3& x, const Ray& r);

// Seeded uniform draw without replacement; selected points keep input order.
PointSet subsample(std::span<const Point3> points, std::size_t n, std::uint64_t seed);

// Sorted indices of the same draw (all indices when n >= total).
std::vector<std::size_t> subsample_indices(std::size_t total, std::size_t n, std::uint64_t seed);

Point3 centroid(std::span<const Point3> points);

}  // namespace fuzzreg
