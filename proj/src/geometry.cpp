#include "fuzzreg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fuzzreg/error.hpp"
#include "fuzzreg/random.hpp"

namespace fuzzreg {

Quaternion Quaternion::from_axis_angle(const Point3& axis, double radians) {
    const double n = axis.norm();
    if (n == 0.0) throw InvalidParameter("rotation axis must be nonzero");
    const Point3 a = axis / n;
    const double h = 0.5 * radians;
    const double sh = std::sin(h);
    return {std::cos(h), a.x() * sh, a.y() * sh, a.z() * sh};
}

Quaternion Quaternion::from_matrix(const Mat3& rotation) {
    const Eigen::Quaterniond e(rotation);
    Quaternion q{e.w(), e.x(), e.y(), e.z()};
    if (q.w < 0.0) q = {-q.w, -q.x, -q.y, -q.z};
    return q;
}

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quaternion Quaternion::normalized() const {
    const double n = norm();
    if (n == 0.0 || !std::isfinite(n)) throw InvalidParameter("zero or non-finite quaternion");
    return {w / n, x / n, y / n, z / n};
}

Mat3 Quaternion::rotation_matrix() const {
    const Quaternion u = normalized();
    const double ww = u.w * u.w, xx = u.x * u.x, yy = u.y * u.y, zz = u.z * u.z;
    const double wx = u.w * u.x, wy = u.w * u.y, wz = u.w * u.z;
    const double xy = u.x * u.y, xz = u.x * u.z, yz = u.y * u.z;
    Mat3 r;
    r << ww + xx - yy - zz, 2.0 * (xy - wz), 2.0 * (xz + wy),
        2.0 * (xy + wz), ww - xx + yy - zz, 2.0 * (yz - wx),
        2.0 * (xz - wy), 2.0 * (yz + wx), ww - xx - yy + zz;
    return r;
}

Quaternion operator*(const Quaternion& a, const Quaternion& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Point3 quat_rotate(const Quaternion& q, const Point3& p) { return q.rotation_matrix() * p; }

SimilarityTransform SimilarityTransform::from_parts(const Mat3& rotation, const Point3& translation,
                                                    double scale) {
    if (!(scale > 0.0)) throw InvalidParameter("scale must be positive");
    return {Quaternion::from_matrix(rotation), translation, scale};
}

Point3 SimilarityTransform::apply(const Point3& p) const { return s * (q.rotation_matrix() * p) + t; }

Mat3 SimilarityTransform::linear() const { return s * q.rotation_matrix(); }

Mat4 SimilarityTransform::matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = linear();
    m.topRightCorner<3, 1>() = t;
    return m;
}

PointSet transform_apply(const SimilarityTransform& T, std::span<const Point3> points) {
    const Mat3 a = T.linear();
    PointSet out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(a * p + T.t);
    return out;
}

SimilarityTransform transform_compose(const SimilarityTransform& A, const SimilarityTransform& B) {
    SimilarityTransform c;
    c.q = A.q.normalized() * B.q.normalized();
    c.s = A.s * B.s;
    c.t = A.s * (A.q.rotation_matrix() * B.t) + A.t;
    return c;
}

SimilarityTransform transform_inverse(const SimilarityTransform& T) {
    if (!(T.s > 0.0)) throw InvalidParameter("inverse requires a positive scale");
    const Quaternion u = T.q.normalized();
    SimilarityTransform inv;
    inv.q = {u.w, -u.x, -u.y, -u.z};
    inv.s = 1.0 / T.s;
    inv.t = -(inv.q.rotation_matrix() * T.t) / T.s;
    return inv;
}

Ray Ray::through(const Point3& direction) {
    const double n = direction.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw InvalidParameter("ray direction must be nonzero");
    return {direction / n};
}

Aabb Aabb::of(std::span<const Point3> points) {
    if (points.empty()) throw DegenerateInput("bounding box of an empty set");
    Aabb box{points.front(), points.front()};
    for (const auto& p : points) {
        box.min = box.min.cwiseMin(p);
        box.max = box.max.cwiseMax(p);
    }
    return box;
}

bool Aabb::contains(const Point3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
}

SimilarityTransform Normalization::as_transform() const {
    return {Quaternion::identity(), -scale * center, scale};
}

NormalizedPair normalize_to_unit_cube(std::span<const Point3> target, std::span<const Point3> source) {
    if (target.empty()) throw DegenerateInput("target set is empty");
    const Aabb box = Aabb::of(target);
    const double edge = box.largest_edge();
    if (!(edge > 0.0)) throw DegenerateInput("target set has zero extent");

    NormalizedPair out;
    out.normalization = {box.center(), 1.0 / edge};
    out.target.reserve(target.size());
    out.source.reserve(source.size());
    for (const auto& p : target) out.target.push_back(out.normalization.apply(p));
    for (const auto& p : source) out.source.push_back(out.normalization.apply(p));
    return out;
}

SimilarityTransform denormalize_transform(const SimilarityTransform& theta_unit, const Normalization& n) {
    // N^-1(theta(N x)) = (1/k)(s R (k (x - c)) + t) + c = s R x + (t/k + c - s R c)
    SimilarityTransform out;
    out.q = theta_unit.q.normalized();
    out.s = theta_unit.s;
    out.t = theta_unit.t / n.scale + n.center - theta_unit.s * (out.q.rotation_matrix() * n.center);
    return out;
}

SimilarityTransform normalize_transform(const SimilarityTransform& theta, const Normalization& n) {
    // N(theta(N^-1 u)) = k (s R (u/k + c) + t - c) = s R u + k (s R c + t - c)
    SimilarityTransform out;
    out.q = theta.q.normalized();
    out.s = theta.s;
    out.t = n.scale * (theta.s * (out.q.rotation_matrix() * n.center) + theta.t - n.center);
    return out;
}

double point_ray_distance(const Point3& x, const Ray& r) {
    // cross product: no cancellation for points far along the ray
    return x.cross(r.d).norm();
}

std::vector<std::size_t> subsample_indices(std::size_t total, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InvalidParameter("subsample count must be at least 1");
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (n >= total) return idx;

    Rng rng(seed);
    // partial Fisher-Yates: the first n slots end up holding the draw
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return idx;
}

PointSet subsample(std::span<const Point3> points, std::size_t n, std::uint64_t seed) {
    const auto idx = subsample_indices(points.size(), n, seed);
    PointSet out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(points[i]);
    return out;
}

Point3 centroid(std::span<const Point3> points) {
    if (points.empty()) throw DegenerateInput("centroid of an empty set");
    Point3 c = Point3::Zero();
    for (const auto& p : points) c += p;
    return c / static_cast<double>(points.size());
}

}  // namespace fuzzreg
