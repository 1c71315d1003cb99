#pragma once

// Synthetic shapes and scenes shared by the unit and acceptance suites.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "fuzzreg/geometry.hpp"
#include "fuzzreg/random.hpp"
#include "fuzzreg/voxelizer.hpp"

namespace fuzzreg::testing {

inline Point3 random_unit(Rng& rng) {
    for (;;) {
        const Point3 v(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        const double n = v.norm();
        if (n > 1e-3 && n <= 1.0) return v / n;
    }
}

inline PointSet random_points(std::size_t n, Rng& rng, double lo = -0.5, double hi = 0.5) {
    PointSet out;
    for (std::size_t i = 0; i < n; ++i) out.emplace_back(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi));
    return out;
}

inline SimilarityTransform random_transform(Rng& rng, double max_angle, double max_shift, bool with_scale) {
    SimilarityTransform T;
    T.q = Quaternion::from_axis_angle(random_unit(rng), rng.uniform(-max_angle, max_angle));
    T.t = Point3(rng.uniform(-max_shift, max_shift), rng.uniform(-max_shift, max_shift),
                 rng.uniform(-max_shift, max_shift));
    T.s = with_scale ? std::exp(rng.uniform(-0.5, 0.5)) : 1.0;
    return T;
}

// Surface samples of an asymmetric "creature": ellipsoid body, offset head,
// bent tail, one dorsal fin and two legs of different length. No rotational
// or mirror symmetry.
inline PointSet creature(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    PointSet pts;
    pts.reserve(n);
    const double pi = std::numbers::pi;
    auto ellipsoid = [&](const Point3& c, const Point3& r) {
        const Point3 u = random_unit(rng);
        return Point3(c + r.cwiseProduct(u));
    };
    auto cylinder = [&](const Point3& a, const Point3& b, double r0, double r1) {
        const Point3 axis = (b - a).normalized();
        const Point3 ref = std::abs(axis.z()) < 0.9 ? Point3::UnitZ() : Point3::UnitX();
        const Point3 e1 = axis.cross(ref).normalized();
        const Point3 e2 = axis.cross(e1);
        const double s = rng.uniform();
        const double ang = rng.uniform(0.0, 2.0 * pi);
        const double r = r0 + (r1 - r0) * s;
        return Point3(a + s * (b - a) + r * (std::cos(ang) * e1 + std::sin(ang) * e2));
    };
    // rough area weights
    const double w[] = {0.42, 0.14, 0.16, 0.10, 0.10, 0.08};
    double cum[6];
    double acc = 0.0;
    for (int i = 0; i < 6; ++i) cum[i] = (acc += w[i]);
    while (pts.size() < n) {
        const double pick = rng.uniform() * acc;
        int part = 0;
        while (part < 5 && pick > cum[part]) ++part;
        switch (part) {
            case 0: pts.push_back(ellipsoid({0.0, 0.0, 0.0}, {1.0, 0.45, 0.38})); break;
            case 1: pts.push_back(ellipsoid({1.15, 0.12, 0.42}, {0.32, 0.22, 0.2})); break;
            case 2: {
                // tail: two segments bending sideways and up
                if (rng.uniform() < 0.6) {
                    pts.push_back(cylinder({-0.85, 0.0, 0.05}, {-1.6, -0.35, 0.25}, 0.18, 0.09));
                } else {
                    pts.push_back(cylinder({-1.6, -0.35, 0.25}, {-2.0, -0.3, 0.65}, 0.09, 0.03));
                }
                break;
            }
            case 3: pts.push_back(cylinder({0.35, 0.25, -0.25}, {0.45, 0.35, -0.95}, 0.1, 0.08)); break;
            case 4: pts.push_back(cylinder({-0.3, -0.2, -0.25}, {-0.45, -0.3, -0.7}, 0.11, 0.09)); break;
            default: {
                // dorsal fin: thin triangle plate
                double a = rng.uniform(), b = rng.uniform();
                if (a + b > 1.0) {
                    a = 1.0 - a;
                    b = 1.0 - b;
                }
                const Point3 p0(-0.5, 0.0, 0.3), p1(0.4, 0.0, 0.3), p2(-0.3, 0.08, 0.85);
                pts.push_back(p0 + a * (p1 - p0) + b * (p2 - p0));
                break;
            }
        }
    }
    return pts;
}

struct NoisyScan {
    PointSet points;      // source: partial, noisy, with outliers
    PointSet clean;       // full model expressed in the source frame
    SimilarityTransform gt;  // maps the source frame onto the model
};

// Source = random `keep` fraction of the model, moved by gt^-1, plus isotropic
// Gaussian noise (fraction of the model bbox diagonal) and uniform outliers in
// the 1.5x box (count = outlier_fraction * kept points).
inline NoisyScan noisy_scan(const PointSet& model, const SimilarityTransform& gt, double keep, double noise_frac,
                            double outlier_frac, std::uint64_t seed) {
    Rng rng(seed);
    const Aabb box = Aabb::of(model);
    const double diag = box.diagonal();
    const SimilarityTransform inv = transform_inverse(gt);
    NoisyScan scan;
    scan.gt = gt;
    scan.clean = transform_apply(inv, model);
    const auto kept = subsample_indices(model.size(), static_cast<std::size_t>(keep * model.size()), rng.next_u64());
    for (auto i : kept) {
        const Point3 n(rng.normal(), rng.normal(), rng.normal());
        scan.points.push_back(inv.apply(model[i] + noise_frac * diag * n));
    }
    const auto n_out = static_cast<std::size_t>(outlier_frac * kept.size());
    const Point3 c = box.center();
    const Point3 half = 0.75 * box.extent();
    for (std::size_t k = 0; k < n_out; ++k) {
        const Point3 u(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        scan.points.push_back(inv.apply(c + half.cwiseProduct(u)));
    }
    return scan;
}

// Axis-aligned box as 12 outward-facing triangles.
inline Mesh box_mesh(const Point3& lo, const Point3& hi) {
    Mesh m;
    for (int i = 0; i < 8; ++i) {
        m.vertices.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z());
    }
    const std::uint32_t quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                                       {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
    for (const auto& q : quads) {
        m.faces.push_back({q[0], q[1], q[2]});
        m.faces.push_back({q[0], q[2], q[3]});
    }
    return m;
}

inline Mesh merge(const Mesh& a, const Mesh& b) {
    Mesh m = a;
    const auto off = static_cast<std::uint32_t>(a.vertices.size());
    m.vertices.insert(m.vertices.end(), b.vertices.begin(), b.vertices.end());
    for (auto f : b.faces) m.faces.push_back({f[0] + off, f[1] + off, f[2] + off});
    return m;
}

// UV sphere.
inline Mesh sphere_mesh(const Point3& c, double r, int stacks, int slices) {
    Mesh m;
    const double pi = std::numbers::pi;
    for (int i = 0; i <= stacks; ++i) {
        const double phi = pi * i / stacks;
        for (int j = 0; j < slices; ++j) {
            const double th = 2.0 * pi * j / slices;
            m.vertices.push_back(c + r * Point3(std::sin(phi) * std::cos(th), std::sin(phi) * std::sin(th), std::cos(phi)));
        }
    }
    auto id = [&](int i, int j) { return static_cast<std::uint32_t>(i * slices + (j % slices)); };
    for (int i = 0; i < stacks; ++i) {
        for (int j = 0; j < slices; ++j) {
            m.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    return m;
}

}  // namespace fuzzreg::testing
