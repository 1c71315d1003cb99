#include "fuzzreg/camera.hpp"

#include <algorithm>
#include <cmath>

#include "fuzzreg/error.hpp"
#include "fuzzreg/kdtree.hpp"

namespace fuzzreg {

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidParameter("focal lengths must be positive");
    if (width < 1 || height < 1) throw InvalidParameter("image size must be at least 1x1");
    if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(fx) || !std::isfinite(fy)) {
        throw InvalidParameter("intrinsics must be finite");
    }
}

PixelMask::PixelMask(int width, int height) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw InvalidParameter("mask size must be non-negative");
    bits_.assign(static_cast<std::size_t>(width) * height, 0);
}

std::size_t PixelMask::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Ray pixel_to_ray(const CameraIntrinsics& K, double u, double v) {
    return Ray::through(Point3((u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0));
}

RayBundle mask_to_rays(const CameraIntrinsics& K, const PixelMask& mask, int stride) {
    K.validate();
    if (stride < 1) throw InvalidParameter("stride must be >= 1");
    if (mask.width() != K.width || mask.height() != K.height) {
        throw InvalidParameter("mask size does not match the camera image");
    }
    RayBundle rays;
    for (int v = 0; v < mask.height(); v += stride) {
        for (int u = 0; u < mask.width(); u += stride) {
            if (mask.get(u, v)) rays.push_back(pixel_to_ray(K, u, v));
        }
    }
    return rays;
}

std::vector<Projection> project_points(const CameraIntrinsics& K, const SimilarityTransform& theta,
                                       std::span<const Point3> points) {
    std::vector<Projection> out(points.size());
    const Mat3 a = theta.linear();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(points.size()); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const Point3 c = a * points[i] + theta.t;
        Projection& p = out[i];
        p.depth = c.z();
        if (!(c.z() > 0.0)) {
            p.behind = true;
            continue;
        }
        p.u = K.fx * c.x() / c.z() + K.cx;
        p.v = K.fy * c.y() / c.z() + K.cy;
    }
    return out;
}

bool projection_pixel(const CameraIntrinsics& K, const Projection& p, int& u, int& v) {
    if (p.behind || !std::isfinite(p.u) || !std::isfinite(p.v)) return false;
    const double ru = std::floor(p.u + 0.5), rv = std::floor(p.v + 0.5);
    if (ru < 0.0 || rv < 0.0 || ru >= K.width || rv >= K.height) return false;
    u = static_cast<int>(ru);
    v = static_cast<int>(rv);
    return true;
}

DepthImage depth_image(const CameraIntrinsics& K, const SimilarityTransform& theta, std::span<const Point3> points) {
    K.validate();
    DepthImage img;
    img.width = K.width;
    img.height = K.height;
    img.depth.assign(static_cast<std::size_t>(K.width) * K.height, DepthImage::kNoData);
    // min is order independent, so the serial merge matches any parallel one
    for (const auto& p : project_points(K, theta, points)) {
        int u = 0, v = 0;
        if (!projection_pixel(K, p, u, v)) continue;
        double& d = img.depth[static_cast<std::size_t>(v) * K.width + u];
        if (d == DepthImage::kNoData || p.depth < d) d = p.depth;
    }
    return img;
}

double ReprojectionReport::mean() const {
    if (distances.empty()) return 0.0;
    double s = 0.0;
    for (double d : distances) s += d;
    return s / static_cast<double>(distances.size());
}

double ReprojectionReport::percentile(double q) const {
    if (distances.empty()) return 0.0;
    std::vector<double> sorted = distances;
    std::sort(sorted.begin(), sorted.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

ReprojectionReport reprojection_errors(const CameraIntrinsics& K, const SimilarityTransform& theta,
                                       std::span<const Point3> points, const PixelMask& labeled) {
    K.validate();
    if (labeled.count() == 0) throw InvalidParameter("labeled mask is empty");

    std::vector<Eigen::Vector2d> pixels;
    for (int v = 0; v < labeled.height(); ++v) {
        for (int u = 0; u < labeled.width(); ++u) {
            if (labeled.get(u, v)) pixels.emplace_back(u, v);
        }
    }
    const KdTree2 tree(std::move(pixels));

    ReprojectionReport rep;
    const auto proj = project_points(K, theta, points);
    for (std::size_t i = 0; i < proj.size(); ++i) {
        int u = 0, v = 0;
        if (!projection_pixel(K, proj[i], u, v)) {
            ++rep.out_of_image;
            continue;
        }
        const double d = std::sqrt(tree.nearest(Eigen::Vector2d(proj[i].u, proj[i].v)).dist2);
        rep.distances.push_back(d);
        rep.point_index.push_back(i);
        const auto bin = static_cast<std::size_t>(std::floor(d));
        if (rep.histogram.size() <= bin) rep.histogram.resize(bin + 1, 0);
        ++rep.histogram[bin];
    }
    return rep;
}

}  // namespace fuzzreg
