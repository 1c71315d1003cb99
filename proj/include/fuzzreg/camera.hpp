#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fuzzreg/geometry.hpp"

namespace fuzzreg {

// Pinhole camera, no distortion. Integer pixel coordinates address pixel
// centers; u grows along x (columns), v along y (rows).
struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    void validate() const;
};

class PixelMask {
public:
    PixelMask() = default;
    PixelMask(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }
    bool get(int u, int v) const { return bits_[index(u, v)] != 0; }
    void set(int u, int v, bool value = true) { bits_[index(u, v)] = value ? 1 : 0; }
    bool in_bounds(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }
    std::size_t count() const;

private:
    std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width_ + u; }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

Ray pixel_to_ray(const CameraIntrinsics& K, double u, double v);

// One ray per set pixel with u % stride == 0 and v % stride == 0, row-major.
RayBundle mask_to_rays(const CameraIntrinsics& K, const PixelMask& mask, int stride = 1);

struct Projection {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
    bool behind = false;  // camera-frame z <= 0; u and v are meaningless then
};

std::vector<Projection> project_points(const CameraIntrinsics& K, const SimilarityTransform& theta,
                                       std::span<const Point3> points);

// Pixel hit by a projection: nearest pixel center. False when behind the
// camera or outside the image.
bool projection_pixel(const CameraIntrinsics& K, const Projection& p, int& u, int& v);

struct DepthImage {
    static constexpr double kNoData = 0.0;

    int width = 0;
    int height = 0;
    std::vector<double> depth;  // row-major

    double at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
};

// Z-buffer: each pixel keeps the smallest depth projected onto it.
DepthImage depth_image(const CameraIntrinsics& K, const SimilarityTransform& theta, std::span<const Point3> points);

struct ReprojectionReport {
    std::vector<double> distances;        // pixels, one per in-image point
    std::vector<std::size_t> point_index; // source index of each distance
    std::size_t out_of_image = 0;         // behind the camera or off the image
    std::vector<std::size_t> histogram;   // bin b counts distances in [b, b + 1)

    double mean() const;
    // Linear interpolation between order statistics, q in [0, 1].
    double percentile(double q) const;
};

// Distance from each projected point to the nearest set pixel of `labeled`.
ReprojectionReport reprojection_errors(const CameraIntrinsics& K, const SimilarityTransform& theta,
                                       std::span<const Point3> points, const PixelMask& labeled);

}  // namespace fuzzreg
