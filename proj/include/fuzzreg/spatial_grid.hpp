#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "fuzzreg/geometry.hpp"

namespace fuzzreg {

// Uniform bucket grid for fixed-radius neighbor queries. Query results are
// visited in a fixed order (cell offsets in z, y, x order, then ascending
// point index) so sums built from them are reproducible.
class SpatialGrid {
public:
    SpatialGrid() = default;
    SpatialGrid(std::span<const Point3> points, double cell_size);

    double cell_size() const { return cell_; }
    std::size_t size() const { return points_.size(); }

    // Calls f(index, squared_distance) for every point within `radius` of q.
    // Requires radius <= cell_size().
    template <typename F>
    void for_each_within(const Point3& q, double radius, F&& f) const {
        const double r2 = radius * radius;
        const auto c = cell_of(q);
        for (int dz = -1; dz <= 1; ++dz) {
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const auto it = cells_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
                    if (it == cells_.end()) continue;
                    for (std::uint32_t k = it->second.first; k < it->second.second; ++k) {
                        const std::uint32_t idx = order_[k];
                        const double d2 = (points_[idx] - q).squaredNorm();
                        if (d2 <= r2) f(idx, d2);
                    }
                }
            }
        }
    }

private:
    using Cell = std::array<std::int64_t, 3>;

    Cell cell_of(const Point3& p) const {
        return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
                static_cast<std::int64_t>(std::floor(p.y() / cell_)),
                static_cast<std::int64_t>(std::floor(p.z() / cell_))};
    }
    static std::uint64_t key(const Cell& c) {
        // 21 bits per axis, wrapped; collisions only merge buckets, the
        // distance test keeps results exact.
        const auto m = [](std::int64_t v) { return static_cast<std::uint64_t>(v) & 0x1fffffULL; };
        return m(c[0]) | (m(c[1]) << 21) | (m(c[2]) << 42);
    }

    double cell_ = 1.0;
    PointSet points_;
    std::vector<std::uint32_t> order_;
    std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> cells_;
};

}  // namespace fuzzreg
