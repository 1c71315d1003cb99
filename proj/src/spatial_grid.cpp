#include "fuzzreg/spatial_grid.hpp"

#include <algorithm>
#include <numeric>

#include "fuzzreg/error.hpp"

namespace fuzzreg {

SpatialGrid::SpatialGrid(std::span<const Point3> points, double cell_size)
    : cell_(cell_size), points_(points.begin(), points.end()) {
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw InvalidParameter("grid cell size must be positive");

    std::vector<std::uint64_t> keys(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) keys[i] = key(cell_of(points_[i]));

    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    std::stable_sort(order_.begin(), order_.end(), [&](auto a, auto b) { return keys[a] < keys[b]; });

    std::uint32_t begin = 0;
    for (std::uint32_t k = 1; k <= order_.size(); ++k) {
        if (k == order_.size() || keys[order_[k]] != keys[order_[begin]]) {
            cells_.emplace(keys[order_[begin]], std::make_pair(begin, k));
            begin = k;
        }
    }
}

}  // namespace fuzzreg
