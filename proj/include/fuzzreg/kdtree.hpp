#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>

namespace fuzzreg {

// Static kd-tree for exact nearest-neighbor queries. Ties go to the lower
// point index so results never depend on build order details.
template <int Dim>
class KdTree {
public:
    using Vec = Eigen::Matrix<double, Dim, 1>;

    KdTree() = default;
    explicit KdTree(std::vector<Vec> points) : pts_(std::move(points)) {
        idx_.resize(pts_.size());
        std::iota(idx_.begin(), idx_.end(), std::size_t{0});
        if (!pts_.empty()) build(0, pts_.size(), 0);
    }

    std::size_t size() const { return pts_.size(); }
    bool empty() const { return pts_.empty(); }
    const Vec& point(std::size_t i) const { return pts_[i]; }

    struct Hit {
        std::size_t index = 0;
        double dist2 = std::numeric_limits<double>::infinity();
    };

    Hit nearest(const Vec& q) const {
        Hit best;
        if (!pts_.empty()) search(0, pts_.size(), 0, q, best);
        return best;
    }

private:
    static constexpr std::size_t kLeaf = 8;

    void build(std::size_t lo, std::size_t hi, int depth) {
        if (hi - lo <= kLeaf) return;
        const int axis = depth % Dim;
        const std::size_t mid = lo + (hi - lo) / 2;
        std::nth_element(idx_.begin() + lo, idx_.begin() + mid, idx_.begin() + hi, [&](std::size_t a, std::size_t b) {
            return pts_[a](axis) < pts_[b](axis) || (pts_[a](axis) == pts_[b](axis) && a < b);
        });
        build(lo, mid, depth + 1);
        build(mid + 1, hi, depth + 1);
    }

    static void consider(std::size_t i, double d2, Hit& best) {
        if (d2 < best.dist2 || (d2 == best.dist2 && i < best.index)) best = {i, d2};
    }

    void search(std::size_t lo, std::size_t hi, int depth, const Vec& q, Hit& best) const {
        if (hi - lo <= kLeaf) {
            for (std::size_t k = lo; k < hi; ++k) consider(idx_[k], (pts_[idx_[k]] - q).squaredNorm(), best);
            return;
        }
        const int axis = depth % Dim;
        const std::size_t mid = lo + (hi - lo) / 2;
        const std::size_t m = idx_[mid];
        consider(m, (pts_[m] - q).squaredNorm(), best);
        const double diff = q(axis) - pts_[m](axis);
        const bool left_first = diff <= 0.0;
        if (left_first) {
            search(lo, mid, depth + 1, q, best);
            if (diff * diff <= best.dist2) search(mid + 1, hi, depth + 1, q, best);
        } else {
            search(mid + 1, hi, depth + 1, q, best);
            if (diff * diff <= best.dist2) search(lo, mid, depth + 1, q, best);
        }
    }

    std::vector<Vec> pts_;
    std::vector<std::size_t> idx_;
};

using KdTree3 = KdTree<3>;
using KdTree2 = KdTree<2>;

}  // namespace fuzzreg
