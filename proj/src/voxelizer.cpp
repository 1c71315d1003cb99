#include "fuzzreg/voxelizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "fuzzreg/error.hpp"

namespace fuzzreg {

void Mesh::validate() const {
    for (const auto& f : faces) {
        for (auto v : f) {
            if (v >= vertices.size()) throw InvalidParameter("face index out of range");
        }
    }
}

VoxelGrid::VoxelGrid(const Point3& origin, double cell_size, std::array<int, 3> dims)
    : origin_(origin), cell_(cell_size), dims_(dims) {
    if (!(cell_size > 0.0)) throw InvalidParameter("voxel size must be positive");
    if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) throw InvalidParameter("voxel grid dimensions must be >= 1");
    occ_.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0);
}

Aabb VoxelGrid::cell_box(int i, int j, int k) const {
    const Point3 lo = origin_ + cell_ * Point3(i, j, k);
    return {lo, origin_ + cell_ * Point3(i + 1, j + 1, k + 1)};
}

std::size_t VoxelGrid::count() const {
    return static_cast<std::size_t>(std::count(occ_.begin(), occ_.end(), std::uint8_t{1}));
}

namespace {

// Projection interval test; separated only when strictly apart.
bool separated(double p0, double p1, double p2, double r) {
    const double lo = std::min({p0, p1, p2});
    const double hi = std::max({p0, p1, p2});
    return lo > r || hi < -r;
}

}  // namespace

bool triangle_box_overlap(const Point3& a, const Point3& b, const Point3& c, const Aabb& box) {
    const Point3 center = box.center();
    const Point3 h = 0.5 * box.extent();
    const Point3 v0 = a - center, v1 = b - center, v2 = c - center;
    const Point3 edges[3] = {v1 - v0, v2 - v1, v0 - v2};

    // 9 cross-product axes
    for (const auto& e : edges) {
        for (int axis = 0; axis < 3; ++axis) {
            const Point3 dir = e.cross(Point3::Unit(axis));
            const double r = h.dot(dir.cwiseAbs());
            if (separated(dir.dot(v0), dir.dot(v1), dir.dot(v2), r)) return false;
        }
    }
    // box face normals
    for (int axis = 0; axis < 3; ++axis) {
        if (separated(v0(axis), v1(axis), v2(axis), h(axis))) return false;
    }
    // triangle normal
    const Point3 n = edges[0].cross(edges[1]);
    const double r = h.dot(n.cwiseAbs());
    return std::abs(n.dot(v0)) <= r;
}

VoxelGrid voxelize_surface(const Mesh& mesh, int resolution) {
    if (resolution < 2) throw InvalidParameter("voxel resolution must be at least 2");
    if (mesh.faces.empty() || mesh.vertices.empty()) throw DegenerateInput("mesh has no faces");
    mesh.validate();

    PointSet used;
    for (const auto& f : mesh.faces) {
        for (auto v : f) used.push_back(mesh.vertices[v]);
    }
    const Aabb box = Aabb::of(used);
    const double edge = box.largest_edge();
    if (!(edge > 0.0)) throw DegenerateInput("mesh has zero extent");
    const double cell = edge / resolution;

    std::array<int, 3> dims{};
    for (int a = 0; a < 3; ++a) {
        const int inner = std::max(1, static_cast<int>(std::ceil(box.extent()(a) / cell - 1e-9)));
        dims[a] = inner + 2 * kVoxelPadding;
    }
    VoxelGrid grid(box.min - Point3::Constant(kVoxelPadding * cell), cell, dims);
    auto& occ = grid.data();

    // interior cells only; the padding stays empty
    const int first = kVoxelPadding;
    const auto clamp_cell = [&](double coord, int axis) {
        const int c = static_cast<int>(std::floor((coord - grid.origin()(axis)) / cell));
        return std::clamp(c, first, dims[axis] - 1 - kVoxelPadding);
    };

#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t fi = 0; fi < static_cast<std::ptrdiff_t>(mesh.faces.size()); ++fi) {
        const auto& f = mesh.faces[static_cast<std::size_t>(fi)];
        const Point3& a = mesh.vertices[f[0]];
        const Point3& b = mesh.vertices[f[1]];
        const Point3& c = mesh.vertices[f[2]];
        const Point3 lo = a.cwiseMin(b).cwiseMin(c);
        const Point3 hi = a.cwiseMax(b).cwiseMax(c);
        int lo_idx[3], hi_idx[3];
        for (int ax = 0; ax < 3; ++ax) {
            lo_idx[ax] = clamp_cell(lo(ax), ax) - 1;
            hi_idx[ax] = clamp_cell(hi(ax), ax) + 1;
            lo_idx[ax] = std::max(lo_idx[ax], first);
            hi_idx[ax] = std::min(hi_idx[ax], dims[ax] - 1 - kVoxelPadding);
        }
        for (int k = lo_idx[2]; k <= hi_idx[2]; ++k) {
            for (int j = lo_idx[1]; j <= hi_idx[1]; ++j) {
                for (int i = lo_idx[0]; i <= hi_idx[0]; ++i) {
                    if (triangle_box_overlap(a, b, c, grid.cell_box(i, j, k))) {
                        std::uint8_t& cellv = occ[grid.index(i, j, k)];
#pragma omp atomic write
                        cellv = 1;
                    }
                }
            }
        }
    }
    return grid;
}

namespace {

// any == true: dilation (some neighbor set); any == false: erosion (all set).
VoxelGrid neighborhood_pass(const VoxelGrid& in, bool any) {
    VoxelGrid out = in;
    const auto d = in.dims();
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            for (int i = 0; i < d[0]; ++i) {
                bool result = !any;
                for (int dk = -1; dk <= 1 && result == !any; ++dk) {
                    for (int dj = -1; dj <= 1 && result == !any; ++dj) {
                        for (int di = -1; di <= 1; ++di) {
                            const int ni = i + di, nj = j + dj, nk = k + dk;
                            if (!in.in_bounds(ni, nj, nk)) continue;
                            if (in.get(ni, nj, nk) == any) {
                                result = any;
                                break;
                            }
                        }
                    }
                }
                out.set(i, j, k, result);
            }
        }
    }
    return out;
}

}  // namespace

VoxelGrid morph_close(const VoxelGrid& grid) {
    if (grid.cell_count() == 0) return grid;
    return neighborhood_pass(neighborhood_pass(grid, true), false);
}

VoxelGrid mask_exterior(const VoxelGrid& grid) {
    if (grid.cell_count() == 0) return grid;
    const auto d = grid.dims();
    std::vector<std::uint8_t> outside(grid.cell_count(), 0);
    std::deque<std::array<int, 3>> queue;

    const auto seed = [&](int i, int j, int k) {
        const std::size_t idx = grid.index(i, j, k);
        if (!grid.get(i, j, k) && !outside[idx]) {
            outside[idx] = 1;
            queue.push_back({i, j, k});
        }
    };
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            for (int i = 0; i < d[0]; ++i) {
                if (i == 0 || j == 0 || k == 0 || i == d[0] - 1 || j == d[1] - 1 || k == d[2] - 1) seed(i, j, k);
            }
        }
    }

    static constexpr int kSteps[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    while (!queue.empty()) {
        const auto c = queue.front();
        queue.pop_front();
        for (const auto& s : kSteps) {
            const int i = c[0] + s[0], j = c[1] + s[1], k = c[2] + s[2];
            if (grid.in_bounds(i, j, k)) seed(i, j, k);
        }
    }

    // cells on the volume edge face the region outside the grid, which is exterior
    VoxelGrid out(grid.origin(), grid.cell_size(), d);
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            for (int i = 0; i < d[0]; ++i) {
                if (!grid.get(i, j, k)) continue;
                bool exposed = false;
                for (const auto& s : kSteps) {
                    const int ni = i + s[0], nj = j + s[1], nk = k + s[2];
                    if (!grid.in_bounds(ni, nj, nk) || outside[grid.index(ni, nj, nk)]) {
                        exposed = true;
                        break;
                    }
                }
                out.set(i, j, k, exposed);
            }
        }
    }
    return out;
}

PointSet voxel_centers(const VoxelGrid& grid) {
    PointSet out;
    const auto d = grid.dims();
    for (int i = 0; i < d[0]; ++i) {
        for (int j = 0; j < d[1]; ++j) {
            for (int k = 0; k < d[2]; ++k) {
                if (grid.get(i, j, k)) out.push_back(grid.origin() + grid.cell_size() * Point3(i + 0.5, j + 0.5, k + 0.5));
            }
        }
    }
    return out;
}

PointSet mesh_to_pointset(const Mesh& mesh, int resolution) {
    return voxel_centers(mask_exterior(morph_close(voxelize_surface(mesh, resolution))));
}

}  // namespace fuzzreg
