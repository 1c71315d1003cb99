#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fuzzreg/geometry.hpp"

namespace fuzzreg {

struct Mesh {
    PointSet vertices;
    std::vector<std::array<std::uint32_t, 3>> faces;

    // Throws InvalidParameter when a face references a missing vertex.
    void validate() const;
};

// Binary occupancy grid. Cell (i, j, k) covers
// [origin + (i, j, k) * cell_size, origin + (i + 1, j + 1, k + 1) * cell_size].
class VoxelGrid {
public:
    VoxelGrid() = default;
    VoxelGrid(const Point3& origin, double cell_size, std::array<int, 3> dims);

    const Point3& origin() const { return origin_; }
    double cell_size() const { return cell_; }
    const std::array<int, 3>& dims() const { return dims_; }
    std::size_t cell_count() const { return occ_.size(); }

    bool in_bounds(int i, int j, int k) const {
        return i >= 0 && j >= 0 && k >= 0 && i < dims_[0] && j < dims_[1] && k < dims_[2];
    }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * dims_[1] + j) * dims_[0] + i;
    }
    bool get(int i, int j, int k) const { return occ_[index(i, j, k)] != 0; }
    void set(int i, int j, int k, bool v = true) { occ_[index(i, j, k)] = v ? 1 : 0; }

    Aabb cell_box(int i, int j, int k) const;
    std::size_t count() const;

    const std::vector<std::uint8_t>& data() const { return occ_; }
    std::vector<std::uint8_t>& data() { return occ_; }

    friend bool operator==(const VoxelGrid& a, const VoxelGrid& b) {
        return a.dims_ == b.dims_ && a.occ_ == b.occ_ && a.origin_ == b.origin_ && a.cell_ == b.cell_;
    }

private:
    Point3 origin_ = Point3::Zero();
    double cell_ = 1.0;
    std::array<int, 3> dims_{0, 0, 0};
    std::vector<std::uint8_t> occ_;
};

// Separating-axis test between a closed triangle and a closed box; touching
// counts as overlap.
bool triangle_box_overlap(const Point3& a, const Point3& b, const Point3& c, const Aabb& box);

// Empty layers around the mesh cells. Two keep the closing's dilation off the
// grid edge, so closing never glues the surface to the boundary.
inline constexpr int kVoxelPadding = 2;

// Marks every cell touched by a face. Cells are cubes of size
// (largest mesh extent) / resolution, laid over the mesh bounding box, plus
// kVoxelPadding always-empty layers on every side.
VoxelGrid voxelize_surface(const Mesh& mesh, int resolution);

// Dilation then erosion with the 26-neighborhood (radius 1). Out-of-grid
// cells are ignored by both passes.
VoxelGrid morph_close(const VoxelGrid& grid);

// Keeps occupied cells 6-adjacent to empty space that is 6-connected to the
// grid boundary.
VoxelGrid mask_exterior(const VoxelGrid& grid);

// One point per occupied cell center, in (i, j, k) lexicographic order with i
// slowest.
PointSet voxel_centers(const VoxelGrid& grid);

// voxelize_surface -> morph_close -> mask_exterior -> voxel_centers
PointSet mesh_to_pointset(const Mesh& mesh, int resolution);

}  // namespace fuzzreg
