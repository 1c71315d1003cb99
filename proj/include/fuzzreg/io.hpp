#pragma once

#include <map>
#include <string>
#include <vector>

#include "fuzzreg/camera.hpp"
#include "fuzzreg/geometry.hpp"
#include "fuzzreg/metrics.hpp"
#include "fuzzreg/registration.hpp"
#include "fuzzreg/voxelizer.hpp"

namespace fuzzreg {

enum class PointFormat { Xyz, Ply, ObjVertices };
enum class MeshFormat { Obj, Ply };

// By extension: .xyz/.txt/.pts -> xyz, .ply, .obj. Throws InvalidParameter.
PointFormat point_format_for(const std::string& path);
MeshFormat mesh_format_for(const std::string& path);

// Malformed input -> ParseError (with line number for text formats); no
// points -> DegenerateInput; unreadable file -> IoError.
PointSet read_pointset(const std::string& path, PointFormat format);
PointSet read_pointset(const std::string& path);

// 17 significant digits. binary applies to ply only (little endian).
void write_pointset(const std::string& path, const PointSet& points, PointFormat format, bool binary = false);
void write_pointset(const std::string& path, const PointSet& points);

// Polygons are fan-triangulated. An empty face list is allowed here.
Mesh read_mesh(const std::string& path, MeshFormat format);
Mesh read_mesh(const std::string& path);
void write_obj(const std::string& path, const Mesh& mesh);

// Greyscale image as read from P2 / P5.
struct GrayImage {
    int width = 0;
    int height = 0;
    int maxval = 255;
    std::vector<int> values;  // row-major
    std::vector<std::string> comments;
};

GrayImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& img, bool binary);

// nonzero = set
PixelMask read_mask(const std::string& path);
void write_mask(const std::string& path, const PixelMask& mask, bool binary = true);

// P2 with maxval 65535, value round(depth * scale), 0 = no data. The scale is
// declared in a "# scale <value>" header comment.
void write_depth_pgm(const std::string& path, const DepthImage& img, double scale);
DepthImage read_depth_pgm(const std::string& path);
// "u v depth" per pixel with data, row-major.
void write_depth_dump(const std::string& path, const DepthImage& img);

// Key-value text: fx, fy, cx, cy, width, height, one "key = value" per line.
CameraIntrinsics read_intrinsics(const std::string& path);
void write_intrinsics(const std::string& path, const CameraIntrinsics& K);

struct TransformProvenance {
    std::map<std::string, std::string> config;
    std::vector<LevelRecord> levels;
    bool has_result = false;
    bool converged = false;
    bool degenerate = false;
};

// JSON document: quaternion (normalized), translation, scale, 4x4 row-major
// matrix, config echo and per-level energy trace.
std::string format_transform(const SimilarityTransform& theta, const TransformProvenance& prov = {});
void write_transform(const std::string& path, const SimilarityTransform& theta, const TransformProvenance& prov = {});
SimilarityTransform read_transform(const std::string& path);

// One row per trial: axis,angle_deg,trial,mean_error,success
void write_sweep_csv(const std::string& path, const SweepReport& report);
void write_sweep_summary(const std::string& path, const SweepReport& report,
                         const std::map<std::string, std::string>& info = {});

}  // namespace fuzzreg
