#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fuzzreg/geometry.hpp"
#include "fuzzreg/voxelizer.hpp"

namespace fuzzreg {

// mean_v |est(v) - gt(v)|
double mean_vertex_distance(const SimilarityTransform& theta_est, const SimilarityTransform& theta_gt,
                            std::span<const Point3> model);

// Exact distance to a closed triangle (face / edge / vertex regions).
double point_triangle_distance(const Point3& p, const Point3& a, const Point3& b, const Point3& c);

struct CloudMeshDistance {
    double mean = 0.0;
    double max = 0.0;
    std::vector<double> per_point;
};

CloudMeshDistance cloud_to_mesh_distance(std::span<const Point3> points, const Mesh& mesh);

enum class Axis { X, Y, Z };

char axis_name(Axis a);
Axis parse_axis(const std::string& s);  // "x" | "y" | "z"
Point3 axis_vector(Axis a);

struct SweepSpec {
    Axis axis = Axis::X;
    double step_degrees = 5.0;
    double min_degrees = 0.0;
    double max_degrees = 60.0;
    std::size_t trials = 1;
    // Injected into the rotated scene per trial; fractions of the scene bbox
    // diagonal (noise) and of the scene size (outliers, uniform in 1.5x bbox).
    double noise_fraction = 0.0;
    double outlier_fraction = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
    // min, min + step, ... up to max (inclusive within 1e-9 of a step).
    std::vector<double> angles() const;
};

struct SweepTrial {
    Axis axis = Axis::X;
    double angle_deg = 0.0;
    std::size_t trial = 0;
    double mean_error = 0.0;  // infinity when the registrar threw
    bool success = false;
    bool failed = false;
};

struct SweepReport {
    double threshold = 0.0;
    std::vector<SweepTrial> trials;  // ordered by (angle, trial)

    double success_rate() const;
    // Mean error over the trials of each angle, in angle order.
    std::vector<std::pair<double, double>> step_means() const;
};

// Maps (source, target, theta0) to an estimate of source -> target.
using Registrar = std::function<SimilarityTransform(std::span<const Point3>, std::span<const Point3>,
                                                    const SimilarityTransform&)>;

// For each angle the scene is rotated about its centroid, the ground truth
// is adjusted to match, and the registrar runs from centroid alignment.
// eval_points live in the scene frame and measure the error. The threshold
// defaults to 1% of the model bbox diagonal when <= 0.
SweepReport rotation_sweep(std::span<const Point3> model, std::span<const Point3> scene,
                           const SimilarityTransform& theta_gt, std::span<const Point3> eval_points,
                           const SweepSpec& spec, const Registrar& registrar, double threshold = 0.0);

// Fraction of trials with mean error strictly below threshold.
double success_rate(const SweepReport& report, double threshold);

struct IcpConfig {
    std::size_t max_iters = 100;
    double tol = 1e-10;  // relative decrease of the correspondence MSE
};

struct IcpResult {
    SimilarityTransform theta;
    std::size_t iterations = 0;
    bool converged = false;
    bool failed = false;             // degenerate cross-covariance
    std::vector<double> mse_trace;   // correspondence MSE per iteration
};

// Point-to-point ICP: nearest neighbors in target, closed-form rigid fit.
IcpResult icp_baseline(std::span<const Point3> source, std::span<const Point3> target, const IcpConfig& cfg = {},
                       const SimilarityTransform& theta0 = SimilarityTransform::identity());

// Least-squares rigid fit of src onto dst (paired). failed is set when the
// cross-covariance has rank < 2.
SimilarityTransform rigid_fit(std::span<const Point3> src, std::span<const Point3> dst, bool* failed = nullptr);

}  // namespace fuzzreg
