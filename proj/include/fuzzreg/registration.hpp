#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fuzzreg/fuzzy_energy.hpp"
#include "fuzzreg/geometry.hpp"
#include "fuzzreg/lm_solver.hpp"
#include "fuzzreg/objective.hpp"

namespace fuzzreg {

// Coarse-to-fine schedule. Sigma values are in unit-cube units.
struct Schedule {
    double sigma0 = 0.5;
    double sigma_final = 0.02;
    double sigma_factor = 2.0;
    // Fraction of each set kept at ladder level l; padded with the last
    // entry (which must be 1) when the ladder is longer.
    std::vector<double> resolution_fractions = {0.1, 0.25, 0.5, 1.0};
    std::uint64_t seed = 0;
    // Lower bound on subsampled set sizes (never above the set size).
    std::size_t min_points = 16;

    void validate() const;
    double fraction_at(std::size_t level) const;
};

// [sigma0, sigma0/f, ...] while above sigma_final, then sigma_final.
std::vector<double> make_sigma_ladder(double sigma0, double sigma_final, double factor);

struct LevelRecord {
    double sigma = 0.0;
    std::size_t source_count = 0;
    std::size_t target_count = 0;
    std::size_t iterations = 0;
    std::size_t accepted_steps = 0;
    double initial_energy = 0.0;
    double final_energy = 0.0;
    LmStatus status = LmStatus::Converged;
    SimilarityTransform theta;  // level result, original coordinates
};

struct RegistrationResult {
    SimilarityTransform theta;       // maps the original source onto the original target
    SimilarityTransform theta_unit;  // same transform in normalized coordinates
    Normalization normalization;
    std::vector<LevelRecord> levels;
    bool converged = false;
    // true when the final Jacobian is rank deficient beyond the quaternion gauge
    bool degenerate = false;
};

struct RegistrationOptions {
    TransformMode mode = TransformMode::Rigid;
    Schedule schedule;
    // sigma is overwritten per level
    KernelConfig kernel{0.5, 2.0, 0.5, Truncation::Cutoff, 4.0};
    LmConfig lm;
    KernelBackend backend = KernelBackend::Parallel;
};

// Starting points per problem. Point targets keep the struct defaults except
// that similarity starts at sigma0 = 0.25: at 0.5 the first level shrinks the
// scale far enough to lose the pose. Rays start narrow (0.05 -> 0.002, factor
// 1.5, full resolution) with k = 8; wider kernels or a softer sigmoid pull
// the scene toward the camera center, where every ray is close.
RegistrationOptions default_options(TransformMode mode);
RegistrationOptions default_ray_options();

// Identity rotation and scale, translation moving the source centroid onto
// the target centroid.
SimilarityTransform centroid_alignment(std::span<const Point3> source, std::span<const Point3> target);

// Aligns source onto target. theta0 defaults to centroid_alignment.
RegistrationResult register_points(std::span<const Point3> source, std::span<const Point3> target,
                                   const RegistrationOptions& opts,
                                   std::optional<SimilarityTransform> theta0 = std::nullopt);

// Rigidly aligns 3D points to rays through the camera center at the origin.
RegistrationResult register_rays(std::span<const Point3> source, std::span<const Ray> rays,
                                 const RegistrationOptions& opts,
                                 const SimilarityTransform& theta0 = SimilarityTransform::identity());

}  // namespace fuzzreg
