#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Core>

#include "fuzzreg/fuzzy_energy.hpp"
#include "fuzzreg/kernels.hpp"
#include "fuzzreg/spatial_grid.hpp"

namespace fuzzreg {

enum class TransformMode { Rigid, Similarity };

enum class KernelBackend { Serial, Parallel };

// Parameter vector layout: [qw qx qy qz tx ty tz] plus [log s] in similarity
// mode. The quaternion is free (unnormalized); log s keeps the scale positive.
std::size_t param_count(TransformMode mode);
Eigen::VectorXd params_from_transform(const SimilarityTransform& T, TransformMode mode);
SimilarityTransform transform_from_params(const Eigen::VectorXd& params, TransformMode mode);

// The residual vector minimized by the solver, for a fixed source set,
// target, kernel configuration and transform mode.
//
// Not safe for concurrent calls on one instance: the source-side density is
// cached between evaluations.
class FuzzyObjective {
public:
    FuzzyObjective(PointSet source, TargetSet target, KernelConfig cfg, TransformMode mode,
                   KernelBackend backend = KernelBackend::Parallel);

    std::size_t num_params() const { return param_count(mode_); }
    std::size_t num_residuals() const { return source_.size() + target_.size(); }
    TransformMode mode() const { return mode_; }
    const KernelConfig& config() const { return cfg_; }
    const PointSet& source() const { return source_; }
    const TargetSet& target() const { return target_; }
    const SelfDensity& target_density() const { return target_density_; }

    Eigen::VectorXd residuals(const Eigen::VectorXd& params) const;
    // Residuals and (when jacobian != nullptr) their analytic Jacobian.
    void evaluate(const Eigen::VectorXd& params, Eigen::VectorXd& residuals,
                  Eigen::MatrixXd* jacobian) const;
    double energy(const Eigen::VectorXd& params) const;

    // Raw row/column sums at params (the inner sums of proximity/coverage).
    kernels::Sums sums(const Eigen::VectorXd& params) const;

private:
    struct PointSourceCache {
        double scale = 0.0;
        std::vector<double> density;
        std::vector<double> dlogs;
    };

    kernels::Sums compute_sums(const SimilarityTransform& T, bool with_grad) const;
    const PointSourceCache& point_source_density(double scale) const;

    PointSet source_;
    TargetSet target_;
    KernelConfig cfg_;
    TransformMode mode_;
    KernelBackend backend_;
    SelfDensity target_density_;
    std::optional<SpatialGrid> target_grid_;
    mutable std::optional<PointSourceCache> source_cache_;
};

}  // namespace fuzzreg
