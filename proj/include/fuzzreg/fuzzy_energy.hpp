#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "fuzzreg/geometry.hpp"

namespace fuzzreg {

enum class Truncation { Exact, Cutoff };

struct KernelConfig {
    double sigma = 0.5;  // unit-cube units
    double k = 2.0;      // sigmoid steepness
    double alpha = 0.5;  // proximity weight; coverage weight is 1 - alpha
    Truncation truncation = Truncation::Exact;
    double cutoff = 4.0;  // kernel treated as 0 beyond cutoff * sigma

    double beta() const { return 1.0 - alpha; }
    void validate() const;
};

// Registration target: a point set or a bundle of rays through the origin.
class TargetSet {
public:
    static TargetSet points(PointSet pts);
    static TargetSet rays(RayBundle rays);

    bool is_rays() const { return std::holds_alternative<RayBundle>(data_); }
    std::size_t size() const;
    const PointSet& as_points() const { return std::get<PointSet>(data_); }
    const RayBundle& as_rays() const { return std::get<RayBundle>(data_); }

private:
    explicit TargetSet(std::variant<PointSet, RayBundle> d) : data_(std::move(d)) {}
    std::variant<PointSet, RayBundle> data_;
};

// Per-element normalizers (denominators of the normalized correspondence
// matrices). Every entry is >= 1 because each element sees itself.
struct SelfDensity {
    std::vector<double> values;
    double sigma = 0.0;
};

double kernel(const Point3& x, const Point3& y, double sigma);
double kernel_ray(const Point3& x, const Ray& r, double sigma);

SelfDensity self_density_points(std::span<const Point3> points, double sigma);
SelfDensity self_density_rays(std::span<const Ray> rays, double sigma);
// Source-side normalizer used against ray targets: entry i sums the kernel
// of every source point against the line through the origin and x_i.
SelfDensity self_density_source_rays(std::span<const Point3> source, double sigma);

SelfDensity target_density(const TargetSet& target, double sigma);
SelfDensity source_density(std::span<const Point3> source, const TargetSet& target, double sigma);

// Sum over target elements of the normalized correspondence for one source point.
double proximity_row(const Point3& x, const TargetSet& target, const SelfDensity& target_dens, double sigma);

// Sum over source points of the normalized correspondence for one target element.
double coverage_col(const Point3& y, std::span<const Point3> source, const SelfDensity& source_dens,
                    double sigma);
double coverage_col(const Ray& r, std::span<const Point3> source, const SelfDensity& source_dens,
                    double sigma);

double sigmoid(double u);

// These evaluate on `source` as given (no transform applied).
double proximity(std::span<const Point3> source, const TargetSet& target, const KernelConfig& cfg);
double coverage(std::span<const Point3> source, const TargetSet& target, const KernelConfig& cfg);

// |source| proximity residuals followed by |target| coverage residuals,
// evaluated at theta applied to the source.
Eigen::VectorXd residuals(const SimilarityTransform& theta, std::span<const Point3> source,
                          const TargetSet& target, const KernelConfig& cfg);
double energy(const SimilarityTransform& theta, std::span<const Point3> source, const TargetSet& target,
              const KernelConfig& cfg);

}  // namespace fuzzreg
