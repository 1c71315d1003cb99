#include "fuzzreg/fuzzy_energy.hpp"

#include <algorithm>
#include <cmath>

#include "fuzzreg/error.hpp"
#include "fuzzreg/objective.hpp"

namespace fuzzreg {

void KernelConfig::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidParameter("sigma must be positive");
    if (!(k > 0.0) || !std::isfinite(k)) throw InvalidParameter("k must be positive");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidParameter("alpha must be in [0, 1]");
    if (truncation == Truncation::Cutoff && !(cutoff >= 3.0)) {
        throw InvalidParameter("cutoff multiple must be at least 3");
    }
}

TargetSet TargetSet::points(PointSet pts) {
    if (pts.empty()) throw DegenerateInput("target point set is empty");
    return TargetSet(std::move(pts));
}

TargetSet TargetSet::rays(RayBundle rays) {
    if (rays.empty()) throw DegenerateInput("ray bundle is empty");
    for (const auto& r : rays) {
        if (!(std::abs(r.d.norm() - 1.0) <= 1e-9)) throw InvalidParameter("ray directions must be unit length");
    }
    return TargetSet(std::move(rays));
}

std::size_t TargetSet::size() const {
    return is_rays() ? as_rays().size() : as_points().size();
}

double kernel(const Point3& x, const Point3& y, double sigma) {
    return std::exp(-(x - y).squaredNorm() / (2.0 * sigma * sigma));
}

double kernel_ray(const Point3& x, const Ray& r, double sigma) {
    return std::exp(-x.cross(r.d).squaredNorm() / (2.0 * sigma * sigma));
}

SelfDensity self_density_points(std::span<const Point3> points, double sigma) {
    SelfDensity d{std::vector<double>(points.size(), 0.0), sigma};
    for (std::size_t j = 0; j < points.size(); ++j) {
        for (std::size_t l = 0; l < points.size(); ++l) d.values[j] += kernel(points[j], points[l], sigma);
    }
    return d;
}

SelfDensity self_density_rays(std::span<const Ray> rays, double sigma) {
    SelfDensity d{std::vector<double>(rays.size(), 0.0), sigma};
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t j = 0; j < rays.size(); ++j) {
        for (std::size_t l = 0; l < rays.size(); ++l) {
            // 1 - (r_l.r_j)^2 without the cancellation
            d.values[j] += std::exp(-rays[l].d.cross(rays[j].d).squaredNorm() * inv2s2);
        }
    }
    return d;
}

SelfDensity self_density_source_rays(std::span<const Point3> source, double sigma) {
    SelfDensity d{std::vector<double>(source.size(), 0.0), sigma};
    for (std::size_t i = 0; i < source.size(); ++i) {
        const double len = source[i].norm();
        const Ray line{len > 0.0 ? Point3(source[i] / len) : Point3::UnitZ()};
        for (const auto& x : source) d.values[i] += kernel_ray(x, line, sigma);
    }
    return d;
}

SelfDensity target_density(const TargetSet& target, double sigma) {
    return target.is_rays() ? self_density_rays(target.as_rays(), sigma)
                            : self_density_points(target.as_points(), sigma);
}

SelfDensity source_density(std::span<const Point3> source, const TargetSet& target, double sigma) {
    return target.is_rays() ? self_density_source_rays(source, sigma) : self_density_points(source, sigma);
}

namespace {

void check_density(const SelfDensity& dens, std::size_t count, double sigma) {
    if (dens.values.size() != count || dens.sigma != sigma) {
        throw InvalidParameter("self density was built for a different set or sigma");
    }
}

}  // namespace

double proximity_row(const Point3& x, const TargetSet& target, const SelfDensity& target_dens, double sigma) {
    check_density(target_dens, target.size(), sigma);
    double sum = 0.0;
    if (target.is_rays()) {
        const auto& rays = target.as_rays();
        for (std::size_t j = 0; j < rays.size(); ++j) sum += kernel_ray(x, rays[j], sigma) / target_dens.values[j];
    } else {
        const auto& pts = target.as_points();
        for (std::size_t j = 0; j < pts.size(); ++j) sum += kernel(x, pts[j], sigma) / target_dens.values[j];
    }
    return sum;
}

double coverage_col(const Point3& y, std::span<const Point3> source, const SelfDensity& source_dens,
                    double sigma) {
    check_density(source_dens, source.size(), sigma);
    double sum = 0.0;
    for (std::size_t i = 0; i < source.size(); ++i) sum += kernel(source[i], y, sigma) / source_dens.values[i];
    return sum;
}

double coverage_col(const Ray& r, std::span<const Point3> source, const SelfDensity& source_dens, double sigma) {
    check_density(source_dens, source.size(), sigma);
    double sum = 0.0;
    for (std::size_t i = 0; i < source.size(); ++i) sum += kernel_ray(source[i], r, sigma) / source_dens.values[i];
    return sum;
}

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

namespace {

kernels::Sums identity_sums(std::span<const Point3> source, const TargetSet& target, const KernelConfig& cfg) {
    const FuzzyObjective obj(PointSet(source.begin(), source.end()), target, cfg, TransformMode::Rigid);
    return obj.sums(params_from_transform(SimilarityTransform::identity(), TransformMode::Rigid));
}

double mean_sigmoid(const std::vector<double>& sums, double k) {
    double acc = 0.0;
    for (double u : sums) acc += sigmoid(k * u);
    return acc / static_cast<double>(sums.size());
}

}  // namespace

double proximity(std::span<const Point3> source, const TargetSet& target, const KernelConfig& cfg) {
    return mean_sigmoid(identity_sums(source, target, cfg).row, cfg.k);
}

double coverage(std::span<const Point3> source, const TargetSet& target, const KernelConfig& cfg) {
    return mean_sigmoid(identity_sums(source, target, cfg).col, cfg.k);
}

Eigen::VectorXd residuals(const SimilarityTransform& theta, std::span<const Point3> source,
                          const TargetSet& target, const KernelConfig& cfg) {
    const FuzzyObjective obj(transform_apply(theta, source), target, cfg, TransformMode::Rigid);
    return obj.residuals(params_from_transform(SimilarityTransform::identity(), TransformMode::Rigid));
}

double energy(const SimilarityTransform& theta, std::span<const Point3> source, const TargetSet& target,
              const KernelConfig& cfg) {
    return residuals(theta, source, target, cfg).squaredNorm();
}

}  // namespace fuzzreg
