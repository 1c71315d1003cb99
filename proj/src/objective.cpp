#include "fuzzreg/objective.hpp"

#include <cmath>

#include "fuzzreg/error.hpp"

namespace fuzzreg {

namespace {

// Self density of a point set and, optionally, d(eta_i)/d(log s) / eta_i for
// a uniform scaling of the set. A positive cutoff drops pairs beyond it.
void point_self_density(std::span<const Point3> pts, double sigma, double cutoff_radius, KernelBackend backend,
                        std::vector<double>& density, std::vector<double>* dlogs) {
    const std::size_t n = pts.size();
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    const double invs2 = 1.0 / (sigma * sigma);
    density.assign(n, 0.0);
    if (dlogs != nullptr) dlogs->assign(n, 0.0);

    if (backend == KernelBackend::Parallel && cutoff_radius > 0.0) {
        const SpatialGrid grid(pts, cutoff_radius);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            double eta = 0.0, d = 0.0;
            grid.for_each_within(pts[i], cutoff_radius, [&](std::size_t, double d2) {
                const double k = std::exp(-d2 * inv2s2);
                eta += k;
                d -= k * d2 * invs2;
            });
            density[i] = eta;
            if (dlogs != nullptr) (*dlogs)[i] = d / eta;
        }
        return;
    }

    const double r2 = cutoff_radius * cutoff_radius;
#pragma omp parallel for schedule(static) if (backend == KernelBackend::Parallel)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double eta = 0.0, d = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            const double d2 = (pts[i] - pts[l]).squaredNorm();
            if (cutoff_radius > 0.0 && d2 > r2) continue;
            const double k = std::exp(-d2 * inv2s2);
            eta += k;
            d -= k * d2 * invs2;
        }
        density[i] = eta;
        if (dlogs != nullptr) (*dlogs)[i] = d / eta;
    }
}

double cutoff_radius_of(const KernelConfig& cfg) {
    return cfg.truncation == Truncation::Cutoff ? cfg.cutoff * cfg.sigma : 0.0;
}

}  // namespace

std::size_t param_count(TransformMode mode) { return mode == TransformMode::Rigid ? 7 : 8; }

Eigen::VectorXd params_from_transform(const SimilarityTransform& T, TransformMode mode) {
    if (!(T.s > 0.0)) throw InvalidParameter("scale must be positive");
    Eigen::VectorXd p(8);
    p << T.q.w, T.q.x, T.q.y, T.q.z, T.t.x(), T.t.y(), T.t.z(), 0.0;
    if (mode == TransformMode::Similarity) p(7) = std::log(T.s);
    return p.head(static_cast<Eigen::Index>(param_count(mode)));
}

SimilarityTransform transform_from_params(const Eigen::VectorXd& params, TransformMode mode) {
    if (static_cast<std::size_t>(params.size()) != param_count(mode)) {
        throw InvalidParameter("parameter vector has the wrong length");
    }
    SimilarityTransform T;
    T.q = {params(0), params(1), params(2), params(3)};
    T.t = params.segment<3>(4);
    T.s = mode == TransformMode::Similarity ? std::exp(params(7)) : 1.0;
    return T;
}

FuzzyObjective::FuzzyObjective(PointSet source, TargetSet target, KernelConfig cfg, TransformMode mode,
                               KernelBackend backend)
    : source_(std::move(source)), target_(std::move(target)), cfg_(cfg), mode_(mode), backend_(backend) {
    cfg_.validate();
    if (source_.empty()) throw DegenerateInput("source set is empty");
    if (target_.size() == 0) throw DegenerateInput("target set is empty");

    const double cut = cutoff_radius_of(cfg_);
    if (target_.is_rays()) {
        target_density_ = self_density_rays(target_.as_rays(), cfg_.sigma);
    } else {
        target_density_.sigma = cfg_.sigma;
        point_self_density(target_.as_points(), cfg_.sigma, cut, backend_, target_density_.values, nullptr);
        if (cut > 0.0 && backend_ == KernelBackend::Parallel) target_grid_.emplace(target_.as_points(), cut);
    }
}

const FuzzyObjective::PointSourceCache& FuzzyObjective::point_source_density(double scale) const {
    if (!source_cache_ || source_cache_->scale != scale) {
        PointSourceCache c;
        c.scale = scale;
        PointSet scaled;
        scaled.reserve(source_.size());
        for (const auto& x : source_) scaled.push_back(scale * x);
        point_self_density(scaled, cfg_.sigma, cutoff_radius_of(cfg_), backend_, c.density,
                           mode_ == TransformMode::Similarity ? &c.dlogs : nullptr);
        source_cache_ = std::move(c);
    }
    return *source_cache_;
}

kernels::Sums FuzzyObjective::compute_sums(const SimilarityTransform& T, bool with_grad) const {
    const Mat3 a = T.linear();
    PointSet z(source_.size()), p(source_.size());
    for (std::size_t i = 0; i < source_.size(); ++i) {
        p[i] = a * source_[i];
        z[i] = p[i] + T.t;
    }

    kernels::Sums sums;
    const bool par = backend_ == KernelBackend::Parallel;
    if (target_.is_rays()) {
        const auto dens = par ? kernels::parallel::ray_source_density(z, p, cfg_.sigma, with_grad)
                              : kernels::serial::ray_source_density(z, p, cfg_.sigma, with_grad);
        kernels::RayInputs in;
        in.z = z;
        in.p = p;
        in.r = target_.as_rays();
        in.target_density = target_density_.values;
        in.source_density = dens.values;
        in.source_density_grad = dens.grad_over_value;
        in.t = T.t;
        in.sigma = cfg_.sigma;
        par ? kernels::parallel::ray_sums(in, sums, with_grad) : kernels::serial::ray_sums(in, sums, with_grad);
    } else {
        const auto& dens = point_source_density(T.s);
        kernels::PointInputs in;
        in.z = z;
        in.p = p;
        in.y = target_.as_points();
        in.target_density = target_density_.values;
        in.source_density = dens.density;
        if (mode_ == TransformMode::Similarity) in.source_density_dlogs = dens.dlogs;
        in.t = T.t;
        in.sigma = cfg_.sigma;
        in.cutoff_radius = cutoff_radius_of(cfg_);
        in.target_grid = target_grid_ ? &*target_grid_ : nullptr;
        par ? kernels::parallel::point_sums(in, sums, with_grad) : kernels::serial::point_sums(in, sums, with_grad);
    }
    return sums;
}

kernels::Sums FuzzyObjective::sums(const Eigen::VectorXd& params) const {
    return compute_sums(transform_from_params(params, mode_), false);
}

Eigen::VectorXd FuzzyObjective::residuals(const Eigen::VectorXd& params) const {
    Eigen::VectorXd e;
    evaluate(params, e, nullptr);
    return e;
}

double FuzzyObjective::energy(const Eigen::VectorXd& params) const { return residuals(params).squaredNorm(); }

void FuzzyObjective::evaluate(const Eigen::VectorXd& params, Eigen::VectorXd& residuals,
                              Eigen::MatrixXd* jacobian) const {
    const SimilarityTransform T = transform_from_params(params, mode_);
    const bool with_grad = jacobian != nullptr;
    const kernels::Sums s = compute_sums(T, with_grad);

    const std::size_t n = source_.size(), m = target_.size();
    const std::size_t np = num_params();
    const double wp = cfg_.alpha / static_cast<double>(n);
    const double wc = cfg_.beta() / static_cast<double>(m);
    const double k = cfg_.k;

    residuals.resize(static_cast<Eigen::Index>(n + m));
    Eigen::Matrix<double, 3, 4> omega;
    if (with_grad) {
        jacobian->resize(static_cast<Eigen::Index>(n + m), static_cast<Eigen::Index>(np));
        omega = kernels::omega_from_dq(T.q);
    }

    // residual = w * (1 - sigmoid(k u)) = w / (1 + exp(k u))
    const auto fill = [&](std::size_t row, double weight, double u, const kernels::Twist* grad) {
        const double sig = sigmoid(k * u);
        residuals(static_cast<Eigen::Index>(row)) = weight * sigmoid(-k * u);
        if (grad == nullptr) return;
        const double de = -weight * k * sig * (1.0 - sig);
        auto r = jacobian->row(static_cast<Eigen::Index>(row));
        r.head<4>() = de * (grad->head<3>().transpose() * omega);
        r.segment<3>(4) = de * grad->segment<3>(3).transpose();
        if (np == 8) r(7) = de * (*grad)(6);
    };

    for (std::size_t i = 0; i < n; ++i) fill(i, wp, s.row[i], with_grad ? &s.row_grad[i] : nullptr);
    for (std::size_t j = 0; j < m; ++j) fill(n + j, wc, s.col[j], with_grad ? &s.col_grad[j] : nullptr);
}

}  // namespace fuzzreg
