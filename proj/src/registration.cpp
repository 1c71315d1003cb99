#include "fuzzreg/registration.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "fuzzreg/error.hpp"
#include "fuzzreg/random.hpp"

namespace fuzzreg {

void Schedule::validate() const {
    if (!(sigma_final > 0.0) || !(sigma0 >= sigma_final)) throw InvalidParameter("need sigma0 >= sigma_final > 0");
    if (!(sigma_factor > 1.0)) throw InvalidParameter("sigma factor must exceed 1");
    if (resolution_fractions.empty()) throw InvalidParameter("resolution fractions must not be empty");
    double prev = 0.0;
    for (double f : resolution_fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw InvalidParameter("resolution fractions must be in (0, 1]");
        if (f < prev) throw InvalidParameter("resolution fractions must be non-decreasing");
        prev = f;
    }
    if (resolution_fractions.back() != 1.0) throw InvalidParameter("last resolution fraction must be 1");
}

double Schedule::fraction_at(std::size_t level) const {
    return level < resolution_fractions.size() ? resolution_fractions[level] : resolution_fractions.back();
}

std::vector<double> make_sigma_ladder(double sigma0, double sigma_final, double factor) {
    if (!(sigma_final > 0.0) || !(sigma0 >= sigma_final) || !std::isfinite(sigma0)) {
        throw InvalidParameter("need sigma0 >= sigma_final > 0");
    }
    if (!(factor > 1.0)) throw InvalidParameter("sigma factor must exceed 1");
    std::vector<double> ladder;
    double s = sigma0;
    while (s > sigma_final) {
        ladder.push_back(s);
        s /= factor;
    }
    ladder.push_back(sigma_final);
    return ladder;
}

RegistrationOptions default_options(TransformMode mode) {
    RegistrationOptions o;
    o.mode = mode;
    if (mode == TransformMode::Similarity) o.schedule.sigma0 = 0.25;
    return o;
}

RegistrationOptions default_ray_options() {
    RegistrationOptions o;
    o.schedule.sigma0 = 0.05;
    o.schedule.sigma_final = 0.002;
    o.schedule.sigma_factor = 1.5;
    o.schedule.resolution_fractions = {1.0};
    o.kernel.k = 8.0;
    return o;
}

SimilarityTransform centroid_alignment(std::span<const Point3> source, std::span<const Point3> target) {
    SimilarityTransform T;
    T.t = centroid(target) - centroid(source);
    return T;
}

namespace {

std::size_t level_count(std::size_t total, double fraction, std::size_t min_points) {
    const auto want = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(total)));
    return std::min(total, std::max({want, min_points, std::size_t{1}}));
}

template <typename T>
std::vector<T> subsample_items(std::span<const T> items, std::size_t n, std::uint64_t seed) {
    std::vector<T> out;
    for (auto i : subsample_indices(items.size(), n, seed)) out.push_back(items[i]);
    return out;
}

// Rank deficiency of J beyond the quaternion scale gauge, judged on the
// column-normalized normal matrix.
bool jacobian_degenerate(const Eigen::MatrixXd& jac) {
    const Eigen::MatrixXd normal = jac.transpose() * jac;
    const double max_diag = normal.diagonal().maxCoeff();
    if (!(max_diag > 0.0)) return true;
    Eigen::VectorXd d = normal.diagonal().cwiseMax(1e-30 * max_diag).cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd scaled = d.asDiagonal() * normal * d.asDiagonal();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = eig.eigenvalues();
    const double top = ev.maxCoeff();
    int tiny = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < 1e-9 * top) ++tiny;
    }
    return tiny > 1;
}

Eigen::VectorXd renormalize_quaternion(Eigen::VectorXd params) {
    const double n = params.head<4>().norm();
    if (n > 0.0) params.head<4>() /= n;
    return params;
}

RegistrationResult run_ladder(const PointSet& source_unit, const TargetSet& target_unit, const Normalization& norm,
                              const SimilarityTransform& theta_unit0, const RegistrationOptions& opts,
                              TransformMode mode) {
    opts.schedule.validate();
    opts.lm.validate();
    const auto ladder = make_sigma_ladder(opts.schedule.sigma0, opts.schedule.sigma_final,
                                          opts.schedule.sigma_factor);

    RegistrationResult result;
    result.normalization = norm;
    Eigen::VectorXd params = params_from_transform(theta_unit0, mode);
    bool failed = false;
    Eigen::MatrixXd last_jac;

    for (std::size_t level = 0; level < ladder.size(); ++level) {
        const double frac = opts.schedule.fraction_at(level);
        const std::size_t nd = level_count(source_unit.size(), frac, opts.schedule.min_points);
        const std::size_t nt = level_count(target_unit.size(), frac, opts.schedule.min_points);
        const std::uint64_t seed_d = mix_seed(opts.schedule.seed, 2 * level);
        const std::uint64_t seed_t = mix_seed(opts.schedule.seed, 2 * level + 1);

        PointSet src = subsample(source_unit, nd, seed_d);
        TargetSet tgt = target_unit.is_rays()
                            ? TargetSet::rays(subsample_items<Ray>(target_unit.as_rays(), nt, seed_t))
                            : TargetSet::points(subsample(target_unit.as_points(), nt, seed_t));

        KernelConfig kcfg = opts.kernel;
        kcfg.sigma = ladder[level];
        const FuzzyObjective obj(std::move(src), std::move(tgt), kcfg, mode, opts.backend);

        LeastSquaresProblem problem;
        problem.residuals = [&obj](const Eigen::VectorXd& x) { return obj.residuals(x); };
        problem.residuals_and_jacobian = [&obj](const Eigen::VectorXd& x, Eigen::VectorXd& e, Eigen::MatrixXd& j) {
            obj.evaluate(x, e, &j);
        };

        const LmResult lm = lm_minimize(problem, params, opts.lm);
        LevelRecord rec;
        rec.sigma = kcfg.sigma;
        rec.source_count = obj.source().size();
        rec.target_count = obj.target().size();
        rec.iterations = lm.iterations;
        rec.accepted_steps = lm.accepted_steps;
        rec.initial_energy = lm.initial_energy;
        rec.final_energy = lm.final_energy;
        rec.status = lm.status;

        params = renormalize_quaternion(lm.theta);
        rec.theta = denormalize_transform(transform_from_params(params, mode), norm);
        result.levels.push_back(rec);
        if (lm.status == LmStatus::Failed) failed = true;

        if (level + 1 == ladder.size()) {
            Eigen::VectorXd e;
            obj.evaluate(params, e, &last_jac);
        }
    }

    result.degenerate = jacobian_degenerate(last_jac);
    const LmStatus final_status = result.levels.back().status;
    result.converged = !failed && !result.degenerate &&
                       (final_status == LmStatus::Converged || final_status == LmStatus::Stalled);
    result.theta_unit = transform_from_params(params, mode);
    result.theta = denormalize_transform(result.theta_unit, norm);
    return result;
}

}  // namespace

RegistrationResult register_points(std::span<const Point3> source, std::span<const Point3> target,
                                   const RegistrationOptions& opts, std::optional<SimilarityTransform> theta0) {
    if (source.size() < 3 || target.size() < 3) throw DegenerateInput("registration needs at least 3 points per set");
    const SimilarityTransform init = theta0 ? *theta0 : centroid_alignment(source, target);
    if (!init.t.allFinite() || !std::isfinite(init.s) || !std::isfinite(init.q.norm())) {
        throw InvalidParameter("initial transform must be finite");
    }

    NormalizedPair unit = normalize_to_unit_cube(target, source);
    const Aabb src_box = Aabb::of(source);
    if (!(src_box.largest_edge() > 0.0)) throw DegenerateInput("source set has zero extent");

    const SimilarityTransform theta_unit0 = normalize_transform(init, unit.normalization);
    return run_ladder(unit.source, TargetSet::points(std::move(unit.target)), unit.normalization, theta_unit0, opts,
                      opts.mode);
}

RegistrationResult register_rays(std::span<const Point3> source, std::span<const Ray> rays,
                                 const RegistrationOptions& opts, const SimilarityTransform& theta0) {
    if (source.size() < 4 || rays.size() < 4) throw DegenerateInput("ray registration needs at least 4 points and rays");
    const double edge = Aabb::of(source).largest_edge();
    if (!(edge > 0.0)) throw DegenerateInput("source set has zero extent");

    // pure scaling keeps the center of projection at the origin
    const Normalization norm{Point3::Zero(), 1.0 / edge};
    PointSet unit;
    unit.reserve(source.size());
    for (const auto& p : source) unit.push_back(norm.apply(p));

    SimilarityTransform rigid0 = theta0;
    rigid0.s = 1.0;
    const SimilarityTransform theta_unit0 = normalize_transform(rigid0, norm);
    return run_ladder(unit, TargetSet::rays(RayBundle(rays.begin(), rays.end())), norm, theta_unit0, opts,
                      TransformMode::Rigid);
}

}  // namespace fuzzreg
