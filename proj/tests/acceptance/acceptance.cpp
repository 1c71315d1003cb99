// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Fixtures are synthetic and seeded.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "fuzzreg/camera.hpp"
#include "fuzzreg/fuzzy_energy.hpp"
#include "fuzzreg/lm_solver.hpp"
#include "fuzzreg/metrics.hpp"
#include "fuzzreg/objective.hpp"
#include "fuzzreg/registration.hpp"
#include "fuzzreg/voxelizer.hpp"
#include "fixtures.hpp"
#include "oracle.hpp"

using namespace fuzzreg;
using fuzzreg::testing::random_points;
using fuzzreg::testing::random_transform;
using fuzzreg::testing::random_unit;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

std::vector<oracle::V3> to_v3(const PointSet& p) {
    std::vector<oracle::V3> out;
    for (const auto& x : p) out.push_back({x.x(), x.y(), x.z()});
    return out;
}

RayBundle random_rays(std::size_t n, Rng& rng) {
    RayBundle r;
    for (std::size_t i = 0; i < n; ++i) r.push_back(Ray::through({rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 1.0}));
    return r;
}

PointSet in_front(PointSet p) {
    for (auto& x : p) x.z() += 3.0;
    return p;
}

KernelConfig exact_cfg(double sigma, double k, double alpha) {
    KernelConfig c;
    c.sigma = sigma;
    c.k = k;
    c.alpha = alpha;
    c.truncation = Truncation::Exact;
    return c;
}

// Bit pattern of a double sequence, for determinism checks.
struct Fingerprint {
    std::vector<double> values;

    void add(double v) { values.push_back(v); }
    void add(const SimilarityTransform& T) {
        add(T.q.w), add(T.q.x), add(T.q.y), add(T.q.z);
        add(T.t.x()), add(T.t.y()), add(T.t.z()), add(T.s);
    }
    bool operator==(const Fingerprint& o) const {
        return values.size() == o.values.size() &&
               std::memcmp(values.data(), o.values.data(), values.size() * sizeof(double)) == 0;
    }
};

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const Outcome& o, double secs) {
    std::printf("CRITERION %d %s: %s (%.2f s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
}

template <typename... A>
std::string fmt(const char* f, A... a) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

// 1 -----------------------------------------------------------------------

Outcome oracle_equivalence() {
    Rng rng(101);
    double worst = 0.0;
    const double sigmas[] = {0.05, 0.2, 0.5};
    for (int inst = 0; inst < 25; ++inst) {
        const double sigma = sigmas[inst % 3];
        const double k = rng.uniform(0.5, 8.0), alpha = rng.uniform();
        const auto cfg = exact_cfg(sigma, k, alpha);
        {
            const PointSet d = random_points(1 + rng.below(20), rng), s = random_points(1 + rng.below(20), rng);
            const auto T = random_transform(rng, 0.5, 0.1, true);
            const PointSet moved = transform_apply(T, d);
            const auto ref = oracle::points(to_v3(moved), to_v3(s), sigma, k, alpha);
            const TargetSet ts = TargetSet::points(s);
            worst = std::max({worst, rel(proximity(moved, ts, cfg), ref.proximity),
                              rel(coverage(moved, ts, cfg), ref.coverage), rel(energy(T, d, ts, cfg), ref.energy)});
        }
        {
            const PointSet d = in_front(random_points(1 + rng.below(20), rng));
            const RayBundle r = random_rays(1 + rng.below(20), rng);
            std::vector<oracle::V3> rv;
            for (const auto& ray : r) rv.push_back({ray.d.x(), ray.d.y(), ray.d.z()});
            const auto ref = oracle::rays(to_v3(d), rv, sigma, k, alpha);
            const TargetSet ts = TargetSet::rays(r);
            worst = std::max({worst, rel(proximity(d, ts, cfg), ref.proximity), rel(coverage(d, ts, cfg), ref.coverage),
                              rel(energy(SimilarityTransform::identity(), d, ts, cfg), ref.energy)});
        }
    }
    return {worst <= 1e-12, fmt("25 point + 25 ray instances, worst relative deviation %.2e (limit 1e-12)", worst)};
}

// 2 -----------------------------------------------------------------------

double matrix_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

Outcome gradient_check() {
    Rng rng(202);
    double worst_fd = 0.0, worst_an = 0.0;
    for (int probe = 0; probe < 20; ++probe) {
        const double sigma = std::array{0.5, 0.2, 0.1, 0.05}[probe % 4];
        std::unique_ptr<FuzzyObjective> obj;
        Eigen::VectorXd x;
        if (probe % 5 == 4) {
            const PointSet d = in_front(random_points(25, rng));
            const RayBundle r = random_rays(20, rng);
            obj = std::make_unique<FuzzyObjective>(d, TargetSet::rays(r), exact_cfg(sigma, 2.0, 0.5), TransformMode::Rigid);
            x = params_from_transform(random_transform(rng, 0.1, 0.05, false), TransformMode::Rigid);
        } else {
            const auto mode = probe % 2 ? TransformMode::Similarity : TransformMode::Rigid;
            const PointSet d = random_points(30, rng), s = random_points(30, rng);
            obj = std::make_unique<FuzzyObjective>(d, TargetSet::points(s), exact_cfg(sigma, rng.uniform(1, 6), 0.5), mode);
            x = params_from_transform(random_transform(rng, 0.4, 0.1, mode == TransformMode::Similarity), mode);
        }
        const auto f = [&](const Eigen::VectorXd& p) { return obj->residuals(p); };
        const Eigen::MatrixXd fd0 = fd_jacobian(f, x, {1e-6});
        const Eigen::MatrixXd fd1 = fd_jacobian(f, x, {1e-7});
        Eigen::VectorXd r;
        Eigen::MatrixXd J;
        obj->evaluate(x, r, &J);
        worst_fd = std::max(worst_fd, matrix_rel(fd1, fd0));
        worst_an = std::max(worst_an, matrix_rel(J, fd0));
    }
    return {worst_fd <= 1e-3 && worst_an <= 1e-4,
            fmt("20 probes: FD h0 vs h0/10 %.2e (limit 1e-3), analytic vs central FD %.2e (limit 1e-4)", worst_fd,
                worst_an)};
}

// 3 -----------------------------------------------------------------------

Outcome bounds_suite() {
    Rng rng(303);
    std::size_t violations = 0;
    double pmin = 1.0, pmax = 0.0, dmin = 1e300;
    for (int inst = 0; inst < 1000; ++inst) {
        const auto cfg = exact_cfg(std::exp(rng.uniform(std::log(1e-3), std::log(2.0))), rng.uniform(0.1, 10.0),
                                   rng.uniform());
        const bool rays = inst % 4 == 3;
        const PointSet d = rays ? in_front(random_points(1 + rng.below(30), rng)) : random_points(1 + rng.below(30), rng);
        const TargetSet t = rays ? TargetSet::rays(random_rays(1 + rng.below(30), rng))
                                 : TargetSet::points(random_points(1 + rng.below(30), rng));
        const double p = proximity(d, t, cfg), c = coverage(d, t, cfg);
        for (double v : {p, c}) {
            pmin = std::min(pmin, v);
            pmax = std::max(pmax, v);
            if (!(v >= 0.5 && v < 1.0)) ++violations;
        }
        for (const auto& dens : {target_density(t, cfg.sigma), source_density(d, t, cfg.sigma)}) {
            for (double v : dens.values) {
                dmin = std::min(dmin, v);
                if (!(v >= 1.0)) ++violations;
            }
        }
    }
    return {violations == 0, fmt("1000 instances, scores in [%.6f, %.6f], min density %.6f, %zu violations", pmin, pmax,
                                 dmin, violations)};
}

// 4 / 5 -------------------------------------------------------------------

struct RigidFixture {
    PointSet model;
    testing::NoisyScan scan;
};

RigidFixture rigid_fixture() {
    RigidFixture f;
    f.model = testing::creature(2000, 7);
    SimilarityTransform gt;  // translation only: the sweep angle is the initial misalignment
    gt.t = {0.5, -0.2, 0.3};
    f.scan = testing::noisy_scan(f.model, gt, 0.6, 0.005, 0.1, 11);
    return f;
}

std::vector<SweepReport> sweep_all_axes(const RigidFixture& f, const Registrar& reg) {
    std::vector<SweepReport> out;
    for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
        SweepSpec spec;
        spec.axis = a;
        spec.step_degrees = 5;
        spec.max_degrees = 60;
        spec.seed = 4;
        out.push_back(rotation_sweep(f.model, f.scan.points, f.scan.gt, f.scan.clean, spec, reg));
    }
    return out;
}

Registrar fuzzy_registrar(const RegistrationOptions& opts) {
    return [opts](std::span<const Point3> s, std::span<const Point3> t, const SimilarityTransform& th0) {
        return register_points(s, t, opts, th0).theta;
    };
}

Registrar icp_registrar() {
    return [](std::span<const Point3> s, std::span<const Point3> t, const SimilarityTransform& th0) {
        return icp_baseline(s, t, {}, th0).theta;
    };
}

// Largest angle a with every angle <= a successful; -1 when 0 already fails.
double success_range(const SweepReport& r) {
    double top = -1.0;
    for (const auto& t : r.trials) {
        if (!t.success) break;
        top = t.angle_deg;
    }
    return top;
}

void fingerprint(Fingerprint& fp, const std::vector<SweepReport>& reps) {
    for (const auto& r : reps)
        for (const auto& t : r.trials) fp.add(t.mean_error);
}

// Records every estimated transform into fp as well.
std::vector<SweepReport> run_rigid_sweep(const RigidFixture& f, Fingerprint& fp) {
    const Registrar inner = fuzzy_registrar(default_options(TransformMode::Rigid));
    auto reps = sweep_all_axes(f, [&](std::span<const Point3> s, std::span<const Point3> t,
                                      const SimilarityTransform& th0) {
        const SimilarityTransform est = inner(s, t, th0);
        fp.add(est);
        return est;
    });
    fingerprint(fp, reps);
    return reps;
}

Outcome rigid_recovery(const std::vector<SweepReport>& reps, double secs) {
    std::size_t ok = 0, n = 0;
    std::string per_axis;
    for (const auto& r : reps) {
        std::size_t a = 0;
        for (const auto& t : r.trials) a += t.success;
        ok += a;
        n += r.trials.size();
        per_axis += fmt(" %c:%zu/%zu", axis_name(r.trials.front().axis), a, r.trials.size());
    }
    const double rate = n ? double(ok) / n : 0.0;
    return {rate >= 0.90 && secs < 900.0,
            fmt("success %zu/%zu = %.3f (need >= 0.90; threshold 1%% bbox diagonal)%s", ok, n, rate, per_axis.c_str())};
}

Outcome robustness_ordering(const std::vector<SweepReport>& fuzzy, const std::vector<SweepReport>& icp) {
    bool contains = true, strict = false, icp_fails_high = false;
    std::string detail;
    for (std::size_t a = 0; a < 3; ++a) {
        const double rf = success_range(fuzzy[a]), ri = success_range(icp[a]);
        contains = contains && rf >= ri;
        strict = strict || rf > ri;
        for (std::size_t k = 0; k < icp[a].trials.size(); ++k) {
            const auto& ti = icp[a].trials[k];
            if (ti.angle_deg >= 45.0 && !ti.success && fuzzy[a].trials[k].success) icp_fails_high = true;
        }
        detail += fmt(" %c: fuzzy 0-%g deg, icp %s;", axis_name(fuzzy[a].trials.front().axis), rf,
                      ri < 0 ? "none" : fmt("0-%g deg", ri).c_str());
    }
    detail += fmt(" strict containment %s, icp fails >=45 deg where fuzzy succeeds: %s", contains && strict ? "yes" : "no",
                  icp_fails_high ? "yes" : "no");
    return {contains && strict && icp_fails_high, detail};
}

// 6 -----------------------------------------------------------------------

struct SimilarityRun {
    std::size_t ok = 0;
    double worst_scale = 0.0, worst_err = 0.0;
    Fingerprint fp;
};

SimilarityRun run_similarity() {
    SimilarityRun out;
    const PointSet model = testing::creature(2000, 7);
    const double diag = Aabb::of(model).diagonal();
    const double scales[4] = {0.5, 0.75, 1.5, 2.0};
    for (int trial = 0; trial < 10; ++trial) {
        Rng rng(500 + trial);
        SimilarityTransform gt;
        gt.s = scales[trial % 4];
        gt.q = Quaternion::from_axis_angle(random_unit(rng), 20.0 * std::numbers::pi / 180.0);
        gt.t = Point3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
        const auto scan = testing::noisy_scan(model, gt, 0.6, 0.005, 0.1, 900 + trial);
        auto opts = default_options(TransformMode::Similarity);
        opts.schedule.seed = trial;
        const auto res = register_points(scan.points, model, opts);
        const double scale_err = std::abs(res.theta.s / gt.s - 1.0);
        const double err = mean_vertex_distance(res.theta, gt, scan.clean) / diag;
        out.ok += scale_err < 0.02 && err < 0.01;
        out.worst_scale = std::max(out.worst_scale, scale_err);
        out.worst_err = std::max(out.worst_err, err);
        out.fp.add(res.theta);
        out.fp.add(err);
    }
    return out;
}

// 7 -----------------------------------------------------------------------

struct RayRun {
    std::size_t ok = 0;
    double worst_mean = 0.0, worst_p95 = 0.0;
    Fingerprint fp;
};

RayRun run_rays() {
    RayRun out;
    const CameraIntrinsics K{1000, 1000, 319.5, 239.5, 640, 480};
    for (int trial = 0; trial < 10; ++trial) {
        Rng rng(1000 + trial);
        const PointSet D = testing::creature(500, 77 + trial);
        SimilarityTransform gt;
        gt.q = Quaternion::from_axis_angle(random_unit(rng), rng.uniform(0.0, 0.5));
        gt.t = Point3(0, 0, 6);
        const auto proj = project_points(K, gt, D);
        RayBundle rays;
        for (const auto& p : proj) rays.push_back(pixel_to_ray(K, p.u, p.v));

        // 10 degrees about the scene centroid plus a shift of 10% of its depth
        const Point3 c = centroid(transform_apply(gt, D));
        SimilarityTransform pert;
        pert.q = Quaternion::from_axis_angle(random_unit(rng), 10.0 * std::numbers::pi / 180.0);
        pert.t = c - pert.q.rotation_matrix() * c + 0.1 * c.z() * random_unit(rng);
        const SimilarityTransform theta0 = transform_compose(pert, gt);

        auto opts = default_ray_options();
        opts.schedule.seed = trial;
        const auto res = register_rays(D, rays, opts, theta0);
        const auto est = project_points(K, res.theta, D);
        ReprojectionReport rep;
        for (std::size_t i = 0; i < D.size(); ++i) {
            rep.distances.push_back(est[i].behind ? std::numeric_limits<double>::infinity()
                                                  : std::hypot(est[i].u - proj[i].u, est[i].v - proj[i].v));
        }
        const double mean = rep.mean(), p95 = rep.percentile(0.95);
        out.ok += mean < 2.0 && p95 < 3.0;
        out.worst_mean = std::max(out.worst_mean, mean);
        out.worst_p95 = std::max(out.worst_p95, p95);
        out.fp.add(res.theta);
        out.fp.add(mean);
        out.fp.add(p95);
    }
    return out;
}

// 8 -----------------------------------------------------------------------

// Cells of an n^3 block that have at least one face on the block boundary.
std::size_t block_shell_cells(int n) {
    std::size_t c = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) c += (i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1);
    return c;
}

Outcome voxelizer_exactness() {
    const Mesh cube = testing::box_mesh({0, 0, 0}, {1, 1, 1});
    const std::size_t cube_pts = mesh_to_pointset(cube, 4).size();
    const std::size_t expected = block_shell_cells(4);

    const Mesh inner = testing::box_mesh({0.35, 0.35, 0.35}, {0.65, 0.65, 0.65});
    const PointSet nested = mesh_to_pointset(testing::merge(cube, inner), 16);
    const double cell = 1.0 / 16;
    std::size_t from_inner = 0;
    for (const auto& p : nested)
        if ((p.array() > 0.35 - cell).all() && (p.array() < 0.65 + cell).all()) ++from_inner;

    Rng rng(808);
    std::size_t not_idempotent = 0;
    for (int g = 0; g < 100; ++g) {
        VoxelGrid grid(Point3::Zero(), 1.0, {6 + int(rng.below(10)), 6 + int(rng.below(10)), 6 + int(rng.below(10))});
        const double fill = rng.uniform(0.02, 0.6);
        for (auto& c : grid.data()) c = rng.uniform() < fill;
        const VoxelGrid once = morph_close(grid);
        if (!(morph_close(once) == once)) ++not_idempotent;
    }
    return {cube_pts == expected && from_inner == 0 && not_idempotent == 0 && !nested.empty(),
            fmt("cube@4: %zu cells (oracle %zu); enclosed component points: %zu of %zu; non-idempotent closings: "
                "%zu/100",
                cube_pts, expected, from_inner, nested.size(), not_idempotent)};
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");

    auto t0 = Clock::now();
    auto o = oracle_equivalence();
    double s = seconds_since(t0);
    o.pass = o.pass && s < 1.0;
    report(1, o, s);

    t0 = Clock::now();
    o = gradient_check();
    s = seconds_since(t0);
    o.pass = o.pass && s < 10.0;
    report(2, o, s);

    t0 = Clock::now();
    o = bounds_suite();
    s = seconds_since(t0);
    o.pass = o.pass && s < 5.0;
    report(3, o, s);

    const RigidFixture fixture = rigid_fixture();
    t0 = Clock::now();
    Fingerprint fp4;
    const auto fuzzy = run_rigid_sweep(fixture, fp4);
    const double s4 = seconds_since(t0);
    report(4, rigid_recovery(fuzzy, s4), s4);

    t0 = Clock::now();
    const auto icp = sweep_all_axes(fixture, icp_registrar());
    report(5, robustness_ordering(fuzzy, icp), seconds_since(t0));

    t0 = Clock::now();
    const SimilarityRun sim = run_similarity();
    const double s6 = seconds_since(t0);
    report(6, {sim.ok >= 9 && s6 < 600.0,
               fmt("%zu/10 trials within 2%% scale and 1%% diagonal (worst scale error %.4f, worst error %.5f diag)",
                   sim.ok, sim.worst_scale, sim.worst_err)},
           s6);

    t0 = Clock::now();
    const RayRun rays = run_rays();
    const double s7 = seconds_since(t0);
    report(7, {rays.ok >= 9 && s7 < 300.0,
               fmt("%zu/10 trials with mean < 2 px and p95 < 3 px (worst mean %.3f px, worst p95 %.3f px)", rays.ok,
                   rays.worst_mean, rays.worst_p95)},
           s7);

    t0 = Clock::now();
    o = voxelizer_exactness();
    s = seconds_since(t0);
    o.pass = o.pass && s < 30.0;
    report(8, o, s);

    t0 = Clock::now();
    {
        Fingerprint again4;
        run_rigid_sweep(fixture, again4);
        const bool same4 = again4 == fp4;
        const bool same6 = run_similarity().fp == sim.fp;
        const bool same7 = run_rays().fp == rays.fp;
        report(9, {same4 && same6 && same7,
                   fmt("rerun bit-identical: rigid sweep %s, similarity %s, rays %s", same4 ? "yes" : "no",
                       same6 ? "yes" : "no", same7 ? "yes" : "no")},
               seconds_since(t0));
    }

    // Reference values from the original experiments on real scans; the data
    // is not bundled, so they are printed for context and never compared.
    report(10, {true, "documentation only: dataset success rates 0.80-0.98, best cloud-mesh mean ~0.063, "
                      "LiDAR band ~5 cm; not asserted"},
           0.0);

    std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
