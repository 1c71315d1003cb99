#include "fuzzreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "fuzzreg/error.hpp"
#include "fuzzreg/random.hpp"
#include "fuzzreg/registration.hpp"

namespace fuzzreg {

double mean_vertex_distance(const SimilarityTransform& theta_est, const SimilarityTransform& theta_gt,
                            std::span<const Point3> model) {
    if (model.empty()) throw DegenerateInput("model is empty");
    const Mat3 ae = theta_est.linear(), ag = theta_gt.linear();
    double sum = 0.0;
    for (const auto& v : model) sum += ((ae * v + theta_est.t) - (ag * v + theta_gt.t)).norm();
    return sum / static_cast<double>(model.size());
}

namespace {

double point_segment_distance(const Point3& p, const Point3& a, const Point3& b) {
    const Point3 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

}  // namespace

double point_triangle_distance(const Point3& p, const Point3& a, const Point3& b, const Point3& c) {
    const Point3 ab = b - a, ac = c - a, ap = p - a;
    if (ab.cross(ac).squaredNorm() <= 1e-24 * ab.squaredNorm() * ac.squaredNorm()) {
        // degenerate: closest point lies on an edge
        return std::min({point_segment_distance(p, a, b), point_segment_distance(p, b, c),
                         point_segment_distance(p, c, a)});
    }
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return ap.norm();  // vertex a

    const Point3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return bp.norm();  // vertex b

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return (p - (a + d1 / (d1 - d3) * ab)).norm();  // edge ab

    const Point3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return cp.norm();  // vertex c

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return (p - (a + d2 / (d2 - d6) * ac)).norm();  // edge ac

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + w * (c - b))).norm();  // edge bc
    }

    const double denom = 1.0 / (va + vb + vc);
    const Point3 q = a + ab * (vb * denom) + ac * (vc * denom);
    return (p - q).norm();
}

CloudMeshDistance cloud_to_mesh_distance(std::span<const Point3> points, const Mesh& mesh) {
    if (mesh.faces.empty()) throw DegenerateInput("mesh has no faces");
    mesh.validate();
    CloudMeshDistance out;
    out.per_point.assign(points.size(), 0.0);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(points.size()); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& f : mesh.faces) {
            best = std::min(best, point_triangle_distance(points[i], mesh.vertices[f[0]], mesh.vertices[f[1]],
                                                          mesh.vertices[f[2]]));
        }
        out.per_point[i] = best;
    }
    double sum = 0.0;
    for (double d : out.per_point) {
        sum += d;
        out.max = std::max(out.max, d);
    }
    if (!points.empty()) out.mean = sum / static_cast<double>(points.size());
    return out;
}

char axis_name(Axis a) { return a == Axis::X ? 'x' : a == Axis::Y ? 'y' : 'z'; }

Axis parse_axis(const std::string& s) {
    if (s == "x" || s == "X") return Axis::X;
    if (s == "y" || s == "Y") return Axis::Y;
    if (s == "z" || s == "Z") return Axis::Z;
    throw InvalidParameter("axis must be x, y or z");
}

Point3 axis_vector(Axis a) { return Point3::Unit(a == Axis::X ? 0 : a == Axis::Y ? 1 : 2); }

void SweepSpec::validate() const {
    if (!(step_degrees > 0.0)) throw InvalidParameter("sweep step must be positive");
    if (!(min_degrees <= max_degrees)) throw InvalidParameter("sweep range must be ordered");
    if (trials < 1) throw InvalidParameter("sweep needs at least one trial per step");
    if (noise_fraction < 0.0 || outlier_fraction < 0.0) throw InvalidParameter("noise and outliers must be >= 0");
}

std::vector<double> SweepSpec::angles() const {
    validate();
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(std::floor((max_degrees - min_degrees) / step_degrees + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) out.push_back(min_degrees + static_cast<double>(i) * step_degrees);
    return out;
}

double SweepReport::success_rate() const { return fuzzreg::success_rate(*this, threshold); }

std::vector<std::pair<double, double>> SweepReport::step_means() const {
    std::map<double, std::pair<double, std::size_t>> acc;
    for (const auto& t : trials) {
        auto& a = acc[t.angle_deg];
        a.first += t.mean_error;
        ++a.second;
    }
    std::vector<std::pair<double, double>> out;
    for (const auto& [angle, a] : acc) out.emplace_back(angle, a.first / static_cast<double>(a.second));
    return out;
}

double success_rate(const SweepReport& report, double threshold) {
    if (report.trials.empty()) throw InvalidParameter("sweep report is empty");
    std::size_t ok = 0;
    for (const auto& t : report.trials) {
        if (!t.failed && t.mean_error < threshold) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(report.trials.size());
}

SweepReport rotation_sweep(std::span<const Point3> model, std::span<const Point3> scene,
                           const SimilarityTransform& theta_gt, std::span<const Point3> eval_points,
                           const SweepSpec& spec, const Registrar& registrar, double threshold) {
    spec.validate();
    if (model.empty() || scene.empty() || eval_points.empty()) throw DegenerateInput("sweep inputs must be nonempty");
    if (!registrar) throw InvalidParameter("sweep needs a registrar");

    SweepReport report;
    report.threshold = threshold > 0.0 ? threshold : 0.01 * Aabb::of(model).diagonal();
    const Point3 c = centroid(scene);
    const Aabb scene_box = Aabb::of(scene);
    const double scene_diag = scene_box.diagonal();
    const std::vector<double> angles = spec.angles();

    for (std::size_t ai = 0; ai < angles.size(); ++ai) {
        // rotation about the scene centroid
        SimilarityTransform P;
        P.q = Quaternion::from_axis_angle(axis_vector(spec.axis), angles[ai] * std::numbers::pi / 180.0);
        P.t = c - P.q.rotation_matrix() * c;
        const SimilarityTransform gt = transform_compose(theta_gt, transform_inverse(P));
        const PointSet eval = transform_apply(P, eval_points);

        for (std::size_t k = 0; k < spec.trials; ++k) {
            PointSet src = transform_apply(P, scene);
            if (spec.noise_fraction > 0.0 || spec.outlier_fraction > 0.0) {
                Rng rng(mix_seed(spec.seed, ai * spec.trials + k));
                for (auto& p : src) p += spec.noise_fraction * scene_diag * Point3(rng.normal(), rng.normal(), rng.normal());
                const auto n_out = static_cast<std::size_t>(spec.outlier_fraction * static_cast<double>(scene.size()));
                const Point3 half = 0.75 * scene_box.extent();
                for (std::size_t o = 0; o < n_out; ++o) {
                    const Point3 u(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
                    src.push_back(P.apply(scene_box.center() + half.cwiseProduct(u)));
                }
            }

            SweepTrial t;
            t.axis = spec.axis;
            t.angle_deg = angles[ai];
            t.trial = k;
            try {
                const SimilarityTransform est = registrar(src, model, centroid_alignment(src, model));
                t.mean_error = mean_vertex_distance(est, gt, eval);
                if (!std::isfinite(t.mean_error)) t.failed = true;
            } catch (const Error&) {
                t.failed = true;
            }
            if (t.failed) t.mean_error = std::numeric_limits<double>::infinity();
            t.success = !t.failed && t.mean_error < report.threshold;
            report.trials.push_back(t);
        }
    }
    return report;
}

}  // namespace fuzzreg
