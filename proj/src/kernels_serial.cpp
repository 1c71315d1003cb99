// Reference kernels: straightforward double loops with the chain rule
// written out through the full 3x7 point Jacobian. Kept for testing and
// benchmarking against the blocked kernels.

#include <algorithm>
#include <cmath>

#include "fuzzreg/kernels.hpp"

namespace fuzzreg::kernels::serial {

namespace {

using TwistJacobian = Eigen::Matrix<double, 3, 7>;

// dz / d(omega, t, log s) at a point with offset p = z - t
TwistJacobian twist_jacobian(const Point3& p) {
    TwistJacobian j;
    j.block<3, 3>(0, 0) << 0.0, p.z(), -p.y(),
                           -p.z(), 0.0, p.x(),
                           p.y(), -p.x(), 0.0;
    j.block<3, 3>(0, 3).setIdentity();
    j.col(6) = p;
    return j;
}

void resize(Sums& out, std::size_t rows, std::size_t cols, bool with_grad) {
    out.row.assign(rows, 0.0);
    out.col.assign(cols, 0.0);
    out.row_grad.assign(with_grad ? rows : 0, Twist::Zero());
    out.col_grad.assign(with_grad ? cols : 0, Twist::Zero());
}

}  // namespace

void point_sums(const PointInputs& in, Sums& out, bool with_grad) {
    const std::size_t n = in.z.size(), m = in.y.size();
    resize(out, n, m, with_grad);
    const double inv2s2 = 1.0 / (2.0 * in.sigma * in.sigma);
    const double invs2 = 1.0 / (in.sigma * in.sigma);
    const bool cut = in.cutoff_radius > 0.0;
    const double r2 = in.cutoff_radius * in.cutoff_radius;

    for (std::size_t i = 0; i < n; ++i) {
        double a = 0.0;
        Point3 g = Point3::Zero();
        for (std::size_t j = 0; j < m; ++j) {
            const Point3 d = in.y[j] - in.z[i];
            const double d2 = d.squaredNorm();
            if (cut && d2 > r2) continue;
            const double v = std::exp(-d2 * inv2s2) / in.target_density[j];
            a += v;
            if (with_grad) g += v * invs2 * d;
        }
        out.row[i] = a;
        if (with_grad) out.row_grad[i] = twist_jacobian(in.p[i]).transpose() * g;
    }

    for (std::size_t j = 0; j < m; ++j) {
        double b = 0.0;
        Twist grad = Twist::Zero();
        for (std::size_t i = 0; i < n; ++i) {
            const Point3 d = in.y[j] - in.z[i];
            const double d2 = d.squaredNorm();
            if (cut && d2 > r2) continue;
            const double w = std::exp(-d2 * inv2s2) / in.source_density[i];
            b += w;
            if (with_grad) {
                grad += w * invs2 * (twist_jacobian(in.p[i]).transpose() * d);
                if (!in.source_density_dlogs.empty()) grad(6) -= w * in.source_density_dlogs[i];
            }
        }
        out.col[j] = b;
        if (with_grad) out.col_grad[j] = grad;
    }
}

void ray_sums(const RayInputs& in, Sums& out, bool with_grad) {
    const std::size_t n = in.z.size(), m = in.r.size();
    resize(out, n, m, with_grad);
    const double inv2s2 = 1.0 / (2.0 * in.sigma * in.sigma);
    const double invs2 = 1.0 / (in.sigma * in.sigma);

    // -(z - (z.r) r): gradient direction of the kernel exponent, up to 1/sigma^2
    const auto toward_line = [](const Point3& z, const Point3& r) { return Point3((z.dot(r)) * r - z); };

    for (std::size_t i = 0; i < n; ++i) {
        double a = 0.0;
        Point3 g = Point3::Zero();
        for (std::size_t j = 0; j < m; ++j) {
            const double h = in.z[i].cross(in.r[j].d).squaredNorm();
            const double v = std::exp(-h * inv2s2) / in.target_density[j];
            a += v;
            if (with_grad) g += v * invs2 * toward_line(in.z[i], in.r[j].d);
        }
        out.row[i] = a;
        if (with_grad) out.row_grad[i] = twist_jacobian(in.p[i]).transpose() * g;
    }

    for (std::size_t j = 0; j < m; ++j) {
        double b = 0.0;
        Twist grad = Twist::Zero();
        for (std::size_t i = 0; i < n; ++i) {
            const double h = in.z[i].cross(in.r[j].d).squaredNorm();
            const double w = std::exp(-h * inv2s2) / in.source_density[i];
            b += w;
            if (with_grad) {
                grad += w * invs2 * (twist_jacobian(in.p[i]).transpose() * toward_line(in.z[i], in.r[j].d));
                if (!in.source_density_grad.empty()) grad -= w * in.source_density_grad[i];
            }
        }
        out.col[j] = b;
        if (with_grad) out.col_grad[j] = grad;
    }
}

RaySourceDensity ray_source_density(std::span<const Point3> z, std::span<const Point3> p, double sigma,
                                    bool with_grad) {
    const std::size_t n = z.size();
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    RaySourceDensity out;
    out.values.assign(n, 0.0);
    if (with_grad) out.grad_over_value.assign(n, Twist::Zero());

    for (std::size_t i = 0; i < n; ++i) {
        const double len = z[i].norm();
        const bool has_dir = len > 0.0;
        const Point3 dir = has_dir ? Point3(z[i] / len) : Point3::UnitZ();
        const TwistJacobian ji = twist_jacobian(p[i]);
        double eta = 0.0;
        Twist grad = Twist::Zero();
        for (std::size_t l = 0; l < n; ++l) {
            const double c = z[l].dot(dir);
            const double h = z[l].cross(dir).squaredNorm();
            const double k = std::exp(-h * inv2s2);
            eta += k;
            if (with_grad) {
                const Point3 u = 2.0 * (z[l] - c * dir);  // dh/dz_l
                Twist dh = twist_jacobian(p[l]).transpose() * u;
                if (has_dir) dh += ji.transpose() * Point3(-c * u / len);  // dh/dz_i through the line direction
                grad += -k * inv2s2 * dh;
            }
        }
        out.values[i] = eta;
        if (with_grad) out.grad_over_value[i] = grad / eta;
    }
    return out;
}

}  // namespace fuzzreg::kernels::serial
