// Blocked, fused kernels. Each source point is visited once per call; the
// kernel value feeds both its row sum and the column partials of its block.
// Block boundaries depend only on the problem size, and column partials are
// reduced block by block in index order, so the result is the same for any
// number of threads.

#include <algorithm>
#include <cmath>
#include <optional>

#include "fuzzreg/kernels.hpp"

namespace fuzzreg::kernels::parallel {

namespace {

constexpr std::size_t kMinBlock = 256;
constexpr std::size_t kMaxBlocks = 64;

std::size_t block_size(std::size_t n) { return std::max(kMinBlock, (n + kMaxBlocks - 1) / kMaxBlocks); }

void resize(Sums& out, std::size_t rows, std::size_t cols, bool with_grad) {
    out.row.assign(rows, 0.0);
    out.col.assign(cols, 0.0);
    out.row_grad.assign(with_grad ? rows : 0, Twist::Zero());
    out.col_grad.assign(with_grad ? cols : 0, Twist::Zero());
}

// Column partials for point targets: sum w, sum w p, sum w |p|^2, sum w dlogs_i
struct PointCol {
    double w = 0.0;
    Point3 wp = Point3::Zero();
    double wpp = 0.0;
    double wd = 0.0;
};

// Column partials for ray targets: sum w, sum w p, sum w c, sum w c p,
// sum w |p|^2, sum w * grad(eta_i)/eta_i
struct RayCol {
    double w = 0.0;
    Point3 wp = Point3::Zero();
    double wc = 0.0;
    Point3 wcp = Point3::Zero();
    double wpp = 0.0;
    Twist wg = Twist::Zero();
};

template <bool Grad>
void point_sums_impl(const PointInputs& in, Sums& out) {
    const std::size_t n = in.z.size(), m = in.y.size();
    const double inv2s2 = 1.0 / (2.0 * in.sigma * in.sigma);
    const double invs2 = 1.0 / (in.sigma * in.sigma);
    const bool cut = in.cutoff_radius > 0.0;
    const bool has_dlogs = !in.source_density_dlogs.empty();

    std::optional<SpatialGrid> local_grid;
    const SpatialGrid* grid = in.target_grid;
    if (cut && (grid == nullptr || grid->cell_size() < in.cutoff_radius)) {
        local_grid.emplace(in.y, in.cutoff_radius);
        grid = &*local_grid;
    }

    const std::size_t bs = block_size(n);
    const std::size_t nblocks = (n + bs - 1) / bs;
    std::vector<PointCol> partial(nblocks * m);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
        PointCol* cols = partial.data() + static_cast<std::size_t>(b) * m;
        const std::size_t end = std::min(n, (static_cast<std::size_t>(b) + 1) * bs);
        for (std::size_t i = static_cast<std::size_t>(b) * bs; i < end; ++i) {
            const Point3& zi = in.z[i];
            const Point3& pi = in.p[i];
            const double inv_eta = 1.0 / in.source_density[i];
            const double ppi = pi.squaredNorm();
            const double dl = has_dlogs ? in.source_density_dlogs[i] : 0.0;
            double a = 0.0;
            Point3 vy = Point3::Zero();

            auto visit = [&](std::size_t j, double d2) {
                const double k = std::exp(-d2 * inv2s2);
                const double v = k / in.target_density[j];
                const double w = k * inv_eta;
                a += v;
                PointCol& c = cols[j];
                c.w += w;
                if constexpr (Grad) {
                    vy += v * in.y[j];
                    c.wp += w * pi;
                    c.wpp += w * ppi;
                    c.wd += w * dl;
                }
            };
            if (cut) {
                grid->for_each_within(zi, in.cutoff_radius, visit);
            } else {
                for (std::size_t j = 0; j < m; ++j) visit(j, (in.y[j] - zi).squaredNorm());
            }

            out.row[i] = a;
            if constexpr (Grad) out.row_grad[i] = point_twist(pi, invs2 * (vy - a * zi));
        }
    }

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(m); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        PointCol acc;
        for (std::size_t b = 0; b < nblocks; ++b) {
            const PointCol& c = partial[b * m + j];
            acc.w += c.w;
            if constexpr (Grad) {
                acc.wp += c.wp;
                acc.wpp += c.wpp;
                acc.wd += c.wd;
            }
        }
        out.col[j] = acc.w;
        if constexpr (Grad) {
            // sum_i w_ij * twist(p_i, y_j - z_i), using z_i = p_i + t
            const Point3 yt = in.y[j] - in.t;
            Twist g;
            g.head<3>() = acc.wp.cross(yt);
            g.segment<3>(3) = acc.w * yt - acc.wp;
            g(6) = acc.wp.dot(yt) - acc.wpp;
            g *= invs2;
            g(6) -= acc.wd;
            out.col_grad[j] = g;
        }
    }
}

template <bool Grad>
void ray_sums_impl(const RayInputs& in, Sums& out) {
    const std::size_t n = in.z.size(), m = in.r.size();
    const double inv2s2 = 1.0 / (2.0 * in.sigma * in.sigma);
    const double invs2 = 1.0 / (in.sigma * in.sigma);
    const bool has_eta_grad = !in.source_density_grad.empty();

    const std::size_t bs = block_size(n);
    const std::size_t nblocks = (n + bs - 1) / bs;
    std::vector<RayCol> partial(nblocks * m);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
        RayCol* cols = partial.data() + static_cast<std::size_t>(b) * m;
        const std::size_t end = std::min(n, (static_cast<std::size_t>(b) + 1) * bs);
        for (std::size_t i = static_cast<std::size_t>(b) * bs; i < end; ++i) {
            const Point3& zi = in.z[i];
            const Point3& pi = in.p[i];
            const double ppi = pi.squaredNorm();
            const double inv_eta = 1.0 / in.source_density[i];
            double a = 0.0;
            Point3 vcr = Point3::Zero();
            for (std::size_t j = 0; j < m; ++j) {
                const Point3& rj = in.r[j].d;
                const double c = zi.dot(rj);
                const double h = zi.cross(rj).squaredNorm();
                const double k = std::exp(-h * inv2s2);
                const double v = k / in.target_density[j];
                const double w = k * inv_eta;
                a += v;
                RayCol& col = cols[j];
                col.w += w;
                if constexpr (Grad) {
                    vcr += (v * c) * rj;
                    col.wp += w * pi;
                    col.wc += w * c;
                    col.wcp += (w * c) * pi;
                    col.wpp += w * ppi;
                    if (has_eta_grad) col.wg += w * in.source_density_grad[i];
                }
            }
            out.row[i] = a;
            if constexpr (Grad) out.row_grad[i] = point_twist(pi, invs2 * (vcr - a * zi));
        }
    }

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(m); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        RayCol acc;
        for (std::size_t b = 0; b < nblocks; ++b) {
            const RayCol& c = partial[b * m + j];
            acc.w += c.w;
            if constexpr (Grad) {
                acc.wp += c.wp;
                acc.wc += c.wc;
                acc.wcp += c.wcp;
                acc.wpp += c.wpp;
                acc.wg += c.wg;
            }
        }
        out.col[j] = acc.w;
        if constexpr (Grad) {
            // sum_i w_ij * twist(p_i, c_ij r_j - z_i), using z_i = p_i + t
            const Point3& rj = in.r[j].d;
            Twist g;
            g.head<3>() = in.t.cross(acc.wp) + acc.wcp.cross(rj);
            g.segment<3>(3) = acc.wc * rj - acc.wp - acc.w * in.t;
            g(6) = acc.wcp.dot(rj) - acc.wpp - acc.wp.dot(in.t);
            g *= invs2;
            g -= acc.wg;
            out.col_grad[j] = g;
        }
    }
}

}  // namespace

void point_sums(const PointInputs& in, Sums& out, bool with_grad) {
    resize(out, in.z.size(), in.y.size(), with_grad);
    if (with_grad) {
        point_sums_impl<true>(in, out);
    } else {
        point_sums_impl<false>(in, out);
    }
}

void ray_sums(const RayInputs& in, Sums& out, bool with_grad) {
    resize(out, in.z.size(), in.r.size(), with_grad);
    if (with_grad) {
        ray_sums_impl<true>(in, out);
    } else {
        ray_sums_impl<false>(in, out);
    }
}

RaySourceDensity ray_source_density(std::span<const Point3> z, std::span<const Point3> p, double sigma,
                                    bool with_grad) {
    const std::size_t n = z.size();
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    RaySourceDensity out;
    out.values.assign(n, 0.0);
    if (with_grad) out.grad_over_value.assign(n, Twist::Zero());

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double len = z[i].norm();
        const bool has_dir = len > 0.0;
        const Point3 dir = has_dir ? Point3(z[i] / len) : Point3::UnitZ();
        double eta = 0.0;
        // sum k (p_l x u), sum k u, sum k p_l.u, sum k c u  with u = dh/dz_l
        Point3 pxu = Point3::Zero(), su = Point3::Zero(), scu = Point3::Zero();
        double spu = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            const double c = z[l].dot(dir);
            const double h = z[l].cross(dir).squaredNorm();
            const double k = std::exp(-h * inv2s2);
            eta += k;
            if (with_grad) {
                const Point3 u = 2.0 * (z[l] - c * dir);
                const Point3 ku = k * u;
                pxu += p[l].cross(ku);
                su += ku;
                spu += p[l].dot(ku);
                scu += c * ku;
            }
        }
        out.values[i] = eta;
        if (with_grad) {
            Twist g;
            g.head<3>() = pxu;
            g.segment<3>(3) = su;
            g(6) = spu;
            if (has_dir) g += point_twist(p[i], Point3(-scu / len));
            out.grad_over_value[i] = (-inv2s2 / eta) * g;
        }
    }
    return out;
}

}  // namespace fuzzreg::kernels::parallel

namespace fuzzreg::kernels {

Eigen::Matrix<double, 3, 4> omega_from_dq(const Quaternion& q) {
    // omega = 2 vec(dq (x) conj(q^)) / |q|; the radial part of dq drops out
    const double n = q.norm();
    const Quaternion u = q.normalized();
    Eigen::Matrix<double, 3, 4> m;
    m.col(0) = Point3(-u.x, -u.y, -u.z);
    m.block<3, 3>(0, 1) << u.w, -u.z, u.y,
                           u.z, u.w, -u.x,
                           -u.y, u.x, u.w;
    return (2.0 / n) * m;
}

}  // namespace fuzzreg::kernels
