#include <cmath>

#include <Eigen/SVD>

#include "fuzzreg/error.hpp"
#include "fuzzreg/kdtree.hpp"
#include "fuzzreg/metrics.hpp"

namespace fuzzreg {

SimilarityTransform rigid_fit(std::span<const Point3> src, std::span<const Point3> dst, bool* failed) {
    if (src.size() != dst.size() || src.empty()) throw InvalidParameter("rigid fit needs paired, nonempty sets");
    const Point3 cs = centroid(src), cd = centroid(dst);
    Mat3 h = Mat3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) h += (src[i] - cs) * (dst[i] - cd).transpose();

    const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d sv = svd.singularValues();
    if (failed != nullptr) *failed = !(sv(1) > 1e-12 * std::max(sv(0), 1e-300));

    Mat3 d = Mat3::Identity();
    if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
    const Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();
    return SimilarityTransform::from_parts(r, cd - r * cs);
}

IcpResult icp_baseline(std::span<const Point3> source, std::span<const Point3> target, const IcpConfig& cfg,
                       const SimilarityTransform& theta0) {
    if (source.size() < 3 || target.size() < 3) throw DegenerateInput("ICP needs at least 3 points per set");
    if (cfg.max_iters < 1 || !(cfg.tol >= 0.0)) throw InvalidParameter("bad ICP configuration");

    const KdTree3 tree(std::vector<Eigen::Vector3d>(target.begin(), target.end()));
    IcpResult res;
    res.theta = theta0;
    res.theta.s = 1.0;
    PointSet matched(source.size());
    double prev = std::numeric_limits<double>::infinity();

    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        const Mat3 a = res.theta.linear();
        double mse = 0.0;
        for (std::size_t i = 0; i < source.size(); ++i) {
            const auto hit = tree.nearest(a * source[i] + res.theta.t);
            matched[i] = target[hit.index];
            mse += hit.dist2;
        }
        mse /= static_cast<double>(source.size());
        res.mse_trace.push_back(mse);
        res.iterations = it + 1;

        if (mse == 0.0 || (std::isfinite(prev) && prev - mse <= cfg.tol * prev)) {
            res.converged = true;
            break;
        }
        prev = mse;

        bool degenerate = false;
        const SimilarityTransform next = rigid_fit(source, matched, &degenerate);
        if (degenerate) {
            res.failed = true;
            break;
        }
        res.theta = next;
    }
    return res;
}

}  // namespace fuzzreg
