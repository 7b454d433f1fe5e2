#include "taxaudit/kernels.hpp"

#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace taxaudit::kernels {

namespace {
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr Eigen::Index kParallelWork = 1 << 15;
}  // namespace

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace omp {

Eigen::VectorXd column_means(const Eigen::MatrixXd& m) {
    Eigen::VectorXd out(m.cols());
    const double n = static_cast<double>(m.rows());
    const Eigen::Index cols = m.cols();
#pragma omp parallel for schedule(static) if (m.size() > kParallelWork)
    for (Eigen::Index c = 0; c < cols; ++c) {
        double s = 0.0;
        for (Eigen::Index r = 0; r < m.rows(); ++r) s += m(r, c);
        out(c) = s / n;
    }
    return out;
}

void assign_nearest(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                    std::span<int> assignments, std::span<double> distances) {
    const Eigen::Index n = points.rows();
    const Eigen::Index dim = points.cols();
    const Eigen::Index k = centroids.rows();
#pragma omp parallel for schedule(static) if (n * k * dim > kParallelWork)
    for (Eigen::Index i = 0; i < n; ++i) {
        int best = 0;
        double best_d = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) {
            double d = 0.0;
            for (Eigen::Index c = 0; c < dim; ++c) {
                double diff = points(i, c) - centroids(j, c);
                d += diff * diff;
            }
            if (j == 0 || d < best_d) {
                best_d = d;
                best = static_cast<int>(j);
            }
        }
        assignments[static_cast<std::size_t>(i)] = best;
        distances[static_cast<std::size_t>(i)] = best_d;
    }
}

CentroidUpdate update_centroids(const Eigen::MatrixXd& points, std::span<const int> assignments, int k) {
    CentroidUpdate out{Eigen::MatrixXd::Zero(k, points.cols()), std::vector<int>(static_cast<std::size_t>(k), 0)};
    const Eigen::Index n = points.rows();
    const Eigen::Index dim = points.cols();
    for (Eigen::Index i = 0; i < n; ++i) ++out.counts[static_cast<std::size_t>(assignments[static_cast<std::size_t>(i)])];
    // one column per iteration (contiguous in column-major storage); each sum runs over points in index order
#pragma omp parallel for schedule(static) if (n * dim > kParallelWork)
    for (Eigen::Index c = 0; c < dim; ++c) {
        for (Eigen::Index i = 0; i < n; ++i) out.centroids(assignments[static_cast<std::size_t>(i)], c) += points(i, c);
        for (int j = 0; j < k; ++j) {
            if (out.counts[static_cast<std::size_t>(j)] > 0) out.centroids(j, c) /= out.counts[static_cast<std::size_t>(j)];
        }
    }
    return out;
}

double inertia(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
               std::span<const int> assignments) {
    const Eigen::Index n = points.rows();
    std::vector<double> per_point(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static) if (n * points.cols() > kParallelWork)
    for (Eigen::Index i = 0; i < n; ++i) {
        const int j = assignments[static_cast<std::size_t>(i)];
        double d = 0.0;
        for (Eigen::Index c = 0; c < points.cols(); ++c) {
            double diff = points(i, c) - centroids(j, c);
            d += diff * diff;
        }
        per_point[static_cast<std::size_t>(i)] = d;
    }
    double total = 0.0;
    for (double d : per_point) total += d;
    return total;
}

}  // namespace omp

}  // namespace taxaudit::kernels
