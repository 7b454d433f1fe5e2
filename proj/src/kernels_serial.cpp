#include "taxaudit/kernels.hpp"

namespace taxaudit::kernels::serial {

Eigen::VectorXd column_means(const Eigen::MatrixXd& m) {
    Eigen::VectorXd out(m.cols());
    const double n = static_cast<double>(m.rows());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        double s = 0.0;
        for (Eigen::Index r = 0; r < m.rows(); ++r) s += m(r, c);
        out(c) = s / n;
    }
    return out;
}

void assign_nearest(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                    std::span<int> assignments, std::span<double> distances) {
    const Eigen::Index dim = points.cols();
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        int best = 0;
        double best_d = 0.0;
        for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
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
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        int j = assignments[static_cast<std::size_t>(i)];
        out.centroids.row(j) += points.row(i);
        ++out.counts[static_cast<std::size_t>(j)];
    }
    for (int j = 0; j < k; ++j) {
        if (out.counts[static_cast<std::size_t>(j)] > 0) out.centroids.row(j) /= out.counts[static_cast<std::size_t>(j)];
    }
    return out;
}

double inertia(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
               std::span<const int> assignments) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const int j = assignments[static_cast<std::size_t>(i)];
        double d = 0.0;
        for (Eigen::Index c = 0; c < points.cols(); ++c) {
            double diff = points(i, c) - centroids(j, c);
            d += diff * diff;
        }
        total += d;
    }
    return total;
}

}  // namespace taxaudit::kernels::serial
