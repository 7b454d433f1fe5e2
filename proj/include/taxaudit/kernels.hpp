#pragma once

// Data-parallel inner loops used by reduce and cluster.
//
// `serial` is the reference implementation. `omp` parallelizes the outer loop only; every
// output element is accumulated in the same order as the serial version, so the two
// produce bit-identical results regardless of thread count.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace taxaudit::kernels {

struct CentroidUpdate {
    Eigen::MatrixXd centroids;   // k x p; rows of empty clusters are left at zero
    std::vector<int> counts;     // k
};

namespace serial {

Eigen::VectorXd column_means(const Eigen::MatrixXd& m);

/// Nearest centroid by squared Euclidean distance, ties to the lowest index.
void assign_nearest(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                    std::span<int> assignments, std::span<double> distances);

CentroidUpdate update_centroids(const Eigen::MatrixXd& points, std::span<const int> assignments, int k);

double inertia(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
               std::span<const int> assignments);

}  // namespace serial

namespace omp {

Eigen::VectorXd column_means(const Eigen::MatrixXd& m);
void assign_nearest(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                    std::span<int> assignments, std::span<double> distances);
CentroidUpdate update_centroids(const Eigen::MatrixXd& points, std::span<const int> assignments, int k);
double inertia(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
               std::span<const int> assignments);

}  // namespace omp

/// Number of OpenMP threads available (1 when built without OpenMP).
int max_threads();

}  // namespace taxaudit::kernels
