#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "taxaudit/rng.hpp"

namespace taxaudit {

enum class KMeansInit { KMeansPlusPlus, RandomPoints };

KMeansInit parse_kmeans_init(std::string_view name);
std::string_view to_string(KMeansInit init);

struct KMeansConfig {
    int k = 5;
    int restarts = 50;
    int max_iterations = 300;
    double tolerance = 1e-8;  // max centroid displacement
    std::uint64_t seed = 42;
    KMeansInit init = KMeansInit::KMeansPlusPlus;
};

struct KMeansResult {
    std::vector<int> assignments;    // per observation, in [0, k)
    Eigen::MatrixXd centroids;       // k x p
    double inertia = 0.0;
    int iterations = 0;
    int best_restart = 0;
    bool converged = false;
    std::vector<double> inertia_history;   // per Lloyd iteration of the returned run
    std::vector<double> restart_inertias;  // final inertia of every restart

    int k() const noexcept { return static_cast<int>(centroids.rows()); }
};

/// Nearest centroid for each point; equidistant points go to the lowest centroid index.
std::vector<int> assign_nearest(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids);

/// k-means++ seeding: first centroid uniform, then proportional to squared distance to the
/// nearest chosen centroid. Falls back to a uniform draw once every point coincides with
/// a chosen centroid, so duplicates are possible when k exceeds the distinct point count.
Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& points, int k, Rng& rng);

/// k distinct points chosen uniformly.
Eigen::MatrixXd random_points_init(const Eigen::MatrixXd& points, int k, Rng& rng);

/// Lloyd iterations from the given centroids.
///
/// Empty clusters are repaired by moving the point farthest from its centroid (taken from
/// a cluster with more than one member) into the empty cluster as a singleton.
/// Stops when the largest centroid displacement is <= tolerance, when assignments stop
/// changing, or at max_iterations.
KMeansResult lloyd(const Eigen::MatrixXd& points, const Eigen::MatrixXd& initial_centroids,
                   const KMeansConfig& config);

/// Multi-restart k-means. Restart r is seeded with stream_seed(config.seed, r) and runs on
/// the rows in lexicographic order, so the result does not depend on input row order.
/// Returns the restart with the smallest (inertia, restart index).
KMeansResult kmeans_fit(const Eigen::MatrixXd& points, const KMeansConfig& config);

/// Sum of squared distances of each point to its assigned centroid.
double compute_inertia(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                       const std::vector<int>& assignments);

}  // namespace taxaudit
