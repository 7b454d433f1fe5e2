#include "taxaudit/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "taxaudit/error.hpp"
#include "taxaudit/kernels.hpp"

namespace taxaudit {

namespace {

void validate(const Eigen::MatrixXd& points, const KMeansConfig& config) {
    if (config.k < 1) throw Error("cluster", "bad-k", fmt::format("k = {}", config.k));
    if (points.rows() < config.k) {
        throw Error("cluster", "n < k", fmt::format("n = {}, k = {}", points.rows(), config.k));
    }
    if (config.restarts < 1) throw Error("cluster", "bad-restarts", fmt::format("{}", config.restarts));
    if (config.max_iterations < 1) throw Error("cluster", "bad-max-iter", fmt::format("{}", config.max_iterations));
    if (!(config.tolerance >= 0.0)) throw Error("cluster", "bad-tolerance", fmt::format("{}", config.tolerance));
    if (!points.allFinite()) throw Error("cluster", "non-finite-input");
}

double squared_distance(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b, Eigen::Index j) {
    double d = 0.0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
        double diff = a(i, c) - b(j, c);
        d += diff * diff;
    }
    return d;
}

// Returns true if any cluster had to be repaired.
bool repair_empty_clusters(const Eigen::MatrixXd& points, Eigen::MatrixXd& centroids,
                           std::vector<int>& assignments, std::vector<double>& distances) {
    const int k = static_cast<int>(centroids.rows());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int a : assignments) ++counts[static_cast<std::size_t>(a)];

    bool repaired = false;
    for (int j = 0; j < k; ++j) {
        if (counts[static_cast<std::size_t>(j)] > 0) continue;
        std::size_t far = assignments.size();
        for (std::size_t i = 0; i < assignments.size(); ++i) {
            if (counts[static_cast<std::size_t>(assignments[i])] < 2) continue;
            if (far == assignments.size() || distances[i] > distances[far]) far = i;
        }
        if (far == assignments.size()) break;  // unreachable while n >= k
        --counts[static_cast<std::size_t>(assignments[far])];
        assignments[far] = j;
        ++counts[static_cast<std::size_t>(j)];
        distances[far] = 0.0;
        centroids.row(j) = points.row(static_cast<Eigen::Index>(far));
        repaired = true;
    }
    return repaired;
}

std::vector<Eigen::Index> lexicographic_order(const Eigen::MatrixXd& points) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index c = 0; c < points.cols(); ++c) {
            if (points(a, c) != points(b, c)) return points(a, c) < points(b, c);
        }
        return false;
    });
    return order;
}

}  // namespace

KMeansInit parse_kmeans_init(std::string_view name) {
    if (name == "kmeanspp" || name == "kmeans++") return KMeansInit::KMeansPlusPlus;
    if (name == "random-points") return KMeansInit::RandomPoints;
    throw Error("cluster", "unknown-init", std::string(name));
}

std::string_view to_string(KMeansInit init) {
    return init == KMeansInit::KMeansPlusPlus ? "kmeanspp" : "random-points";
}

std::vector<int> assign_nearest(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids) {
    if (points.cols() != centroids.cols()) {
        throw Error("cluster", "dimension-mismatch",
                    fmt::format("points have {} columns, centroids {}", points.cols(), centroids.cols()));
    }
    if (centroids.rows() == 0) throw Error("cluster", "no-centroids");
    std::vector<int> assignments(static_cast<std::size_t>(points.rows()));
    std::vector<double> distances(assignments.size());
    kernels::omp::assign_nearest(points, centroids, assignments, distances);
    return assignments;
}

double compute_inertia(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                       const std::vector<int>& assignments) {
    return kernels::omp::inertia(points, centroids, assignments);
}

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& points, int k, Rng& rng) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (k < 1 || n == 0) throw Error("cluster", "bad-k", fmt::format("k = {}, n = {}", k, n));
    Eigen::MatrixXd centroids(k, points.cols());

    std::size_t first = rng.index(n);
    centroids.row(0) = points.row(static_cast<Eigen::Index>(first));
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points, static_cast<Eigen::Index>(i), centroids, 0);

    for (int c = 1; c < k; ++c) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cumulative = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) continue;
                cumulative += d2[i];
                pick = i;
                if (cumulative > target) break;
            }
        } else {
            pick = rng.index(n);
        }
        centroids.row(c) = points.row(static_cast<Eigen::Index>(pick));
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points, static_cast<Eigen::Index>(i), centroids, c));
        }
    }
    return centroids;
}

Eigen::MatrixXd random_points_init(const Eigen::MatrixXd& points, int k, Rng& rng) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (k < 1 || static_cast<std::size_t>(k) > n) throw Error("cluster", "n < k", fmt::format("n = {}, k = {}", n, k));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Eigen::MatrixXd centroids(k, points.cols());
    for (int c = 0; c < k; ++c) {
        auto pos = static_cast<std::size_t>(c);
        std::swap(idx[pos], idx[pos + rng.index(n - pos)]);
        centroids.row(c) = points.row(static_cast<Eigen::Index>(idx[pos]));
    }
    return centroids;
}

KMeansResult lloyd(const Eigen::MatrixXd& points, const Eigen::MatrixXd& initial_centroids,
                   const KMeansConfig& config) {
    const int k = static_cast<int>(initial_centroids.rows());
    if (points.rows() < k) throw Error("cluster", "n < k", fmt::format("n = {}, k = {}", points.rows(), k));
    if (initial_centroids.cols() != points.cols()) throw Error("cluster", "dimension-mismatch");

    const auto n = static_cast<std::size_t>(points.rows());
    KMeansResult result;
    Eigen::MatrixXd centroids = initial_centroids;
    std::vector<int> assignments(n), previous(n, -1);
    std::vector<double> distances(n);

    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        kernels::omp::assign_nearest(points, centroids, assignments, distances);
        const bool repaired = repair_empty_clusters(points, centroids, assignments, distances);
        result.iterations = iter;
        if (!repaired && assignments == previous) {
            result.converged = true;
            break;
        }

        auto update = kernels::omp::update_centroids(points, assignments, k);
        double displacement = 0.0;
        for (int j = 0; j < k; ++j) {
            displacement = std::max(displacement, (update.centroids.row(j) - centroids.row(j)).norm());
        }
        centroids = std::move(update.centroids);
        result.inertia_history.push_back(kernels::omp::inertia(points, centroids, assignments));
        previous = assignments;
        if (displacement <= config.tolerance) {
            result.converged = true;
            break;
        }
    }

    // Final pass so every point sits with its nearest returned centroid.
    std::vector<int> final_assign(n);
    kernels::omp::assign_nearest(points, centroids, final_assign, distances);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int a : final_assign) ++counts[static_cast<std::size_t>(a)];
    if (std::find(counts.begin(), counts.end(), 0) == counts.end()) assignments = std::move(final_assign);

    result.assignments = std::move(assignments);
    result.centroids = std::move(centroids);
    result.inertia = kernels::omp::inertia(points, result.centroids, result.assignments);
    if (result.inertia_history.empty() || result.inertia_history.back() != result.inertia) {
        result.inertia_history.push_back(result.inertia);
    }
    return result;
}

KMeansResult kmeans_fit(const Eigen::MatrixXd& points, const KMeansConfig& config) {
    validate(points, config);

    const auto order = lexicographic_order(points);
    Eigen::MatrixXd sorted(points.rows(), points.cols());
    for (std::size_t r = 0; r < order.size(); ++r) sorted.row(static_cast<Eigen::Index>(r)) = points.row(order[r]);

    std::vector<KMeansResult> runs(static_cast<std::size_t>(config.restarts));
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < config.restarts; ++r) {
        Rng rng(stream_seed(config.seed, static_cast<std::uint64_t>(r)));
        Eigen::MatrixXd init = config.init == KMeansInit::KMeansPlusPlus ? kmeanspp_init(sorted, config.k, rng)
                                                                         : random_points_init(sorted, config.k, rng);
        runs[static_cast<std::size_t>(r)] = lloyd(sorted, init, config);
    }

    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r) {
        if (runs[r].inertia < runs[best].inertia) best = r;
    }

    KMeansResult result = std::move(runs[best]);
    result.best_restart = static_cast<int>(best);
    result.restart_inertias.reserve(runs.size());
    for (std::size_t r = 0; r < runs.size(); ++r) {
        result.restart_inertias.push_back(r == best ? result.inertia : runs[r].inertia);
    }

    std::vector<int> original(result.assignments.size());
    for (std::size_t r = 0; r < order.size(); ++r) original[static_cast<std::size_t>(order[r])] = result.assignments[r];
    result.assignments = std::move(original);
    return result;
}

}  // namespace taxaudit
