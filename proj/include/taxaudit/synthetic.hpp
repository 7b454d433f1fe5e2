#pragma once

// Synthetic embeddings with a known cluster structure, used for shipped fixtures and
// recovery tests.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "taxaudit/corpus.hpp"
#include "taxaudit/embedding.hpp"
#include "taxaudit/rng.hpp"

namespace taxaudit::synthetic {

/// d x m matrix with orthonormal columns drawn from a Gaussian matrix.
Eigen::MatrixXd random_orthonormal(std::size_t d, std::size_t m, Rng& rng);

/// Vertices of a regular simplex: (dims + 1) x dims, centered at the origin, unit edge length.
Eigen::MatrixXd simplex_vertices(std::size_t dims);

/// Map latent rows (n x m) into d dimensions: latent * basis^T + offset + N(0, noise_sd^2).
Eigen::MatrixXd lift(const Eigen::MatrixXd& latent, const Eigen::MatrixXd& basis, const Eigen::RowVectorXd& offset,
                     double noise_sd, Rng& rng);

/// Residual of `column` after least-squares projection onto the span of `against`'s columns.
Eigen::VectorXd orthogonalize(const Eigen::VectorXd& column, const Eigen::MatrixXd& against);

struct PlantedSpec {
    std::size_t dim = 3000;
    std::size_t cluster_dims = 4;     // clusters live at simplex vertices in this many dims
    double edge = 8.0;                // distance between cluster centers
    double within_sd = 0.6;           // per latent dim
    double nuisance_sd = 3.0;         // one extra dim with no between-category variation
    double noise_sd = 0.002;          // isotropic noise in the ambient space
    std::uint64_t seed = 2024;
};

/// Embeddings whose k-means structure places element i in cluster targets[i].
///
/// The latent space has cluster_dims dims of cluster structure plus one nuisance dim that
/// is exactly uncorrelated with the categories and with the cluster dims, so a PCA screen
/// by eta-squared removes it.
Eigen::MatrixXd planted_embeddings(const std::vector<int>& labels, const std::vector<int>& targets,
                                   int n_clusters, const PlantedSpec& spec);

VectorStore to_store(const Corpus& corpus, const Eigen::MatrixXd& rows);

/// Per-element target cluster: the element's own category unless listed in `overrides`.
std::vector<int> targets_with_overrides(const Corpus& corpus, const std::map<std::string, std::string>& overrides);

/// Gaussian clusters in latent space, one cluster per label, lifted to d dims.
struct GaussianSpec {
    std::size_t n = 50;
    std::size_t clusters = 5;
    std::size_t latent_dims = 4;
    double separation = 6.0;          // minimum center distance in units of within-cluster sd
    std::size_t dim = 300;
    double noise_sd = 0.01;
    std::uint64_t seed = 1;
};

struct GaussianCorpus {
    Corpus corpus;
    EmbeddingMatrix embeddings;
    double min_center_distance = 0.0;  // in within-cluster sd units
};

GaussianCorpus gaussian_corpus(const GaussianSpec& spec);

}  // namespace taxaudit::synthetic
