#include "taxaudit/synthetic.hpp"

#include <cmath>

#include <fmt/format.h>

#include "taxaudit/error.hpp"

namespace taxaudit::synthetic {

Eigen::MatrixXd random_orthonormal(std::size_t d, std::size_t m, Rng& rng) {
    Eigen::MatrixXd g(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
    for (Eigen::Index c = 0; c < g.cols(); ++c)
        for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
    return q;
}

Eigen::MatrixXd simplex_vertices(std::size_t dims) {
    const auto m = static_cast<Eigen::Index>(dims);
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(m + 1, m);
    // Helmert basis of the sum-zero subspace of R^(m+1); vertex i is e_i expressed in it
    for (Eigen::Index k = 1; k <= m; ++k) {
        const double norm = std::sqrt(static_cast<double>(k * (k + 1)));
        for (Eigen::Index i = 0; i < k; ++i) v(i, k - 1) = 1.0 / norm;
        v(k, k - 1) = -static_cast<double>(k) / norm;
    }
    return v / std::sqrt(2.0);
}

Eigen::MatrixXd lift(const Eigen::MatrixXd& latent, const Eigen::MatrixXd& basis, const Eigen::RowVectorXd& offset,
                     double noise_sd, Rng& rng) {
    Eigen::MatrixXd x = latent * basis.transpose();
    x.rowwise() += offset;
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) += noise_sd * rng.normal();
    return x;
}

Eigen::VectorXd orthogonalize(const Eigen::VectorXd& column, const Eigen::MatrixXd& against) {
    Eigen::VectorXd coef = against.colPivHouseholderQr().solve(column);
    return column - against * coef;
}

Eigen::MatrixXd planted_embeddings(const std::vector<int>& labels, const std::vector<int>& targets, int n_clusters,
                                   const PlantedSpec& spec) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    const auto m = static_cast<Eigen::Index>(spec.cluster_dims);
    if (targets.size() != labels.size()) throw Error("synthetic", "length-mismatch");
    if (n_clusters > m + 1) {
        throw Error("synthetic", "too-many-clusters", fmt::format("{} clusters need {} dims", n_clusters, n_clusters - 1));
    }
    Rng rng(spec.seed);
    const Eigen::MatrixXd centers = simplex_vertices(spec.cluster_dims) * spec.edge;

    Eigen::MatrixXd latent(n, m + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto t = targets[static_cast<std::size_t>(i)];
        for (Eigen::Index c = 0; c < m; ++c) latent(i, c) = centers(t, c) + spec.within_sd * rng.normal();
    }

    int n_labels = 0;
    for (int l : labels) n_labels = std::max(n_labels, l + 1);
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n, n_labels + m);
    for (Eigen::Index i = 0; i < n; ++i) design(i, labels[static_cast<std::size_t>(i)]) = 1.0;
    design.rightCols(m) = latent.leftCols(m);

    Eigen::VectorXd nuisance(n);
    for (Eigen::Index i = 0; i < n; ++i) nuisance(i) = rng.normal();
    nuisance = orthogonalize(nuisance, design);
    const double sd = std::sqrt(nuisance.squaredNorm() / static_cast<double>(n - 1));
    latent.col(m) = nuisance * (spec.nuisance_sd / sd);

    const Eigen::MatrixXd basis = random_orthonormal(spec.dim, static_cast<std::size_t>(m + 1), rng);
    Eigen::RowVectorXd offset(static_cast<Eigen::Index>(spec.dim));
    for (Eigen::Index c = 0; c < offset.size(); ++c) offset(c) = 0.05 * rng.normal();
    return lift(latent, basis, offset, spec.noise_sd, rng);
}

VectorStore to_store(const Corpus& corpus, const Eigen::MatrixXd& rows) {
    if (static_cast<std::size_t>(rows.rows()) != corpus.size()) throw Error("synthetic", "length-mismatch");
    VectorStore store;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        Eigen::RowVectorXd row = rows.row(static_cast<Eigen::Index>(i));
        store[corpus.elements[i].id] = std::vector<double>(row.data(), row.data() + row.size());
    }
    return store;
}

std::vector<int> targets_with_overrides(const Corpus& corpus, const std::map<std::string, std::string>& overrides) {
    std::vector<int> targets = corpus.label_indices();
    for (const auto& [id, category] : overrides) {
        auto idx = corpus.category_index(category);
        if (!idx) throw Error("synthetic", "unknown-category", category);
        bool found = false;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            if (corpus.elements[i].id == id) {
                targets[i] = static_cast<int>(*idx);
                found = true;
            }
        }
        if (!found) throw Error("synthetic", "unknown-id", id);
    }
    return targets;
}

GaussianCorpus gaussian_corpus(const GaussianSpec& spec) {
    if (spec.clusters > spec.latent_dims + 1) throw Error("synthetic", "too-many-clusters");
    Rng rng(stream_seed(spec.seed, 0x5eed));

    // regular simplex with edge = separation, randomly rotated inside the latent space
    const Eigen::MatrixXd rotation = random_orthonormal(spec.latent_dims, spec.latent_dims, rng);
    const Eigen::MatrixXd centers =
        (simplex_vertices(spec.latent_dims) * spec.separation).topRows(static_cast<Eigen::Index>(spec.clusters)) *
        rotation.transpose();

    GaussianCorpus out;
    std::vector<Element> elements;
    Eigen::MatrixXd latent(static_cast<Eigen::Index>(spec.n), static_cast<Eigen::Index>(spec.latent_dims));
    for (std::size_t i = 0; i < spec.n; ++i) {
        const auto label = static_cast<Eigen::Index>(i % spec.clusters);
        for (Eigen::Index c = 0; c < latent.cols(); ++c) {
            latent(static_cast<Eigen::Index>(i), c) = centers(label, c) + rng.normal();
        }
        elements.push_back({fmt::format("g{}-{:03}", spec.seed, i), fmt::format("group-{}", label + 1),
                            fmt::format("synthetic element {} of group {}", i, label + 1)});
    }
    out.corpus = make_corpus(std::move(elements));

    double min_dist = INFINITY;
    for (Eigen::Index a = 0; a < centers.rows(); ++a)
        for (Eigen::Index b = a + 1; b < centers.rows(); ++b) min_dist = std::min(min_dist, (centers.row(a) - centers.row(b)).norm());
    out.min_center_distance = min_dist;

    const Eigen::MatrixXd basis = random_orthonormal(spec.dim, spec.latent_dims, rng);
    out.embeddings.rows = lift(latent, basis, Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(spec.dim)), spec.noise_sd, rng);
    out.embeddings.provider_tag = "synthetic";
    return out;
}

}  // namespace taxaudit::synthetic
